//! Uniform rectangular grids over `(u,v)` or characteristic `(s,t)`
//! coordinates, scalar fields on them, second-order finite differences,
//! and coordinate conversion between the two charts.
//!
//! Conventions: axis 1 is `u` (or `s`), axis 2 is `v` (or `t`); values are
//! stored row-major with shape `(n1, n2)`. Derivatives along non-native
//! coordinates use the exact chain rule `d/du = (d/ds + d/dt)/sqrt(2)` and
//! its inverse, so a field may be differentiated in either chart no matter
//! which grid it lives on.

use crate::expr::{Expr, ExprError};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error(
        "grid too small for the stencil: need at least {need} points on axis {axis}, got {got}"
    )]
    GridTooSmall { axis: u8, need: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("evaluation failed at grid point ({i},{j}) = ({x},{y}): {source}")]
    Eval {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        source: ExprError,
    },
    #[error("expression variable `{0}` is not a coordinate (expected u, v, s or t)")]
    NotACoordinate(String),
    #[error("point ({x},{y}) lies outside the source grid domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("non-finite value at grid point ({i},{j})")]
    NonFinite { i: usize, j: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    Uv,
    St,
}

/// One of the four chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    U,
    V,
    S,
    T,
}

impl Coord {
    fn from_name(name: &str) -> Option<Coord> {
        Some(match name {
            "u" => Coord::U,
            "v" => Coord::V,
            "s" => Coord::S,
            "t" => Coord::T,
            _ => return None,
        })
    }
}

/// `(u,v) -> (s,t)` with `s = (u+v)/sqrt(2)`, `t = (u-v)/sqrt(2)`.
pub fn uv_to_st(p: (f64, f64)) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (p.0 + p.1), FRAC_1_SQRT_2 * (p.0 - p.1))
}

/// Inverse of [`uv_to_st`]: `u = (s+t)/sqrt(2)`, `v = (s-t)/sqrt(2)`.
pub fn st_to_uv(p: (f64, f64)) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (p.0 + p.1), FRAC_1_SQRT_2 * (p.0 - p.1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub coord: CoordKind,
    pub min1: f64,
    pub max1: f64,
    pub min2: f64,
    pub max2: f64,
    pub n1: usize,
    pub n2: usize,
}

impl Grid {
    pub fn new(
        coord: CoordKind,
        min1: f64,
        max1: f64,
        min2: f64,
        max2: f64,
        n1: usize,
        n2: usize,
    ) -> Result<Grid, FieldError> {
        let ordered = max1 > min1 && max2 > min2; // NaN bounds fail here too
        if !ordered {
            return Err(FieldError::InvalidGrid(format!(
                "max must exceed min: [{min1},{max1}] x [{min2},{max2}]"
            )));
        }
        if n1 < 2 || n2 < 2 {
            return Err(FieldError::InvalidGrid(format!(
                "need at least 2 points per axis, got {n1} x {n2}"
            )));
        }
        Ok(Grid {
            coord,
            min1,
            max1,
            min2,
            max2,
            n1,
            n2,
        })
    }

    pub fn uv(min1: f64, max1: f64, min2: f64, max2: f64, n1: usize, n2: usize) -> Grid {
        Grid::new(CoordKind::Uv, min1, max1, min2, max2, n1, n2).expect("valid uv grid")
    }

    pub fn st(min1: f64, max1: f64, min2: f64, max2: f64, n1: usize, n2: usize) -> Grid {
        Grid::new(CoordKind::St, min1, max1, min2, max2, n1, n2).expect("valid st grid")
    }

    pub fn h1(&self) -> f64 {
        (self.max1 - self.min1) / (self.n1 - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        (self.max2 - self.min2) / (self.n2 - 1) as f64
    }

    /// Largest grid spacing, the natural scale for `O(h^2)` tolerances.
    pub fn h_max(&self) -> f64 {
        self.h1().max(self.h2())
    }

    /// Native coordinates of node `(i,j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.min1 + self.h1() * i as f64,
            self.min2 + self.h2() * j as f64,
        )
    }

    /// `(u,v)` coordinates of node `(i,j)` regardless of chart.
    pub fn point_uv(&self, i: usize, j: usize) -> (f64, f64) {
        let p = self.point(i, j);
        match self.coord {
            CoordKind::Uv => p,
            CoordKind::St => st_to_uv(p),
        }
    }

    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self.coord {
            CoordKind::Uv => ("u", "v"),
            CoordKind::St => ("s", "t"),
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let tol1 = 1e-9 * (self.max1 - self.min1);
        let tol2 = 1e-9 * (self.max2 - self.min2);
        x >= self.min1 - tol1
            && x <= self.max1 + tol1
            && y >= self.min2 - tol2
            && y <= self.max2 + tol2
    }
}

/// The largest axis-aligned `(u,v)` rectangle inscribed in the image of an
/// `(s,t)` rectangle (a 45-degree rotated rectangle in the `uv` plane),
/// shrunk by `margin` to keep interpolation stencils interior.
pub fn inscribed_uv_grid(st: &Grid, n1: usize, n2: usize, margin: f64) -> Grid {
    assert_eq!(st.coord, CoordKind::St);
    let hs = 0.5 * (st.max1 - st.min1);
    let ht = 0.5 * (st.max2 - st.min2);
    let (uc, vc) = st_to_uv((0.5 * (st.min1 + st.max1), 0.5 * (st.min2 + st.max2)));
    // corners (uc +/- a, vc +/- b) stay inside iff (a+b)/sqrt(2) <= min(hs, ht)
    let half = FRAC_1_SQRT_2 * hs.min(ht) * (1.0 - margin);
    Grid::uv(uc - half, uc + half, vc - half, vc + half, n1, n2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Array2<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Array2<f64>) -> ScalarField {
        assert_eq!(
            values.dim(),
            (grid.n1, grid.n2),
            "value shape must match grid"
        );
        ScalarField { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> ScalarField {
        ScalarField::new(grid, Array2::from_elem((grid.n1, grid.n2), value))
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> ScalarField {
        let values = Array2::from_shape_fn((grid.n1, grid.n2), |(i, j)| {
            let (x, y) = grid.point(i, j);
            f(x, y)
        });
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::new(self.grid, self.values.mapv(&f))
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid, "fields must share a grid");
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        ScalarField::new(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|x| c * x)
    }

    /// Pointwise evaluation of `e` over the grid. The expression's declared
    /// variables must come from `{u, v, s, t}`; both charts are available at
    /// every node through exact conversion.
    pub fn sample(e: &Expr, grid: Grid) -> Result<ScalarField, FieldError> {
        let coords: Vec<Coord> = e
            .variables()
            .iter()
            .map(|name| {
                Coord::from_name(name).ok_or_else(|| FieldError::NotACoordinate(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut values = Array2::zeros((grid.n1, grid.n2));
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let native = grid.point(i, j);
                let (uv, st) = match grid.coord {
                    CoordKind::Uv => (native, uv_to_st(native)),
                    CoordKind::St => (st_to_uv(native), native),
                };
                let bindings: Vec<f64> = coords
                    .iter()
                    .map(|c| match c {
                        Coord::U => uv.0,
                        Coord::V => uv.1,
                        Coord::S => st.0,
                        Coord::T => st.1,
                    })
                    .collect();
                values[[i, j]] = e.eval(&bindings).map_err(|source| FieldError::Eval {
                    i,
                    j,
                    x: native.0,
                    y: native.1,
                    source,
                })?;
            }
        }
        Ok(ScalarField::new(grid, values))
    }

    /// Raw finite difference along a grid axis (1 or 2), order 1 or 2.
    /// Central second-order stencils in the interior, one-sided
    /// second-order stencils on the boundary.
    pub fn diff_axis(&self, axis: u8, order: u8) -> Result<ScalarField, FieldError> {
        assert!(axis == 1 || axis == 2);
        assert!(order == 1 || order == 2);
        let n = if axis == 1 {
            self.grid.n1
        } else {
            self.grid.n2
        };
        let need = if order == 1 { 3 } else { 4 };
        if n < need {
            return Err(FieldError::GridTooSmall { axis, need, got: n });
        }
        let h = if axis == 1 {
            self.grid.h1()
        } else {
            self.grid.h2()
        };
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let mut out = Array2::zeros((n1, n2));
        let get = |i: usize, j: usize, k: isize| -> f64 {
            if axis == 1 {
                self.values[[(i as isize + k) as usize, j]]
            } else {
                self.values[[i, (j as isize + k) as usize]]
            }
        };
        // Stencils are written as combinations of differences from the
        // centre point, so constant fields differentiate to exactly zero.
        // The one-sided first-derivative stencils are 5-point versions
        // whose truncation expansion matches the interior central stencil
        // through the h^3 term ((h^2/6) f''' + 0 * h^3): the truncation
        // field of a derivative is then smooth across the boundary, so
        // composed derivatives and downstream consumers (the frame
        // coefficients in particular) keep second-order accuracy. Grids
        // narrower than 5 nodes fall back to shorter stencils.
        for i in 0..n1 {
            for j in 0..n2 {
                let idx = if axis == 1 { i } else { j };
                let f0 = get(i, j, 0);
                let one_sided = |sign: isize| -> f64 {
                    let d = |k: isize| get(i, j, sign * k) - f0;
                    if n >= 5 {
                        (5.5 * d(1) - 5.0 * d(2) + 2.5 * d(3) - 0.5 * d(4)) / h * sign as f64
                    } else if n == 4 {
                        (3.5 * d(1) - 2.0 * d(2) + 0.5 * d(3)) / h * sign as f64
                    } else {
                        (4.0 * d(1) - d(2)) / (2.0 * h) * sign as f64
                    }
                };
                let d = if order == 1 {
                    if idx == 0 {
                        one_sided(1)
                    } else if idx == n - 1 {
                        one_sided(-1)
                    } else {
                        (get(i, j, 1) - get(i, j, -1)) / (2.0 * h)
                    }
                } else if idx == 0 {
                    (-5.0 * (get(i, j, 1) - f0) + 4.0 * (get(i, j, 2) - f0) - (get(i, j, 3) - f0))
                        / (h * h)
                } else if idx == n - 1 {
                    (-5.0 * (get(i, j, -1) - f0) + 4.0 * (get(i, j, -2) - f0)
                        - (get(i, j, -3) - f0))
                        / (h * h)
                } else {
                    ((get(i, j, 1) - f0) + (get(i, j, -1) - f0)) / (h * h)
                };
                out[[i, j]] = d;
            }
        }
        Ok(ScalarField::new(self.grid, out))
    }

    /// First derivative along any chart coordinate; non-native coordinates
    /// use the exact chain rule between `(u,v)` and `(s,t)`.
    pub fn deriv(&self, c: Coord) -> ScalarField {
        let native = matches!(
            (self.grid.coord, c),
            (CoordKind::Uv, Coord::U)
                | (CoordKind::Uv, Coord::V)
                | (CoordKind::St, Coord::S)
                | (CoordKind::St, Coord::T)
        );
        if native {
            let axis = match c {
                Coord::U | Coord::S => 1,
                Coord::V | Coord::T => 2,
            };
            self.diff_axis(axis, 1).expect("grid too small for stencil")
        } else {
            let d1 = self.diff_axis(1, 1).expect("grid too small for stencil");
            let d2 = self.diff_axis(2, 1).expect("grid too small for stencil");
            // u = (s+t)/sqrt2, v = (s-t)/sqrt2 and symmetrically the other way
            let sign = match c {
                Coord::U | Coord::S => 1.0,
                Coord::V | Coord::T => -1.0,
            };
            d1.zip_with(&d2, |a, b| FRAC_1_SQRT_2 * (a + sign * b))
        }
    }

    /// Second derivative along a coordinate. Native axes use the direct
    /// stencil; others are composed from first derivatives.
    pub fn deriv2(&self, c: Coord) -> ScalarField {
        let native = matches!(
            (self.grid.coord, c),
            (CoordKind::Uv, Coord::U)
                | (CoordKind::Uv, Coord::V)
                | (CoordKind::St, Coord::S)
                | (CoordKind::St, Coord::T)
        );
        if native {
            let axis = match c {
                Coord::U | Coord::S => 1,
                Coord::V | Coord::T => 2,
            };
            self.diff_axis(axis, 2).expect("grid too small for stencil")
        } else {
            self.deriv(c).deriv(c)
        }
    }

    /// The mixed characteristic derivative `f_st`, computed through the
    /// exact identity `2 f_st = f_uu - f_vv` on `uv` grids (and directly
    /// as `diff_s . diff_t` on `st` grids).
    pub fn deriv_st(&self) -> ScalarField {
        match self.grid.coord {
            CoordKind::St => self.deriv(Coord::S).deriv(Coord::T),
            CoordKind::Uv => {
                let uu = self.deriv2(Coord::U);
                let vv = self.deriv2(Coord::V);
                uu.zip_with(&vv, |a, b| 0.5 * (a - b))
            }
        }
    }

    /// Bilinear interpolation at native coordinates `(x, y)`.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let fx = ((x - g.min1) / g.h1()).clamp(0.0, (g.n1 - 1) as f64);
        let fy = ((y - g.min2) / g.h2()).clamp(0.0, (g.n2 - 1) as f64);
        let i = (fx.floor() as usize).min(g.n1 - 2);
        let j = (fy.floor() as usize).min(g.n2 - 2);
        let a = fx - i as f64;
        let b = fy - j as f64;
        let v00 = self.values[[i, j]];
        let v10 = self.values[[i + 1, j]];
        let v01 = self.values[[i, j + 1]];
        let v11 = self.values[[i + 1, j + 1]];
        (1.0 - a) * (1.0 - b) * v00 + a * (1.0 - b) * v10 + (1.0 - a) * b * v01 + a * b * v11
    }

    /// Catmull-Rom bicubic interpolation at native coordinates, with
    /// stencils shifted inward near the boundary. Fourth-order accurate in
    /// the interior, which keeps finite differences of resampled fields at
    /// second order.
    pub fn bicubic(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let n1 = g.n1;
        let n2 = g.n2;
        debug_assert!(n1 >= 4 && n2 >= 4, "bicubic needs at least 4x4 nodes");
        let fx = ((x - g.min1) / g.h1()).clamp(0.0, (n1 - 1) as f64);
        let fy = ((y - g.min2) / g.h2()).clamp(0.0, (n2 - 1) as f64);
        // base index of a 4-point stencil centred as well as possible
        let bi = ((fx.floor() as isize) - 1).clamp(0, n1 as isize - 4) as usize;
        let bj = ((fy.floor() as isize) - 1).clamp(0, n2 as isize - 4) as usize;
        let tx = fx - bi as f64;
        let ty = fy - bj as f64;
        // cubic Lagrange through nodes at offsets 0,1,2,3
        fn weights(t: f64) -> [f64; 4] {
            [
                -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
                t * (t - 2.0) * (t - 3.0) / 2.0,
                -t * (t - 1.0) * (t - 3.0) / 2.0,
                t * (t - 1.0) * (t - 2.0) / 6.0,
            ]
        }
        let wx = weights(tx);
        let wy = weights(ty);
        let mut acc = 0.0;
        for (di, wxi) in wx.iter().enumerate() {
            for (dj, wyj) in wy.iter().enumerate() {
                acc += wxi * wyj * self.values[[bi + di, bj + dj]];
            }
        }
        acc
    }

    /// Resample onto a grid in the other chart (or the same one) by bicubic
    /// interpolation. Every target node must fall inside this field's
    /// domain after conversion.
    pub fn resample_to(&self, target: Grid) -> Result<ScalarField, FieldError> {
        let mut values = Array2::zeros((target.n1, target.n2));
        for i in 0..target.n1 {
            for j in 0..target.n2 {
                let p = target.point(i, j);
                let q = match (target.coord, self.grid.coord) {
                    (a, b) if a == b => p,
                    (CoordKind::Uv, CoordKind::St) => uv_to_st(p),
                    (CoordKind::St, CoordKind::Uv) => st_to_uv(p),
                    _ => unreachable!(),
                };
                if !self.grid.contains(q.0, q.1) {
                    return Err(FieldError::OutsideDomain { x: q.0, y: q.1 });
                }
                values[[i, j]] = self.bicubic(q.0, q.1);
            }
        }
        Ok(ScalarField::new(target, values))
    }

    /// CSV rows `x,y,value` (header named by chart), row-major, 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let (a, b) = self.grid.axis_names();
        let mut out = String::new();
        let _ = writeln!(out, "{a},{b},value");
        for i in 0..self.grid.n1 {
            for j in 0..self.grid.n2 {
                let (x, y) = self.grid.point(i, j);
                let _ = writeln!(out, "{x:.16e},{y:.16e},{:.16e}", self.values[[i, j]]);
            }
        }
        out
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl std::ops::Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl std::ops::Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_with(rhs, |a, b| a * b)
    }
}
