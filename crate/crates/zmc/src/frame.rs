//! Moving-frame integration: turns [`FundamentalData`] into an explicit
//! immersion by solving the linear system `M_u = M S`, `M_v = M T` for
//! the frame matrix `M = (T1 T2 N1 N2 F)` in flat ambient coordinates,
//! then measures holonomy, Gram drift, the ambient-quadric constraint,
//! and the mean-curvature defect of the integrated position.
//!
//! Integration marches the first grid row in `u` with classical RK4 and
//! then every column in `v`, interpolating the coefficient matrices at
//! half-steps. For `L0 = 0` the fifth frame column carries the position
//! itself and the quadric constraint is vacuous.

use crate::constructors::SignChoice;
use crate::field::{Coord, Grid, ScalarField};
use crate::invariants::{frame_coefficients, AmbientSpec, FrameCoefficients, FundamentalData};
use nalgebra::{DMatrix, Matrix5};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("initial frame violates the Gram constraints: max deviation {0}")]
    GramPrecondition(f64),
    #[error("initial frame must be {dim}x5, got {rows}x{cols}")]
    InitialShape {
        dim: usize,
        rows: usize,
        cols: usize,
    },
    #[error("frame integration produced non-finite values at ({i},{j})")]
    NonFinite { i: usize, j: usize },
    #[error("re-projection needs L0 <x,x> > 0, got {0}")]
    BadProjection(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where each frame column lives among the flat ambient coordinates, in
/// the order `(T1, T2, N1, N2, F)`; the `F` slot is `None` for `L0 = 0`,
/// where the fifth column is the position itself.
fn column_slots(ambient: AmbientSpec) -> ([usize; 4], Option<usize>) {
    use crate::invariants::Family::*;
    let l0 = ambient.l0;
    match ambient.family {
        Neutral => {
            if l0 == 0.0 {
                ([0, 2, 1, 3], None)
            } else if l0 > 0.0 {
                ([0, 3, 1, 4], Some(2))
            } else {
                ([0, 2, 1, 3], Some(4))
            }
        }
        Lorentzian => {
            if l0 == 0.0 {
                ([0, 3, 1, 2], None)
            } else if l0 > 0.0 {
                ([0, 4, 1, 2], Some(3))
            } else {
                ([0, 3, 1, 2], Some(4))
            }
        }
    }
}

/// Target Gram matrix of the frame columns at conformal factor `e2l`.
/// Row/column 4 applies only when `L0 != 0`.
fn gram_target(ambient: AmbientSpec, e2l: f64) -> Matrix5<f64> {
    let n2_sign = match ambient.family {
        crate::invariants::Family::Neutral => -1.0,
        crate::invariants::Family::Lorentzian => 1.0,
    };
    let mut g = Matrix5::zeros();
    g[(0, 0)] = e2l;
    g[(1, 1)] = -e2l;
    g[(2, 2)] = e2l;
    g[(3, 3)] = n2_sign * e2l;
    if ambient.l0 != 0.0 {
        g[(4, 4)] = 1.0 / ambient.l0;
    }
    g
}

fn gram_of(ambient: AmbientSpec, m: &DMatrix<f64>) -> Matrix5<f64> {
    let sig = ambient.signature();
    Matrix5::from_fn(|a, b| (0..m.nrows()).map(|k| sig[k] * m[(k, a)] * m[(k, b)]).sum())
}

fn gram_deviation(ambient: AmbientSpec, m: &DMatrix<f64>, e2l: f64) -> f64 {
    let actual = gram_of(ambient, m);
    let target = gram_target(ambient, e2l);
    let cols = if ambient.l0 != 0.0 { 5 } else { 4 };
    let mut dev = 0.0f64;
    for a in 0..cols {
        for b in 0..cols {
            dev = dev.max((actual[(a, b)] - target[(a, b)]).abs());
        }
    }
    dev
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IntegrateOptions {
    /// Rescale the position column back onto the quadric `<x,x> = 1/L0`
    /// after every step. Off by default; drift is measured, not hidden.
    pub reproject: bool,
}

#[derive(Clone, Debug)]
pub enum InitialFrame {
    /// Diagonal embedding scaled by `e^{lambda}` at the grid origin, with
    /// the position slot set so `<F,F> = 1/L0`.
    Canonical,
    Given(DMatrix<f64>),
}

/// The integrated frame: one `dim x 5` matrix per grid node.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub ambient: AmbientSpec,
    pub grid: Grid,
    pub dim: usize,
    frames: Vec<DMatrix<f64>>,
    initial: DMatrix<f64>,
}

impl FrameField {
    pub fn at(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.frames[i * self.grid.n2 + j]
    }

    pub fn initial(&self) -> &DMatrix<f64> {
        &self.initial
    }

    /// Ambient components of the position column as scalar fields.
    pub fn position_fields(&self) -> Vec<ScalarField> {
        (0..self.dim)
            .map(|k| {
                ScalarField::new(
                    self.grid,
                    ndarray::Array2::from_shape_fn((self.grid.n1, self.grid.n2), |(i, j)| {
                        self.at(i, j)[(k, 4)]
                    }),
                )
            })
            .collect()
    }
}

pub fn canonical_initial(ambient: AmbientSpec, lambda0: f64) -> DMatrix<f64> {
    let dim = ambient.dim();
    let (slots, f_slot) = column_slots(ambient);
    let mut m = DMatrix::zeros(dim, 5);
    let scale = lambda0.exp();
    for (col, slot) in slots.iter().enumerate() {
        m[(*slot, col)] = scale;
    }
    if let Some(fs) = f_slot {
        m[(fs, 4)] = 1.0 / ambient.l0.abs().sqrt();
    }
    m
}

struct Stepper<'a> {
    coeffs: &'a FrameCoefficients,
    dim: usize,
    reproject: bool,
    ambient: AmbientSpec,
}

impl Stepper<'_> {
    /// One RK4 step of `M' = M A` from `x` to `x + h` along one axis,
    /// with `A` drawn from the interpolated `S` (`along_u`) or `T`.
    fn step(&self, m: &DMatrix<f64>, x: f64, y: f64, h: f64, along_u: bool) -> DMatrix<f64> {
        let coeff = |x: f64, y: f64| -> DMatrix<f64> {
            let (s, t) = self.coeffs.interp(x, y);
            let m = if along_u { s } else { t };
            DMatrix::from_fn(5, 5, |r, c| m[(r, c)])
        };
        let (x0, y0) = (x, y);
        let (xm, ym) = if along_u {
            (x + 0.5 * h, y)
        } else {
            (x, y + 0.5 * h)
        };
        let (x1, y1) = if along_u { (x + h, y) } else { (x, y + h) };
        let a0 = coeff(x0, y0);
        let am = coeff(xm, ym);
        let a1 = coeff(x1, y1);
        let k1 = m * a0;
        let k2 = (m + &k1 * (0.5 * h)) * &am;
        let k3 = (m + &k2 * (0.5 * h)) * &am;
        let k4 = (m + &k3 * h) * a1;
        let mut out = m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if self.reproject && self.ambient.l0 != 0.0 {
            let sig = self.ambient.signature();
            let q: f64 = (0..self.dim)
                .map(|k| sig[k] * out[(k, 4)] * out[(k, 4)])
                .sum();
            let factor = 1.0 / (self.ambient.l0 * q);
            if factor > 0.0 {
                let root = factor.sqrt();
                for k in 0..self.dim {
                    out[(k, 4)] *= root;
                }
            }
        }
        out
    }
}

fn march(
    data: &FundamentalData,
    coeffs: &FrameCoefficients,
    m0: DMatrix<f64>,
    options: IntegrateOptions,
    rows_first: bool,
) -> Result<Vec<DMatrix<f64>>, FrameError> {
    let g = *data.grid();
    let dim = data.ambient.dim();
    let stepper = Stepper {
        coeffs,
        dim,
        reproject: options.reproject,
        ambient: data.ambient,
    };
    let (h1, h2) = (g.h1(), g.h2());
    let mut frames: Vec<DMatrix<f64>> = vec![DMatrix::zeros(dim, 5); g.n1 * g.n2];
    let idx = |i: usize, j: usize| i * g.n2 + j;
    if rows_first {
        frames[idx(0, 0)] = m0;
        for i in 0..g.n1 - 1 {
            let (u, v) = g.point(i, 0);
            frames[idx(i + 1, 0)] = stepper.step(&frames[idx(i, 0)], u, v, h1, true);
        }
        for i in 0..g.n1 {
            for j in 0..g.n2 - 1 {
                let (u, v) = g.point(i, j);
                frames[idx(i, j + 1)] = stepper.step(&frames[idx(i, j)], u, v, h2, false);
            }
        }
    } else {
        frames[idx(0, 0)] = m0;
        for j in 0..g.n2 - 1 {
            let (u, v) = g.point(0, j);
            frames[idx(0, j + 1)] = stepper.step(&frames[idx(0, j)], u, v, h2, false);
        }
        for j in 0..g.n2 {
            for i in 0..g.n1 - 1 {
                let (u, v) = g.point(i, j);
                frames[idx(i + 1, j)] = stepper.step(&frames[idx(i, j)], u, v, h1, true);
            }
        }
    }
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            if frames[idx(i, j)].iter().any(|x| !x.is_finite()) {
                return Err(FrameError::NonFinite { i, j });
            }
        }
    }
    Ok(frames)
}

fn resolve_initial(
    data: &FundamentalData,
    initial: &InitialFrame,
) -> Result<DMatrix<f64>, FrameError> {
    let dim = data.ambient.dim();
    let m0 = match initial {
        InitialFrame::Canonical => canonical_initial(data.ambient, data.lambda.at(0, 0)),
        InitialFrame::Given(m) => {
            if m.nrows() != dim || m.ncols() != 5 {
                return Err(FrameError::InitialShape {
                    dim,
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            m.clone()
        }
    };
    let e2l0 = (2.0 * data.lambda.at(0, 0)).exp();
    let dev = gram_deviation(data.ambient, &m0, e2l0);
    if dev > 1e-8 * e2l0.max(1.0) {
        return Err(FrameError::GramPrecondition(dev));
    }
    Ok(m0)
}

pub fn integrate_frame(
    data: &FundamentalData,
    initial: InitialFrame,
) -> Result<FrameField, FrameError> {
    integrate_frame_with(data, initial, IntegrateOptions::default())
}

pub fn integrate_frame_with(
    data: &FundamentalData,
    initial: InitialFrame,
    options: IntegrateOptions,
) -> Result<FrameField, FrameError> {
    let m0 = resolve_initial(data, &initial)?;
    let coeffs = frame_coefficients(data);
    let frames = march(data, &coeffs, m0.clone(), options, true)?;
    Ok(FrameField {
        ambient: data.ambient,
        grid: *data.grid(),
        dim: data.ambient.dim(),
        frames,
        initial: m0,
    })
}

#[derive(Clone, Debug)]
pub struct FrameResiduals {
    /// max over grid corners of the two integration orders' disagreement
    pub holonomy: f64,
    /// pointwise max Gram-constraint deviation (includes the quadric row
    /// when `L0 != 0`)
    pub gram: ScalarField,
    /// ambient norm of `F_uu - F_vv + 2 L0 e^{2 lambda} F`
    pub mean_h: ScalarField,
    /// `|<F,F> - 1/L0|`, `None` for flat ambients
    pub quadric: Option<ScalarField>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FrameResidualSummary {
    pub holonomy: f64,
    pub gram_max: f64,
    pub mean_h_max: f64,
    pub quadric_max: Option<f64>,
}

impl FrameResiduals {
    pub fn summary(&self) -> FrameResidualSummary {
        FrameResidualSummary {
            holonomy: self.holonomy,
            gram_max: self.gram.max_abs(),
            mean_h_max: self.mean_h.max_abs(),
            quadric_max: self.quadric.as_ref().map(|q| q.max_abs()),
        }
    }
}

pub fn frame_residuals(
    ff: &FrameField,
    data: &FundamentalData,
) -> Result<FrameResiduals, FrameError> {
    let g = ff.grid;
    let coeffs = frame_coefficients(data);
    let other = march(
        data,
        &coeffs,
        ff.initial.clone(),
        IntegrateOptions::default(),
        false,
    )?;
    let idx = |i: usize, j: usize| i * g.n2 + j;
    let mut holonomy = 0.0f64;
    for (ci, cj) in [(0, 0), (g.n1 - 1, 0), (0, g.n2 - 1), (g.n1 - 1, g.n2 - 1)] {
        let d = ff.at(ci, cj) - &other[idx(ci, cj)];
        holonomy = holonomy.max(d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }

    let mut gram = ndarray::Array2::zeros((g.n1, g.n2));
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let e2l = (2.0 * data.lambda.at(i, j)).exp();
            gram[[i, j]] = gram_deviation(ff.ambient, ff.at(i, j), e2l);
        }
    }

    let pos = ff.position_fields();
    let e2l = data.e2l();
    let l0 = ff.ambient.l0;
    let mut mean_h = ndarray::Array2::zeros((g.n1, g.n2));
    for f in &pos {
        let fuu = f.deriv2(Coord::U);
        let fvv = f.deriv2(Coord::V);
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                let r = fuu.at(i, j) - fvv.at(i, j) + 2.0 * l0 * e2l.at(i, j) * f.at(i, j);
                mean_h[[i, j]] += r * r;
            }
        }
    }
    let mean_h = ScalarField::new(g, mean_h.mapv(f64::sqrt));

    let quadric = (l0 != 0.0).then(|| {
        let sig = ff.ambient.signature();
        ScalarField::new(
            g,
            ndarray::Array2::from_shape_fn((g.n1, g.n2), |(i, j)| {
                let m = ff.at(i, j);
                let q: f64 = (0..ff.dim).map(|k| sig[k] * m[(k, 4)] * m[(k, 4)]).sum();
                (q - 1.0 / l0).abs()
            }),
        )
    });

    Ok(FrameResiduals {
        holonomy,
        gram: ScalarField::new(g, gram),
        mean_h,
        quadric,
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    ambient: AmbientSpec,
    dim: usize,
    signature: Vec<f64>,
    grid: Grid,
    initial_frame: Vec<Vec<f64>>,
    signs: Option<&'a SignChoice>,
    residuals: Option<FrameResidualSummary>,
}

/// Write the immersion as CSV `u,v,x1,...,xd` (17 significant digits)
/// plus a JSON sidecar describing the ambient, grid, pinned initial
/// frame, sign choices, and residual summary.
pub fn export_immersion(
    ff: &FrameField,
    residuals: Option<&FrameResiduals>,
    signs: Option<&SignChoice>,
    csv_path: &Path,
    sidecar_path: &Path,
) -> Result<(), FrameError> {
    let g = ff.grid;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    write!(csv, "u,v")?;
    for k in 1..=ff.dim {
        write!(csv, ",x{k}")?;
    }
    writeln!(csv)?;
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let (u, v) = g.point(i, j);
            write!(csv, "{u:.16e},{v:.16e}")?;
            let m = ff.at(i, j);
            for k in 0..ff.dim {
                write!(csv, ",{:.16e}", m[(k, 4)])?;
            }
            writeln!(csv)?;
        }
    }
    csv.flush()?;

    let sidecar = Sidecar {
        ambient: ff.ambient,
        dim: ff.dim,
        signature: ff.ambient.signature(),
        grid: g,
        initial_frame: (0..ff.dim)
            .map(|r| (0..5).map(|c| ff.initial[(r, c)]).collect())
            .collect(),
        signs,
        residuals: residuals.map(FrameResiduals::summary),
    };
    std::fs::write(
        sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(())
}
