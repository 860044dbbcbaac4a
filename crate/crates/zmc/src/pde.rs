//! Hyperbolic solvers on characteristic grids.
//!
//! Two Goursat problems appear in the constructions: the scalar equation
//! `lambda_st = -(L0/2) e^{2 lambda} + (eps/2) e^{-2 lambda}` and the
//! semilinear system `(f1)_st = L0 e^{-f1-f2}`,
//! `(f2)_st = -(eps/2) e^{f1+2f2}`, both with data prescribed on the two
//! characteristics `s = s0` and `t = t0`. The marching scheme is the
//! characteristic-rectangle rule
//!
//! ```text
//! w[i+1][j+1] = w[i+1][j] + w[i][j+1] - w[i][j] + hs*ht*G(w_mid)
//! ```
//!
//! with `w_mid` first taken as the three-point average and then corrected
//! once using the predicted corner, for a second-order self-residual.
//!
//! Closed-form conformal factors for the constant-curvature equation
//! `lambda_uu - lambda_vv + L0 e^{2 lambda} = 0` are provided separately
//! and double as convergence oracles for the scalar solver.

use crate::expr::{Expr, ExprError};
use crate::field::{FieldError, Grid, ScalarField};
use ndarray::Array2;
use thiserror::Error;

/// Exceeding this magnitude during the sweep counts as finite-domain
/// blow-up; the exponential right-hand sides make this failure generic.
pub const BLOW_UP_LIMIT: f64 = 1e8;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("boundary data disagree at the corner ({s0},{t0}): {from_s} vs {from_t}")]
    CornerMismatch {
        s0: f64,
        t0: f64,
        from_s: f64,
        from_t: f64,
    },
    #[error("solution blew up at grid point ({i},{j}) = ({s},{t}): value {value}")]
    BlowUp {
        i: usize,
        j: usize,
        s: f64,
        t: f64,
        value: f64,
    },
    #[error("closed form is singular at ({s},{t})")]
    SingularDomain { s: f64, t: f64 },
    #[error("closed form gives non-positive conformal factor at ({s},{t})")]
    NonPositiveConformal { s: f64, t: f64 },
    #[error("boundary expression must be a function of at most one variable, got {0}")]
    BadBoundaryArity(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn eval1(e: &Expr, x: f64) -> Result<f64, PdeError> {
    match e.variables().len() {
        0 => Ok(e.eval(&[])?),
        1 => Ok(e.eval(&[x])?),
        n => Err(PdeError::BadBoundaryArity(n)),
    }
}

fn check_corner(grid: &Grid, on_t0: &Expr, on_s0: &Expr) -> Result<(), PdeError> {
    let from_s = eval1(on_t0, grid.min1)?;
    let from_t = eval1(on_s0, grid.min2)?;
    if (from_s - from_t).abs() > 1e-10 {
        return Err(PdeError::CornerMismatch {
            s0: grid.min1,
            t0: grid.min2,
            from_s,
            from_t,
        });
    }
    Ok(())
}

/// Goursat problem for the scalar conformal-factor equation.
#[derive(Clone, Debug)]
pub struct GoursatScalar {
    pub grid: Grid,
    pub l0: f64,
    /// sign `eps` of the `e^{-2 lambda}` term, `+1` or `-1`
    pub eps: f64,
    /// data along `t = t0`, a function of `s`
    pub on_t0: Expr,
    /// data along `s = s0`, a function of `t`
    pub on_s0: Expr,
    term_l0: bool,
    term_eps: bool,
}

impl GoursatScalar {
    pub fn new(grid: Grid, l0: f64, eps: f64, on_t0: Expr, on_s0: Expr) -> GoursatScalar {
        assert_eq!(grid.coord, crate::field::CoordKind::St);
        assert!(eps == 1.0 || eps == -1.0);
        GoursatScalar {
            grid,
            l0,
            eps,
            on_t0,
            on_s0,
            term_l0: true,
            term_eps: true,
        }
    }

    /// Suppress one of the right-hand-side terms. Exists only so oracle
    /// tests can reduce the equation to a pure Liouville or wave problem;
    /// not reachable from run configurations.
    #[doc(hidden)]
    pub fn with_term_mask(mut self, term_l0: bool, term_eps: bool) -> GoursatScalar {
        self.term_l0 = term_l0;
        self.term_eps = term_eps;
        self
    }

    fn rhs(&self, lambda: f64) -> f64 {
        let mut g = 0.0;
        if self.term_l0 {
            g -= 0.5 * self.l0 * (2.0 * lambda).exp();
        }
        if self.term_eps {
            g += 0.5 * self.eps * (-2.0 * lambda).exp();
        }
        g
    }

    pub fn solve(&self) -> Result<ScalarField, PdeError> {
        check_corner(&self.grid, &self.on_t0, &self.on_s0)?;
        let g = self.grid;
        let (hs, ht) = (g.h1(), g.h2());
        let mut w = Array2::zeros((g.n1, g.n2));
        for i in 0..g.n1 {
            w[[i, 0]] = eval1(&self.on_t0, g.point(i, 0).0)?;
        }
        for j in 0..g.n2 {
            w[[0, j]] = eval1(&self.on_s0, g.point(0, j).1)?;
        }
        for i in 0..g.n1 - 1 {
            for j in 0..g.n2 - 1 {
                let (w00, w10, w01) = (w[[i, j]], w[[i + 1, j]], w[[i, j + 1]]);
                let base = w10 + w01 - w00;
                let pred = base + hs * ht * self.rhs((w00 + w10 + w01) / 3.0);
                let corr = base + hs * ht * self.rhs((w00 + w10 + w01 + pred) / 4.0);
                if !corr.is_finite() || corr.abs() > BLOW_UP_LIMIT {
                    let (s, t) = g.point(i + 1, j + 1);
                    return Err(PdeError::BlowUp {
                        i: i + 1,
                        j: j + 1,
                        s,
                        t,
                        value: corr,
                    });
                }
                w[[i + 1, j + 1]] = corr;
            }
        }
        Ok(ScalarField::new(g, w))
    }

    /// Finite-difference defect `lambda_st - G(lambda)` of a candidate
    /// solution; `O(h^2)` for the output of [`Self::solve`] on smooth
    /// problems.
    pub fn self_residual(&self, lambda: &ScalarField) -> ScalarField {
        lambda.deriv_st().zip_with(lambda, |d, l| d - self.rhs(l))
    }
}

/// Goursat problem for the coupled `(f1, f2)` system.
#[derive(Clone, Debug)]
pub struct GoursatSystem {
    pub grid: Grid,
    pub l0: f64,
    pub eps: f64,
    pub f1_on_t0: Expr,
    pub f1_on_s0: Expr,
    pub f2_on_t0: Expr,
    pub f2_on_s0: Expr,
}

impl GoursatSystem {
    pub fn new(
        grid: Grid,
        l0: f64,
        eps: f64,
        f1_on_t0: Expr,
        f1_on_s0: Expr,
        f2_on_t0: Expr,
        f2_on_s0: Expr,
    ) -> GoursatSystem {
        assert_eq!(grid.coord, crate::field::CoordKind::St);
        assert!(eps == 1.0 || eps == -1.0);
        GoursatSystem {
            grid,
            l0,
            eps,
            f1_on_t0,
            f1_on_s0,
            f2_on_t0,
            f2_on_s0,
        }
    }

    fn rhs(&self, f1: f64, f2: f64) -> (f64, f64) {
        (
            self.l0 * (-f1 - f2).exp(),
            -0.5 * self.eps * (f1 + 2.0 * f2).exp(),
        )
    }

    pub fn solve(&self) -> Result<(ScalarField, ScalarField), PdeError> {
        check_corner(&self.grid, &self.f1_on_t0, &self.f1_on_s0)?;
        check_corner(&self.grid, &self.f2_on_t0, &self.f2_on_s0)?;
        let g = self.grid;
        let (hs, ht) = (g.h1(), g.h2());
        let mut w1 = Array2::zeros((g.n1, g.n2));
        let mut w2 = Array2::zeros((g.n1, g.n2));
        for i in 0..g.n1 {
            let s = g.point(i, 0).0;
            w1[[i, 0]] = eval1(&self.f1_on_t0, s)?;
            w2[[i, 0]] = eval1(&self.f2_on_t0, s)?;
        }
        for j in 0..g.n2 {
            let t = g.point(0, j).1;
            w1[[0, j]] = eval1(&self.f1_on_s0, t)?;
            w2[[0, j]] = eval1(&self.f2_on_s0, t)?;
        }
        for i in 0..g.n1 - 1 {
            for j in 0..g.n2 - 1 {
                let base1 = w1[[i + 1, j]] + w1[[i, j + 1]] - w1[[i, j]];
                let base2 = w2[[i + 1, j]] + w2[[i, j + 1]] - w2[[i, j]];
                let avg1 = (w1[[i, j]] + w1[[i + 1, j]] + w1[[i, j + 1]]) / 3.0;
                let avg2 = (w2[[i, j]] + w2[[i + 1, j]] + w2[[i, j + 1]]) / 3.0;
                let (g1, g2) = self.rhs(avg1, avg2);
                let pred1 = base1 + hs * ht * g1;
                let pred2 = base2 + hs * ht * g2;
                let mid1 = (w1[[i, j]] + w1[[i + 1, j]] + w1[[i, j + 1]] + pred1) / 4.0;
                let mid2 = (w2[[i, j]] + w2[[i + 1, j]] + w2[[i, j + 1]] + pred2) / 4.0;
                let (g1, g2) = self.rhs(mid1, mid2);
                let c1 = base1 + hs * ht * g1;
                let c2 = base2 + hs * ht * g2;
                for c in [c1, c2] {
                    if !c.is_finite() || c.abs() > BLOW_UP_LIMIT {
                        let (s, t) = g.point(i + 1, j + 1);
                        return Err(PdeError::BlowUp {
                            i: i + 1,
                            j: j + 1,
                            s,
                            t,
                            value: c,
                        });
                    }
                }
                w1[[i + 1, j + 1]] = c1;
                w2[[i + 1, j + 1]] = c2;
            }
        }
        Ok((ScalarField::new(g, w1), ScalarField::new(g, w2)))
    }

    /// Componentwise finite-difference defects of a candidate pair.
    pub fn self_residual(&self, f1: &ScalarField, f2: &ScalarField) -> (ScalarField, ScalarField) {
        let d1 = f1.deriv_st();
        let d2 = f2.deriv_st();
        let mut r1 = d1.values().clone();
        let mut r2 = d2.values().clone();
        for i in 0..self.grid.n1 {
            for j in 0..self.grid.n2 {
                let (g1, g2) = self.rhs(f1.at(i, j), f2.at(i, j));
                r1[[i, j]] -= g1;
                r2[[i, j]] -= g2;
            }
        }
        (
            ScalarField::new(self.grid, r1),
            ScalarField::new(self.grid, r2),
        )
    }
}

/// Conformal factor solving `lambda_uu - lambda_vv + L0 e^{2 lambda} = 0`
/// in closed form from two free one-variable functions:
///
/// - `L0 = 0`: `lambda = p(s) + q(t)`;
/// - `L0 > 0`: `e^{2 lambda} = 2 p'(rs) q'(rt) / (p(rs) - q(rt))^2`;
/// - `L0 < 0`: `e^{2 lambda} = 2 p'(rs) q'(rt) / (p(rs) + q(rt))^2`;
///
/// with `r = sqrt(|L0|)`. The derivatives are taken symbolically, so the
/// returned samples are exact up to rounding.
pub fn liouville_closed_form(
    l0: f64,
    p: &Expr,
    q: &Expr,
    grid: Grid,
) -> Result<ScalarField, PdeError> {
    assert_eq!(grid.coord, crate::field::CoordKind::St);
    let mut w = Array2::zeros((grid.n1, grid.n2));
    if l0 == 0.0 {
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let (s, t) = grid.point(i, j);
                w[[i, j]] = eval1(p, s)? + eval1(q, t)?;
            }
        }
        return Ok(ScalarField::new(grid, w));
    }
    let r = l0.abs().sqrt();
    let denom_sign = if l0 > 0.0 { -1.0 } else { 1.0 };
    let pvar = p.variables().first().cloned().unwrap_or_default();
    let qvar = q.variables().first().cloned().unwrap_or_default();
    let dp = p.differentiate(&pvar);
    let dq = q.differentiate(&qvar);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let (s, t) = grid.point(i, j);
            let ps = eval1(p, r * s)?;
            let qt = eval1(q, r * t)?;
            let den = ps + denom_sign * qt;
            if den.abs() < 1e-300 {
                return Err(PdeError::SingularDomain { s, t });
            }
            let num = 2.0 * eval1(&dp, r * s)? * eval1(&dq, r * t)?;
            let e2l = num / (den * den);
            if !e2l.is_finite() || e2l <= 0.0 {
                return Err(PdeError::NonPositiveConformal { s, t });
            }
            w[[i, j]] = 0.5 * e2l.ln();
        }
    }
    Ok(ScalarField::new(grid, w))
}
