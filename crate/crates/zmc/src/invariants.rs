//! Derived quantities and residuals for zero-mean-curvature time-like
//! surface data: the characteristic combinations `X±, Y±`, connection
//! scalars `phi±, psi±`, intrinsic curvature, Gauss/Codazzi/Ricci
//! residuals, the frame-compatibility residual, the paracomplex quartic
//! form and its paraholomorphy defect, twistor-derivative causal norms,
//! and the aggregate classification report.
//!
//! Sign conventions follow the frame matrices in [`frame_coefficients`]:
//! the commutator identity `S_v - T_u = ST - TS` expands to exactly the
//! six scalar equations computed by [`gcr_residuals`], with the Gauss
//! equation picking up a `beta` sign flip in the Lorentzian family.

use crate::field::{Coord, Grid, ScalarField};
use crate::paracomplex::{CausalClass, Paracomplex, EPS_NULL, EPS_ZERO};
use nalgebra::Matrix5;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InvariantsError {
    #[error("operation requires {expected:?} ambient, got {got:?}")]
    FamilyMismatch { expected: Family, got: Family },
    #[error("fields do not share a grid")]
    GridMismatch,
    #[error("non-finite fundamental data")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Neutral,
    Lorentzian,
}

/// Ambient space form: family plus constant sectional curvature.
///
/// The flat model is 4-dimensional; curved models are quadrics
/// `<x,x> = 1/L0` inside a flat 5-space whose signature depends on the
/// family and the sign of `L0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientSpec {
    pub family: Family,
    pub l0: f64,
}

impl AmbientSpec {
    pub fn neutral(l0: f64) -> AmbientSpec {
        AmbientSpec {
            family: Family::Neutral,
            l0,
        }
    }

    pub fn lorentzian(l0: f64) -> AmbientSpec {
        AmbientSpec {
            family: Family::Lorentzian,
            l0,
        }
    }

    pub fn dim(&self) -> usize {
        if self.l0 == 0.0 {
            4
        } else {
            5
        }
    }

    /// Diagonal metric signs of the flat ambient coordinates.
    pub fn signature(&self) -> Vec<f64> {
        match self.family {
            Family::Neutral => {
                if self.l0 == 0.0 {
                    vec![1.0, 1.0, -1.0, -1.0]
                } else if self.l0 > 0.0 {
                    vec![1.0, 1.0, 1.0, -1.0, -1.0]
                } else {
                    vec![1.0, 1.0, -1.0, -1.0, -1.0]
                }
            }
            Family::Lorentzian => {
                if self.l0 == 0.0 {
                    vec![1.0, 1.0, 1.0, -1.0]
                } else if self.l0 > 0.0 {
                    vec![1.0, 1.0, 1.0, 1.0, -1.0]
                } else {
                    vec![1.0, 1.0, 1.0, -1.0, -1.0]
                }
            }
        }
    }
}

/// One of the seven fundamental fields, addressable by name (used by the
/// perturbation hook in the pipeline).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldName {
    Lambda,
    Alpha1,
    Alpha2,
    Beta1,
    Beta2,
    Mu1,
    Mu2,
}

impl FieldName {
    pub const ALL: [FieldName; 7] = [
        FieldName::Lambda,
        FieldName::Alpha1,
        FieldName::Alpha2,
        FieldName::Beta1,
        FieldName::Beta2,
        FieldName::Mu1,
        FieldName::Mu2,
    ];
}

/// Complete first/second fundamental data of a surface on a shared
/// `(u,v)` grid, together with its ambient.
#[derive(Clone, Debug)]
pub struct FundamentalData {
    pub ambient: AmbientSpec,
    pub lambda: ScalarField,
    pub alpha1: ScalarField,
    pub alpha2: ScalarField,
    pub beta1: ScalarField,
    pub beta2: ScalarField,
    pub mu1: ScalarField,
    pub mu2: ScalarField,
}

impl FundamentalData {
    pub fn validate(&self) -> Result<(), InvariantsError> {
        let g = self.lambda.grid();
        for f in [
            &self.alpha1,
            &self.alpha2,
            &self.beta1,
            &self.beta2,
            &self.mu1,
            &self.mu2,
        ] {
            if f.grid() != g {
                return Err(InvariantsError::GridMismatch);
            }
        }
        for f in self.fields() {
            if !f.is_finite() {
                return Err(InvariantsError::NonFinite);
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.lambda.grid()
    }

    pub fn fields(&self) -> [&ScalarField; 7] {
        [
            &self.lambda,
            &self.alpha1,
            &self.alpha2,
            &self.beta1,
            &self.beta2,
            &self.mu1,
            &self.mu2,
        ]
    }

    pub fn field(&self, name: FieldName) -> &ScalarField {
        match name {
            FieldName::Lambda => &self.lambda,
            FieldName::Alpha1 => &self.alpha1,
            FieldName::Alpha2 => &self.alpha2,
            FieldName::Beta1 => &self.beta1,
            FieldName::Beta2 => &self.beta2,
            FieldName::Mu1 => &self.mu1,
            FieldName::Mu2 => &self.mu2,
        }
    }

    /// Copy of the data with a constant offset added to one field.
    pub fn perturbed(&self, name: FieldName, amount: f64) -> FundamentalData {
        let mut out = self.clone();
        let target = match name {
            FieldName::Lambda => &mut out.lambda,
            FieldName::Alpha1 => &mut out.alpha1,
            FieldName::Alpha2 => &mut out.alpha2,
            FieldName::Beta1 => &mut out.beta1,
            FieldName::Beta2 => &mut out.beta2,
            FieldName::Mu1 => &mut out.mu1,
            FieldName::Mu2 => &mut out.mu2,
        };
        *target = target.map(|x| x + amount);
        out
    }

    /// Largest field magnitude, used to scale default tolerances.
    pub fn scale(&self) -> f64 {
        self.fields().iter().fold(0.0f64, |m, f| m.max(f.max_abs()))
    }

    pub fn e2l(&self) -> ScalarField {
        self.lambda.map(|l| (2.0 * l).exp())
    }
}

/// A split-complex field stored as a pair of component fields.
#[derive(Clone, Debug)]
pub struct ParacomplexField {
    pub re: ScalarField,
    pub im: ScalarField,
}

impl ParacomplexField {
    pub fn at(&self, i: usize, j: usize) -> Paracomplex {
        Paracomplex::new(self.re.at(i, j), self.im.at(i, j))
    }

    pub fn grid(&self) -> &Grid {
        self.re.grid()
    }

    /// Pointwise causal classes with the default tolerances.
    pub fn classes(&self) -> Vec<CausalClass> {
        let g = self.grid();
        let mut out = Vec::with_capacity(g.n1 * g.n2);
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                out.push(self.at(i, j).classify(EPS_ZERO, EPS_NULL));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.re.max_abs().max(self.im.max_abs())
    }

    /// Pointwise max of `|sq_norm|`.
    pub fn max_abs_sq_norm(&self) -> f64 {
        let g = self.grid();
        let mut m = 0.0f64;
        for i in 0..g.n1 {
            for j in 0..g.n2 {
                m = m.max(self.at(i, j).sq_norm().abs());
            }
        }
        m
    }
}

/// All first-order derived quantities of a data set.
#[derive(Clone, Debug)]
pub struct DerivedInvariants {
    pub ambient: AmbientSpec,
    pub x_plus: ScalarField,
    pub x_minus: ScalarField,
    pub y_plus: ScalarField,
    pub y_minus: ScalarField,
    pub phi_plus: ScalarField,
    pub phi_minus: ScalarField,
    pub psi_plus: ScalarField,
    pub psi_minus: ScalarField,
    pub k: ScalarField,
    pub gamma1: ParacomplexField,
    pub gamma2: ParacomplexField,
}

impl DerivedInvariants {
    /// `X±^2 - Y±^2`, the causal-type discriminant of the twistor lifts.
    pub fn lift_discriminant(&self, plus: bool) -> ScalarField {
        let (x, y) = if plus {
            (&self.x_plus, &self.y_plus)
        } else {
            (&self.x_minus, &self.y_minus)
        };
        x.zip_with(y, |x, y| x * x - y * y)
    }
}

/// Pointwise algebra `X± = alpha1 ± beta2`, `Y± = alpha2 ± beta1`,
/// `gamma_k = alpha_k + j beta_k`, connection scalars from derivatives of
/// `lambda`, and the curvature of the induced metric.
pub fn derive(data: &FundamentalData) -> DerivedInvariants {
    let lu = data.lambda.deriv(Coord::U);
    let lv = data.lambda.deriv(Coord::V);
    DerivedInvariants {
        ambient: data.ambient,
        x_plus: data.alpha1.zip_with(&data.beta2, |a, b| a + b),
        x_minus: data.alpha1.zip_with(&data.beta2, |a, b| a - b),
        y_plus: data.alpha2.zip_with(&data.beta1, |a, b| a + b),
        y_minus: data.alpha2.zip_with(&data.beta1, |a, b| a - b),
        phi_plus: lu.zip_with(&data.mu2, |l, m| l - m),
        phi_minus: lu.zip_with(&data.mu2, |l, m| l + m),
        psi_plus: lv.zip_with(&data.mu1, |l, m| l - m),
        psi_minus: lv.zip_with(&data.mu1, |l, m| l + m),
        k: curvature_k(data),
        gamma1: ParacomplexField {
            re: data.alpha1.clone(),
            im: data.beta1.clone(),
        },
        gamma2: ParacomplexField {
            re: data.alpha2.clone(),
            im: data.beta2.clone(),
        },
    }
}

/// Curvature of the induced metric, `K = -e^{-2 lambda}(lambda_uu - lambda_vv)`,
/// so that `K = L0` exactly when the conformal factor satisfies the
/// constant-curvature equation.
pub fn curvature_k(data: &FundamentalData) -> ScalarField {
    let luu = data.lambda.deriv2(Coord::U);
    let lvv = data.lambda.deriv2(Coord::V);
    let wave = luu.zip_with(&lvv, |a, b| a - b);
    wave.zip_with(&data.lambda, |w, l| -(-2.0 * l).exp() * w)
}

/// Left-minus-right residuals of the Gauss, four Codazzi, and Ricci
/// equations, with the sign pattern selected by the ambient family.
#[derive(Clone, Debug)]
pub struct GcrResiduals {
    pub gauss: ScalarField,
    pub codazzi: [ScalarField; 4],
    pub ricci: ScalarField,
}

impl GcrResiduals {
    pub fn gauss_max(&self) -> f64 {
        self.gauss.max_abs()
    }

    pub fn codazzi_max(&self) -> [f64; 4] {
        [
            self.codazzi[0].max_abs(),
            self.codazzi[1].max_abs(),
            self.codazzi[2].max_abs(),
            self.codazzi[3].max_abs(),
        ]
    }

    pub fn ricci_max(&self) -> f64 {
        self.ricci.max_abs()
    }

    pub fn max_all(&self) -> f64 {
        self.gauss_max()
            .max(self.ricci_max())
            .max(self.codazzi_max().into_iter().fold(0.0f64, f64::max))
    }

    /// Pointwise max over all six equations.
    pub fn pointwise_max(&self) -> ScalarField {
        let mut acc = self.gauss.map(f64::abs);
        for c in &self.codazzi {
            acc = acc.zip_with(c, |m, x| m.max(x.abs()));
        }
        acc.zip_with(&self.ricci, |m, x| m.max(x.abs()))
    }
}

pub fn gcr_residuals(data: &FundamentalData) -> GcrResiduals {
    let l0 = data.ambient.l0;
    let lorentzian = data.ambient.family == Family::Lorentzian;
    let lu = data.lambda.deriv(Coord::U);
    let lv = data.lambda.deriv(Coord::V);
    let luu = data.lambda.deriv2(Coord::U);
    let lvv = data.lambda.deriv2(Coord::V);
    let (a1, a2, b1, b2) = (&data.alpha1, &data.alpha2, &data.beta1, &data.beta2);
    let (m1, m2) = (&data.mu1, &data.mu2);

    let g = *data.grid();
    let n = (g.n1, g.n2);
    let mut gauss = ndarray::Array2::zeros(n);
    let mut cod = [
        ndarray::Array2::zeros(n),
        ndarray::Array2::zeros(n),
        ndarray::Array2::zeros(n),
        ndarray::Array2::zeros(n),
    ];
    let mut ricci = ndarray::Array2::zeros(n);

    let a1u = a1.deriv(Coord::U);
    let a1v = a1.deriv(Coord::V);
    let a2u = a2.deriv(Coord::U);
    let a2v = a2.deriv(Coord::V);
    let b1u = b1.deriv(Coord::U);
    let b1v = b1.deriv(Coord::V);
    let b2u = b2.deriv(Coord::U);
    let b2v = b2.deriv(Coord::V);
    let m1v = m1.deriv(Coord::V);
    let m2u = m2.deriv(Coord::U);

    // In the Lorentzian frame the normal N2 is space-like instead of
    // time-like; this flips the beta signs in Gauss and mu signs in the
    // alpha-Codazzi pair. The Ricci equation is identical.
    let sg = if lorentzian { 1.0 } else { -1.0 };
    let sm = if lorentzian { -1.0 } else { 1.0 };

    for i in 0..n.0 {
        for j in 0..n.1 {
            let e2 = (2.0 * data.lambda.at(i, j)).exp();
            let (a1_, a2_, b1_, b2_) = (a1.at(i, j), a2.at(i, j), b1.at(i, j), b2.at(i, j));
            let (m1_, m2_) = (m1.at(i, j), m2.at(i, j));
            let (lu_, lv_) = (lu.at(i, j), lv.at(i, j));

            gauss[[i, j]] = luu.at(i, j) - lvv.at(i, j) + l0 * e2
                - (a1_ * a1_ - a2_ * a2_ + sg * (b1_ * b1_ - b2_ * b2_));

            cod[0][[i, j]] = a1v.at(i, j)
                - a2u.at(i, j)
                - (a2_ * lu_ - a1_ * lv_ + sm * (b2_ * m1_ - b1_ * m2_));
            cod[1][[i, j]] = a2v.at(i, j)
                - a1u.at(i, j)
                - (a1_ * lu_ - a2_ * lv_ + sm * (b1_ * m1_ - b2_ * m2_));
            cod[2][[i, j]] =
                b1v.at(i, j) - b2u.at(i, j) - (b2_ * lu_ - b1_ * lv_ + a2_ * m1_ - a1_ * m2_);
            cod[3][[i, j]] =
                b2v.at(i, j) - b1u.at(i, j) - (b1_ * lu_ - b2_ * lv_ + a1_ * m1_ - a2_ * m2_);

            ricci[[i, j]] = m1v.at(i, j) - m2u.at(i, j) - (2.0 * a1_ * b2_ - 2.0 * a2_ * b1_);
        }
    }

    let [c0, c1, c2, c3] = cod;
    GcrResiduals {
        gauss: ScalarField::new(g, gauss),
        codazzi: [
            ScalarField::new(g, c0),
            ScalarField::new(g, c1),
            ScalarField::new(g, c2),
            ScalarField::new(g, c3),
        ],
        ricci: ScalarField::new(g, ricci),
    }
}

/// The 5x5 connection coefficient matrices `S` and `T` of the moving
/// frame `(T1 T2 N1 N2 F)`, as 25 entry fields each.
#[derive(Clone, Debug)]
pub struct FrameCoefficients {
    pub grid: Grid,
    pub s: Vec<ScalarField>,
    pub t: Vec<ScalarField>,
}

impl FrameCoefficients {
    pub fn s_at(&self, i: usize, j: usize) -> Matrix5<f64> {
        Matrix5::from_fn(|r, c| self.s[r * 5 + c].at(i, j))
    }

    pub fn t_at(&self, i: usize, j: usize) -> Matrix5<f64> {
        Matrix5::from_fn(|r, c| self.t[r * 5 + c].at(i, j))
    }

    /// Interpolation of both matrices at native coordinates: bicubic so
    /// that integrators sampling between nodes keep their second-order
    /// global accuracy (bilinear would leave a cell-periodic error that
    /// second differences of the integrated position amplify to first
    /// order). Falls back to bilinear on grids too small for the cubic
    /// stencil.
    pub fn interp(&self, x: f64, y: f64) -> (Matrix5<f64>, Matrix5<f64>) {
        if self.grid.n1 >= 4 && self.grid.n2 >= 4 {
            (
                Matrix5::from_fn(|r, c| self.s[r * 5 + c].bicubic(x, y)),
                Matrix5::from_fn(|r, c| self.t[r * 5 + c].bicubic(x, y)),
            )
        } else {
            (
                Matrix5::from_fn(|r, c| self.s[r * 5 + c].bilinear(x, y)),
                Matrix5::from_fn(|r, c| self.t[r * 5 + c].bilinear(x, y)),
            )
        }
    }
}

pub fn frame_coefficients(data: &FundamentalData) -> FrameCoefficients {
    let g = *data.grid();
    let lu = data.lambda.deriv(Coord::U);
    let lv = data.lambda.deriv(Coord::V);
    let le = data.e2l().map(|x| x * -data.ambient.l0); // -L0 e^{2 lambda}
    let zero = ScalarField::constant(g, 0.0);
    let one = ScalarField::constant(g, 1.0);
    let (a1, a2, b1, b2) = (&data.alpha1, &data.alpha2, &data.beta1, &data.beta2);
    let (m1, m2) = (&data.mu1, &data.mu2);
    let neg = |f: &ScalarField| f.scale(-1.0);

    let (s, t) = match data.ambient.family {
        Family::Neutral => (
            vec![
                lu.clone(),
                lv.clone(),
                neg(a1),
                b1.clone(),
                one.clone(),
                lv.clone(),
                lu.clone(),
                a2.clone(),
                neg(b2),
                zero.clone(),
                a1.clone(),
                a2.clone(),
                lu.clone(),
                m1.clone(),
                zero.clone(),
                b1.clone(),
                b2.clone(),
                m1.clone(),
                lu.clone(),
                zero.clone(),
                le.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ],
            vec![
                lv.clone(),
                lu.clone(),
                neg(a2),
                b2.clone(),
                zero.clone(),
                lu.clone(),
                lv.clone(),
                a1.clone(),
                neg(b1),
                one.clone(),
                a2.clone(),
                a1.clone(),
                lv.clone(),
                m2.clone(),
                zero.clone(),
                b2.clone(),
                b1.clone(),
                m2.clone(),
                lv.clone(),
                zero.clone(),
                zero.clone(),
                neg(&le),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ],
        ),
        Family::Lorentzian => (
            vec![
                lu.clone(),
                lv.clone(),
                neg(a1),
                neg(b1),
                one.clone(),
                lv.clone(),
                lu.clone(),
                a2.clone(),
                b2.clone(),
                zero.clone(),
                a1.clone(),
                a2.clone(),
                lu.clone(),
                neg(m1),
                zero.clone(),
                b1.clone(),
                b2.clone(),
                m1.clone(),
                lu.clone(),
                zero.clone(),
                le.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ],
            vec![
                lv.clone(),
                lu.clone(),
                neg(a2),
                neg(b2),
                zero.clone(),
                lu.clone(),
                lv.clone(),
                a1.clone(),
                b1.clone(),
                one.clone(),
                a2.clone(),
                a1.clone(),
                lv.clone(),
                neg(m2),
                zero.clone(),
                b2.clone(),
                b1.clone(),
                m2.clone(),
                lv.clone(),
                zero.clone(),
                zero.clone(),
                neg(&le),
                zero.clone(),
                zero.clone(),
                zero.clone(),
            ],
        ),
    };
    FrameCoefficients { grid: g, s, t }
}

/// Pointwise `max |S_v - T_u - (ST - TS)|` over all 25 entries.
pub fn compatibility_residual(data: &FundamentalData) -> ScalarField {
    let fc = frame_coefficients(data);
    let sv: Vec<ScalarField> = fc.s.iter().map(|f| f.deriv(Coord::V)).collect();
    let tu: Vec<ScalarField> = fc.t.iter().map(|f| f.deriv(Coord::U)).collect();
    let g = fc.grid;
    let mut out = ndarray::Array2::zeros((g.n1, g.n2));
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let s = fc.s_at(i, j);
            let t = fc.t_at(i, j);
            let svm = Matrix5::from_fn(|r, c| sv[r * 5 + c].at(i, j));
            let tum = Matrix5::from_fn(|r, c| tu[r * 5 + c].at(i, j));
            let e = svm - tum - (s * t - t * s);
            out[[i, j]] = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        }
    }
    ScalarField::new(g, out)
}

/// Coefficient of the paracomplex quartic form,
/// `q = (e^{2 lambda}/4)(|gamma1|^2 + |gamma2|^2 + 2 j Re(gamma1 conj(gamma2)))`.
///
/// Neutral-family only; the Lorentzian frame does not define it.
pub fn quartic_q(data: &FundamentalData) -> Result<ParacomplexField, InvariantsError> {
    if data.ambient.family != Family::Neutral {
        return Err(InvariantsError::FamilyMismatch {
            expected: Family::Neutral,
            got: data.ambient.family,
        });
    }
    let g = *data.grid();
    let mut re = ndarray::Array2::zeros((g.n1, g.n2));
    let mut im = ndarray::Array2::zeros((g.n1, g.n2));
    for i in 0..g.n1 {
        for j in 0..g.n2 {
            let w = 0.25 * (2.0 * data.lambda.at(i, j)).exp();
            let g1 = Paracomplex::new(data.alpha1.at(i, j), data.beta1.at(i, j));
            let g2 = Paracomplex::new(data.alpha2.at(i, j), data.beta2.at(i, j));
            // Re(g1 * conj(g2)) = a1 a2 - b1 b2
            let cross = g1.re * g2.re - g1.im * g2.im;
            re[[i, j]] = w * (g1.sq_norm() + g2.sq_norm());
            im[[i, j]] = w * 2.0 * cross;
        }
    }
    Ok(ParacomplexField {
        re: ScalarField::new(g, re),
        im: ScalarField::new(g, im),
    })
}

/// Paracomplex Cauchy-Riemann defect of `q = a + jb`:
/// pointwise `max(|a_u - b_v|, |a_v - b_u|)`.
pub fn paraholomorphy_residual(q: &ParacomplexField) -> ScalarField {
    let au = q.re.deriv(Coord::U);
    let av = q.re.deriv(Coord::V);
    let bu = q.im.deriv(Coord::U);
    let bv = q.im.deriv(Coord::V);
    let r1 = au.zip_with(&bv, |a, b| (a - b).abs());
    let r2 = av.zip_with(&bu, |a, b| (a - b).abs());
    r1.zip_with(&r2, f64::max)
}

/// Squared norms of the covariant derivatives of the two time-like
/// twistor lifts along `T1` and `T2`.
#[derive(Clone, Debug)]
pub struct TwistorNorms {
    /// `|grad_{T1} Theta_+|^2 = Y+^2 - X+^2`
    pub t1_plus: ScalarField,
    /// `|grad_{T2} Theta_+|^2 = X+^2 - Y+^2`
    pub t2_plus: ScalarField,
    pub t1_minus: ScalarField,
    pub t2_minus: ScalarField,
}

/// The lift derivatives expand over a frame with basis norms `+1` and
/// `-1`, so the squared norms are `±(Y±^2 - X±^2)`; both are null exactly
/// when `X±^2 = Y±^2`. Neutral-family only.
pub fn twistor_norms(inv: &DerivedInvariants) -> Result<TwistorNorms, InvariantsError> {
    if inv.ambient.family != Family::Neutral {
        return Err(InvariantsError::FamilyMismatch {
            expected: Family::Neutral,
            got: inv.ambient.family,
        });
    }
    let sq = |x: f64, y: f64| y * y - x * x;
    Ok(TwistorNorms {
        t1_plus: inv.x_plus.zip_with(&inv.y_plus, sq),
        t2_plus: inv.x_plus.zip_with(&inv.y_plus, |x, y| x * x - y * y),
        t1_minus: inv.x_minus.zip_with(&inv.y_minus, sq),
        t2_minus: inv.x_minus.zip_with(&inv.y_minus, |x, y| x * x - y * y),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub tolerance: f64,
    pub max_deviation: f64,
}

impl Verdict {
    fn check(max_deviation: f64, tolerance: f64) -> Verdict {
        Verdict {
            pass: max_deviation <= tolerance,
            tolerance,
            max_deviation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QStatus {
    Zero,
    NullNonzero,
    NonNull,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftStatus {
    ZeroOrLightlike,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftVerdict {
    pub status: LiftStatus,
    pub tolerance: f64,
    /// max of `|X^2 - Y^2|` over the grid
    pub max_discriminant: f64,
    /// min of `|X^2 - Y^2|` over the grid
    pub min_discriminant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualMaxima {
    pub gauss: f64,
    pub codazzi: [f64; 4],
    pub ricci: f64,
    pub compatibility: f64,
}

impl ResidualMaxima {
    pub fn max_all(&self) -> f64 {
        self.gauss
            .max(self.ricci)
            .max(self.compatibility)
            .max(self.codazzi.into_iter().fold(0.0f64, f64::max))
    }
}

/// Aggregate verdicts for one data set. Every verdict records the
/// tolerance used and the attained deviation, so a reader can tighten.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub k_equals_l0: Verdict,
    pub normal_flat: Verdict,
    /// `None` in the Lorentzian family, where the quartic form is not defined.
    pub q_status: Option<QStatus>,
    pub lift_plus: Option<LiftVerdict>,
    pub lift_minus: Option<LiftVerdict>,
    pub residual_maxima: ResidualMaxima,
}

/// Default verdict tolerance: `10 h^2`, scaled by the field magnitude.
pub fn default_tolerance(data: &FundamentalData) -> f64 {
    let h = data.grid().h_max();
    10.0 * h * h * data.scale().max(1.0)
}

pub fn classify(data: &FundamentalData, tolerance: Option<f64>) -> ClassificationReport {
    let tol = tolerance.unwrap_or_else(|| default_tolerance(data));
    let inv = derive(data);
    let l0 = data.ambient.l0;

    let k_dev = inv.k.map(|k| (k - l0).abs()).max_abs();
    let normal_dev = data
        .mu1
        .deriv(Coord::V)
        .zip_with(&data.mu2.deriv(Coord::U), |a, b| a - b)
        .max_abs();

    let gcr = gcr_residuals(data);
    let residual_maxima = ResidualMaxima {
        gauss: gcr.gauss_max(),
        codazzi: gcr.codazzi_max(),
        ricci: gcr.ricci_max(),
        compatibility: compatibility_residual(data).max_abs(),
    };

    let (q_status, lift_plus, lift_minus) = if data.ambient.family == Family::Neutral {
        let q = quartic_q(data).expect("neutral family");
        let classes = q.classes();
        let all_zero = classes.iter().all(|c| *c == CausalClass::Zero);
        let all_null = classes
            .iter()
            .all(|c| matches!(c, CausalClass::Zero | CausalClass::NullNonzero));
        let all_nonnull = classes
            .iter()
            .all(|c| matches!(c, CausalClass::Positive | CausalClass::Negative));
        let status = if all_zero {
            QStatus::Zero
        } else if all_null {
            QStatus::NullNonzero
        } else if all_nonnull {
            QStatus::NonNull
        } else {
            QStatus::Mixed
        };
        let lift = |plus: bool| {
            let d = inv.lift_discriminant(plus);
            let max = d.max_abs();
            let min = d.map(f64::abs).min();
            LiftVerdict {
                status: if max <= tol {
                    LiftStatus::ZeroOrLightlike
                } else {
                    LiftStatus::Not
                },
                tolerance: tol,
                max_discriminant: max,
                min_discriminant: min,
            }
        };
        (Some(status), Some(lift(true)), Some(lift(false)))
    } else {
        (None, None, None)
    };

    ClassificationReport {
        k_equals_l0: Verdict::check(k_dev, tol),
        normal_flat: Verdict::check(normal_dev, tol),
        q_status,
        lift_plus,
        lift_minus,
        residual_maxima,
    }
}
