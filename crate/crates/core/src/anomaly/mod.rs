//! Anomaly cancellation on the torus-bundle coframes: the residual of
//! `dT̄ − (α′/4)[8π²p₁(∇⁻) − 8π²p₁(D)]`, its one-variable reduction, and
//! the closed forms it is compared against.

pub mod profile;
pub mod scenario;
pub mod weierstrass;

use crate::connection::{curvature, levi_civita, pontryagin4, scalar_curvature, torsion_connection};
use crate::connection::{build_db, build_instanton_dlambda, CurvatureForms};
use crate::diffring::{flat_laplacian, hessian2, int, p_laplacian4, CoefExpr, Mat3, Rational, Var};
use crate::error::{Error, Result};
use crate::exterior::{base_hodge_star, exterior_derivative, CoframeSpec, FormExpr};
use crate::gstruct::torsion_for;

/// Parameter name used for `α′` in symbolic residuals.
pub const ALPHA_PRIME: &str = "alphaP";
/// Parameter name for `α` in the negative-`α′` reduction `α′ = −α²`.
pub const ALPHA: &str = "alpha";

/// The auxiliary connection on the gauge bundle.
#[derive(Clone, Debug, PartialEq)]
pub enum Instanton {
    /// The quaternionic-block connection built from `Λ`.
    DLambda(Mat3),
    /// `∇⁻` of the coframe with structure matrix `B`.
    DB(Mat3),
}

impl Instanton {
    /// Connection forms of the instanton on `c`.
    pub fn connection(&self, c: &CoframeSpec) -> Result<crate::connection::ConnectionForms> {
        match self {
            Instanton::DLambda(l) => {
                if c.dim() == 7 && !l.rank_at_most_one() {
                    return Err(Error::BadParams("D_Λ needs rank(Λ) ≤ 1".into()));
                }
                build_instanton_dlambda(l, c)
            }
            Instanton::DB(b) => build_db(b, c),
        }
    }

    pub fn curvature(&self, c: &CoframeSpec) -> Result<CurvatureForms> {
        curvature(&self.connection(c)?, c)
    }
}

/// Everything the anomaly chain produces on one coframe.
#[derive(Clone, Debug)]
pub struct AnomalyData {
    pub torsion: FormExpr,
    pub d_torsion: FormExpr,
    pub curvature_minus: CurvatureForms,
    pub p1_minus: FormExpr,
}

impl AnomalyData {
    pub fn compute(c: &CoframeSpec) -> Result<AnomalyData> {
        let torsion = torsion_for(c)?;
        let d_torsion = exterior_derivative(&torsion, c)?;
        let conn = torsion_connection(&levi_civita(c), &torsion, -1)?;
        let curvature_minus = curvature(&conn, c)?;
        let p1_minus = pontryagin4(&curvature_minus)?;
        Ok(AnomalyData {
            torsion,
            d_torsion,
            curvature_minus,
            p1_minus,
        })
    }
}

/// The coefficient `r` of a 4-form `X = −r e^{−4f} ē^{1234}`.
/// Fails with `NotVolumeMultiple` if `X` has any other component.
pub fn volume_coefficient(x: &FormExpr) -> Result<CoefExpr> {
    if x.degree() != 4 {
        return Err(Error::DimensionMismatch(format!("expected a 4-form, got degree {}", x.degree())));
    }
    if let Some((b, _)) = x.components().find(|(b, _)| b.indices() != [1, 2, 3, 4]) {
        return Err(Error::NotVolumeMultiple(format!("component along {:?}", b.indices())));
    }
    Ok(-x.component(&[1, 2, 3, 4]).mul_expf(4))
}

/// `r` in `dT̄ − (α′/4)[8π²p₁(∇⁻) − 8π²p₁(D)] = −r e^{−4f} ē^{1234}`.
pub fn anomaly_residual(c: &CoframeSpec, alpha_p: &CoefExpr, inst: &Instanton) -> Result<CoefExpr> {
    let data = AnomalyData::compute(c)?;
    anomaly_residual_with(&data, c, alpha_p, inst)
}

/// [`anomaly_residual`] reusing a precomputed `∇⁻` chain.
pub fn anomaly_residual_with(
    data: &AnomalyData,
    c: &CoframeSpec,
    alpha_p: &CoefExpr,
    inst: &Instanton,
) -> Result<CoefExpr> {
    volume_coefficient(&anomaly_form_with(data, c, alpha_p, inst)?)
}

/// The full 4-form `dT̄ − (α′/4)[8π²p₁(∇⁻) − 8π²p₁(D)]`, in any dimension.
pub fn anomaly_form_with(
    data: &AnomalyData,
    c: &CoframeSpec,
    alpha_p: &CoefExpr,
    inst: &Instanton,
) -> Result<FormExpr> {
    let p_inst = pontryagin4(&inst.curvature(c)?)?;
    let quarter = alpha_p.scale(&Rational::new(1.into(), 4.into()));
    Ok(&data.d_torsion - &(&data.p1_minus - &p_inst).scale(&quarter))
}

/// `|A|²` as used by the closed forms (the Frobenius norm).
pub fn norm_sq(a: &Mat3) -> CoefExpr {
    a.norm_sq()
}

/// `Λ` restricted to the columns that exist on a coframe of dimension `dim`
/// (only the first column is used in dimension 5).
pub fn effective_lambda(lambda: &Mat3, dim: usize) -> Mat3 {
    if dim == 5 {
        let mut l = lambda.clone();
        for row in l.0.iter_mut() {
            row[1] = CoefExpr::zero();
            row[2] = CoefExpr::zero();
        }
        l
    } else {
        lambda.clone()
    }
}

/// `Δe^{2f} + 2|A|²`, the coefficient of `−e^{−4f}ē^{1234}` in `dT̄`.
pub fn closed_torsion_defect(a_sq: &CoefExpr) -> CoefExpr {
    let lap = flat_laplacian(&CoefExpr::expf(2)).expect("second jets");
    &lap + &a_sq.scale(&int(2))
}

/// `8[F₂[f] + Δ₄f − (3/8)|A|² Δe^{−2f}]`, the `∇⁻` Pontryagin density.
pub fn minus_pontryagin_density(a_sq: &CoefExpr) -> CoefExpr {
    let lap = flat_laplacian(&CoefExpr::expf(-2)).expect("second jets");
    let eight = Rational::from_integer(8.into());
    &(&hessian2() + &p_laplacian4()).scale(&eight) - &(a_sq * &lap).scale(&Rational::from_integer(3.into()))
}

/// Closed form of the `D_Λ` residual:
/// `Δe^{2f} + 2|A|² + (α′/4)[8F₂ + 8Δ₄f − 3|A|²Δe^{−2f} + 4|ΛA|²]`.
pub fn expected_dlambda_residual(a: &Mat3, lambda: &Mat3, alpha_p: &CoefExpr) -> CoefExpr {
    let a_sq = a.norm_sq();
    let la = lambda.mul(a).norm_sq();
    let bracket = &minus_pontryagin_density(&a_sq) + &la.scale(&int(4));
    &closed_torsion_defect(&a_sq) + &(alpha_p * &bracket).scale(&Rational::new(1.into(), 4.into()))
}

/// Closed form of the `D_B` residual:
/// `Δe^{2f} + 2|A|² − (3α′/4)(|A|² − |B|²)Δe^{−2f}`.
pub fn expected_db_residual(a: &Mat3, b: &Mat3, alpha_p: &CoefExpr) -> CoefExpr {
    let lap = flat_laplacian(&CoefExpr::expf(-2)).expect("second jets");
    let diff = &a.norm_sq() - &b.norm_sq();
    &closed_torsion_defect(&a.norm_sq()) - &(&(alpha_p * &diff) * &lap).scale(&Rational::new(3.into(), 4.into()))
}

/// Closed form of the torsion: `T̄ = −2 *_H df + Σ_{k>4} dē^k ∧ ē^k`,
/// with `*_H` the Hodge star of the four base legs.
pub fn expected_torsion(c: &CoframeSpec) -> Result<FormExpr> {
    let n = c.dim();
    let mut t = base_hodge_star(&c.df()).scale_rat(&int(-2));
    for k in 5..=n {
        t = &t + &c.differentials()[k - 1].wedge(&FormExpr::basis(n, &[k]))?;
    }
    Ok(t)
}

/// `e^{2f}`-constant `d = √(3|A|²) / (2α)` of the Weierstrass profile
/// `u = α^{−2} e^{2f}`, read off from `u′² = 4u³ − 3(|A|²/α²)u`.
pub fn weierstrass_d(a_sq: f64, alpha: f64) -> f64 {
    (3.0 * a_sq).sqrt() / (2.0 * alpha)
}

/// `(e^{2f})′ + (3/4)α²|A|²(e^{−2f})′ − 2α²f′³` with `′ = ∂₁`.
pub fn solv4_lhs(a_sq: &CoefExpr) -> CoefExpr {
    let alpha2 = CoefExpr::param(ALPHA).pow(2);
    let f1 = CoefExpr::jet(&[1]);
    let first = (&f1 * &CoefExpr::expf(2)).scale(&int(2));
    let second = (&(&alpha2 * a_sq) * &(&f1 * &CoefExpr::expf(-2))).scale(&Rational::new((-3).into(), 2.into()));
    let third = (&alpha2 * &f1.pow(3)).scale(&int(-2));
    &(&first + &second) + &third
}

/// The same left-hand side written through `U = e^{2f}`:
/// `U′ U⁻³ (4U³ − 3α²|A|²U − α²U′²) / 4`.
pub fn solv4_lhs_u_form(a_sq: &CoefExpr) -> CoefExpr {
    let alpha2 = CoefExpr::param(ALPHA).pow(2);
    let u = CoefExpr::expf(2);
    let du = u.partial(1).expect("first jet");
    let inner = &(&u.pow(3).scale(&int(4)) - &(&(&alpha2 * a_sq) * &u).scale(&int(3))) - &(&alpha2 * &du.pow(2));
    (&du * &inner).mul_expf(-6).scale(&Rational::new(1.into(), 4.into()))
}

fn constant_part(e: &CoefExpr) -> CoefExpr {
    e.terms()
        .filter(|(m, _)| m.expf() == 0 && m.vars().iter().all(|(v, _)| matches!(v, Var::Param(_))))
        .map(|(m, c)| CoefExpr::from_term(m.clone(), c.clone()))
        .sum()
}

/// Reduce a `D_Λ` residual to one variable under `α′ = −α²` and
/// `2|A|² = α²|ΛA|²`: restrict to `x¹`, check that the jet-free part is
/// `2|A|² − α²|ΛA|²` and drop it.
pub fn reduce_onevar(residual: &CoefExpr, a: &Mat3, lambda: &Mat3) -> Result<CoefExpr> {
    let minus_alpha2 = -CoefExpr::param(ALPHA).pow(2);
    let sub = residual
        .substitute(&|v| match v {
            Var::Param(p) if &**p == ALPHA_PRIME => Some(minus_alpha2.clone()),
            _ => None,
        })
        .restrict_to_first_variable();
    let k = constant_part(&sub);
    let expected_k = &a.norm_sq().scale(&int(2)) - &(&CoefExpr::param(ALPHA).pow(2) * &lambda.mul(a).norm_sq());
    if k != expected_k {
        return Err(Error::ConstraintViolated(format!(
            "jet-free part {k} is not 2|A|² − α²|ΛA|² = {expected_k}"
        )));
    }
    if let Some(v) = expected_k.as_constant() {
        if v != Rational::from_integer(0.into()) {
            return Err(Error::ConstraintViolated(format!("2|A|² = α²|ΛA|² cannot hold: {v} ≠ 0")));
        }
    }
    Ok(&sub - &k)
}

/// The scalar-curvature identity `s = 8‖dφ‖² − (1/12)‖T‖² − 6δdφ` for
/// `φ = scale·f` on a 7-dimensional coframe; returns `lhs − rhs`.
/// `‖T‖²` sums over all ordered index triples and `δ = −*d*`.
pub fn scalar_identity_residual(c: &CoframeSpec, torsion: &FormExpr, phi_scale: i64) -> Result<CoefExpr> {
    if c.dim() != 7 {
        return Err(Error::DimensionMismatch(format!("scalar identity is 7-dimensional, got {}", c.dim())));
    }
    let s = scalar_curvature(&curvature(&levi_civita(c), c)?);
    let dphi = c.df().scale_rat(&Rational::from_integer(phi_scale.into()));
    let dphi_sq = dphi.inner(&dphi);
    let t_sq = torsion.inner(torsion).scale(&int(6));
    let codiff = -exterior_derivative(&dphi.hodge_star(), c)?.hodge_star().component(&[]);
    let rhs = &(&dphi_sq.scale(&int(8)) - &t_sq.scale(&Rational::new(1.into(), 12.into())))
        - &codiff.scale(&int(6));
    Ok(&s - &rhs)
}
