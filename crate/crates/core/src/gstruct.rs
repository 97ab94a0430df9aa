//! G2, SU(3) and SU(2) structures on the conformal torus-bundle coframes.
//!
//! All structures are written with constant coefficients in the barred
//! basis, e.g. `Θ̄ = ω̄_1∧ē^7 + ω̄_2∧ē^5 − ω̄_3∧ē^6 + ē^{567}` where
//! `ω̄_s` has the same coefficients on `ē^{ij}` as `ω_s` on `e^{ij}`.

use crate::connection::CurvatureForms;
use crate::diffring::{int, CoefExpr, Rational};
use crate::error::{Error, Result};
use crate::exterior::{base_hodge_star, exterior_derivative, omega, CoframeSpec, FormExpr};

/// `Θ̄` and its dual on a seven-dimensional coframe.
#[derive(Clone, Debug)]
pub struct G2Structure {
    pub coframe: CoframeSpec,
    pub theta: FormExpr,
    pub theta_dual: FormExpr,
}

pub fn standard_theta() -> FormExpr {
    let e = |i: usize| FormExpr::basis(7, &[i]);
    let w = |s: usize| omega(7, s);
    let t = &(&w(1).wedge(&e(7)).unwrap() + &w(2).wedge(&e(5)).unwrap()) - &w(3).wedge(&e(6)).unwrap();
    &t + &FormExpr::basis(7, &[5, 6, 7])
}

pub fn build_g2(c: &CoframeSpec) -> Result<G2Structure> {
    G2Structure::from_theta(c, standard_theta())
}

impl G2Structure {
    /// Wrap an arbitrary 3-form (used for deliberately broken structures).
    pub fn from_theta(c: &CoframeSpec, theta: FormExpr) -> Result<G2Structure> {
        if c.dim() != 7 || theta.dim() != 7 || theta.degree() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "a G2 structure needs a 3-form on a 7-dimensional coframe, got dimension {}",
                c.dim()
            )));
        }
        Ok(G2Structure {
            coframe: c.clone(),
            theta_dual: theta.hodge_star(),
            theta,
        })
    }
}

/// `(d*Θ̄ − 2df∧*Θ̄, dΘ̄∧Θ̄)`; both vanish exactly when the structure is
/// conformally co-calibrated of pure type with Lee form `2df`.
pub fn check_integrable_pure(g: &G2Structure) -> Result<(FormExpr, FormExpr)> {
    let c = &g.coframe;
    let df2 = c.df().scale_rat(&int(2));
    let first = &exterior_derivative(&g.theta_dual, c)? - &df2.wedge(&g.theta_dual)?;
    let second = exterior_derivative(&g.theta, c)?.wedge(&g.theta)?;
    Ok((first, second))
}

/// `T̄ = −*dΘ̄ + *(θ̄∧Θ̄)` with `θ̄ = 2df`.
pub fn torsion_3form(g: &G2Structure) -> Result<FormExpr> {
    let (r1, r2) = check_integrable_pure(g)?;
    if !r1.is_zero() || !r2.is_zero() {
        return Err(Error::NotIntegrable(format!(
            "d*Θ − 2df∧*Θ = {r1}; dΘ∧Θ = {r2}"
        )));
    }
    let c = &g.coframe;
    let dtheta = exterior_derivative(&g.theta, c)?;
    let lee = c.df().scale_rat(&int(2));
    Ok(&lee.wedge(&g.theta)?.hodge_star() - &dtheta.hodge_star())
}

/// Labelled scalar residuals of an instanton test.
#[derive(Clone, Debug, Default)]
pub struct InstantonResidual {
    pub entries: Vec<(String, CoefExpr)>,
}

impl InstantonResidual {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|(_, c)| c.is_zero())
    }

    pub fn nonzero(&self) -> impl Iterator<Item = &(String, CoefExpr)> {
        self.entries.iter().filter(|(_, c)| !c.is_zero())
    }
}

/// `Σ_{k,l} Ω^i_j(ē_k, ē_l) Θ̄(ē_k, ē_l, ē_m)` for every `(i, j, m)`.
pub fn g2_instanton_residual(curv: &CurvatureForms, g: &G2Structure) -> Result<InstantonResidual> {
    if curv.dim() != 7 {
        return Err(Error::DimensionMismatch(format!(
            "curvature on dimension {} for a G2 structure",
            curv.dim()
        )));
    }
    let mut out = InstantonResidual::default();
    for (i, j) in curv.indices() {
        let w = curv.get(i, j);
        for m in 1..=7 {
            let mut acc = CoefExpr::zero();
            for (b, coef) in w.components() {
                let kl = b.indices();
                let t = g.theta.component(&[kl[0], kl[1], m]);
                if !t.is_zero() {
                    acc += &(coef * &t);
                }
            }
            out.entries.push((format!("({i},{j};{m})"), acc.scale(&int(2))));
        }
    }
    Ok(out)
}

/// `Σ_{i,j} Ω^i_j Θ̄(ē_i, ē_j, ē_k)` for every `k`: zero iff the curvature
/// takes values in `g₂` (holonomy contained in G2).
pub fn g2_holonomy_residual(curv: &CurvatureForms, g: &G2Structure) -> Result<InstantonResidual> {
    if curv.dim() != 7 {
        return Err(Error::DimensionMismatch(format!(
            "curvature on dimension {} for a G2 structure",
            curv.dim()
        )));
    }
    let mut out = InstantonResidual::default();
    for k in 1..=7 {
        let mut acc = FormExpr::zero(7, 2);
        for (i, j) in curv.indices() {
            let t = g.theta.component(&[i, j, k]);
            if !t.is_zero() {
                acc = &acc + &curv.get(i, j).scale(&t);
            }
        }
        for (b, c) in acc.components() {
            out.entries.push((format!("({k};{:?})", b.indices()), c.clone()));
        }
    }
    Ok(out)
}

/// The almost-contact endomorphism on basis vectors: `ψē_k = sign · ē_{idx}`.
/// Fixed by `ω̄_1(X, Y) = g(X, ψY)`.
pub const PSI: [(i8, usize); 5] = [(-1, 2), (1, 1), (-1, 4), (1, 3), (0, 5)];

fn psi(k: usize) -> Option<(i8, usize)> {
    let (s, idx) = PSI[k - 1];
    (s != 0).then_some((s, idx))
}

/// `(η, ω̄_1, ω̄_2, ω̄_3)` on a five-dimensional coframe.
#[derive(Clone, Debug)]
pub struct SU2Structure {
    pub coframe: CoframeSpec,
    pub eta: FormExpr,
    pub omegas: [FormExpr; 3],
}

pub fn build_su2(c: &CoframeSpec) -> Result<SU2Structure> {
    if c.dim() != 5 {
        return Err(Error::DimensionMismatch(format!(
            "an SU(2) structure needs dimension 5, got {}",
            c.dim()
        )));
    }
    let de5 = c.structure(5);
    if de5.touches_legs(&[5]) {
        return Err(Error::NotAntiSelfDual(format!("de^5 = {de5} has a vertical leg")));
    }
    let sd = &base_hodge_star(de5) + de5;
    if !sd.is_zero() {
        return Err(Error::NotAntiSelfDual(format!("self-dual part {sd}")));
    }
    Ok(SU2Structure {
        coframe: c.clone(),
        eta: FormExpr::basis(5, &[5]),
        omegas: [omega(5, 1), omega(5, 2), omega(5, 3)],
    })
}

impl SU2Structure {
    /// `dω̄_s − 2df∧ω̄_s` for `s = 1, 2, 3`, then `*_H dη + dη`.
    pub fn structure_residuals(&self) -> Result<Vec<FormExpr>> {
        let c = &self.coframe;
        let df2 = c.df().scale_rat(&int(2));
        let mut out = Vec::new();
        for w in &self.omegas {
            out.push(&exterior_derivative(w, c)? - &df2.wedge(w)?);
        }
        let deta = exterior_derivative(&self.eta, c)?;
        out.push(&base_hodge_star(&deta) + &deta);
        Ok(out)
    }

    /// `d^ψ f (X) = −df(ψX)`.
    pub fn dpsi_f(&self) -> FormExpr {
        let df = self.coframe.df();
        let mut out = FormExpr::zero(5, 1);
        for k in 1..=5 {
            if let Some((s, idx)) = psi(k) {
                let v = df.component(&[idx]).scale(&int(-(s as i64)));
                out = &out + &FormExpr::term(5, &[k], v);
            }
        }
        out
    }

    /// `T̄ = η∧dη + 2 d^ψf∧ω̄_1`.
    pub fn torsion(&self) -> Result<FormExpr> {
        let deta = exterior_derivative(&self.eta, &self.coframe)?;
        let t = self.eta.wedge(&deta)?;
        Ok(&t + &self.dpsi_f().wedge(&self.omegas[0])?.scale_rat(&int(2)))
    }
}

/// Component test for the SU(2) instanton condition: for each `Ω^i_j` the
/// parts along `ω̄_1, ω̄_2, ω̄_3` and the `ē^k∧ē^5` legs.
pub fn su2_instanton_residual(curv: &CurvatureForms, s: &SU2Structure) -> Result<InstantonResidual> {
    if curv.dim() != 5 {
        return Err(Error::DimensionMismatch(format!(
            "curvature on dimension {} for an SU(2) structure",
            curv.dim()
        )));
    }
    let half = Rational::new(1.into(), 2.into());
    let mut out = InstantonResidual::default();
    for (i, j) in curv.indices() {
        let w = curv.get(i, j);
        for (n, om) in s.omegas.iter().enumerate() {
            out.entries
                .push((format!("({i},{j};w{})", n + 1), w.inner(om).scale(&half)));
        }
        for k in 1..=4 {
            out.entries.push((format!("({i},{j};{k}5)"), w.component(&[k, 5])));
        }
    }
    Ok(out)
}

/// Holonomy in SU(2): `Σ_{i,j} Ω^i_j ω̄_s(ē_i, ē_j)` for `s = 1, 2, 3` and
/// every `Ω^i_5`, all of which vanish iff the curvature endomorphisms fix
/// `ē_5` and commute with the `ω̄_s`.
pub fn su2_holonomy_residual(curv: &CurvatureForms, s: &SU2Structure) -> Result<InstantonResidual> {
    if curv.dim() != 5 {
        return Err(Error::DimensionMismatch(format!(
            "curvature on dimension {} for an SU(2) structure",
            curv.dim()
        )));
    }
    let mut out = InstantonResidual::default();
    for (n, om) in s.omegas.iter().enumerate() {
        let mut acc = FormExpr::zero(5, 2);
        for (i, j) in curv.indices() {
            let w = om.component(&[i, j]);
            if !w.is_zero() {
                acc = &acc + &curv.get(i, j).scale(&w);
            }
        }
        for (b, c) in acc.components() {
            out.entries.push((format!("(w{};{:?})", n + 1, b.indices()), c.clone()));
        }
    }
    for i in 1..=5 {
        for (b, c) in curv.get(i, 5).components() {
            out.entries.push((format!("({i},5;{:?})", b.indices()), c.clone()));
        }
    }
    Ok(out)
}

/// The instanton condition written directly with `ψ`:
/// `Ω(ψē_k, ψē_l) − Ω(ē_k, ē_l)` for `k < l` and `Σ_k Ω(ē_k, ψē_k)`.
pub fn su2_instanton_residual_psi(curv: &CurvatureForms) -> InstantonResidual {
    let mut out = InstantonResidual::default();
    let eval = |w: &FormExpr, a: Option<(i8, usize)>, b: Option<(i8, usize)>| -> CoefExpr {
        match (a, b) {
            (Some((sa, ia)), Some((sb, ib))) => w.component(&[ia, ib]).scale(&int((sa * sb) as i64)),
            _ => CoefExpr::zero(),
        }
    };
    for (i, j) in curv.indices() {
        let w = curv.get(i, j);
        for k in 1..=5 {
            for l in k + 1..=5 {
                let r = &eval(w, psi(k), psi(l)) - &w.component(&[k, l]);
                out.entries.push((format!("({i},{j};psi{k}{l})"), r));
            }
        }
        let trace: CoefExpr = (1..=5).map(|k| eval(w, Some((1, k)), psi(k))).sum();
        out.entries.push((format!("({i},{j};trace)"), trace));
    }
    out
}

/// `(F̄, Ψ̄⁺, Ψ̄⁻)` on a six-dimensional coframe.
#[derive(Clone, Debug)]
pub struct SU3Structure {
    pub coframe: CoframeSpec,
    pub f: FormExpr,
    pub psi_plus: FormExpr,
    pub psi_minus: FormExpr,
}

pub fn build_su3(c: &CoframeSpec) -> Result<SU3Structure> {
    if c.dim() != 6 {
        return Err(Error::DimensionMismatch(format!(
            "an SU(3) structure needs dimension 6, got {}",
            c.dim()
        )));
    }
    let e = |i: usize| FormExpr::basis(6, &[i]);
    let w = |s: usize| omega(6, s);
    let wedge = |a: &FormExpr, b: &FormExpr| a.wedge(b).expect("same coframe");
    Ok(SU3Structure {
        coframe: c.clone(),
        f: &w(1) + &FormExpr::basis(6, &[5, 6]),
        psi_plus: &wedge(&w(2), &e(5)) - &wedge(&w(3), &e(6)),
        psi_minus: &wedge(&w(2), &e(6)) + &wedge(&w(3), &e(5)),
    })
}

impl SU3Structure {
    /// `d(F̄²) − 2df∧F̄²` and `dΨ̄⁻ − 2df∧Ψ̄⁻`.
    pub fn structure_residuals(&self) -> Result<Vec<FormExpr>> {
        let c = &self.coframe;
        let df2 = c.df().scale_rat(&int(2));
        let f2 = self.f.wedge(&self.f)?;
        Ok(vec![
            &exterior_derivative(&f2, c)? - &df2.wedge(&f2)?,
            &exterior_derivative(&self.psi_minus, c)? - &df2.wedge(&self.psi_minus)?,
        ])
    }
}

/// Add an identically zero seventh leg to a six-dimensional torus bundle.
fn lift_to_seven(c: &CoframeSpec) -> Result<CoframeSpec> {
    let mut structure: Vec<FormExpr> = (1..=c.dim()).map(|k| c.structure(k).lift(7)).collect();
    structure.push(FormExpr::zero(7, 2));
    let mut weights = c.weights().to_vec();
    weights.push(0);
    CoframeSpec::new(format!("{}+e7", c.label()), 7, structure, weights)
}

/// The torsion 3-form of the structure that lives on `c`: the G2 torsion in
/// dimension 7, the SU(2) torsion in dimension 5, and in dimension 6 the G2
/// torsion of the trivial circle extension (which has no leg along it).
pub fn torsion_for(c: &CoframeSpec) -> Result<FormExpr> {
    match c.dim() {
        7 => torsion_3form(&build_g2(c)?),
        5 => build_su2(c)?.torsion(),
        6 => {
            let t = torsion_3form(&build_g2(&lift_to_seven(c)?)?)?;
            if t.touches_legs(&[7]) {
                return Err(Error::NotIntegrable("lifted torsion has a leg along e^7".into()));
            }
            Ok(t.drop_legs(&[7]))
        }
        n => Err(Error::DimensionMismatch(format!("no torsion structure in dimension {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffring::Mat3;
    use crate::exterior::sigma;
    use crate::frames::{build_coframe, FrameCatalogId};

    fn ka() -> CoframeSpec {
        build_coframe(&FrameCatalogId::KA(Mat3::symbolic("a"))).unwrap()
    }

    #[test]
    fn theta_normalisation() {
        let g = build_g2(&ka()).unwrap();
        let top = g.theta.wedge(&g.theta_dual).unwrap();
        assert_eq!(top, FormExpr::term(7, &[1, 2, 3, 4, 5, 6, 7], CoefExpr::int(7)));
    }

    #[test]
    fn theta_dual_matches_display() {
        let g = build_g2(&ka()).unwrap();
        let w = |s| omega(7, s);
        let e = |i: &[usize]| FormExpr::basis(7, i);
        let expected = &(&(&w(1).wedge(&e(&[5, 6])).unwrap() + &w(2).wedge(&e(&[6, 7])).unwrap())
            + &w(3).wedge(&e(&[5, 7])).unwrap())
            + &w(1).wedge(&w(1)).unwrap().scale_rat(&Rational::new(1.into(), 2.into()));
        assert_eq!(g.theta_dual, expected);
        assert_eq!(g.theta_dual.hodge_star(), g.theta);
    }

    #[test]
    fn pure_type_on_symbolic_ka() {
        let g = build_g2(&ka()).unwrap();
        let (a, b) = check_integrable_pure(&g).unwrap();
        assert!(a.is_zero(), "{a}");
        assert!(b.is_zero(), "{b}");
    }

    #[test]
    fn sign_flips_keep_pure_type() {
        // σ_i∧ω_j = 0 makes both residuals blind to the signs of the terms
        let c = ka();
        let e6 = FormExpr::basis(7, &[6]);
        let flipped = &standard_theta() + &omega(7, 3).wedge(&e6).unwrap().scale_rat(&int(2));
        let (first, second) = check_integrable_pure(&G2Structure::from_theta(&c, flipped).unwrap()).unwrap();
        assert!(first.is_zero() && second.is_zero());
    }

    #[test]
    fn anti_self_dual_theta_is_not_pure() {
        let c = ka();
        let e = |i: usize| FormExpr::basis(7, &[i]);
        let bad = &(&(&sigma(7, 1).wedge(&e(7)).unwrap() + &sigma(7, 2).wedge(&e(5)).unwrap())
            - &sigma(7, 3).wedge(&e(6)).unwrap())
            + &FormExpr::basis(7, &[5, 6, 7]);
        let g = G2Structure::from_theta(&c, bad).unwrap();
        let (_, second) = check_integrable_pure(&g).unwrap();
        assert!(!second.is_zero());
        assert!(matches!(torsion_3form(&g), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn psi_matches_f() {
        // ω̄_1(X, Y) = g(X, ψY) on all horizontal basis pairs
        let f = omega(5, 1);
        for x in 1..=5 {
            for y in 1..=5 {
                let lhs = if x == y { CoefExpr::zero() } else { f.component(&[x, y]) };
                let rhs = match psi(y) {
                    Some((s, idx)) if idx == x => CoefExpr::int(s as i64),
                    _ => CoefExpr::zero(),
                };
                assert_eq!(lhs, rhs, "({x},{y})");
            }
        }
    }

    #[test]
    fn self_dual_contact_form_is_rejected() {
        let mut structure = vec![FormExpr::zero(5, 2); 5];
        structure[4] = omega(5, 1);
        let c = CoframeSpec::new("sd", 5, structure, vec![1, 1, 1, 1, 0]).unwrap();
        assert!(matches!(build_su2(&c), Err(Error::NotAntiSelfDual(_))));
        let mut structure = vec![FormExpr::zero(5, 2); 5];
        structure[4] = sigma(5, 2);
        let c = CoframeSpec::new("asd", 5, structure, vec![1, 1, 1, 1, 0]).unwrap();
        assert!(build_su2(&c).is_ok());
    }

    /// Rank of a list of rational vectors.
    fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
        use num_traits::Zero;
        let cols = rows.first().map_or(0, Vec::len);
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && !rows[i][c].is_zero() {
                    let k = &rows[i][c] / &rows[r][c];
                    for j in 0..cols {
                        let v = &rows[r][j] * &k;
                        rows[i][j] -= v;
                    }
                }
            }
            r += 1;
        }
        r
    }

    /// Coefficient vector of a residual that is linear in the ten symbols p_kl.
    fn linear_coeffs(e: &CoefExpr) -> Vec<Rational> {
        use num_traits::Zero;
        let mut v = vec![Rational::zero(); 10];
        let mut n = 0;
        for k in 1..=5 {
            for l in k + 1..=5 {
                let name = format!("p{k}{l}");
                v[n] = e
                    .substitute(&|var| match var {
                        crate::diffring::Var::Param(p) if **p == *name => Some(CoefExpr::one()),
                        crate::diffring::Var::Param(_) => Some(CoefExpr::zero()),
                        _ => None,
                    })
                    .as_constant()
                    .unwrap();
                n += 1;
            }
        }
        v
    }

    #[test]
    fn psi_condition_is_equivalent_to_component_test() {
        let mut w = FormExpr::zero(5, 2);
        for k in 1..=5 {
            for l in k + 1..=5 {
                w = &w + &FormExpr::term(5, &[k, l], CoefExpr::param(&format!("p{k}{l}")));
            }
        }
        let mut curv = CurvatureForms::zero(5, 2);
        curv.set(1, 2, w);
        let mut structure = vec![FormExpr::zero(5, 2); 5];
        structure[4] = sigma(5, 1);
        let s = build_su2(&CoframeSpec::new("h", 5, structure, vec![1, 1, 1, 1, 0]).unwrap()).unwrap();
        let comp: Vec<_> = su2_instanton_residual(&curv, &s)
            .unwrap()
            .entries
            .into_iter()
            .filter(|(n, _)| n.starts_with("(1,2;"))
            .map(|(_, e)| linear_coeffs(&e))
            .collect();
        let direct: Vec<_> = su2_instanton_residual_psi(&curv)
            .entries
            .into_iter()
            .filter(|(n, _)| n.starts_with("(1,2;"))
            .map(|(_, e)| linear_coeffs(&e))
            .collect();
        // both cut out the 3-dimensional space spanned by σ̄_1, σ̄_2, σ̄_3
        assert_eq!(rank(comp.clone()), 7);
        assert_eq!(rank(direct.clone()), 7);
        assert_eq!(rank(comp.into_iter().chain(direct).collect()), 7);
    }

    #[test]
    fn su3_relations_on_h5() {
        let c = build_coframe(&FrameCatalogId::H5 { a: CoefExpr::param("a"), b: CoefExpr::param("b") }).unwrap();
        let s = build_su3(&c).unwrap();
        for r in s.structure_residuals().unwrap() {
            assert!(r.is_zero(), "{r}");
        }
        assert!(s.f.wedge(&s.psi_plus).unwrap().is_zero());
        let f3 = s.f.wedge(&s.f).unwrap().wedge(&s.f).unwrap();
        assert!(!f3.is_zero());
    }
}
