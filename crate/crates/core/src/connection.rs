//! Metric connections on an orthonormal coframe and their curvature.
//!
//! Conventions: `∇ ē_j = ω^s_j ⊗ ē_s`, curvature
//! `Ω^i_j = dω^i_j + Σ_k ω^i_k ∧ ω^k_j`, and
//! `R(ē_i, ē_j, ē_k, ē_l) = Ω^l_k(ē_i, ē_j)`.

use rayon::prelude::*;

use crate::diffring::{CoefExpr, Mat3, Rational};
use crate::error::{Error, Result};
use crate::exterior::{exterior_derivative, CoframeSpec, FormExpr};
use crate::frames::torus_bundle_structure;

/// A `dim × dim` matrix of forms of a fixed degree, 1-based indices.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    dim: usize,
    degree: usize,
    entries: Vec<FormExpr>,
}

impl FormMatrix {
    pub fn zero(dim: usize, degree: usize) -> Self {
        FormMatrix {
            dim,
            degree,
            entries: vec![FormExpr::zero(dim, degree); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The entry with upper index `i` and lower index `j`.
    pub fn get(&self, i: usize, j: usize) -> &FormExpr {
        &self.entries[(i - 1) * self.dim + (j - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, form: FormExpr) {
        assert_eq!(form.dim(), self.dim);
        let form = if form.is_zero() {
            FormExpr::zero(self.dim, self.degree)
        } else {
            assert_eq!(form.degree(), self.degree, "entry has the wrong degree");
            form
        };
        self.entries[(i - 1) * self.dim + (j - 1)] = form;
    }

    /// Set `(i, j)` to `form` and `(j, i)` to `−form`.
    pub fn set_antisymmetric(&mut self, i: usize, j: usize, form: FormExpr) {
        self.set(j, i, -&form);
        self.set(i, j, form);
    }

    /// Index pairs `(i, j)` in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.dim;
        (1..=n).flat_map(move |i| (1..=n).map(move |j| (i, j)))
    }

    /// Pairs `(i, j)` whose entries violate `X^i_j = −X^j_i`.
    pub fn antisymmetry_defects(&self) -> Vec<(usize, usize)> {
        self.indices()
            .filter(|&(i, j)| i <= j && !(self.get(i, j) + self.get(j, i)).is_zero())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FormExpr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&FormExpr) -> FormExpr) -> FormMatrix {
        FormMatrix {
            dim: self.dim,
            degree: self.degree,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    fn zip(&self, other: &FormMatrix, f: impl Fn(&FormExpr, &FormExpr) -> FormExpr) -> FormMatrix {
        assert_eq!(self.dim, other.dim);
        FormMatrix {
            dim: self.dim,
            degree: self.degree,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &FormMatrix) -> FormMatrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &FormMatrix) -> FormMatrix {
        self.zip(other, |a, b| a - b)
    }

    /// Remove the given legs both as matrix indices and as form legs.
    pub fn drop_legs(&self, legs: &[usize]) -> FormMatrix {
        let keep: Vec<usize> = (1..=self.dim).filter(|l| !legs.contains(l)).collect();
        let n = keep.len();
        let mut out = FormMatrix::zero(n, self.degree);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.set(a + 1, b + 1, self.get(i, j).drop_legs(legs));
            }
        }
        out
    }
}

/// Connection 1-forms `ω^i_j`.
pub type ConnectionForms = FormMatrix;
/// Curvature 2-forms `Ω^i_j`.
pub type CurvatureForms = FormMatrix;

/// Levi-Civita connection from the coframe form of Koszul's formula,
/// `ω^i_j(ē_k) = ½(dē^i(ē_j, ē_k) − dē^k(ē_i, ē_j) + dē^j(ē_k, ē_i))`.
pub fn levi_civita(c: &CoframeSpec) -> ConnectionForms {
    let n = c.dim();
    let de = c.differentials();
    let half = Rational::new(1.into(), 2.into());
    let mut out = FormMatrix::zero(n, 1);
    for i in 1..=n {
        for j in 1..=n {
            let mut form = FormExpr::zero(n, 1);
            for k in 1..=n {
                let v = &(&de[i - 1].component(&[j, k]) - &de[k - 1].component(&[i, j]))
                    + &de[j - 1].component(&[k, i]);
                if !v.is_zero() {
                    form = &form + &FormExpr::term(n, &[k], v.scale(&half));
                }
            }
            out.set(i, j, form);
        }
    }
    out
}

/// The matrix of 1-forms `(T)^i_j = Σ_k T(ē_i, ē_j, ē_k) ē^k`.
pub fn torsion_slice(t: &FormExpr) -> Result<ConnectionForms> {
    let n = t.dim();
    if t.degree() != 3 && !t.is_zero() {
        return Err(Error::DimensionMismatch(format!(
            "torsion must be a 3-form, got degree {}",
            t.degree()
        )));
    }
    let mut out = FormMatrix::zero(n, 1);
    if t.is_zero() {
        return Ok(out);
    }
    for i in 1..=n {
        for j in 1..=n {
            let mut form = FormExpr::zero(n, 1);
            for k in 1..=n {
                let v = t.component(&[i, j, k]);
                if !v.is_zero() {
                    form = &form + &FormExpr::term(n, &[k], v);
                }
            }
            out.set(i, j, form);
        }
    }
    Ok(out)
}

/// The connection `∇^±_X Y = ∇^g_X Y ± ½ T(X, Y, ·)` for `sign = ±1`.
/// With `ω^i_j(X) = g(∇_X ē_j, ē_i)` this reads `ω^± = ω^g ∓ ½ (T)`.
pub fn torsion_connection(lc: &ConnectionForms, t: &FormExpr, sign: i32) -> Result<ConnectionForms> {
    if t.dim() != lc.dim() {
        return Err(Error::DimensionMismatch(format!(
            "torsion on dimension {} for a connection on dimension {}",
            t.dim(),
            lc.dim()
        )));
    }
    let half = Rational::new((-sign.signum()).into(), 2.into());
    Ok(lc.add(&torsion_slice(t)?.map(|f| f.scale_rat(&half))))
}

/// `Ω^i_j = dω^i_j + Σ_k ω^i_k ∧ ω^k_j`, entries computed in parallel.
pub fn curvature(conn: &ConnectionForms, c: &CoframeSpec) -> Result<CurvatureForms> {
    let n = conn.dim();
    if n != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "connection on dimension {n} for coframe {} of dimension {}",
            c.label(),
            c.dim()
        )));
    }
    let pairs: Vec<(usize, usize)> = conn.indices().collect();
    let entries: Vec<FormExpr> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<FormExpr> {
            let mut out = exterior_derivative(conn.get(i, j), c)?;
            for k in 1..=n {
                let (a, b) = (conn.get(i, k), conn.get(k, j));
                if !a.is_zero() && !b.is_zero() {
                    out = &out + &a.wedge(b)?;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut out = FormMatrix::zero(n, 2);
    for ((i, j), form) in pairs.into_iter().zip(entries) {
        out.set(i, j, form);
    }
    Ok(out)
}

/// First structure equation residual `dē^i + Σ_j ω^i_j ∧ ē^j`.
pub fn first_structure_residual(conn: &ConnectionForms, c: &CoframeSpec) -> Result<Vec<FormExpr>> {
    let n = c.dim();
    (1..=n)
        .map(|i| {
            let mut r = c.differentials()[i - 1].clone();
            for j in 1..=n {
                r = &r + &conn.get(i, j).wedge(&FormExpr::basis(n, &[j]))?;
            }
            Ok(r)
        })
        .collect()
}

/// `8π² p_1 = Σ_{i<j} Ω^i_j ∧ Ω^i_j`; the factor `8π²` stays in the name
/// so that every coefficient is rational.
pub fn pontryagin4(curv: &CurvatureForms) -> Result<FormExpr> {
    let n = curv.dim();
    if n < 4 {
        return Err(Error::DimensionMismatch(format!("p1 needs dimension ≥ 4, got {n}")));
    }
    let mut out = FormExpr::zero(n, 4);
    for i in 1..=n {
        for j in i + 1..=n {
            let w = curv.get(i, j);
            if !w.is_zero() {
                out = &out + &w.wedge(w)?;
            }
        }
    }
    Ok(out)
}

/// `R(ē_i, ē_j, ē_k, ē_l) = Ω^l_k(ē_i, ē_j)`.
pub fn riemann(curv: &CurvatureForms, i: usize, j: usize, k: usize, l: usize) -> CoefExpr {
    curv.get(l, k).component(&[i, j])
}

/// `s = Σ_{i,j} Ω^i_j(ē_i, ē_j)` (positive on round spheres).
pub fn scalar_curvature(curv: &CurvatureForms) -> CoefExpr {
    let n = curv.dim();
    let mut s = CoefExpr::zero();
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                s += &curv.get(i, j).component(&[i, j]);
            }
        }
    }
    s
}

/// The quaternionic-block connection `D_Λ`. With
/// `ℓ_r = Σ_s λ_{rs} ē^{4+s}` (dimension 7) or `ℓ_r = λ_{r1} ē^5`
/// (dimension 5):
/// `ω^1_2 = −ω^3_4 = ℓ_1`, `ω^1_3 = ω^2_4 = ℓ_2`, `ω^1_4 = −ω^2_3 = ℓ_3`.
pub fn build_instanton_dlambda(lambda: &Mat3, c: &CoframeSpec) -> Result<ConnectionForms> {
    let n = c.dim();
    let cols = match n {
        7 => 3,
        5 => 1,
        _ => {
            return Err(Error::BadParams(format!(
                "D_Λ is defined in dimensions 5 and 7, not {n}"
            )))
        }
    };
    let ell = |r: usize| -> FormExpr {
        let mut f = FormExpr::zero(n, 1);
        for s in 1..=cols {
            f = &f + &FormExpr::term(n, &[4 + s], lambda.at(r, s).clone());
        }
        f
    };
    let mut w = FormMatrix::zero(n, 1);
    let (l1, l2, l3) = (ell(1), ell(2), ell(3));
    w.set_antisymmetric(1, 2, l1.clone());
    w.set_antisymmetric(3, 4, -&l1);
    w.set_antisymmetric(1, 3, l2.clone());
    w.set_antisymmetric(2, 4, l2);
    w.set_antisymmetric(1, 4, l3.clone());
    w.set_antisymmetric(2, 3, -&l3);
    Ok(w)
}

/// The coframe `K_B`: the ambient coframe with its fiber structure rows
/// replaced by the rows of `B` (same dimension, same weights).
pub fn replace_fiber_matrix(b: &Mat3, c: &CoframeSpec) -> Result<CoframeSpec> {
    let fibers = c.dim().checked_sub(4).filter(|k| (1..=3).contains(k)).ok_or_else(|| {
        Error::BadParams(format!("coframe {} is not a torus bundle over ℝ⁴", c.label()))
    })?;
    let rows: Vec<[CoefExpr; 3]> = (1..=fibers).map(|i| b.row(i)).collect();
    CoframeSpec::new(
        format!("{}[B]", c.label()),
        c.dim(),
        torus_bundle_structure(&rows),
        c.weights().to_vec(),
    )
}

/// The `∇⁻` connection of a torus-bundle coframe.
pub fn minus_connection(c: &CoframeSpec) -> Result<ConnectionForms> {
    let t = crate::gstruct::torsion_for(c)?;
    torsion_connection(&levi_civita(c), &t, -1)
}

/// `D_B`: the `∇⁻` connection forms computed with `A` replaced by `B`.
/// The forms only have base legs, so they are used unchanged on the
/// ambient coframe. `B` may be singular.
pub fn build_db(b: &Mat3, c: &CoframeSpec) -> Result<ConnectionForms> {
    let kb = replace_fiber_matrix(b, c)?;
    let conn = minus_connection(&kb)?;
    debug_assert!(conn
        .indices()
        .all(|(i, j)| !conn.get(i, j).touches_legs(&(5..=c.dim()).collect::<Vec<_>>())));
    Ok(conn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffring::fd;
    use crate::frames::{build_coframe, FrameCatalogId};

    fn flat(dim: usize) -> CoframeSpec {
        CoframeSpec::new("flat", dim, vec![FormExpr::zero(dim, 2); dim], vec![0; dim]).unwrap()
    }

    #[test]
    fn flat_coframe_has_trivial_connection() {
        let c = flat(7);
        let lc = levi_civita(&c);
        assert!(lc.is_zero());
        let curv = curvature(&lc, &c).unwrap();
        assert!(curv.is_zero());
        assert!(pontryagin4(&curv).unwrap().is_zero());
        assert!(scalar_curvature(&curv).is_zero());
    }

    #[test]
    fn levi_civita_is_torsion_free_and_metric() {
        let c = build_coframe(&FrameCatalogId::KA(Mat3::symbolic("a"))).unwrap();
        let lc = levi_civita(&c);
        assert!(lc.antisymmetry_defects().is_empty());
        for r in first_structure_residual(&lc, &c).unwrap() {
            assert!(r.is_zero(), "{r}");
        }
    }

    #[test]
    fn dlambda_entries() {
        let c = build_coframe(&FrameCatalogId::KA(Mat3::identity())).unwrap();
        let l = Mat3::symbolic("lam");
        let w = build_instanton_dlambda(&l, &c).unwrap();
        let expected = &(&FormExpr::term(7, &[5], CoefExpr::param("lam21"))
            + &FormExpr::term(7, &[6], CoefExpr::param("lam22")))
            + &FormExpr::term(7, &[7], CoefExpr::param("lam23"));
        assert_eq!(*w.get(1, 3), expected);
        assert_eq!(*w.get(4, 2), -&expected);
        assert_eq!(*w.get(2, 3), -w.get(1, 4));
        assert!(w.antisymmetry_defects().is_empty());
        let h3 = build_coframe(&FrameCatalogId::H3 { a: CoefExpr::one() }).unwrap();
        assert!(build_instanton_dlambda(&l, &h3).is_err());
    }

    #[test]
    fn db_with_zero_matrix_keeps_gradient_blocks() {
        let c = build_coframe(&FrameCatalogId::KA(Mat3::identity())).unwrap();
        let w = build_db(&Mat3::zero(), &c).unwrap();
        for i in 1..=7 {
            for j in 5..=7 {
                assert!(w.get(i, j).is_zero());
            }
        }
        let expected = FormExpr::term(7, &[1], fd(2).mul_expf(-1));
        assert_eq!(w.get(1, 2).component(&[1]), expected.component(&[1]));
    }

    #[test]
    fn sphere_like_sign_convention() {
        // Ω^1_2 = ē^{12} contributes +2 to s.
        let mut curv = FormMatrix::zero(4, 2);
        curv.set_antisymmetric(1, 2, FormExpr::basis(4, &[1, 2]));
        assert_eq!(scalar_curvature(&curv), CoefExpr::int(2));
        assert_eq!(riemann(&curv, 1, 2, 2, 1), CoefExpr::int(1));
    }
}
