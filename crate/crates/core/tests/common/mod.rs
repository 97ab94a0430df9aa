//! Hand-entered connection and curvature tables on `K_A`, plus random
//! generators shared by the property suites.
#![allow(dead_code)]

use heterotic_core::connection::{curvature, first_structure_residual, levi_civita, torsion_connection};
use heterotic_core::diffring::{int, Mat3};
use heterotic_core::exterior::{exterior_derivative, hodge_star, sigma};
use heterotic_core::gstruct::torsion_for;
use proptest::prelude::*;
use heterotic_core::frames::{build_coframe, FrameCatalogId};
use heterotic_core::{CoefExpr, CoframeSpec, FormExpr};

pub const DIM: usize = 7;

pub fn f(i: u8) -> CoefExpr {
    CoefExpr::jet(&[i])
}

pub fn ff(i: u8, j: u8) -> CoefExpr {
    CoefExpr::jet(&[i, j])
}

pub fn a(i: usize, j: usize) -> CoefExpr {
    CoefExpr::param(&format!("a{i}{j}"))
}

pub fn lam(i: usize, j: usize) -> CoefExpr {
    CoefExpr::param(&format!("lam{i}{j}"))
}

pub fn symbolic_ka() -> CoframeSpec {
    build_coframe(&FrameCatalogId::KA(Mat3::symbolic("a"))).unwrap()
}

/// `Σ c_k ē^k`.
pub fn one_form(terms: &[(CoefExpr, usize)]) -> FormExpr {
    terms
        .iter()
        .fold(FormExpr::zero(DIM, 1), |acc, (c, k)| &acc + &FormExpr::term(DIM, &[*k], c.clone()))
}

pub fn e2(i: usize, j: usize) -> FormExpr {
    FormExpr::basis(DIM, &[i, j])
}

pub fn sig(s: usize) -> FormExpr {
    sigma(DIM, s)
}

pub fn sum(terms: Vec<CoefExpr>) -> CoefExpr {
    terms.into_iter().sum()
}

fn x2(c: &CoefExpr) -> CoefExpr {
    c.scale(&int(2))
}

/// Column inner product `Σ_m a_{mr} a_{ms}`.
pub fn col(r: usize, s: usize) -> CoefExpr {
    (1..=3).map(|m| &a(m, r) * &a(m, s)).sum()
}

/// `e^{−2f}[x + y e^{−2f}]`.
fn br(x: CoefExpr, y: CoefExpr) -> CoefExpr {
    &x.mul_expf(-2) + &y.mul_expf(-4)
}

fn lin2(terms: Vec<(CoefExpr, FormExpr)>) -> FormExpr {
    terms
        .into_iter()
        .fold(FormExpr::zero(DIM, 2), |acc, (c, w)| &acc + &w.scale(&c))
}

/// The displayed `(ω⁻)^i_j` for `i < j`; `None` for entries shown as zero.
pub fn omega_minus(i: usize, j: usize) -> Option<FormExpr> {
    let ef = |w: FormExpr| w.map_coeffs(|c| c.mul_expf(-1));
    let ef2 = |w: FormExpr| w.map_coeffs(|c| c.mul_expf(-2));
    let base12 = || ef(one_form(&[(f(2), 1), (-f(1), 2), (f(4), 3), (-f(3), 4)]));
    let base13 = || ef(one_form(&[(f(3), 1), (-f(4), 2), (-f(1), 3), (f(2), 4)]));
    let base14 = || ef(one_form(&[(f(4), 1), (f(3), 2), (-f(2), 3), (-f(1), 4)]));
    Some(match (i, j) {
        (1, 2) | (3, 4) => base12(),
        (1, 3) => base13(),
        (2, 4) => -&base13(),
        (1, 4) | (2, 3) => base14(),
        (1..=4, 5..=7) => {
            let r = j - 4;
            let terms = match i {
                1 => vec![(-a(r, 1), 2), (-a(r, 2), 3), (-a(r, 3), 4)],
                2 => vec![(a(r, 1), 1), (a(r, 3), 3), (-a(r, 2), 4)],
                3 => vec![(a(r, 2), 1), (-a(r, 3), 2), (a(r, 1), 4)],
                _ => vec![(a(r, 3), 1), (a(r, 2), 2), (-a(r, 1), 3)],
            };
            ef2(one_form(&terms))
        }
        _ => return None,
    })
}

/// `(Ω⁻)^i_j` for `i < j` exactly as displayed, misprint included.
pub fn curvature_minus_printed(i: usize, j: usize) -> FormExpr {
    let sq = |k: u8| f(k).pow(2);
    let pr = |k: u8, l: u8| x2(&(&f(k) * &f(l)));
    // second-order blocks shared by several entries
    let d12_34 = || sum(vec![ff(1, 1), ff(2, 2), x2(&sq(3)), x2(&sq(4))]);
    let d34_12 = || sum(vec![ff(3, 3), ff(4, 4), x2(&sq(1)), x2(&sq(2))]);
    let d13_24 = || sum(vec![ff(1, 1), ff(3, 3), x2(&sq(2)), x2(&sq(4))]);
    let d24_13 = || sum(vec![ff(2, 2), ff(4, 4), x2(&sq(1)), x2(&sq(3))]);
    let d14_23 = || sum(vec![ff(1, 1), ff(4, 4), x2(&sq(2)), x2(&sq(3))]);
    let d23_14 = || sum(vec![ff(2, 2), ff(3, 3), x2(&sq(1)), x2(&sq(4))]);
    let m14m = || sum(vec![ff(1, 4), -ff(2, 3), -pr(1, 4), pr(2, 3)]);
    let m14p = || sum(vec![ff(1, 4), ff(2, 3), -pr(1, 4), -pr(2, 3)]);
    let m13p = || sum(vec![ff(1, 3), ff(2, 4), -pr(1, 3), -pr(2, 4)]);
    let m13m = || sum(vec![ff(1, 3), -ff(2, 4), -pr(1, 3), pr(2, 4)]);
    let m12m = || sum(vec![ff(1, 2), -ff(3, 4), -pr(1, 2), pr(3, 4)]);
    let m12p = || sum(vec![ff(1, 2), ff(3, 4), -pr(1, 2), -pr(3, 4)]);
    let c = |r, s| col(r, s);
    let cc = |r, s| &col(r, r) + &col(s, s);
    match (i, j) {
        (1, 2) => lin2(vec![
            (-br(d12_34(), c(1, 1)), e2(1, 2)),
            (br(m14m(), -c(1, 2)), sig(2)),
            (-br(m13p(), c(1, 3)), sig(3)),
            (-br(d34_12(), cc(2, 3)), e2(3, 4)),
        ]),
        (1, 3) => lin2(vec![
            (-br(m14p(), c(1, 2)), sig(1)),
            (-br(d13_24(), c(2, 2)), e2(1, 3)),
            (br(m12m(), c(2, 3)), sig(3)),
            (br(d24_13(), cc(1, 3)), e2(2, 4)),
        ]),
        (1, 4) => lin2(vec![
            (br(m13m(), -c(1, 3)), sig(1)),
            (-br(m12p(), c(2, 3)), sig(2)),
            (-br(d14_23(), c(3, 3)), e2(1, 4)),
            (-br(d23_14(), cc(1, 2)), e2(2, 3)),
        ]),
        (2, 3) => lin2(vec![
            (br(m13m(), c(1, 3)), sig(1)),
            (-br(m12p(), -c(2, 3)), sig(2)),
            (-br(d14_23(), cc(1, 2)), e2(1, 4)),
            (-br(d23_14(), c(3, 3)), e2(2, 3)),
        ]),
        (2, 4) => lin2(vec![
            (br(m14p(), -c(1, 2)), sig(1)),
            (br(d13_24(), cc(1, 3)), e2(1, 3)),
            (-br(m12m(), c(2, 3)), sig(3)),
            (-br(d24_13(), c(2, 2)), e2(2, 4)),
        ]),
        (3, 4) => lin2(vec![
            (-br(d12_34(), cc(2, 3)), e2(1, 2)),
            (br(m14m(), c(1, 2)), sig(2)),
            (-br(m13p(), -c(1, 3)), sig(3)),
            (-br(d34_12(), c(1, 1)), e2(3, 4)),
        ]),
        (1..=4, 5..=7) => {
            let r = j - 4;
            let b = |k| a(r, k);
            let t = |x: &CoefExpr, k: u8| x * &f(k);
            let (s1, s2, s3) = match i {
                1 => (
                    sum(vec![t(&b(1), 1), -t(&b(3), 3), t(&b(2), 4)]),
                    sum(vec![t(&b(2), 1), t(&b(3), 2), -t(&b(1), 4)]),
                    sum(vec![t(&b(3), 1), -t(&b(2), 2), t(&b(1), 3)]),
                ),
                2 => (
                    sum(vec![t(&b(1), 2), -t(&b(2), 3), -t(&b(3), 4)]),
                    -sum(vec![t(&b(3), 1), -t(&b(2), 2), -t(&b(1), 3)]),
                    sum(vec![t(&b(2), 1), t(&b(3), 2), t(&b(1), 4)]),
                ),
                3 => (
                    sum(vec![t(&b(3), 1), t(&b(2), 2), t(&b(1), 3)]),
                    -sum(vec![t(&b(1), 2), -t(&b(2), 3), t(&b(3), 4)]),
                    -sum(vec![t(&b(1), 1), -t(&b(3), 3), -t(&b(2), 4)]),
                ),
                _ => (
                    -sum(vec![t(&b(2), 1), -t(&b(3), 2), -t(&b(1), 4)]),
                    sum(vec![t(&b(1), 1), t(&b(3), 3), t(&b(2), 4)]),
                    -sum(vec![t(&b(1), 2), t(&b(2), 3), -t(&b(3), 4)]),
                ),
            };
            let k = |x: CoefExpr| x2(&x).mul_expf(-3);
            lin2(vec![(k(s1), sig(1)), (k(s2), sig(2)), (k(s3), sig(3))])
        }
        (5..=7, 5..=7) => {
            let (r, s) = (i - 4, j - 4);
            let m = |p, q| &(&a(r, p) * &a(s, q)) - &(&a(r, q) * &a(s, p));
            let k = |x: CoefExpr| x2(&x).mul_expf(-4);
            lin2(vec![(k(m(2, 3)), sig(1)), (k(-m(1, 3)), sig(2)), (k(m(1, 2)), sig(3))])
        }
        _ => panic!("no displayed entry ({i}, {j})"),
    }
}

/// The printed `(Ω⁻)^1_3` carries `+(a₁₂a₁₃ + a₂₂a₂₃ + a₃₂a₃₃)e^{−2f}` in
/// its `σ̄₃` bracket; the sign pattern of the paired entry `(Ω⁻)^2_4`
/// requires `−`. This is the printed minus the corrected entry.
pub fn curvature_misprint(i: usize, j: usize) -> FormExpr {
    if (i, j) == (1, 3) {
        sig(3).scale(&x2(&col(2, 3)).mul_expf(-4))
    } else {
        FormExpr::zero(DIM, 2)
    }
}

/// `(Ω⁻)^i_j` with the misprint removed.
pub fn curvature_minus(i: usize, j: usize) -> FormExpr {
    &curvature_minus_printed(i, j) - &curvature_misprint(i, j)
}

/// `T̄ = e^{−f}[−2f₁ē^{234} + 2f₂ē^{134} − 2f₃ē^{124} + 2f₄ē^{123}]
///      + e^{−2f} Σ_r (Σ_s a_{rs} σ̄_s) ∧ ē^{4+r}`.
pub fn torsion_table() -> FormExpr {
    let base = [(1u8, [2, 3, 4], -2), (2, [1, 3, 4], 2), (3, [1, 2, 4], -2), (4, [1, 2, 3], 2)];
    let mut t = FormExpr::zero(DIM, 3);
    for (k, legs, s) in base {
        t = &t + &FormExpr::term(DIM, &legs, f(k).scale(&int(s)).mul_expf(-1));
    }
    for r in 1..=3 {
        let s = lin2((1..=3).map(|s| (a(r, s).mul_expf(-2), sig(s))).collect());
        t = &t + &s.wedge(&FormExpr::basis(DIM, &[4 + r])).unwrap();
    }
    t
}

/// `Λ_{ijkl} = λ_{ik}λ_{jl} − λ_{jk}λ_{il}`.
fn minor(i: usize, j: usize, k: usize, l: usize) -> CoefExpr {
    &(&lam(i, k) * &lam(j, l)) - &(&lam(j, k) * &lam(i, l))
}

/// The displayed `D_Λ` curvature: `(1,2)`, `(1,3)` and `(1,4)`; the other
/// base entries follow from the stated equalities.
pub fn dlambda_curvature(i: usize, j: usize) -> FormExpr {
    let row = |p: usize| -> FormExpr {
        let la = |s: usize| (1..=3).map(|m| &lam(p, m) * &a(m, s)).sum::<CoefExpr>();
        lin2((1..=3).map(|s| (la(s).mul_expf(-2), sig(s))).collect())
    };
    let fib = |m: [CoefExpr; 3]| {
        lin2(vec![
            (x2(&m[0]), e2(5, 6)),
            (x2(&m[1]), e2(5, 7)),
            (x2(&m[2]), e2(6, 7)),
        ])
    };
    match (i, j) {
        (1, 2) => &row(1) + &fib([minor(2, 3, 1, 2), minor(2, 3, 1, 3), minor(2, 3, 2, 3)]),
        (1, 3) => &row(2) - &fib([minor(1, 3, 1, 2), minor(1, 3, 1, 3), minor(1, 3, 2, 3)]),
        (1, 4) => &row(3) + &fib([minor(1, 2, 1, 2), minor(1, 2, 1, 3), minor(1, 2, 2, 3)]),
        (3, 4) => -&dlambda_curvature(1, 2),
        (2, 4) => dlambda_curvature(1, 3),
        (2, 3) => -&dlambda_curvature(1, 4),
        _ => FormExpr::zero(DIM, 2),
    }
}

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Catalogue coframes with small integer parameters.
pub fn coframe_strategy() -> impl Strategy<Value = CoframeSpec> {
    let small = || -3i64..=3;
    let c = |n: i64| CoefExpr::int(n);
    prop_oneof![
        Just(FrameCatalogId::QuaternionicHeisenberg),
        proptest::array::uniform3(proptest::array::uniform3(small()))
            .prop_map(|m| FrameCatalogId::KA(Mat3::from_ints(m))),
        (small(), small()).prop_map(move |(a, b)| FrameCatalogId::H5 { a: c(a), b: c(b) }),
        small().prop_map(move |a| FrameCatalogId::H3 { a: c(a) }),
        proptest::array::uniform3(small()).prop_map(move |a| FrameCatalogId::H21 { a: a.map(c) }),
        (small(), small(), 1i64..=10).prop_map(move |(a, b, e)| FrameCatalogId::ContractionEps6D {
            a: c(a),
            b: c(b),
            eps: heterotic_core::diffring::rat(1, e),
        }),
    ]
    .prop_filter_map("degenerate catalogue parameters", |id| build_coframe(&id).ok())
}

/// Sums of up to three terms `q · f_i · f_j · e^{kf}` with first jets only,
/// so two derivatives stay within the jet cap.
pub fn coef_strategy() -> impl Strategy<Value = CoefExpr> {
    let term = (-5i64..=5, 1i64..=3, 0u8..=4, 0u8..=4, -2i32..=2).prop_map(|(n, d, i, j, k)| {
        let mut t = CoefExpr::rat(n, d).mul_expf(k);
        for idx in [i, j] {
            if idx > 0 {
                t = &t * &f(idx);
            }
        }
        t
    });
    proptest::collection::vec(term, 1..=3).prop_map(sum)
}

pub fn form_strategy(dim: usize, degree: usize) -> BoxedStrategy<FormExpr> {
    let blade = proptest::sample::subsequence((1..=dim).collect::<Vec<_>>(), degree);
    proptest::collection::vec((blade, coef_strategy()), 1..=3)
        .prop_map(move |terms| {
            terms
                .into_iter()
                .fold(FormExpr::zero(dim, degree), |acc, (b, c)| &acc + &FormExpr::term(dim, &b, c))
        })
        .boxed()
}

/// A coframe with a form of random degree on it.
pub fn coframe_and_form() -> impl Strategy<Value = (CoframeSpec, FormExpr)> {
    coframe_strategy().prop_flat_map(|c| {
        let n = c.dim();
        (0..=n).prop_flat_map(move |p| (Just(c.clone()), form_strategy(n, p)))
    })
}

/// A coframe with two forms whose degrees add up to at most its dimension.
pub fn coframe_and_pair() -> impl Strategy<Value = (CoframeSpec, FormExpr, FormExpr)> {
    coframe_strategy().prop_flat_map(|c| {
        let n = c.dim();
        (0..=n)
            .prop_flat_map(move |p| (Just(p), 0..=n - p))
            .prop_flat_map(move |(p, q)| (Just(c.clone()), form_strategy(n, p), form_strategy(n, q)))
    })
}

pub fn check_d_squared((c, a): &(CoframeSpec, FormExpr)) -> Result<(), String> {
    let dd = exterior_derivative(&exterior_derivative(a, c).unwrap(), c).unwrap();
    dd.is_zero().then_some(()).ok_or(format!("d²({a}) = {dd} on {}", c.label()))
}

pub fn check_leibniz((c, a, b): &(CoframeSpec, FormExpr, FormExpr)) -> Result<(), String> {
    let d = |x: &FormExpr| exterior_derivative(x, c).unwrap();
    let lhs = d(&a.wedge(b).unwrap());
    let sign = if a.degree() % 2 == 0 { 1 } else { -1 };
    let rhs = &d(a).wedge(b).unwrap() + &a.wedge(&d(b)).unwrap().scale_rat(&int(sign));
    (lhs == rhs).then_some(()).ok_or(format!("Leibniz fails for {a} and {b} on {}", c.label()))
}

pub fn check_star_star((c, a): &(CoframeSpec, FormExpr)) -> Result<(), String> {
    let (n, p) = (c.dim(), a.degree());
    let ss = hodge_star(&hodge_star(a, c).unwrap(), c).unwrap();
    let sign = if (p * (n - p)) % 2 == 0 { 1 } else { -1 };
    (ss == a.scale_rat(&int(sign))).then_some(()).ok_or(format!("**({a}) = {ss}"))
}

/// Levi-Civita and both torsion connections are skew, and so are their
/// curvatures.
pub fn check_metricity(c: &CoframeSpec) -> Result<(), String> {
    let lc = levi_civita(c);
    let t = torsion_for(c).map_err(|e| e.to_string())?;
    for (name, conn) in [
        ("lc", lc.clone()),
        ("plus", torsion_connection(&lc, &t, 1).unwrap()),
        ("minus", torsion_connection(&lc, &t, -1).unwrap()),
    ] {
        if !conn.antisymmetry_defects().is_empty() {
            return Err(format!("{name} connection not skew on {}", c.label()));
        }
        let curv = curvature(&conn, c).unwrap();
        if !curv.antisymmetry_defects().is_empty() {
            return Err(format!("{name} curvature not skew on {}", c.label()));
        }
    }
    Ok(())
}

pub fn check_first_structure(c: &CoframeSpec) -> Result<(), String> {
    let res = first_structure_residual(&levi_civita(c), c).unwrap();
    res.iter()
        .all(FormExpr::is_zero)
        .then_some(())
        .ok_or(format!("first structure equation fails on {}", c.label()))
}
