//! Catalogue of torus-bundle coframes over ℝ⁴ and their contractions.
//!
//! Every entry has the shape `de^1 = … = de^4 = 0`,
//! `de^{4+i} = Σ_j m_{ij} σ_j` for a row matrix `m` with 1, 2 or 3 rows.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::diffring::{CoefExpr, Mat3, Rational};
use crate::error::{Error, Result};
use crate::exterior::{sigma, CoframeSpec, FormExpr};

/// Named coframes.
#[derive(Clone, Debug, PartialEq)]
pub enum FrameCatalogId {
    /// `dγ^5 = σ_1`, `dγ^6 = σ_2`, `dγ^7 = σ_3`.
    QuaternionicHeisenberg,
    /// `de^{4+i} = Σ_j a_{ij} σ_j`; entries may be symbolic.
    KA(Mat3),
    /// `de^5 = b σ_2`, `de^6 = a σ_1 − b σ_3`.
    H5 { a: CoefExpr, b: CoefExpr },
    /// `de^5 = 0`, `de^6 = a σ_1`.
    H3 { a: CoefExpr },
    /// `de^5 = a_1 σ_1 + a_2 σ_2 + a_3 σ_3`.
    H21 { a: [CoefExpr; 3] },
    /// `K_{A_ε}` with rows `(0, b, 0; a, 0, −b; 0, 0, ε)`.
    ContractionEps6D { a: CoefExpr, b: CoefExpr, eps: Rational },
    /// `K_{A_ε}` with rows `(a_1, a_2, a_3; 0, ε, 0; 0, 0, ε)`.
    ContractionEps5D { a: [CoefExpr; 3], eps: Rational },
}

impl FrameCatalogId {
    pub fn name(&self) -> &'static str {
        match self {
            FrameCatalogId::QuaternionicHeisenberg => "gH",
            FrameCatalogId::KA(_) => "kA",
            FrameCatalogId::H5 { .. } => "h5",
            FrameCatalogId::H3 { .. } => "h3",
            FrameCatalogId::H21 { .. } => "h21",
            FrameCatalogId::ContractionEps6D { .. } => "eps6",
            FrameCatalogId::ContractionEps5D { .. } => "eps5",
        }
    }

    /// Look up an entry by its short name. Parameters use the keys
    /// `a11..a33` (kA), `a`, `b` (h5, h3, eps6), `a1..a3` (h21, eps5) and
    /// `eps`; missing keys default to zero.
    pub fn from_name(name: &str, params: &BTreeMap<String, Rational>) -> Result<FrameCatalogId> {
        let get = |k: &str| CoefExpr::constant(params.get(k).cloned().unwrap_or_else(Rational::zero));
        let eps = || params.get("eps").cloned().unwrap_or_else(Rational::zero);
        for k in params.keys() {
            let known = matches!(k.as_str(), "a" | "b" | "a1" | "a2" | "a3" | "eps")
                || (k.len() == 3
                    && k.starts_with('a')
                    && k[1..].chars().all(|c| ('1'..='3').contains(&c)));
            if !known {
                return Err(Error::BadParams(format!("unknown frame parameter `{k}`")));
            }
        }
        Ok(match name {
            "gH" => FrameCatalogId::QuaternionicHeisenberg,
            "kA" => {
                let mut m = Mat3::zero();
                for i in 0..3 {
                    for j in 0..3 {
                        m.0[i][j] = get(&format!("a{}{}", i + 1, j + 1));
                    }
                }
                FrameCatalogId::KA(m)
            }
            "h5" => FrameCatalogId::H5 { a: get("a"), b: get("b") },
            "h3" => FrameCatalogId::H3 { a: get("a") },
            "h21" => FrameCatalogId::H21 {
                a: [get("a1"), get("a2"), get("a3")],
            },
            "eps6" => FrameCatalogId::ContractionEps6D {
                a: get("a"),
                b: get("b"),
                eps: eps(),
            },
            "eps5" => FrameCatalogId::ContractionEps5D {
                a: [get("a1"), get("a2"), get("a3")],
                eps: eps(),
            },
            other => return Err(Error::BadParams(format!("unknown frame `{other}`"))),
        })
    }

    /// The fiber rows `m_{ij}` of the structure equations.
    pub fn rows(&self) -> Vec<[CoefExpr; 3]> {
        let z = CoefExpr::zero;
        match self {
            FrameCatalogId::QuaternionicHeisenberg => Mat3::identity().0.to_vec(),
            FrameCatalogId::KA(a) => a.0.to_vec(),
            FrameCatalogId::H5 { a, b } => vec![[z(), b.clone(), z()], [a.clone(), z(), -b]],
            FrameCatalogId::H3 { a } => vec![[z(), z(), z()], [a.clone(), z(), z()]],
            FrameCatalogId::H21 { a } => vec![a.clone()],
            FrameCatalogId::ContractionEps6D { a, b, eps } => vec![
                [z(), b.clone(), z()],
                [a.clone(), z(), -b],
                [z(), z(), CoefExpr::constant(eps.clone())],
            ],
            FrameCatalogId::ContractionEps5D { a, eps } => {
                let e = CoefExpr::constant(eps.clone());
                vec![a.clone(), [z(), e.clone(), z()], [z(), z(), e]]
            }
        }
    }

    /// The 3×3 matrix `A` with missing rows filled by zeros.
    pub fn matrix(&self) -> Mat3 {
        let mut m = Mat3::zero();
        for (i, row) in self.rows().into_iter().enumerate() {
            m.0[i] = row;
        }
        m
    }
}

impl fmt::Display for FrameCatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Structure forms of the torus bundle `de^{4+i} = Σ_j rows[i][j] σ_j`.
pub fn torus_bundle_structure(rows: &[[CoefExpr; 3]]) -> Vec<FormExpr> {
    let dim = 4 + rows.len();
    let mut out = vec![FormExpr::zero(dim, 2); 4];
    for row in rows {
        let mut form = FormExpr::zero(dim, 2);
        for (j, a) in row.iter().enumerate() {
            if !a.is_zero() {
                form = &form + &sigma(dim, j + 1).scale(a);
            }
        }
        out.push(form);
    }
    out
}

fn torus_bundle(label: &str, rows: &[[CoefExpr; 3]]) -> Result<CoframeSpec> {
    let dim = 4 + rows.len();
    let mut weights = vec![1u8; 4];
    weights.extend(std::iter::repeat(0).take(rows.len()));
    CoframeSpec::new(label, dim, torus_bundle_structure(rows), weights)
}

fn nonzero(x: &CoefExpr, what: &str) -> Result<()> {
    if x.is_zero() {
        Err(Error::BadParams(format!("{what} must be nonzero")))
    } else {
        Ok(())
    }
}

/// Build the coframe of a catalogue entry. Contraction families are built at
/// their `ε`; at `ε = 0` the degenerate legs are dropped (see
/// [`contract_family`]).
pub fn build_coframe(id: &FrameCatalogId) -> Result<CoframeSpec> {
    match id {
        FrameCatalogId::QuaternionicHeisenberg => {}
        FrameCatalogId::KA(a) => {
            if a.det().is_zero() {
                return Err(Error::BadParams("A must be invertible".into()));
            }
        }
        FrameCatalogId::H5 { a, b } => {
            nonzero(a, "a")?;
            nonzero(b, "b")?;
        }
        FrameCatalogId::H3 { a } => nonzero(a, "a")?,
        FrameCatalogId::H21 { a } => {
            if a.iter().all(CoefExpr::is_zero) {
                return Err(Error::BadParams("(a1, a2, a3) must not vanish".into()));
            }
        }
        FrameCatalogId::ContractionEps6D { eps, .. } | FrameCatalogId::ContractionEps5D { eps, .. } => {
            return contract_family(id, eps);
        }
    }
    torus_bundle(id.name(), &id.rows())
}

/// Result of the Jacobi check: `d(de^k)` for each leg.
#[derive(Clone, Debug)]
pub struct IntegrabilityReport {
    pub residuals: Vec<FormExpr>,
}

impl IntegrabilityReport {
    pub fn pass(&self) -> bool {
        self.residuals.iter().all(FormExpr::is_zero)
    }
}

pub fn integrability_check(c: &CoframeSpec) -> IntegrabilityReport {
    IntegrabilityReport {
        residuals: c.lie_residuals(),
    }
}

/// `K_{A_ε}` for a contraction family. For `ε > 0` this is the full
/// seven-dimensional coframe; at `ε = 0` the fiber legs whose structure
/// constants vanish identically (leg 7 for the 6D family, legs 6 and 7 for
/// the 5D family) are removed and recorded in [`CoframeSpec::dropped_legs`].
pub fn contract_family(id: &FrameCatalogId, eps: &Rational) -> Result<CoframeSpec> {
    if eps.is_negative() {
        return Err(Error::BadParams("contraction parameter must be nonnegative".into()));
    }
    let (id, dropped) = match id {
        FrameCatalogId::ContractionEps6D { a, b, .. } => {
            nonzero(a, "a")?;
            nonzero(b, "b")?;
            (
                FrameCatalogId::ContractionEps6D {
                    a: a.clone(),
                    b: b.clone(),
                    eps: eps.clone(),
                },
                vec![7],
            )
        }
        FrameCatalogId::ContractionEps5D { a, .. } => {
            if a.iter().all(CoefExpr::is_zero) {
                return Err(Error::BadParams("(a1, a2, a3) must not vanish".into()));
            }
            (
                FrameCatalogId::ContractionEps5D {
                    a: a.clone(),
                    eps: eps.clone(),
                },
                vec![6, 7],
            )
        }
        other => {
            return Err(Error::BadParams(format!(
                "`{}` is not a contraction family",
                other.name()
            )))
        }
    };
    let rows = id.rows();
    let full = torus_bundle(id.name(), &rows)?;
    if !eps.is_zero() {
        return Ok(full);
    }
    let keep_rows: Vec<[CoefExpr; 3]> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(&(i + 5)))
        .map(|(_, r)| r.clone())
        .collect();
    for &leg in &dropped {
        debug_assert!(full.structure(leg).is_zero());
        debug_assert!((1..=full.dim()).all(|k| !full.structure(k).touches_legs(&[leg])));
    }
    Ok(torus_bundle(id.name(), &keep_rows)?.with_dropped_legs(dropped))
}
