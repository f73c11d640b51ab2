//! Verification suites shared by the command line tool and the acceptance
//! tests. Every check carries a stable anchor string naming the property it
//! certifies.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num::traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chains::{chain_through, frame_round_trip, hausdorff_distance, ChainCurve, FlagPoint};
use crate::error::Result;
use crate::extension::{
    build_pair, extend_curvature, in_lemma_support, p_hat, pairs_equivalent, phi_duality_constant, psi_alpha,
    psi_alpha_shifted, symmetrization_constant, transfer, ExtensionPair,
};
use crate::graded_lie::{build_algebra, check_structure, Component, Family, Part};
use crate::groups::{random_element, random_p, random_q, rationalize, GroupElement};
use crate::hodge::{
    codifferential, harmonic_kernel, harmonic_project, predicates, project_pi, split_kernel, table_report, Cochain,
    CochainComplex, Coeffs,
};
use crate::linalg::{rat, SparseVec};
use crate::par::Execution;
use crate::reconstruct::round_trip_report;

pub const REPORT_VERSION: &str = "1.0";

/// Numeric tolerances of the floating-point checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub condition1: f64,
    pub hausdorff: f64,
    pub reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { condition1: 1e-9, hausdorff: 1e-8, reconstruction: 1e-8 }
    }
}

impl Tolerances {
    /// Applies a `name=value` override.
    pub fn set(&mut self, name: &str, value: f64) -> std::result::Result<(), String> {
        match name {
            "condition1" => self.condition1 = value,
            "hausdorff" => self.hausdorff = value,
            "reconstruction" => self.reconstruction = value,
            _ => return Err(format!("unknown tolerance `{name}`")),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub anchor: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub constants: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(anchor: impl Into<String>, ok: bool) -> Self {
        Self {
            anchor: anchor.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            residual: None,
            constants: BTreeMap::new(),
            detail: None,
        }
    }

    pub fn failed(anchor: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self::new(anchor, false).detail(err.to_string())
    }

    pub fn residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }

    pub fn constant(mut self, name: &str, value: impl ToString) -> Self {
        self.constants.insert(name.to_string(), value.to_string());
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// `{version, config, checks}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(config: serde_json::Value, checks: Vec<Check>) -> Self {
        Self { version: REPORT_VERSION.to_string(), config, checks }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

fn label(family: Family) -> String {
    family.to_string()
}

/// Jacobi identity, grading, Levi pairing, isotropy, trace pairing and the
/// Hermitian relations, all exact.
pub fn structure_suite(family: Family, exec: Execution) -> Vec<Check> {
    let alg = match build_algebra(family) {
        Ok(a) => a,
        Err(e) => return vec![Check::failed(format!("structure {}", label(family)), e)],
    };
    let r = check_structure(&alg, exec);
    let f = label(family);
    let mut out = vec![
        Check::new(format!("structure/jacobi {f}"), r.jacobi),
        Check::new(format!("structure/grading {f}"), r.grading),
        Check::new(format!("structure/trace-pairing {f}"), r.trace_pairing),
    ];
    if let Some((rank, dim)) = r.levi_rank {
        out.push(Check::new(format!("structure/levi-nondegenerate {f}"), rank == dim).constant("rank", rank));
    }
    if let Some(b) = r.isotropic {
        out.push(Check::new(format!("structure/isotropic {f}"), b));
    }
    if let Some(b) = r.hermitian {
        out.push(Check::new(format!("structure/hermitian {f}"), b));
    }
    out
}

fn q_samples(pair: &ExtensionPair, count: usize, seed: u64) -> Result<Vec<GroupElement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_q(pair.source(), &mut rng)).collect()
}

/// Conditions on `(i, α)`, the well-definedness and support of `Ψ_α`, the
/// symmetrization and duality constants, and equivalence by conjugation.
pub fn extension_suite(pair: &ExtensionPair, samples: usize, seed: u64, tol: &Tolerances) -> Vec<Check> {
    let f = label(pair.source().family());
    let mut out = Vec::new();
    let qs = match q_samples(pair, samples, seed) {
        Ok(q) => q,
        Err(e) => return vec![Check::failed(format!("extension/samples {f}"), e)],
    };
    match pair.check_conditions(&qs) {
        Ok(r) => {
            out.push(
                Check::new(format!("extension/condition-1 {f}"), r.condition1_residual <= tol.condition1)
                    .residual(r.condition1_residual)
                    .constant("samples", r.samples),
            );
            out.push(Check::new(format!("extension/condition-1-infinitesimal {f}"), r.condition1_infinitesimal));
            out.push(Check::new(format!("extension/condition-2 {f}"), r.condition2_exact));
            out.push(
                Check::new(format!("extension/condition-3 {f}"), r.condition3_rank == r.condition3_expected)
                    .constant("rank", r.condition3_rank),
            );
        }
        Err(e) => out.push(Check::failed(format!("extension/conditions {f}"), e)),
    }
    let psi = match psi_alpha(pair) {
        Ok(p) => p,
        Err(e) => {
            out.push(Check::failed(format!("extension/psi {f}"), e));
            return out;
        }
    };
    // Preimages moved inside q must not change Ψ_α.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let q: BTreeSet<usize> = pair.q_basis().iter().copied().collect();
    let shifts: Vec<SparseVec> = (0..pair.target_complex().neg_dim())
        .map(|_| {
            let c: Vec<f64> = (0..pair.source().dim())
                .map(|i| if q.contains(&i) { rng.gen_range(-4i32..=4) as f64 / 2.0 } else { 0.0 })
                .collect();
            rationalize(&c)
        })
        .collect();
    let shifted = psi_alpha_shifted(pair, |b| shifts[b].clone());
    out.push(Check::new(format!("extension/psi-well-defined {f}"), shifted.as_ref().ok() == Some(&psi)));
    out.push(Check::new(format!("extension/psi-support {f}"), !psi.is_zero() && in_lemma_support(&psi)));
    match symmetrization_constant(pair) {
        Ok(Some(c)) => out.push(Check::new(format!("extension/psi-symmetrization {f}"), !c.is_zero()).constant("psi_symmetrization_constant", c)),
        Ok(None) => out.push(Check::failed(format!("extension/psi-symmetrization {f}"), "no single constant fits")),
        Err(e) => out.push(Check::failed(format!("extension/psi-symmetrization {f}"), e)),
    }
    match phi_duality_constant(pair) {
        Ok(Some(c)) => out.push(Check::new(format!("extension/phi-duality {f}"), !c.is_zero()).constant("phi_duality_constant", c)),
        Ok(None) => out.push(Check::failed(format!("extension/phi-duality {f}"), "no single constant fits")),
        Err(e) => out.push(Check::failed(format!("extension/phi-duality {f}"), e)),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
    let w = random_p(pair.target(), &mut rng);
    let few = &qs[..qs.len().min(5)];
    let ok = pair.conjugate(&w).and_then(|conj| {
        let id = GroupElement::identity(pair.target().family());
        Ok(pairs_equivalent(pair, &conj, &w, few)? && !pairs_equivalent(pair, &conj, &id, few)?)
    });
    out.push(match ok {
        Ok(b) => Check::new(format!("extension/equivalence {f}"), b),
        Err(e) => Check::failed(format!("extension/equivalence {f}"), e),
    });
    out
}

/// Random degree-2 source cochain with small integer coefficients.
pub fn random_cochain(complex: &Arc<CochainComplex>, rng: &mut ChaCha8Rng) -> Cochain {
    let mut coeffs = Coeffs::new();
    for k in complex.keys(2) {
        let v: i64 = rng.gen_range(-3..=3);
        if v != 0 {
            coeffs.insert(k, rat(v));
        }
    }
    Cochain::from_coeffs(complex, 2, coeffs).expect("keys of degree 2")
}

/// `∂*Ψ_α = 0`, the curvature predicates, non-flatness, the `π`
/// projections, and the harmonic part of `Ψ_α`.
pub fn curvature_suite(pair: &ExtensionPair, kappas: usize, seed: u64, exec: Execution) -> Vec<Check> {
    let f = label(pair.source().family());
    let mut out = Vec::new();
    let psi = match psi_alpha(pair) {
        Ok(p) => p,
        Err(e) => return vec![Check::failed(format!("curvature/psi {f}"), e)],
    };
    out.push(Check::new(format!("curvature/psi-nonzero {f}"), !psi.is_zero()));
    out.push(match codifferential(&psi) {
        Ok(c) => Check::new(format!("curvature/psi-codifferential {f}"), c.is_zero()),
        Err(e) => Check::failed(format!("curvature/psi-codifferential {f}"), e),
    });
    out.push(match predicates(&psi) {
        Ok(p) => Check::new(format!("curvature/psi-predicates {f}"), p.regular && p.normal && p.torsion_free)
            .constant("min_homogeneity", p.min_homogeneity.map_or("inf".to_string(), |h| h.to_string())),
        Err(e) => Check::failed(format!("curvature/psi-predicates {f}"), e),
    });
    out.push(match project_pi(&psi) {
        Ok(p) => Check::new(format!("projection/psi-pi-E {f}"), p.pi_e.is_zero()),
        Err(e) => Check::failed(format!("projection/psi-pi-E {f}"), e),
    });
    out.push(match project_pi(&psi) {
        Ok(p) => Check::new(format!("projection/psi-pi-V {f}"), !p.pi_v.is_zero()),
        Err(e) => Check::failed(format!("projection/psi-pi-V {f}"), e),
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xcafe);
    let mut bad = None;
    for i in 0..kappas {
        let k = random_cochain(pair.source_complex(), &mut rng);
        match transfer(pair, &k).and_then(|t| project_pi(&t)) {
            Ok(p) if p.pi_v.is_zero() => {}
            Ok(_) => {
                bad = Some(format!("sample {i} has a nonzero π^V part"));
                break;
            }
            Err(e) => {
                bad = Some(format!("sample {i}: {e}"));
                break;
            }
        }
    }
    out.push(match bad {
        None => Check::new(format!("projection/transfer-in-ker-pi-V {f}"), true).constant("samples", kappas),
        Some(d) => Check::failed(format!("projection/transfer-in-ker-pi-V {f}"), d),
    });
    let basis = harmonic_kernel(pair.target_complex(), exec);
    out.push(match harmonic_project(&psi, &basis) {
        Ok(h) => {
            let v = Component::new(-1, Part::V);
            let ok = !h.harmonic.is_zero()
                && h.parts.keys().all(|c| c.is_some_and(|c| c.first == v.dual() || c.second == v.dual()));
            let labels: Vec<String> = h.parts.keys().map(|c| c.map_or("?".to_string(), |c| c.to_string())).collect();
            Check::new(format!("projection/psi-harmonic-V {f}"), ok).constant("containers", labels.join(" + "))
        }
        Err(e) => Check::failed(format!("projection/psi-harmonic-V {f}"), e),
    });
    out
}

/// Harmonic table of the given algebra against the reference containers.
pub fn table_suite(family: Family, exec: Execution) -> Vec<Check> {
    let anchor = format!("hodge/harmonic-table {}", label(family));
    let alg = match build_algebra(family) {
        Ok(a) => a,
        Err(e) => return vec![Check::failed(anchor, e)],
    };
    let complex = CochainComplex::new(alg);
    match table_report(&complex, exec) {
        Ok(r) => {
            let dims: Vec<String> = r.rows.iter().map(|row| format!("{}:{}={}", row.homogeneity, row.container_label, row.dimension)).collect();
            vec![Check::new(anchor, r.matches_reference)
                .constant("kernel_dimension", r.kernel_dimension)
                .constant("rows", dims.join("; "))]
        }
        Err(e) => vec![Check::failed(anchor, e)],
    }
}

/// Transfer of torsion-free normal curvatures (sufficiency) and of the
/// harmonic torsion (necessity, `n ≥ 2`). Lagrangean pairs only.
pub fn transfer_suite(pair: &ExtensionPair, exec: Execution) -> Vec<Check> {
    let f = label(pair.source().family());
    let mut out = Vec::new();
    match p_hat(pair) {
        Ok(vals) => {
            let vals: BTreeSet<usize> = vals.into_iter().collect();
            let basis = split_kernel(pair.source_complex(), &vals, exec);
            let failures = basis
                .iter()
                .filter(|k| {
                    !extend_curvature(pair, k).and_then(|c| predicates(&c)).is_ok_and(|p| p.normal && p.regular)
                })
                .count();
            out.push(
                Check::new(format!("transfer/sufficiency {f}"), !basis.is_empty() && failures == 0)
                    .constant("basis", basis.len()),
            );
        }
        Err(e) => out.push(Check::failed(format!("transfer/sufficiency {f}"), e)),
    }
    if matches!(pair.source().family(), Family::Lagrangean { n } if n >= 2) {
        let basis = harmonic_kernel(pair.source_complex(), exec);
        let torsion: Vec<&Cochain> =
            basis.vectors.iter().zip(&basis.homogeneity).filter(|(_, h)| **h == 1).map(|(v, _)| v).collect();
        let transfers = torsion
            .iter()
            .filter(|t| extend_curvature(pair, t).and_then(|c| predicates(&c)).map_or(true, |p| !(p.regular && p.normal)))
            .count();
        out.push(
            Check::new(format!("transfer/necessity {f}"), !torsion.is_empty() && transfers == torsion.len())
                .constant("torsion_basis", torsion.len()),
        );
    }
    out
}

/// Frame normalization, invariance of the point set under `Q`, and the
/// closed form of the chain in a pure `g-2` direction (lagrangean).
pub fn chain_suite(n: usize, seed: u64, tol: &Tolerances, exec: Execution) -> Vec<Check> {
    let family = Family::Lagrangean { n };
    let alg = match build_algebra(family) {
        Ok(a) => a,
        Err(e) => return vec![Check::failed("chains", e)],
    };
    let f = label(family);
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4a1);
    let base = FlagPoint::base(family);
    // Integer direction with both g-2 and g-1 parts.
    let mut coords: Vec<f64> = random_element(&alg, &[-1], 1.0, &mut rng).iter().map(|x| (x * 3.0).round()).collect();
    for i in alg.grade_indices(-2) {
        coords[i] = 1.0;
    }
    let xi = alg.element(rationalize(&coords));
    let curve = chain_through(&base, &xi);
    out.push(match &curve {
        Ok(c) => Check::new(format!("chains/frame-normalization {f}"), frame_round_trip(c, &base, &xi)),
        Err(e) => Check::failed(format!("chains/frame-normalization {f}"), e),
    });
    if let Ok(c) = &curve {
        let mut worst: f64 = 0.0;
        let mut err = None;
        for _ in 0..3 {
            let q = match random_q(&alg, &mut rng) {
                Ok(q) => q,
                Err(e) => {
                    err = Some(e.to_string());
                    break;
                }
            };
            let other = match c.frame.mul(&q) {
                Ok(frame) => ChainCurve { frame, direction: c.direction.clone() },
                Err(e) => {
                    err = Some(e.to_string());
                    break;
                }
            };
            match hausdorff_distance(c, &other, (-1.0, 1.0), 21, (-1e9, 1e9), exec) {
                Ok(d) => worst = worst.max(d),
                Err(e) => {
                    err = Some(e.to_string());
                    break;
                }
            }
        }
        out.push(match err {
            None => Check::new(format!("chains/q-invariance {f}"), worst <= tol.hausdorff).residual(worst),
            Some(e) => Check::failed(format!("chains/q-invariance {f}"), e),
        });
    }
    if n == 1 {
        let ok = alg.element_from_entries(&[(2, 0, 1)]).and_then(|e| chain_through(&base, &e)).map(|c| {
            (-10..=10).all(|i| {
                let t = i as f64 / 10.0;
                let mut expect = DMatrix::identity(3, 3);
                expect[(2, 0)] = t;
                c.point(t).representative.matrix() == &expect
            })
        });
        out.push(match ok {
            Ok(b) => Check::new(format!("chains/closed-form {f}"), b),
            Err(e) => Check::failed(format!("chains/closed-form {f}"), e),
        });
    }
    out
}

/// Round trip `S ↦ (L, R)` or `S ↦ ±J` over random fibers.
pub fn reconstruction_suite(family: Family, count: usize, seed: u64, tol: &Tolerances) -> Vec<Check> {
    let anchor = format!("reconstruct/round-trip {}", label(family));
    match round_trip_report(family, count, seed) {
        Ok(r) => {
            let worst = r.subspace_angles.iter().copied().fold(0.0, f64::max);
            vec![Check::new(anchor, worst <= tol.reconstruction).residual(worst).constant("fibers", count)]
        }
        Err(e) => vec![Check::failed(anchor, e)],
    }
}

/// Everything applicable to one family.
pub fn run_all(family: Family, samples: usize, seed: u64, tol: &Tolerances, exec: Execution) -> Vec<Check> {
    let mut out = structure_suite(family, exec);
    if let Err(e) = family.validate() {
        out.push(Check::failed("config", e));
        return out;
    }
    let pair = match build_pair(family) {
        Ok(p) => p,
        Err(e) => {
            out.push(Check::failed("extension/build", e));
            return out;
        }
    };
    out.extend(structure_suite(pair.target().family(), exec));
    out.extend(extension_suite(&pair, samples, seed, tol));
    out.extend(curvature_suite(&pair, 50, seed, exec));
    match family {
        Family::Lagrangean { n } => {
            out.extend(table_suite(family, exec));
            out.extend(table_suite(pair.target().family(), exec));
            out.extend(transfer_suite(&pair, exec));
            out.extend(chain_suite(n, seed, tol, exec));
            out.extend(reconstruction_suite(family, 20, seed, tol));
        }
        Family::Cr { .. } => out.extend(reconstruction_suite(family, 20, seed, tol)),
        Family::Path { .. } => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrangean_n1_passes() {
        let checks = run_all(Family::Lagrangean { n: 1 }, 10, 0, &Tolerances::default(), Execution::Sequential);
        let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn cr_10_passes() {
        let checks = run_all(Family::Cr { p: 1, q: 0 }, 10, 0, &Tolerances::default(), Execution::Sequential);
        let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed()).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn report_serializes_schema() {
        let r = Report::new(serde_json::json!({"n": 1}), vec![Check::new("a", true).residual(0.5).constant("c", 3)]);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["version"], REPORT_VERSION);
        assert_eq!(v["checks"][0]["status"], "pass");
        assert_eq!(v["checks"][0]["constants"]["c"], "3");
        assert!(r.passed());
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("hausdorff", 1e-6).unwrap();
        assert_eq!(t.hausdorff, 1e-6);
        assert!(t.set("bogus", 1.0).is_err());
    }
}
