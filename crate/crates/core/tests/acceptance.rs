//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use chain_geometry::extension::build_pair;
use chain_geometry::graded_lie::Family;
use chain_geometry::par::Execution;
use chain_geometry::verify::{
    chain_suite, curvature_suite, extension_suite, reconstruction_suite, structure_suite, table_suite, transfer_suite,
    Check, Tolerances,
};

const Q_SAMPLES: usize = 100;
const KAPPA_SAMPLES: usize = 50;
const FIBERS: usize = 20;
const SEED: u64 = 2024;

struct Outcome {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { failures: Vec::new(), notes: Vec::new() }
    }

    fn absorb<'a>(&mut self, checks: impl IntoIterator<Item = &'a Check>) {
        for c in checks {
            if !c.passed() {
                let detail = c.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default();
                self.failures.push(format!("{}{detail}", c.anchor));
            }
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

fn cr_signatures(max: usize) -> Vec<Family> {
    (1..=max).flat_map(|n| (0..=n).rev().map(move |p| Family::Cr { p, q: n - p })).collect()
}

fn extension_families() -> Vec<Family> {
    let mut v: Vec<Family> = (1..=3).map(|n| Family::Lagrangean { n }).collect();
    v.extend(cr_signatures(3));
    v
}

fn run(idx: usize, name: &str, budget: Option<Duration>, f: impl FnOnce(&mut Outcome)) -> bool {
    let start = Instant::now();
    let mut out = Outcome::new();
    f(&mut out);
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            out.failures.push(format!("runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()));
        }
    }
    let ok = out.failures.is_empty();
    println!("[{}] criterion {idx:>2}: {name} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    for n in &out.notes {
        println!("      {n}");
    }
    for f in &out.failures {
        println!("      failed: {f}");
    }
    ok
}

fn with_anchor<'a>(checks: &'a [Check], prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
    checks.iter().filter(move |c| c.anchor.starts_with(prefix))
}

fn main() {
    let exec = Execution::default();
    let tol = Tolerances::default();
    let mut results = Vec::new();

    results.push(run(1, "structure suite", Some(Duration::from_secs(30)), |o| {
        let mut fams: Vec<Family> = (1..=4).map(|n| Family::Lagrangean { n }).collect();
        fams.extend((2..=8).map(|m| Family::Path { m }));
        fams.extend(cr_signatures(3));
        for f in &fams {
            o.absorb(&structure_suite(*f, exec));
        }
        o.note(format!("{} algebras", fams.len()));
    }));

    // Suites shared by criteria 2, 3, 4 and 10, timed under criterion 2.
    let mut ext: Vec<(Family, Vec<Check>, Vec<Check>)> = Vec::new();

    results.push(run(2, "conditions on (i, alpha)", None, |o| {
        for f in extension_families() {
            match build_pair(f) {
                Ok(pair) => ext.push((
                    f,
                    extension_suite(&pair, Q_SAMPLES, SEED, &tol),
                    curvature_suite(&pair, KAPPA_SAMPLES, SEED, exec),
                )),
                Err(e) => ext.push((f, vec![Check::failed("extension/build", e)], Vec::new())),
            }
        }
        let mut worst: f64 = 0.0;
        for (_, e, _) in &ext {
            o.absorb(with_anchor(e, "extension/condition").chain(with_anchor(e, "extension/build")));
            for c in with_anchor(e, "extension/condition-1 ") {
                worst = worst.max(c.residual.unwrap_or(0.0));
            }
        }
        o.note(format!("{Q_SAMPLES} Q samples per pair, worst residual {worst:.2e} (tolerance {:.0e})", tol.condition1));
    }));

    results.push(run(3, "support and symmetrization of Psi_alpha", None, |o| {
        for (f, e, _) in &ext {
            o.absorb(
                with_anchor(e, "extension/psi-support")
                    .chain(with_anchor(e, "extension/psi-well-defined"))
                    .chain(with_anchor(e, "extension/psi-symmetrization")),
            );
            let constants: Vec<String> = with_anchor(e, "extension/psi-symmetrization")
                .chain(with_anchor(e, "extension/phi-duality"))
                .flat_map(|c| c.constants.iter().map(|(k, v)| format!("{k}={v}")))
                .collect();
            o.note(format!("{f}: {}", constants.join(", ")));
        }
    }));

    results.push(run(4, "Psi_alpha is normal, regular, torsion free and nonzero", None, |o| {
        for (_, _, c) in &ext {
            o.absorb(with_anchor(c, "curvature/"));
        }
    }));

    results.push(run(5, "harmonic tables", Some(Duration::from_secs(300)), |o| {
        let fams: Vec<Family> =
            [1, 2, 3].map(|n| Family::Lagrangean { n }).into_iter().chain([2, 4, 5, 6].map(|m| Family::Path { m })).collect();
        for f in fams {
            let checks = table_suite(f, exec);
            o.absorb(&checks);
            for c in &checks {
                o.note(format!("{f}: {}", c.constants.get("rows").cloned().unwrap_or_default()));
            }
        }
    }));

    // Shared by criteria 6 and 7, timed under criterion 6.
    let mut transfers: Vec<(usize, Vec<Check>)> = Vec::new();

    results.push(run(6, "sufficiency of torsion-free normal curvature", None, |o| {
        for n in 1..=3 {
            let checks = match build_pair(Family::Lagrangean { n }) {
                Ok(pair) => transfer_suite(&pair, exec),
                Err(e) => vec![Check::failed("transfer/build", e)],
            };
            transfers.push((n, checks));
        }
        for (n, checks) in &transfers {
            o.absorb(with_anchor(checks, "transfer/sufficiency").chain(with_anchor(checks, "transfer/build")));
            for c in with_anchor(checks, "transfer/sufficiency") {
                o.note(format!("n={n}: {} basis cochains", c.constants.get("basis").cloned().unwrap_or_default()));
            }
        }
    }));

    results.push(run(7, "necessity (harmonic torsion does not transfer)", None, |o| {
        for (n, checks) in transfers.iter().filter(|(n, _)| *n >= 2) {
            let nec: Vec<&Check> = with_anchor(checks, "transfer/necessity").collect();
            if nec.is_empty() {
                o.failures.push(format!("n={n}: necessity check missing"));
            }
            o.absorb(nec.iter().copied());
            for c in nec {
                o.note(format!("n={n}: {} torsion vectors", c.constants.get("torsion_basis").cloned().unwrap_or_default()));
            }
        }
    }));

    results.push(run(8, "chains", None, |o| {
        let mut worst: f64 = 0.0;
        for n in 1..=3 {
            let checks = chain_suite(n, SEED, &tol, exec);
            if n == 1 && with_anchor(&checks, "chains/closed-form").next().is_none() {
                o.failures.push("closed form check missing".into());
            }
            o.absorb(&checks);
            for c in with_anchor(&checks, "chains/q-invariance") {
                worst = worst.max(c.residual.unwrap_or(0.0));
            }
        }
        o.note(format!("worst Hausdorff distance {worst:.2e} (tolerance {:.0e})", tol.hausdorff));
    }));

    results.push(run(9, "reconstruction from the cubic tensor", Some(Duration::from_secs(60)), |o| {
        let mut worst: f64 = 0.0;
        for n in 1..=3 {
            for f in [Family::Lagrangean { n }, Family::Cr { p: n.div_ceil(2), q: n / 2 }] {
                let checks = reconstruction_suite(f, FIBERS, SEED, &tol);
                o.absorb(&checks);
                for c in &checks {
                    worst = worst.max(c.residual.unwrap_or(0.0));
                }
            }
        }
        o.note(format!("{FIBERS} fibers per case, worst error {worst:.2e} (tolerance {:.0e})", tol.reconstruction));
    }));

    results.push(run(10, "pi projections", None, |o| {
        for (_, _, c) in &ext {
            o.absorb(with_anchor(c, "projection/"));
        }
        o.note(format!("{KAPPA_SAMPLES} random curvatures per pair"));
    }));

    let passed = results.iter().filter(|b| **b).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
