use std::sync::Arc;

use chain_geometry::extension::{build_pair, extend_curvature, psi_alpha, ExtensionPair};
use chain_geometry::graded_lie::{build_algebra, AlgebraElement, Family, GradedAlgebra};
use chain_geometry::hodge::{codifferential, differential, Cochain, CochainComplex, Coeffs};
use chain_geometry::linalg::{rat, Rational, SparseVec};
use chain_geometry::reconstruct::{
    build_s, membership, random_complex_fiber, random_product_fiber, reconstruct_lagrangean, subspace_distance,
    MEMBERSHIP_TOL,
};
use nalgebra::{DMatrix, DVector};
use num::traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn algebras() -> &'static [Arc<GradedAlgebra>] {
    static ALGS: OnceLock<Vec<Arc<GradedAlgebra>>> = OnceLock::new();
    ALGS.get_or_init(|| {
        [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Path { m: 2 }, Family::Cr { p: 1, q: 1 }]
            .into_iter()
            .map(|f| build_algebra(f).unwrap())
            .collect()
    })
}

fn complex_path2() -> &'static Arc<CochainComplex> {
    static C: OnceLock<Arc<CochainComplex>> = OnceLock::new();
    C.get_or_init(|| CochainComplex::new(build_algebra(Family::Path { m: 2 }).unwrap()))
}

fn pair_n2() -> &'static ExtensionPair {
    static P: OnceLock<ExtensionPair> = OnceLock::new();
    P.get_or_init(|| build_pair(Family::Lagrangean { n: 2 }).unwrap())
}

fn element(alg: &Arc<GradedAlgebra>, entries: &[(usize, i64)]) -> AlgebraElement {
    let mut v = SparseVec::new();
    for &(i, c) in entries {
        let e = v.entry(i % alg.dim()).or_insert_with(Rational::zero);
        *e += rat(c);
    }
    v.retain(|_, x| !x.is_zero());
    alg.element(v)
}

fn entries() -> impl Strategy<Value = Vec<(usize, i64)>> {
    prop::collection::vec((0usize..200, -3i64..=3), 0..6)
}

fn cochain(cx: &Arc<CochainComplex>, degree: usize, picks: &[(usize, i64)]) -> Cochain {
    let keys = cx.keys(degree);
    let mut coeffs = Coeffs::new();
    for &(i, c) in picks {
        let e = coeffs.entry(keys[i % keys.len()]).or_insert_with(Rational::zero);
        *e += rat(c);
    }
    coeffs.retain(|_, x| !x.is_zero());
    Cochain::from_coeffs(cx, degree, coeffs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(a in 0usize..4, x in entries(), y in entries(), z in entries()) {
        let alg = &algebras()[a];
        let (x, y, z) = (element(alg, &x), element(alg, &y), element(alg, &z));
        let xy = x.bracket(&y).unwrap();
        prop_assert!(xy.add(&y.bracket(&x).unwrap()).unwrap().is_zero());
        let j = x.bracket(&y.bracket(&z).unwrap()).unwrap()
            .add(&y.bracket(&z.bracket(&x).unwrap()).unwrap()).unwrap()
            .add(&z.bracket(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(j.is_zero());
    }

    #[test]
    fn trace_form_is_invariant(a in 0usize..4, x in entries(), y in entries(), z in entries()) {
        let alg = &algebras()[a];
        let (x, y, z) = (element(alg, &x), element(alg, &y), element(alg, &z));
        prop_assert_eq!(x.trace_form(&y).unwrap(), y.trace_form(&x).unwrap());
        let lhs = x.bracket(&y).unwrap().trace_form(&z).unwrap();
        let rhs = x.trace_form(&y.bracket(&z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn grade_split_sums_back(a in 0usize..4, x in entries()) {
        let alg = &algebras()[a];
        let x = element(alg, &x);
        let mut sum = alg.zero();
        for (comp, part) in x.grade_split() {
            prop_assert!(part.coords().keys().all(|&k| alg.component_of(k) == comp));
            sum = sum.add(&part).unwrap();
        }
        prop_assert_eq!(sum, x);
    }

    #[test]
    fn differentials_square_to_zero(picks in prop::collection::vec((0usize..100_000, -2i64..=2), 1..5)) {
        let cx = complex_path2();
        let c1 = cochain(cx, 1, &picks);
        prop_assert!(differential(&differential(&c1).unwrap()).unwrap().is_zero());
        let c3 = cochain(cx, 3, &picks);
        prop_assert!(codifferential(&codifferential(&c3).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn curvature_extension_is_affine(p in prop::collection::vec((0usize..100_000, -2i64..=2), 1..6),
                                     q in prop::collection::vec((0usize..100_000, -2i64..=2), 1..6)) {
        let pair = pair_n2();
        let cx = pair.source_complex();
        let (k1, k2) = (cochain(cx, 2, &p), cochain(cx, 2, &q));
        let lhs = extend_curvature(pair, &k1.add(&k2).unwrap()).unwrap();
        let rhs = extend_curvature(pair, &k1).unwrap()
            .add(&extend_curvature(pair, &k2).unwrap()).unwrap()
            .sub(&psi_alpha(pair).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cubic_tensor_is_symmetric(seed in any::<u64>(), n in 1usize..=3, complex in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, _) = if complex { random_complex_fiber(n, 0, &mut rng) } else { random_product_fiber(n, &mut rng) };
        prop_assert!(build_s(&f).unwrap().is_symmetric());
    }

    #[test]
    fn membership_is_homogeneous(seed in any::<u64>(), n in 1usize..=3, a in 1e-3f64..1e3, b in 1e-3f64..1e3, col in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, t) = random_product_fiber(n, &mut rng);
        let s = build_s(&f).unwrap();
        let probes: Vec<DVector<f64>> = (0..2 * n).map(|k| t.column(k).into_owned()).collect();
        let xi = t.column(col % (2 * n)).into_owned();
        prop_assert!(membership(&s.scaled(b), &(&xi * a), &probes, MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn reconstruction_recovers_eigenspaces(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, t) = random_product_fiber(n, &mut rng);
        let r = reconstruct_lagrangean(&build_s(&f).unwrap(), seed).unwrap();
        let l: DMatrix<f64> = t.columns(0, n).into_owned();
        let rr: DMatrix<f64> = t.columns(n, n).into_owned();
        let err = subspace_distance(&r.first, &l).max(subspace_distance(&r.second, &rr))
            .min(subspace_distance(&r.first, &rr).max(subspace_distance(&r.second, &l)));
        prop_assert!(err < 1e-8, "{}", err);
    }
}
