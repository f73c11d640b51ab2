//! Lie algebra (co)homology on `L(Λ^ℓ g-, g) ≅ Λ^ℓ p+ ⊗ g`.
//!
//! A cochain of degree `ℓ` is stored as coefficients of the basis tensors
//! `e^S ⊗ b_v`, where `S` is an `ℓ`-subset of the `g-` basis (a bit mask over
//! local indices) and `b_v` is a basis element of `g`. The dual basis
//! `z_a ∈ p+` of `g-` with respect to the trace form identifies `e^a` with
//! `z_a`, so the same coefficients describe an element of `Λ^ℓ p+ ⊗ g`.
//!
//! Conventions (all exact):
//!
//! * `∂*(z_1 ∧ … ∧ z_ℓ ⊗ A) = Σ_i (-1)^i z_1 ∧ …ẑ_i… ⊗ [z_i, A]
//!   + Σ_{i<j} (-1)^{i+j} [z_i, z_j] ∧ z_1 ∧ …ẑ_i…ẑ_j… ⊗ A` (1-based `i`);
//!   the first sum is `∂*_1`, the second `∂*_2`.
//! * `(∂φ)(X_0, …, X_ℓ) = Σ_i (-1)^i [X_i, φ(…X̂_i…)]
//!   + Σ_{i<j} (-1)^{i+j} φ([X_i, X_j], …X̂_i…X̂_j…)` (0-based `i`).
//! * `□ = ∂*∂ + ∂∂*`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num::traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded_lie::{Component, Family, GradedAlgebra, Part};
use crate::linalg::{add_entry, axpy, rat, scaled, Rational, RationalMatrix, SparseVec};
use crate::par::{self, Execution};

/// `(mask of g- local indices, value basis index)`.
pub type Key = (u32, usize);
pub type Coeffs = BTreeMap<Key, Rational>;

/// Precomputed structure for the cochain spaces of one algebra.
pub struct CochainComplex {
    alg: Arc<GradedAlgebra>,
    neg: Vec<usize>,
    local_of: Vec<Option<usize>>,
    /// `[X_a, X_b]` in local `g-` coordinates.
    neg_bracket: Vec<Vec<Vec<(usize, Rational)>>>,
    /// `z_a` in global coordinates.
    dual: Vec<SparseVec>,
    /// `[z_a, b_v]`.
    dual_action: Vec<Vec<SparseVec>>,
    /// `[z_a, z_b]` in the `z` basis.
    dual_bracket: Vec<Vec<Vec<(usize, Rational)>>>,
}

impl fmt::Debug for CochainComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CochainComplex").field("family", &self.alg.family()).finish()
    }
}

fn popcount_below(mask: u32, i: usize) -> u32 {
    (mask & ((1u32 << i) - 1)).count_ones()
}

fn sign(parity: u32) -> Rational {
    if parity.is_multiple_of(2) {
        Rational::one()
    } else {
        -Rational::one()
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask & (1 << i) != 0)
}

impl CochainComplex {
    pub fn new(alg: Arc<GradedAlgebra>) -> Arc<Self> {
        let neg = alg.negative_indices();
        assert!(neg.len() <= 31, "g- too large for mask storage");
        let mut local_of = vec![None; alg.dim()];
        for (l, &g) in neg.iter().enumerate() {
            local_of[g] = Some(l);
        }
        let d = neg.len();
        let neg_bracket = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| {
                        alg.bracket_basis(neg[a], neg[b])
                            .iter()
                            .map(|(k, v)| (local_of[*k].expect("g- is a subalgebra"), v.clone()))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        // Dual basis: z_a = Σ_k C[k][a] p_k with C = (T^{-1})^T, T[k][c] = tr(p_k X_c).
        let pos: Vec<usize> = (0..alg.dim()).filter(|&i| alg.grade_of(i) > 0).collect();
        assert_eq!(pos.len(), d);
        let mut t = RationalMatrix::zeros(d, d);
        for (k, &p) in pos.iter().enumerate() {
            for (c, &x) in neg.iter().enumerate() {
                if let Some(v) = alg.trace_pairs(p).get(&x) {
                    t[(k, c)] = v.clone();
                }
            }
        }
        let tinv = t.inverse().expect("trace form pairs p+ with g-");
        let dual: Vec<SparseVec> = (0..d)
            .map(|a| {
                let mut z = SparseVec::new();
                for (k, &p) in pos.iter().enumerate() {
                    add_entry(&mut z, p, tinv[(a, k)].clone());
                }
                z
            })
            .collect();
        let dual_action =
            dual.iter().map(|z| (0..alg.dim()).map(|v| alg.ad_basis(z, v)).collect()).collect();
        let mut me = Self { alg, neg, local_of, neg_bracket, dual, dual_action, dual_bracket: Vec::new() };
        me.dual_bracket = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| {
                        let y = me.alg.bracket_sparse(&me.dual[a], &me.dual[b]);
                        me.dual_coords(&y).into_iter().collect()
                    })
                    .collect()
            })
            .collect();
        Arc::new(me)
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.alg
    }

    /// Global basis indices of `g-`, in local order.
    pub fn negative_basis(&self) -> &[usize] {
        &self.neg
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local_of[global]
    }

    /// Dual basis element `z_a ∈ p+` of the local `g-` basis vector `a`.
    pub fn dual_element(&self, a: usize) -> &SparseVec {
        &self.dual[a]
    }

    /// Coordinates of `Y ∈ p+` in the `z` basis: `y_c = tr(Y X_c)`.
    pub fn dual_coords(&self, y: &SparseVec) -> BTreeMap<usize, Rational> {
        let mut out = BTreeMap::new();
        for (c, &x) in self.neg.iter().enumerate() {
            let e = SparseVec::from([(x, Rational::one())]);
            add_entry(&mut out, c, self.alg.trace_form_sparse(y, &e));
        }
        out
    }

    pub fn neg_dim(&self) -> usize {
        self.neg.len()
    }

    /// All basis keys of degree `ℓ`, masks ascending then value index.
    pub fn keys(&self, degree: usize) -> Vec<Key> {
        let d = self.neg.len();
        let mut out = Vec::new();
        for mask in 0u32..(1u32 << d) {
            if mask.count_ones() as usize == degree {
                for v in 0..self.alg.dim() {
                    out.push((mask, v));
                }
            }
        }
        out
    }

    pub fn cochain_dim(&self, degree: usize) -> usize {
        binomial(self.neg.len(), degree) * self.alg.dim()
    }

    /// Homogeneity `h` with `φ(g_i, g_j) ⊂ g_{i+j+h}`.
    pub fn homogeneity(&self, key: Key) -> i32 {
        self.alg.grade_of(key.1) - bits(key.0).map(|s| self.alg.grade_of(self.neg[s])).sum::<i32>()
    }

    /// Torus weight of a basis tensor (empty when the algebra has no weights).
    pub fn weight(&self, key: Key) -> Vec<i32> {
        match self.alg.weights() {
            None => Vec::new(),
            Some(w) => {
                let mut out = w[key.1].clone();
                for s in bits(key.0) {
                    for (o, x) in out.iter_mut().zip(&w[self.neg[s]]) {
                        *o -= x;
                    }
                }
                out
            }
        }
    }

    fn block_of(&self, key: Key) -> (i32, Vec<i32>) {
        (self.homogeneity(key), self.weight(key))
    }

    /// Components of the `p+` factors of a key (duals of the argument components).
    pub fn key_components(&self, key: Key) -> (Vec<Component>, Component) {
        let args = bits(key.0).map(|s| self.alg.component_of(self.neg[s]).dual()).collect();
        (args, self.alg.component_of(key.1))
    }

    fn dstar_key(&self, key: Key, scale: &Rational, part: DStarPart, out: &mut Coeffs) {
        let (mask, v) = key;
        let elems: Vec<usize> = bits(mask).collect();
        if matches!(part, DStarPart::Full | DStarPart::First) {
            for (i0, &s) in elems.iter().enumerate() {
                let sg = sign(i0 as u32 + 1) * scale;
                let rest = mask & !(1 << s);
                for (w, c) in &self.dual_action[s][v] {
                    add_entry(out, (rest, *w), &sg * c);
                }
            }
        }
        if matches!(part, DStarPart::Full | DStarPart::Second) {
            for i0 in 0..elems.len() {
                for j0 in (i0 + 1)..elems.len() {
                    let (a, b) = (elems[i0], elems[j0]);
                    let rest = mask & !(1 << a) & !(1 << b);
                    let sg = sign((i0 + j0 + 2) as u32) * scale;
                    for (c, y) in &self.dual_bracket[a][b] {
                        if rest & (1 << c) != 0 {
                            continue;
                        }
                        let s2 = sign(popcount_below(rest, *c));
                        add_entry(out, (rest | (1 << c), v), &sg * &s2 * y);
                    }
                }
            }
        }
    }

    fn d_key(&self, key: Key, scale: &Rational, out: &mut Coeffs) {
        let (mask, v) = key;
        let d = self.neg.len();
        // Terms [X_t, φ(...)] with T = S ∪ {t}.
        for t in 0..d {
            if mask & (1 << t) != 0 {
                continue;
            }
            let tm = mask | (1 << t);
            let sg = sign(popcount_below(tm, t)) * scale;
            for (w, c) in self.alg.bracket_basis(self.neg[t], v) {
                add_entry(out, (tm, *w), &sg * c);
            }
        }
        // Terms φ([X_a, X_b], rest) with {c} ∪ rest = S.
        for c in bits(mask) {
            let rest = mask & !(1 << c);
            let s_c = sign(popcount_below(rest, c));
            for a in 0..d {
                if rest & (1 << a) != 0 {
                    continue;
                }
                for b in (a + 1)..d {
                    if rest & (1 << b) != 0 {
                        continue;
                    }
                    let Some((_, beta)) = self.neg_bracket[a][b].iter().find(|(cc, _)| *cc == c) else {
                        continue;
                    };
                    let tm = rest | (1 << a) | (1 << b);
                    let pa = popcount_below(tm, a);
                    let pb = popcount_below(tm, b);
                    let sg = sign(pa + pb) * &s_c * beta * scale;
                    add_entry(out, (tm, v), sg);
                }
            }
        }
    }

    fn dstar_raw(&self, c: &Coeffs, part: DStarPart) -> Coeffs {
        let mut out = Coeffs::new();
        for (k, x) in c {
            self.dstar_key(*k, x, part, &mut out);
        }
        out
    }

    fn d_raw(&self, c: &Coeffs) -> Coeffs {
        let mut out = Coeffs::new();
        for (k, x) in c {
            self.d_key(*k, x, &mut out);
        }
        out
    }

    fn laplacian_key(&self, key: Key) -> Coeffs {
        let one = Rational::one();
        let mut dk = Coeffs::new();
        self.d_key(key, &one, &mut dk);
        let mut out = self.dstar_raw(&dk, DStarPart::Full);
        let mut sk = Coeffs::new();
        self.dstar_key(key, &one, DStarPart::Full, &mut sk);
        for (k, v) in self.d_raw(&sk) {
            add_entry(&mut out, k, v);
        }
        out
    }

    /// `□` on degree 2, split into blocks of equal torus weight (or equal
    /// homogeneity when no weights exist).
    pub fn laplacian_blocks(&self, exec: Execution) -> Vec<LaplacianBlock> {
        let mut groups: BTreeMap<(i32, Vec<i32>), Vec<Key>> = BTreeMap::new();
        for k in self.keys(2) {
            groups.entry(self.block_of(k)).or_default().push(k);
        }
        let groups: Vec<((i32, Vec<i32>), Vec<Key>)> = groups.into_iter().collect();
        par::map(exec, &groups, |((h, w), keys)| {
            let pos: HashMap<Key, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
            let mut m = RationalMatrix::zeros(keys.len(), keys.len());
            for (j, k) in keys.iter().enumerate() {
                for (r, v) in self.laplacian_key(*k) {
                    let i = *pos.get(&r).expect("□ preserves weight blocks");
                    m[(i, j)] = v;
                }
            }
            LaplacianBlock { homogeneity: *h, weight: w.clone(), keys: keys.clone(), matrix: m }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DStarPart {
    Full,
    First,
    Second,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Element of `L(Λ^ℓ g-, g)`.
#[derive(Clone, Debug)]
pub struct Cochain {
    complex: Arc<CochainComplex>,
    degree: usize,
    coeffs: Coeffs,
}

impl PartialEq for Cochain {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.complex, &other.complex) && self.degree == other.degree && self.coeffs == other.coeffs
    }
}

impl Cochain {
    pub fn zero(complex: &Arc<CochainComplex>, degree: usize) -> Self {
        Self { complex: Arc::clone(complex), degree, coeffs: Coeffs::new() }
    }

    pub fn from_coeffs(complex: &Arc<CochainComplex>, degree: usize, coeffs: Coeffs) -> Result<Self> {
        for (mask, v) in coeffs.keys() {
            if mask.count_ones() as usize != degree
                || *v >= complex.alg.dim()
                || (*mask >> complex.neg_dim()) != 0
            {
                return Err(Error::InvalidParameters("cochain key out of range".into()));
            }
        }
        let coeffs = coeffs.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Ok(Self { complex: Arc::clone(complex), degree, coeffs })
    }

    /// Degree-2 cochain from its values on pairs `(a, b)`, `a < b`, of local
    /// `g-` indices.
    pub fn from_pairs<F>(complex: &Arc<CochainComplex>, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> SparseVec,
    {
        let d = complex.neg_dim();
        let mut coeffs = Coeffs::new();
        for a in 0..d {
            for b in (a + 1)..d {
                for (v, x) in f(a, b) {
                    add_entry(&mut coeffs, ((1 << a) | (1 << b), v), x);
                }
            }
        }
        Self { complex: Arc::clone(complex), degree: 2, coeffs }
    }

    pub fn complex(&self) -> &Arc<CochainComplex> {
        &self.complex
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.complex.alg
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.complex, &other.complex) || self.degree != other.degree {
            return Err(Error::AlgebraMismatch(
                format!("{} degree {}", self.complex.alg.family(), self.degree),
                format!("{} degree {}", other.complex.alg.family(), other.degree),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut c = self.coeffs.clone();
        axpy(&mut c, &Rational::one(), &other.coeffs);
        Ok(Self { coeffs: c, ..self.clone() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { coeffs: scaled(&self.coeffs, s), ..self.clone() }
    }

    /// Value on local basis arguments (any order; antisymmetric).
    pub fn value(&self, args: &[usize]) -> SparseVec {
        let mut sorted = args.to_vec();
        let mut parity = 0;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    parity += 1;
                }
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return SparseVec::new();
        }
        let mask = sorted.iter().fold(0u32, |m, &a| m | (1 << a));
        let s = sign(parity);
        self.coeffs.range((mask, 0)..(mask, usize::MAX)).map(|((_, v), x)| (*v, &s * x)).collect()
    }

    /// Value on two arbitrary `g-` vectors given in local coordinates.
    pub fn evaluate2(&self, x: &BTreeMap<usize, Rational>, y: &BTreeMap<usize, Rational>) -> SparseVec {
        let mut out = SparseVec::new();
        for ((mask, v), c) in &self.coeffs {
            let mut it = bits(*mask);
            let (a, b) = (it.next().unwrap_or(0), it.next().unwrap_or(0));
            let z = Rational::zero();
            let det = x.get(&a).unwrap_or(&z) * y.get(&b).unwrap_or(&z) - x.get(&b).unwrap_or(&z) * y.get(&a).unwrap_or(&z);
            if !det.is_zero() {
                add_entry(&mut out, *v, det * c);
            }
        }
        out
    }

    /// Homogeneous components keyed by homogeneity.
    pub fn homogeneous_components(&self) -> BTreeMap<i32, Cochain> {
        let mut out: BTreeMap<i32, Coeffs> = BTreeMap::new();
        for (k, v) in &self.coeffs {
            out.entry(self.complex.homogeneity(*k)).or_default().insert(*k, v.clone());
        }
        out.into_iter().map(|(h, c)| (h, Self { coeffs: c, ..self.clone() })).collect()
    }

    /// Restriction to basis tensors satisfying a predicate.
    pub fn filter<F: Fn(Key) -> bool>(&self, f: F) -> Self {
        Self { coeffs: self.coeffs.iter().filter(|(k, _)| f(**k)).map(|(k, v)| (*k, v.clone())).collect(), ..self.clone() }
    }

    /// Containers (tensor blocks) that carry nonzero coefficients.
    pub fn containers(&self) -> BTreeSet<Container> {
        self.coeffs.keys().filter_map(|k| Container::of_key(&self.complex, *k)).collect()
    }
}

fn check_degree(c: &Cochain, allowed: std::ops::RangeInclusive<usize>) -> Result<()> {
    if !allowed.contains(&c.degree) {
        return Err(Error::UnsupportedDegree(c.degree));
    }
    Ok(())
}

/// Kostant codifferential `∂*` for `ℓ ∈ {1, 2, 3}`.
pub fn codifferential(c: &Cochain) -> Result<Cochain> {
    check_degree(c, 1..=3)?;
    Ok(Cochain { coeffs: c.complex.dstar_raw(&c.coeffs, DStarPart::Full), degree: c.degree - 1, complex: Arc::clone(&c.complex) })
}

/// The split `∂* = ∂*_1 + ∂*_2`.
pub fn codifferential_parts(c: &Cochain) -> Result<(Cochain, Cochain)> {
    check_degree(c, 1..=3)?;
    let mk = |coeffs| Cochain { coeffs, degree: c.degree - 1, complex: Arc::clone(&c.complex) };
    Ok((mk(c.complex.dstar_raw(&c.coeffs, DStarPart::First)), mk(c.complex.dstar_raw(&c.coeffs, DStarPart::Second))))
}

/// Chevalley–Eilenberg differential of `g-` with values in `g`, `ℓ ∈ {0, 1, 2}`.
pub fn differential(c: &Cochain) -> Result<Cochain> {
    check_degree(c, 0..=2)?;
    Ok(Cochain { coeffs: c.complex.d_raw(&c.coeffs), degree: c.degree + 1, complex: Arc::clone(&c.complex) })
}

/// Kostant Laplacian on degree 2.
pub fn laplacian(c: &Cochain) -> Result<Cochain> {
    check_degree(c, 2..=2)?;
    let a = codifferential(&differential(c)?)?;
    let b = differential(&codifferential(c)?)?;
    a.add(&b)
}

/// A tensor block `g_i ∧ g_j ⊗ g_k` of `Λ² p+ ⊗ g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Container {
    pub first: Component,
    pub second: Component,
    pub value: Component,
}

impl Container {
    pub fn new(a: Component, b: Component, value: Component) -> Self {
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        Self { first, second, value }
    }

    pub fn of_key(complex: &CochainComplex, key: Key) -> Option<Self> {
        let (args, value) = complex.key_components(key);
        (args.len() == 2).then(|| Self::new(args[0], args[1], value))
    }

    pub fn contains(&self, complex: &CochainComplex, key: Key) -> bool {
        Self::of_key(complex, key) == Some(*self)
    }

    pub fn homogeneity(&self) -> i32 {
        self.first.grade + self.second.grade + self.value.grade
    }
}

impl fmt::Display for Container {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first == self.second {
            write!(f, "Λ²{}⊗{}", self.first, self.value)
        } else {
            write!(f, "{}∧{}⊗{}", self.first, self.second, self.value)
        }
    }
}

impl Serialize for Container {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One weight block of `□` in degree 2.
#[derive(Clone, Debug)]
pub struct LaplacianBlock {
    pub homogeneity: i32,
    pub weight: Vec<i32>,
    pub keys: Vec<Key>,
    pub matrix: RationalMatrix,
}

/// Exact basis of `ker □` in degree 2.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub vectors: Vec<Cochain>,
    pub homogeneity: Vec<i32>,
    /// The unique tensor block containing each vector, if there is one.
    pub container: Vec<Option<Container>>,
    blocks: Vec<LaplacianBlock>,
    block_of_vector: Vec<usize>,
    pub cochain_dim: usize,
    pub laplacian_rank: usize,
}

pub fn harmonic_kernel(complex: &Arc<CochainComplex>, exec: Execution) -> HarmonicBasis {
    let blocks = complex.laplacian_blocks(exec);
    let kernels = par::map(exec, &blocks, |b| b.matrix.nullspace());
    let mut vectors = Vec::new();
    let mut homogeneity = Vec::new();
    let mut container = Vec::new();
    let mut block_of_vector = Vec::new();
    let mut rank = 0;
    let mut dim = 0;
    for (bi, (b, ker)) in blocks.iter().zip(kernels).enumerate() {
        dim += b.keys.len();
        rank += b.keys.len() - ker.len();
        for v in ker {
            let coeffs: Coeffs = b.keys.iter().zip(v).filter(|(_, x)| !x.is_zero()).map(|(k, x)| (*k, x)).collect();
            let c = Cochain { complex: Arc::clone(complex), degree: 2, coeffs };
            let cs = c.containers();
            container.push(if cs.len() == 1 { cs.into_iter().next() } else { None });
            homogeneity.push(b.homogeneity);
            vectors.push(c);
            block_of_vector.push(bi);
        }
    }
    HarmonicBasis { vectors, homogeneity, container, blocks, block_of_vector, cochain_dim: dim, laplacian_rank: rank }
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn blocks(&self) -> &[LaplacianBlock] {
        &self.blocks
    }

    /// `dim (ker □ ∩ container)`.
    pub fn container_dim(&self, complex: &CochainComplex, container: Container) -> usize {
        self.blocks
            .iter()
            .map(|b| {
                let cols: Vec<usize> = (0..b.keys.len()).filter(|&i| container.contains(complex, b.keys[i])).collect();
                if cols.is_empty() {
                    0
                } else {
                    b.matrix.select_columns(&cols).nullspace().len()
                }
            })
            .sum()
    }

    /// Multiplicities of homogeneities in `ker □`.
    pub fn homogeneity_dims(&self) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for h in &self.homogeneity {
            *out.entry(*h).or_insert(0) += 1;
        }
        out
    }
}

/// Reference decomposition of `ker □` in degree 2 for the lagrangean and
/// path families: the container of each irreducible component.
pub fn reference_table(family: Family) -> Result<Vec<Container>> {
    use Part::*;
    let c = Component::new;
    Ok(match family {
        Family::Lagrangean { n: 1 } => vec![
            Container::new(c(1, R), c(2, Whole), c(1, R)),
            Container::new(c(1, L), c(2, Whole), c(1, L)),
        ],
        Family::Lagrangean { .. } => vec![
            Container::new(c(1, L), c(1, R), c(0, Whole)),
            Container::new(c(1, L), c(1, L), c(-1, R)),
            Container::new(c(1, R), c(1, R), c(-1, L)),
        ],
        Family::Path { m } => {
            let mut rows = vec![
                Container::new(c(1, V), c(2, Whole), c(0, Whole)),
                Container::new(c(1, E), c(2, Whole), c(-1, V)),
            ];
            rows.push(if m == 2 {
                Container::new(c(1, V), c(1, V), c(-1, E))
            } else {
                Container::new(c(1, V), c(1, V), c(-2, Whole))
            });
            rows
        }
        Family::Cr { .. } => return Err(Error::Unsupported("harmonic tables are computed for lagrangean and path".into())),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub homogeneity: i32,
    pub container_label: String,
    pub dimension: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub algebra: String,
    pub rows: Vec<TableRow>,
    pub kernel_dimension: usize,
    pub kernel_homogeneities: BTreeMap<i32, usize>,
    pub laplacian_dimension: usize,
    pub laplacian_rank: usize,
    /// Every reference container meets `ker □` and together they exhaust it.
    pub matches_reference: bool,
}

/// Computes `ker □` and compares it with [`reference_table`].
pub fn table_report(complex: &Arc<CochainComplex>, exec: Execution) -> Result<TableReport> {
    let family = complex.alg.family();
    let reference = reference_table(family)?;
    let basis = harmonic_kernel(complex, exec);
    let rows: Vec<TableRow> = reference
        .iter()
        .map(|c| TableRow { homogeneity: c.homogeneity(), container_label: c.to_string(), dimension: basis.container_dim(complex, *c) })
        .collect();
    let total: usize = rows.iter().map(|r| r.dimension).sum();
    let matches = rows.iter().all(|r| r.dimension > 0) && total == basis.dim();
    Ok(TableReport {
        algebra: family.to_string(),
        rows,
        kernel_dimension: basis.dim(),
        kernel_homogeneities: basis.homogeneity_dims(),
        laplacian_dimension: basis.cochain_dim,
        laplacian_rank: basis.laplacian_rank,
        matches_reference: matches,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Predicates {
    pub regular: bool,
    pub normal: bool,
    pub torsion_free: bool,
    /// `None` stands for `+∞` (the zero cochain).
    pub min_homogeneity: Option<i32>,
}

pub fn predicates(c: &Cochain) -> Result<Predicates> {
    check_degree(c, 2..=2)?;
    let min_h = c.coeffs.keys().map(|k| c.complex.homogeneity(*k)).min();
    Ok(Predicates {
        regular: min_h.is_none_or(|h| h > 0),
        normal: codifferential(c)?.is_zero(),
        torsion_free: c.coeffs.keys().all(|(_, v)| c.algebra().grade_of(*v) >= 0),
        min_homogeneity: min_h,
    })
}

/// Components of a cochain in `p+ ∧ g2 ⊗ g` along `g1^E ∧ g2` and `g1^V ∧ g2`.
#[derive(Clone, Debug)]
pub struct PiProjection {
    pub pi_e: Cochain,
    pub pi_v: Cochain,
}

pub fn project_pi(c: &Cochain) -> Result<PiProjection> {
    check_degree(c, 2..=2)?;
    let complex = &c.complex;
    if !matches!(complex.alg.family(), Family::Path { .. }) {
        return Err(Error::Unsupported("π projections are defined on the path algebra".into()));
    }
    let comp = |s: usize| complex.alg.component_of(complex.neg[s]);
    let mut pi_e = Coeffs::new();
    let mut pi_v = Coeffs::new();
    for (k, x) in &c.coeffs {
        let parts: Vec<Component> = bits(k.0).map(comp).collect();
        let n2 = parts.iter().filter(|p| p.grade == -2).count();
        match n2 {
            0 => return Err(Error::Support("p+ ∧ g2 ⊗ g".into())),
            1 => {
                let other = parts.iter().find(|p| p.grade == -1).expect("one grade -1 slot").part;
                match other {
                    Part::E => pi_e.insert(*k, x.clone()),
                    _ => pi_v.insert(*k, x.clone()),
                };
            }
            _ => {}
        }
    }
    let mk = |coeffs| Cochain { coeffs, degree: 2, complex: Arc::clone(complex) };
    Ok(PiProjection { pi_e: mk(pi_e), pi_v: mk(pi_v) })
}

/// Harmonic representative of a `∂*`-closed cochain, with its parts along
/// the harmonic containers.
#[derive(Clone, Debug)]
pub struct HarmonicProjection {
    pub harmonic: Cochain,
    pub parts: BTreeMap<Option<Container>, Cochain>,
}

/// The `ker □` representative of the class of `c` in `ker ∂* / im ∂*`.
pub fn harmonic_project(c: &Cochain, basis: &HarmonicBasis) -> Result<HarmonicProjection> {
    check_degree(c, 2..=2)?;
    if !codifferential(c)?.is_zero() {
        return Err(Error::Support("ker ∂*".into()));
    }
    let complex = &c.complex;
    let mut by_block: BTreeMap<(i32, Vec<i32>), Coeffs> = BTreeMap::new();
    for (k, v) in &c.coeffs {
        by_block.entry(complex.block_of(*k)).or_default().insert(*k, v.clone());
    }
    let keys3 = complex.keys(3);
    let mut harmonic = Coeffs::new();
    let mut parts: BTreeMap<Option<Container>, Coeffs> = BTreeMap::new();
    for (blk, target) in by_block {
        let Some(bi) = basis.blocks.iter().position(|b| (b.homogeneity, b.weight.clone()) == blk) else {
            return Err(Error::Solver("block missing from harmonic basis".into()));
        };
        let keys = &basis.blocks[bi].keys;
        let pos: HashMap<Key, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let harm: Vec<usize> = (0..basis.vectors.len()).filter(|&i| basis.block_of_vector[i] == bi).collect();
        let mut columns: Vec<SparseVec> = harm
            .iter()
            .map(|&i| basis.vectors[i].coeffs.iter().map(|(k, v)| (pos[k], v.clone())).collect())
            .collect();
        for k3 in keys3.iter().filter(|k| complex.block_of(**k) == blk) {
            let mut img = Coeffs::new();
            complex.dstar_key(*k3, &Rational::one(), DStarPart::Full, &mut img);
            if !img.is_empty() {
                columns.push(img.iter().map(|(k, v)| (pos[k], v.clone())).collect());
            }
        }
        let a = RationalMatrix::from_sparse_columns(keys.len(), &columns);
        let rhs: Vec<Rational> = keys.iter().map(|k| target.get(k).cloned().unwrap_or_else(Rational::zero)).collect();
        let x = a.solve(&rhs).ok_or_else(|| Error::Solver("class not representable".into()))?;
        for (j, &i) in harm.iter().enumerate() {
            if x[j].is_zero() {
                continue;
            }
            let part = parts.entry(basis.container[i]).or_default();
            axpy(part, &x[j], &basis.vectors[i].coeffs);
            axpy(&mut harmonic, &x[j], &basis.vectors[i].coeffs);
        }
    }
    let mk = |coeffs| Cochain { coeffs, degree: 2, complex: Arc::clone(complex) };
    Ok(HarmonicProjection { harmonic: mk(harmonic), parts: parts.into_iter().map(|(k, v)| (k, mk(v))).collect() })
}

/// Basis of `ker ∂*_1 ∩ ker ∂*_2` among degree-2 cochains whose values lie
/// in the span of `values`.
pub fn split_kernel(complex: &Arc<CochainComplex>, values: &BTreeSet<usize>, exec: Execution) -> Vec<Cochain> {
    let mut groups: BTreeMap<(i32, Vec<i32>), Vec<Key>> = BTreeMap::new();
    for k in complex.keys(2) {
        if values.contains(&k.1) {
            groups.entry(complex.block_of(k)).or_default().push(k);
        }
    }
    let groups: Vec<Vec<Key>> = groups.into_values().collect();
    let per_block = par::map(exec, &groups, |keys| {
        let mut rows: BTreeMap<(usize, Key), usize> = BTreeMap::new();
        let mut cols: Vec<SparseVec> = Vec::with_capacity(keys.len());
        for k in keys {
            let mut col = SparseVec::new();
            for (part, tag) in [(DStarPart::First, 0), (DStarPart::Second, 1)] {
                let mut out = Coeffs::new();
                complex.dstar_key(*k, &Rational::one(), part, &mut out);
                for (rk, v) in out {
                    let n = rows.len();
                    let r = *rows.entry((tag, rk)).or_insert(n);
                    col.insert(r, v);
                }
            }
            cols.push(col);
        }
        let m = RationalMatrix::from_sparse_columns(rows.len(), &cols);
        m.nullspace()
            .into_iter()
            .map(|v| keys.iter().zip(v).filter(|(_, x)| !x.is_zero()).map(|(k, x)| (*k, x)).collect::<Coeffs>())
            .collect::<Vec<_>>()
    });
    per_block.into_iter().flatten().map(|coeffs| Cochain { complex: Arc::clone(complex), degree: 2, coeffs }).collect()
}

/// Ranks and kernel dimension entering the Hodge decomposition in degree 2:
/// `(dim C², rank ∂ on C¹, rank ∂* on C³, dim ker □)`.
pub fn hodge_dimensions(complex: &Arc<CochainComplex>, exec: Execution) -> (usize, usize, usize, usize) {
    let basis = harmonic_kernel(complex, exec);
    let rank_of = |degree: usize, down: bool| -> usize {
        let mut groups: BTreeMap<(i32, Vec<i32>), Vec<SparseVec>> = BTreeMap::new();
        let pos: HashMap<Key, usize> = complex.keys(2).into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        for k in complex.keys(degree) {
            let mut out = Coeffs::new();
            if down {
                complex.dstar_key(k, &Rational::one(), DStarPart::Full, &mut out);
            } else {
                complex.d_key(k, &Rational::one(), &mut out);
            }
            if !out.is_empty() {
                groups.entry(complex.block_of(k)).or_default().push(out.iter().map(|(k, v)| (pos[k], v.clone())).collect());
            }
        }
        let groups: Vec<Vec<SparseVec>> = groups.into_values().collect();
        par::map(exec, &groups, |cols| {
            let used: BTreeSet<usize> = cols.iter().flat_map(|c| c.keys().copied()).collect();
            let idx: HashMap<usize, usize> = used.iter().enumerate().map(|(i, k)| (*k, i)).collect();
            let remapped: Vec<SparseVec> = cols.iter().map(|c| c.iter().map(|(k, v)| (idx[k], v.clone())).collect()).collect();
            RationalMatrix::from_sparse_columns(used.len(), &remapped).rank()
        })
        .into_iter()
        .sum()
    };
    (basis.cochain_dim, rank_of(1, false), rank_of(3, true), basis.dim())
}

/// Inner product `tr(X Y^T)` on `g` (halved for `cr`), extended to cochains
/// through the dual basis.
pub fn inner_product(a: &Cochain, b: &Cochain) -> Result<Rational> {
    a.check_same(b)?;
    let complex = &a.complex;
    let g = complex.alg.transpose_gram();
    let d = complex.neg_dim();
    // Gram matrix of the z basis.
    let mut gz = RationalMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut t = Rational::zero();
            for (p, x) in &complex.dual[i] {
                for (q, y) in &complex.dual[j] {
                    t += x * y * &g[(*p, *q)];
                }
            }
            gz[(i, j)] = t;
        }
    }
    let mut total = Rational::zero();
    for ((s, v), x) in &a.coeffs {
        for ((t, w), y) in &b.coeffs {
            let gv = &g[(*v, *w)];
            if gv.is_zero() {
                continue;
            }
            let si: Vec<usize> = bits(*s).collect();
            let ti: Vec<usize> = bits(*t).collect();
            let m = RationalMatrix::from_rows(si.iter().map(|&i| ti.iter().map(|&j| gz[(i, j)].clone()).collect()).collect());
            total += determinant(&m) * gv * x * y;
        }
    }
    Ok(total)
}

fn determinant(m: &RationalMatrix) -> Rational {
    match m.rows() {
        0 => Rational::one(),
        1 => m[(0, 0)].clone(),
        n => (0..n)
            .map(|j| {
                let minor = RationalMatrix::from_rows(
                    (1..n).map(|i| (0..n).filter(|&c| c != j).map(|c| m[(i, c)].clone()).collect()).collect(),
                );
                let s = if j % 2 == 0 { rat(1) } else { rat(-1) };
                s * &m[(0, j)] * determinant(&minor)
            })
            .fold(Rational::zero(), |a, b| a + b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded_lie::build_algebra;

    fn complex(f: Family) -> Arc<CochainComplex> {
        CochainComplex::new(build_algebra(f).unwrap())
    }

    fn basis_cochain(cx: &Arc<CochainComplex>, key: Key) -> Cochain {
        Cochain::from_coeffs(cx, key.0.count_ones() as usize, Coeffs::from([(key, rat(1))])).unwrap()
    }

    #[test]
    fn dual_basis_pairs_with_g_minus() {
        for f in [Family::Lagrangean { n: 2 }, Family::Path { m: 3 }, Family::Cr { p: 1, q: 1 }] {
            let cx = complex(f);
            for a in 0..cx.neg_dim() {
                let c = cx.dual_coords(cx.dual_element(a));
                assert_eq!(c, BTreeMap::from([(a, rat(1))]), "{f}");
            }
        }
    }

    #[test]
    fn codifferential_of_decomposable_element() {
        // Z = E13, W = E12, A = E21 in 1-based notation for n = 1.
        let cx = complex(Family::Lagrangean { n: 1 });
        let alg = cx.algebra().clone();
        let idx = |r, c| {
            let e = alg.element_from_entries(&[(r, c, 1)]).unwrap();
            *e.coords().keys().next().unwrap()
        };
        let loc = |r, c| cx.local_index(idx(r, c)).unwrap();
        // z_a is the transpose of X_a: Z = E13 ↔ X = E31, W = E12 ↔ X = E21.
        let (z, w) = (loc(2, 0), loc(1, 0));
        let a = idx(1, 0);
        let mut c = Coeffs::new();
        let (lo, hi, s) = if z < w { (z, w, rat(1)) } else { (w, z, rat(-1)) };
        c.insert(((1 << lo) | (1 << hi), a), s);
        let c = Cochain::from_coeffs(&cx, 2, c).unwrap();
        let out = codifferential(&c).unwrap();

        // Oracle: -W ⊗ [Z, A] + Z ⊗ [W, A] - [Z, W] ⊗ A by matrix products.
        let e = |r, c| alg.element_from_entries(&[(r, c, 1)]).unwrap();
        let (zm, wm, am) = (e(0, 2), e(0, 1), e(1, 0));
        let mut expect = Coeffs::new();
        for (coef, arg, val) in [(rat(-1), &wm, zm.bracket(&am).unwrap()), (rat(1), &zm, wm.bracket(&am).unwrap())] {
            let l = cx.dual_coords(arg.coords());
            for (li, lv) in l {
                for (v, x) in val.coords() {
                    add_entry(&mut expect, (1 << li, *v), &coef * &lv * x);
                }
            }
        }
        let zw = zm.bracket(&wm).unwrap();
        for (li, lv) in cx.dual_coords(zw.coords()) {
            add_entry(&mut expect, (1 << li, a), -lv);
        }
        assert_eq!(out.coeffs(), &expect);
        assert!(codifferential(&Cochain::zero(&cx, 2)).unwrap().is_zero());
        assert_eq!(codifferential(&Cochain::zero(&cx, 0)).unwrap_err(), Error::UnsupportedDegree(0));
    }

    #[test]
    fn complexes_square_to_zero_on_bases() {
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Path { m: 2 }, Family::Cr { p: 1, q: 0 }] {
            let cx = complex(f);
            for k in cx.keys(1) {
                let c = basis_cochain(&cx, k);
                assert!(differential(&differential(&c).unwrap()).unwrap().is_zero(), "{f} dd {k:?}");
            }
            for k in cx.keys(3) {
                let c = basis_cochain(&cx, k);
                assert!(codifferential(&codifferential(&c).unwrap()).unwrap().is_zero(), "{f} d*d* {k:?}");
            }
        }
    }

    #[test]
    fn coboundary_of_zero_cochain_is_closed() {
        let cx = complex(Family::Lagrangean { n: 2 });
        for v in 0..cx.algebra().dim() {
            let a = basis_cochain(&cx, (0, v));
            let phi = differential(&a).unwrap();
            for x in 0..cx.neg_dim() {
                let expect = cx.algebra().bracket_basis(cx.negative_basis()[x], v).clone();
                assert_eq!(phi.value(&[x]), expect);
            }
            assert!(differential(&phi).unwrap().is_zero());
        }
    }

    #[test]
    fn differential_output_is_antisymmetric() {
        let cx = complex(Family::Lagrangean { n: 1 });
        let c = Cochain::from_pairs(&cx, |a, b| SparseVec::from([((a * 3 + b) % 8, rat((a + 2 * b) as i64))]));
        let d = differential(&c).unwrap();
        for (x, y, z) in [(0, 1, 2), (1, 0, 2), (2, 1, 0)] {
            let v = d.value(&[x, y, z]);
            let w = d.value(&[y, x, z]);
            assert_eq!(v, scaled(&w, &rat(-1)));
        }
    }

    #[test]
    fn homogeneity_examples() {
        let cx = complex(Family::Lagrangean { n: 2 });
        let alg = cx.algebra();
        let g2 = cx.local_index(alg.range(Component::new(-2, Part::Whole)).start).unwrap();
        let g1 = cx.local_index(alg.range(Component::new(-1, Part::L)).start).unwrap();
        let v = alg.range(Component::new(1, Part::L)).start;
        assert_eq!(cx.homogeneity(((1 << g2) | (1 << g1), v)), 4);
        let v = alg.range(Component::new(-1, Part::R)).start;
        let g1b = g1 + 1;
        assert_eq!(cx.homogeneity(((1 << g1) | (1 << g1b), v)), 1);
    }

    #[test]
    fn predicates_of_zero_and_torsion() {
        let cx = complex(Family::Lagrangean { n: 2 });
        let p = predicates(&Cochain::zero(&cx, 2)).unwrap();
        assert_eq!(p, Predicates { regular: true, normal: true, torsion_free: true, min_homogeneity: None });
        let basis = harmonic_kernel(&cx, Execution::Sequential);
        let tau = basis.homogeneity.iter().position(|h| *h == 1).unwrap();
        let p = predicates(&basis.vectors[tau]).unwrap();
        assert!(!p.torsion_free);
        assert!(p.regular && p.normal);
    }

    #[test]
    fn lagrangean_n1_kernel_matches_table() {
        let cx = complex(Family::Lagrangean { n: 1 });
        let basis = harmonic_kernel(&cx, Execution::Sequential);
        assert_eq!(basis.homogeneity, vec![4, 4]);
        let containers: BTreeSet<Container> = basis.container.iter().map(|c| c.unwrap()).collect();
        let expect: BTreeSet<Container> = reference_table(cx.algebra().family()).unwrap().into_iter().collect();
        assert_eq!(containers, expect);
        assert!(table_report(&cx, Execution::Sequential).unwrap().matches_reference);
    }

    #[test]
    fn harmonic_vectors_are_pure_and_closed() {
        for f in [Family::Lagrangean { n: 2 }, Family::Path { m: 2 }] {
            let cx = complex(f);
            let basis = harmonic_kernel(&cx, Execution::Parallel);
            for (v, h) in basis.vectors.iter().zip(&basis.homogeneity) {
                let comps = v.homogeneous_components();
                assert_eq!(comps.keys().copied().collect::<Vec<_>>(), vec![*h]);
                assert!(laplacian(v).unwrap().is_zero());
                assert!(codifferential(v).unwrap().is_zero(), "{f}");
                assert!(differential(v).unwrap().is_zero(), "{f}");
            }
        }
    }

    #[test]
    fn hodge_dimensions_add_up() {
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Path { m: 2 }, Family::Path { m: 3 }] {
            let cx = complex(f);
            let (dim, r_d, r_ds, k) = hodge_dimensions(&cx, Execution::Parallel);
            assert_eq!(dim, r_d + r_ds + k, "{f}");
        }
    }

    #[test]
    fn sequential_and_parallel_kernels_agree() {
        let cx = complex(Family::Path { m: 2 });
        let a = harmonic_kernel(&cx, Execution::Sequential);
        let b = harmonic_kernel(&cx, Execution::Parallel);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn harmonic_projection_is_idempotent_and_kills_exact() {
        let cx = complex(Family::Path { m: 2 });
        let basis = harmonic_kernel(&cx, Execution::Parallel);
        for v in &basis.vectors {
            assert_eq!(&harmonic_project(v, &basis).unwrap().harmonic, v);
        }
        let keys3 = cx.keys(3);
        let c = basis_cochain(&cx, keys3[keys3.len() / 3]);
        let exact = codifferential(&c).unwrap();
        assert!(harmonic_project(&exact, &basis).unwrap().harmonic.is_zero());
        // Not ∂*-closed.
        let k2 = cx.keys(2)[5];
        let probe = basis_cochain(&cx, k2);
        if !codifferential(&probe).unwrap().is_zero() {
            assert!(harmonic_project(&probe, &basis).is_err());
        }
    }

    #[test]
    fn laplacian_commutes_with_codifferential() {
        let cx = complex(Family::Lagrangean { n: 1 });
        for k in cx.keys(3).into_iter().step_by(7) {
            let c = basis_cochain(&cx, k);
            let x = codifferential(&c).unwrap();
            let y = laplacian(&x).unwrap();
            // □∂* = ∂*∂∂* is in the image of ∂*.
            let z = codifferential(&differential(&x).unwrap()).unwrap();
            assert_eq!(y, z);
        }
    }

    #[test]
    fn adjointness_constant_is_uniform() {
        for f in [Family::Lagrangean { n: 1 }, Family::Path { m: 2 }] {
            let cx = complex(f);
            for degree in [1usize, 2] {
                let mut ratio: Option<Rational> = None;
                let lower = cx.keys(degree);
                let upper = cx.keys(degree + 1);
                for (i, k) in lower.iter().enumerate().step_by(5) {
                    let phi = basis_cochain(&cx, *k);
                    let dphi = differential(&phi).unwrap();
                    let probes: Vec<Key> =
                        dphi.coeffs().keys().copied().chain(upper.iter().skip(i % 3).step_by(37).copied()).collect();
                    for l in &probes {
                        let psi = basis_cochain(&cx, *l);
                        let lhs = inner_product(&dphi, &psi).unwrap();
                        let rhs = inner_product(&phi, &codifferential(&psi).unwrap()).unwrap();
                        if rhs.is_zero() {
                            assert!(lhs.is_zero(), "{f}");
                            continue;
                        }
                        let r = lhs / rhs;
                        match &ratio {
                            None => ratio = Some(r),
                            Some(x) => assert_eq!(x, &r, "{f} degree {degree}"),
                        }
                    }
                }
                assert!(ratio.is_some());
            }
        }
    }
}
