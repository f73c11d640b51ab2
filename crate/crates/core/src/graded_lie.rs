//! Contact-graded matrix Lie algebras with exact structure constants.
//!
//! Three families are supported:
//!
//! * `lagrangean(n)`: `sl(n+2, R)` with block sizes `(1, n, 1)`;
//! * `path(m)`: `sl(m+2, R)` with block sizes `(1, 1, m)`;
//! * `cr(p, q)`: `su(p+1, q+1)` inside `sl(n+2, C)`, `n = p+q`, block sizes
//!   `(1, n, 1)`, realized as real `2(n+2) x 2(n+2)` matrices so that every
//!   structure constant stays rational.
//!
//! The basis is ordered by ascending grade, then by component label, then
//! row-major. Downstream code addresses subspaces only through
//! [`Component`] labels.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num::traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add_entry, axpy, rat, ratio, to_f64, Rational, RationalMatrix, SparseVec};

/// Which algebra to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Lagrangean { n: usize },
    Path { m: usize },
    Cr { p: usize, q: usize },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Lagrangean { n: 0 } => Err(Error::InvalidParameters("lagrangean requires n >= 1".into())),
            Family::Path { m } if m <= 1 => Err(Error::InvalidParameters("path requires m >= 2".into())),
            Family::Cr { p, q } if p + q == 0 => Err(Error::InvalidParameters("cr requires p + q >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Side length of the defining (complex for `cr`) matrices.
    pub fn matrix_size(&self) -> usize {
        match *self {
            Family::Lagrangean { n } => n + 2,
            Family::Path { m } => m + 2,
            Family::Cr { p, q } => p + q + 2,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Family::Cr { .. })
    }

    fn block_sizes(&self) -> [usize; 3] {
        match *self {
            Family::Lagrangean { n } => [1, n, 1],
            Family::Path { m } => [1, 1, m],
            Family::Cr { p, q } => [1, p + q, 1],
        }
    }

    /// Block index (0, 1 or 2) of a row/column of the defining matrix.
    pub fn block_of(&self, index: usize) -> usize {
        let [a, b, _] = self.block_sizes();
        if index < a {
            0
        } else if index < a + b {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Lagrangean { n } => write!(f, "lagrangean(n={n})"),
            Family::Path { m } => write!(f, "path(m={m})"),
            Family::Cr { p, q } => write!(f, "cr(p={p},q={q})"),
        }
    }
}

/// Refinement of a grading component (`L`/`R` for lagrangean, `E`/`V` for path).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    Whole,
    L,
    R,
    E,
    V,
}

/// Label of a grading component, e.g. `g-1^L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Component {
    pub grade: i32,
    pub part: Part,
}

impl Component {
    pub const fn new(grade: i32, part: Part) -> Self {
        Self { grade, part }
    }

    /// The component paired with this one by the trace form.
    pub fn dual(self) -> Self {
        Self { grade: -self.grade, part: self.part }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.grade)?;
        match self.part {
            Part::Whole => Ok(()),
            Part::L => write!(f, "^L"),
            Part::R => write!(f, "^R"),
            Part::E => write!(f, "^E"),
            Part::V => write!(f, "^V"),
        }
    }
}

/// Sparse real matrix: `(row, col, value)` triples, no repeated positions.
pub type SparseMatrix = Vec<(usize, usize, Rational)>;

#[derive(Clone, Debug, Serialize)]
pub struct ComponentDescriptor {
    pub label: String,
    pub dim: usize,
}

/// JSON-serializable summary of an algebra.
#[derive(Clone, Debug, Serialize)]
pub struct AlgebraDescriptor {
    pub family: String,
    pub parameters: BTreeMap<String, usize>,
    pub dimension: usize,
    pub components: Vec<ComponentDescriptor>,
}

pub struct GradedAlgebra {
    family: Family,
    /// Side length of the real realization.
    real_size: usize,
    basis: Vec<SparseMatrix>,
    grade_of: Vec<usize>,
    components: Vec<(Component, std::ops::Range<usize>)>,
    weights: Option<Vec<Vec<i32>>>,
    brackets: Vec<Vec<SparseVec>>,
    trace_pairs: Vec<SparseVec>,
    pivots: Vec<usize>,
    pivot_inverse: RationalMatrix,
    pivot_inverse_f64: DMatrix<f64>,
}

impl fmt::Debug for GradedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedAlgebra").field("family", &self.family).field("dim", &self.dim()).finish()
    }
}

struct RawBasis {
    component: Component,
    /// Complex entries `(row, col, re, im)` of the defining matrix.
    entries: Vec<(usize, usize, Rational, Rational)>,
    weight: Option<Vec<i32>>,
}

/// Builds one of the three algebra families.
pub fn build_algebra(family: Family) -> Result<Arc<GradedAlgebra>> {
    family.validate()?;
    let raw = match family {
        Family::Lagrangean { .. } | Family::Path { .. } => split_real_basis(family),
        Family::Cr { p, q } => cr_basis(p, q),
    };
    Ok(Arc::new(GradedAlgebra::from_raw(family, raw)))
}

fn component_order(family: Family) -> Vec<Component> {
    let (a, b) = match family {
        Family::Lagrangean { .. } => (Part::L, Part::R),
        Family::Path { .. } => (Part::E, Part::V),
        Family::Cr { .. } => (Part::Whole, Part::Whole),
    };
    let mut out = vec![Component::new(-2, Part::Whole), Component::new(-1, a)];
    if a != b {
        out.push(Component::new(-1, b));
    }
    out.push(Component::new(0, Part::Whole));
    out.push(Component::new(1, a));
    if a != b {
        out.push(Component::new(1, b));
    }
    out.push(Component::new(2, Part::Whole));
    out
}

fn classify_real(family: Family, i: usize, j: usize) -> Component {
    let (bi, bj) = (family.block_of(i), family.block_of(j));
    let grade = bj as i32 - bi as i32;
    let part = match (grade.abs(), bi.min(bj)) {
        (1, 0) => match family {
            Family::Path { .. } => Part::E,
            _ => Part::L,
        },
        (1, _) => match family {
            Family::Path { .. } => Part::V,
            _ => Part::R,
        },
        _ => Part::Whole,
    };
    Component::new(grade, part)
}

fn unit_weight(size: usize, i: usize, j: usize) -> Vec<i32> {
    let mut w = vec![0; size];
    w[i] += 1;
    w[j] -= 1;
    w
}

fn split_real_basis(family: Family) -> Vec<RawBasis> {
    let size = family.matrix_size();
    let mut raw = Vec::new();
    for comp in component_order(family) {
        for i in 0..size {
            for j in 0..size {
                if classify_real(family, i, j) != comp {
                    continue;
                }
                if i != j {
                    raw.push(RawBasis {
                        component: comp,
                        entries: vec![(i, j, rat(1), rat(0))],
                        weight: Some(unit_weight(size, i, j)),
                    });
                } else if i + 1 < size {
                    raw.push(RawBasis {
                        component: comp,
                        entries: vec![(i, i, rat(1), rat(0)), (i + 1, i + 1, rat(-1), rat(0))],
                        weight: Some(vec![0; size]),
                    });
                }
            }
        }
    }
    raw
}

fn cr_basis(p: usize, q: usize) -> Vec<RawBasis> {
    let n = p + q;
    let last = n + 1;
    let sig = |j: usize| if j <= p { rat(1) } else { rat(-1) };
    let z = || rat(0);
    let mut raw = Vec::new();
    let mut push = |grade: i32, entries: Vec<(usize, usize, Rational, Rational)>| {
        raw.push(RawBasis { component: Component::new(grade, Part::Whole), entries, weight: None });
    };
    // g-2: x, sitting as i*x in the bottom-left corner.
    push(-2, vec![(last, 0, z(), rat(1))]);
    // g-1: X in C^n, with -X^* I in the bottom row.
    for j in 1..=n {
        push(-1, vec![(j, 0, rat(1), z()), (last, j, -sig(j), z())]);
        push(-1, vec![(j, 0, z(), rat(1)), (last, j, z(), sig(j))]);
    }
    // g0: Re w, then A = I B with B anti-Hermitian; trace balanced by Im w.
    push(0, vec![(0, 0, rat(1), z()), (last, last, rat(-1), z())]);
    for j in 1..=n {
        for k in j..=n {
            if j == k {
                let half = -sig(j) * ratio(1, 2);
                push(0, vec![(0, 0, z(), half.clone()), (j, j, z(), sig(j)), (last, last, z(), half)]);
            } else {
                push(0, vec![(j, k, sig(j), z()), (k, j, -sig(k), z())]);
                push(0, vec![(j, k, z(), sig(j)), (k, j, z(), sig(k))]);
            }
        }
    }
    // g1: Z in C^{n*}, with -I Z^* in the right column.
    for j in 1..=n {
        push(1, vec![(0, j, rat(1), z()), (j, last, -sig(j), z())]);
        push(1, vec![(0, j, z(), rat(1)), (j, last, z(), sig(j))]);
    }
    // g2: i*z in the top-right corner.
    push(2, vec![(0, last, z(), rat(1))]);
    raw
}

fn sparse_mul(a: &SparseMatrix, b: &SparseMatrix) -> BTreeMap<(usize, usize), Rational> {
    let mut out = BTreeMap::new();
    for (i, k, x) in a {
        for (k2, j, y) in b {
            if k == k2 {
                add_entry(&mut out, (*i, *j), x * y);
            }
        }
    }
    out
}

fn sparse_commutator(a: &SparseMatrix, b: &SparseMatrix) -> BTreeMap<(usize, usize), Rational> {
    let mut out = sparse_mul(a, b);
    for (k, v) in sparse_mul(b, a) {
        add_entry(&mut out, k, -v);
    }
    out
}

impl GradedAlgebra {
    fn from_raw(family: Family, raw: Vec<RawBasis>) -> Self {
        let size = family.matrix_size();
        let complex = family.is_complex();
        let real_size = if complex { 2 * size } else { size };
        let order = component_order(family);

        let mut basis = Vec::with_capacity(raw.len());
        let mut grade_of = Vec::with_capacity(raw.len());
        let mut weights = Vec::new();
        let mut has_weights = true;
        for rb in &raw {
            let mut m: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
            for (r, c, re, im) in &rb.entries {
                if complex {
                    add_entry(&mut m, (*r, *c), re.clone());
                    add_entry(&mut m, (r + size, c + size), re.clone());
                    add_entry(&mut m, (r + size, *c), im.clone());
                    add_entry(&mut m, (*r, c + size), -im.clone());
                } else {
                    debug_assert!(im.is_zero());
                    add_entry(&mut m, (*r, *c), re.clone());
                }
            }
            basis.push(m.into_iter().map(|((r, c), v)| (r, c, v)).collect::<SparseMatrix>());
            grade_of.push(order.iter().position(|c| *c == rb.component).expect("known component"));
            match &rb.weight {
                Some(w) => weights.push(w.clone()),
                None => has_weights = false,
            }
        }
        let mut components = Vec::new();
        let mut start = 0;
        for (ci, comp) in order.iter().enumerate() {
            let len = grade_of.iter().filter(|&&g| g == ci).count();
            components.push((*comp, start..start + len));
            start += len;
        }

        let dim = basis.len();
        // Pivot positions: a set of matrix entries on which the basis is invertible.
        let flat = |r: usize, c: usize| r * real_size + c;
        let mut rows: Vec<SparseVec> = Vec::with_capacity(dim);
        for b in &basis {
            rows.push(b.iter().map(|(r, c, v)| (flat(*r, *c), v.clone())).collect());
        }
        let pivots = choose_pivots(&rows);
        let mut k = RationalMatrix::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            for (pi, &p) in pivots.iter().enumerate() {
                if let Some(v) = row.get(&p) {
                    k[(pi, i)] = v.clone();
                }
            }
        }
        let pivot_inverse = k.inverse().expect("basis matrices are independent");
        let pivot_inverse_f64 = DMatrix::from_fn(dim, dim, |i, j| to_f64(&pivot_inverse[(i, j)]));

        let mut alg = Self {
            family,
            real_size,
            basis,
            grade_of,
            components,
            weights: has_weights.then_some(weights),
            brackets: Vec::new(),
            trace_pairs: Vec::new(),
            pivots,
            pivot_inverse,
            pivot_inverse_f64,
        };

        let mut brackets = vec![vec![SparseVec::new(); dim]; dim];
        for i in 0..dim {
            for j in (i + 1)..dim {
                let m = sparse_commutator(&alg.basis[i], &alg.basis[j]);
                let c = alg.coords_of_entries(&m).expect("basis is closed under brackets");
                brackets[j][i] = c.iter().map(|(k, v)| (*k, -v.clone())).collect();
                brackets[i][j] = c;
            }
        }
        alg.brackets = brackets;

        let scale = if complex { ratio(1, 2) } else { rat(1) };
        let mut trace_pairs = vec![SparseVec::new(); dim];
        for i in 0..dim {
            let lookup: HashMap<(usize, usize), &Rational> =
                alg.basis[i].iter().map(|(r, c, v)| ((*c, *r), v)).collect();
            for j in 0..dim {
                let mut t = Rational::zero();
                for (r, c, v) in &alg.basis[j] {
                    if let Some(x) = lookup.get(&(*r, *c)) {
                        t += *x * v;
                    }
                }
                if !t.is_zero() {
                    trace_pairs[i].insert(j, t * &scale);
                }
            }
        }
        alg.trace_pairs = trace_pairs;
        alg
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Side length of the defining matrices (complex side for `cr`).
    pub fn ambient_size(&self) -> usize {
        self.family.matrix_size()
    }

    /// Side length of the real realization.
    pub fn real_size(&self) -> usize {
        self.real_size
    }

    pub fn basis_matrix(&self, i: usize) -> &SparseMatrix {
        &self.basis[i]
    }

    pub fn components(&self) -> impl Iterator<Item = (Component, std::ops::Range<usize>)> + '_ {
        self.components.iter().map(|(c, r)| (*c, r.clone()))
    }

    pub fn component_of(&self, i: usize) -> Component {
        self.components[self.grade_of[i]].0
    }

    pub fn grade_of(&self, i: usize) -> i32 {
        self.component_of(i).grade
    }

    /// Index range of a component; empty if the label does not occur.
    pub fn range(&self, comp: Component) -> std::ops::Range<usize> {
        self.components.iter().find(|(c, _)| *c == comp).map_or(0..0, |(_, r)| r.clone())
    }

    /// Indices of all basis elements of a given grade.
    pub fn grade_indices(&self, grade: i32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.grade_of(i) == grade).collect()
    }

    /// Indices spanning `g_-` (negative grades).
    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.grade_of(i) < 0).collect()
    }

    /// Torus weight of each basis element (real families only).
    pub fn weights(&self) -> Option<&[Vec<i32>]> {
        self.weights.as_deref()
    }

    /// `[b_i, b_j]` in basis coordinates.
    pub fn bracket_basis(&self, i: usize, j: usize) -> &SparseVec {
        &self.brackets[i][j]
    }

    pub fn bracket_sparse(&self, x: &SparseVec, y: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&i, a) in x {
            for (&j, b) in y {
                if i != j {
                    axpy(&mut out, &(a * b), &self.brackets[i][j]);
                }
            }
        }
        out
    }

    /// `ad(x)` applied to basis element `j`.
    pub fn ad_basis(&self, x: &SparseVec, j: usize) -> SparseVec {
        let mut out = SparseVec::new();
        for (&i, a) in x {
            axpy(&mut out, a, &self.brackets[i][j]);
        }
        out
    }

    pub fn trace_form_sparse(&self, x: &SparseVec, y: &SparseVec) -> Rational {
        let mut t = Rational::zero();
        for (&i, a) in x {
            for (&j, b) in &self.trace_pairs[i] {
                if let Some(c) = y.get(&j) {
                    t += a * b * c;
                }
            }
        }
        t
    }

    /// Nonzero trace-form values `tr(b_i b_j)` for fixed `i`.
    pub fn trace_pairs(&self, i: usize) -> &SparseVec {
        &self.trace_pairs[i]
    }

    /// Gram matrix of `<X, Y> = tr(X Y^T)` (halved for `cr` to undo the realification).
    pub fn transpose_gram(&self) -> RationalMatrix {
        let dim = self.dim();
        let scale = if self.family.is_complex() { ratio(1, 2) } else { rat(1) };
        let mut g = RationalMatrix::zeros(dim, dim);
        for i in 0..dim {
            let lookup: HashMap<(usize, usize), &Rational> =
                self.basis[i].iter().map(|(r, c, v)| ((*r, *c), v)).collect();
            for j in 0..dim {
                let mut t = Rational::zero();
                for (r, c, v) in &self.basis[j] {
                    if let Some(x) = lookup.get(&(*r, *c)) {
                        t += *x * v;
                    }
                }
                g[(i, j)] = t * &scale;
            }
        }
        g
    }

    fn coords_of_entries(&self, m: &BTreeMap<(usize, usize), Rational>) -> Result<SparseVec> {
        let n = self.real_size;
        let rhs: Vec<Rational> = self
            .pivots
            .iter()
            .map(|&p| m.get(&(p / n, p % n)).cloned().unwrap_or_else(Rational::zero))
            .collect();
        let c = self.pivot_inverse.mul_vec(&rhs);
        let coords: SparseVec = c.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
        // Verify membership by reconstruction.
        let mut recon: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (&i, a) in &coords {
            for (r, cc, v) in &self.basis[i] {
                add_entry(&mut recon, (*r, *cc), a * v);
            }
        }
        if &recon != m {
            return Err(Error::NotInSpan);
        }
        Ok(coords)
    }

    /// Exact coordinates of a real-realized matrix.
    pub fn coords_of_matrix(&self, m: &RationalMatrix) -> Result<Vec<Rational>> {
        if m.rows() != self.real_size || m.cols() != self.real_size {
            return Err(Error::NotInSpan);
        }
        let mut entries = BTreeMap::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !m[(i, j)].is_zero() {
                    entries.insert((i, j), m[(i, j)].clone());
                }
            }
        }
        let sv = self.coords_of_entries(&entries)?;
        Ok(crate::linalg::dense_from_sparse(&sv, self.dim()))
    }

    /// Float coordinates of a real-realized matrix, together with the
    /// max-abs reconstruction residual.
    pub fn coords_of_matrix_f64(&self, m: &DMatrix<f64>) -> (Vec<f64>, f64) {
        let n = self.real_size;
        let rhs = nalgebra::DVector::from_iterator(self.pivots.len(), self.pivots.iter().map(|&p| m[(p / n, p % n)]));
        let c = &self.pivot_inverse_f64 * rhs;
        let recon = self.matrix_f64(c.as_slice());
        let residual = (&recon - m).abs().max();
        (c.as_slice().to_vec(), residual)
    }

    pub fn matrix_f64(&self, coords: &[f64]) -> DMatrix<f64> {
        let n = self.real_size;
        let mut out = DMatrix::zeros(n, n);
        for (i, a) in coords.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (r, c, v) in &self.basis[i] {
                out[(*r, *c)] += a * to_f64(v);
            }
        }
        out
    }

    pub fn matrix_of(&self, coords: &[Rational]) -> RationalMatrix {
        let n = self.real_size;
        let mut out = RationalMatrix::zeros(n, n);
        for (i, a) in coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (r, c, v) in &self.basis[i] {
                out[(*r, *c)] += a * v;
            }
        }
        out
    }

    /// Complex-block view `(re, im)` of a realized matrix for `cr`; for real
    /// families the imaginary part is zero.
    pub fn complex_parts(&self, m: &RationalMatrix) -> (RationalMatrix, RationalMatrix) {
        let n = self.ambient_size();
        if !self.family.is_complex() {
            return (m.clone(), RationalMatrix::zeros(n, n));
        }
        let mut re = RationalMatrix::zeros(n, n);
        let mut im = RationalMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                re[(i, j)] = m[(i, j)].clone();
                im[(i, j)] = m[(i + n, j)].clone();
            }
        }
        (re, im)
    }

    /// Realizes a complex-block matrix `(re, im)`.
    pub fn realify(&self, re: &RationalMatrix, im: &RationalMatrix) -> RationalMatrix {
        let n = self.ambient_size();
        if !self.family.is_complex() {
            return re.clone();
        }
        let mut m = RationalMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = re[(i, j)].clone();
                m[(i + n, j + n)] = re[(i, j)].clone();
                m[(i + n, j)] = im[(i, j)].clone();
                m[(i, j + n)] = -im[(i, j)].clone();
            }
        }
        m
    }

    pub fn descriptor(&self) -> AlgebraDescriptor {
        let (family, parameters) = match self.family {
            Family::Lagrangean { n } => ("lagrangean", BTreeMap::from([("n".to_string(), n)])),
            Family::Path { m } => ("path", BTreeMap::from([("m".to_string(), m)])),
            Family::Cr { p, q } => ("cr", BTreeMap::from([("p".to_string(), p), ("q".to_string(), q)])),
        };
        AlgebraDescriptor {
            family: family.to_string(),
            parameters,
            dimension: self.dim(),
            components: self
                .components
                .iter()
                .map(|(c, r)| ComponentDescriptor { label: c.to_string(), dim: r.len() })
                .collect(),
        }
    }

    pub fn zero(self: &Arc<Self>) -> AlgebraElement {
        AlgebraElement { algebra: Arc::clone(self), coords: SparseVec::new() }
    }

    pub fn basis_element(self: &Arc<Self>, i: usize) -> AlgebraElement {
        AlgebraElement { algebra: Arc::clone(self), coords: SparseVec::from([(i, Rational::one())]) }
    }

    pub fn element(self: &Arc<Self>, coords: SparseVec) -> AlgebraElement {
        AlgebraElement { algebra: Arc::clone(self), coords }
    }

    /// Element whose (real) matrix is given; fails if it is not in the algebra.
    pub fn element_from_matrix(self: &Arc<Self>, m: &RationalMatrix) -> Result<AlgebraElement> {
        let c = self.coords_of_matrix(m)?;
        Ok(self.element(crate::linalg::sparse_from_dense(&c)))
    }

    /// Element from a list of elementary-matrix entries `(row, col, value)` of
    /// the real defining matrix (real families only).
    pub fn element_from_entries(self: &Arc<Self>, entries: &[(usize, usize, i64)]) -> Result<AlgebraElement> {
        let mut m = RationalMatrix::zeros(self.real_size, self.real_size);
        for &(r, c, v) in entries {
            m[(r, c)] += rat(v);
        }
        self.element_from_matrix(&m)
    }
}

fn choose_pivots(rows: &[SparseVec]) -> Vec<usize> {
    // Greedy elimination on the basis rows; the pivot columns index matrix
    // entries that determine coordinates uniquely.
    let mut reduced: Vec<(usize, SparseVec)> = Vec::new();
    let mut pivots = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for (p, pr) in &reduced {
            if let Some(v) = r.get(p).cloned() {
                let f = -(v / &pr[p]);
                axpy(&mut r, &f, pr);
            }
        }
        let (&p, _) = r.iter().next().expect("independent basis");
        pivots.push(p);
        reduced.push((p, r));
    }
    pivots
}

/// Exact element of a [`GradedAlgebra`].
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    algebra: Arc<GradedAlgebra>,
    coords: SparseVec,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.algebra.family == other.algebra.family && self.coords == other.coords
    }
}

impl AlgebraElement {
    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.algebra
    }

    pub fn coords(&self) -> &SparseVec {
        &self.coords
    }

    pub fn dense_coords(&self) -> Vec<Rational> {
        crate::linalg::dense_from_sparse(&self.coords, self.algebra.dim())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn to_matrix(&self) -> RationalMatrix {
        self.algebra.matrix_of(&self.dense_coords())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.algebra.family != other.algebra.family {
            return Err(Error::AlgebraMismatch(self.algebra.family.to_string(), other.algebra.family.to_string()));
        }
        Ok(())
    }

    pub fn bracket(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.algebra.element(self.algebra.bracket_sparse(&self.coords, &other.coords)))
    }

    /// `tr(XY)` (for `cr`, the trace of the complex matrices).
    pub fn trace_form(&self, other: &Self) -> Result<Rational> {
        self.check_same(other)?;
        Ok(self.algebra.trace_form_sparse(&self.coords, &other.coords))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut c = self.coords.clone();
        axpy(&mut c, &Rational::one(), &other.coords);
        Ok(self.algebra.element(c))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        self.algebra.element(crate::linalg::scaled(&self.coords, s))
    }

    /// Splits into grading components; every label of the algebra is present.
    pub fn grade_split(&self) -> BTreeMap<Component, AlgebraElement> {
        self.algebra
            .components()
            .map(|(comp, range)| {
                let part: SparseVec =
                    self.coords.range(range.clone()).map(|(k, v)| (*k, v.clone())).collect();
                (comp, self.algebra.element(part))
            })
            .collect()
    }

    /// The component of the given label.
    pub fn component(&self, comp: Component) -> AlgebraElement {
        let r = self.algebra.range(comp);
        self.algebra.element(self.coords.range(r).map(|(k, v)| (*k, v.clone())).collect())
    }

    /// The part of the given grade (all sub-labels together).
    pub fn component_grade(&self, grade: i32) -> AlgebraElement {
        self.filter_grades(|g| g == grade)
    }

    /// The part in `g-`.
    pub fn negative_part(&self) -> AlgebraElement {
        self.filter_grades(|g| g < 0)
    }

    fn filter_grades<F: Fn(i32) -> bool>(&self, keep: F) -> AlgebraElement {
        let c = self.coords.iter().filter(|(k, _)| keep(self.algebra.grade_of(**k))).map(|(k, v)| (*k, v.clone()));
        self.algebra.element(c.collect())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Label of the unique component containing this element, if homogeneous.
    pub fn component_label(&self) -> Component {
        let first = *self.coords.keys().next().expect("nonzero element");
        self.algebra.component_of(first)
    }
}

/// Exact structural checks of a constructed algebra.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub jacobi: bool,
    pub grading: bool,
    /// Rank of `g-1 x g-1 -> g-2` against `dim g-1`; `None` for `path`.
    pub levi_rank: Option<(usize, usize)>,
    /// `L` and `R` isotropic (lagrangean only).
    pub isotropic: Option<bool>,
    pub trace_pairing: bool,
    /// `X^* H + H X = 0` for the defining Hermitian form (cr only).
    pub hermitian: Option<bool>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.jacobi
            && self.grading
            && self.levi_rank.is_none_or(|(r, d)| r == d)
            && self.isotropic.unwrap_or(true)
            && self.trace_pairing
            && self.hermitian.unwrap_or(true)
    }
}

pub fn check_structure(alg: &GradedAlgebra, exec: crate::par::Execution) -> StructureReport {
    let dim = alg.dim();
    let ad = |v: &SparseVec, k: usize| {
        let mut out = SparseVec::new();
        for (&a, x) in v {
            axpy(&mut out, x, &alg.brackets[a][k]);
        }
        out
    };
    // The Jacobiator is totally antisymmetric, so i < j < k suffices.
    let jacobi = crate::par::map_range(exec, dim, |i| {
        ((i + 1)..dim).all(|j| {
            ((j + 1)..dim).all(|k| {
                let mut sum = ad(&alg.brackets[i][j], k);
                for (key, v) in ad(&alg.brackets[j][k], i) {
                    add_entry(&mut sum, key, v);
                }
                for (key, v) in ad(&alg.brackets[k][i], j) {
                    add_entry(&mut sum, key, v);
                }
                sum.is_empty()
            })
        })
    })
    .into_iter()
    .all(|b| b);
    let grading = (0..dim).all(|i| {
        (0..dim).all(|j| {
            let g = alg.grade_of(i) + alg.grade_of(j);
            alg.brackets[i][j].keys().all(|&k| alg.grade_of(k) == g)
        })
    });
    let minus1 = alg.grade_indices(-1);
    let minus2 = alg.grade_indices(-2);
    let levi_rank = (!matches!(alg.family, Family::Path { .. })).then(|| {
        let top = minus2[0];
        let mut m = RationalMatrix::zeros(minus1.len(), minus1.len());
        for (a, &i) in minus1.iter().enumerate() {
            for (b, &j) in minus1.iter().enumerate() {
                if let Some(v) = alg.brackets[i][j].get(&top) {
                    m[(a, b)] = v.clone();
                }
            }
        }
        (m.rank(), minus1.len())
    });
    let isotropic = matches!(alg.family, Family::Lagrangean { .. }).then(|| {
        [Part::L, Part::R].iter().all(|&part| {
            let r = alg.range(Component::new(-1, part));
            r.clone().all(|i| r.clone().all(|j| alg.brackets[i][j].is_empty()))
        })
    });
    let trace_pairing = (0..dim).all(|i| alg.trace_pairs[i].keys().all(|&j| alg.grade_of(i) + alg.grade_of(j) == 0))
        && (-2..=2).all(|g| {
            let lo = alg.grade_indices(g);
            let hi = alg.grade_indices(-g);
            let mut m = RationalMatrix::zeros(lo.len(), hi.len());
            for (a, &i) in lo.iter().enumerate() {
                for (b, &j) in hi.iter().enumerate() {
                    if let Some(v) = alg.trace_pairs[i].get(&j) {
                        m[(a, b)] = v.clone();
                    }
                }
            }
            lo.len() == hi.len() && m.rank() == lo.len()
        });
    let hermitian = match alg.family {
        Family::Cr { p, q } => {
            let size = p + q + 2;
            let last = size - 1;
            // Realified H = diag(H, H); realify(X^*) = realify(X)^T.
            let mut h = BTreeMap::new();
            for s in [0, size] {
                h.insert((s, s + last), rat(1));
                h.insert((s + last, s), rat(1));
                for j in 1..last {
                    h.insert((s + j, s + j), if j <= p { rat(1) } else { rat(-1) });
                }
            }
            let h: SparseMatrix = h.into_iter().map(|((r, c), v)| (r, c, v)).collect();
            Some(alg.basis.iter().all(|x| {
                let xt: SparseMatrix = x.iter().map(|(r, c, v)| (*c, *r, v.clone())).collect();
                let mut sum = sparse_mul(&xt, &h);
                for (k, v) in sparse_mul(&h, x) {
                    add_entry(&mut sum, k, v);
                }
                sum.is_empty()
            }))
        }
        _ => None,
    };
    StructureReport { jacobi, grading, levi_rank, isotropic, trace_pairing, hermitian }
}
