//! Group elements of `G`, `P`, `Q`, `G0` and the path-geometry groups,
//! stored as float representative matrices modulo the center.
//!
//! For `cr` the representative is the real realization of a complex matrix,
//! so every operation below works on real matrices uniformly.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use num::traits::Zero;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graded_lie::{AlgebraElement, Component, Family, GradedAlgebra};
use crate::linalg::{from_f64, sparse_from_dense, Rational, RationalMatrix, SparseVec};

/// Default float tolerance for group-level identities.
pub const GROUP_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GroupElement {
    family: Family,
    matrix: DMatrix<f64>,
}

fn real_size(family: Family) -> usize {
    if family.is_complex() {
        2 * family.matrix_size()
    } else {
        family.matrix_size()
    }
}

/// Real realization of a complex matrix: `a + ib -> [[a, -b], [b, a]]`.
pub fn realify(m: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (false, true) => z.im,
            (true, false) => -z.im,
        }
    })
}

/// Inverse of [`realify`] on matrices of the realized shape.
pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex<f64>> {
    let n = m.nrows() / 2;
    DMatrix::from_fn(n, n, |r, c| Complex::new(m[(r, c)], m[(r + n, c)]))
}

impl GroupElement {
    /// Wraps a representative, rescaling it to `|det| = 1`.
    pub fn from_matrix(family: Family, matrix: DMatrix<f64>) -> Result<Self> {
        let n = real_size(family);
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidParameters(format!("expected a {n}x{n} representative")));
        }
        let det = matrix.determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::Degenerate("singular representative".into()));
        }
        let scale = det.abs().powf(-1.0 / n as f64);
        Ok(Self { family, matrix: matrix * scale })
    }

    /// Wraps a complex representative (the `cr` family).
    pub fn from_complex(family: Family, matrix: &DMatrix<Complex<f64>>) -> Result<Self> {
        Self::from_matrix(family, realify(matrix))
    }

    pub fn identity(family: Family) -> Self {
        let n = real_size(family);
        Self { family, matrix: DMatrix::identity(n, n) }
    }

    /// `exp(x)` for an algebra element.
    pub fn exp(x: &AlgebraElement) -> Self {
        let alg = x.algebra();
        let m = to_f64_matrix(&x.to_matrix());
        Self { family: alg.family(), matrix: exp_f64(&m) }.renormalized()
    }

    fn renormalized(self) -> Self {
        let n = self.matrix.nrows();
        let det = self.matrix.determinant();
        let scale = det.abs().powf(-1.0 / n as f64);
        Self { family: self.family, matrix: self.matrix * scale }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn complex_matrix(&self) -> DMatrix<Complex<f64>> {
        if self.family.is_complex() {
            complexify(&self.matrix)
        } else {
            self.matrix.map(|x| Complex::new(x, 0.0))
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_family(other.family)?;
        Ok(Self { family: self.family, matrix: &self.matrix * &other.matrix })
    }

    pub fn inverse(&self) -> Self {
        let inv = self.matrix.clone().try_inverse().expect("normalized representatives are invertible");
        Self { family: self.family, matrix: inv }
    }

    fn check_family(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::AlgebraMismatch(self.family.to_string(), family.to_string()));
        }
        Ok(())
    }

    /// Equality modulo the center: `other^{-1} self` is a unit scalar
    /// (`±1`, or a unit complex number for `cr`).
    pub fn same_class(&self, other: &Self, tol: f64) -> bool {
        if self.family != other.family {
            return false;
        }
        let q = other.inverse().matrix * &self.matrix;
        let (a, b) = if self.family.is_complex() {
            let n = q.nrows() / 2;
            (q[(0, 0)], q[(n, 0)])
        } else {
            (q[(0, 0)], 0.0)
        };
        let n = q.nrows();
        let scalar = if self.family.is_complex() {
            realify(&DMatrix::from_diagonal_element(n / 2, n / 2, Complex::new(a, b)))
        } else {
            DMatrix::from_diagonal_element(n, n, a)
        };
        ((a * a + b * b).sqrt() - 1.0).abs() <= tol && (&q - scalar).abs().max() <= tol
    }

    /// `Ad(g)(X)` in float coordinates of the algebra basis.
    pub fn adjoint_f64(&self, alg: &GradedAlgebra, coords: &[f64]) -> Result<Vec<f64>> {
        self.check_family(alg.family())?;
        let x = alg.matrix_f64(coords);
        let y = &self.matrix * x * self.inverse().matrix;
        let (c, residual) = alg.coords_of_matrix_f64(&y);
        let scale = 1.0 + y.abs().max();
        if residual > 1e-8 * scale {
            return Err(Error::NotInSpan);
        }
        Ok(c)
    }

    /// `Ad(g)(x)`, returned as float coordinates.
    pub fn adjoint(&self, x: &AlgebraElement) -> Result<Vec<f64>> {
        let alg = x.algebra();
        let coords: Vec<f64> = x.dense_coords().iter().map(crate::linalg::to_f64).collect();
        self.adjoint_f64(alg, &coords)
    }

    /// Matrix of `Ad(g)` on the algebra basis (column `j` is `Ad(g) b_j`).
    pub fn adjoint_matrix(&self, alg: &GradedAlgebra) -> Result<DMatrix<f64>> {
        let d = alg.dim();
        let mut out = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            let c = self.adjoint_f64(alg, &e)?;
            e[j] = 0.0;
            out.set_column(j, &DVector::from_vec(c));
        }
        Ok(out)
    }

    /// Whether the representative is block upper triangular.
    pub fn in_p(&self, tol: f64) -> bool {
        let n = self.family.matrix_size();
        let scale = 1.0 + self.matrix.abs().max();
        (0..self.matrix.nrows()).all(|r| {
            (0..self.matrix.ncols()).all(|c| {
                self.family.block_of(r % n) <= self.family.block_of(c % n) || self.matrix[(r, c)].abs() <= tol * scale
            })
        })
    }
}

pub fn to_f64_matrix(m: &RationalMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| crate::linalg::to_f64(&m[(i, j)]))
}

/// Exact rational matrix of a float matrix (each entry's exact binary value).
pub fn to_rational_matrix(m: &DMatrix<f64>) -> RationalMatrix {
    let mut out = RationalMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = from_f64(m[(i, j)]);
        }
    }
    out
}

/// Matrix exponential: terminating series for nilpotent input, Padé otherwise.
pub fn exp_f64(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=n {
        term = &term * m / k as f64;
        if term.iter().all(|x| *x == 0.0) {
            return sum;
        }
        sum += &term;
    }
    m.clone().exp()
}

/// Exact exponential of a nilpotent rational matrix; `None` if not nilpotent.
pub fn exp_nilpotent(m: &RationalMatrix) -> Option<RationalMatrix> {
    let n = m.rows();
    let mut term = RationalMatrix::identity(n);
    let mut sum = term.clone();
    for k in 1..=n {
        term = term.mul(m);
        let kk = crate::linalg::rat(k as i64);
        for i in 0..n {
            for j in 0..n {
                let v = &term[(i, j)] / &kk;
                term[(i, j)] = v;
            }
        }
        if term.is_zero() {
            return Some(sum);
        }
        for i in 0..n {
            for j in 0..n {
                let v = &sum[(i, j)] + &term[(i, j)];
                sum[(i, j)] = v;
            }
        }
    }
    None
}

/// Factors of `g = g0 exp(Z1) exp(Z2)` in `P`.
#[derive(Clone, Debug)]
pub struct PFactors {
    pub g0: GroupElement,
    /// Float coordinates of `Z1` over the full basis (supported in `g1`).
    pub z1: Vec<f64>,
    /// Float coordinates of `Z2` over the full basis (supported in `g2`).
    pub z2: Vec<f64>,
}

/// Splits an element of `P` as `g0 exp(Z1) exp(Z2)`.
pub fn decompose_p(alg: &GradedAlgebra, g: &GroupElement) -> Result<PFactors> {
    g.check_family(alg.family())?;
    if !g.in_p(GROUP_TOL) {
        return Err(Error::NotInSubgroup("P"));
    }
    let fam = alg.family();
    let n = fam.matrix_size();
    let m = g.matrix();
    let g0 = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        if fam.block_of(r % n) == fam.block_of(c % n) {
            m[(r, c)]
        } else {
            0.0
        }
    });
    let g0inv = g0.clone().try_inverse().ok_or_else(|| Error::Degenerate("singular Levi factor".into()))?;
    let h = &g0inv * m;
    let id = DMatrix::identity(h.nrows(), h.ncols());
    let nil = &h - &id;
    // exp(Z1) exp(Z2) = exp(Z1 + Z2) since [g1, g2] = 0, and (h - 1)^3 = 0.
    let log = &nil - &nil * &nil * 0.5;
    let (c, residual) = alg.coords_of_matrix_f64(&log);
    if residual > 1e-8 * (1.0 + log.abs().max()) {
        return Err(Error::NotInSubgroup("P"));
    }
    let mut z1 = vec![0.0; alg.dim()];
    let mut z2 = vec![0.0; alg.dim()];
    for (i, v) in c.iter().enumerate() {
        match alg.grade_of(i) {
            1 => z1[i] = *v,
            2 => z2[i] = *v,
            _ => {
                if v.abs() > 1e-8 * (1.0 + log.abs().max()) {
                    return Err(Error::NotInSubgroup("P"));
                }
            }
        }
    }
    Ok(PFactors { g0: GroupElement { family: fam, matrix: g0 }, z1, z2 })
}

/// Reassembles `g0 exp(Z1) exp(Z2)`.
pub fn compose_p(alg: &GradedAlgebra, f: &PFactors) -> GroupElement {
    let e1 = exp_f64(&alg.matrix_f64(&f.z1));
    let e2 = exp_f64(&alg.matrix_f64(&f.z2));
    GroupElement { family: alg.family(), matrix: f.g0.matrix() * e1 * e2 }
}

/// Membership in `Q`: the `g1` factor vanishes.
pub fn in_q(alg: &GradedAlgebra, g: &GroupElement) -> Result<bool> {
    let f = decompose_p(alg, g)?;
    let scale = 1.0 + g.matrix().abs().max();
    Ok(f.z1.iter().all(|x| x.abs() <= GROUP_TOL * scale))
}

/// The unique `Z` in `g1` with `[Z, X2] = X1`.
pub fn solve_transversal(x2: &AlgebraElement, x1: &AlgebraElement) -> Result<AlgebraElement> {
    let alg = x2.algebra();
    if alg.family() != x1.algebra().family() {
        return Err(Error::AlgebraMismatch(alg.family().to_string(), x1.algebra().family().to_string()));
    }
    if x2.is_zero() {
        return Err(Error::Degenerate("g-2 part vanishes".into()));
    }
    let g1 = alg.grade_indices(1);
    let gm1 = alg.grade_indices(-1);
    if x2.coords().keys().any(|&k| alg.grade_of(k) != -2) || x1.coords().keys().any(|&k| alg.grade_of(k) != -1) {
        return Err(Error::InvalidParameters("expected X2 in g-2 and X1 in g-1".into()));
    }
    let mut a = RationalMatrix::zeros(gm1.len(), g1.len());
    for (col, &k) in g1.iter().enumerate() {
        let b = alg.bracket_sparse(&SparseVec::from([(k, num::One::one())]), x2.coords());
        for (row, &r) in gm1.iter().enumerate() {
            if let Some(v) = b.get(&r) {
                a[(row, col)] = v.clone();
            }
        }
    }
    let rhs: Vec<Rational> =
        gm1.iter().map(|r| x1.coords().get(r).cloned().unwrap_or_else(Rational::zero)).collect();
    let z = a.solve(&rhs).ok_or_else(|| Error::Degenerate("bracket with X2 is not onto g-1".into()))?;
    let coords: SparseVec = g1.iter().zip(z).filter(|(_, v)| !v.is_zero()).map(|(k, v)| (*k, v)).collect();
    Ok(Arc::clone(alg).element(coords))
}

fn random_real<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-1.0..1.0)
}

/// Random element of `Q` for the lagrangean or cr family.
///
/// Lagrangean: `[[p, 0, s], [0, R, 0], [0, 0, q]]`. Cr:
/// `[[phi, 0, i a phi], [0, Phi, 0], [0, 0, 1/conj(phi)]]` with `Phi` in
/// `U(p, q)` and `phi^2 det(Phi) / |phi|^2 = 1`.
pub fn random_q<R: Rng>(alg: &Arc<GradedAlgebra>, rng: &mut R) -> Result<GroupElement> {
    let fam = alg.family();
    let size = fam.matrix_size();
    let last = size - 1;
    match fam {
        Family::Lagrangean { n } => {
            let mut m = DMatrix::zeros(size, size);
            let sign = |r: &mut R| if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            m[(0, 0)] = sign(rng) * rng.gen_range(0.5..2.0);
            m[(last, last)] = sign(rng) * rng.gen_range(0.5..2.0);
            m[(0, last)] = 2.0 * random_real(rng);
            loop {
                let r = DMatrix::from_fn(n, n, |i, j| if i == j { 1.5 * sign(rng) } else { 0.0 } + random_real(rng));
                if r.determinant().abs() > 0.2 {
                    m.view_mut((1, 1), (n, n)).copy_from(&r);
                    break;
                }
            }
            GroupElement::from_matrix(fam, m)
        }
        Family::Cr { .. } => {
            // Phi = exp(A) for A in the g0 part spanned by the u(p,q) block.
            let g0 = alg.range(Component::new(0, crate::graded_lie::Part::Whole));
            let mut coords = vec![0.0; alg.dim()];
            for i in g0 {
                coords[i] = random_real(rng);
            }
            let a_full = complexify(&alg.matrix_f64(&coords));
            let a = a_full.view((1, 1), (size - 2, size - 2)).into_owned();
            let phi_block = a.exp();
            let t = a.trace().im;
            let radius = rng.gen_range(0.5..2.0);
            let phi = Complex::from_polar(radius, -t / 2.0);
            let a_shift = 2.0 * random_real(rng);
            let mut m = DMatrix::from_element(size, size, Complex::zero());
            m[(0, 0)] = phi;
            m[(0, last)] = Complex::<f64>::i() * phi * a_shift;
            m.view_mut((1, 1), (size - 2, size - 2)).copy_from(&phi_block);
            m[(last, last)] = Complex::new(1.0, 0.0) / phi.conj();
            GroupElement::from_complex(fam, &m)
        }
        Family::Path { .. } => Err(Error::Unsupported("Q is defined for lagrangean and cr".into())),
    }
}

/// Random algebra element supported on the given grades, small entries.
pub fn random_element<R: Rng>(alg: &Arc<GradedAlgebra>, grades: &[i32], scale: f64, rng: &mut R) -> Vec<f64> {
    (0..alg.dim()).map(|i| if grades.contains(&alg.grade_of(i)) { scale * random_real(rng) } else { 0.0 }).collect()
}

/// Random element of `P` as a product of exponentials.
pub fn random_p<R: Rng>(alg: &Arc<GradedAlgebra>, rng: &mut R) -> GroupElement {
    let c = random_element(alg, &[0, 1, 2], 0.7, rng);
    let m = exp_f64(&alg.matrix_f64(&c));
    GroupElement { family: alg.family(), matrix: m }.renormalized()
}

/// Random element of `G` near the identity component.
pub fn random_g<R: Rng>(alg: &Arc<GradedAlgebra>, rng: &mut R) -> GroupElement {
    let c = random_element(alg, &[-2, -1, 0, 1, 2], 0.5, rng);
    let m = exp_f64(&alg.matrix_f64(&c));
    GroupElement { family: alg.family(), matrix: m }.renormalized()
}

/// Exact coordinates in `g1` (or any subspace) from float coordinates.
pub fn rationalize(coords: &[f64]) -> SparseVec {
    sparse_from_dense(&coords.iter().map(|&x| from_f64(x)).collect::<Vec<_>>())
}
