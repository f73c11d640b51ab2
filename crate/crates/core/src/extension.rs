//! Extension pairs `(i, α)` from a contact geometry (lagrangean or cr) to
//! the path geometry of its chains, and the curvature transfer they induce.
//!
//! The source is `sl(n+2)` or `su(p+1, q+1)`, the target the path algebra
//! with `m = 2n` (`n = p + q` for cr). `α` is stored exactly; `i` is a float
//! closed form on `Q`, and `i'` its hand-differentiated derivative.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use num::traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded_lie::{build_algebra, Component, Family, GradedAlgebra, Part};
use crate::groups::{in_q, to_rational_matrix, GroupElement, GROUP_TOL};
use crate::hodge::{Cochain, CochainComplex};
use crate::linalg::{add_entry, axpy, rat, ratio, Rational, RationalMatrix, SparseVec};

#[derive(Clone, Debug)]
pub struct ExtensionPair {
    source: Arc<GradedAlgebra>,
    target: Arc<GradedAlgebra>,
    source_complex: Arc<CochainComplex>,
    target_complex: Arc<CochainComplex>,
    /// Column `j` is `α(b_j)`.
    alpha: Vec<SparseVec>,
    /// Source indices spanning `𝔮 = g0 ⊕ g2`.
    q_basis: Vec<usize>,
    /// Column `k` is `i'(b_{q_basis[k]})`.
    i_prime: Vec<SparseVec>,
    /// Exact `g̃` with the pair replaced by `(g̃⁻¹ i g̃, Ad(g̃⁻¹) α)`.
    conjugator: Option<(RationalMatrix, RationalMatrix)>,
    /// Preimage in `g- ⊕ g1` of each target `g̃-` basis vector (local order).
    preimages: Option<Vec<SparseVec>>,
}

/// Builds the pair for `lagrangean(n)` or `cr(p, q)`.
pub fn build_pair(source: Family) -> Result<ExtensionPair> {
    source.validate()?;
    let n = match source {
        Family::Lagrangean { n } => n,
        Family::Cr { p, q } => p + q,
        Family::Path { .. } => return Err(Error::Unsupported("extension pairs start from lagrangean or cr".into())),
    };
    let src = build_algebra(source)?;
    let tgt = build_algebra(Family::Path { m: 2 * n })?;
    let alpha = (0..src.dim())
        .map(|j| {
            let m = src.matrix_of(&crate::linalg::dense_from_sparse(&SparseVec::from([(j, Rational::one())]), src.dim()));
            let t = alpha_matrix(&src, &m);
            tgt.element_from_matrix(&t).map(|e| e.coords().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let q_basis: Vec<usize> = (0..src.dim()).filter(|&i| matches!(src.grade_of(i), 0 | 2)).collect();
    let i_prime = q_basis
        .iter()
        .map(|&j| {
            let m = src.matrix_of(&crate::linalg::dense_from_sparse(&SparseVec::from([(j, Rational::one())]), src.dim()));
            let t = i_prime_matrix(&src, &m);
            tgt.element_from_matrix(&t).map(|e| e.coords().clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pair = ExtensionPair {
        source_complex: CochainComplex::new(Arc::clone(&src)),
        target_complex: CochainComplex::new(Arc::clone(&tgt)),
        source: src,
        target: tgt,
        alpha,
        q_basis,
        i_prime,
        conjugator: None,
        preimages: None,
    };
    pair.preimages = pair.compute_preimages();
    Ok(pair)
}

fn half() -> Rational {
    ratio(1, 2)
}

/// `α` on a source matrix (real realization for cr), as a target matrix.
fn alpha_matrix(src: &GradedAlgebra, m: &RationalMatrix) -> RationalMatrix {
    match src.family() {
        Family::Lagrangean { n } => {
            let last = n + 1;
            let mut t = RationalMatrix::zeros(2 * n + 2, 2 * n + 2);
            let (a, c, d, z) = (&m[(0, 0)], &m[(last, last)], &m[(0, last)], &m[(last, 0)]);
            let mean = (a + c) * half();
            t[(0, 0)] = (a - c) * half();
            t[(0, 1)] = d.clone();
            t[(1, 0)] = z.clone();
            t[(1, 1)] = (c - a) * half();
            for j in 0..n {
                let (u, v, x, y) = (&m[(0, 1 + j)], &m[(1 + j, last)], &m[(1 + j, 0)], &m[(last, 1 + j)]);
                t[(0, 2 + j)] = u * half();
                t[(0, 2 + n + j)] = v * half();
                t[(1, 2 + j)] = y * half();
                t[(1, 2 + n + j)] = -(x * half());
                t[(2 + j, 0)] = x.clone();
                t[(2 + j, 1)] = v.clone();
                t[(2 + n + j, 0)] = y.clone();
                t[(2 + n + j, 1)] = -u.clone();
                for k in 0..n {
                    t[(2 + j, 2 + k)] = m[(1 + j, 1 + k)].clone();
                    t[(2 + n + j, 2 + n + k)] = -m[(1 + k, 1 + j)].clone();
                }
                t[(2 + j, 2 + j)] -= &mean;
                t[(2 + n + j, 2 + n + j)] += &mean;
            }
            t
        }
        Family::Cr { p, q } => {
            let n = p + q;
            let last = n + 1;
            let (re, im) = src.complex_parts(m);
            let mut t = RationalMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 0)] = re[(0, 0)].clone();
            t[(0, 1)] = -im[(0, last)].clone();
            t[(1, 0)] = im[(last, 0)].clone();
            t[(1, 1)] = -re[(0, 0)].clone();
            let im_w = &im[(0, 0)];
            for j in 0..n {
                // X*I = -M[last, 1+j], I Z* = -M[1+j, last].
                let (xi_re, xi_im) = (-re[(last, 1 + j)].clone(), -im[(last, 1 + j)].clone());
                let (iz_re, iz_im) = (-re[(1 + j, last)].clone(), -im[(1 + j, last)].clone());
                t[(0, 2 + j)] = re[(0, 1 + j)].clone();
                t[(0, 2 + n + j)] = -im[(0, 1 + j)].clone();
                t[(1, 2 + j)] = -xi_im;
                t[(1, 2 + n + j)] = -xi_re;
                t[(2 + j, 0)] = re[(1 + j, 0)].clone();
                t[(2 + n + j, 0)] = im[(1 + j, 0)].clone();
                t[(2 + j, 1)] = iz_im;
                t[(2 + n + j, 1)] = -iz_re;
                for k in 0..n {
                    t[(2 + j, 2 + k)] = re[(1 + j, 1 + k)].clone();
                    t[(2 + n + j, 2 + n + k)] = re[(1 + j, 1 + k)].clone();
                    t[(2 + j, 2 + n + k)] = -im[(1 + j, 1 + k)].clone();
                    t[(2 + n + j, 2 + k)] = im[(1 + j, 1 + k)].clone();
                }
                t[(2 + j, 2 + n + j)] += im_w;
                t[(2 + n + j, 2 + j)] -= im_w;
            }
            t
        }
        Family::Path { .. } => unreachable!("validated in build_pair"),
    }
}

/// Derivative of `i` at the identity, evaluated on an element of `𝔮`.
fn i_prime_matrix(src: &GradedAlgebra, m: &RationalMatrix) -> RationalMatrix {
    match src.family() {
        Family::Lagrangean { n } => {
            // p = 1 + ta, q = 1 + tc, s = ts, R = 1 + tB.
            let last = n + 1;
            let (a, c, s) = (&m[(0, 0)], &m[(last, last)], &m[(0, last)]);
            let mean = (a + c) * half();
            let mut t = RationalMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 0)] = (a - c) * half();
            t[(0, 1)] = s.clone();
            t[(1, 1)] = (c - a) * half();
            for j in 0..n {
                for k in 0..n {
                    t[(2 + j, 2 + k)] = m[(1 + j, 1 + k)].clone();
                    t[(2 + n + j, 2 + n + k)] = -m[(1 + k, 1 + j)].clone();
                }
                t[(2 + j, 2 + j)] -= &mean;
                t[(2 + n + j, 2 + n + j)] += &mean;
            }
            t
        }
        Family::Cr { p, q } => {
            // phi = 1 + tw, Phi = 1 + tA, a = t a'; |phi| ~ 1 + t Re w and
            // |phi| / phi ~ 1 - i t Im w.
            let n = p + q;
            let last = n + 1;
            let (re, im) = src.complex_parts(m);
            let mut t = RationalMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 0)] = re[(0, 0)].clone();
            t[(0, 1)] = -im[(0, last)].clone();
            t[(1, 1)] = -re[(0, 0)].clone();
            for j in 0..n {
                for k in 0..n {
                    let mut u_im = im[(1 + j, 1 + k)].clone();
                    if j == k {
                        u_im -= &im[(0, 0)];
                    }
                    t[(2 + j, 2 + k)] = re[(1 + j, 1 + k)].clone();
                    t[(2 + n + j, 2 + n + k)] = re[(1 + j, 1 + k)].clone();
                    t[(2 + j, 2 + n + k)] = -u_im.clone();
                    t[(2 + n + j, 2 + k)] = u_im;
                }
            }
            t
        }
        Family::Path { .. } => unreachable!("validated in build_pair"),
    }
}

/// Float closed form of `i` on a representative of an element of `Q`.
fn i_matrix(src: Family, g: &GroupElement) -> DMatrix<f64> {
    match src {
        Family::Lagrangean { n } => {
            let m = g.matrix();
            let last = n + 1;
            let (p, q, s) = (m[(0, 0)], m[(last, last)], m[(0, last)]);
            let sg = (q / p).signum();
            let r = (p / q).abs().sqrt();
            let rm = m.view((1, 1), (n, n)).into_owned();
            let rinv_t = rm.clone().try_inverse().expect("Q elements are invertible").transpose();
            let mut t = DMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 0)] = sg * r;
            t[(0, 1)] = sg * (s / p) * r;
            t[(1, 1)] = 1.0 / r;
            t.view_mut((2, 2), (n, n)).copy_from(&(rm * (1.0 / (q * r))));
            t.view_mut((2 + n, 2 + n), (n, n)).copy_from(&(rinv_t * (p / r)));
            t
        }
        Family::Cr { p, q } => {
            let n = p + q;
            let last = n + 1;
            let m = g.complex_matrix();
            // Rescale so that the corner entries satisfy M[last,last] = 1 / conj(phi).
            let lambda = 1.0 / (m[(last, last)] * m[(0, 0)].conj()).re.sqrt();
            let phi = m[(0, 0)] * lambda;
            let a = (m[(0, last)] / (Complex::<f64>::i() * m[(0, 0)])).re;
            let r = phi.norm();
            let u = m.view((1, 1), (n, n)).into_owned() * (Complex::new(r, 0.0) / phi * lambda);
            let mut t = DMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 0)] = r;
            t[(0, 1)] = -a * r;
            t[(1, 1)] = 1.0 / r;
            for j in 0..n {
                for k in 0..n {
                    let z = u[(j, k)];
                    t[(2 + j, 2 + k)] = z.re;
                    t[(2 + n + j, 2 + n + k)] = z.re;
                    t[(2 + j, 2 + n + k)] = -z.im;
                    t[(2 + n + j, 2 + k)] = z.im;
                }
            }
            t
        }
        Family::Path { .. } => unreachable!("validated in build_pair"),
    }
}

fn conjugate_sparse(alg: &Arc<GradedAlgebra>, x: &SparseVec, g: &RationalMatrix, ginv: &RationalMatrix) -> SparseVec {
    let m = alg.matrix_of(&crate::linalg::dense_from_sparse(x, alg.dim()));
    let y = ginv.mul(&m).mul(g);
    alg.element_from_matrix(&y).expect("conjugation preserves the algebra").coords().clone()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub samples: usize,
    /// Max entry of `α Ad(g) - Ad(i(g)) α` over the samples.
    pub condition1_residual: f64,
    /// `α ∘ ad(A) = ad(α(A)) ∘ α` for every `A` in a basis of `𝔮`.
    pub condition1_infinitesimal: bool,
    pub condition2_exact: bool,
    pub condition3_rank: usize,
    pub condition3_expected: usize,
}

impl ConditionReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.condition1_residual <= tol
            && self.condition1_infinitesimal
            && self.condition2_exact
            && self.condition3_rank == self.condition3_expected
    }
}

impl ExtensionPair {
    pub fn source(&self) -> &Arc<GradedAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedAlgebra> {
        &self.target
    }

    pub fn source_complex(&self) -> &Arc<CochainComplex> {
        &self.source_complex
    }

    pub fn target_complex(&self) -> &Arc<CochainComplex> {
        &self.target_complex
    }

    /// `α` as a `dim g̃ × dim g` rational matrix.
    pub fn alpha_matrix(&self) -> RationalMatrix {
        RationalMatrix::from_sparse_columns(self.target.dim(), &self.alpha)
    }

    pub fn alpha(&self, x: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (j, c) in x {
            axpy(&mut out, c, &self.alpha[*j]);
        }
        out
    }

    /// `α` on a source matrix given in the defining representation.
    pub fn alpha_of_matrix(&self, m: &RationalMatrix) -> Result<SparseVec> {
        let c = self.source.coords_of_matrix(m)?;
        Ok(self.alpha(&crate::linalg::sparse_from_dense(&c)))
    }

    pub fn i_prime(&self, x: &SparseVec) -> Result<SparseVec> {
        let mut out = SparseVec::new();
        for (j, c) in x {
            let k = self.q_basis.iter().position(|q| q == j).ok_or(Error::NotInSubgroup("q"))?;
            axpy(&mut out, c, &self.i_prime[k]);
        }
        Ok(out)
    }

    pub fn q_basis(&self) -> &[usize] {
        &self.q_basis
    }

    /// `i(g)` for `g ∈ Q`.
    pub fn i_map(&self, g: &GroupElement) -> Result<GroupElement> {
        if g.family() != self.source.family() {
            return Err(Error::AlgebraMismatch(g.family().to_string(), self.source.family().to_string()));
        }
        if !in_q(&self.source, g)? {
            return Err(Error::NotInSubgroup("Q"));
        }
        let mut t = i_matrix(self.source.family(), g);
        if let Some((c, cinv)) = &self.conjugator {
            t = crate::groups::to_f64_matrix(cinv) * t * crate::groups::to_f64_matrix(c);
        }
        GroupElement::from_matrix(self.target.family(), t)
    }

    /// Copy with one entry of `α` replaced (negative controls).
    pub fn with_alpha_entry(&self, row: usize, col: usize, value: Rational) -> Self {
        let mut out = self.clone();
        out.alpha[col].remove(&row);
        add_entry(&mut out.alpha[col], row, value);
        out.preimages = out.compute_preimages();
        out
    }

    /// The pair `(g̃⁻¹ i g̃, Ad(g̃⁻¹) ∘ α)` for `g̃ ∈ P̃`, computed exactly from
    /// the binary value of the witness entries.
    pub fn conjugate(&self, witness: &GroupElement) -> Result<Self> {
        let (g, ginv) = self.exact_witness(witness)?;
        let mut out = self.clone();
        out.alpha = self.alpha.iter().map(|c| conjugate_sparse(&self.target, c, &g, &ginv)).collect();
        out.i_prime = self.i_prime.iter().map(|c| conjugate_sparse(&self.target, c, &g, &ginv)).collect();
        out.conjugator = Some(match &self.conjugator {
            None => (g, ginv),
            Some((c, cinv)) => (c.mul(&g), ginv.mul(cinv)),
        });
        out.preimages = out.compute_preimages();
        Ok(out)
    }

    fn exact_witness(&self, witness: &GroupElement) -> Result<(RationalMatrix, RationalMatrix)> {
        if witness.family() != self.target.family() {
            return Err(Error::AlgebraMismatch(witness.family().to_string(), self.target.family().to_string()));
        }
        if !witness.in_p(GROUP_TOL) {
            return Err(Error::NotInSubgroup("P̃"));
        }
        let g = to_rational_matrix(witness.matrix());
        let ginv = g.inverse().ok_or_else(|| Error::Degenerate("singular witness".into()))?;
        Ok((g, ginv))
    }

    /// Source indices of the complement `g- ⊕ g1` of `𝔮`.
    fn complement(&self) -> Vec<usize> {
        (0..self.source.dim()).filter(|&i| matches!(self.source.grade_of(i), -2 | -1 | 1)).collect()
    }

    /// Matrix of `ᾱ : g/𝔮 → g̃/𝔭̃` on the complement and `g̃-` bases.
    pub fn alpha_bar(&self) -> RationalMatrix {
        let comp = self.complement();
        let neg = self.target_complex.negative_basis();
        let mut m = RationalMatrix::zeros(neg.len(), comp.len());
        for (j, &c) in comp.iter().enumerate() {
            for (b, &t) in neg.iter().enumerate() {
                if let Some(v) = self.alpha[c].get(&t) {
                    m[(b, j)] = v.clone();
                }
            }
        }
        m
    }

    fn compute_preimages(&self) -> Option<Vec<SparseVec>> {
        let comp = self.complement();
        let inv = self.alpha_bar().inverse()?;
        Some(
            (0..inv.cols())
                .map(|b| {
                    let mut v = SparseVec::new();
                    for (j, &c) in comp.iter().enumerate() {
                        add_entry(&mut v, c, inv[(j, b)].clone());
                    }
                    v
                })
                .collect(),
        )
    }

    fn preimages(&self) -> Result<&[SparseVec]> {
        self.preimages.as_deref().ok_or_else(|| Error::Degenerate("ᾱ is not invertible".into()))
    }

    /// `π ᾱ⁻¹` on the target `g̃-` basis, in source local `g-` coordinates.
    pub fn transfer_map(&self) -> Result<Vec<BTreeMap<usize, Rational>>> {
        Ok(self
            .preimages()?
            .iter()
            .map(|p| {
                p.iter()
                    .filter_map(|(k, v)| self.source_complex.local_index(*k).map(|l| (l, v.clone())))
                    .collect()
            })
            .collect())
    }

    /// Checks the three conditions on the given samples of `Q`.
    pub fn check_conditions(&self, samples: &[GroupElement]) -> Result<ConditionReport> {
        let alpha_f = crate::groups::to_f64_matrix(&self.alpha_matrix());
        let mut residual: f64 = 0.0;
        for g in samples {
            let ig = self.i_map(g)?;
            let ad_g = g.adjoint_matrix(&self.source)?;
            let ad_ig = ig.adjoint_matrix(&self.target)?;
            let diff = &alpha_f * ad_g - ad_ig * &alpha_f;
            residual = residual.max(diff.abs().max());
        }
        let infinitesimal = self.q_basis.iter().all(|&a| {
            let aa = self.alpha(&SparseVec::from([(a, Rational::one())]));
            (0..self.source.dim()).all(|j| {
                let lhs = self.alpha(self.source.bracket_basis(a, j));
                let rhs = self.target.bracket_sparse(&aa, &self.alpha[j]);
                lhs == rhs
            })
        });
        let cond2 = self.q_basis.iter().zip(&self.i_prime).all(|(&a, ip)| &self.alpha[a] == ip);
        Ok(ConditionReport {
            samples: samples.len(),
            condition1_residual: residual,
            condition1_infinitesimal: infinitesimal,
            condition2_exact: cond2,
            condition3_rank: self.alpha_bar().rank(),
            condition3_expected: self.target_complex.neg_dim(),
        })
    }
}

/// `Ψ_α(x̃, ỹ) = [α(X), α(Y)] - α([X, Y])` with `X, Y` the preimages of
/// `x̃, ỹ` under `ᾱ`.
pub fn psi_alpha(pair: &ExtensionPair) -> Result<Cochain> {
    psi_alpha_shifted(pair, |_| SparseVec::new())
}

/// [`psi_alpha`] computed with the preimage of the `b`-th basis vector moved
/// by `shift(b) ∈ 𝔮`.
pub fn psi_alpha_shifted<F: Fn(usize) -> SparseVec>(pair: &ExtensionPair, shift: F) -> Result<Cochain> {
    let pre: Vec<SparseVec> = pair
        .preimages()?
        .iter()
        .enumerate()
        .map(|(b, p)| {
            let s = shift(b);
            if s.keys().any(|k| !pair.q_basis.contains(k)) {
                return Err(Error::NotInSubgroup("q"));
            }
            let mut v = p.clone();
            axpy(&mut v, &Rational::one(), &s);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let images: Vec<SparseVec> = pre.iter().map(|p| pair.alpha(p)).collect();
    Ok(Cochain::from_pairs(&pair.target_complex, |a, b| {
        let mut v = pair.target.bracket_sparse(&images[a], &images[b]);
        let inner = pair.source.bracket_sparse(&pre[a], &pre[b]);
        axpy(&mut v, &-Rational::one(), &pair.alpha(&inner));
        v
    }))
}

/// `φ : p+ → p̃+`. For lagrangean this is the closed form sending
/// `[[0, Z, ψ], [0, 0, W], [0, 0, 0]]` to the matrix with first row
/// `(0, ψ, Z, Wᵗ)`; for cr it is the transpose of `π ᾱ⁻¹` under the trace
/// forms.
pub fn phi_dual(pair: &ExtensionPair, z: &SparseVec) -> Result<SparseVec> {
    if z.keys().any(|&k| pair.source.grade_of(k) <= 0) {
        return Err(Error::Support("p+".into()));
    }
    match pair.source.family() {
        Family::Lagrangean { n } => {
            let m = pair.source.matrix_of(&crate::linalg::dense_from_sparse(z, pair.source.dim()));
            let last = n + 1;
            let mut t = RationalMatrix::zeros(2 * n + 2, 2 * n + 2);
            t[(0, 1)] = m[(0, last)].clone();
            for j in 0..n {
                t[(0, 2 + j)] = m[(0, 1 + j)].clone();
                t[(0, 2 + n + j)] = m[(1 + j, last)].clone();
            }
            let mut out = pair.target.element_from_matrix(&t)?.coords().clone();
            if let Some((g, ginv)) = &pair.conjugator {
                out = conjugate_sparse(&pair.target, &out, g, ginv);
            }
            Ok(out)
        }
        _ => phi_dual_route(pair, z),
    }
}

/// Transpose of `π ᾱ⁻¹` in the trace-form dual bases.
pub fn phi_dual_route(pair: &ExtensionPair, z: &SparseVec) -> Result<SparseVec> {
    let y = pair.source_complex.dual_coords(z);
    let l = pair.transfer_map()?;
    let mut out = SparseVec::new();
    for (b, lb) in l.iter().enumerate() {
        let mut c = Rational::zero();
        for (s, v) in lb {
            if let Some(ys) = y.get(s) {
                c += ys * v;
            }
        }
        axpy(&mut out, &c, pair.target_complex.dual_element(b));
    }
    Ok(out)
}

/// The constant `c` with `⟨φ(z), x̃⟩ = c ⟨z, π ᾱ⁻¹ x̃⟩` over basis vectors,
/// or `None` if no single constant fits.
pub fn phi_duality_constant(pair: &ExtensionPair) -> Result<Option<Rational>> {
    let l = pair.transfer_map()?;
    let neg_t = pair.target_complex.negative_basis();
    let neg_s = pair.source_complex.negative_basis();
    let mut constant: Option<Rational> = None;
    for zi in (0..pair.source.dim()).filter(|&i| pair.source.grade_of(i) > 0) {
        let z = SparseVec::from([(zi, Rational::one())]);
        let fz = phi_dual(pair, &z)?;
        for (b, &xt) in neg_t.iter().enumerate() {
            let lhs = pair.target.trace_form_sparse(&fz, &SparseVec::from([(xt, Rational::one())]));
            let lx: SparseVec = l[b].iter().map(|(s, v)| (neg_s[*s], v.clone())).collect();
            let rhs = pair.source.trace_form_sparse(&z, &lx);
            match (lhs.is_zero(), rhs.is_zero()) {
                (true, true) => {}
                (false, false) => {
                    let c = lhs / rhs;
                    match &constant {
                        None => constant = Some(c),
                        Some(k) if *k != c => return Ok(None),
                        _ => {}
                    }
                }
                _ => return Ok(None),
            }
        }
    }
    Ok(constant)
}

/// `κ̃(x̃, ỹ) = α(κ(π ᾱ⁻¹ x̃, π ᾱ⁻¹ ỹ)) + Ψ_α(x̃, ỹ)`.
pub fn extend_curvature(pair: &ExtensionPair, kappa: &Cochain) -> Result<Cochain> {
    let psi = psi_alpha(pair)?;
    transfer(pair, kappa)?.add(&psi)
}

/// The term `(Λ²φ ⊗ α)(κ)` of [`extend_curvature`].
pub fn transfer(pair: &ExtensionPair, kappa: &Cochain) -> Result<Cochain> {
    if !Arc::ptr_eq(kappa.complex(), &pair.source_complex) {
        return Err(Error::AlgebraMismatch(kappa.algebra().family().to_string(), pair.source.family().to_string()));
    }
    if kappa.degree() != 2 {
        return Err(Error::UnsupportedDegree(kappa.degree()));
    }
    let l = pair.transfer_map()?;
    Ok(Cochain::from_pairs(&pair.target_complex, |a, b| pair.alpha(&kappa.evaluate2(&l[a], &l[b]))))
}

/// Whether `(i₂, α₂)` is the conjugate of `(i₁, α₁)` by `witness ∈ P̃`.
pub fn pairs_equivalent(
    first: &ExtensionPair,
    second: &ExtensionPair,
    witness: &GroupElement,
    samples: &[GroupElement],
) -> Result<bool> {
    if first.source.family() != second.source.family() {
        return Ok(false);
    }
    let (g, ginv) = first.exact_witness(witness)?;
    let alpha_ok = first
        .alpha
        .iter()
        .zip(&second.alpha)
        .all(|(a, b)| &conjugate_sparse(&first.target, a, &g, &ginv) == b);
    if !alpha_ok {
        return Ok(false);
    }
    for s in samples {
        let lhs = second.i_map(s)?;
        let rhs = witness.inverse().mul(&first.i_map(s)?)?.mul(witness)?;
        if !lhs.same_class(&rhs, 1e-9) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The constant `c` with `[Ψ_α(X, [Y, W₀]), Z] = c · Sym(f)(X, Y, Z)` on
/// `g̃-2`, where `f` is the model trilinear map of the source family and
/// `W₀ = E_{0,1}`. `None` if no single nonzero constant fits.
pub fn symmetrization_constant(pair: &ExtensionPair) -> Result<Option<Rational>> {
    let psi = psi_alpha(pair)?;
    let tgt = &pair.target;
    let tc = &pair.target_complex;
    let m = match tgt.family() {
        Family::Path { m } => m,
        _ => unreachable!(),
    };
    let n = m / 2;
    let entry = |r: usize, c: usize| -> usize {
        let e = tgt.element_from_entries(&[(r, c, 1)]).expect("elementary matrix");
        *e.coords().keys().next().expect("nonzero")
    };
    let minus2: Vec<usize> = (0..m).map(|k| entry(2 + k, 0)).collect();
    let w0 = SparseVec::from([(entry(0, 1), Rational::one())]);
    let local = |v: &SparseVec| -> BTreeMap<usize, Rational> {
        v.iter().map(|(k, x)| (tc.local_index(*k).expect("g̃- element"), x.clone())).collect()
    };
    let signature: Vec<Rational> = match pair.source.family() {
        Family::Cr { p, .. } => (0..n).map(|j| if j < p { rat(1) } else { rat(-1) }).collect(),
        _ => vec![rat(1); n],
    };
    let model = |x: &[Rational], y: &[Rational], z: &[Rational]| -> Vec<Rational> {
        match pair.source.family() {
            Family::Lagrangean { .. } => {
                let s: Rational = (0..n).map(|j| &x[j] * &y[n + j]).sum();
                (0..m).map(|k| if k < n { &s * &z[k] } else { -(&s * &z[k]) }).collect()
            }
            _ => {
                let s: Rational = (0..n).map(|j| &signature[j] * (&x[j] * &y[j] + &x[n + j] * &y[n + j])).sum();
                (0..m).map(|k| if k < n { -(&s * &z[n + k]) } else { &s * &z[k - n] }).collect()
            }
        }
    };
    let unit = |i: usize| -> Vec<Rational> { (0..m).map(|k| if k == i { rat(1) } else { rat(0) }).collect() };
    let mut constant: Option<Rational> = None;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let x = SparseVec::from([(minus2[i], Rational::one())]);
                let y = SparseVec::from([(minus2[j], Rational::one())]);
                let z = SparseVec::from([(minus2[k], Rational::one())]);
                let yw = tgt.bracket_sparse(&y, &w0);
                let val = psi.evaluate2(&local(&x), &local(&yw));
                let t = tgt.bracket_sparse(&val, &z);
                if t.keys().any(|key| !minus2.contains(key)) {
                    return Ok(None);
                }
                let lhs: Vec<Rational> = minus2.iter().map(|key| t.get(key).cloned().unwrap_or_else(Rational::zero)).collect();
                let (ux, uy, uz) = (unit(i), unit(j), unit(k));
                let perms: [[&Vec<Rational>; 3]; 6] =
                    [[&ux, &uy, &uz], [&ux, &uz, &uy], [&uy, &ux, &uz], [&uy, &uz, &ux], [&uz, &ux, &uy], [&uz, &uy, &ux]];
                let mut sym = vec![Rational::zero(); m];
                for pm in perms {
                    for (s, v) in sym.iter_mut().zip(model(pm[0], pm[1], pm[2])) {
                        *s += v * ratio(1, 6);
                    }
                }
                for (a, b) in lhs.iter().zip(&sym) {
                    match (a.is_zero(), b.is_zero()) {
                        (true, true) => {}
                        (false, false) => {
                            let c = a / b;
                            match &constant {
                                None => constant = Some(c),
                                Some(c0) if *c0 != c => return Ok(None),
                                _ => {}
                            }
                        }
                        _ => return Ok(None),
                    }
                }
            }
        }
    }
    Ok(constant)
}

/// Source indices spanning `p̂`: `g1 ⊕ g2`, the off-diagonal entries of the
/// middle block and the diagonal differences inside it (lagrangean only).
pub fn p_hat(pair: &ExtensionPair) -> Result<Vec<usize>> {
    let Family::Lagrangean { n } = pair.source.family() else {
        return Err(Error::Unsupported("p̂ is defined for the lagrangean pair".into()));
    };
    let middle = |r: &usize| (1..=n).contains(r);
    Ok((0..pair.source.dim())
        .filter(|&i| match pair.source.grade_of(i) {
            g if g > 0 => true,
            0 => pair.source.basis_matrix(i).iter().all(|(r, c, _)| middle(r) && middle(c)),
            _ => false,
        })
        .collect())
}

/// Whether a target cochain lies in `(g̃-1^V)* ∧ (g̃-2)* ⊗ g̃0` with values in
/// the trace-free lower-right `m × m` block.
pub fn in_lemma_support(c: &Cochain) -> bool {
    let tc = c.complex();
    let alg = tc.algebra();
    let v_part = Component::new(-1, Part::V);
    c.coeffs().keys().all(|&(mask, v)| {
        let args: Vec<Component> =
            (0..tc.neg_dim()).filter(|s| mask & (1 << s) != 0).map(|s| alg.component_of(tc.negative_basis()[s])).collect();
        let has = |comp: Component| args.contains(&comp);
        let block_ok = alg.basis_matrix(v).iter().all(|(r, col, _)| *r >= 2 && *col >= 2);
        has(v_part) && has(Component::new(-2, Part::Whole)) && alg.grade_of(v) == 0 && block_ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{random_q, rationalize};
    use crate::hodge::{codifferential, harmonic_kernel, predicates, split_kernel};
    use crate::par::Execution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn diag(entries: &[i64]) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(entries.len(), entries.len());
        for (i, v) in entries.iter().enumerate() {
            m[(i, i)] = rat(*v);
        }
        m
    }

    #[test]
    fn alpha_of_cartan_element() {
        let pair = build_pair(Family::Lagrangean { n: 1 }).unwrap();
        let img = pair.alpha_of_matrix(&diag(&[1, 0, -1])).unwrap();
        assert_eq!(pair.target().matrix_of(&crate::linalg::dense_from_sparse(&img, pair.target().dim())), diag(&[1, -1, 0, 0]));
        assert!(pair.alpha_of_matrix(&RationalMatrix::zeros(3, 3)).unwrap().is_empty());
    }

    #[test]
    fn conditions_hold_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Cr { p: 1, q: 0 }, Family::Cr { p: 1, q: 1 }] {
            let pair = build_pair(f).unwrap();
            let samples: Vec<_> = (0..10).map(|_| random_q(pair.source(), &mut rng).unwrap()).collect();
            let r = pair.check_conditions(&samples).unwrap();
            assert!(r.passed(1e-9), "{f}: {r:?}");
            let id = GroupElement::identity(f);
            assert_eq!(pair.check_conditions(&[id]).unwrap().condition1_residual, 0.0);
        }
    }

    #[test]
    fn perturbed_alpha_fails_condition_two() {
        let pair = build_pair(Family::Lagrangean { n: 1 }).unwrap();
        let a = pair.q_basis()[0];
        let bad = pair.with_alpha_entry(0, a, rat(5));
        let r = bad.check_conditions(&[]).unwrap();
        assert!(!r.condition2_exact);
    }

    #[test]
    fn i_map_rejects_elements_outside_q() {
        let pair = build_pair(Family::Lagrangean { n: 1 }).unwrap();
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1.0;
        let g = GroupElement::from_matrix(pair.source().family(), m).unwrap();
        assert_eq!(pair.i_map(&g).unwrap_err(), Error::NotInSubgroup("Q"));
    }

    #[test]
    fn psi_is_well_defined_and_supported() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Cr { p: 1, q: 0 }] {
            let pair = build_pair(f).unwrap();
            let psi = psi_alpha(&pair).unwrap();
            assert!(!psi.is_zero());
            assert!(in_lemma_support(&psi), "{f}");
            let q = pair.q_basis().to_vec();
            let shifts: Vec<SparseVec> = (0..pair.target_complex().neg_dim())
                .map(|_| {
                    let c: Vec<f64> = (0..pair.source().dim())
                        .map(|i| if q.contains(&i) { (rand::Rng::gen_range(&mut rng, -4i32..4)) as f64 / 2.0 } else { 0.0 })
                        .collect();
                    rationalize(&c)
                })
                .collect();
            let other = psi_alpha_shifted(&pair, |b| shifts[b].clone()).unwrap();
            assert_eq!(psi, other, "{f}");
        }
    }

    #[test]
    fn psi_is_normal_torsion_free_and_harmonic() {
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Cr { p: 1, q: 0 }] {
            let pair = build_pair(f).unwrap();
            let psi = psi_alpha(&pair).unwrap();
            let p = predicates(&psi).unwrap();
            assert!(p.regular && p.normal && p.torsion_free, "{f}: {p:?}");
            assert!(crate::hodge::laplacian(&psi).unwrap().is_zero());
        }
    }

    #[test]
    fn symmetrization_constants_exist() {
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Cr { p: 1, q: 0 }, Family::Cr { p: 1, q: 1 }] {
            let pair = build_pair(f).unwrap();
            let c = symmetrization_constant(&pair).unwrap();
            assert!(c.as_ref().is_some_and(|c| !c.is_zero()), "{f}: {c:?}");
        }
    }

    #[test]
    fn phi_closed_form_matches_dual_route_up_to_constant() {
        for f in [Family::Lagrangean { n: 1 }, Family::Lagrangean { n: 2 }, Family::Cr { p: 1, q: 0 }] {
            let pair = build_pair(f).unwrap();
            let c = phi_duality_constant(&pair).unwrap();
            assert!(c.as_ref().is_some_and(|c| !c.is_zero()), "{f}: {c:?}");
            let allowed: BTreeSet<Component> = [Component::new(1, Part::E), Component::new(2, Part::Whole)].into();
            for zi in (0..pair.source().dim()).filter(|&i| pair.source().grade_of(i) > 0) {
                let img = phi_dual(&pair, &SparseVec::from([(zi, rat(1))])).unwrap();
                assert!(img.keys().all(|k| allowed.contains(&pair.target().component_of(*k))));
            }
            assert!(phi_dual(&pair, &SparseVec::new()).unwrap().is_empty());
            assert!(phi_dual(&pair, &SparseVec::from([(0, rat(1))])).is_err());
        }
    }

    #[test]
    fn flat_input_gives_psi() {
        let pair = build_pair(Family::Lagrangean { n: 1 }).unwrap();
        let zero = Cochain::zero(pair.source_complex(), 2);
        assert_eq!(extend_curvature(&pair, &zero).unwrap(), psi_alpha(&pair).unwrap());
    }

    #[test]
    fn extension_is_affine() {
        let pair = build_pair(Family::Lagrangean { n: 2 }).unwrap();
        let cx = pair.source_complex();
        let k1 = Cochain::from_pairs(cx, |a, b| SparseVec::from([((a + 2 * b) % 24, rat(a as i64 - b as i64))]));
        let k2 = Cochain::from_pairs(cx, |a, b| SparseVec::from([((3 * a + b) % 24, rat(1 + a as i64))]));
        let lhs = extend_curvature(&pair, &k1.add(&k2).unwrap()).unwrap();
        let rhs = extend_curvature(&pair, &k1)
            .unwrap()
            .add(&extend_curvature(&pair, &k2).unwrap())
            .unwrap()
            .sub(&psi_alpha(&pair).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn torsion_free_normal_curvatures_transfer_to_normal() {
        for n in 1..=2 {
            let pair = build_pair(Family::Lagrangean { n }).unwrap();
            let vals: BTreeSet<usize> = p_hat(&pair).unwrap().into_iter().collect();
            let basis = split_kernel(pair.source_complex(), &vals, Execution::Parallel);
            assert!(!basis.is_empty());
            for k in &basis {
                let out = extend_curvature(&pair, k).unwrap();
                let p = predicates(&out).unwrap();
                assert!(p.normal && p.regular, "n={n}");
            }
        }
    }

    #[test]
    fn harmonic_torsion_does_not_transfer() {
        let pair = build_pair(Family::Lagrangean { n: 2 }).unwrap();
        let basis = harmonic_kernel(pair.source_complex(), Execution::Parallel);
        let mut seen = 0;
        for (v, h) in basis.vectors.iter().zip(&basis.homogeneity) {
            if *h == 1 {
                seen += 1;
                let p = predicates(&extend_curvature(&pair, v).unwrap()).unwrap();
                assert!(!(p.regular && p.normal));
            }
        }
        assert_eq!(seen, 4);
    }

    #[test]
    fn equivalence_by_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pair = build_pair(Family::Lagrangean { n: 1 }).unwrap();
        let samples: Vec<_> = (0..5).map(|_| random_q(pair.source(), &mut rng).unwrap()).collect();
        let id = GroupElement::identity(pair.target().family());
        assert!(pairs_equivalent(&pair, &pair, &id, &samples).unwrap());
        let w = crate::groups::random_p(pair.target(), &mut rng);
        let conj = pair.conjugate(&w).unwrap();
        assert!(pairs_equivalent(&pair, &conj, &w, &samples).unwrap());
        assert!(!pairs_equivalent(&pair, &conj, &id, &samples).unwrap());
        assert!(conj.check_conditions(&samples).unwrap().passed(1e-9));
        let not_p = GroupElement::exp(&pair.target().basis_element(0));
        assert!(pairs_equivalent(&pair, &pair, &not_p, &samples).is_err());
    }

    #[test]
    fn codifferential_of_psi_vanishes_for_cr() {
        let pair = build_pair(Family::Cr { p: 2, q: 0 }).unwrap();
        assert!(codifferential(&psi_alpha(&pair).unwrap()).unwrap().is_zero());
    }
}
