//! The symmetric cubic tensor `S` of a contact fiber and its inversion.
//!
//! With `g(ξ, η) = L(ξ, 𝕁η)` (symmetric for both structure types),
//! `S(ξ, η, ζ) = ⅓ (g(ξ,η) 𝕁ζ + g(η,ζ) 𝕁ξ + g(ξ,ζ) 𝕁η)`. Writing
//! `A_ξ = S(ξ, ξ, ·) = ⅓ 𝕁 N_ξ` with `N_ξ = g(ξ,ξ) + 2 ξ ⊗ g(ξ, ·)` one gets
//! `tr A_ξ² = κ g(ξ,ξ)²`, `κ = ±(2n + 4)/9` (`+` for product, `-` for complex
//! structures). Polarizing this quartic recovers `g` up to sign, and then
//! `𝕁 = 3 A_ξ N_ξ⁻¹` up to the same sign.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded_lie::Family;

/// The endomorphism part of a fiber.
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    /// `𝕁² = 1` with `±1`-eigenspaces `L` and `R` of dimension `n`.
    Product(DMatrix<f64>),
    /// `J² = -1`.
    Complex(DMatrix<f64>),
}

impl Structure {
    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            Structure::Product(m) | Structure::Complex(m) => m,
        }
    }

    fn square_sign(&self) -> f64 {
        match self {
            Structure::Product(_) => 1.0,
            Structure::Complex(_) => -1.0,
        }
    }
}

/// `(H_x, L, 𝕁 or J)` with `H_x = R^{2n}`.
#[derive(Clone, Debug)]
pub struct ContactFiber {
    pub levi: DMatrix<f64>,
    pub structure: Structure,
}

const FIBER_TOL: f64 = 1e-9;

impl ContactFiber {
    pub fn dim(&self) -> usize {
        self.levi.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let j = self.structure.matrix();
        if d == 0 || !d.is_multiple_of(2) || self.levi.ncols() != d || j.nrows() != d || j.ncols() != d {
            return Err(Error::InvalidParameters("fiber must be square of even dimension".into()));
        }
        let scale = 1.0 + self.levi.amax();
        if (&self.levi + self.levi.transpose()).amax() > FIBER_TOL * scale {
            return Err(Error::InvalidParameters("levi form is not antisymmetric".into()));
        }
        let det = self.levi.determinant();
        if det.abs() <= FIBER_TOL * scale.powi(d as i32) {
            return Err(Error::Degenerate("levi form is degenerate".into()));
        }
        let jscale = 1.0 + j.amax();
        let id = DMatrix::<f64>::identity(d, d) * self.structure.square_sign();
        if (j * j - id).amax() > FIBER_TOL * jscale * jscale {
            return Err(Error::InvalidParameters("structure does not square to ±1".into()));
        }
        // L(Jξ, Jη) = ∓ L(ξ, η).
        let twisted = j.transpose() * &self.levi * j;
        if (twisted + &self.levi * self.structure.square_sign()).amax() > FIBER_TOL * scale * jscale * jscale {
            return Err(Error::InvalidParameters("structure is not compatible with the levi form".into()));
        }
        if let Structure::Product(m) = &self.structure {
            if m.trace().abs() > FIBER_TOL * jscale * d as f64 {
                return Err(Error::InvalidParameters("eigenspaces of 𝕁 must have equal dimension".into()));
            }
        }
        Ok(())
    }

    /// `g(ξ, η) = L(ξ, 𝕁η)` as a matrix.
    pub fn metric(&self) -> DMatrix<f64> {
        &self.levi * self.structure.matrix()
    }

    /// Standard product fiber: `L = [[0, 1], [-1, 0]]`, `𝕁 = diag(1, -1)`.
    pub fn standard_product(n: usize) -> Self {
        let mut j = DMatrix::identity(2 * n, 2 * n);
        for i in n..2 * n {
            j[(i, i)] = -1.0;
        }
        Self { levi: standard_symplectic(n, &vec![1.0; n]), structure: Structure::Product(j) }
    }

    /// Standard complex fiber of signature `(p, q)`: `J = [[0, -1], [1, 0]]`
    /// and `L = [[0, 𝕀], [-𝕀, 0]]`.
    pub fn standard_complex(p: usize, q: usize) -> Self {
        let n = p + q;
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = -1.0;
            j[(n + i, i)] = 1.0;
        }
        let signs: Vec<f64> = (0..n).map(|i| if i < p { 1.0 } else { -1.0 }).collect();
        Self { levi: standard_symplectic(n, &signs), structure: Structure::Complex(j) }
    }

    /// The same fiber in coordinates `ξ' = T ξ`.
    pub fn transformed(&self, t: &DMatrix<f64>) -> Result<Self> {
        let tinv = t.clone().try_inverse().ok_or_else(|| Error::Degenerate("singular basis change".into()))?;
        let levi = tinv.transpose() * &self.levi * &tinv;
        let j = t * self.structure.matrix() * &tinv;
        let structure = match self.structure {
            Structure::Product(_) => Structure::Product(j),
            Structure::Complex(_) => Structure::Complex(j),
        };
        Ok(Self { levi, structure })
    }
}

fn standard_symplectic(n: usize, signs: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        l[(i, n + i)] = signs[i];
        l[(n + i, i)] = -signs[i];
    }
    l
}

/// Random well-conditioned basis change.
pub fn random_basis_change<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let t = DMatrix::from_fn(d, d, |i, j| if i == j { 1.5 } else { 0.0 } + rng.gen_range(-1.0..1.0));
        let sv = t.clone().svd(false, false).singular_values;
        if sv.min() > 0.3 {
            return t;
        }
    }
}

pub fn random_product_fiber<R: Rng>(n: usize, rng: &mut R) -> (ContactFiber, DMatrix<f64>) {
    let t = random_basis_change(2 * n, rng);
    (ContactFiber::standard_product(n).transformed(&t).expect("invertible"), t)
}

pub fn random_complex_fiber<R: Rng>(p: usize, q: usize, rng: &mut R) -> (ContactFiber, DMatrix<f64>) {
    let t = random_basis_change(2 * (p + q), rng);
    (ContactFiber::standard_complex(p, q).transformed(&t).expect("invertible"), t)
}

/// Coefficients `S(e_i, e_j, e_k)_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicTensor {
    dim: usize,
    coeffs: Vec<f64>,
}

impl CubicTensor {
    pub fn from_fn<F: FnMut(usize, usize, usize, usize) -> f64>(dim: usize, mut f: F) -> Self {
        let mut coeffs = Vec::with_capacity(dim.pow(4));
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        coeffs.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self { dim, coeffs }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, coeffs: vec![0.0; dim.pow(4)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let d = self.dim;
        self.coeffs[((i * d + j) * d + k) * d + l]
    }

    pub fn eval(&self, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for i in 0..d {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let abc = ab * c[k];
                    if abc == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        out[l] += abc * self.coeff(i, j, k, l);
                    }
                }
            }
        }
        out
    }

    /// The endomorphism `ζ ↦ S(a, b, ζ)`.
    pub fn partial(&self, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = DVector::zeros(d);
            e[k] = 1.0;
            m.set_column(k, &self.eval(a, b, &e));
        }
        m
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| {
            (0..d).all(|j| {
                (0..d).all(|k| {
                    (0..d).all(|l| {
                        let v = self.coeff(i, j, k, l);
                        v == self.coeff(j, i, k, l)
                            && v == self.coeff(i, k, j, l)
                            && v == self.coeff(k, j, i, l)
                    })
                })
            })
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, coeffs: self.coeffs.iter().map(|x| x * s).collect() }
    }
}

/// Complete symmetrization of `(ξ, η, ζ) ↦ L(ξ, 𝕁η) 𝕁ζ`.
pub fn build_s(f: &ContactFiber) -> Result<CubicTensor> {
    f.validate()?;
    Ok(build_s_unchecked(&f.metric(), f.structure.matrix()))
}

fn build_s_unchecked(g: &DMatrix<f64>, j: &DMatrix<f64>) -> CubicTensor {
    let d = g.nrows();
    // The three distinct terms, each standing for two permutations.
    // Evaluated at the sorted triple so that the result is bitwise symmetric.
    CubicTensor::from_fn(d, |a, b, c, l| {
        let mut idx = [a, b, c];
        idx.sort_unstable();
        let [a, b, c] = idx;
        let t = |x: usize, y: usize, z: usize| 0.5 * (g[(x, y)] + g[(y, x)]) * j[(l, z)];
        (t(a, b, c) + t(b, c, a) + t(a, c, b) + t(b, a, c) + t(c, b, a) + t(c, a, b)) / 6.0
    })
}

/// Default relative tolerance of [`membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `S(ξ,ξ,ξ) = 0` and some probe `η` has `S(ξ,ξ,η)` a nonzero multiple of `ξ`.
pub fn membership(s: &CubicTensor, xi: &DVector<f64>, probes: &[DVector<f64>], tol: f64) -> Result<bool> {
    if probes.is_empty() {
        return Err(Error::InvalidParameters("membership needs at least one probe".into()));
    }
    let xn = xi.norm();
    if xn == 0.0 {
        return Err(Error::InvalidParameters("ξ must be nonzero".into()));
    }
    let scale = s.norm() * xn * xn;
    if scale == 0.0 {
        return Ok(false);
    }
    if s.eval(xi, xi, xi).norm() > tol * scale * xn {
        return Ok(false);
    }
    let unit = xi / xn;
    Ok(probes.iter().any(|eta| {
        let v = s.eval(xi, xi, eta);
        let vn = v.norm();
        let perp = &v - &unit * unit.dot(&v);
        vn > tol * scale * eta.norm() && perp.norm() <= tol * scale * eta.norm().max(vn / (scale + f64::MIN_POSITIVE))
    }))
}

/// Output of an inversion: the symmetric form and structure up to a common
/// sign, with diagnostics.
#[derive(Clone, Debug)]
pub struct Inversion {
    pub metric: DMatrix<f64>,
    pub structure: DMatrix<f64>,
    /// Candidate seed directions tried.
    pub iterations: usize,
    /// Max coefficient difference between `S` and the rebuilt tensor,
    /// relative to `‖S‖`.
    pub residual: f64,
}

impl Inversion {
    /// `L(ξ, η) = g(ξ, 𝕁⁻¹η)`.
    pub fn levi(&self) -> DMatrix<f64> {
        let jinv = self.structure.clone().try_inverse().expect("structure is invertible");
        &self.metric * jinv
    }
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b).trace()
}

fn invert(s: &CubicTensor, sign: f64, seed: u64, tol: f64) -> Result<Inversion> {
    use rand::SeedableRng;
    let d = s.dim();
    if d == 0 || !d.is_multiple_of(2) {
        return Err(Error::InvalidParameters("tensor dimension must be even".into()));
    }
    let snorm = s.norm();
    if snorm == 0.0 {
        return Err(Error::Degenerate("S vanishes".into()));
    }
    let n = d / 2;
    let kappa = sign * (2 * n + 4) as f64 / 9.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    for _ in 0..8 {
        candidates.push(DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)));
    }
    // Ordered by |P(ξ)| / |ξ|⁴, largest first.
    let quartic = |x: &DVector<f64>| {
        let a = s.partial(x, x);
        trace_product(&a, &a)
    };
    candidates.sort_by(|a, b| {
        let qa = (quartic(a) / a.norm().powi(4)).abs();
        let qb = (quartic(b) / b.norm().powi(4)).abs();
        qb.partial_cmp(&qa).unwrap_or(std::cmp::Ordering::Equal)
    });
    let basis: Vec<DVector<f64>> = (0..d)
        .map(|k| {
            let mut e = DVector::zeros(d);
            e[k] = 1.0;
            e
        })
        .collect();
    let mut last_err = Error::Solver("no admissible seed direction".into());
    for (it, x0) in candidates.iter().enumerate() {
        let p0 = quartic(x0);
        let q00_sq = p0 / kappa;
        if q00_sq.is_nan() || q00_sq <= 0.0 || q00_sq.sqrt() <= tol * snorm * x0.norm().powi(2) {
            last_err = Error::Solver(format!("tr A² has the wrong sign or vanishes for the {} structure type", if sign > 0.0 { "product" } else { "complex" }));
            continue;
        }
        let q00 = q00_sq.sqrt();
        let a00 = s.partial(x0, x0);
        let a0: Vec<DMatrix<f64>> = basis.iter().map(|e| s.partial(x0, e)).collect();
        // M_cd = 3 P4(ξ0, ξ0, e_c, e_d) / κ = q00 g_cd + 2 g_c g_d.
        let m = DMatrix::from_fn(d, d, |c, dd| {
            let acd = s.partial(&basis[c], &basis[dd]);
            (trace_product(&a00, &acd) + 2.0 * trace_product(&a0[c], &a0[dd])) / kappa
        });
        let gx: DVector<f64> = (m.transpose() * x0) / (3.0 * q00);
        let g = (&m - &gx * gx.transpose() * 2.0) / q00;
        let nmat = DMatrix::identity(d, d) * q00 + x0 * gx.transpose() * 2.0;
        let Some(ninv) = nmat.try_inverse() else {
            last_err = Error::Solver("singular N".into());
            continue;
        };
        let j = a00 * ninv * 3.0;
        let rebuilt = build_s_unchecked(&g, &j);
        let residual = rebuilt.max_abs_diff(s) / snorm;
        let sq = (&j * &j - DMatrix::identity(d, d) * sign).amax();
        if residual <= tol.sqrt() && sq <= tol.sqrt() {
            return Ok(Inversion { metric: g, structure: j, iterations: it + 1, residual });
        }
        last_err = Error::Solver(format!("rebuilt tensor residual {residual:.3e}, structure square residual {sq:.3e}"));
    }
    Err(last_err)
}

/// `L_x` and `R_x` (unordered) from `S` of a product fiber.
#[derive(Clone, Debug)]
pub struct ProductReconstruction {
    /// Orthonormal bases (columns) of the two eigenspaces.
    pub first: DMatrix<f64>,
    pub second: DMatrix<f64>,
    pub inversion: Inversion,
}

pub fn reconstruct_lagrangean(s: &CubicTensor, seed: u64) -> Result<ProductReconstruction> {
    let inv = invert(s, 1.0, seed, 1e-12)?;
    let d = s.dim();
    let id = DMatrix::<f64>::identity(d, d);
    let plus = null_space(&(&inv.structure - &id), d / 2)?;
    let minus = null_space(&(&inv.structure + &id), d / 2)?;
    Ok(ProductReconstruction { first: plus, second: minus, inversion: inv })
}

/// `J` up to sign (and the levi form up to the same sign) from `S` of a
/// complex fiber.
pub fn reconstruct_cr(s: &CubicTensor, seed: u64) -> Result<Inversion> {
    invert(s, -1.0, seed, 1e-12)
}

/// Orthonormal basis of the null space, expected to have dimension `dim`.
fn null_space(m: &DMatrix<f64>, dim: usize) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Solver("svd failed".into()))?;
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|a, b| sv[*a].partial_cmp(&sv[*b]).unwrap_or(std::cmp::Ordering::Equal));
    let top = sv.max().max(1.0);
    let kernel = idx.iter().take_while(|&&i| sv[i] <= 1e-6 * top).count();
    if kernel != dim {
        return Err(Error::Solver(format!("eigenspace has dimension {kernel} instead of {dim}")));
    }
    Ok(DMatrix::from_fn(m.ncols(), dim, |r, c| vt[(idx[c], r)]))
}

/// Largest principal angle (as its sine) between two column spaces.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let proj = &qa * qa.transpose();
    let resid = &qb - proj * &qb;
    resid.svd(false, false).singular_values.max()
}

/// Round-trip diagnostics (product: two subspace distances per fiber;
/// complex: the operator error `min ‖J' ∓ J‖`).
#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionReport {
    pub kind: String,
    pub n: usize,
    pub fiber_seed: u64,
    pub subspace_angles: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
}

/// Builds `count` random fibers, reconstructs them and measures the errors.
pub fn round_trip_report(family: Family, count: usize, seed: u64) -> Result<ReconstructionReport> {
    use rand::SeedableRng;
    family.validate()?;
    let (kind, n) = match family {
        Family::Lagrangean { n } => ("product", n),
        Family::Cr { p, q } => ("complex", p + q),
        Family::Path { .. } => return Err(Error::Unsupported("fibers come from lagrangean or cr data".into())),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = ReconstructionReport {
        kind: kind.to_string(),
        n,
        fiber_seed: seed,
        subspace_angles: Vec::new(),
        residuals: Vec::new(),
        iterations: Vec::new(),
    };
    for i in 0..count {
        match family {
            Family::Lagrangean { .. } => {
                let (fiber, t) = random_product_fiber(n, &mut rng);
                let s = build_s(&fiber)?;
                let r = reconstruct_lagrangean(&s, seed.wrapping_add(i as u64))?;
                let l = t.columns(0, n).into_owned();
                let rr = t.columns(n, n).into_owned();
                let direct = subspace_distance(&r.first, &l).max(subspace_distance(&r.second, &rr));
                let swapped = subspace_distance(&r.first, &rr).max(subspace_distance(&r.second, &l));
                report.subspace_angles.push(direct.min(swapped));
                report.residuals.push(r.inversion.residual);
                report.iterations.push(r.inversion.iterations);
            }
            _ => {
                let Family::Cr { p, q } = family else { unreachable!() };
                let (fiber, _) = random_complex_fiber(p, q, &mut rng);
                let s = build_s(&fiber)?;
                let r = reconstruct_cr(&s, seed.wrapping_add(i as u64))?;
                let j = fiber.structure.matrix();
                let err = (&r.structure - j).amax().min((&r.structure + j).amax());
                report.subspace_angles.push(err);
                report.residuals.push(r.residual);
                report.iterations.push(r.iterations);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn standard_n1_coefficients() {
        let s = build_s(&ContactFiber::standard_product(1)).unwrap();
        // g = L𝕁 = [[0, -1], [-1, 0]]; S(e0,e0,e1) = ⅔ g01 𝕁e0, S(e0,e1,e1) = ⅔ g01 𝕁e1.
        let expect = |i: usize, j: usize, k: usize, l: usize| -> f64 {
            match (i + j + k, l) {
                (1, 0) => -2.0 / 3.0,
                (2, 1) => 2.0 / 3.0,
                _ => 0.0,
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert!((s.coeff(i, j, k, l) - expect(i, j, k, l)).abs() < 1e-15);
                    }
                }
            }
        }
        assert!(s.is_symmetric());
    }

    #[test]
    fn membership_examples() {
        let f = ContactFiber::standard_product(1);
        let s = build_s(&f).unwrap();
        let probes = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(membership(&s, &v(&[2.0, 0.0]), &probes, MEMBERSHIP_TOL).unwrap());
        assert!(membership(&s, &v(&[0.0, -1.0]), &probes, MEMBERSHIP_TOL).unwrap());
        assert!(!membership(&s, &v(&[1.0, 1.0]), &probes, MEMBERSHIP_TOL).unwrap());
        assert!(membership(&s, &v(&[0.0, 0.0]), &probes, MEMBERSHIP_TOL).is_err());
        assert!(membership(&s, &v(&[1.0, 0.0]), &[], MEMBERSHIP_TOL).is_err());
    }

    #[test]
    fn swapping_l_and_r_keeps_s() {
        let f = ContactFiber::standard_product(2);
        let mut g = f.clone();
        g.structure = Structure::Product(-f.structure.matrix());
        assert_eq!(build_s(&f).unwrap().max_abs_diff(&build_s(&g).unwrap()), 0.0);
    }

    #[test]
    fn standard_n1_reconstructs_axes() {
        let s = build_s(&ContactFiber::standard_product(1)).unwrap();
        let r = reconstruct_lagrangean(&s, 0).unwrap();
        let x = v(&[1.0, 0.0]);
        let y = v(&[0.0, 1.0]);
        let xs = DMatrix::from_columns(&[x]);
        let ys = DMatrix::from_columns(&[y]);
        let d1 = subspace_distance(&r.first, &xs).max(subspace_distance(&r.second, &ys));
        let d2 = subspace_distance(&r.first, &ys).max(subspace_distance(&r.second, &xs));
        assert!(d1.min(d2) < 1e-12);
    }

    #[test]
    fn zero_tensor_is_degenerate() {
        assert!(matches!(reconstruct_lagrangean(&CubicTensor::zero(2), 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn standard_cr_reconstructs_j() {
        let f = ContactFiber::standard_complex(1, 0);
        let s = build_s(&f).unwrap();
        let r = reconstruct_cr(&s, 0).unwrap();
        let j = f.structure.matrix();
        assert!((&r.structure - j).amax().min((&r.structure + j).amax()) < 1e-10);
        let rebuilt = build_s_unchecked(&r.metric, &r.structure);
        assert!(rebuilt.max_abs_diff(&s) < 1e-9);
    }

    #[test]
    fn wrong_structure_class_is_reported() {
        let s = build_s(&ContactFiber::standard_product(1)).unwrap();
        assert!(matches!(reconstruct_cr(&s, 0), Err(Error::Solver(_))));
        let s = build_s(&ContactFiber::standard_complex(1, 0)).unwrap();
        assert!(reconstruct_lagrangean(&s, 0).is_err());
    }

    #[test]
    fn random_round_trips() {
        for n in 1..=3 {
            for f in [Family::Lagrangean { n }, Family::Cr { p: n.div_ceil(2), q: n / 2 }] {
                let r = round_trip_report(f, 5, 42).unwrap();
                assert!(r.subspace_angles.iter().all(|a| *a < 1e-8), "{f}: {:?}", r.subspace_angles);
            }
        }
    }

    #[test]
    fn membership_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (f, t) = random_product_fiber(2, &mut rng);
        let s = build_s(&f).unwrap();
        let probes: Vec<DVector<f64>> = (0..4).map(|k| t.column(k).into_owned()).collect();
        let xi = t.column(0).into_owned();
        for (a, b) in [(1.0, 1.0), (1e-3, 1.0), (1.0, 1e4), (37.0, 1e-2)] {
            assert!(membership(&s.scaled(b), &(&xi * a), &probes, MEMBERSHIP_TOL).unwrap());
        }
        let generic = t.column(0) + t.column(2);
        assert!(!membership(&s, &generic.into_owned(), &probes, MEMBERSHIP_TOL).unwrap());
        let _ = f.validate();
    }

    #[test]
    fn invalid_fibers_are_rejected() {
        let mut f = ContactFiber::standard_product(1);
        f.levi[(0, 1)] = 2.0;
        assert!(build_s(&f).is_err());
        let mut f = ContactFiber::standard_product(1);
        f.structure = Structure::Product(DMatrix::identity(2, 2));
        assert!(build_s(&f).is_err());
    }
}
