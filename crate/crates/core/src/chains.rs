//! Chains of the homogeneous model `G/P`: curves `t ↦ u exp(tX) P` with
//! `X ∈ g-2`, and an affine chart on the big cell for the lagrangean case.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graded_lie::{AlgebraElement, Family, GradedAlgebra};
use crate::groups::{exp_f64, solve_transversal, GroupElement, GROUP_TOL};
use crate::linalg::to_f64;
use crate::par::{self, Execution};

/// The coset `gP`.
#[derive(Clone, Debug)]
pub struct FlagPoint {
    pub representative: GroupElement,
}

impl FlagPoint {
    pub fn new(representative: GroupElement) -> Self {
        Self { representative }
    }

    pub fn base(family: Family) -> Self {
        Self { representative: GroupElement::identity(family) }
    }

    pub fn same_point(&self, other: &Self, tol: f64) -> bool {
        self.representative.family() == other.representative.family()
            && self.representative.inverse().mul(&other.representative).is_ok_and(|h| h.in_p(tol))
    }
}

/// The chain `t ↦ frame · exp(t direction) · P`.
#[derive(Clone, Debug)]
pub struct ChainCurve {
    pub frame: GroupElement,
    pub direction: AlgebraElement,
}

/// The chain through `x` tangent to `xi ∈ g-2 ⊕ g-1` (read in the frame
/// `x.representative`). The frame is corrected by `exp(Z)`, `Z ∈ g1`, so
/// that the direction becomes the `g-2` part of `xi`.
pub fn chain_through(x: &FlagPoint, xi: &AlgebraElement) -> Result<ChainCurve> {
    let alg = xi.algebra();
    if x.representative.family() != alg.family() {
        return Err(Error::AlgebraMismatch(x.representative.family().to_string(), alg.family().to_string()));
    }
    if xi.coords().keys().any(|&k| alg.grade_of(k) >= 0) {
        return Err(Error::InvalidParameters("direction must lie in g-2 ⊕ g-1".into()));
    }
    let x2 = xi.component_grade(-2);
    let x1 = xi.component_grade(-1);
    if x2.is_zero() {
        return Err(Error::NotTransverse);
    }
    let z = solve_transversal(&x2, &x1)?;
    let frame = x.representative.mul(&GroupElement::exp(&z))?;
    Ok(ChainCurve { frame, direction: x2 })
}

impl ChainCurve {
    pub fn family(&self) -> Family {
        self.frame.family()
    }

    fn direction_f64(&self) -> DMatrix<f64> {
        let alg = self.direction.algebra();
        let c: Vec<f64> = self.direction.dense_coords().iter().map(to_f64).collect();
        alg.matrix_f64(&c)
    }

    pub fn point(&self, t: f64) -> FlagPoint {
        let e = exp_f64(&(self.direction_f64() * t));
        let m = self.frame.matrix() * e;
        FlagPoint { representative: GroupElement::from_matrix(self.family(), m).expect("shape preserved") }
    }

    /// Chart coordinates of the point at parameter `t`.
    pub fn chart_at(&self, t: f64) -> Result<Vec<f64>> {
        chart_coords(&self.point(t))
    }
}

pub fn sample_chain(c: &ChainCurve, ts: &[f64], exec: Execution) -> Vec<FlagPoint> {
    par::map(exec, ts, |t| c.point(*t))
}

/// Chart minors below this (relative) size count as leaving the chart.
pub const CHART_TOL: f64 = 1e-12;

/// Big-cell coordinates `(x, y, z)` of a lagrangean flag `(line, hyperplane)`:
/// the line is spanned by `(1, x, z)` and the hyperplane is the kernel of
/// `(*, -y, 1)`. The base point maps to the origin.
pub fn chart_coords(pt: &FlagPoint) -> Result<Vec<f64>> {
    let Family::Lagrangean { n } = pt.representative.family() else {
        return Err(Error::Unsupported("charts are provided for the lagrangean model".into()));
    };
    let g = pt.representative.matrix();
    let last = n + 1;
    let v = g.column(0);
    let f = g.clone().try_inverse().ok_or_else(|| Error::Degenerate("singular representative".into()))?;
    let f = f.row(last);
    let scale_v = v.amax();
    let scale_f = f.amax();
    if v[0].abs() <= CHART_TOL * scale_v || f[last].abs() <= CHART_TOL * scale_f {
        return Err(Error::OutsideChart);
    }
    let mut out = Vec::with_capacity(2 * n + 1);
    out.extend((1..=n).map(|j| v[j] / v[0]));
    out.extend((1..=n).map(|j| -f[j] / f[last]));
    out.push(v[last] / v[0]);
    Ok(out)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance from `p` to the chart image of `curve` over `window`: grid
/// search and golden-section bracketing in `θ = atan t` (so that wide windows
/// keep their resolution near `t = 0`), then Gauss–Newton polishing in `t`.
pub fn distance_to_curve(p: &[f64], curve: &ChainCurve, window: (f64, f64), grid: usize) -> Result<f64> {
    let f = |t: f64| -> f64 { curve.chart_at(t).map_or(f64::INFINITY, |c| dist(&c, p)) };
    let g = |th: f64| f(th.tan());
    let (lo, hi) = (window.0.atan(), window.1.atan());
    let step = (hi - lo) / grid as f64;
    let (mut best_th, mut best) = (lo, f64::INFINITY);
    for i in 0..=grid {
        let th = lo + step * i as f64;
        let d = g(th);
        if d < best {
            best = d;
            best_th = th;
        }
    }
    let (mut a, mut b) = ((best_th - step).max(lo), (best_th + step).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let best = best.min(g(0.5 * (a + b)));
    let a = a.tan();
    let b = b.tan();
    let mut t = 0.5 * (a + b);
    for _ in 0..8 {
        let (Ok(c), Ok(cp), Ok(cm)) = (curve.chart_at(t), curve.chart_at(t + 1e-6), curve.chart_at(t - 1e-6)) else {
            break;
        };
        let vel: Vec<f64> = cp.iter().zip(&cm).map(|(x, y)| (x - y) / 2e-6).collect();
        let vv: f64 = vel.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            break;
        }
        let r: f64 = c.iter().zip(p).zip(&vel).map(|((ci, pi), vi)| (ci - pi) * vi).sum();
        let next = t - r / vv;
        if f(next) <= f(t) {
            t = next;
        } else {
            break;
        }
    }
    Ok(best.min(f(t)))
}

/// Symmetric Hausdorff distance between the chart images of two chains:
/// points of each curve sampled on `window` are matched against the other
/// curve over `search`. Samples outside the chart are skipped.
pub fn hausdorff_distance(
    a: &ChainCurve,
    b: &ChainCurve,
    window: (f64, f64),
    samples: usize,
    search: (f64, f64),
    exec: Execution,
) -> Result<f64> {
    let ts: Vec<f64> = (0..samples).map(|i| window.0 + (window.1 - window.0) * i as f64 / (samples - 1).max(1) as f64).collect();
    let one_sided = |from: &ChainCurve, to: &ChainCurve| -> Result<f64> {
        let ds = par::map(exec, &ts, |t| match from.chart_at(*t) {
            // Still on the chain, only not in this chart.
            Err(Error::OutsideChart) => Ok(None),
            other => other.and_then(|p| distance_to_curve(&p, to, search, 2000)).map(Some),
        });
        let mut worst: Option<f64> = None;
        for d in ds {
            if let Some(d) = d? {
                worst = Some(worst.unwrap_or(0.0).max(d));
            }
        }
        worst.ok_or(Error::OutsideChart)
    };
    Ok(one_sided(a, b)?.max(one_sided(b, a)?))
}

/// Parameter grid of `samples` points on `[t_min, t_max]`.
pub fn parameter_grid(t_min: f64, t_max: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![t_min];
    }
    (0..samples).map(|i| t_min + (t_max - t_min) * i as f64 / (samples - 1) as f64).collect()
}

/// Writes `t,x1,...,x{2n+1}` rows with 17 significant digits.
pub fn write_csv<W: Write>(out: &mut W, curve: &ChainCurve, ts: &[f64], exec: Execution) -> Result<()> {
    let rows: Vec<Vec<f64>> = par::map(exec, ts, |t| curve.chart_at(*t)).into_iter().collect::<Result<_>>()?;
    let dim = match curve.family() {
        Family::Lagrangean { n } => 2 * n + 1,
        _ => return Err(Error::Unsupported("charts are provided for the lagrangean model".into())),
    };
    let io = |e: std::io::Error| Error::InvalidParameters(format!("write failed: {e}"));
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("x{i}"))).collect();
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for (t, row) in ts.iter().zip(rows) {
        // `+ 0.0` maps -0 to 0.
        let cells: Vec<String> = std::iter::once(*t).chain(row).map(|v| format!("{:.16e}", v + 0.0)).collect();
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainManifest {
    pub n: usize,
    pub frame: Vec<Vec<f64>>,
    /// Coordinates of the `g-2` direction over the algebra basis.
    pub direction: Vec<f64>,
    pub t_range: [f64; 2],
    pub samples: usize,
}

impl ChainManifest {
    pub fn new(curve: &ChainCurve, t_range: [f64; 2], samples: usize) -> Self {
        let m = curve.frame.matrix();
        let n = match curve.family() {
            Family::Lagrangean { n } => n,
            Family::Cr { p, q } => p + q,
            Family::Path { m } => m,
        };
        Self {
            n,
            frame: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            direction: curve.direction.dense_coords().iter().map(to_f64).collect(),
            t_range,
            samples,
        }
    }
}

/// Whether the frame of `curve` is `base · exp(Z)` with `[Z, X-2] = X-1`,
/// and the `g-` part of `Ad(exp(-Z)) xi` is the curve direction (exact).
pub fn frame_round_trip(curve: &ChainCurve, base: &FlagPoint, xi: &AlgebraElement) -> bool {
    let alg: &GradedAlgebra = xi.algebra();
    let Ok(z) = solve_transversal(&xi.component_grade(-2), &xi.component_grade(-1)) else {
        return false;
    };
    let Ok(corr) = base.representative.inverse().mul(&curve.frame) else {
        return false;
    };
    let zf: Vec<f64> = z.dense_coords().iter().map(to_f64).collect();
    let expect = exp_f64(&alg.matrix_f64(&zf));
    let float_ok = (corr.matrix() - expect).abs().max() <= GROUP_TOL * (1.0 + corr.matrix().abs().max());
    // Higher terms of Ad(exp(-Z)) xi lie in p.
    let moved = xi.sub(&z.bracket(xi).expect("same algebra")).expect("same algebra");
    float_ok && moved.negative_part() == curve.direction
}
