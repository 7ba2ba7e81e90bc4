//! Exponential decay fits and the figures of merit derived from them.
//!
//! Decays are fitted as `y = A·p^m + B` (or `A·p^m`) by weighted least
//! squares in the parameters `(A, log p, B)`, which keeps `p` positive and
//! well conditioned close to 1. Weights are inverse variances.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::PauliLabel;

/// One decay measurement: depth, mean value and its weight (inverse variance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitPoint {
    pub m: f64,
    pub y: f64,
    pub weight: f64,
}

impl FitPoint {
    pub fn new(m: f64, y: f64, weight: f64) -> Self {
        Self { m, y, weight }
    }

    /// Weight from a standard error, floored so exact points stay finite.
    pub fn from_stderr(m: f64, y: f64, stderr: f64) -> Self {
        Self { m, y, weight: 1.0 / (stderr * stderr).max(1e-12) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `A·p^m + B`
    WithOffset,
    /// `A·p^m`
    NoOffset,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub model: FitModel,
    /// Treat weights as absolute inverse variances. Otherwise the covariance is
    /// rescaled by the reduced chi-square.
    pub absolute_weights: bool,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            model: FitModel::WithOffset,
            absolute_weights: true,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    #[serde(rename = "A")]
    pub a: f64,
    pub p: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub sigma_p: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `sqrt(Σ w·r²)`.
    pub residual_norm: f64,
    /// Reduced chi-square, `Σ w·r² / (N − k)`.
    pub reduced_chi2: f64,
    pub iterations: usize,
    /// Set when the data are flat and `p` was pinned to 1 instead of fitted.
    #[serde(default)]
    pub flat: bool,
}

struct Problem<'a> {
    pts: &'a [FitPoint],
    offset: bool,
}

impl Problem<'_> {
    fn k(&self) -> usize {
        if self.offset {
            3
        } else {
            2
        }
    }

    fn model(&self, theta: &[f64], m: f64) -> f64 {
        let b = if self.offset { theta[2] } else { 0.0 };
        theta[0] * (theta[1] * m).exp() + b
    }

    fn chi2(&self, theta: &[f64]) -> f64 {
        self.pts
            .iter()
            .map(|pt| pt.weight * (pt.y - self.model(theta, pt.m)).powi(2))
            .sum()
    }

    /// Returns `(JᵀWJ, JᵀW r)` with `r = y − f`.
    fn normal_equations(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let mut jtj = vec![0.0; k * k];
        let mut jtr = vec![0.0; k];
        for pt in self.pts {
            let e = (theta[1] * pt.m).exp();
            let row = [e, theta[0] * pt.m * e, 1.0];
            let r = pt.y - self.model(theta, pt.m);
            for i in 0..k {
                jtr[i] += pt.weight * row[i] * r;
                for j in 0..k {
                    jtj[i * k + j] += pt.weight * row[i] * row[j];
                }
            }
        }
        (jtj, jtr)
    }

    /// Best linear `(A, B)` for a fixed `q = log p`.
    fn linear_for(&self, q: f64) -> Option<Vec<f64>> {
        let (mut s_ee, mut s_e, mut s_1, mut s_ey, mut s_y) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for pt in self.pts {
            let e = (q * pt.m).exp();
            s_ee += pt.weight * e * e;
            s_e += pt.weight * e;
            s_1 += pt.weight;
            s_ey += pt.weight * e * pt.y;
            s_y += pt.weight * pt.y;
        }
        if self.offset {
            let det = s_ee * s_1 - s_e * s_e;
            if det.abs() <= 1e-300 || !det.is_finite() {
                return None;
            }
            let a = (s_ey * s_1 - s_e * s_y) / det;
            let b = (s_ee * s_y - s_e * s_ey) / det;
            Some(vec![a, q, b])
        } else {
            if s_ee <= 0.0 {
                return None;
            }
            Some(vec![s_ey / s_ee, q])
        }
    }
}

/// Solves `M x = v` for a small symmetric positive definite `M` by Gaussian
/// elimination with partial pivoting.
fn solve(m: &[f64], v: &[f64]) -> Option<Vec<f64>> {
    let k = v.len();
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row = m[i * k..(i + 1) * k].to_vec();
            row.push(v[i]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let x: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn invert(m: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; k * k];
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        let col = solve(m, &e)?;
        for i in 0..k {
            inv[i * k + j] = col[i];
        }
    }
    Some(inv)
}

fn validate_points(points: &[FitPoint]) -> Result<Vec<FitPoint>> {
    let mut pts = points.to_vec();
    if pts.iter().any(|p| !p.m.is_finite() || !p.y.is_finite() || p.weight.is_nan() || p.weight <= 0.0 || !p.weight.is_finite()) {
        return Err(Error::Fit("points must be finite with positive weights".into()));
    }
    pts.sort_by(|a, b| a.m.total_cmp(&b.m).then(a.y.total_cmp(&b.y)));
    let mut distinct = 1;
    for w in pts.windows(2) {
        if w[1].m != w[0].m {
            distinct += 1;
        }
    }
    if distinct < 4 {
        return Err(Error::Fit(format!("need at least 4 distinct depths, got {distinct}")));
    }
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    if hi - lo <= 1e-12 * scale.max(1.0) {
        return Err(Error::DegenerateData(format!("all values equal {lo}; p is not identifiable")));
    }
    Ok(pts)
}

// The prescribed start: B₀ from the deepest points, A₀ from the shallowest,
// p₀ from the two-point log ratio with a fallback.
fn initial_guess(pts: &[FitPoint], offset: bool) -> Vec<f64> {
    let n = pts.len();
    let tail = (n / 4).max(1);
    let b0 = if offset {
        pts[n - tail..].iter().map(|p| p.y).sum::<f64>() / tail as f64
    } else {
        0.0
    };
    let first = pts[0];
    let a0 = first.y - b0;
    let mid = pts[n / 2];
    let ratio = (mid.y - b0) / a0;
    let mut q0 = if ratio > 0.0 && ratio.is_finite() && mid.m > first.m {
        ratio.ln() / (mid.m - first.m)
    } else {
        (0.99f64).ln()
    };
    if !q0.is_finite() || q0 >= 0.0 {
        q0 = -1e-4;
    }
    let mut theta = vec![a0, q0];
    if offset {
        theta.push(b0);
    }
    theta
}

/// Weighted least-squares fit of an exponential decay.
///
/// Needs at least 4 distinct depths. Flat data raise
/// [`Error::DegenerateData`].
pub fn fit_exponential(points: &[FitPoint]) -> Result<DecayFit> {
    fit_exponential_with(points, &FitOptions::default())
}

pub fn fit_exponential_with(points: &[FitPoint], opts: &FitOptions) -> Result<DecayFit> {
    let pts = validate_points(points)?;
    let prob = Problem {
        pts: &pts,
        offset: opts.model == FitModel::WithOffset,
    };
    let k = prob.k();

    // Candidate starts: the prescribed guess plus a scan over p with the
    // linear parameters solved exactly.
    let mut starts = vec![initial_guess(&pts, prob.offset)];
    let m_max = pts.last().expect("non-empty").m.max(1.0);
    for i in 1..=60 {
        // Decay lengths spread from ~0.1 to ~100 × the deepest depth.
        let length = m_max * 10f64.powf(-1.0 + 3.0 * i as f64 / 60.0);
        if let Some(t) = prob.linear_for(-1.0 / length) {
            starts.push(t);
        }
    }
    let best_start = starts
        .into_iter()
        .filter(|t| t.iter().all(|v| v.is_finite()))
        .min_by(|a, b| prob.chi2(a).total_cmp(&prob.chi2(b)))
        .ok_or_else(|| Error::Fit("no finite starting point".into()))?;

    let (theta, iterations) = levenberg_marquardt(&prob, best_start, opts.max_iterations)?;
    let chi2 = prob.chi2(&theta);
    let dof = (pts.len() as f64 - k as f64).max(1.0);
    let (jtj, _) = prob.normal_equations(&theta);
    let cov = invert(&jtj, k).ok_or_else(|| Error::Fit("singular covariance".into()))?;
    let scale = if opts.absolute_weights { 1.0 } else { chi2 / dof };
    let var = |i: usize| (cov[i * k + i] * scale).max(0.0);
    let p = theta[1].exp();
    Ok(DecayFit {
        a: theta[0],
        p,
        b: if prob.offset { theta[2] } else { 0.0 },
        sigma_p: p * var(1).sqrt(),
        sigma_a: var(0).sqrt(),
        sigma_b: if prob.offset { var(2).sqrt() } else { 0.0 },
        residual_norm: chi2.sqrt(),
        reduced_chi2: chi2 / dof,
        iterations,
        flat: false,
    })
}

fn levenberg_marquardt(prob: &Problem<'_>, mut theta: Vec<f64>, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let k = prob.k();
    theta[1] = theta[1].min(0.0);
    let mut chi2 = prob.chi2(&theta);
    let mut mu = 1e-3;
    for it in 1..=max_iter {
        let (jtj, jtr) = prob.normal_equations(&theta);
        let diag_scale: Vec<f64> = (0..k).map(|i| jtj[i * k + i].max(1e-300)).collect();
        // Gradient scaled by the curvature, so the test is unit-free.
        let grad_norm = (0..k)
            .map(|i| jtr[i] * jtr[i] / diag_scale[i])
            .sum::<f64>()
            .sqrt();
        if grad_norm < 1e-12 * (1.0 + chi2.sqrt()) {
            return Ok((theta, it));
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for i in 0..k {
                damped[i * k + i] += mu * diag_scale[i];
            }
            let Some(step) = solve(&damped, &jtr) else {
                mu *= 10.0;
                continue;
            };
            let mut cand: Vec<f64> = theta.iter().zip(&step).map(|(t, s)| t + s).collect();
            cand[1] = cand[1].min(0.0);
            let c2 = prob.chi2(&cand);
            if c2.is_finite() && c2 <= chi2 {
                let step_small = theta
                    .iter()
                    .zip(&cand)
                    .all(|(a, b)| (a - b).abs() <= 1e-15 * (1.0 + a.abs()));
                let chi_small = chi2 - c2 <= 1e-15 * chi2.max(1e-300);
                theta = cand;
                chi2 = c2;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                if step_small || (chi_small && it > 2) {
                    return Ok((theta, it));
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            // No downhill step at any damping: we are at a minimum to machine precision.
            return Ok((theta, it));
        }
    }
    Err(Error::Fit(format!(
        "no convergence after {max_iter} iterations (last p = {:.6}, A = {:.3e}); \
         the depths may not resolve the decay",
        theta[1].exp(),
        theta[0]
    )))
}

/// Like [`fit_exponential_with`], but flat data yield `p = 1` with `flat` set
/// instead of an error. Used where a noiseless run is a legitimate outcome.
pub fn fit_decay_allow_flat(points: &[FitPoint], opts: &FitOptions) -> Result<DecayFit> {
    match fit_exponential_with(points, opts) {
        Err(Error::DegenerateData(_)) => {
            let mean = points.iter().map(|p| p.y).sum::<f64>() / points.len() as f64;
            let (a, b) = match opts.model {
                FitModel::WithOffset => (0.0, mean),
                FitModel::NoOffset => (mean, 0.0),
            };
            Ok(DecayFit {
                a,
                p: 1.0,
                b,
                sigma_p: 0.0,
                sigma_a: 0.0,
                sigma_b: 0.0,
                residual_norm: 0.0,
                reduced_chi2: 0.0,
                iterations: 0,
                flat: true,
            })
        }
        other => other,
    }
}

/// Fits several independent decays in parallel, preserving input order.
pub fn fit_many(sets: &[Vec<FitPoint>], opts: &FitOptions) -> Vec<Result<DecayFit>> {
    sets.par_iter().map(|s| fit_decay_allow_flat(s, opts)).collect()
}

/// Average error per Clifford, `(d−1)(1−p)/d`.
pub fn error_per_clifford(p: f64, d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) * (1.0 - p) / d
}

/// Standard deviation of [`error_per_clifford`] given `σ_p`.
pub fn error_per_clifford_sigma(sigma_p: f64, d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) / d * sigma_p
}

/// Interleaved gate error `(d−1)/d·(1 − p_i/p)`. Not clipped at zero.
pub fn interleaved_gate_error(p_i: f64, p: f64, d: usize) -> Result<f64> {
    if p == 0.0 {
        return Err(Error::Fit("reference decay p = 0".into()));
    }
    let d = d as f64;
    Ok((d - 1.0) / d * (1.0 - p_i / p))
}

/// First-order propagation of `σ_p` and `σ_pi` into the interleaved gate error.
pub fn interleaved_gate_error_sigma(p_i: f64, sigma_pi: f64, p: f64, sigma_p: f64, d: usize) -> f64 {
    let d = d as f64;
    (d - 1.0) / d * ((sigma_pi / p).powi(2) + (p_i * sigma_p / (p * p)).powi(2)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    pub p_l: f64,
    pub sigma: f64,
    /// Per-Clifford leakage growth, `1 − p_l`.
    pub rate: f64,
    /// Set when the leakage population never left zero.
    pub no_leakage: bool,
    pub fit: Option<DecayFit>,
}

/// Fits the out-of-subspace population `L(m) = A·p_l^m + B`.
pub fn fit_leakage(points: &[FitPoint]) -> Result<LeakageFit> {
    match fit_exponential(points) {
        Ok(fit) => Ok(LeakageFit {
            p_l: fit.p,
            sigma: fit.sigma_p,
            rate: 1.0 - fit.p,
            no_leakage: false,
            fit: Some(fit),
        }),
        Err(Error::DegenerateData(_)) if points.iter().all(|p| p.y.abs() < 1e-12) => Ok(LeakageFit {
            p_l: 1.0,
            sigma: 0.0,
            rate: 0.0,
            no_leakage: true,
            fit: None,
        }),
        Err(e) => Err(e),
    }
}

/// Mean of the Pauli-channel decays over all `9ⁿ` Paulis, the identity
/// counting as 1. Each stored representative stands for itself and its
/// conjugate.
pub fn process_fidelity(channel_decays: &BTreeMap<PauliLabel, f64>, n: usize) -> Result<f64> {
    let mut missing = Vec::new();
    let mut total = 1.0;
    for q in PauliLabel::all(n).filter(|q| !q.is_identity()) {
        let rep = q.conjugate_representative();
        match channel_decays.get(&rep) {
            Some(v) => total += v,
            None => {
                if q == rep {
                    missing.push(rep.to_string());
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing));
    }
    Ok(total / 9f64.powi(n as i32))
}

/// `(d·F_p + 1)/(d + 1)`.
pub fn average_gate_fidelity(process_fidelity: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * process_fidelity + 1.0) / (d + 1.0)
}

/// Bootstrap standard deviation of `p`: per depth, resample the per-sequence
/// values with replacement, refit the means, and take the spread of `p`.
pub fn bootstrap_sigma_p(
    depths: &[f64],
    samples: &[Vec<f64>],
    opts: &FitOptions,
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    if depths.len() != samples.len() || samples.iter().any(Vec::is_empty) {
        return Err(Error::Fit("bootstrap needs samples at every depth".into()));
    }
    let ps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let pts: Vec<FitPoint> = depths
                .iter()
                .zip(samples)
                .map(|(&m, s)| {
                    let draw: Vec<f64> = (0..s.len()).map(|_| s[rng.random_range(0..s.len())]).collect();
                    let (mean, se) = mean_stderr(&draw);
                    FitPoint::from_stderr(m, mean, se)
                })
                .collect();
            fit_decay_allow_flat(&pts, opts).ok().map(|f| f.p)
        })
        .collect();
    if ps.len() < 2 {
        return Err(Error::Fit("bootstrap produced too few fits".into()));
    }
    Ok(std_dev(&ps))
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Sample mean and standard error of the mean (0 for a single sample).
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    (mean, std_dev(v) / n.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn synth(f: impl Fn(f64) -> f64, depths: &[f64]) -> Vec<FitPoint> {
        depths.iter().map(|&m| FitPoint::new(m, f(m), 1.0)).collect()
    }

    #[test]
    fn exact_synthetic_recovery() {
        let pts = synth(|m| 0.5 * 0.97f64.powf(m) + 0.33, &[2.0, 10.0, 50.0, 200.0, 800.0]);
        let fit = fit_exponential(&pts).unwrap();
        assert!((fit.a - 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.p - 0.97).abs() < 1e-6);
        assert!((fit.b - 0.33).abs() < 1e-6);
    }

    #[test]
    fn flat_data_is_degenerate() {
        let pts = synth(|_| 0.34, &[1.0, 2.0, 4.0, 8.0, 16.0]);
        assert!(matches!(fit_exponential(&pts), Err(Error::DegenerateData(_))));
        let flat = fit_decay_allow_flat(&pts, &FitOptions::default()).unwrap();
        assert!(flat.flat && flat.p == 1.0);
    }

    #[test]
    fn too_few_depths() {
        let pts = synth(|m| 0.9f64.powf(m), &[1.0, 2.0, 3.0]);
        assert!(matches!(fit_exponential(&pts), Err(Error::Fit(_))));
    }

    #[test]
    fn no_offset_model() {
        let pts = synth(|m| 0.8 * 0.95f64.powf(m), &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        let opts = FitOptions { model: FitModel::NoOffset, ..Default::default() };
        let fit = fit_exponential_with(&pts, &opts).unwrap();
        assert!((fit.p - 0.95).abs() < 1e-9 && (fit.a - 0.8).abs() < 1e-9 && fit.b == 0.0);
    }

    #[test]
    fn monte_carlo_calibration() {
        let depths = [2.0, 10.0, 50.0, 200.0, 800.0];
        let (a, p, b, sigma) = (0.5, 0.97f64, 0.33, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (mut bias, mut covered) = (0.0, 0);
        let trials = 100;
        for _ in 0..trials {
            let pts: Vec<FitPoint> = depths
                .iter()
                .map(|&m| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    FitPoint::from_stderr(m, a * p.powf(m) + b + sigma * e, sigma)
                })
                .collect();
            let fit = fit_exponential(&pts).unwrap();
            bias += (fit.p - p) / trials as f64;
            if (fit.p - p).abs() <= fit.sigma_p {
                covered += 1;
            }
        }
        assert!(bias.abs() < 1e-3, "bias {bias}");
        // ~68% nominal; binomial spread over 100 trials is about ±5.
        assert!((55..=82).contains(&covered), "coverage {covered}");
    }

    #[test]
    fn invariances() {
        let pts = synth(|m| 0.6 * 0.9f64.powf(m) + 0.2 + 0.001 * (m * 1.7).sin(), &[1.0, 3.0, 7.0, 15.0, 31.0, 63.0]);
        let base = fit_exponential(&pts).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let scaled: Vec<FitPoint> = pts.iter().map(|p| FitPoint { weight: p.weight * 37.0, ..*p }).collect();
        for other in [fit_exponential(&rev).unwrap(), fit_exponential(&scaled).unwrap()] {
            assert!((other.p - base.p).abs() < 1e-10);
            assert!((other.a - base.a).abs() < 1e-9);
            assert!((other.b - base.b).abs() < 1e-9);
        }
        let rel = FitOptions { absolute_weights: false, ..Default::default() };
        let s1 = fit_exponential_with(&pts, &rel).unwrap().sigma_p;
        let s2 = fit_exponential_with(&scaled, &rel).unwrap().sigma_p;
        assert!((s1 - s2).abs() < 1e-9 * s1.max(1e-12));
    }

    #[test]
    fn error_formulas() {
        assert_eq!(error_per_clifford(1.0, 3), 0.0);
        assert!((error_per_clifford(0.97, 3) - 0.02).abs() < 1e-15);
        let p: f64 = 1.0 - 1.5 * 2.38e-3;
        assert!((p - 0.99643).abs() < 1e-12);
        assert!((error_per_clifford(p, 3) - 2.38e-3).abs() < 1e-15);
        assert_eq!(interleaved_gate_error(0.9, 0.9, 3).unwrap(), 0.0);
        let r = interleaved_gate_error(0.98, 0.99, 3).unwrap();
        assert!((r - 0.006734).abs() < 5e-7);
        assert!(interleaved_gate_error(0.5, 0.0, 3).is_err());
        assert!(interleaved_gate_error(0.995, 0.99, 3).unwrap() < 0.0);
    }

    #[test]
    fn leakage_fits() {
        let pts = synth(|m| 0.4 * (1.0 - 0.995f64.powf(m)), &[1.0, 10.0, 50.0, 100.0, 300.0, 1000.0]);
        let lf = fit_leakage(&pts).unwrap();
        assert!((lf.p_l - 0.995).abs() < 1e-4);
        let fit = lf.fit.unwrap();
        assert!((fit.a + 0.4).abs() < 1e-4 && (fit.b - 0.4).abs() < 1e-4);

        let zero = synth(|_| 0.0, &[1.0, 2.0, 4.0, 8.0]);
        let lf = fit_leakage(&zero).unwrap();
        assert!(lf.no_leakage && lf.rate == 0.0);
    }

    #[test]
    fn fidelity_formulas() {
        assert_eq!(average_gate_fidelity(1.0, 9), 1.0);
        assert!((average_gate_fidelity(0.82, 9) - 0.838).abs() < 1e-12);
        assert!((average_gate_fidelity(0.0, 9) - 0.1).abs() < 1e-15);

        let mut all_one = BTreeMap::new();
        for q in PauliLabel::all(2).filter(|q| !q.is_identity()) {
            all_one.insert(q.conjugate_representative(), 1.0);
        }
        assert_eq!(all_one.len(), 40);
        assert_eq!(process_fidelity(&all_one, 2).unwrap(), 1.0);

        let lambda: f64 = 0.05;
        let mut depol = BTreeMap::new();
        for q in PauliLabel::all(2).filter(|q| !q.is_identity()) {
            depol.insert(q.conjugate_representative(), (1.0 - lambda).powi(q.weight() as i32));
        }
        let expect = ((1.0 + 8.0 * (1.0 - lambda)) / 9.0).powi(2);
        assert!((process_fidelity(&depol, 2).unwrap() - expect).abs() < 1e-14);

        let first = all_one.keys().next().unwrap().clone();
        let mut missing = all_one.clone();
        missing.remove(&first);
        match process_fidelity(&missing, 2) {
            Err(Error::MissingChannels(v)) => assert_eq!(v, vec![first.to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bootstrap_spread_is_positive() {
        let depths = [1.0, 4.0, 16.0, 64.0, 256.0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Vec<f64>> = depths
            .iter()
            .map(|&m| {
                (0..20)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        0.6 * 0.98f64.powf(m) + 0.33 + 0.02 * e
                    })
                    .collect()
            })
            .collect();
        let s = bootstrap_sigma_p(&depths, &samples, &FitOptions::default(), 200, 1).unwrap();
        assert!(s > 0.0 && s < 0.05);
    }
}
