//! Dense complex linear algebra on qutrit registers.
//!
//! Everything here works on matrices of dimension `3^n`. Registers in this
//! crate never exceed two qutrits, so all operators are stored densely in
//! row-major order.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Primitive cube root of unity, `exp(2πi/3)`.
pub fn omega() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// `omega()^k` for any integer `k`.
pub fn omega_pow(k: i64) -> C64 {
    match k.rem_euclid(3) {
        0 => C64::new(1.0, 0.0),
        1 => omega(),
        _ => omega().conj(),
    }
}

/// Number of qutrits `n` with `3^n == dim`, if `dim` is a positive power of three.
pub fn qutrit_count(dim: usize) -> Option<usize> {
    if dim < 3 {
        return None;
    }
    let mut d = dim;
    let mut n = 0;
    while d.is_multiple_of(3) {
        d /= 3;
        n += 1;
    }
    (d == 1).then_some(n)
}

/// Dense square complex matrix acting on `n ≥ 1` qutrits.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct QuditMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for QuditMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QuditMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for QuditMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QuditMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl QuditMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if qutrit_count(dim).is_none() {
            return Err(Error::NotPowerOfThree(dim));
        }
        if data.len() != dim * dim {
            return Err(Error::EntryCount {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from rows. Panics on ragged or non-power-of-three input,
    /// so it is meant for literal constant matrices.
    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(N, data).expect("literal matrix must have power-of-three dimension")
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![C64::new(0.0, 0.0); dim * dim])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        Ok(m)
    }

    /// `|v⟩⟨v|` for a state vector `v`.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let dim = v.len();
        let mut m = Self::zeros(dim)?;
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qutrits(&self) -> usize {
        qutrit_count(self.dim).expect("dimension validated at construction")
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(r, c)] = self[(c, r)].conj();
            }
        }
        out
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        let n = self.dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let out = &mut data[r * n..(r + 1) * n];
                for (o, &b) in out.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Kronecker product `self ⊗ rhs`; `self` acts on the leading qutrits.
    pub fn tensor(&self, rhs: &Self) -> Self {
        let (da, db) = (self.dim, rhs.dim);
        let dim = da * db;
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for ar in 0..da {
            for ac in 0..da {
                let a = self[(ar, ac)];
                for br in 0..db {
                    for bc in 0..db {
                        data[(ar * db + br) * dim + ac * db + bc] = a * rhs[(br, bc)];
                    }
                }
            }
        }
        Self { dim, data }
    }

    /// Embeds a single-qutrit operator on qutrit `target` of an `n`-qutrit register.
    /// Qutrit 0 is the most significant digit of the basis index.
    pub fn embed(op: &Self, target: usize, n_qutrits: usize) -> Result<Self> {
        if op.dim != 3 || target >= n_qutrits {
            return Err(Error::Circuit(format!(
                "cannot embed a {}-dim operator on qutrit {target} of {n_qutrits}",
                op.dim
            )));
        }
        let id = Self::identity(3)?;
        let mut out: Option<Self> = None;
        for q in 0..n_qutrits {
            let factor = if q == target { op } else { &id };
            out = Some(match out {
                None => factor.clone(),
                Some(acc) => acc.tensor(factor),
            });
        }
        Ok(out.expect("n_qutrits >= 1"))
    }

    /// Embeds a `k`-qutrit operator on the listed qutrits (in the operator's own
    /// qutrit order) of an `n`-qutrit register.
    pub fn embed_on(op: &Self, qutrits: &[usize], n_qutrits: usize) -> Result<Self> {
        let k = qutrits.len();
        if op.dim != 3usize.pow(k as u32)
            || qutrits.iter().any(|&q| q >= n_qutrits)
            || (1..k).any(|i| qutrits[..i].contains(&qutrits[i]))
        {
            return Err(Error::Circuit(format!(
                "cannot embed a {}-dim operator on qutrits {qutrits:?} of {n_qutrits}",
                op.dim
            )));
        }
        if k == 1 {
            return Self::embed(op, qutrits[0], n_qutrits);
        }
        let dim = 3usize.pow(n_qutrits as u32);
        let digit = |index: usize, q: usize| (index / 3usize.pow((n_qutrits - 1 - q) as u32)) % 3;
        let sub = |index: usize| qutrits.iter().fold(0, |acc, &q| acc * 3 + digit(index, q));
        let rest = |index: usize| {
            (0..n_qutrits)
                .filter(|q| !qutrits.contains(q))
                .fold(0, |acc, q| acc * 3 + digit(index, q))
        };
        let mut out = Self::zeros(dim)?;
        for r in 0..dim {
            for c in 0..dim {
                if rest(r) == rest(c) {
                    out[(r, c)] = op[(sub(r), sub(c))];
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        self.check_dim(rhs)?;
        Ok(self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Max-abs deviation of `U·U†` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.try_mul(&self.adjoint()).expect("same dimension");
        let id = Self::identity(self.dim).expect("valid dimension");
        p.max_abs_diff(&id).expect("same dimension")
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self[(r, c)].norm() <= tol))
    }

    /// Row-major index of the largest-magnitude entry. Entries within `1e-12`
    /// of the maximum count as ties and the earliest one wins.
    pub fn dominant_index(&self) -> usize {
        let max = self.max_abs();
        self.data
            .iter()
            .position(|z| z.norm() >= max - 1e-12)
            .unwrap_or(0)
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        Ok(())
    }
}

impl Mul for &QuditMatrix {
    type Output = QuditMatrix;

    /// Panics on dimension mismatch; use [`QuditMatrix::try_mul`] for fallible code.
    fn mul(self, rhs: &QuditMatrix) -> QuditMatrix {
        self.try_mul(rhs).expect("matrix dimensions must agree")
    }
}

/// True iff `U = φ·V` for some unit `φ`, within `tol` in max-abs norm.
/// The candidate phase is read off the largest-magnitude entry of `V`.
pub fn global_phase_equal(u: &QuditMatrix, v: &QuditMatrix, tol: f64) -> Result<bool> {
    u.check_dim(v)?;
    let k = v.dominant_index();
    let (a, b) = (u.data[k], v.data[k]);
    if b.norm() == 0.0 {
        return Ok(u.max_abs() <= tol);
    }
    if a.norm() == 0.0 {
        return Ok(false);
    }
    let ratio = a / b;
    let phase = ratio / ratio.norm();
    let dev = u
        .data
        .iter()
        .zip(&v.data)
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max);
    Ok(dev <= tol)
}

/// Rescales `U` by a unit phase so that its dominant entry is real and positive.
pub fn canonical_phase(u: &QuditMatrix) -> Result<QuditMatrix> {
    if u.max_abs() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let z = u.data[u.dominant_index()];
    Ok(u.scale(z.conj() / z.norm()))
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix(QuditMatrix);

impl DensityMatrix {
    pub fn from_matrix(m: QuditMatrix) -> Result<Self> {
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let herm = m.max_abs_diff(&m.adjoint())?;
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
        }
        if let Some(ev) = min_eigenvalue(&m) {
            if ev < -1e-9 {
                return Err(Error::InvalidState(format!("negative eigenvalue {ev:.3e}")));
            }
        }
        Ok(Self(m))
    }

    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        let mut m = QuditMatrix::zeros(dim)?;
        if index >= dim {
            return Err(Error::InvalidState(format!("basis index {index} >= {dim}")));
        }
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self(m))
    }

    pub fn pure(state: &[C64]) -> Result<Self> {
        let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let v: Vec<C64> = state.iter().map(|z| z / norm).collect();
        Ok(Self(QuditMatrix::outer(&v)?))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self(
            QuditMatrix::identity(dim)?.scale(C64::new(1.0 / dim as f64, 0.0)),
        ))
    }

    pub fn matrix(&self) -> &QuditMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Diagonal of ρ in the computational basis (raw, not clipped).
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    /// `Tr[O ρ]`.
    pub fn expectation(&self, op: &QuditMatrix) -> Result<C64> {
        Ok(op.try_mul(&self.0)?.trace())
    }

    /// Hermiticity deviation, in max-abs norm.
    pub fn hermiticity_error(&self) -> f64 {
        self.0.max_abs_diff(&self.0.adjoint()).unwrap_or(f64::INFINITY)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0).unwrap_or(f64::NAN)
    }

    /// `U ρ U†`.
    pub fn apply_unitary(&self, u: &QuditMatrix) -> Result<Self> {
        if u.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: u.dim,
            });
        }
        Ok(self.conjugate_by(u))
    }

    /// `Σ K ρ K†`, after checking that `Σ K†K = 1` within `1e-10`.
    pub fn apply_kraus(&self, kraus: &[QuditMatrix]) -> Result<Self> {
        check_trace_preserving(kraus, self.dim())?;
        Ok(self.apply_kraus_unchecked(kraus))
    }

    pub(crate) fn conjugate_by(&self, u: &QuditMatrix) -> Self {
        Self(&(u * &self.0) * &u.adjoint())
    }

    pub(crate) fn apply_kraus_unchecked(&self, kraus: &[QuditMatrix]) -> Self {
        let mut acc = QuditMatrix::zeros(self.dim()).expect("valid dim");
        for k in kraus {
            let term = &(k * &self.0) * &k.adjoint();
            for (a, b) in acc.data.iter_mut().zip(term.data) {
                *a += b;
            }
        }
        Self(acc)
    }
}

/// Errors unless `Σ K†K = 1` within `1e-10`.
pub fn check_trace_preserving(kraus: &[QuditMatrix], dim: usize) -> Result<()> {
    let mut acc = QuditMatrix::zeros(dim)?;
    for k in kraus {
        acc = acc.try_add(&(&k.adjoint() * k))?;
    }
    let dev = acc.max_abs_diff(&QuditMatrix::identity(dim)?)?;
    if dev > 1e-10 {
        return Err(Error::NotTracePreserving(dev));
    }
    Ok(())
}

// Smallest eigenvalue of a Hermitian matrix via cyclic complex Jacobi sweeps.
fn min_eigenvalue(m: &QuditMatrix) -> Option<f64> {
    let n = m.dim;
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Phase-rotate so the pivot is real, then apply a real Jacobi rotation.
                let phase = apq / apq.norm();
                let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                let (c, s) = (theta.cos(), theta.sin());
                let mut g = QuditMatrix::identity(n).ok()?;
                g[(p, p)] = C64::new(c, 0.0);
                g[(q, q)] = C64::new(c, 0.0);
                g[(p, q)] = phase * s;
                g[(q, p)] = -phase.conj() * s;
                a = &(&g.adjoint() * &a) * &g;
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).reduce(f64::min)
}

/// Histogram of measurement outcomes on an `n`-qutrit register. Outcome keys are
/// ternary strings with qutrit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementCounts {
    pub n_qutrits: usize,
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl MeasurementCounts {
    pub fn from_outcome_counts(n_qutrits: usize, by_index: &[u64]) -> Self {
        let counts = by_index
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (outcome_label(i, n_qutrits), c))
            .collect();
        Self {
            n_qutrits,
            counts,
            shots: by_index.iter().sum(),
        }
    }

    pub fn get(&self, outcome: &str) -> u64 {
        self.counts.get(outcome).copied().unwrap_or(0)
    }

    /// Empirical outcome frequencies indexed by the integer value of the outcome.
    pub fn frequencies(&self) -> Vec<f64> {
        let dim = 3usize.pow(self.n_qutrits as u32);
        let mut f = vec![0.0; dim];
        for (label, &c) in &self.counts {
            f[outcome_index(label)] = c as f64 / self.shots as f64;
        }
        f
    }

    /// Marginal outcome frequencies of a single qutrit.
    pub fn marginal(&self, qutrit: usize) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (label, &c) in &self.counts {
            let digit = label.as_bytes()[qutrit] - b'0';
            m[digit as usize] += c as f64 / self.shots as f64;
        }
        m
    }
}

pub fn outcome_label(index: usize, n_qutrits: usize) -> String {
    let mut digits = vec![b'0'; n_qutrits];
    let mut i = index;
    for d in digits.iter_mut().rev() {
        *d = b'0' + (i % 3) as u8;
        i /= 3;
    }
    String::from_utf8(digits).expect("ascii digits")
}

pub fn outcome_index(label: &str) -> usize {
    label
        .bytes()
        .fold(0, |acc, b| acc * 3 + (b - b'0') as usize)
}

/// Outcome probabilities from the diagonal of ρ. Small negative entries from
/// accumulated roundoff (down to `-1e-9`) are clipped before renormalizing.
pub fn outcome_probabilities(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let mut p = rho.populations();
    for (index, v) in p.iter_mut().enumerate() {
        if *v < -1e-9 {
            return Err(Error::NegativeProbability { index, value: *v });
        }
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("zero total probability".into()));
    }
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Multinomial draw of `shots` outcomes from `probs`, via sequential binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, q)
            .expect("probability clamped to [0,1]")
            .sample(rng);
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

/// Samples `shots` computational-basis measurements of ρ with a seeded RNG.
pub fn sample_counts(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<MeasurementCounts> {
    if shots == 0 {
        return Err(Error::NoShots);
    }
    let probs = outcome_probabilities(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_index = sample_multinomial(&probs, shots, &mut rng);
    Ok(MeasurementCounts::from_outcome_counts(
        qutrit_count(rho.dim()).expect("valid dim"),
        &by_index,
    ))
}

/// `A ⊗ B`.
pub fn tensor(a: &QuditMatrix, b: &QuditMatrix) -> QuditMatrix {
    a.tensor(b)
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<QuditMatrix> {
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    // Modified Gram-Schmidt; the column phases it produces are Haar-consistent.
    for j in 0..dim {
        for k in 0..j {
            let proj: C64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            for i in 0..dim {
                let v = cols[k][i];
                cols[j][i] -= proj * v;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    let mut m = QuditMatrix::zeros(dim)?;
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            m[(r, c)] = z;
        }
    }
    Ok(m)
}

/// Random full-rank density matrix `G G† / Tr[G G†]` with Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    let mut g = QuditMatrix::zeros(dim)?;
    for z in g.data.iter_mut() {
        *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    let mut rho = gg.scale(C64::new(1.0 / tr, 0.0));
    // Symmetrize away the last bits of roundoff.
    let adj = rho.adjoint();
    for (a, b) in rho.data.iter_mut().zip(adj.data) {
        *a = (*a + b) * 0.5;
    }
    DensityMatrix::from_matrix(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn hadamard() -> QuditMatrix {
        let w = omega();
        let s = 1.0 / 3f64.sqrt();
        QuditMatrix::from_rows([
            [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)],
            [c(1.0, 0.0), w, w * w],
            [c(1.0, 0.0), w * w, w],
        ])
        .scale(c(s, 0.0))
    }

    fn shift_x() -> QuditMatrix {
        let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
        QuditMatrix::from_rows([[o, l, o], [o, o, l], [l, o, o]])
    }

    fn clock_z() -> QuditMatrix {
        QuditMatrix::from_diagonal(&[c(1.0, 0.0), omega(), omega() * omega()]).unwrap()
    }

    #[test]
    fn rejects_non_power_of_three() {
        assert!(matches!(
            QuditMatrix::zeros(4),
            Err(Error::NotPowerOfThree(4))
        ));
        assert!(QuditMatrix::zeros(1).is_err());
        assert!(QuditMatrix::zeros(27).is_ok());
    }

    #[test]
    fn phase_equality_examples() {
        let h = hadamard();
        assert!(global_phase_equal(&h, &h.scale(omega()), 1e-9).unwrap());
        let s = QuditMatrix::from_diagonal(&[c(1.0, 0.0), c(1.0, 0.0), omega()]).unwrap();
        assert!(!global_phase_equal(&h, &s, 1e-9).unwrap());
        let nine = QuditMatrix::identity(9).unwrap();
        assert!(matches!(
            global_phase_equal(&h, &nine, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn canonical_phase_examples() {
        let m = QuditMatrix::identity(3).unwrap().scale(omega() * omega());
        let id = QuditMatrix::identity(3).unwrap();
        assert!(canonical_phase(&m).unwrap().max_abs_diff(&id).unwrap() < 1e-15);

        // Every entry of H has modulus 1/√3; the tie-break picks (0,0).
        let ch = canonical_phase(&hadamard().scale(omega())).unwrap();
        assert!((ch[(0, 0)] - c(1.0 / 3f64.sqrt(), 0.0)).norm() < 1e-15);

        assert!(matches!(
            canonical_phase(&QuditMatrix::zeros(3).unwrap()),
            Err(Error::ZeroMatrix)
        ));
    }

    #[test]
    fn canonical_phase_is_idempotent_and_phase_blind() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = haar_unitary(3, &mut rng).unwrap();
            let cu = canonical_phase(&u).unwrap();
            assert!(canonical_phase(&cu).unwrap().max_abs_diff(&cu).unwrap() < 1e-14);
            for k in 0..12 {
                let phi = C64::from_polar(1.0, 2.0 * PI * k as f64 / 12.0);
                let cv = canonical_phase(&u.scale(phi)).unwrap();
                assert!(cv.max_abs_diff(&cu).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_unitary_examples() {
        let zero = DensityMatrix::basis_state(3, 0).unwrap();
        let out = zero.apply_unitary(&shift_x()).unwrap();
        assert_eq!(out, DensityMatrix::basis_state(3, 2).unwrap());

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(3, &mut rng).unwrap();
        let out = mixed.apply_unitary(&u).unwrap();
        assert!(out.matrix().max_abs_diff(mixed.matrix()).unwrap() < 1e-14);

        let plus = zero.apply_unitary(&hadamard()).unwrap();
        for z in plus.matrix().entries() {
            assert!((z - c(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_kraus_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density_matrix(3, &mut rng).unwrap();
        let same = rho.apply_kraus(&[QuditMatrix::identity(3).unwrap()]).unwrap();
        assert_eq!(same, rho);

        // Sequential amplitude damping with γ1 = γ2 = 1 moves |2⟩ to |1⟩ in one step.
        let o = c(0.0, 0.0);
        let l = c(1.0, 0.0);
        let k0 = QuditMatrix::from_rows([[l, o, o], [o, o, o], [o, o, o]]);
        let k1 = QuditMatrix::from_rows([[o, l, o], [o, o, o], [o, o, o]]);
        let k2 = QuditMatrix::from_rows([[o, o, o], [o, o, l], [o, o, o]]);
        let two = DensityMatrix::basis_state(3, 2).unwrap();
        let out = two.apply_kraus(&[k0, k1, k2]).unwrap();
        assert_eq!(out, DensityMatrix::basis_state(3, 1).unwrap());

        let half = QuditMatrix::identity(3).unwrap().scale(c(0.5, 0.0));
        assert!(matches!(
            rho.apply_kraus(&[half]),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn sampling_examples() {
        let one = DensityMatrix::basis_state(3, 1).unwrap();
        let counts = sample_counts(&one, 100, 9).unwrap();
        assert_eq!(counts.counts.len(), 1);
        assert_eq!(counts.get("1"), 100);

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        let shots = 3_000_000;
        let counts = sample_counts(&mixed, shots, 2024).unwrap();
        let mean = shots as f64 / 3.0;
        let sigma = (shots as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for k in ["0", "1", "2"] {
            assert!((counts.get(k) as f64 - mean).abs() < 3.0 * sigma, "{k}");
        }
        assert_eq!(counts.counts.values().sum::<u64>(), shots);

        let again = sample_counts(&mixed, shots, 2024).unwrap();
        assert_eq!(counts, again);
        assert!(matches!(sample_counts(&mixed, 0, 1), Err(Error::NoShots)));
    }

    #[test]
    fn sampling_rejects_large_negative_populations() {
        let mut m = QuditMatrix::zeros(3).unwrap();
        m[(0, 0)] = c(1.0 + 1e-6, 0.0);
        m[(1, 1)] = c(-1e-6, 0.0);
        // Bypass validation to emulate a corrupted state.
        let rho = DensityMatrix(m);
        assert!(matches!(
            sample_counts(&rho, 10, 0),
            Err(Error::NegativeProbability { index: 1, .. })
        ));

        let mut m = QuditMatrix::zeros(3).unwrap();
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 1)] = c(-1e-12, 0.0);
        let counts = sample_counts(&DensityMatrix(m), 10, 0).unwrap();
        assert_eq!(counts.get("0"), 10);
    }

    #[test]
    fn embed_on_orders_qutrits() {
        let zx = tensor(&clock_z(), &shift_x());
        assert_eq!(QuditMatrix::embed_on(&zx, &[0, 1], 2).unwrap(), zx);
        let xz = tensor(&shift_x(), &clock_z());
        let swapped = QuditMatrix::embed_on(&zx, &[1, 0], 2).unwrap();
        assert!(swapped.max_abs_diff(&xz).unwrap() < 1e-15);
        let i3 = QuditMatrix::identity(3).unwrap();
        let on_middle = QuditMatrix::embed_on(&shift_x(), &[1], 3).unwrap();
        assert_eq!(on_middle, tensor(&tensor(&i3, &shift_x()), &i3));
        assert!(QuditMatrix::embed_on(&zx, &[0, 0], 2).is_err());
        assert!(QuditMatrix::embed_on(&zx, &[0, 2], 2).is_err());
    }

    #[test]
    fn tensor_examples() {
        let i3 = QuditMatrix::identity(3).unwrap();
        assert_eq!(tensor(&i3, &i3), QuditMatrix::identity(9).unwrap());

        let x1 = tensor(&shift_x(), &i3);
        let out = DensityMatrix::basis_state(9, 0)
            .unwrap()
            .apply_unitary(&x1)
            .unwrap();
        // |2,0⟩ has index 2·3 + 0.
        assert_eq!(out, DensityMatrix::basis_state(9, 6).unwrap());

        // (Z⊗Z)(X⊗I) against a naive triple-loop product.
        let zz = tensor(&clock_z(), &clock_z());
        let fast = &zz * &x1;
        let mut naive = QuditMatrix::zeros(9).unwrap();
        for r in 0..9 {
            for col in 0..9 {
                let mut acc = c(0.0, 0.0);
                for k in 0..9 {
                    acc += zz[(r, k)] * x1[(k, col)];
                }
                naive[(r, col)] = acc;
            }
        }
        assert!(fast.max_abs_diff(&naive).unwrap() < 1e-15);
    }

    #[test]
    fn min_eigenvalue_matches_known_spectrum() {
        let rho = DensityMatrix::pure(&[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        assert!(rho.min_eigenvalue().abs() < 1e-12);
        let d = QuditMatrix::from_diagonal(&[c(0.5, 0.0), c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(3, &mut rng).unwrap();
        let rot = &(&u * &d) * &u.adjoint();
        assert!((min_eigenvalue(&rot).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn outcome_labels_round_trip() {
        for n in 1..=2 {
            for i in 0..3usize.pow(n as u32) {
                assert_eq!(outcome_index(&outcome_label(i, n)), i);
            }
        }
        assert_eq!(outcome_label(5, 2), "12");
    }
}
