//! Qutrit Pauli group algebra and brute-force Clifford group tables.
//!
//! A [`PauliLabel`] is the symbolic form `ω^s ⊗ᵢ X^{aᵢ} Z^{bᵢ}`. Products and
//! adjoints are tracked exactly on the labels; the reordering phase between
//! `Z` and `X` is measured once from the explicit matrices rather than
//! assumed.
//!
//! [`CliffordTable`] holds a finite unitary group modulo global phase, built
//! by breadth-first closure over its generators. The single-qutrit Clifford
//! group (216 elements, generated by `H` and `S`) and the 24-element qubit
//! Clifford group embedded in a pair of qutrit levels both use it.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{canonical_phase, global_phase_equal, omega, omega_pow, QuditMatrix, C64};
use crate::compiler::NativeSequence;
use crate::error::{Error, Result};

const QUTRIT: usize = 3;

/// Order of the single-qudit Clifford group modulo phase, `d³(d²−1)`.
pub const fn clifford_group_order(d: usize) -> usize {
    d * d * d * (d * d - 1)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Shift operator `X|j⟩ = |j−1 mod 3⟩`.
pub fn pauli_x() -> QuditMatrix {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    QuditMatrix::from_rows([[o, l, o], [o, o, l], [l, o, o]])
}

/// Clock operator `Z = diag(1, ω, ω²)`.
pub fn pauli_z() -> QuditMatrix {
    QuditMatrix::from_diagonal(&[c(1.0, 0.0), omega(), omega() * omega()])
        .expect("3 is a valid dimension")
}

/// Qutrit Hadamard (discrete Fourier transform).
pub fn hadamard() -> QuditMatrix {
    let w = omega();
    let l = c(1.0, 0.0);
    QuditMatrix::from_rows([[l, l, l], [l, w, w * w], [l, w * w, w]])
        .scale(c(1.0 / 3f64.sqrt(), 0.0))
}

/// Qutrit phase gate `diag(1, 1, ω)`.
pub fn phase_s() -> QuditMatrix {
    QuditMatrix::from_diagonal(&[c(1.0, 0.0), c(1.0, 0.0), omega()])
        .expect("3 is a valid dimension")
}

/// Exponent `k` in `Z·X = ω^k · X·Z`, measured from the explicit matrices.
pub fn commutation_exponent() -> u8 {
    static K: OnceLock<u8> = OnceLock::new();
    *K.get_or_init(|| {
        let zx = &pauli_z() * &pauli_x();
        let xz = &pauli_x() * &pauli_z();
        (0..3u8)
            .find(|&k| {
                zx.max_abs_diff(&xz.scale(omega_pow(k as i64)))
                    .expect("same dim")
                    < 1e-12
            })
            .expect("Z and X commute up to a power of omega")
    })
}

/// Symbolic `n`-qutrit Pauli operator `ω^phase ⊗ᵢ X^{aᵢ} Z^{bᵢ}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliLabel {
    /// `(a, b)` per qutrit, qutrit 0 first.
    pub exponents: Vec<(u8, u8)>,
    pub phase: u8,
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase != 0 {
            write!(f, "w{}*", self.phase)?;
        }
        let parts: Vec<String> = self
            .exponents
            .iter()
            .map(|&(a, b)| match (a, b) {
                (0, 0) => "I".to_string(),
                (a, 0) => format!("X{a}"),
                (0, b) => format!("Z{b}"),
                (a, b) => format!("X{a}Z{b}"),
            })
            .collect();
        write!(f, "{}", parts.join("."))
    }
}

impl PauliLabel {
    pub fn new(exponents: Vec<(u8, u8)>, phase: u8) -> Self {
        Self {
            exponents: exponents.into_iter().map(|(a, b)| (a % 3, b % 3)).collect(),
            phase: phase % 3,
        }
    }

    pub fn identity(n_qutrits: usize) -> Self {
        Self::new(vec![(0, 0); n_qutrits], 0)
    }

    pub fn single(a: u8, b: u8) -> Self {
        Self::new(vec![(a, b)], 0)
    }

    pub fn x() -> Self {
        Self::single(1, 0)
    }

    pub fn z() -> Self {
        Self::single(0, 1)
    }

    /// `Y = Z·X`, carried with the phase that product acquires in `X^a Z^b` order.
    pub fn y() -> Self {
        Self::z().mul(&Self::x())
    }

    /// `V = Z²·X`.
    pub fn v() -> Self {
        Self::z().mul(&Self::z()).mul(&Self::x())
    }

    pub fn n_qutrits(&self) -> usize {
        self.exponents.len()
    }

    /// Number of qutrits on which the operator is not the identity.
    pub fn weight(&self) -> usize {
        self.exponents.iter().filter(|&&e| e != (0, 0)).count()
    }

    /// Identity up to phase.
    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self::new(self.exponents.clone(), phase)
    }

    pub fn tensor(&self, rhs: &Self) -> Self {
        let mut e = self.exponents.clone();
        e.extend_from_slice(&rhs.exponents);
        Self::new(e, self.phase + rhs.phase)
    }

    /// Exact label of the matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n_qutrits(), rhs.n_qutrits(), "qutrit count mismatch");
        let k = commutation_exponent() as u32;
        let mut phase = self.phase as u32 + rhs.phase as u32;
        let exponents = self
            .exponents
            .iter()
            .zip(&rhs.exponents)
            .map(|(&(a, b), &(a2, b2))| {
                // X^a Z^b X^a2 Z^b2 = ω^{k·b·a2} X^{a+a2} Z^{b+b2}
                phase += k * b as u32 * a2 as u32;
                ((a + a2) % 3, (b + b2) % 3)
            })
            .collect();
        Self {
            exponents,
            phase: (phase % 3) as u8,
        }
    }

    /// Exact label of `P†`.
    pub fn adjoint(&self) -> Self {
        let k = commutation_exponent() as u32;
        // (X^a Z^b)† = Z^{-b} X^{-a} = ω^{k·a·b} X^{-a} Z^{-b}
        let mut phase = (3 - self.phase as u32) % 3;
        let exponents = self
            .exponents
            .iter()
            .map(|&(a, b)| {
                phase += k * a as u32 * b as u32;
                ((3 - a) % 3, (3 - b) % 3)
            })
            .collect();
        Self {
            exponents,
            phase: (phase % 3) as u8,
        }
    }

    /// Exponent pattern of `P†`, ignoring phase.
    pub fn conjugate_pattern(&self) -> Vec<(u8, u8)> {
        self.exponents
            .iter()
            .map(|&(a, b)| ((3 - a) % 3, (3 - b) % 3))
            .collect()
    }

    /// The member of `{P, P†}` with the smaller exponent pattern, phase 0.
    /// Both share an eigenbasis and a decay, so one stands for the pair.
    pub fn conjugate_representative(&self) -> Self {
        let conj = self.conjugate_pattern();
        Self::new(conj.min(self.exponents.clone()), 0)
    }

    /// Iterates over all `9ⁿ` labels with phase 0, in lexicographic exponent order.
    pub fn all(n_qutrits: usize) -> impl Iterator<Item = Self> {
        (0..9usize.pow(n_qutrits as u32)).map(move |mut i| {
            let mut e = vec![(0, 0); n_qutrits];
            for slot in e.iter_mut().rev() {
                let s = i % 9;
                i /= 9;
                *slot = ((s / 3) as u8, (s % 3) as u8);
            }
            Self::new(e, 0)
        })
    }
}

/// Dense matrix `ω^phase ⊗ᵢ X^{aᵢ} Z^{bᵢ}`.
pub fn pauli_matrix(p: &PauliLabel) -> QuditMatrix {
    let x = pauli_x();
    let z = pauli_z();
    let single = |a: u8, b: u8| {
        let mut m = QuditMatrix::identity(QUTRIT).expect("valid dim");
        for _ in 0..a {
            m = &m * &x;
        }
        for _ in 0..b {
            m = &m * &z;
        }
        m
    };
    let mut out: Option<QuditMatrix> = None;
    for &(a, b) in &p.exponents {
        let f = single(a, b);
        out = Some(match out {
            None => f,
            Some(acc) => acc.tensor(&f),
        });
    }
    out.expect("at least one qutrit")
        .scale(omega_pow(p.phase as i64))
}

pub fn pauli_mul(p: &PauliLabel, q: &PauliLabel) -> PauliLabel {
    p.mul(q)
}

pub fn pauli_adjoint(p: &PauliLabel) -> PauliLabel {
    p.adjoint()
}

/// Uniform Pauli label on `n` qutrits with phase 0.
pub fn random_pauli<R: Rng + ?Sized>(n_qutrits: usize, rng: &mut R) -> PauliLabel {
    PauliLabel::new(
        (0..n_qutrits)
            .map(|_| (rng.random_range(0..3u8), rng.random_range(0..3u8)))
            .collect(),
        0,
    )
}

/// Solves `g·P·g† = phase·Q` by scanning all phase-free Pauli labels of the
/// same size. The phase is always a power of ω for a Clifford `g`.
pub fn conjugate_pauli(g: &QuditMatrix, p: &PauliLabel) -> Result<(C64, PauliLabel)> {
    let n = p.n_qutrits();
    if g.dim() != 3usize.pow(n as u32) {
        return Err(Error::DimensionMismatch {
            left: g.dim(),
            right: 3usize.pow(n as u32),
        });
    }
    let target = &(g * &pauli_matrix(p)) * &g.adjoint();
    let k = target.dominant_index();
    for q in PauliLabel::all(n) {
        let qm = pauli_matrix(&q);
        let qk = qm.entries()[k];
        if qk.norm() < 0.5 {
            continue;
        }
        let phase = target.entries()[k] / qk;
        if target.max_abs_diff(&qm.scale(phase))? <= 1e-8 {
            let power = omega_power_of(phase)
                .ok_or_else(|| Error::NonOmegaPhase(format!("{phase}")))?;
            return Ok((omega_pow(power as i64), q));
        }
    }
    Err(Error::NotClifford(p.to_string()))
}

/// Same as [`conjugate_pauli`] but folds the ω-power phase into the label.
pub fn conjugate_pauli_label(g: &QuditMatrix, p: &PauliLabel) -> Result<PauliLabel> {
    let (phase, q) = conjugate_pauli(g, p)?;
    let power = omega_power_of(phase).expect("conjugate_pauli returns powers of omega");
    Ok(q.with_phase(q.phase + power))
}

fn omega_power_of(z: C64) -> Option<u8> {
    (0..3u8).find(|&k| (z - omega_pow(k as i64)).norm() < 1e-8)
}

/// One element of a [`CliffordTable`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliffordElement {
    pub index: usize,
    /// Canonical-phase representative.
    pub matrix: QuditMatrix,
    /// Native pulse program, filled in by the compiler.
    pub pulse_sequence: Option<NativeSequence>,
}

type HashKey = Vec<(i64, i64)>;

fn hash_key(canonical: &QuditMatrix) -> HashKey {
    canonical
        .entries()
        .iter()
        .map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64))
        .collect()
}

/// When two matrices represent the same group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    /// Equal up to a global phase.
    GlobalPhase,
    /// Block-diagonal on a level pair plus spectator; equal up to an
    /// independent phase on the 2×2 block. Used for embedded qubit groups,
    /// where the block phase against an unpopulated spectator is irrelevant.
    BlockPhase(LevelPair),
}

impl Equivalence {
    /// Representative of the class of `u`.
    pub fn canonical(&self, u: &QuditMatrix) -> Result<QuditMatrix> {
        match *self {
            Equivalence::GlobalPhase => canonical_phase(u),
            Equivalence::BlockPhase(pair) => {
                if u.dim() != QUTRIT {
                    return Err(Error::DimensionMismatch { left: u.dim(), right: QUTRIT });
                }
                let (a, b) = pair.levels();
                let sp = pair.spectator();
                for k in 0..QUTRIT {
                    if k != sp && (u[(sp, k)].norm() > 1e-8 || u[(k, sp)].norm() > 1e-8) {
                        return Err(Error::NotInGroup);
                    }
                }
                let block = [u[(a, a)], u[(a, b)], u[(b, a)], u[(b, b)]];
                let max = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if max == 0.0 {
                    return Err(Error::ZeroMatrix);
                }
                let lead = block
                    .iter()
                    .find(|z| z.norm() >= max - 1e-12)
                    .expect("max attained");
                let ph = lead.conj() / lead.norm();
                let mut m = QuditMatrix::identity(QUTRIT)?;
                m[(a, a)] = block[0] * ph;
                m[(a, b)] = block[1] * ph;
                m[(b, a)] = block[2] * ph;
                m[(b, b)] = block[3] * ph;
                Ok(m)
            }
        }
    }
}

/// A finite group of unitaries modulo global phase, with precomputed inverse
/// and composition tables. `compose(i, j)` is the index of `Mᵢ·Mⱼ`, i.e. `j`
/// applied first.
#[derive(Clone, Debug)]
pub struct CliffordTable {
    elements: Vec<CliffordElement>,
    identity: usize,
    inverse: Vec<usize>,
    compose: Vec<usize>,
    lookup: HashMap<HashKey, Vec<usize>>,
    equivalence: Equivalence,
}

impl CliffordTable {
    /// Breadth-first closure of `generators` under left multiplication,
    /// deduplicated up to global phase. Errors unless exactly `expected_order`
    /// elements are found.
    pub fn generate(generators: &[QuditMatrix], expected_order: usize) -> Result<Self> {
        Self::generate_with(generators, expected_order, Equivalence::GlobalPhase)
    }

    /// [`CliffordTable::generate`] under an explicit element equivalence.
    pub fn generate_with(
        generators: &[QuditMatrix],
        expected_order: usize,
        equivalence: Equivalence,
    ) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::Plan("no generators".into()))?;
        let dim = first.dim();
        let mut matrices: Vec<QuditMatrix> = Vec::new();
        let mut lookup: HashMap<HashKey, Vec<usize>> = HashMap::new();
        let mut queue = VecDeque::new();

        let id = QuditMatrix::identity(dim)?;
        insert_unique(&mut matrices, &mut lookup, equivalence.canonical(&id)?);
        queue.push_back(0);
        while let Some(i) = queue.pop_front() {
            for g in generators {
                let prod = equivalence.canonical(&g.try_mul(&matrices[i])?)?;
                if let Some(j) = insert_unique(&mut matrices, &mut lookup, prod) {
                    queue.push_back(j);
                    if matrices.len() > expected_order {
                        return Err(Error::GroupOrder {
                            expected: expected_order,
                            got: matrices.len(),
                        });
                    }
                }
            }
        }
        if matrices.len() != expected_order {
            return Err(Error::GroupOrder {
                expected: expected_order,
                got: matrices.len(),
            });
        }
        Self::from_matrices_with(matrices, equivalence)
    }

    /// Builds the lookup, composition and inverse tables for an already
    /// enumerated group. Fails if the set is not closed.
    pub fn from_matrices(matrices: Vec<QuditMatrix>) -> Result<Self> {
        Self::from_matrices_with(matrices, Equivalence::GlobalPhase)
    }

    pub fn from_matrices_with(matrices: Vec<QuditMatrix>, equivalence: Equivalence) -> Result<Self> {
        let order = matrices.len();
        let mut lookup: HashMap<HashKey, Vec<usize>> = HashMap::new();
        let mut elements = Vec::with_capacity(order);
        for (index, m) in matrices.into_iter().enumerate() {
            let m = equivalence.canonical(&m)?;
            lookup.entry(hash_key(&m)).or_default().push(index);
            elements.push(CliffordElement {
                index,
                matrix: m,
                pulse_sequence: None,
            });
        }
        let mut table = Self {
            elements,
            identity: 0,
            inverse: vec![usize::MAX; order],
            compose: vec![usize::MAX; order * order],
            lookup,
            equivalence,
        };
        let dim = table.elements[0].matrix.dim();
        table.identity = table.lookup(&QuditMatrix::identity(dim)?)?;
        for i in 0..order {
            for j in 0..order {
                let prod = &table.elements[i].matrix * &table.elements[j].matrix;
                let k = table.lookup(&prod)?;
                table.compose[i * order + j] = k;
                if k == table.identity {
                    table.inverse[i] = j;
                }
            }
        }
        if table.inverse.contains(&usize::MAX) {
            return Err(Error::NotInGroup);
        }
        Ok(table)
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn equivalence(&self) -> Equivalence {
        self.equivalence
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CliffordElement {
        &self.elements[i]
    }

    pub fn matrix(&self, i: usize) -> &QuditMatrix {
        &self.elements[i].matrix
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i]
    }

    pub fn compose(&self, i: usize, j: usize) -> usize {
        self.compose[i * self.order() + j]
    }

    /// Index of the element equal to `u` up to global phase (tolerance `1e-8`).
    pub fn lookup(&self, u: &QuditMatrix) -> Result<usize> {
        let cu = self.equivalence.canonical(u)?;
        if let Some(candidates) = self.lookup.get(&hash_key(&cu)) {
            for &i in candidates {
                if global_phase_equal(&cu, &self.elements[i].matrix, 1e-8)? {
                    return Ok(i);
                }
            }
        }
        // Rounding can split equal matrices across hash buckets; fall back to a scan.
        for e in &self.elements {
            if e.matrix.dim() == cu.dim() && global_phase_equal(&cu, &e.matrix, 1e-8)? {
                return Ok(e.index);
            }
        }
        Err(Error::NotInGroup)
    }

    /// Uniformly random element index.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order())
    }

    pub fn set_pulse_sequence(&mut self, i: usize, seq: NativeSequence) {
        self.elements[i].pulse_sequence = Some(seq);
    }

    pub fn pulse_sequence(&self, i: usize) -> Option<&NativeSequence> {
        self.elements[i].pulse_sequence.as_ref()
    }
}

fn insert_unique(
    matrices: &mut Vec<QuditMatrix>,
    lookup: &mut HashMap<HashKey, Vec<usize>>,
    m: QuditMatrix,
) -> Option<usize> {
    let key = hash_key(&m);
    if let Some(bucket) = lookup.get(&key) {
        for &i in bucket {
            if global_phase_equal(&m, &matrices[i], 1e-8).expect("same dim") {
                return None;
            }
        }
    }
    let idx = matrices.len();
    lookup.entry(key).or_default().push(idx);
    matrices.push(m);
    Some(idx)
}

/// The 216-element single-qutrit Clifford group generated by `H` and `S`.
pub fn generate_clifford_table() -> Result<CliffordTable> {
    CliffordTable::generate(&[hadamard(), phase_s()], clifford_group_order(QUTRIT))
}

pub fn clifford_lookup(u: &QuditMatrix, table: &CliffordTable) -> Result<usize> {
    table.lookup(u)
}

pub fn random_clifford<R: Rng + ?Sized>(table: &CliffordTable, rng: &mut R) -> usize {
    table.random(rng)
}

/// Pair of qutrit levels spanning a two-level subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LevelPair {
    #[serde(rename = "01")]
    L01,
    #[serde(rename = "12")]
    L12,
    #[serde(rename = "02")]
    L02,
}

impl LevelPair {
    pub const ALL: [LevelPair; 3] = [LevelPair::L01, LevelPair::L12, LevelPair::L02];

    pub fn levels(self) -> (usize, usize) {
        match self {
            LevelPair::L01 => (0, 1),
            LevelPair::L12 => (1, 2),
            LevelPair::L02 => (0, 2),
        }
    }

    /// The level outside the pair.
    pub fn spectator(self) -> usize {
        let (a, b) = self.levels();
        3 - a - b
    }

    pub fn label(self) -> &'static str {
        match self {
            LevelPair::L01 => "01",
            LevelPair::L12 => "12",
            LevelPair::L02 => "02",
        }
    }

    /// Places a 2×2 block on this pair of levels, identity on the spectator.
    pub fn embed(self, block: [[C64; 2]; 2]) -> QuditMatrix {
        let (a, b) = self.levels();
        let mut m = QuditMatrix::identity(QUTRIT).expect("valid dim");
        m[(a, a)] = block[0][0];
        m[(a, b)] = block[0][1];
        m[(b, a)] = block[1][0];
        m[(b, b)] = block[1][1];
        m
    }
}

/// The 24-element single-qubit Clifford group acting on a pair of qutrit levels.
pub fn embedded_qubit_clifford_table(pair: LevelPair) -> Result<CliffordTable> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = pair.embed([[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]);
    let p = pair.embed([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]]);
    CliffordTable::generate_with(&[h, p], 24, Equivalence::BlockPhase(pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matmul_oracle(a: &QuditMatrix, b: &QuditMatrix) -> QuditMatrix {
        let n = a.dim();
        let mut out = QuditMatrix::zeros(n).unwrap();
        for r in 0..n {
            for col in 0..n {
                out[(r, col)] = (0..n).map(|k| a[(r, k)] * b[(k, col)]).sum();
            }
        }
        out
    }

    #[test]
    fn pauli_matrix_examples() {
        let x = pauli_matrix(&PauliLabel::x());
        assert_eq!(x.column(0), vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let z = pauli_matrix(&PauliLabel::z());
        let expect = [c(1.0, 0.0), omega(), omega() * omega()];
        for (i, e) in expect.iter().enumerate() {
            assert!((z[(i, i)] - e).norm() < 1e-15);
        }
        assert!(z.is_diagonal(0.0));
        let y = pauli_matrix(&PauliLabel::y());
        let oracle = matmul_oracle(&pauli_z(), &pauli_x());
        assert!(y.max_abs_diff(&oracle).unwrap() < 1e-14);
        let v = pauli_matrix(&PauliLabel::v());
        let oracle = matmul_oracle(&matmul_oracle(&pauli_z(), &pauli_z()), &pauli_x());
        assert!(v.max_abs_diff(&oracle).unwrap() < 1e-14);
    }

    #[test]
    fn commutation_phase_matches_matrix_oracle() {
        let zx = matmul_oracle(&pauli_z(), &pauli_x());
        let xz = matmul_oracle(&pauli_x(), &pauli_z());
        // Measured independently here: which ω^k makes Z·X = ω^k X·Z.
        let k = (0..3)
            .find(|&k| zx.max_abs_diff(&xz.scale(omega_pow(k))).unwrap() < 1e-12)
            .unwrap();
        assert_eq!(commutation_exponent() as i64, k);

        let a = PauliLabel::z().mul(&PauliLabel::x());
        let b = PauliLabel::x().mul(&PauliLabel::z());
        assert_eq!(a.exponents, b.exponents);
        assert_eq!((a.phase as i64 - b.phase as i64).rem_euclid(3), k);
    }

    #[test]
    fn pauli_mul_examples() {
        for p in PauliLabel::all(1) {
            assert_eq!(PauliLabel::identity(1).mul(&p), p);
            let p2 = p.mul(&p);
            let cube = p.mul(&p2);
            assert_eq!(cube, PauliLabel::identity(1), "{p}^3");
        }
    }

    #[test]
    fn pauli_adjoint_examples() {
        let z = PauliLabel::z();
        assert_eq!(z.adjoint(), z.mul(&z));
        assert_eq!(PauliLabel::identity(2).adjoint(), PauliLabel::identity(2));
        let xz = PauliLabel::x().tensor(&PauliLabel::z());
        let adj = pauli_matrix(&xz.adjoint());
        assert!(adj.max_abs_diff(&pauli_matrix(&xz).adjoint()).unwrap() < 1e-14);
        for p in PauliLabel::all(1) {
            for s in 0..3 {
                let p = p.with_phase(s);
                let m = pauli_matrix(&p.adjoint());
                assert!(m.max_abs_diff(&pauli_matrix(&p).adjoint()).unwrap() < 1e-14);
                // P† = P² up to phase
                assert_eq!(p.adjoint().exponents, p.mul(&p).exponents);
            }
        }
    }

    #[test]
    fn clifford_table_examples() {
        let t = generate_clifford_table().unwrap();
        assert_eq!(t.order(), 216);
        assert_eq!(clifford_group_order(3), 216);
        t.lookup(&hadamard()).unwrap();
        t.lookup(&phase_s()).unwrap();

        let x_pi_01 = LevelPair::L01.embed([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]]);
        let x_pi_12 = LevelPair::L12.embed([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]]);
        // The bare pulses carry a −i block phase against the spectator level;
        // one free frame update on the other drive removes it.
        assert!(t.lookup(&x_pi_01).is_err());
        assert!(t.lookup(&x_pi_12).is_err());
        let fix_01 = QuditMatrix::from_diagonal(&[c(1.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        let fix_12 = QuditMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0)]).unwrap();
        assert!(t.lookup(&(&fix_01 * &x_pi_01)).is_ok());
        assert!(t.lookup(&(&fix_12 * &x_pi_12)).is_ok());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x_half = LevelPair::L01.embed([[c(s, 0.0), c(0.0, -s)], [c(0.0, -s), c(s, 0.0)]]);
        assert!(matches!(t.lookup(&x_half), Err(Error::NotInGroup)));
        let y_pi = LevelPair::L01.embed([[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
        assert!(t.lookup(&y_pi).is_err());
    }

    #[test]
    fn lookup_examples() {
        let t = generate_clifford_table().unwrap();
        assert_eq!(t.lookup(&QuditMatrix::identity(3).unwrap()).unwrap(), t.identity_index());
        let h = t.lookup(&hadamard()).unwrap();
        let s = t.lookup(&phase_s()).unwrap();
        let hs = matmul_oracle(&hadamard(), &phase_s());
        assert_eq!(t.lookup(&hs).unwrap(), t.compose(h, s));
        assert_eq!(t.lookup(&hadamard().scale(omega())).unwrap(), h);
    }

    #[test]
    fn table_invariants() {
        let t = generate_clifford_table().unwrap();
        for i in 0..t.order() {
            assert!(t.matrix(i).is_unitary(1e-10));
            assert_eq!(t.compose(i, t.inverse(i)), t.identity_index());
            assert_eq!(t.compose(t.inverse(i), i), t.identity_index());
            for j in 0..i {
                assert!(!global_phase_equal(t.matrix(i), t.matrix(j), 1e-8).unwrap());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let (i, j) = (t.random(&mut rng), t.random(&mut rng));
            let prod = matmul_oracle(t.matrix(i), t.matrix(j));
            assert!(global_phase_equal(&prod, t.matrix(t.compose(i, j)), 1e-9).unwrap());
        }
    }

    #[test]
    fn every_clifford_normalizes_the_paulis() {
        let t = generate_clifford_table().unwrap();
        for e in t.elements() {
            for p in PauliLabel::all(1) {
                let (phase, q) = conjugate_pauli(&e.matrix, &p).unwrap();
                let lhs = &(&e.matrix * &pauli_matrix(&p)) * &e.matrix.adjoint();
                assert!(lhs.max_abs_diff(&pauli_matrix(&q).scale(phase)).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn conjugate_pauli_examples() {
        let id = QuditMatrix::identity(3).unwrap();
        for p in PauliLabel::all(1) {
            let (phase, q) = conjugate_pauli(&id, &p).unwrap();
            assert!((phase - c(1.0, 0.0)).norm() < 1e-12);
            assert_eq!(q, p);
        }
        let (phase, q) = conjugate_pauli(&phase_s(), &PauliLabel::z()).unwrap();
        assert!((phase - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(q, PauliLabel::z());

        // H X H† against an explicit scan of all 27 phased labels.
        let target = matmul_oracle(&matmul_oracle(&hadamard(), &pauli_x()), &hadamard().adjoint());
        let mut hits = Vec::new();
        for p in PauliLabel::all(1) {
            for s in 0..3 {
                let cand = p.with_phase(s);
                if target.max_abs_diff(&pauli_matrix(&cand)).unwrap() < 1e-9 {
                    hits.push(cand);
                }
            }
        }
        assert_eq!(hits.len(), 1);
        let got = conjugate_pauli_label(&hadamard(), &PauliLabel::x()).unwrap();
        assert_eq!(got, hits[0]);

        let sqrt_x = LevelPair::L01.embed([
            [c(0.5f64.sqrt(), 0.0), c(0.0, -(0.5f64.sqrt()))],
            [c(0.0, -(0.5f64.sqrt())), c(0.5f64.sqrt(), 0.0)],
        ]);
        assert!(matches!(
            conjugate_pauli(&sqrt_x, &PauliLabel::z()),
            Err(Error::NotClifford(_))
        ));
    }

    #[test]
    fn random_draws_are_uniform_and_reproducible() {
        let t = generate_clifford_table().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 216 * 1000;
        let mut hist = vec![0u32; 216];
        for _ in 0..draws {
            hist[random_clifford(&t, &mut rng)] += 1;
        }
        let mean = 1000.0;
        let sigma = (draws as f64 * (1.0 / 216.0) * (215.0 / 216.0)).sqrt();
        assert!(hist.iter().all(|&h| (h as f64 - mean).abs() < 5.0 * sigma));

        let a: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| t.random(&mut r)).collect()
        };
        let b: Vec<usize> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| t.random(&mut r)).collect()
        };
        assert_eq!(a, b);

        let n = 90_000;
        let mut marg = [[0u32; 9]; 2];
        for _ in 0..n {
            let p = random_pauli(2, &mut rng);
            assert_eq!(p.phase, 0);
            for q in 0..2 {
                let (a, b) = p.exponents[q];
                marg[q][(a * 3 + b) as usize] += 1;
            }
        }
        let sigma = (n as f64 / 9.0 * (8.0 / 9.0)).sqrt();
        for q in marg {
            assert!(q.iter().all(|&h| (h as f64 - n as f64 / 9.0).abs() < 5.0 * sigma));
        }
    }

    #[test]
    fn embedded_qubit_groups_have_24_elements() {
        for pair in LevelPair::ALL {
            let t = embedded_qubit_clifford_table(pair).unwrap();
            assert_eq!(t.order(), 24);
            let spec = pair.spectator();
            for e in t.elements() {
                // Spectator level untouched up to the canonical global phase.
                let m = &e.matrix;
                for k in 0..3 {
                    if k != spec {
                        assert!(m[(spec, k)].norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn wrong_expected_order_is_reported() {
        let err = CliffordTable::generate(&[hadamard(), phase_s()], 100).unwrap_err();
        assert!(matches!(err, Error::GroupOrder { expected: 100, .. }));
    }
}
