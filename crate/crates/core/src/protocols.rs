//! Benchmarking experiments: qubit-like, qutrit, interleaved and simultaneous
//! randomized benchmarking, and cycle benchmarking.
//!
//! Every experiment expands into independent `(circuit, seed)` jobs that run
//! as a parallel map over an [`Executor`]. Job seeds are a pure function of
//! the master seed and the job coordinates, and results are aggregated in a
//! fixed order, so runs are reproducible regardless of thread scheduling.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{omega, omega_pow, MeasurementCounts, QuditMatrix, C64};
use crate::compiler::{
    compile_clifford_table, compile_unitary, hadamard_fixed_sequence, pi_pulse_clifford,
    NativeSequence, Subspace,
};
use crate::error::{Error, Result};
use crate::estimator::{fit_decay_allow_flat, mean_stderr, DecayFit, FitModel, FitOptions, FitPoint};
use crate::groups::{
    conjugate_pauli, embedded_qubit_clifford_table, generate_clifford_table, hadamard,
    pauli_matrix, random_pauli, CliffordTable, LevelPair, PauliLabel,
};
use crate::noise::{BarrierKind, Circuit, Executor, NoiseModel, Simulator};

// ---------------------------------------------------------------------------
// Seeds and compiled tables

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for the job at `coords` under `master`.
pub fn job_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix(master), |acc, &c| splitmix(acc ^ splitmix(c)))
}

const STREAM: u64 = 1;
const SHOTS: u64 = 2;

/// The 216-element Clifford table with compiled pulse programs, built once.
pub fn compiled_clifford_table() -> Result<&'static CliffordTable> {
    static TABLE: OnceLock<std::result::Result<CliffordTable, String>> = OnceLock::new();
    TABLE
        .get_or_init(|| {
            generate_clifford_table()
                .and_then(|t| compile_clifford_table(&t))
                .map(|(t, _)| t)
                .map_err(|e| e.to_string())
        })
        .as_ref()
        .map_err(|e| Error::Decomposition(e.clone()))
}

/// The 24-element qubit Clifford table on `pair`, compiled, built once per pair.
pub fn compiled_embedded_table(pair: LevelPair) -> Result<&'static CliffordTable> {
    static TABLES: OnceLock<Vec<std::result::Result<CliffordTable, String>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        LevelPair::ALL
            .iter()
            .map(|&p| {
                let mut t = embedded_qubit_clifford_table(p).map_err(|e| e.to_string())?;
                for i in 0..t.order() {
                    let seq = compile_unitary(t.matrix(i)).map_err(|e| e.to_string())?;
                    t.set_pulse_sequence(i, seq);
                }
                Ok(t)
            })
            .collect()
    });
    let idx = LevelPair::ALL.iter().position(|&p| p == pair).expect("pair in ALL");
    tables[idx].as_ref().map_err(|e| Error::Decomposition(e.clone()))
}

fn program(table: &CliffordTable, i: usize) -> Result<&NativeSequence> {
    table
        .pulse_sequence(i)
        .ok_or_else(|| Error::Plan(format!("element {i} has no compiled program")))
}

// ---------------------------------------------------------------------------
// Decay records

/// One depth of a decay curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub depth: usize,
    pub value_re: f64,
    pub value_im: f64,
    /// Standard error of the real part over sequences.
    pub stderr: f64,
    /// Standard error of the imaginary part over sequences.
    pub stderr_im: f64,
    /// Number of sequences (or randomizations) averaged.
    pub n: usize,
    /// Per-sequence real values, kept for bootstrap resampling.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl DecayPoint {
    pub fn value(&self) -> C64 {
        C64::new(self.value_re, self.value_im)
    }

    fn from_values(depth: usize, values: &[C64]) -> Self {
        let re: Vec<f64> = values.iter().map(|v| v.re).collect();
        let im: Vec<f64> = values.iter().map(|v| v.im).collect();
        if values.is_empty() {
            return Self {
                depth,
                value_re: f64::NAN,
                value_im: f64::NAN,
                stderr: f64::NAN,
                stderr_im: f64::NAN,
                n: 0,
                samples: Vec::new(),
            };
        }
        let (value_re, stderr) = mean_stderr(&re);
        let (value_im, stderr_im) = mean_stderr(&im);
        Self { depth, value_re, value_im, stderr, stderr_im, n: values.len(), samples: re }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub channel_id: String,
    pub points: Vec<DecayPoint>,
}

impl DecayRecord {
    /// Fit points from the real parts; depths without valid samples are skipped.
    pub fn fit_points(&self) -> Vec<FitPoint> {
        self.points
            .iter()
            .filter(|p| p.n > 0 && p.value_re.is_finite())
            .map(|p| FitPoint::from_stderr(p.depth as f64, p.value_re, p.stderr))
            .collect()
    }

    pub fn fit(&self, model: FitModel) -> Result<DecayFit> {
        fit_decay_allow_flat(&self.fit_points(), &FitOptions { model, ..Default::default() })
    }
}

/// `(depth index, per-sequence values)` → record, in depth order.
fn record(channel_id: impl Into<String>, depths: &[usize], values: &[Vec<C64>]) -> DecayRecord {
    DecayRecord {
        channel_id: channel_id.into(),
        points: depths
            .iter()
            .zip(values)
            .map(|(&d, v)| DecayPoint::from_values(d, v))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Plans

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterleavedGate {
    Identity,
    /// A single `π` pulse on levels 0,1 with its frame correction.
    XPi01,
    /// A single `π` pulse on levels 1,2 with its frame correction.
    XPi12,
    /// The fixed four-pulse Hadamard construction.
    Hadamard,
    /// Any element of the Clifford table, with its compiled program.
    Index(usize),
}

impl InterleavedGate {
    pub fn label(&self) -> String {
        match self {
            InterleavedGate::Identity => "identity".into(),
            InterleavedGate::XPi01 => "x_pi_01".into(),
            InterleavedGate::XPi12 => "x_pi_12".into(),
            InterleavedGate::Hadamard => "hadamard".into(),
            InterleavedGate::Index(i) => format!("clifford_{i}"),
        }
    }

    /// Native program and table index of the gate.
    pub fn program(&self, table: &CliffordTable) -> Result<(NativeSequence, usize)> {
        let seq = match self {
            InterleavedGate::Identity => NativeSequence::default(),
            InterleavedGate::XPi01 => pi_pulse_clifford(Subspace::S01),
            InterleavedGate::XPi12 => pi_pulse_clifford(Subspace::S12),
            InterleavedGate::Hadamard => hadamard_fixed_sequence()?,
            InterleavedGate::Index(i) => {
                if *i >= table.order() {
                    return Err(Error::Plan(format!("interleaved index {i} out of range")));
                }
                program(table, *i)?.clone()
            }
        };
        let index = table.lookup(&seq.unitary())?;
        if matches!(self, InterleavedGate::Hadamard) && index != table.lookup(&hadamard())? {
            return Err(Error::Decomposition("Hadamard program does not match H".into()));
        }
        Ok((seq, index))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbVariant {
    QubitLike { subspace: LevelPair },
    Qutrit,
    Interleaved { gate: InterleavedGate },
    Simultaneous { qutrits: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbExperimentPlan {
    pub variant: RbVariant,
    pub depths: Vec<usize>,
    pub sequences_per_depth: usize,
    pub shots: u64,
    pub master_seed: u64,
}

fn validate_depths(depths: &[usize]) -> Result<()> {
    if depths.is_empty() {
        return Err(Error::Plan("no depths".into()));
    }
    if depths[0] < 1 {
        return Err(Error::Plan("depths must be at least 1".into()));
    }
    if depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Plan("depths must be strictly increasing".into()));
    }
    Ok(())
}

impl RbExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        validate_depths(&self.depths)?;
        if self.sequences_per_depth == 0 {
            return Err(Error::Plan("sequences_per_depth must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::NoShots);
        }
        match &self.variant {
            RbVariant::Simultaneous { qutrits } if *qutrits < 2 => {
                Err(Error::Plan("simultaneous RB needs at least 2 qutrits".into()))
            }
            RbVariant::Interleaved { gate: InterleavedGate::Index(i) } if *i >= 216 => {
                Err(Error::Plan(format!("interleaved index {i} out of range")))
            }
            _ => Ok(()),
        }
    }

    fn jobs(&self) -> Vec<(usize, usize)> {
        (0..self.depths.len())
            .flat_map(|d| (0..self.sequences_per_depth).map(move |s| (d, s)))
            .collect()
    }
}

/// `depth` uniform random elements and the element that inverts their
/// product. Elements act in list order.
pub fn gen_rb_sequence<R: rand::Rng + ?Sized>(
    depth: usize,
    table: &CliffordTable,
    rng: &mut R,
) -> (Vec<usize>, usize) {
    let mut total = table.identity_index();
    let seq: Vec<usize> = (0..depth)
        .map(|_| {
            let c = table.random(rng);
            total = table.compose(c, total);
            c
        })
        .collect();
    (seq, table.inverse(total))
}

fn push_element(circ: &mut Circuit, q: usize, table: &CliffordTable, i: usize) -> Result<()> {
    circ.push_sequence(q, program(table, i)?);
    circ.push_barrier(BarrierKind::Clifford, vec![q]);
    Ok(())
}

/// Single-qutrit RB circuit on qutrit `q` of an `n`-qutrit register.
pub fn rb_circuit(table: &CliffordTable, seq: &[usize], inversion: usize, q: usize, n: usize) -> Result<Circuit> {
    let mut circ = Circuit::new(n);
    for &c in seq {
        push_element(&mut circ, q, table, c)?;
    }
    push_element(&mut circ, q, table, inversion)?;
    Ok(circ)
}

/// Interleaved RB sequence: random elements alternating with `gate`, and the
/// inversion of the whole alternating product.
pub fn interleaved_rb_circuit(
    table: &CliffordTable,
    seq: &[usize],
    gate: &NativeSequence,
    gate_index: usize,
) -> Result<Circuit> {
    let mut circ = Circuit::new(1);
    let mut total = table.identity_index();
    for &c in seq {
        push_element(&mut circ, 0, table, c)?;
        circ.push_sequence(0, gate);
        circ.push_barrier(BarrierKind::Interleaved, vec![0]);
        total = table.compose(gate_index, table.compose(c, total));
    }
    push_element(&mut circ, 0, table, table.inverse(total))?;
    Ok(circ)
}

/// `⟨Z⟩ = P₀ + ωP₁ + ω²P₂` from single-qutrit frequencies.
pub fn z_expectation(freq: &[f64; 3]) -> C64 {
    let w = omega();
    C64::new(freq[0], 0.0) + w * freq[1] + w * w * freq[2]
}

fn run_jobs<T: Send>(
    jobs: &[(usize, usize)],
    f: impl Fn(usize, usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    jobs.par_iter().map(|&(d, s)| f(d, s)).collect()
}

fn group_by_depth<T: Clone>(n_depths: usize, jobs: &[(usize, usize)], vals: &[T]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new(); n_depths];
    for (&(d, _), v) in jobs.iter().zip(vals) {
        out[d].push(v.clone());
    }
    out
}

// ---------------------------------------------------------------------------
// Qutrit RB

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QutritRbResult {
    /// Complex `⟨Z⟩` per depth.
    pub z: DecayRecord,
    /// Populations of `|0⟩`, `|1⟩`, `|2⟩`.
    pub populations: Vec<DecayRecord>,
}

pub fn run_qutrit_rb(plan: &RbExperimentPlan, noise: &NoiseModel) -> Result<QutritRbResult> {
    run_qutrit_rb_with(plan, &Simulator::new(noise.clone())?)
}

pub fn run_qutrit_rb_with(plan: &RbExperimentPlan, exec: &dyn Executor) -> Result<QutritRbResult> {
    plan.validate()?;
    let table = compiled_clifford_table()?;
    let jobs = plan.jobs();
    let freqs = run_jobs(&jobs, |d, s| {
        let mut rng = ChaCha8Rng::seed_from_u64(job_seed(plan.master_seed, &[STREAM, d as u64, s as u64]));
        let (seq, inv) = gen_rb_sequence(plan.depths[d], table, &mut rng);
        let circ = rb_circuit(table, &seq, inv, 0, 1)?;
        let counts = exec.execute(&circ, plan.shots, job_seed(plan.master_seed, &[SHOTS, d as u64, s as u64]))?;
        Ok(counts.marginal(0))
    })?;
    let by_depth = group_by_depth(plan.depths.len(), &jobs, &freqs);
    let z: Vec<Vec<C64>> = by_depth.iter().map(|v| v.iter().map(z_expectation).collect()).collect();
    let populations = (0..3)
        .map(|k| {
            let vals: Vec<Vec<C64>> = by_depth
                .iter()
                .map(|v| v.iter().map(|f| C64::new(f[k], 0.0)).collect())
                .collect();
            record(format!("P{k}"), &plan.depths, &vals)
        })
        .collect();
    Ok(QutritRbResult { z: record("Z", &plan.depths, &z), populations })
}

// ---------------------------------------------------------------------------
// Qubit-like RB

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitLikeRbResult {
    pub subspace: LevelPair,
    /// `P(start)/(P(i)+P(j))` over the driven pair.
    pub survival: DecayRecord,
    /// Population of the spectator level.
    pub leakage: DecayRecord,
}

pub fn run_qubit_like_rb(plan: &RbExperimentPlan, noise: &NoiseModel) -> Result<QubitLikeRbResult> {
    run_qubit_like_rb_with(plan, &Simulator::new(noise.clone())?)
}

pub fn run_qubit_like_rb_with(plan: &RbExperimentPlan, exec: &dyn Executor) -> Result<QubitLikeRbResult> {
    plan.validate()?;
    let RbVariant::QubitLike { subspace: pair } = plan.variant else {
        return Err(Error::Plan("expected a qubit-like plan".into()));
    };
    let table = compiled_embedded_table(pair)?;
    let (start, other) = pair.levels();
    let spectator = pair.spectator();
    let jobs = plan.jobs();
    let freqs = run_jobs(&jobs, |d, s| {
        let mut rng = ChaCha8Rng::seed_from_u64(job_seed(plan.master_seed, &[STREAM, d as u64, s as u64]));
        let (seq, inv) = gen_rb_sequence(plan.depths[d], table, &mut rng);
        let mut circ = Circuit::new(1);
        if start == 1 {
            circ.push_sequence(0, &pi_pulse_clifford(Subspace::S01));
        }
        for &c in &seq {
            push_element(&mut circ, 0, table, c)?;
        }
        push_element(&mut circ, 0, table, inv)?;
        let counts = exec.execute(&circ, plan.shots, job_seed(plan.master_seed, &[SHOTS, d as u64, s as u64]))?;
        Ok(counts.marginal(0))
    })?;
    let by_depth = group_by_depth(plan.depths.len(), &jobs, &freqs);
    let survival: Vec<Vec<C64>> = by_depth
        .iter()
        .map(|v| {
            v.iter()
                .filter_map(|f| {
                    let denom = f[start] + f[other];
                    (denom > 0.0).then(|| C64::new(f[start] / denom, 0.0))
                })
                .collect()
        })
        .collect();
    let leakage: Vec<Vec<C64>> = by_depth
        .iter()
        .map(|v| v.iter().map(|f| C64::new(f[spectator], 0.0)).collect())
        .collect();
    Ok(QubitLikeRbResult {
        subspace: pair,
        survival: record(format!("survival_{}", pair.label()), &plan.depths, &survival),
        leakage: record(format!("leakage_{}", pair.label()), &plan.depths, &leakage),
    })
}

// ---------------------------------------------------------------------------
// Interleaved RB

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterleavedRbResult {
    pub gate: String,
    pub gate_index: usize,
    /// Re⟨Z⟩ of the plain sequences.
    pub reference: DecayRecord,
    /// Re⟨Z⟩ with the gate interleaved.
    pub interleaved: DecayRecord,
}

pub fn run_interleaved_rb(plan: &RbExperimentPlan, noise: &NoiseModel) -> Result<InterleavedRbResult> {
    run_interleaved_rb_with(plan, &Simulator::new(noise.clone())?)
}

pub fn run_interleaved_rb_with(plan: &RbExperimentPlan, exec: &dyn Executor) -> Result<InterleavedRbResult> {
    plan.validate()?;
    let RbVariant::Interleaved { gate } = &plan.variant else {
        return Err(Error::Plan("expected an interleaved plan".into()));
    };
    let table = compiled_clifford_table()?;
    let (gate_seq, gate_index) = gate.program(table)?;
    let jobs = plan.jobs();
    let pairs = run_jobs(&jobs, |d, s| {
        // Both runs draw the same random elements from the same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(job_seed(plan.master_seed, &[STREAM, d as u64, s as u64]));
        let (seq, inv) = gen_rb_sequence(plan.depths[d], table, &mut rng);
        let shot_seed = job_seed(plan.master_seed, &[SHOTS, d as u64, s as u64]);
        let reference = exec.execute(&rb_circuit(table, &seq, inv, 0, 1)?, plan.shots, shot_seed)?;
        let interleaved = exec.execute(
            &interleaved_rb_circuit(table, &seq, &gate_seq, gate_index)?,
            plan.shots,
            shot_seed,
        )?;
        Ok((z_expectation(&reference.marginal(0)), z_expectation(&interleaved.marginal(0))))
    })?;
    let by_depth = group_by_depth(plan.depths.len(), &jobs, &pairs);
    let reference: Vec<Vec<C64>> = by_depth.iter().map(|v| v.iter().map(|p| p.0).collect()).collect();
    let interleaved: Vec<Vec<C64>> = by_depth.iter().map(|v| v.iter().map(|p| p.1).collect()).collect();
    Ok(InterleavedRbResult {
        gate: gate.label(),
        gate_index,
        reference: record("reference", &plan.depths, &reference),
        interleaved: record(format!("interleaved_{}", gate.label()), &plan.depths, &interleaved),
    })
}

// ---------------------------------------------------------------------------
// Simultaneous RB

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousRbResult {
    /// Re⟨Z⟩ of qutrit `q` with only its own sequence running.
    pub isolated: Vec<DecayRecord>,
    /// Re⟨Z⟩ of qutrit `q` with all sequences running together.
    pub simultaneous: Vec<DecayRecord>,
}

pub fn run_simultaneous_rb(plan: &RbExperimentPlan, noise: &NoiseModel) -> Result<SimultaneousRbResult> {
    run_simultaneous_rb_with(plan, &Simulator::new(noise.clone())?)
}

/// Simultaneous circuit: per Clifford slot, qutrit 0's element first, then
/// qutrit 1's, and so on; each element closes with its own barrier.
pub fn simultaneous_rb_circuit(table: &CliffordTable, streams: &[(Vec<usize>, usize)]) -> Result<Circuit> {
    let n = streams.len();
    let mut circ = Circuit::new(n);
    let depth = streams.first().map_or(0, |s| s.0.len());
    for k in 0..=depth {
        for (q, (seq, inv)) in streams.iter().enumerate() {
            let c = if k < depth { seq[k] } else { *inv };
            push_element(&mut circ, q, table, c)?;
        }
    }
    Ok(circ)
}

pub fn run_simultaneous_rb_with(plan: &RbExperimentPlan, exec: &dyn Executor) -> Result<SimultaneousRbResult> {
    plan.validate()?;
    let RbVariant::Simultaneous { qutrits: n } = plan.variant else {
        return Err(Error::Plan("expected a simultaneous plan".into()));
    };
    let table = compiled_clifford_table()?;
    let jobs = plan.jobs();
    let results = run_jobs(&jobs, |d, s| {
        let streams: Vec<(Vec<usize>, usize)> = (0..n)
            .map(|q| {
                let seed = job_seed(plan.master_seed, &[STREAM, d as u64, s as u64, q as u64]);
                gen_rb_sequence(plan.depths[d], table, &mut ChaCha8Rng::seed_from_u64(seed))
            })
            .collect();
        let shot_seed = |tag: u64| job_seed(plan.master_seed, &[SHOTS, d as u64, s as u64, tag]);
        let together = exec.execute(&simultaneous_rb_circuit(table, &streams)?, plan.shots, shot_seed(u64::MAX))?;
        let mut iso = Vec::with_capacity(n);
        let mut sim = Vec::with_capacity(n);
        for (q, (seq, inv)) in streams.iter().enumerate() {
            let alone = exec.execute(&rb_circuit(table, seq, *inv, q, n)?, plan.shots, shot_seed(q as u64))?;
            iso.push(z_expectation(&alone.marginal(q)));
            sim.push(z_expectation(&together.marginal(q)));
        }
        Ok((iso, sim))
    })?;
    let by_depth = group_by_depth(plan.depths.len(), &jobs, &results);
    let per_qutrit = |simultaneous: bool, q: usize| -> Vec<Vec<C64>> {
        by_depth
            .iter()
            .map(|v| v.iter().map(|(iso, sim)| if simultaneous { sim[q] } else { iso[q] }).collect())
            .collect()
    };
    Ok(SimultaneousRbResult {
        isolated: (0..n)
            .map(|q| record(format!("q{q}_isolated"), &plan.depths, &per_qutrit(false, q)))
            .collect(),
        simultaneous: (0..n)
            .map(|q| record(format!("q{q}_simultaneous"), &plan.depths, &per_qutrit(true, q)))
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Pauli measurement

/// A single-qutrit measurement basis: the eigenbasis of a Pauli and its square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
    V,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Z, Basis::X, Basis::Y, Basis::V];

    /// Rotation whose columns are eigenvectors of [`Basis::pauli`].
    pub fn matrix(self) -> QuditMatrix {
        let s = 1.0 / 3f64.sqrt();
        let one = C64::new(1.0, 0.0);
        let w = omega();
        let w2 = w * w;
        let m = match self {
            Basis::Z => return QuditMatrix::identity(3).expect("dim 3"),
            Basis::X => return hadamard(),
            Basis::Y => QuditMatrix::from_rows([[one, one, w2], [one, w2, one], [w2, one, one]]),
            Basis::V => QuditMatrix::from_rows([[one, one, w], [one, w, one], [w, one, one]]),
        };
        m.scale(C64::new(s, 0.0))
    }

    /// `Z`, `X`, `Y = ZX` or `V = Z²X`, phase-free.
    pub fn pauli(self) -> PauliLabel {
        let p = match self {
            Basis::Z => PauliLabel::z(),
            Basis::X => PauliLabel::x(),
            Basis::Y => PauliLabel::y(),
            Basis::V => PauliLabel::v(),
        };
        p.with_phase(0)
    }

    /// The basis diagonalizing a non-identity single-qutrit exponent pair.
    pub fn diagonalizing(a: u8, b: u8) -> Option<Basis> {
        let target = [(a % 3, b % 3)];
        Basis::ALL.into_iter().find(|basis| {
            let p = basis.pauli();
            let sq = p.mul(&p);
            p.exponents == target || sq.exponents == target
        })
    }
}

/// Tensor product of the per-qutrit basis rotations. `B_Z = I`.
pub fn prepare_pauli_eigenstate(bases: &[Basis]) -> QuditMatrix {
    bases
        .iter()
        .map(|b| b.matrix())
        .reduce(|acc, m| acc.tensor(&m))
        .unwrap_or_else(|| QuditMatrix::identity(1).expect("dim 1"))
}

/// Eigenvalue weights `⟨z|B†QB|z⟩` for every outcome `z`. Errors unless
/// `B†QB` is diagonal within `1e-10`.
pub fn pauli_weights(q: &PauliLabel, bases: &[Basis]) -> Result<Vec<C64>> {
    if q.n_qutrits() != bases.len() {
        return Err(Error::DimensionMismatch { left: q.n_qutrits(), right: bases.len() });
    }
    let b = prepare_pauli_eigenstate(bases);
    let m = &(&b.adjoint() * &pauli_matrix(q)) * &b;
    if !m.is_diagonal(1e-10) {
        return Err(Error::NotDiagonal(q.to_string()));
    }
    Ok(m.diagonal())
}

/// `Σ_z ⟨z|B†QB|z⟩·f(z)` from outcome frequencies, together with the value for
/// `Q†`, which is its exact conjugate.
pub fn pauli_expectation_from_frequencies(freq: &[f64], q: &PauliLabel, bases: &[Basis]) -> Result<(C64, C64)> {
    let w = pauli_weights(q, bases)?;
    if w.len() != freq.len() {
        return Err(Error::DimensionMismatch { left: w.len(), right: freq.len() });
    }
    let est: C64 = w.iter().zip(freq).map(|(w, &f)| w * f).sum();
    Ok((est, est.conj()))
}

pub fn pauli_expectation(counts: &MeasurementCounts, q: &PauliLabel, bases: &[Basis]) -> Result<(C64, C64)> {
    pauli_expectation_from_frequencies(&counts.frequencies(), q, bases)
}

/// `|i, j⟩ ↦ |i, i+j mod 3⟩`, control first.
pub fn csum_matrix() -> QuditMatrix {
    let mut m = QuditMatrix::zeros(9).expect("dim 9");
    for i in 0..3 {
        for j in 0..3 {
            m[(3 * i + (i + j) % 3, 3 * i + j)] = C64::new(1.0, 0.0);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Cycle benchmarking

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleGate {
    Identity,
    Csum,
}

impl CycleGate {
    pub fn matrix(&self, n: usize) -> Result<QuditMatrix> {
        match self {
            CycleGate::Identity => QuditMatrix::identity(3usize.pow(n as u32)),
            CycleGate::Csum if n == 2 => Ok(csum_matrix()),
            CycleGate::Csum => Err(Error::Plan(format!("CSUM acts on 2 qutrits, plan has {n}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CycleGate::Identity => "identity",
            CycleGate::Csum => "csum",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbExperimentPlan {
    pub cycle: CycleGate,
    pub n_qutrits: usize,
    /// Per-qutrit preparation bases; empty means all `4ⁿ` settings.
    pub basis_settings: Vec<Vec<Basis>>,
    pub depths: Vec<usize>,
    pub randomizations_per_depth: usize,
    pub shots: u64,
    pub master_seed: u64,
    /// Compile the basis rotations into native pulses (and expose them to
    /// per-pulse noise) instead of applying them ideally.
    #[serde(default)]
    pub compile_basis_changes: bool,
}

impl CbExperimentPlan {
    /// Defaults: all settings, depths `{2, 4, 8, 16}`, 20 randomizations.
    pub fn new(cycle: CycleGate, n_qutrits: usize, shots: u64, master_seed: u64) -> Self {
        Self {
            cycle,
            n_qutrits,
            basis_settings: Vec::new(),
            depths: vec![2, 4, 8, 16],
            randomizations_per_depth: 20,
            shots,
            master_seed,
            compile_basis_changes: false,
        }
    }

    pub fn settings(&self) -> Vec<Vec<Basis>> {
        if !self.basis_settings.is_empty() {
            return self.basis_settings.clone();
        }
        let n = self.n_qutrits;
        (0..4usize.pow(n as u32))
            .map(|mut i| {
                let mut v = vec![Basis::Z; n];
                for slot in v.iter_mut().rev() {
                    *slot = Basis::ALL[i % 4];
                    i /= 4;
                }
                v
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        validate_depths(&self.depths)?;
        if self.n_qutrits == 0 {
            return Err(Error::Plan("n_qutrits must be at least 1".into()));
        }
        if self.randomizations_per_depth == 0 {
            return Err(Error::Plan("randomizations_per_depth must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(Error::NoShots);
        }
        if self.basis_settings.iter().any(|s| s.len() != self.n_qutrits) {
            return Err(Error::Plan("every basis setting needs one basis per qutrit".into()));
        }
        self.cycle.matrix(self.n_qutrits).map(|_| ())
    }
}

/// Conjugation table `G·P·G† = ω^k·Q` over all phase-free Paulis.
#[derive(Clone, Debug)]
pub struct PauliFrame {
    map: HashMap<Exponents, (u8, Exponents)>,
}

type Exponents = Vec<(u8, u8)>;

impl PauliFrame {
    /// Fails with [`Error::NotClifford`] unless `g` maps every Pauli to a Pauli.
    pub fn new(g: &QuditMatrix, n: usize) -> Result<Self> {
        let map = PauliLabel::all(n)
            .par_bridge()
            .map(|p| {
                let (phase, q) = conjugate_pauli(g, &p)?;
                let k = (0..3u8)
                    .find(|&k| (phase - omega_pow(k as i64)).norm() < 1e-8)
                    .ok_or_else(|| Error::NonOmegaPhase(format!("{phase}")))?;
                Ok((p.exponents, (k, q.exponents)))
            })
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { map })
    }

    /// `G·L·G†` as a label, phase included.
    pub fn conjugate(&self, l: &PauliLabel) -> PauliLabel {
        let (k, e) = &self.map[&l.exponents];
        PauliLabel::new(e.clone(), l.phase + k)
    }
}

/// Result of propagating `Q` through the ideal circuit: `G·Q·G† = ω^phase·Q_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagated {
    pub final_pauli: PauliLabel,
    pub phase: u8,
}

/// Pushes `q` through `rounds` of (Pauli layer, cycle).
pub fn propagate_pauli(q: &PauliLabel, layers: &[PauliLabel], frame: &PauliFrame) -> Propagated {
    let mut l = q.with_phase(0);
    for p in layers {
        l = p.mul(&l).mul(&p.adjoint());
        l = frame.conjugate(&l);
    }
    Propagated { phase: l.phase, final_pauli: l.with_phase(0) }
}

/// Measurement bases diagonalizing `q`, using `fallback` where `q` is the identity.
pub fn bases_for(q: &PauliLabel, fallback: &[Basis]) -> Vec<Basis> {
    q.exponents
        .iter()
        .zip(fallback)
        .map(|(&(a, b), &f)| Basis::diagonalizing(a, b).unwrap_or(f))
        .collect()
}

/// Non-identity Paulis diagonal in `setting`, one per conjugate pair.
pub fn channels_for_setting(setting: &[Basis]) -> Vec<PauliLabel> {
    let n = setting.len();
    let mut out: Vec<PauliLabel> = (0..3usize.pow(n as u32))
        .map(|mut i| {
            let mut e = vec![(0u8, 0u8); n];
            for (slot, basis) in e.iter_mut().zip(setting).rev() {
                let power = (i % 3) as u8;
                i /= 3;
                let p = basis.pauli();
                *slot = match power {
                    0 => (0, 0),
                    1 => p.exponents[0],
                    _ => p.mul(&p).exponents[0],
                };
            }
            PauliLabel::new(e, 0)
        })
        .filter(|p| !p.is_identity())
        .map(|p| p.conjugate_representative())
        .collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbResult {
    pub cycle: String,
    pub n_qutrits: usize,
    /// One record per conjugate-pair representative, pooled over settings.
    pub channels: Vec<DecayRecord>,
    pub labels: Vec<PauliLabel>,
    /// Largest `|v(Q†) − conj(v(Q))|` over all estimates, with `Q†` propagated
    /// and weighted independently.
    pub max_conjugate_deviation: f64,
}

struct CbJob {
    setting: usize,
    rand: usize,
    depth: usize,
}

/// Circuit preparing `B_prep|0…0⟩`, running the layers and cycles, and
/// rotating into `meas` before readout.
#[allow(clippy::too_many_arguments)]
fn cb_circuit(
    n: usize,
    prep: &[Basis],
    layers: &[PauliLabel],
    cycle: &QuditMatrix,
    cycle_is_identity: bool,
    meas: &[Basis],
    pauli_programs: &[NativeSequence],
    compiled_bases: Option<&HashMap<(Basis, bool), NativeSequence>>,
) -> Circuit {
    let all: Vec<usize> = (0..n).collect();
    let mut circ = Circuit::new(n);
    let rotate = |circ: &mut Circuit, bases: &[Basis], adjoint: bool| match compiled_bases {
        Some(progs) => {
            for (q, b) in bases.iter().enumerate() {
                circ.push_sequence(q, &progs[&(*b, adjoint)]);
            }
        }
        None => {
            let b = prepare_pauli_eigenstate(bases);
            let m = if adjoint { b.adjoint() } else { b };
            circ.push_unitary(all.clone(), m, if adjoint { "measure_basis" } else { "prepare_basis" });
        }
    };
    rotate(&mut circ, prep, false);
    for layer in layers {
        for (q, &(a, b)) in layer.exponents.iter().enumerate() {
            circ.push_sequence(q, &pauli_programs[(3 * a + b) as usize]);
        }
        circ.push_barrier(BarrierKind::Clifford, all.clone());
        if !cycle_is_identity {
            circ.push_unitary(all.clone(), cycle.clone(), "cycle");
        }
        circ.push_barrier(BarrierKind::Cycle, all.clone());
    }
    rotate(&mut circ, meas, true);
    circ
}

pub fn run_cycle_benchmarking(plan: &CbExperimentPlan, noise: &NoiseModel) -> Result<CbResult> {
    run_cycle_benchmarking_with(plan, &Simulator::new(noise.clone())?)
}

pub fn run_cycle_benchmarking_with(plan: &CbExperimentPlan, exec: &dyn Executor) -> Result<CbResult> {
    plan.validate()?;
    let n = plan.n_qutrits;
    let cycle = plan.cycle.matrix(n)?;
    let frame = PauliFrame::new(&cycle, n)?;
    let cycle_is_identity = plan.cycle == CycleGate::Identity;
    let table = compiled_clifford_table()?;
    let pauli_programs: Vec<NativeSequence> = PauliLabel::all(1)
        .map(|p| Ok(program(table, table.lookup(&pauli_matrix(&p))?)?.clone()))
        .collect::<Result<_>>()?;
    let compiled_bases = if plan.compile_basis_changes {
        let mut m = HashMap::new();
        for b in Basis::ALL {
            m.insert((b, false), compile_unitary(&b.matrix())?);
            m.insert((b, true), compile_unitary(&b.matrix().adjoint())?);
        }
        Some(m)
    } else {
        None
    };
    let settings = plan.settings();
    let jobs: Vec<CbJob> = (0..settings.len())
        .flat_map(|s| {
            (0..plan.depths.len()).flat_map(move |d| {
                (0..plan.randomizations_per_depth).map(move |r| CbJob { setting: s, rand: r, depth: d })
            })
        })
        .collect();

    // Per job: (channel representative, depth index, value, conjugate deviation).
    let per_job: Vec<Vec<(PauliLabel, usize, C64, f64)>> = jobs
        .par_iter()
        .map(|job| {
            let setting = &settings[job.setting];
            let coords = [job.setting as u64, job.depth as u64, job.rand as u64];
            let mut rng = ChaCha8Rng::seed_from_u64(job_seed(plan.master_seed, &[STREAM, coords[0], coords[1], coords[2]]));
            let m = plan.depths[job.depth];
            let layers: Vec<PauliLabel> = (0..m).map(|_| random_pauli(n, &mut rng).with_phase(0)).collect();

            // Group channels by the final measurement basis they need.
            let mut groups: BTreeMap<Vec<Basis>, Vec<(PauliLabel, Propagated)>> = BTreeMap::new();
            for q in channels_for_setting(setting) {
                let prop = propagate_pauli(&q, &layers, &frame);
                groups.entry(bases_for(&prop.final_pauli, setting)).or_default().push((q, prop));
            }
            let prep_weights_basis = setting.to_vec();
            let mut out = Vec::new();
            for (gi, (meas, members)) in groups.iter().enumerate() {
                let circ = cb_circuit(
                    n,
                    setting,
                    &layers,
                    &cycle,
                    cycle_is_identity,
                    meas,
                    &pauli_programs,
                    compiled_bases.as_ref(),
                );
                let seed = job_seed(plan.master_seed, &[SHOTS, coords[0], coords[1], coords[2], gi as u64]);
                let freq = exec.execute(&circ, plan.shots, seed)?.frequencies();
                for (q, prop) in members {
                    // Ideal value Tr[Q_f ρ_f] = ω^{−c}·⟨Q⟩₀ with ⟨Q⟩₀ the eigenvalue on B|0…0⟩.
                    let e0 = pauli_weights(q, &prep_weights_basis)?[0];
                    let (est, _) = pauli_expectation_from_frequencies(&freq, &prop.final_pauli, meas)?;
                    let value = est * omega_pow(prop.phase as i64) / e0;
                    // Independent path for Q†.
                    let qd = q.adjoint().with_phase(0);
                    let prop_d = propagate_pauli(&qd, &layers, &frame);
                    let meas_d = bases_for(&prop_d.final_pauli, setting);
                    let e0_d = pauli_weights(&qd, &prep_weights_basis)?[0];
                    let (est_d, _) = pauli_expectation_from_frequencies(&freq, &prop_d.final_pauli, &meas_d)?;
                    let value_d = est_d * omega_pow(prop_d.phase as i64) / e0_d;
                    out.push((q.clone(), job.depth, value, (value_d - value.conj()).norm()));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut pooled: BTreeMap<PauliLabel, Vec<Vec<C64>>> = BTreeMap::new();
    let mut max_dev: f64 = 0.0;
    for job_vals in &per_job {
        for (q, d, v, dev) in job_vals {
            pooled
                .entry(q.clone())
                .or_insert_with(|| vec![Vec::new(); plan.depths.len()])[*d]
                .push(*v);
            max_dev = max_dev.max(*dev);
        }
    }
    let labels: Vec<PauliLabel> = pooled.keys().cloned().collect();
    let channels = pooled
        .iter()
        .map(|(q, vals)| record(q.to_string(), &plan.depths, vals))
        .collect();
    Ok(CbResult {
        cycle: plan.cycle.label().into(),
        n_qutrits: n,
        channels,
        labels,
        max_conjugate_deviation: max_dev,
    })
}

/// Fitted per-channel decays and the process fidelity built from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbSummary {
    pub channel_fits: BTreeMap<String, DecayFit>,
    pub process_fidelity: f64,
    pub process_infidelity: f64,
    pub average_gate_fidelity: f64,
}

/// Fits the real part of each channel with `A·p^m` and averages the decays.
pub fn summarize_cb(result: &CbResult) -> Result<CbSummary> {
    let fits: Vec<DecayFit> = result
        .channels
        .par_iter()
        .map(|r| r.fit(FitModel::NoOffset))
        .collect::<Result<_>>()?;
    let decays: BTreeMap<PauliLabel, f64> = result.labels.iter().cloned().zip(fits.iter().map(|f| f.p)).collect();
    let f_p = crate::estimator::process_fidelity(&decays, result.n_qutrits)?;
    Ok(CbSummary {
        channel_fits: result.channels.iter().map(|r| r.channel_id.clone()).zip(fits).collect(),
        process_fidelity: f_p,
        process_infidelity: 1.0 - f_p,
        average_gate_fidelity: crate::estimator::average_gate_fidelity(f_p, 3usize.pow(result.n_qutrits as u32)),
    })
}
