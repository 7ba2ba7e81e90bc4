//! Noisy density-matrix simulation of compiled circuits.
//!
//! A [`Circuit`] is a list of native gates, ideal multi-qutrit unitaries and
//! barrier markers. A [`NoiseModel`] binds Kraus channels to locations:
//!
//! * `per_pulse`: after every physical pulse, on the pulsed qutrit,
//! * `per_clifford`, `per_interleaved`, `per_cycle`: at barriers of that kind,
//!   on each qutrit named by the barrier,
//! * `spam_prep`: once, right after preparing `|0…0⟩`,
//! * `spam_meas`: a per-qutrit confusion matrix applied to the outcome
//!   distribution before sampling.
//!
//! Channels are applied in the order listed. For a pulse, the order is ideal
//! gate, then crosstalk on spectators, then the per-pulse channels. Virtual Z
//! gates are noiseless.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    check_trace_preserving, outcome_probabilities, sample_multinomial, DensityMatrix,
    MeasurementCounts, QuditMatrix, C64,
};
use crate::compiler::{pulse_matrix, GateKind, NativeGate, NativeSequence};
use crate::error::{Error, Result};
use crate::groups::{pauli_matrix, LevelPair, PauliLabel};

/// A single-qutrit noise channel. Probabilities lie in `[0, 1]`; angles are
/// in radians per application.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// `ρ ↦ (1−λ)ρ + λ·𝟙/3`. With `subspace` set, the qubit depolarizing
    /// channel `(1−λ)ρ + λ·𝟙/2` on that pair of levels instead.
    Depolarizing {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subspace: Option<LevelPair>,
    },
    /// Sequential decay `|1⟩→|0⟩` with probability `γ₁` and `|2⟩→|1⟩` with `γ₂`.
    AmplitudeDamping { gamma1: f64, gamma2: f64 },
    /// `ρ ↦ (1−λ)ρ + λ·diag(ρ)`.
    Dephasing { lambda: f64 },
    /// Extra rotation `exp(−iε/2·σx)` on a pair of levels.
    CoherentOverrotation { epsilon: f64, subspace: LevelPair },
    /// Coherent coupling `exp(−iδ/2·σx)` between `|1⟩` and `|2⟩`.
    LeakageDrive { delta: f64 },
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::ChannelParameter(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::ChannelParameter(format!("{name} = {v} is not finite")));
    }
    Ok(())
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn pair_rotation(pair: LevelPair, angle: f64) -> QuditMatrix {
    let (co, si) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    pair.embed([[c(co), C64::new(0.0, -si)], [C64::new(0.0, -si), c(co)]])
}

/// Kraus operators of a channel. The returned set is trace preserving.
pub fn channel_kraus(spec: &ChannelSpec) -> Result<Vec<QuditMatrix>> {
    let kraus = match *spec {
        ChannelSpec::Depolarizing { lambda, subspace: None } => {
            check_probability("lambda", lambda)?;
            // Σ_P P ρ P† / 9 = 𝟙/3 over all nine Paulis.
            let mut k = vec![QuditMatrix::identity(3)?.scale(c((1.0 - 8.0 * lambda / 9.0).sqrt()))];
            if lambda > 0.0 {
                for p in PauliLabel::all(1).filter(|p| !p.is_identity()) {
                    k.push(pauli_matrix(&p).scale(c((lambda / 9.0).sqrt())));
                }
            }
            k
        }
        ChannelSpec::Depolarizing { lambda, subspace: Some(pair) } => {
            check_probability("lambda", lambda)?;
            let mut k = vec![QuditMatrix::identity(3)?.scale(c((1.0 - 0.75 * lambda).sqrt()))];
            if lambda > 0.0 {
                let w = c((lambda / 4.0).sqrt());
                let (o, one, i) = (c(0.0), c(1.0), C64::new(0.0, 1.0));
                for block in [[[o, one], [one, o]], [[o, -i], [i, o]], [[one, o], [o, -one]]] {
                    k.push(pair.embed(block).scale(w));
                }
            }
            k
        }
        ChannelSpec::AmplitudeDamping { gamma1, gamma2 } => {
            check_probability("gamma1", gamma1)?;
            check_probability("gamma2", gamma2)?;
            let k0 = QuditMatrix::from_diagonal(&[c(1.0), c((1.0 - gamma1).sqrt()), c((1.0 - gamma2).sqrt())])?;
            let mut k1 = QuditMatrix::zeros(3)?;
            k1[(0, 1)] = c(gamma1.sqrt());
            let mut k2 = QuditMatrix::zeros(3)?;
            k2[(1, 2)] = c(gamma2.sqrt());
            vec![k0, k1, k2]
        }
        ChannelSpec::Dephasing { lambda } => {
            check_probability("lambda", lambda)?;
            let mut k = vec![QuditMatrix::identity(3)?.scale(c((1.0 - lambda).sqrt()))];
            if lambda > 0.0 {
                for j in 0..3 {
                    let mut d = [c(0.0); 3];
                    d[j] = c(lambda.sqrt());
                    k.push(QuditMatrix::from_diagonal(&d)?);
                }
            }
            k
        }
        ChannelSpec::CoherentOverrotation { epsilon, subspace } => {
            check_finite("epsilon", epsilon)?;
            vec![pair_rotation(subspace, epsilon)]
        }
        ChannelSpec::LeakageDrive { delta } => {
            check_finite("delta", delta)?;
            vec![pair_rotation(LevelPair::L12, delta)]
        }
    };
    check_trace_preserving(&kraus, 3)?;
    Ok(kraus)
}

/// A channel together with the qutrits it may act on (`None` = all).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundChannel {
    pub channel: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qutrits: Option<Vec<usize>>,
}

impl BoundChannel {
    pub fn all(channel: ChannelSpec) -> Self {
        Self { channel, qutrits: None }
    }

    pub fn on(channel: ChannelSpec, qutrits: Vec<usize>) -> Self {
        Self { channel, qutrits: Some(qutrits) }
    }

    pub fn applies_to(&self, q: usize) -> bool {
        self.qutrits.as_ref().is_none_or(|qs| qs.contains(&q))
    }
}

/// Classical crosstalk: a pulse of angle `θ` on `source` rotates `target`
/// by `ε·θ/π` about the same axis of the same subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crosstalk {
    pub source: usize,
    pub target: usize,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub per_pulse: Vec<BoundChannel>,
    #[serde(default)]
    pub per_clifford: Vec<BoundChannel>,
    /// Bound to barriers that close an interleaved gate.
    #[serde(default)]
    pub per_interleaved: Vec<BoundChannel>,
    #[serde(default)]
    pub per_cycle: Vec<BoundChannel>,
    #[serde(default)]
    pub spam_prep: Vec<BoundChannel>,
    /// Row-stochastic `C[true][measured]` for a single qutrit, applied to every qutrit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spam_meas: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub crosstalk: Vec<Crosstalk>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        for b in self
            .per_pulse
            .iter()
            .chain(&self.per_clifford)
            .chain(&self.per_interleaved)
            .chain(&self.per_cycle)
            .chain(&self.spam_prep)
        {
            channel_kraus(&b.channel)?;
        }
        if let Some(m) = &self.spam_meas {
            for (i, row) in m.iter().enumerate() {
                if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::ChannelParameter(format!("confusion row {i} has entries outside [0, 1]")));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::ChannelParameter(format!("confusion row {i} sums to {s}")));
                }
            }
        }
        for x in &self.crosstalk {
            check_finite("epsilon", x.epsilon)?;
            if x.source == x.target {
                return Err(Error::ChannelParameter(format!(
                    "crosstalk source and target are both {}",
                    x.source
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric readout confusion: each level is misread as each other level
/// with probability `p/2`.
pub fn readout_confusion(p: f64) -> [[f64; 3]; 3] {
    let mut m = [[p / 2.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0 - p;
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoisePreset {
    pub name: &'static str,
    pub description: &'static str,
    pub model: NoiseModel,
}

/// Stock noise models.
pub fn presets() -> Vec<NoisePreset> {
    let depol = |lambda| ChannelSpec::Depolarizing { lambda, subspace: None };
    vec![
        NoisePreset {
            name: "noiseless",
            description: "no noise at all",
            model: NoiseModel::noiseless(),
        },
        NoisePreset {
            name: "depolarizing",
            description: "qutrit depolarizing lambda = 0.02 after every Clifford",
            model: NoiseModel {
                per_clifford: vec![BoundChannel::all(depol(0.02))],
                ..Default::default()
            },
        },
        NoisePreset {
            name: "subspace_depolarizing",
            description: "qubit depolarizing lambda = 0.02 on levels 0,1 after every Clifford",
            model: NoiseModel {
                per_clifford: vec![BoundChannel::all(ChannelSpec::Depolarizing {
                    lambda: 0.02,
                    subspace: Some(LevelPair::L01),
                })],
                ..Default::default()
            },
        },
        NoisePreset {
            name: "amplitude_damping",
            description: "T1-like decay after every pulse: gamma1 = 0.002 (1->0), gamma2 = 0.003 (2->1)",
            model: NoiseModel {
                per_pulse: vec![BoundChannel::all(ChannelSpec::AmplitudeDamping {
                    gamma1: 0.002,
                    gamma2: 0.003,
                })],
                ..Default::default()
            },
        },
        NoisePreset {
            name: "leakage_drive",
            description: "coherent 1<->2 coupling delta = 0.05 rad after every pulse plus dephasing 0.002",
            model: NoiseModel {
                per_pulse: vec![
                    BoundChannel::all(ChannelSpec::LeakageDrive { delta: 0.05 }),
                    BoundChannel::all(ChannelSpec::Dephasing { lambda: 0.002 }),
                ],
                ..Default::default()
            },
        },
        NoisePreset {
            name: "crosstalk",
            description: "depolarizing 0.01 per Clifford; pulses on qutrit 0 rotate qutrit 1 by 0.1*theta/pi",
            model: NoiseModel {
                per_clifford: vec![BoundChannel::all(depol(0.01))],
                crosstalk: vec![Crosstalk { source: 0, target: 1, epsilon: 0.1 }],
                ..Default::default()
            },
        },
        NoisePreset {
            name: "readout_misassignment",
            description: "readout misassignment 1% plus depolarizing 0.02 per Clifford",
            model: NoiseModel {
                per_clifford: vec![BoundChannel::all(depol(0.02))],
                spam_meas: Some(readout_confusion(0.01)),
                ..Default::default()
            },
        },
        NoisePreset {
            name: "cycle_depolarizing",
            description: "qutrit depolarizing lambda = 0.05 on each qutrit after every cycle",
            model: NoiseModel {
                per_cycle: vec![BoundChannel::all(depol(0.05))],
                ..Default::default()
            },
        },
    ]
}

pub fn preset(name: &str) -> Option<NoiseModel> {
    presets().into_iter().find(|p| p.name == name).map(|p| p.model)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Clifford,
    Interleaved,
    Cycle,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Gate { qutrit: usize, gate: NativeGate },
    /// Ideal (noiseless) unitary on the listed qutrits.
    Unitary {
        qutrits: Vec<usize>,
        matrix: QuditMatrix,
        label: String,
    },
    /// Closes a noise-binding region on the listed qutrits.
    Barrier { kind: BarrierKind, qutrits: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qutrits: usize,
    pub steps: Vec<Step>,
}

impl Circuit {
    pub fn new(n_qutrits: usize) -> Self {
        Self { n_qutrits, steps: Vec::new() }
    }

    pub fn push_gate(&mut self, qutrit: usize, gate: NativeGate) {
        self.steps.push(Step::Gate { qutrit, gate });
    }

    pub fn push_sequence(&mut self, qutrit: usize, seq: &NativeSequence) {
        for &gate in &seq.gates {
            self.push_gate(qutrit, gate);
        }
    }

    pub fn push_unitary(&mut self, qutrits: Vec<usize>, matrix: QuditMatrix, label: impl Into<String>) {
        self.steps.push(Step::Unitary { qutrits, matrix, label: label.into() });
    }

    pub fn push_barrier(&mut self, kind: BarrierKind, qutrits: Vec<usize>) {
        self.steps.push(Step::Barrier { kind, qutrits });
    }

    pub fn pulse_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Gate { gate, .. } if gate.is_pulse()))
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qutrits == 0 {
            return Err(Error::Circuit("circuit has no qutrits".into()));
        }
        let in_range = |q: usize| {
            if q < self.n_qutrits {
                Ok(())
            } else {
                Err(Error::Circuit(format!("qutrit {q} out of range for {} qutrits", self.n_qutrits)))
            }
        };
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Gate { qutrit, .. } => in_range(*qutrit)?,
                Step::Unitary { qutrits, matrix, label } => {
                    qutrits.iter().try_for_each(|&q| in_range(q))?;
                    if matrix.dim() != 3usize.pow(qutrits.len() as u32) {
                        return Err(Error::Circuit(format!(
                            "step {i} ({label}): {}-dim matrix on {} qutrits",
                            matrix.dim(),
                            qutrits.len()
                        )));
                    }
                    let dev = matrix.unitarity_error();
                    if dev > 1e-9 {
                        return Err(Error::Circuit(format!("step {i} ({label}) is not unitary ({dev:.2e})")));
                    }
                }
                Step::Barrier { qutrits, .. } => {
                    if qutrits.is_empty() {
                        return Err(Error::Circuit(format!("step {i}: empty barrier")));
                    }
                    qutrits.iter().try_for_each(|&q| in_range(q))?;
                }
            }
        }
        Ok(())
    }

    /// Noiseless unitary of the whole circuit.
    pub fn ideal_unitary(&self) -> Result<QuditMatrix> {
        self.validate()?;
        let n = self.n_qutrits;
        let mut u = QuditMatrix::identity(3usize.pow(n as u32))?;
        for step in &self.steps {
            match step {
                Step::Gate { qutrit, gate } => {
                    u = &QuditMatrix::embed(&gate.matrix(), *qutrit, n)? * &u;
                }
                Step::Unitary { qutrits, matrix, .. } => {
                    u = &QuditMatrix::embed_on(matrix, qutrits, n)? * &u;
                }
                Step::Barrier { .. } => {}
            }
        }
        Ok(u)
    }
}

/// Anything that turns a circuit into measurement counts: the built-in
/// simulator, or a client for real hardware.
pub trait Executor: Sync {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<MeasurementCounts>;
}

type Bound = (Vec<QuditMatrix>, Option<Vec<usize>>);

/// Density-matrix simulator for a fixed noise model.
#[derive(Clone, Debug)]
pub struct Simulator {
    noise: NoiseModel,
    per_pulse: Vec<Bound>,
    per_clifford: Vec<Bound>,
    per_interleaved: Vec<Bound>,
    per_cycle: Vec<Bound>,
    spam_prep: Vec<Bound>,
}

fn compile_bound(list: &[BoundChannel]) -> Result<Vec<Bound>> {
    list.iter()
        .map(|b| Ok((channel_kraus(&b.channel)?, b.qutrits.clone())))
        .collect()
}

impl Simulator {
    pub fn new(noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        Ok(Self {
            per_pulse: compile_bound(&noise.per_pulse)?,
            per_clifford: compile_bound(&noise.per_clifford)?,
            per_interleaved: compile_bound(&noise.per_interleaved)?,
            per_cycle: compile_bound(&noise.per_cycle)?,
            spam_prep: compile_bound(&noise.spam_prep)?,
            noise,
        })
    }

    pub fn noiseless() -> Self {
        Self::new(NoiseModel::noiseless()).expect("empty model is valid")
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// State just before measurement.
    pub fn final_state(&self, circuit: &Circuit) -> Result<DensityMatrix> {
        circuit.validate()?;
        let n = circuit.n_qutrits;
        let mut state = Evolution::new(n)?;
        for q in 0..n {
            state.channels(&self.spam_prep, q)?;
        }
        for step in &circuit.steps {
            match step {
                Step::Gate { qutrit, gate } => {
                    state.unitary(&gate.matrix(), &[*qutrit])?;
                    if gate.kind == GateKind::PhysicalPulse {
                        for x in &self.noise.crosstalk {
                            if x.source == *qutrit && x.target < n && x.epsilon != 0.0 {
                                let angle = x.epsilon * gate.angle / PI;
                                let rot = pulse_matrix(gate.subspace, angle, gate.frame_phase);
                                state.unitary(&rot, &[x.target])?;
                            }
                        }
                        state.channels(&self.per_pulse, *qutrit)?;
                    }
                }
                Step::Unitary { qutrits, matrix, .. } => state.unitary(matrix, qutrits)?,
                Step::Barrier { kind, qutrits } => {
                    let list = match kind {
                        BarrierKind::Clifford => &self.per_clifford,
                        BarrierKind::Interleaved => &self.per_interleaved,
                        BarrierKind::Cycle => &self.per_cycle,
                    };
                    for &q in qutrits {
                        state.channels(list, q)?;
                    }
                }
            }
        }
        Ok(state.rho)
    }

    /// Exact outcome distribution, including readout confusion.
    pub fn distribution(&self, circuit: &Circuit) -> Result<Vec<f64>> {
        let rho = self.final_state(circuit)?;
        let p = outcome_probabilities(&rho)?;
        Ok(match &self.noise.spam_meas {
            Some(conf) => apply_confusion(&p, conf, circuit.n_qutrits),
            None => p,
        })
    }

    pub fn simulate(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<MeasurementCounts> {
        if shots == 0 {
            return Err(Error::NoShots);
        }
        let p = self.distribution(circuit)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let by_index = sample_multinomial(&p, shots, &mut rng);
        Ok(MeasurementCounts::from_outcome_counts(circuit.n_qutrits, &by_index))
    }
}

impl Executor for Simulator {
    fn execute(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<MeasurementCounts> {
        self.simulate(circuit, shots, seed)
    }
}

/// `p'_j = Σ_i p_i·Π_q C[i_q][j_q]`.
pub fn apply_confusion(p: &[f64], conf: &[[f64; 3]; 3], n_qutrits: usize) -> Vec<f64> {
    let mut out = p.to_vec();
    // Apply the single-qutrit confusion one digit at a time.
    for q in 0..n_qutrits {
        let stride = 3usize.pow((n_qutrits - 1 - q) as u32);
        let mut next = vec![0.0; out.len()];
        for (i, &pi) in out.iter().enumerate() {
            let d = (i / stride) % 3;
            let base = i - d * stride;
            for (j, &cij) in conf[d].iter().enumerate() {
                next[base + j * stride] += pi * cij;
            }
        }
        out = next;
    }
    out
}

struct Evolution {
    n: usize,
    rho: DensityMatrix,
}

impl Evolution {
    fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            rho: DensityMatrix::basis_state(3usize.pow(n as u32), 0)?,
        })
    }

    fn unitary(&mut self, u: &QuditMatrix, qutrits: &[usize]) -> Result<()> {
        let full = if self.n == qutrits.len() && qutrits.iter().enumerate().all(|(i, &q)| i == q) {
            u.clone()
        } else {
            QuditMatrix::embed_on(u, qutrits, self.n)?
        };
        self.rho = self.rho.conjugate_by(&full);
        Ok(())
    }

    fn channels(&mut self, list: &[Bound], q: usize) -> Result<()> {
        for (kraus, qutrits) in list {
            if qutrits.as_ref().is_some_and(|qs| !qs.contains(&q)) {
                continue;
            }
            let full: Vec<QuditMatrix> = if self.n == 1 {
                kraus.clone()
            } else {
                kraus
                    .iter()
                    .map(|k| QuditMatrix::embed(k, q, self.n))
                    .collect::<Result<_>>()?
            };
            self.rho = self.rho.apply_kraus_unchecked(&full);
        }
        Ok(())
    }
}
