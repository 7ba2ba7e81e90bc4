//! Compilation of single-qutrit unitaries into the native gate set.
//!
//! The hardware drives two transitions, `0↔1` and `1↔2`. A physical pulse
//! rotates one of them by `π/2` or `π` about an equatorial axis set by its
//! frame phase. Diagonal phases are free: a virtual `Z` on subspace `s` is a
//! frame change of the `s` drive, which as a unitary is
//!
//! * `Z⁽⁰¹⁾(β) = diag(1, e^{iβ}, e^{iβ})`
//! * `Z⁽¹²⁾(β) = diag(1, 1, e^{iβ})`
//!
//! so a virtual `Z` on one subspace never changes the frame of the other drive.
//!
//! Sequences are stored in time order: the first gate acts first, so the
//! unitary of `[g₀, g₁, …]` is `… G₁·G₀`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{global_phase_equal, QuditMatrix, C64};
use crate::error::{Error, Result};
use crate::groups::{hadamard, CliffordTable, LevelPair};

/// Tolerance used to verify compiled sequences against their targets.
pub const VERIFY_TOL: f64 = 1e-9;

const ANGLE_EPS: f64 = 1e-12;

/// One of the two driven transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subspace {
    #[serde(rename = "01")]
    S01,
    #[serde(rename = "12")]
    S12,
}

impl Subspace {
    pub fn levels(self) -> (usize, usize) {
        match self {
            Subspace::S01 => (0, 1),
            Subspace::S12 => (1, 2),
        }
    }

    pub fn pair(self) -> LevelPair {
        match self {
            Subspace::S01 => LevelPair::L01,
            Subspace::S12 => LevelPair::L12,
        }
    }

    pub fn label(self) -> &'static str {
        self.pair().label()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    PhysicalPulse,
    VirtualZ,
}

/// A native operation. `frame_phase` is only meaningful for physical pulses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeGate {
    pub kind: GateKind,
    pub subspace: Subspace,
    pub angle: f64,
    pub frame_phase: f64,
}

impl NativeGate {
    pub fn pulse(subspace: Subspace, angle: f64, frame_phase: f64) -> Self {
        Self {
            kind: GateKind::PhysicalPulse,
            subspace,
            angle,
            frame_phase: wrap_angle(frame_phase),
        }
    }

    pub fn virtual_z(subspace: Subspace, angle: f64) -> Self {
        Self {
            kind: GateKind::VirtualZ,
            subspace,
            angle: wrap_angle(angle),
            frame_phase: 0.0,
        }
    }

    pub fn is_pulse(&self) -> bool {
        self.kind == GateKind::PhysicalPulse
    }

    pub fn matrix(&self) -> QuditMatrix {
        match self.kind {
            GateKind::PhysicalPulse => pulse_matrix(self.subspace, self.angle, self.frame_phase),
            GateKind::VirtualZ => virtual_z_matrix(self.subspace, self.angle),
        }
    }
}

/// `exp(−iθ/2 (cos φ σx + sin φ σy))` on the subspace, identity on the spectator.
pub fn pulse_matrix(subspace: Subspace, angle: f64, frame_phase: f64) -> QuditMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mi = C64::new(0.0, -1.0);
    subspace.pair().embed([
        [C64::new(c, 0.0), mi * C64::from_polar(s, -frame_phase)],
        [mi * C64::from_polar(s, frame_phase), C64::new(c, 0.0)],
    ])
}

pub fn virtual_z_matrix(subspace: Subspace, angle: f64) -> QuditMatrix {
    let e = C64::from_polar(1.0, angle);
    let one = C64::new(1.0, 0.0);
    let diag = match subspace {
        Subspace::S01 => [one, e, e],
        Subspace::S12 => [one, one, e],
    };
    QuditMatrix::from_diagonal(&diag).expect("valid dim")
}

/// Ordered native gates; see the module docs for the time-order convention.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NativeSequence {
    pub gates: Vec<NativeGate>,
}

impl NativeSequence {
    pub fn new(gates: Vec<NativeGate>) -> Self {
        Self { gates }
    }

    /// Physical pulses only; virtual phases are free.
    pub fn pulse_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_pulse()).count()
    }

    pub fn extend(&mut self, other: &NativeSequence) {
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn unitary(&self) -> QuditMatrix {
        self.gates
            .iter()
            .fold(QuditMatrix::identity(3).expect("valid dim"), |acc, g| {
                &g.matrix() * &acc
            })
    }

    /// True if the sequence implements `target` up to global phase within `tol`.
    pub fn verifies(&self, target: &QuditMatrix, tol: f64) -> bool {
        global_phase_equal(&self.unitary(), target, tol).unwrap_or(false)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

fn is_zero_angle(a: f64) -> bool {
    wrap_angle(a).abs() < ANGLE_EPS
}

/// Two-level unitary
/// `U(θ, φ, λ) = [[cos θ/2, −i e^{iλ} sin θ/2], [−i e^{iφ} sin θ/2, e^{i(λ+φ)} cos θ/2]]`
/// placed on `subspace`, identity on the spectator level.
pub fn embed_subspace_unitary(theta: f64, phi: f64, lambda: f64, subspace: Subspace) -> QuditMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mi = C64::new(0.0, -1.0);
    subspace.pair().embed([
        [C64::new(c, 0.0), mi * C64::from_polar(s, lambda)],
        [mi * C64::from_polar(s, phi), C64::from_polar(c, lambda + phi)],
    ])
}

/// `Z_{φ−π/2} X_{π/2} Z_{π−θ} X_{π/2} Z_{λ−π/2}` on one subspace.
///
/// On a qutrit the 2×2 block's own phase is observable against the spectator
/// level, so a trailing virtual `Z` restores it whenever it is non-zero.
pub fn zxzxz(theta: f64, phi: f64, lambda: f64, subspace: Subspace) -> NativeSequence {
    let mut seq = NativeSequence::new(vec![
        NativeGate::virtual_z(subspace, lambda - FRAC_PI_2),
        NativeGate::pulse(subspace, FRAC_PI_2, 0.0),
        NativeGate::virtual_z(subspace, PI - theta),
        NativeGate::pulse(subspace, FRAC_PI_2, 0.0),
        NativeGate::virtual_z(subspace, phi - FRAC_PI_2),
    ]);
    let target = embed_subspace_unitary(theta, phi, lambda, subspace);
    let fix = left_diagonal_fix(&seq.unitary(), &target)
        .expect("ZXZXZ differs from its target by a diagonal phase");
    seq.gates.extend(fix);
    seq
}

/// Real rotation `[[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]` on a subspace.
pub fn y_rotation_matrix(theta: f64, subspace: Subspace) -> QuditMatrix {
    pulse_matrix(subspace, theta, FRAC_PI_2)
}

/// Native program for a `Y` rotation. `π/2` and `π` rotations are single
/// pulses on the `Y` axis, anything else goes through [`zxzxz`].
pub fn y_rotation(theta: f64, subspace: Subspace) -> NativeSequence {
    let t = wrap_angle(theta);
    if t.abs() < ANGLE_EPS {
        return NativeSequence::default();
    }
    for special in [FRAC_PI_2, PI] {
        if (t.abs() - special).abs() < ANGLE_EPS {
            let frame = if t > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
            return NativeSequence::new(vec![NativeGate::pulse(subspace, special, frame)]);
        }
    }
    // U(θ, π/2, −π/2) is exactly the Y rotation.
    zxzxz(t, FRAC_PI_2, -FRAC_PI_2, subspace)
}

/// Virtual-Z gates realizing `diag(1, e^{i d1}, e^{i d2})`. Zero rotations are omitted.
pub fn diagonal_to_virtual_z(d1: f64, d2: f64) -> Vec<NativeGate> {
    let mut out = Vec::new();
    if !is_zero_angle(d1) {
        out.push(NativeGate::virtual_z(Subspace::S01, d1));
    }
    if !is_zero_angle(d2 - d1) {
        out.push(NativeGate::virtual_z(Subspace::S12, d2 - d1));
    }
    out
}

/// If `target ∝ D · actual` for a diagonal `D`, returns virtual Z gates for `D`
/// (to be applied after `actual`).
fn left_diagonal_fix(actual: &QuditMatrix, target: &QuditMatrix) -> Option<Vec<NativeGate>> {
    let mut phases = [0.0; 3];
    for (r, ph) in phases.iter_mut().enumerate() {
        let k = (0..3)
            .max_by(|&a, &b| actual[(r, a)].norm().total_cmp(&actual[(r, b)].norm()))
            .expect("three columns");
        let a = actual[(r, k)];
        if a.norm() < 1e-9 {
            return None;
        }
        *ph = (target[(r, k)] / a).arg();
    }
    let gates = diagonal_to_virtual_z(phases[1] - phases[0], phases[2] - phases[0]);
    let fixed = gates
        .iter()
        .fold(actual.clone(), |acc, g| &g.matrix() * &acc);
    global_phase_equal(&fixed, target, 1e-10)
        .unwrap_or(false)
        .then_some(gates)
}

/// Parameters of `U ∝ D₁ · Y⁽¹²⁾(θ₁) · Y⁽⁰¹⁾(θ₂) · D₂ · Y⁽¹²⁾(θ₃) · D₃`, where
/// `D₁ = Z⁽⁰¹⁾(φ₁)Z⁽¹²⁾(φ₂)`, `D₂ = Z⁽⁰¹⁾(φ₃)Z⁽¹²⁾(φ₄)` and
/// `D₃ = Z⁽⁰¹⁾(φ₅)Z⁽¹²⁾(2φ₅)`. All `θ` lie in `[0, π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineSineParams {
    pub phases: [f64; 5],
    pub thetas: [f64; 3],
}

fn arg_or_zero(z: C64) -> f64 {
    if z.norm() < 1e-13 {
        0.0
    } else {
        z.arg()
    }
}

/// Extracts the cosine-sine parameters of a 3×3 unitary.
pub fn cosine_sine_params(u: &QuditMatrix) -> Result<CosineSineParams> {
    if u.dim() != 3 {
        return Err(Error::Decomposition(format!("expected 3x3, got {0}x{0}", u.dim())));
    }
    let dev = u.unitarity_error();
    if dev > 1e-9 {
        return Err(Error::NotUnitary(dev));
    }
    // First column → e^{iγ}·(|u00|, |u10|, |u20|) after stripping relative phases.
    let col = u.column(0);
    let gamma = arg_or_zero(col[0]);
    let d1 = if col[1].norm() < 1e-13 { 0.0 } else { col[1].arg() - gamma };
    let d2 = if col[2].norm() < 1e-13 { 0.0 } else { col[2].arg() - gamma };
    let (v0, v1, v2) = (col[0].norm(), col[1].norm(), col[2].norm());
    let theta1 = 2.0 * v2.atan2(v1);
    let theta2 = 2.0 * v1.hypot(v2).atan2(v0);

    let d_first = diag3(0.0, d1, d2);
    let m = &(&y_rotation_matrix(theta2, Subspace::S01).adjoint()
        * &y_rotation_matrix(theta1, Subspace::S12).adjoint())
        * &d_first.adjoint();
    let rest = (&m * u).scale(C64::from_polar(1.0, -gamma));
    // rest = diag(1, W); W = diag(e^{ia}, e^{ib}) · Y(θ₃) · diag(e^{iφ₅}, e^{3iφ₅})
    let (w11, w12, w21, w22) = (rest[(1, 1)], rest[(1, 2)], rest[(2, 1)], rest[(2, 2)]);
    let theta3 = 2.0 * w21.norm().atan2(w11.norm());
    let (phi5, a, b) = if w21.norm() < 1e-13 {
        (0.0, arg_or_zero(w11), arg_or_zero(w22))
    } else if w11.norm() < 1e-13 {
        (0.0, arg_or_zero(w12) - PI, arg_or_zero(w21))
    } else {
        let phi5 = wrap_angle(w22.arg() - w21.arg()) / 2.0;
        (phi5, w11.arg() - phi5, w21.arg() - phi5)
    };
    // Virtual-Z angles for diag(1, e^{ix}, e^{iy}) are (x, y − x).
    Ok(CosineSineParams {
        phases: [
            wrap_angle(d1),
            wrap_angle(d2 - d1),
            wrap_angle(a),
            wrap_angle(b - a),
            wrap_angle(phi5),
        ],
        thetas: [theta1, theta2, theta3],
    })
}

fn diag3(d0: f64, d1: f64, d2: f64) -> QuditMatrix {
    QuditMatrix::from_diagonal(&[
        C64::from_polar(1.0, d0),
        C64::from_polar(1.0, d1),
        C64::from_polar(1.0, d2),
    ])
    .expect("valid dim")
}

/// Native program for an arbitrary single-qutrit unitary via the cosine-sine
/// form, with each `Y` rotation expanded by [`y_rotation`]. The result is
/// optimized and verified against `u` up to global phase.
pub fn dita_decompose(u: &QuditMatrix) -> Result<NativeSequence> {
    let p = cosine_sine_params(u)?;
    let [phi1, phi2, phi3, phi4, phi5] = p.phases;
    let [theta1, theta2, theta3] = p.thetas;
    let mut seq = NativeSequence::default();
    seq.gates.push(NativeGate::virtual_z(Subspace::S01, phi5));
    seq.gates.push(NativeGate::virtual_z(Subspace::S12, 2.0 * phi5));
    seq.extend(&y_rotation(theta3, Subspace::S12));
    seq.gates.push(NativeGate::virtual_z(Subspace::S01, phi3));
    seq.gates.push(NativeGate::virtual_z(Subspace::S12, phi4));
    seq.extend(&y_rotation(theta2, Subspace::S01));
    seq.extend(&y_rotation(theta1, Subspace::S12));
    seq.gates.push(NativeGate::virtual_z(Subspace::S01, phi1));
    seq.gates.push(NativeGate::virtual_z(Subspace::S12, phi2));

    let seq = optimize_sequence(&seq);
    if !seq.verifies(u, VERIFY_TOL) {
        let err = global_phase_distance(&seq.unitary(), u);
        return Err(Error::Decomposition(format!(
            "reconstruction off by {err:.3e}"
        )));
    }
    Ok(seq)
}

/// Max-abs distance between `a` and the closest phase multiple of `b`,
/// taking the phase from the dominant entry of `b`.
pub fn global_phase_distance(a: &QuditMatrix, b: &QuditMatrix) -> f64 {
    let k = b.dominant_index();
    let r = a.entries()[k] / b.entries()[k];
    let ph = if r.norm() > 0.0 { r / r.norm() } else { C64::new(1.0, 0.0) };
    a.max_abs_diff(&b.scale(ph)).unwrap_or(f64::INFINITY)
}

/// Result of pushing every virtual Z to the end of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTracked {
    /// Physical pulses with frame phases updated for all preceding virtual Zs.
    pub pulses: Vec<NativeGate>,
    /// Accumulated `diag(1, e^{i d1}, e^{i d2})` applied after the pulses.
    pub trailing: (f64, f64),
}

impl FrameTracked {
    pub fn into_sequence(self) -> NativeSequence {
        let mut gates = self.pulses;
        gates.extend(diagonal_to_virtual_z(self.trailing.0, self.trailing.1));
        NativeSequence::new(gates)
    }
}

/// Commutes every virtual Z past the later pulses by shifting their frames.
pub fn frame_track(seq: &NativeSequence) -> FrameTracked {
    let (mut d1, mut d2) = (0.0, 0.0);
    let mut pulses = Vec::with_capacity(seq.gates.len());
    for g in &seq.gates {
        match (g.kind, g.subspace) {
            (GateKind::VirtualZ, Subspace::S01) => {
                d1 += g.angle;
                d2 += g.angle;
            }
            (GateKind::VirtualZ, Subspace::S12) => d2 += g.angle,
            (GateKind::PhysicalPulse, s) => {
                let shift = match s {
                    Subspace::S01 => d1,
                    Subspace::S12 => d2 - d1,
                };
                pulses.push(NativeGate::pulse(s, g.angle, g.frame_phase - shift));
            }
        }
    }
    FrameTracked {
        pulses,
        trailing: (wrap_angle(d1), wrap_angle(d2)),
    }
}

// Virtual Z equal (up to global phase) to −1 on the given subspace.
fn minus_one_on(subspace: Subspace) -> NativeGate {
    match subspace {
        // diag(−1, −1, 1) ∝ diag(1, 1, −1)
        Subspace::S01 => NativeGate::virtual_z(Subspace::S12, PI),
        // diag(1, −1, −1)
        Subspace::S12 => NativeGate::virtual_z(Subspace::S01, PI),
    }
}

// Rotation by signed angle `t` about `frame`, normalized to a non-negative
// angle in (0, π] plus an optional subspace sign flip.
fn normalized_rotation(subspace: Subspace, t: f64, frame: f64) -> Vec<NativeGate> {
    let mut t = t.rem_euclid(4.0 * PI);
    let mut flip = false;
    if t > PI + ANGLE_EPS {
        t -= 2.0 * PI;
        flip = true;
    }
    if t > PI + ANGLE_EPS {
        t -= 2.0 * PI;
        flip = !flip;
    }
    let mut out = Vec::new();
    if t.abs() >= ANGLE_EPS {
        if t > 0.0 {
            out.push(NativeGate::pulse(subspace, t, frame));
        } else {
            out.push(NativeGate::pulse(subspace, -t, frame + PI));
        }
    }
    if flip {
        out.push(minus_one_on(subspace));
    }
    out
}

/// Peephole optimizer, run to a fixpoint:
///
/// * zero-angle pulses and virtual Zs are dropped,
/// * virtual Zs are merged by frame tracking them to the end of the sequence,
/// * adjacent pulses on the same subspace and axis (frames equal or opposite)
///   are fused into a single rotation, so two `π/2` pulses become one `π` pulse.
///
/// The unitary is preserved up to global phase and the pulse count never grows.
pub fn optimize_sequence(seq: &NativeSequence) -> NativeSequence {
    let mut gates = seq.gates.clone();
    loop {
        let tracked = frame_track(&NativeSequence::new(gates));
        let mut changed = false;
        let mut out: Vec<NativeGate> = Vec::with_capacity(tracked.pulses.len() + 2);
        let mut i = 0;
        let pulses = &tracked.pulses;
        while i < pulses.len() {
            let p = pulses[i];
            if let Some(q) = pulses.get(i + 1) {
                if q.subspace == p.subspace {
                    let diff = wrap_angle(q.frame_phase - p.frame_phase);
                    let sign = if diff.abs() < ANGLE_EPS {
                        Some(1.0)
                    } else if (diff.abs() - PI).abs() < ANGLE_EPS {
                        Some(-1.0)
                    } else {
                        None
                    };
                    if let Some(sign) = sign {
                        out.extend(normalized_rotation(
                            p.subspace,
                            p.angle + sign * q.angle,
                            p.frame_phase,
                        ));
                        changed = true;
                        i += 2;
                        continue;
                    }
                }
            }
            let norm = normalized_rotation(p.subspace, p.angle, p.frame_phase);
            if norm.len() != 1 || (norm[0].angle - p.angle).abs() > ANGLE_EPS {
                changed = true;
            }
            out.extend(norm);
            i += 1;
        }
        out.extend(diagonal_to_virtual_z(tracked.trailing.0, tracked.trailing.1));
        if !changed {
            return NativeSequence::new(out);
        }
        gates = out;
    }
}

/// Pulse-count summary over a compiled table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileStats {
    pub elements: usize,
    /// Uniform average over the group elements.
    pub mean_pulse_count: f64,
    pub min_pulse_count: usize,
    pub max_pulse_count: usize,
    /// `histogram[k]` = number of elements with `k` pulses.
    pub histogram: Vec<usize>,
}

impl CompileStats {
    pub fn from_counts(counts: &[usize]) -> Self {
        let max = counts.iter().copied().max().unwrap_or(0);
        let mut histogram = vec![0; max + 1];
        for &c in counts {
            histogram[c] += 1;
        }
        Self {
            elements: counts.len(),
            mean_pulse_count: counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64,
            min_pulse_count: counts.iter().copied().min().unwrap_or(0),
            max_pulse_count: max,
            histogram,
        }
    }
}

/// Compiles every element of a 3×3 group table and verifies it.
pub fn compile_clifford_table(table: &CliffordTable) -> Result<(CliffordTable, CompileStats)> {
    let seqs: Vec<NativeSequence> = table
        .elements()
        .par_iter()
        .map(|e| compile_unitary(&e.matrix))
        .collect::<Result<_>>()?;
    let mut out = table.clone();
    let counts: Vec<usize> = seqs.iter().map(NativeSequence::pulse_count).collect();
    for (i, s) in seqs.into_iter().enumerate() {
        out.set_pulse_sequence(i, s);
    }
    Ok((out, CompileStats::from_counts(&counts)))
}

/// Compiles a single-qutrit unitary, preferring a direct subspace program
/// when the target only touches one driven transition.
pub fn compile_unitary(u: &QuditMatrix) -> Result<NativeSequence> {
    let generic = dita_decompose(u)?;
    let mut best = generic;
    for s in [Subspace::S01, Subspace::S12] {
        if let Some(seq) = compile_in_subspace(u, s) {
            if seq.pulse_count() < best.pulse_count() {
                best = seq;
            }
        }
    }
    Ok(best)
}

// If `u` acts on one driven subspace only (up to diagonal phases), compile it
// through a single ZXZXZ.
fn compile_in_subspace(u: &QuditMatrix, s: Subspace) -> Option<NativeSequence> {
    let (a, b) = s.levels();
    let spec = 3 - a - b;
    for k in 0..3 {
        if k != spec && (u[(spec, k)].norm() > 1e-12 || u[(k, spec)].norm() > 1e-12) {
            return None;
        }
    }
    let (u00, u01, u10, u11) = (u[(a, a)], u[(a, b)], u[(b, a)], u[(b, b)]);
    let theta = 2.0 * u10.norm().atan2(u00.norm());
    // Block ∝ U(θ, φ, λ) up to a block phase; fix that phase afterwards.
    let g = arg_or_zero(u00);
    let (phi, lambda) = if u10.norm() < 1e-13 {
        (arg_or_zero(u11) - g, 0.0)
    } else if u00.norm() < 1e-13 {
        let lambda = arg_or_zero(u01) + FRAC_PI_2;
        (arg_or_zero(u10) + FRAC_PI_2 - 0.0, lambda)
    } else {
        (u10.arg() + FRAC_PI_2 - g, u01.arg() + FRAC_PI_2 - g)
    };
    let mut seq = y_like(theta, phi, lambda, s);
    let fix = left_diagonal_fix(&seq.unitary(), u)?;
    seq.gates.extend(fix);
    let seq = optimize_sequence(&seq);
    seq.verifies(u, VERIFY_TOL).then_some(seq)
}

// ZXZXZ with the π/2 and π special cases folded into single pulses.
fn y_like(theta: f64, phi: f64, lambda: f64, s: Subspace) -> NativeSequence {
    let t = wrap_angle(theta);
    if t.abs() < ANGLE_EPS {
        return NativeSequence::new(vec![NativeGate::virtual_z(s, phi + lambda)]);
    }
    if (t - FRAC_PI_2).abs() < ANGLE_EPS || (t - PI).abs() < ANGLE_EPS {
        // U(θ, φ, λ) = Z(φ) · R(θ, 0) · Z(λ) up to the block phase.
        return NativeSequence::new(vec![
            NativeGate::virtual_z(s, lambda),
            NativeGate::pulse(s, t, 0.0),
            NativeGate::virtual_z(s, phi),
        ]);
    }
    zxzxz(theta, phi, lambda, s)
}

/// A single `π` pulse about `X` on `subspace`, followed by the virtual Z on
/// the other drive that makes it a Clifford element. The bare pulse leaves a
/// `−i` phase on the driven block relative to the spectator level.
pub fn pi_pulse_clifford(subspace: Subspace) -> NativeSequence {
    let fix = match subspace {
        Subspace::S01 => NativeGate::virtual_z(Subspace::S12, -FRAC_PI_2),
        Subspace::S12 => NativeGate::virtual_z(Subspace::S01, FRAC_PI_2),
    };
    NativeSequence::new(vec![NativeGate::pulse(subspace, PI, 0.0), fix])
}

/// Product `Y⁽¹²⁾(π/2) · Y⁽⁰¹⁾(α) · diag(1, −1, −i) · Y⁽¹²⁾(π/2) · diag(1, 1, −1)`,
/// the fixed Hadamard construction.
pub fn hadamard_recipe_matrix(alpha: f64) -> QuditMatrix {
    let one = C64::new(1.0, 0.0);
    let d_mid = QuditMatrix::from_diagonal(&[one, -one, C64::new(0.0, -1.0)]).expect("dim 3");
    let d_last = QuditMatrix::from_diagonal(&[one, one, -one]).expect("dim 3");
    let y12 = y_rotation_matrix(FRAC_PI_2, Subspace::S12);
    let y01 = y_rotation_matrix(alpha, Subspace::S01);
    &(&(&(&y12 * &y01) * &d_mid) * &y12) * &d_last
}

/// Solves for the `Y⁽⁰¹⁾` angle in [`hadamard_recipe_matrix`] by bisection on
/// `|M₀₀|² = 1/3` over `(0, π)`, where `|M₀₀|` falls monotonically.
pub fn solve_hadamard_angle() -> f64 {
    let f = |a: f64| hadamard_recipe_matrix(a)[(0, 0)].norm_sqr() - 1.0 / 3.0;
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The fixed four-pulse Hadamard program built from [`hadamard_recipe_matrix`].
pub fn hadamard_fixed_sequence() -> Result<NativeSequence> {
    let alpha = solve_hadamard_angle();
    let mut seq = NativeSequence::default();
    seq.gates.push(NativeGate::virtual_z(Subspace::S12, PI));
    seq.extend(&y_rotation(FRAC_PI_2, Subspace::S12));
    // diag(1, −1, −i)
    seq.gates.extend(diagonal_to_virtual_z(PI, -FRAC_PI_2));
    seq.extend(&zxzxz(alpha, FRAC_PI_2, -FRAC_PI_2, Subspace::S01));
    seq.extend(&y_rotation(FRAC_PI_2, Subspace::S12));
    if !seq.verifies(&hadamard(), VERIFY_TOL) {
        return Err(Error::Decomposition(format!(
            "fixed Hadamard recipe off by {:.3e}",
            global_phase_distance(&seq.unitary(), &hadamard())
        )));
    }
    Ok(seq)
}
