//! Shared fixtures for the benchmarks.

use qutrit_rb::estimator::FitPoint;
use qutrit_rb::protocols::{compiled_clifford_table, gen_rb_sequence, rb_circuit};
use qutrit_rb::Circuit;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A single-qutrit RB circuit of `depth` random Cliffords plus inversion.
pub fn rb_fixture(depth: usize, seed: u64) -> Circuit {
    let table = compiled_clifford_table().expect("table compiles");
    let (seq, inv) = gen_rb_sequence(depth, table, &mut ChaCha8Rng::seed_from_u64(seed));
    rb_circuit(table, &seq, inv, 0, 1).expect("valid circuit")
}

/// Two-qutrit simultaneous RB circuit at `depth`.
pub fn simultaneous_fixture(depth: usize, seed: u64) -> Circuit {
    let table = compiled_clifford_table().expect("table compiles");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let streams: Vec<_> = (0..2).map(|_| gen_rb_sequence(depth, table, &mut rng)).collect();
    qutrit_rb::protocols::simultaneous_rb_circuit(table, &streams).expect("valid circuit")
}

/// Noise-free points of `0.5·0.97^m + 0.33` on a typical depth ladder.
pub fn decay_fixture() -> Vec<FitPoint> {
    [2.0, 8.0, 32.0, 128.0, 512.0]
        .iter()
        .map(|&m| FitPoint::from_stderr(m, 0.5 * 0.97f64.powf(m) + 0.33, 0.005))
        .collect()
}
