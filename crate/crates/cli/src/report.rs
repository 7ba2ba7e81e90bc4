//! Running a plan and turning its records into output files.
//!
//! `decays.csv` holds one row per channel and depth with the columns
//! `channel,depth,value_re,value_im,stderr,n`. Rows follow the record order of
//! each protocol and depths ascend within a channel. Floats are written in
//! shortest round-trip form, so a rerun with the same config is byte-identical.

use qutrit_rb::estimator::{
    bootstrap_sigma_p, error_per_clifford, error_per_clifford_sigma, fit_leakage, interleaved_gate_error,
    interleaved_gate_error_sigma, FitOptions,
};
use qutrit_rb::protocols::{
    run_cycle_benchmarking, run_interleaved_rb, run_qubit_like_rb, run_qutrit_rb, run_simultaneous_rb,
    summarize_cb, RbVariant,
};
use qutrit_rb::{DecayFit, DecayRecord, Error, FitModel, NoiseModel};
use serde_json::{json, Value};

use crate::config::Plan;
use crate::CliError;

const BOOTSTRAP_RESAMPLES: usize = 200;

pub struct Outcome {
    pub summary: Value,
    pub records: Vec<DecayRecord>,
}

fn classify(e: Error) -> CliError {
    match e {
        Error::Fit(_) | Error::DegenerateData(_) | Error::MissingChannels(_) => CliError::Fit(e.to_string()),
        Error::Plan(_) => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn fit(record: &DecayRecord, model: FitModel) -> Result<DecayFit, CliError> {
    record
        .fit(model)
        .map_err(|e| CliError::Fit(format!("{}: {e}", record.channel_id)))
}

fn fit_json(record: &DecayRecord, model: FitModel, d: usize, bootstrap: Option<u64>) -> Result<(DecayFit, Value), CliError> {
    let f = fit(record, model)?;
    let mut v = json!({
        "A": f.a,
        "p": f.p,
        "B": f.b,
        "sigma_p": f.sigma_p,
        "residual_norm": f.residual_norm,
        "reduced_chi2": f.reduced_chi2,
        "flat": f.flat,
        "r": error_per_clifford(f.p, d),
        "sigma_r": error_per_clifford_sigma(f.sigma_p, d),
    });
    if let Some(seed) = bootstrap {
        let depths: Vec<f64> = record.points.iter().map(|p| p.depth as f64).collect();
        let samples: Vec<Vec<f64>> = record.points.iter().map(|p| p.samples.clone()).collect();
        let opts = FitOptions { model, ..Default::default() };
        let s = bootstrap_sigma_p(&depths, &samples, &opts, BOOTSTRAP_RESAMPLES, seed).map_err(classify)?;
        v["sigma_p_bootstrap"] = json!(s);
    }
    Ok((f, v))
}

fn max_imag_sigmas(record: &DecayRecord) -> f64 {
    record
        .points
        .iter()
        .filter(|p| p.stderr_im > 0.0)
        .map(|p| p.value_im.abs() / p.stderr_im)
        .fold(0.0, f64::max)
}

/// Runs the plan against the built-in simulator and fits every record.
pub fn execute(plan: &Plan, noise: &NoiseModel, bootstrap: bool, seed: u64) -> Result<Outcome, CliError> {
    let boot = bootstrap.then_some(seed);
    match plan {
        Plan::Rb(p) => match &p.variant {
            RbVariant::Qutrit => {
                let r = run_qutrit_rb(p, noise).map_err(classify)?;
                let (_, z) = fit_json(&r.z, FitModel::WithOffset, 3, boot)?;
                let mut records = vec![r.z.clone()];
                records.extend(r.populations.iter().cloned());
                Ok(Outcome {
                    summary: json!({
                        "protocol": "rb_qutrit",
                        "dimension": 3,
                        "fit": z,
                        "max_imag_z_sigmas": max_imag_sigmas(&r.z),
                    }),
                    records,
                })
            }
            RbVariant::QubitLike { subspace } => {
                let r = run_qubit_like_rb(p, noise).map_err(classify)?;
                let (_, s) = fit_json(&r.survival, FitModel::WithOffset, 2, boot)?;
                let leak = fit_leakage(&r.leakage.fit_points()).map_err(classify)?;
                Ok(Outcome {
                    summary: json!({
                        "protocol": "rb_qubit_like",
                        "subspace": subspace.label(),
                        "dimension": 2,
                        "fit": s,
                        "leakage": {
                            "p_l": leak.p_l,
                            "sigma": leak.sigma,
                            "rate": leak.rate,
                            "no_leakage": leak.no_leakage,
                        },
                    }),
                    records: vec![r.survival, r.leakage],
                })
            }
            RbVariant::Interleaved { .. } => {
                let r = run_interleaved_rb(p, noise).map_err(classify)?;
                let (fr, jr) = fit_json(&r.reference, FitModel::WithOffset, 3, boot)?;
                let (fi, ji) = fit_json(&r.interleaved, FitModel::WithOffset, 3, boot)?;
                let r_gate = interleaved_gate_error(fi.p, fr.p, 3).map_err(classify)?;
                Ok(Outcome {
                    summary: json!({
                        "protocol": "rb_interleaved",
                        "gate": r.gate,
                        "gate_index": r.gate_index,
                        "reference": jr,
                        "interleaved": ji,
                        "r_gate": r_gate,
                        "sigma_r_gate": interleaved_gate_error_sigma(fi.p, fi.sigma_p, fr.p, fr.sigma_p, 3),
                    }),
                    records: vec![r.reference, r.interleaved],
                })
            }
            RbVariant::Simultaneous { qutrits } => {
                let r = run_simultaneous_rb(p, noise).map_err(classify)?;
                let mut per_qutrit = Vec::new();
                for q in 0..*qutrits {
                    let (_, iso) = fit_json(&r.isolated[q], FitModel::WithOffset, 3, boot)?;
                    let (_, sim) = fit_json(&r.simultaneous[q], FitModel::WithOffset, 3, boot)?;
                    per_qutrit.push(json!({ "qutrit": q, "isolated": iso, "simultaneous": sim }));
                }
                let mut records = r.isolated;
                records.extend(r.simultaneous);
                Ok(Outcome {
                    summary: json!({ "protocol": "rb_simultaneous", "qutrits": per_qutrit }),
                    records,
                })
            }
        },
        Plan::Cb(p) => {
            let r = run_cycle_benchmarking(p, noise).map_err(classify)?;
            let s = summarize_cb(&r).map_err(classify)?;
            let channels: serde_json::Map<String, Value> = s
                .channel_fits
                .iter()
                .map(|(k, f)| (k.clone(), json!({ "A": f.a, "p": f.p, "sigma_p": f.sigma_p, "flat": f.flat })))
                .collect();
            Ok(Outcome {
                summary: json!({
                    "protocol": "cycle_benchmarking",
                    "cycle": r.cycle,
                    "process_fidelity": s.process_fidelity,
                    "process_infidelity": s.process_infidelity,
                    "average_gate_fidelity": s.average_gate_fidelity,
                    "max_conjugate_deviation": r.max_conjugate_deviation,
                    "channels": channels,
                }),
                records: r.channels,
            })
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn decays_csv(records: &[DecayRecord]) -> String {
    let mut out = String::from("channel,depth,value_re,value_im,stderr,n\n");
    for r in records {
        for p in &r.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&r.channel_id),
                p.depth,
                p.value_re,
                p.value_im,
                p.stderr,
                p.n
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use qutrit_rb::DecayPoint;

    #[test]
    fn csv_layout() {
        let rec = DecayRecord {
            channel_id: "Z".into(),
            points: vec![DecayPoint {
                depth: 2,
                value_re: 0.5,
                value_im: -0.0625,
                stderr: 0.01,
                stderr_im: 0.02,
                n: 30,
                samples: vec![],
            }],
        };
        assert_eq!(
            decays_csv(&[rec]),
            "channel,depth,value_re,value_im,stderr,n\nZ,2,0.5,-0.0625,0.01,30\n"
        );
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }
}
