//! Summary statistics over run sets: percentile-bootstrap confidence
//! intervals, Cohen's d effect sizes, and per-policy summaries.
//!
//! Bootstrap contract (stable; an independent implementation following this
//! paragraph reproduces the output bit for bit):
//!
//! 1. Sort the input samples ascending, so the interval does not depend on
//!    sample order.
//! 2. For resample `b` in `0..B`, seed a ChaCha8 stream with
//!    `stream_seed(seed, DOMAIN_BOOTSTRAP, 0, b, 0)` and draw `n` indices as
//!    `floor(u * n)` where `u = ((next_u64() >> 12) + 0.5) * 2^-52`. The
//!    resample statistic is the plain left-to-right mean of the indexed
//!    values.
//! 3. Sort the `B` resample means and read the `(1 - level)/2` and
//!    `(1 + level)/2` empirical quantiles with linear interpolation between
//!    closest order statistics (`h = q * (B - 1)`; interpolate between
//!    `floor(h)` and `floor(h) + 1`).
//!
//! Resamples may be computed in parallel; each has its own substream, so the
//! result does not depend on scheduling.

use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, stream_seed, u64_to_open01, DOMAIN_BOOTSTRAP, DOMAIN_SUMMARY};
use crate::simulate::RunMap;

/// A two-sided bootstrap confidence interval for a sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Confidence level as a fraction, e.g. 0.95.
    pub level: f64,
    pub resamples: u64,
}

/// Table-1-shaped per-policy summary.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy_id: String,
    pub mean_sfq: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// Cohen's d against the baseline policy (0 for the baseline itself).
    pub effect_vs_baseline: f64,
    pub run_sd: f64,
    pub n_runs: u64,
}

/// Left-to-right arithmetic mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    sample_variance(values).sqrt()
}

fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Type-7 quantile: linear interpolation between closest order statistics.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = q * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let g = h - lo as f64;
    sorted[lo] + g * (sorted[lo + 1] - sorted[lo])
}

/// Percentile bootstrap CI for the mean of `samples`.
pub fn bootstrap_ci(samples: &[f64], level: f64, resamples: u64, seed: u64) -> Result<ConfidenceInterval> {
    if samples.len() < 2 {
        return Err(Error::invalid("samples", format!("need >= 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples", "must be finite"));
    }
    if !(level.is_finite() && 0.0 < level && level < 1.0) {
        return Err(Error::invalid("level", format!("must be in (0, 1), got {level}")));
    }
    if resamples < 1 {
        return Err(Error::invalid("resamples", "must be >= 1"));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len();

    let mut means: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(stream_seed(seed, DOMAIN_BOOTSTRAP, 0, b, 0));
            let mut acc = 0.0;
            for _ in 0..n {
                let idx = (u64_to_open01(rng.next_u64()) * n as f64) as usize;
                acc += sorted[idx];
            }
            acc / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite means"));

    let q_lo = (1.0 - level) / 2.0;
    let q_hi = (1.0 + level) / 2.0;
    Ok(ConfidenceInterval {
        lower: quantile_sorted(&means, q_lo),
        upper: quantile_sorted(&means, q_hi),
        level,
        resamples,
    })
}

/// Cohen's d with pooled standard deviation:
/// `(mean(t) - mean(c)) / sqrt(((n_t - 1) s_t^2 + (n_c - 1) s_c^2) / (n_t + n_c - 2))`.
///
/// Errors when both samples are constant (zero pooled variance) rather than
/// returning an infinity; that always signals a degenerate configuration.
pub fn cohens_d(treatment: &[f64], control: &[f64]) -> Result<f64> {
    if treatment.len() < 2 || control.len() < 2 {
        return Err(Error::invalid("samples", "Cohen's d needs >= 2 values per group"));
    }
    let (n_t, n_c) = (treatment.len() as f64, control.len() as f64);
    let pooled_var =
        ((n_t - 1.0) * sample_variance(treatment) + (n_c - 1.0) * sample_variance(control)) / (n_t + n_c - 2.0);
    if pooled_var == 0.0 {
        return Err(Error::ZeroPooledVariance);
    }
    Ok((mean(treatment) - mean(control)) / pooled_var.sqrt())
}

/// Summarize a run set per policy, in the map's (catalog) order.
///
/// Each policy's bootstrap runs on its own substream derived from `seed` and
/// the policy's position, so summaries are deterministic and independent of
/// which policies share a run set.
pub fn summarize(runs: &RunMap, baseline_id: &str, level: f64, resamples: u64, seed: u64) -> Result<Vec<PolicySummary>> {
    let baseline_runs = runs
        .get(baseline_id)
        .ok_or_else(|| Error::invalid("baseline", format!("policy `{baseline_id}` not in run set")))?;
    let baseline_sfq: Vec<f64> = baseline_runs.iter().map(|r| r.sfq).collect();

    let mut summaries = Vec::with_capacity(runs.len());
    for (policy_index, (policy_id, policy_runs)) in runs.iter().enumerate() {
        if policy_runs.len() < 2 {
            return Err(Error::invalid(
                format!("runs[{policy_id}]"),
                format!("need >= 2 runs, got {}", policy_runs.len()),
            ));
        }
        let sfq: Vec<f64> = policy_runs.iter().map(|r| r.sfq).collect();
        let ci = bootstrap_ci(&sfq, level, resamples, stream_seed(seed, DOMAIN_SUMMARY, policy_index as u64, 0, 0))?;
        let effect = if policy_id == baseline_id { 0.0 } else { cohens_d(&sfq, &baseline_sfq)? };
        summaries.push(PolicySummary {
            policy_id: policy_id.clone(),
            mean_sfq: mean(&sfq),
            ci_lower: ci.lower,
            ci_upper: ci.upper,
            effect_vs_baseline: effect,
            run_sd: sample_sd(&sfq),
            n_runs: sfq.len() as u64,
        });
    }
    Ok(summaries)
}

/// Write the summary CSV in report column order. Machine output keeps full
/// float precision (shortest round-trip rendering).
pub fn write_summary_csv<W: Write>(out: &mut W, summaries: &[PolicySummary]) -> std::io::Result<()> {
    writeln!(out, "policy,mean,ci_lower,ci_upper,effect_d")?;
    for s in summaries {
        writeln!(out, "{},{},{},{},{}", s.policy_id, s.mean_sfq, s.ci_lower, s.ci_upper, s.effect_vs_baseline)?;
    }
    Ok(())
}

/// Render the human report table: 3-decimal floats, one row per policy.
pub fn format_summary_table(summaries: &[PolicySummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<28} {:>7} {:>9} {:>9} {:>9}\n", "policy", "mean", "ci_lower", "ci_upper", "effect_d"));
    for s in summaries {
        out.push_str(&format!(
            "{:<28} {:>7.3} {:>9.3} {:>9.3} {:>9.3}\n",
            s.policy_id, s.mean_sfq, s.ci_lower, s.ci_upper, s.effect_vs_baseline
        ));
    }
    out
}
