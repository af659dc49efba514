//! Catalog calibration: fit the free policy parameters to target score
//! means and a target per-run score dispersion.
//!
//! Free parameters are each policy's component deltas and per-scenario
//! effectiveness values plus the global `run_noise_multiplier`. Baselines,
//! bounds, weights, and scenario prevalences are never touched.
//!
//! The search is a deterministic cyclic coordinate descent with per-
//! parameter step halving. Parameters are visited in a fixed order — for
//! each policy in catalog order: latency delta, failure delta, prompt
//! delta, ticket delta, then effectiveness per scenario in scenario order —
//! and finally the noise multiplier; the first improving candidate
//! (`+step`, then `-step`) is accepted, otherwise the step halves. Every
//! candidate respects its physical box: `baseline + delta` stays inside the
//! clamp bounds, effectiveness inside [0, 1], multiplier nonnegative.
//!
//! Candidate evaluation replays exactly the noise draws the simulator would
//! make for the config's master seed (common random numbers), so the
//! objective is a deterministic function of the parameters and the fitted
//! config reproduces the reported residuals when simulated with the same
//! seed.
//!
//! The objective is least squares: `sum_p ((mean_p - target_p) * 1000)^2`
//! plus, when a dispersion target is given,
//! `sum_p (ln(sd_p / target_sd) * 20.5)^2` (one unit ~ 0.001 mean error or
//! ~5% dispersion error). Fitted parameters are rounded to 9 significant
//! digits so the emitted config file carries them exactly.

use indexmap::IndexMap;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;
use std::collections::BTreeMap;

use crate::catalog::SimulationConfig;
use crate::error::{Error, Result};
use crate::format::round_sig9;
use crate::metric::EffectivenessVector;
use crate::simulate::{NoiseComponent, SeedPlan};

/// Acceptable absolute error on each policy's mean score.
pub const MEAN_TOLERANCE: f64 = 0.005;
/// Acceptable relative error on the mean per-run score dispersion.
pub const SD_RELATIVE_TOLERANCE: f64 = 0.15;

const MEAN_SCALE: f64 = 1000.0;
const SD_SCALE: f64 = 20.5;
const MAX_SWEEPS: usize = 240;
const STEP_FLOOR: f64 = 1e-9;

/// Calibration targets: a mean score per policy and an optional per-run
/// score standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTargets {
    pub means: IndexMap<String, f64>,
    pub run_sd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargets {
    run_sd: Option<f64>,
    means: BTreeMap<String, f64>,
}

impl CalibrationTargets {
    /// Parse the targets TOML: an optional top-level `run_sd` plus a
    /// `[means]` table mapping policy ids to target means.
    pub fn parse(source: &str) -> Result<Self> {
        let raw: RawTargets = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
        let targets = CalibrationTargets { means: raw.means.into_iter().collect(), run_sd: raw.run_sd };
        targets.validate_values()?;
        Ok(targets)
    }

    fn validate_values(&self) -> Result<()> {
        for (id, t) in &self.means {
            if !(t.is_finite() && (0.0..=1.0).contains(t)) {
                return Err(Error::invalid(format!("targets[{id}]"), format!("must be in [0, 1], got {t}")));
            }
        }
        if let Some(sd) = self.run_sd {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::invalid("run_sd", format!("must be >= 0, got {sd}")));
            }
        }
        Ok(())
    }

    fn validate_against(&self, config: &SimulationConfig) -> Result<()> {
        self.validate_values()?;
        for p in &config.policies {
            if !self.means.contains_key(&p.id) {
                return Err(Error::invalid("targets", format!("missing target for policy `{}`", p.id)));
            }
        }
        for id in self.means.keys() {
            if config.policy_index(id).is_none() {
                return Err(Error::invalid("targets", format!("unknown policy `{id}`")));
            }
        }
        Ok(())
    }
}

/// Result of a calibration run. The fitted config is returned whether or
/// not the fit reached tolerance; `within_tolerance` says which.
#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub config: SimulationConfig,
    /// Signed residual `mean - target` per policy, catalog order.
    pub mean_residuals: IndexMap<String, f64>,
    /// Per-run score standard deviation per policy, catalog order.
    pub per_policy_sd: IndexMap<String, f64>,
    /// Mean of the per-policy standard deviations.
    pub achieved_run_sd: f64,
    pub target_run_sd: Option<f64>,
    pub within_tolerance: bool,
    pub sweeps: usize,
    pub objective: f64,
}

#[derive(Debug, Clone)]
struct PolicyParams {
    delta: [f64; 4],
    effectiveness: Vec<f64>,
}

struct Fitter {
    /// Cached standard-normal draws per (policy, run, component), identical
    /// to what the simulator draws for this config's master seed.
    z: Vec<Vec<[f64; 4]>>,
    runs: usize,
    base: [f64; 4],
    lo: [f64; 4],
    hi: [f64; 4],
    sigma: [f64; 4],
    weights: [f64; 5],
    prevalence: Vec<f64>,
    delta_lo: [f64; 4],
    delta_hi: [f64; 4],
    targets: Vec<f64>,
    sd_target: Option<f64>,
}

impl Fitter {
    fn new(config: &SimulationConfig, targets: &CalibrationTargets) -> Self {
        let plan = SeedPlan::new(config.master_seed);
        let runs = config.runs_per_policy as usize;
        let components =
            [NoiseComponent::Latency, NoiseComponent::Failure, NoiseComponent::Prompts, NoiseComponent::Tickets];
        let z: Vec<Vec<[f64; 4]>> = (0..config.policies.len())
            .map(|p| {
                (0..runs as u64)
                    .map(|j| {
                        let mut draws = [0.0; 4];
                        for (k, component) in components.iter().enumerate() {
                            let mut rng = plan.component_noise_rng(p, j, *component);
                            draws[k] = StandardNormal.sample(&mut rng);
                        }
                        draws
                    })
                    .collect()
            })
            .collect();

        let b = &config.baseline;
        let bounds = &config.bounds;
        let pairs = [
            bounds.latency_s,
            bounds.failure_pct,
            bounds.prompts_per_user_week,
            bounds.tickets_per_100_week,
        ];
        let base = [b.latency_median(), b.failure_pct, b.prompts_per_user_week, b.tickets_per_100_week];
        let lo = [pairs[0].lo(), pairs[1].lo(), pairs[2].lo(), pairs[3].lo()];
        let hi = [pairs[0].hi(), pairs[1].hi(), pairs[2].hi(), pairs[3].hi()];
        let mut delta_lo = [0.0; 4];
        let mut delta_hi = [0.0; 4];
        for k in 0..4 {
            delta_lo[k] = lo[k] - base[k];
            delta_hi[k] = hi[k] - base[k];
        }

        Fitter {
            z,
            runs,
            base,
            lo,
            hi,
            sigma: [config.noise.sigma_l, config.noise.sigma_f, config.noise.sigma_p, config.noise.sigma_h],
            weights: config.weights.as_array(),
            prevalence: config.scenarios.prevalence().to_vec(),
            delta_lo,
            delta_hi,
            targets: config.policies.iter().map(|p| targets.means[&p.id]).collect(),
            sd_target: targets.run_sd,
        }
    }

    /// Mean and sample standard deviation of the policy's score over the
    /// cached draws; the arithmetic mirrors the aggregate simulator exactly.
    fn policy_stats(&self, policy: usize, params: &PolicyParams, multiplier: f64) -> (f64, f64) {
        let risk: f64 = self
            .prevalence
            .iter()
            .zip(params.effectiveness.iter())
            .map(|(pi, e)| pi * (1.0 - e))
            .sum::<f64>()
            .clamp(0.0, 1.0);
        let risk_term = 1.0 - risk;

        let mut scores = Vec::with_capacity(self.runs);
        for draws in &self.z[policy] {
            let mut terms = [0.0; 5];
            for k in 0..4 {
                let value =
                    (self.base[k] + params.delta[k] + multiplier * self.sigma[k] * draws[k]).clamp(self.lo[k], self.hi[k]);
                terms[k] = (value - self.lo[k]) / (self.hi[k] - self.lo[k]);
            }
            terms[4] = risk_term;
            let mut acc = 0.0;
            for k in 0..5 {
                acc += self.weights[k] * terms[k];
            }
            scores.push(acc.clamp(0.0, 1.0));
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (scores.len() as f64 - 1.0);
        (mean, var.sqrt())
    }

    fn policy_objective(&self, policy: usize, stats: (f64, f64)) -> f64 {
        let mean_term = (stats.0 - self.targets[policy]) * MEAN_SCALE;
        let mut obj = mean_term * mean_term;
        if let Some(sd_t) = self.sd_target {
            if sd_t > 0.0 {
                let sd_term = (stats.1.max(1e-12) / sd_t).ln() * SD_SCALE;
                obj += sd_term * sd_term;
            } else {
                let sd_term = stats.1 * MEAN_SCALE;
                obj += sd_term * sd_term;
            }
        }
        obj
    }

    fn meets_internal_tolerance(&self, stats: &[(f64, f64)]) -> bool {
        let means_ok = stats
            .iter()
            .zip(self.targets.iter())
            .all(|((mean, _), t)| (mean - t).abs() <= 0.25 * MEAN_TOLERANCE);
        if !means_ok {
            return false;
        }
        match self.sd_target {
            None => true,
            Some(sd_t) if sd_t == 0.0 => stats.iter().all(|(_, sd)| *sd <= 1e-9),
            Some(sd_t) => {
                let avg_sd = stats.iter().map(|(_, sd)| sd).sum::<f64>() / stats.len() as f64;
                let each_ok = stats.iter().all(|(_, sd)| (sd.max(1e-12) / sd_t).ln().abs() <= 0.08f64.ln_1p());
                each_ok && ((avg_sd / sd_t).ln().abs() <= 0.02f64.ln_1p())
            }
        }
    }
}

fn extract_params(config: &SimulationConfig) -> Vec<PolicyParams> {
    config
        .policies
        .iter()
        .map(|p| PolicyParams {
            delta: [
                p.delta.latency_s,
                p.delta.failure_pct,
                p.delta.prompts_per_user_week,
                p.delta.tickets_per_100_week,
            ],
            effectiveness: config
                .scenarios
                .ids()
                .iter()
                .map(|id| p.effectiveness.get(id).expect("validated config"))
                .collect(),
        })
        .collect()
}

fn apply_params(config: &mut SimulationConfig, params: &[PolicyParams], multiplier: f64) {
    for (p, pp) in config.policies.iter_mut().zip(params.iter()) {
        p.delta.latency_s = pp.delta[0];
        p.delta.failure_pct = pp.delta[1];
        p.delta.prompts_per_user_week = pp.delta[2];
        p.delta.tickets_per_100_week = pp.delta[3];
        p.effectiveness = EffectivenessVector::new(
            config
                .scenarios
                .ids()
                .iter()
                .zip(pp.effectiveness.iter())
                .map(|(id, e)| (id.clone(), *e))
                .collect(),
        )
        .expect("fitted effectiveness respects [0, 1]");
    }
    config.noise.run_noise_multiplier = multiplier;
}

/// Fit policy deltas, effectiveness values, and the run-noise multiplier so
/// simulated per-policy mean scores reach the targets and (optionally) the
/// per-run score dispersion reaches `run_sd`.
pub fn fit_to_targets(config: &SimulationConfig, targets: &CalibrationTargets) -> Result<CalibrationOutcome> {
    config.validate()?;
    targets.validate_against(config)?;

    let fitter = Fitter::new(config, targets);
    let policy_count = config.policies.len();
    let scenario_count = config.scenarios.len();

    let mut params = extract_params(config);
    let mut multiplier = config.noise.run_noise_multiplier;
    // When a dispersion target of exactly zero is requested, only a zero
    // multiplier can reach it; pin it and let the descent fix the means.
    if targets.run_sd == Some(0.0) {
        multiplier = 0.0;
    }

    let mut stats: Vec<(f64, f64)> = (0..policy_count).map(|p| fitter.policy_stats(p, &params[p], multiplier)).collect();
    let mut obj_terms: Vec<f64> = (0..policy_count).map(|p| fitter.policy_objective(p, stats[p])).collect();

    let mut delta_steps = vec![[0.4, 0.8, 0.3, 1.6]; policy_count];
    let mut eff_steps = vec![vec![0.08; scenario_count]; policy_count];
    let mut multiplier_step = 2.0;

    let mut sweeps = 0;
    for sweep in 0..MAX_SWEEPS {
        sweeps = sweep + 1;
        if fitter.meets_internal_tolerance(&stats) {
            break;
        }
        let mut improved = false;

        for p in 0..policy_count {
            // Component deltas, then effectiveness per scenario.
            for k in 0..4 {
                let step = delta_steps[p][k];
                let current = params[p].delta[k];
                let mut accepted = false;
                for dir in [1.0, -1.0] {
                    let candidate = (current + dir * step).clamp(fitter.delta_lo[k], fitter.delta_hi[k]);
                    if candidate == current {
                        continue;
                    }
                    let mut trial = params[p].clone();
                    trial.delta[k] = candidate;
                    let trial_stats = fitter.policy_stats(p, &trial, multiplier);
                    let trial_obj = fitter.policy_objective(p, trial_stats);
                    if trial_obj + 1e-12 < obj_terms[p] {
                        params[p] = trial;
                        stats[p] = trial_stats;
                        obj_terms[p] = trial_obj;
                        accepted = true;
                        improved = true;
                        break;
                    }
                }
                if !accepted {
                    delta_steps[p][k] *= 0.5;
                }
            }
            for s in 0..scenario_count {
                let step = eff_steps[p][s];
                let current = params[p].effectiveness[s];
                let mut accepted = false;
                for dir in [1.0, -1.0] {
                    let candidate = (current + dir * step).clamp(0.0, 1.0);
                    if candidate == current {
                        continue;
                    }
                    let mut trial = params[p].clone();
                    trial.effectiveness[s] = candidate;
                    let trial_stats = fitter.policy_stats(p, &trial, multiplier);
                    let trial_obj = fitter.policy_objective(p, trial_stats);
                    if trial_obj + 1e-12 < obj_terms[p] {
                        params[p] = trial;
                        stats[p] = trial_stats;
                        obj_terms[p] = trial_obj;
                        accepted = true;
                        improved = true;
                        break;
                    }
                }
                if !accepted {
                    eff_steps[p][s] *= 0.5;
                }
            }
        }

        // Global noise multiplier last; it moves every policy.
        if fitter.sd_target.is_some() && targets.run_sd != Some(0.0) {
            let obj: f64 = obj_terms.iter().sum();
            let mut accepted = false;
            for dir in [1.0, -1.0] {
                let candidate = (multiplier + dir * multiplier_step).max(0.0);
                if candidate == multiplier {
                    continue;
                }
                let trial_stats: Vec<(f64, f64)> =
                    (0..policy_count).map(|p| fitter.policy_stats(p, &params[p], candidate)).collect();
                let trial_terms: Vec<f64> =
                    (0..policy_count).map(|p| fitter.policy_objective(p, trial_stats[p])).collect();
                if trial_terms.iter().sum::<f64>() + 1e-12 < obj {
                    multiplier = candidate;
                    stats = trial_stats;
                    obj_terms = trial_terms;
                    accepted = true;
                    improved = true;
                    break;
                }
            }
            if !accepted {
                multiplier_step *= 0.5;
            }
        }

        let steps_alive = delta_steps.iter().flatten().any(|s| *s > STEP_FLOOR)
            || eff_steps.iter().flatten().any(|s| *s > STEP_FLOOR)
            || multiplier_step > STEP_FLOOR;
        if !improved && !steps_alive {
            break;
        }
    }

    // Round to the config file's precision and re-measure, so reported
    // residuals are exactly what the emitted config reproduces.
    for pp in &mut params {
        for d in &mut pp.delta {
            *d = round_sig9(*d);
        }
        for e in &mut pp.effectiveness {
            *e = round_sig9(*e).clamp(0.0, 1.0);
        }
    }
    multiplier = round_sig9(multiplier).max(0.0);
    let final_stats: Vec<(f64, f64)> =
        (0..policy_count).map(|p| fitter.policy_stats(p, &params[p], multiplier)).collect();

    let mut fitted = config.clone();
    apply_params(&mut fitted, &params, multiplier);
    fitted.validate()?;

    let mean_residuals: IndexMap<String, f64> = fitted
        .policies
        .iter()
        .enumerate()
        .map(|(p, policy)| (policy.id.clone(), final_stats[p].0 - fitter.targets[p]))
        .collect();
    let per_policy_sd: IndexMap<String, f64> =
        fitted.policies.iter().enumerate().map(|(p, policy)| (policy.id.clone(), final_stats[p].1)).collect();
    let achieved_run_sd = final_stats.iter().map(|(_, sd)| sd).sum::<f64>() / policy_count as f64;

    let means_ok = mean_residuals.values().all(|r| r.abs() <= MEAN_TOLERANCE);
    let sd_ok = match targets.run_sd {
        None => true,
        Some(sd_t) if sd_t == 0.0 => achieved_run_sd <= 1e-9,
        Some(sd_t) => (achieved_run_sd / sd_t - 1.0).abs() <= SD_RELATIVE_TOLERANCE,
    };

    Ok(CalibrationOutcome {
        config: fitted,
        mean_residuals,
        per_policy_sd,
        achieved_run_sd,
        target_run_sd: targets.run_sd,
        within_tolerance: means_ok && sd_ok,
        sweeps,
        objective: (0..policy_count).map(|p| fitter.policy_objective(p, final_stats[p])).sum(),
    })
}
