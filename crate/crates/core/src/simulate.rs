//! Seeded Monte Carlo generation of per-run component aggregates.
//!
//! Two fidelity modes share one seeding contract:
//!
//! * **Aggregate** (default): each run draws the four friction components
//!   directly as `clamp(baseline + delta + multiplier * sigma * z, lo, hi)`
//!   with `z` standard normal. This is the mode all large-n analyses use.
//! * **Trace**: each run synthesizes event-level data (Poisson sign-ins,
//!   lognormal latencies, Bernoulli failures, Poisson prompts and tickets)
//!   and aggregates it. Used to validate that the configured baselines are
//!   self-consistent; at full catalog scale it is orders of magnitude more
//!   work for the same component-level statistics.
//!
//! The residual risk component carries no per-run noise in either mode; it
//! is the deterministic scenario-weighted index for the policy.
//!
//! Determinism: every random quantity draws from a [`SeedPlan`] substream
//! keyed by `(policy_index, run_index, component)`, so results are identical
//! for a given config no matter how many threads execute the runs. Floating
//! point reductions happen only on ordered, collected vectors.

use indexmap::IndexMap;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, LogNormal, Poisson, StandardNormal};
use rayon::prelude::*;
use std::io::Write;

use crate::catalog::{PolicyDefinition, SimulationConfig};
use crate::error::{Error, Result};
use crate::format::format_sig9;
use crate::metric::{
    compute_sfq, normalize, risk_index, NormalizationBounds, NormalizedComponents, RawComponents,
};
use crate::rng::{self, stream_rng, stream_seed};

/// Expected-event ceiling for a single cohort trace.
pub const TRACE_EVENT_BUDGET: u64 = 50_000_000;

/// Noise substream index per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseComponent {
    Latency = 0,
    Failure = 1,
    Prompts = 2,
    Tickets = 3,
}

/// Pure derivation of per-draw substreams from the master seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedPlan {
    master_seed: u64,
}

impl SeedPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Stream for one component's noise draw in one run.
    pub fn component_noise_rng(&self, policy_index: usize, run_index: u64, component: NoiseComponent) -> ChaCha8Rng {
        stream_rng(stream_seed(
            self.master_seed,
            rng::DOMAIN_COMPONENT_NOISE,
            policy_index as u64,
            run_index,
            component as u64,
        ))
    }

    /// Stream for one run's full event-level trace.
    pub fn trace_rng(&self, policy_index: usize, run_index: u64) -> ChaCha8Rng {
        stream_rng(stream_seed(self.master_seed, rng::DOMAIN_TRACE, policy_index as u64, run_index, 0))
    }

    /// The seed label recorded in a [`RunResult`].
    pub fn run_seed(&self, policy_index: usize, run_index: u64) -> u64 {
        stream_seed(self.master_seed, rng::DOMAIN_RUN_LABEL, policy_index as u64, run_index, 0)
    }
}

/// Simulation fidelity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimMode {
    #[default]
    Aggregate,
    Trace,
}

/// One Monte Carlo draw for one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy_id: String,
    pub raw: RawComponents,
    pub normalized: NormalizedComponents,
    pub sfq: f64,
    pub run_index: u64,
    pub seed: u64,
}

/// Run results per policy, in catalog order.
pub type RunMap = IndexMap<String, Vec<RunResult>>;

fn clamped_effective(base: f64, delta: f64, bounds: &crate::metric::ComponentBounds) -> f64 {
    bounds.clamp(base + delta)
}

/// Draw one aggregate-mode run: per-component Gaussian noise around the
/// policy-shifted baselines, clamped into the normalization bounds.
pub fn simulate_run_aggregate(config: &SimulationConfig, policy_index: usize, run_index: u64) -> RunResult {
    let policy = &config.policies[policy_index];
    let plan = SeedPlan::new(config.master_seed);
    let noise = &config.noise;
    let m = noise.run_noise_multiplier;

    let draw = |component: NoiseComponent, sigma: f64| -> f64 {
        let mut rng = plan.component_noise_rng(policy_index, run_index, component);
        let z: f64 = StandardNormal.sample(&mut rng);
        m * sigma * z
    };

    let base = &config.baseline;
    let bounds = &config.bounds;
    let latency = bounds
        .latency_s
        .clamp(base.latency_median() + policy.delta.latency_s + draw(NoiseComponent::Latency, noise.sigma_l));
    let failure = bounds
        .failure_pct
        .clamp(base.failure_pct + policy.delta.failure_pct + draw(NoiseComponent::Failure, noise.sigma_f));
    let prompts = bounds.prompts_per_user_week.clamp(
        base.prompts_per_user_week + policy.delta.prompts_per_user_week + draw(NoiseComponent::Prompts, noise.sigma_p),
    );
    let tickets = bounds.tickets_per_100_week.clamp(
        base.tickets_per_100_week + policy.delta.tickets_per_100_week + draw(NoiseComponent::Tickets, noise.sigma_h),
    );
    let risk = risk_index(&config.scenarios, &policy.effectiveness)
        .expect("validated config has matching scenario ids");

    finish_run(config, policy, policy_index, run_index, latency, failure, prompts, tickets, risk)
}

#[allow(clippy::too_many_arguments)]
fn finish_run(
    config: &SimulationConfig,
    policy: &PolicyDefinition,
    policy_index: usize,
    run_index: u64,
    latency: f64,
    failure: f64,
    prompts: f64,
    tickets: f64,
    risk: f64,
) -> RunResult {
    let raw = RawComponents::new(latency.max(f64::MIN_POSITIVE), failure, prompts, tickets, risk)
        .expect("clamped components are valid");
    let normalized = normalize(&raw, &config.bounds);
    let sfq = compute_sfq(&normalized, &config.weights);
    RunResult {
        policy_id: policy.id.clone(),
        raw,
        normalized,
        sfq,
        run_index,
        seed: SeedPlan::new(config.master_seed).run_seed(policy_index, run_index),
    }
}

/// Per-user-week event record in a cohort trace.
#[derive(Debug, Clone)]
pub struct UserWeekRecord {
    pub signin_count: u32,
    pub latencies: Vec<f64>,
    pub failure_count: u32,
    pub prompt_count: u32,
}

/// Event-level synthetic authentication data for one run.
#[derive(Debug, Clone)]
pub struct CohortTrace {
    pub users: u64,
    pub weeks: u64,
    pub user_weeks: Vec<UserWeekRecord>,
    /// Cohort-level ticket counts, one per week.
    pub weekly_tickets: Vec<u32>,
}

/// Generate one event-level cohort trace.
///
/// Effective rates are the policy-shifted baselines clamped into the
/// normalization bounds (so e.g. a negative failure shift cannot produce a
/// negative Bernoulli probability). The latency shift applies additively to
/// each lognormal draw, floored just above zero. Tickets arrive as one
/// cohort-level Poisson per week with mean `H * users / 100`.
pub fn simulate_cohort_trace(config: &SimulationConfig, policy_index: usize, seed: u64) -> Result<CohortTrace> {
    let base = &config.baseline;
    let policy = &config.policies[policy_index];
    let expected_events = base.cohort_size as f64 * base.horizon_weeks as f64 * base.signin_rate;
    if expected_events > TRACE_EVENT_BUDGET as f64 {
        return Err(Error::EventBudget { expected: expected_events, budget: TRACE_EVENT_BUDGET });
    }

    let bounds = &config.bounds;
    let failure_pct = clamped_effective(base.failure_pct, policy.delta.failure_pct, &bounds.failure_pct);
    let prompt_rate =
        clamped_effective(base.prompts_per_user_week, policy.delta.prompts_per_user_week, &bounds.prompts_per_user_week);
    let ticket_rate =
        clamped_effective(base.tickets_per_100_week, policy.delta.tickets_per_100_week, &bounds.tickets_per_100_week);
    let latency_shift = policy.delta.latency_s;

    let mut rng = stream_rng(seed);
    let signins = Poisson::new(base.signin_rate).expect("validated signin rate");
    let latency_dist = LogNormal::new(base.lognormal_mu, base.lognormal_sigma).expect("validated lognormal");
    let failure_dist = Bernoulli::new(failure_pct / 100.0).expect("clamped failure probability");
    // Poisson::new rejects a zero rate; treat it as "no events".
    let prompt_dist = if prompt_rate > 0.0 { Some(Poisson::new(prompt_rate).expect("clamped prompt rate")) } else { None };
    let cohort_ticket_rate = ticket_rate * base.cohort_size as f64 / 100.0;
    let ticket_dist =
        if cohort_ticket_rate > 0.0 { Some(Poisson::new(cohort_ticket_rate).expect("clamped ticket rate")) } else { None };

    let mut user_weeks = Vec::with_capacity((base.cohort_size * base.horizon_weeks) as usize);
    for _user in 0..base.cohort_size {
        for _week in 0..base.horizon_weeks {
            let signin_count = signins.sample(&mut rng) as u32;
            let mut latencies = Vec::with_capacity(signin_count as usize);
            let mut failure_count = 0u32;
            for _ in 0..signin_count {
                let latency: f64 = latency_dist.sample(&mut rng) + latency_shift;
                latencies.push(latency.max(1e-9));
                if failure_dist.sample(&mut rng) {
                    failure_count += 1;
                }
            }
            let prompt_count = match &prompt_dist {
                Some(d) => d.sample(&mut rng) as u32,
                None => 0,
            };
            user_weeks.push(UserWeekRecord { signin_count, latencies, failure_count, prompt_count });
        }
    }
    let weekly_tickets = (0..base.horizon_weeks)
        .map(|_| match &ticket_dist {
            Some(d) => d.sample(&mut rng) as u32,
            None => 0,
        })
        .collect();

    Ok(CohortTrace { users: base.cohort_size, weeks: base.horizon_weeks, user_weeks, weekly_tickets })
}

/// Median of a slice; even-length inputs average the two central order
/// statistics.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN latencies"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Reduce a trace to raw components. The risk index is model-derived, not
/// trace-derived, so the caller supplies it.
///
/// `L` = median of all latencies; `F` = 100 * failures / sign-ins;
/// `P` = prompts / (users * weeks); `H` = 100 * tickets / (users * weeks).
pub fn aggregate_trace(trace: &CohortTrace, risk: f64) -> Result<RawComponents> {
    let total_signins: u64 = trace.user_weeks.iter().map(|uw| uw.signin_count as u64).sum();
    if total_signins == 0 {
        return Err(Error::EmptyTrace);
    }
    let total_failures: u64 = trace.user_weeks.iter().map(|uw| uw.failure_count as u64).sum();
    let total_prompts: u64 = trace.user_weeks.iter().map(|uw| uw.prompt_count as u64).sum();
    let total_tickets: u64 = trace.weekly_tickets.iter().map(|t| *t as u64).sum();
    let user_weeks = (trace.users * trace.weeks) as f64;

    let mut latencies: Vec<f64> = trace.user_weeks.iter().flat_map(|uw| uw.latencies.iter().copied()).collect();
    let latency = median(&mut latencies);
    let failure_pct = 100.0 * total_failures as f64 / total_signins as f64;
    let prompts = total_prompts as f64 / user_weeks;
    let tickets = 100.0 * total_tickets as f64 / user_weeks;

    RawComponents::new(latency, failure_pct, prompts, tickets, risk)
}

fn simulate_run_trace(config: &SimulationConfig, policy_index: usize, run_index: u64) -> Result<RunResult> {
    let policy = &config.policies[policy_index];
    let plan = SeedPlan::new(config.master_seed);
    let trace = simulate_cohort_trace(config, policy_index, {
        let mut rng = plan.trace_rng(policy_index, run_index);
        rng.random::<u64>()
    })?;
    let risk = risk_index(&config.scenarios, &policy.effectiveness)
        .expect("validated config has matching scenario ids");
    let raw = aggregate_trace(&trace, risk)?;
    // Aggregates are clamped like any measured value before normalization.
    let bounds = &config.bounds;
    Ok(finish_run(
        config,
        policy,
        policy_index,
        run_index,
        bounds.latency_s.clamp(raw.latency_s),
        bounds.failure_pct.clamp(raw.failure_pct),
        bounds.prompts_per_user_week.clamp(raw.prompts_per_user_week),
        bounds.tickets_per_100_week.clamp(raw.tickets_per_100_week),
        raw.risk_index,
    ))
}

/// Run the full Monte Carlo study: `runs_per_policy` draws for every policy.
///
/// Runs execute in parallel; output is byte-identical for a given config
/// regardless of thread count, and run lists are ordered by run index.
pub fn run_monte_carlo(config: &SimulationConfig, mode: SimMode) -> Result<RunMap> {
    let n = config.runs_per_policy;
    let jobs: Vec<(usize, u64)> = (0..config.policies.len())
        .flat_map(|p| (0..n).map(move |j| (p, j)))
        .collect();
    let results: Result<Vec<RunResult>> = jobs
        .par_iter()
        .map(|&(p, j)| match mode {
            SimMode::Aggregate => Ok(simulate_run_aggregate(config, p, j)),
            SimMode::Trace => simulate_run_trace(config, p, j),
        })
        .collect();
    let results = results?;

    let mut map: RunMap = IndexMap::new();
    for policy in &config.policies {
        map.insert(policy.id.clone(), Vec::with_capacity(n as usize));
    }
    for run in results {
        map.get_mut(&run.policy_id).expect("jobs cover config policies").push(run);
    }
    for runs in map.values_mut() {
        runs.sort_by_key(|r| r.run_index);
    }
    Ok(map)
}

/// Recompute normalization bounds from the observed component ranges of a
/// run set (the opt-in "empirical" normalization mode).
///
/// Fails if any component is constant across all runs, since a degenerate
/// `lo == hi` interval cannot be normalized.
pub fn empirical_bounds(runs: &RunMap) -> Result<NormalizationBounds> {
    let mut mins = [f64::INFINITY; 4];
    let mut maxs = [f64::NEG_INFINITY; 4];
    for run in runs.values().flatten() {
        let vals = [
            run.raw.latency_s,
            run.raw.failure_pct,
            run.raw.prompts_per_user_week,
            run.raw.tickets_per_100_week,
        ];
        for k in 0..4 {
            mins[k] = mins[k].min(vals[k]);
            maxs[k] = maxs[k].max(vals[k]);
        }
    }
    let names = ["latency_s", "failure_pct", "prompts_per_user_week", "tickets_per_100_week"];
    let mut pairs = [None; 4];
    for k in 0..4 {
        pairs[k] = Some(crate::metric::ComponentBounds::new(mins[k], maxs[k]).map_err(|_| {
            Error::invalid(
                format!("bounds.{}", names[k]),
                format!("empirical range is degenerate (all observations equal {})", mins[k]),
            )
        })?);
    }
    Ok(NormalizationBounds {
        latency_s: pairs[0].unwrap(),
        failure_pct: pairs[1].unwrap(),
        prompts_per_user_week: pairs[2].unwrap(),
        tickets_per_100_week: pairs[3].unwrap(),
    })
}

/// Re-normalize and re-score a run set against different bounds.
pub fn renormalize_runs(runs: &RunMap, bounds: &NormalizationBounds, weights: &crate::metric::WeightVector) -> RunMap {
    runs.iter()
        .map(|(id, list)| {
            let list = list
                .iter()
                .map(|r| {
                    let normalized = normalize(&r.raw, bounds);
                    let sfq = compute_sfq(&normalized, weights);
                    RunResult { normalized, sfq, ..r.clone() }
                })
                .collect();
            (id.clone(), list)
        })
        .collect()
}

/// Write the raw-results CSV: one row per run, 9-significant-digit floats,
/// rows sorted by `(policy_id, run_index)`.
pub fn write_runs_csv<W: Write>(out: &mut W, runs: &RunMap) -> std::io::Result<()> {
    writeln!(out, "policy_id,run_index,latency_s,failure_pct,prompts,tickets,risk,sfq")?;
    let mut ids: Vec<&String> = runs.keys().collect();
    ids.sort();
    for id in ids {
        for run in &runs[id.as_str()] {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                run.policy_id,
                run.run_index,
                format_sig9(run.raw.latency_s),
                format_sig9(run.raw.failure_pct),
                format_sig9(run.raw.prompts_per_user_week),
                format_sig9(run.raw.tickets_per_100_week),
                format_sig9(run.raw.risk_index),
                format_sig9(run.sfq),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use approx::assert_relative_eq;

    fn zero_noise_config() -> SimulationConfig {
        let mut config = builtin_catalog();
        config.noise.run_noise_multiplier = 0.0;
        config.runs_per_policy = 2;
        config
    }

    fn zero_delta_policy(config: &mut SimulationConfig) {
        let p = &mut config.policies[0];
        p.delta = Default::default();
    }

    #[test]
    fn zero_noise_zero_delta_reproduces_baselines() {
        let mut config = zero_noise_config();
        zero_delta_policy(&mut config);
        let run = simulate_run_aggregate(&config, 0, 0);
        assert_relative_eq!(run.raw.latency_s, (-0.2f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(run.raw.latency_s, 0.8187, epsilon = 1e-4);
        assert_eq!(run.raw.failure_pct, 2.0);
        assert_eq!(run.raw.prompts_per_user_week, 0.30);
        assert_eq!(run.raw.tickets_per_100_week, 12.8);
    }

    #[test]
    fn negative_failure_shift_is_additive_then_clamped() {
        let mut config = zero_noise_config();
        config.policies[0].delta.failure_pct = -1.5;
        let run = simulate_run_aggregate(&config, 0, 0);
        assert_relative_eq!(run.raw.failure_pct, 0.5, epsilon = 1e-12);
        config.policies[0].delta.failure_pct = -3.0;
        let run = simulate_run_aggregate(&config, 0, 0);
        assert_eq!(run.raw.failure_pct, 0.0);
    }

    #[test]
    fn run_results_are_internally_consistent() {
        let config = builtin_catalog();
        for policy_index in 0..config.policies.len() {
            let run = simulate_run_aggregate(&config, policy_index, 17);
            let renorm = normalize(&run.raw, &config.bounds);
            assert_eq!(renorm, run.normalized);
            assert_eq!(compute_sfq(&renorm, &config.weights), run.sfq);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_and_ordered() {
        let mut config = builtin_catalog();
        config.runs_per_policy = 50;
        let a = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        let b = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        assert_eq!(a, b);
        for (_, runs) in &a {
            assert_eq!(runs.len(), 50);
            for (i, run) in runs.iter().enumerate() {
                assert_eq!(run.run_index, i as u64);
            }
        }
    }

    #[test]
    fn seed_change_changes_draws() {
        let mut config = builtin_catalog();
        config.runs_per_policy = 2;
        let a = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        config.master_seed = 43;
        let b = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn clamp_respected_under_extreme_noise() {
        let mut config = builtin_catalog();
        config.noise.run_noise_multiplier = 500.0;
        config.runs_per_policy = 200;
        let runs = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        for run in runs.values().flatten() {
            let b = &config.bounds;
            assert!(run.raw.latency_s >= b.latency_s.lo() && run.raw.latency_s <= b.latency_s.hi());
            assert!(run.raw.failure_pct >= b.failure_pct.lo() && run.raw.failure_pct <= b.failure_pct.hi());
            assert!(
                run.raw.prompts_per_user_week >= b.prompts_per_user_week.lo()
                    && run.raw.prompts_per_user_week <= b.prompts_per_user_week.hi()
            );
            assert!(
                run.raw.tickets_per_100_week >= b.tickets_per_100_week.lo()
                    && run.raw.tickets_per_100_week <= b.tickets_per_100_week.hi()
            );
            assert!((0.0..=1.0).contains(&run.raw.risk_index));
        }
    }

    #[test]
    fn trace_with_zero_failure_rate_has_zero_failures() {
        let mut config = builtin_catalog();
        config.baseline.cohort_size = 50;
        config.baseline.horizon_weeks = 2;
        config.baseline.failure_pct = 0.0;
        zero_delta_policy(&mut config);
        let trace = simulate_cohort_trace(&config, 0, 123).unwrap();
        assert!(trace.user_weeks.iter().all(|uw| uw.failure_count == 0));
    }

    #[test]
    fn trace_failures_never_exceed_signins_and_latencies_positive() {
        let mut config = builtin_catalog();
        config.baseline.cohort_size = 40;
        config.baseline.horizon_weeks = 2;
        let trace = simulate_cohort_trace(&config, 1, 9).unwrap();
        for uw in &trace.user_weeks {
            assert!(uw.failure_count <= uw.signin_count);
            assert_eq!(uw.latencies.len(), uw.signin_count as usize);
            assert!(uw.latencies.iter().all(|l| *l > 0.0));
        }
    }

    #[test]
    fn aggregate_trace_definitions() {
        let trace = CohortTrace {
            users: 100,
            weeks: 1,
            user_weeks: vec![UserWeekRecord {
                signin_count: 3,
                latencies: vec![1.0, 2.0, 3.0],
                failure_count: 0,
                prompt_count: 30,
            }],
            weekly_tickets: vec![5],
        };
        let raw = aggregate_trace(&trace, 0.5).unwrap();
        assert_eq!(raw.latency_s, 2.0);
        assert_eq!(raw.failure_pct, 0.0);
        assert_relative_eq!(raw.prompts_per_user_week, 0.30, epsilon = 1e-12);
        assert_relative_eq!(raw.tickets_per_100_week, 5.0, epsilon = 1e-12);
        assert_eq!(raw.risk_index, 0.5);
    }

    #[test]
    fn empty_trace_is_an_error() {
        let trace = CohortTrace {
            users: 1,
            weeks: 1,
            user_weeks: vec![UserWeekRecord { signin_count: 0, latencies: vec![], failure_count: 0, prompt_count: 0 }],
            weekly_tickets: vec![0],
        };
        assert!(matches!(aggregate_trace(&trace, 0.0), Err(Error::EmptyTrace)));
    }

    #[test]
    fn event_budget_guards_huge_traces() {
        let mut config = builtin_catalog();
        config.baseline.cohort_size = 10_000_000;
        config.baseline.horizon_weeks = 1000;
        let err = simulate_cohort_trace(&config, 0, 1).unwrap_err();
        assert!(matches!(err, Error::EventBudget { .. }));
    }

    #[test]
    fn runs_csv_is_sorted_and_stable() {
        let mut config = builtin_catalog();
        config.runs_per_policy = 3;
        let runs = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        let mut a = Vec::new();
        write_runs_csv(&mut a, &runs).unwrap();
        let mut b = Vec::new();
        write_runs_csv(&mut b, &runs).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "policy_id,run_index,latency_s,failure_pct,prompts,tickets,risk,sfq"
        );
        let ids: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn empirical_bounds_cover_observed_range() {
        let mut config = builtin_catalog();
        config.runs_per_policy = 20;
        let runs = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        let bounds = empirical_bounds(&runs).unwrap();
        let rescored = renormalize_runs(&runs, &bounds, &config.weights);
        for run in rescored.values().flatten() {
            assert!((0.0..=1.0).contains(&run.normalized.l_hat));
            assert!((0.0..=1.0).contains(&run.normalized.h_hat));
        }
        // At least one run touches each end of the empirical latency range.
        let l_hats: Vec<f64> = rescored.values().flatten().map(|r| r.normalized.l_hat).collect();
        assert!(l_hats.iter().any(|v| *v == 0.0));
        assert!(l_hats.iter().any(|v| *v == 1.0));
    }

    #[test]
    fn empirical_bounds_reject_constant_components() {
        // One policy with zero noise: every component is constant.
        let mut config = zero_noise_config();
        config.policies.truncate(1);
        let runs = run_monte_carlo(&config, SimMode::Aggregate).unwrap();
        let err = empirical_bounds(&runs).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
        config.noise.run_noise_multiplier = 1.0;
        assert!(empirical_bounds(&run_monte_carlo(&config, SimMode::Aggregate).unwrap()).is_ok());
    }
}
