//! Policy catalog and simulation configuration.
//!
//! A [`SimulationConfig`] bundles everything a run needs: the baseline
//! environment model, the noise model, normalization bounds, score weights,
//! the scenario set, and the policy list. Configs load from a TOML document
//! with sections `[baseline]`, `[noise]`, `[bounds.*]`, `[weights]`,
//! `[scenarios]`, repeated `[[policy]]`, and `[run]`. Keys match the field
//! names below; unknown keys are rejected so typos fail loudly. Fields left
//! out of a document fall back to the builtin catalog's values.
//!
//! Serialization is canonical: sections and keys in sorted order, floats
//! with 9 significant digits. Identical configs therefore serialize to
//! identical bytes, which is what the run manifest hashes.

use std::collections::BTreeMap;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::format::format_sig9;
use crate::metric::{
    ComponentBounds, EffectivenessVector, NormalizationBounds, ScenarioSet, WeightVector,
};

/// Default master seed for the builtin catalog.
pub const DEFAULT_MASTER_SEED: u64 = 42;
/// Default Monte Carlo runs per policy.
pub const DEFAULT_RUNS_PER_POLICY: u64 = 2000;
/// Default bootstrap resample count.
pub const DEFAULT_BOOTSTRAP_RESAMPLES: u64 = 10_000;

/// Baseline environment: cohort shape and per-component baseline levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineModel {
    /// Mu of log-latency; the aggregate-mode latency point value is `exp(mu)`.
    pub lognormal_mu: f64,
    /// Sigma of log-latency, > 0.
    pub lognormal_sigma: f64,
    /// Baseline failure rate in percent.
    pub failure_pct: f64,
    /// Baseline MFA prompts per user per week.
    pub prompts_per_user_week: f64,
    /// Baseline helpdesk tickets per 100 users per week.
    pub tickets_per_100_week: f64,
    /// Cohort size in users.
    pub cohort_size: u64,
    /// Evaluation horizon in weeks.
    pub horizon_weeks: u64,
    /// Mean sign-ins per user per week (Poisson rate).
    pub signin_rate: f64,
}

impl BaselineModel {
    /// Median of the latency lognormal, used as the aggregate-mode baseline.
    pub fn latency_median(&self) -> f64 {
        self.lognormal_mu.exp()
    }
}

/// Per-component Gaussian noise scales plus the global run-noise multiplier.
///
/// The multiplier scales all four sigmas at once; it is the single knob
/// calibration uses to reconcile component-level noise with the observed
/// per-run score dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_l: f64,
    pub sigma_f: f64,
    pub sigma_p: f64,
    pub sigma_h: f64,
    pub run_noise_multiplier: f64,
}

/// Additive per-component shifts a policy applies to the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentDeltas {
    pub latency_s: f64,
    pub failure_pct: f64,
    pub prompts_per_user_week: f64,
    pub tickets_per_100_week: f64,
}

/// One conditional-access policy candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDefinition {
    pub id: String,
    pub display_name: String,
    /// Exactly one policy per catalog is the comparison baseline.
    pub baseline: bool,
    pub delta: ComponentDeltas,
    pub effectiveness: EffectivenessVector,
}

/// Everything a simulation needs, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub baseline: BaselineModel,
    pub noise: NoiseModel,
    pub bounds: NormalizationBounds,
    pub weights: WeightVector,
    pub scenarios: ScenarioSet,
    pub policies: Vec<PolicyDefinition>,
    pub runs_per_policy: u64,
    pub bootstrap_resamples: u64,
    pub master_seed: u64,
}

impl SimulationConfig {
    /// Full cross-field validation. Construction paths call this; it is
    /// public so mutated configs can be re-checked.
    pub fn validate(&self) -> Result<()> {
        let b = &self.baseline;
        if !b.lognormal_mu.is_finite() {
            return Err(Error::invalid("baseline.lognormal_mu", "must be finite"));
        }
        if !(b.lognormal_sigma.is_finite() && b.lognormal_sigma > 0.0) {
            return Err(Error::invalid(
                "baseline.lognormal_sigma",
                format!("must be > 0, got {}", b.lognormal_sigma),
            ));
        }
        if !(b.signin_rate.is_finite() && b.signin_rate > 0.0) {
            return Err(Error::invalid(
                "baseline.signin_rate",
                format!("must be > 0, got {}", b.signin_rate),
            ));
        }
        if b.cohort_size < 1 {
            return Err(Error::invalid("baseline.cohort_size", "must be >= 1"));
        }
        if b.horizon_weeks < 1 {
            return Err(Error::invalid("baseline.horizon_weeks", "must be >= 1"));
        }
        for (field, v) in [
            ("baseline.failure_pct", b.failure_pct),
            ("baseline.prompts_per_user_week", b.prompts_per_user_week),
            ("baseline.tickets_per_100_week", b.tickets_per_100_week),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        let n = &self.noise;
        for (field, v) in [
            ("noise.sigma_l", n.sigma_l),
            ("noise.sigma_f", n.sigma_f),
            ("noise.sigma_p", n.sigma_p),
            ("noise.sigma_h", n.sigma_h),
            ("noise.run_noise_multiplier", n.run_noise_multiplier),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        if self.runs_per_policy < 2 {
            return Err(Error::invalid(
                "run.runs_per_policy",
                format!("must be >= 2, got {}", self.runs_per_policy),
            ));
        }
        if self.bootstrap_resamples < 1 {
            return Err(Error::invalid("run.bootstrap_resamples", "must be >= 1"));
        }
        if self.policies.is_empty() {
            return Err(Error::invalid("policy", "at least one policy is required"));
        }
        let mut baseline_count = 0;
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::invalid("policy", format!("duplicate policy id `{}`", p.id)));
            }
            if p.baseline {
                baseline_count += 1;
            }
            for (field, v) in [
                (format!("policy[{}].delta.latency_s", p.id), p.delta.latency_s),
                (format!("policy[{}].delta.failure_pct", p.id), p.delta.failure_pct),
                (
                    format!("policy[{}].delta.prompts_per_user_week", p.id),
                    p.delta.prompts_per_user_week,
                ),
                (
                    format!("policy[{}].delta.tickets_per_100_week", p.id),
                    p.delta.tickets_per_100_week,
                ),
            ] {
                if !v.is_finite() {
                    return Err(Error::invalid(field, "must be finite"));
                }
            }
            let mut scenario_ids: Vec<&str> = self.scenarios.ids().iter().map(|s| s.as_str()).collect();
            let mut eff_ids: Vec<&str> = p.effectiveness.entries().iter().map(|(s, _)| s.as_str()).collect();
            scenario_ids.sort_unstable();
            eff_ids.sort_unstable();
            if scenario_ids != eff_ids {
                return Err(Error::invalid(
                    format!("policy[{}].effectiveness", p.id),
                    format!("scenario ids must match [scenarios].ids exactly (expected {scenario_ids:?}, got {eff_ids:?})"),
                ));
            }
        }
        if baseline_count != 1 {
            return Err(Error::invalid(
                "policy",
                format!("exactly one policy must set baseline = true, found {baseline_count}"),
            ));
        }
        Ok(())
    }

    /// The policy flagged as the comparison baseline.
    pub fn baseline_policy(&self) -> &PolicyDefinition {
        self.policies
            .iter()
            .find(|p| p.baseline)
            .expect("validated config has a baseline policy")
    }

    pub fn policy_index(&self, id: &str) -> Option<usize> {
        self.policies.iter().position(|p| p.id == id)
    }
}

fn effectiveness(scenario_effectiveness: [(&str, f64); 5]) -> EffectivenessVector {
    EffectivenessVector::new(
        scenario_effectiveness
            .iter()
            .map(|(id, e)| (id.to_string(), *e))
            .collect(),
    )
    .expect("builtin effectiveness values are valid")
}

/// The builtin policy catalog and simulation constants.
///
/// Environment constants model a mid-size enterprise: 1,200 users over 12
/// weeks, Poisson(14) weekly sign-ins, lognormal latency with median
/// `exp(-0.2) ~ 0.82s`, baseline failure 2%, 0.30 prompts/user/week, 12.8
/// tickets/100 users/week, and fixed clamp ranges L [0.2, 10]s, F [0, 20]%,
/// P [0, 3], H [0, 20].
///
/// Per-policy deltas and effectiveness values are not measured quantities;
/// they are free catalog parameters fitted (via `fit_to_targets`) so the
/// shipped defaults reproduce the reference evaluation summary, and are kept
/// here as plain literals so they stay auditable and replaceable.
pub fn builtin_catalog() -> SimulationConfig {
    let scenarios = ScenarioSet::new(
        vec![
            "spray".to_string(),
            "theft".to_string(),
            "travel".to_string(),
            "legacy".to_string(),
            "aitm".to_string(),
        ],
        vec![0.30, 0.25, 0.15, 0.15, 0.15],
    )
    .expect("builtin scenarios are valid");

    let policies = vec![
        PolicyDefinition {
            id: "baseline_password_only".to_string(),
            display_name: "Baseline Password Only".to_string(),
            baseline: true,
            delta: ComponentDeltas {
                latency_s: 0.6,
                failure_pct: 0.4,
                prompts_per_user_week: 0.85,
                tickets_per_100_week: 0.0,
            },
            effectiveness: effectiveness([
                ("spray", 0.32),
                ("theft", 0.37),
                ("travel", 0.42),
                ("legacy", 0.33),
                ("aitm", 0.34),
            ]),
        },
        PolicyDefinition {
            id: "risk_based_mfa".to_string(),
            display_name: "Risk-Based MFA".to_string(),
            baseline: false,
            delta: ComponentDeltas {
                latency_s: 0.7,
                failure_pct: 0.5,
                prompts_per_user_week: 0.95,
                tickets_per_100_week: 0.3,
            },
            effectiveness: effectiveness([
                ("spray", 0.80),
                ("theft", 0.75),
                ("travel", 0.78),
                ("legacy", 0.62),
                ("aitm", 0.60),
            ]),
        },
        PolicyDefinition {
            id: "device_compliance".to_string(),
            display_name: "Device Compliance Required".to_string(),
            baseline: false,
            delta: ComponentDeltas {
                latency_s: 0.7,
                failure_pct: 0.9,
                prompts_per_user_week: 0.90,
                tickets_per_100_week: 0.7,
            },
            effectiveness: effectiveness([
                ("spray", 0.70),
                ("theft", 0.72),
                ("travel", 0.66),
                ("legacy", 0.65),
                ("aitm", 0.62),
            ]),
        },
        PolicyDefinition {
            id: "phishing_resistant_mfa".to_string(),
            display_name: "Phishing-Resistant MFA".to_string(),
            baseline: false,
            delta: ComponentDeltas {
                latency_s: 0.5,
                failure_pct: 1.0,
                prompts_per_user_week: 1.20,
                tickets_per_100_week: 2.0,
            },
            effectiveness: effectiveness([
                ("spray", 1.0),
                ("theft", 0.90),
                ("travel", 0.85),
                ("legacy", 0.80),
                ("aitm", 0.88),
            ]),
        },
        PolicyDefinition {
            id: "combined_controls".to_string(),
            display_name: "Combined Controls".to_string(),
            baseline: false,
            delta: ComponentDeltas {
                latency_s: 1.1,
                failure_pct: 1.5,
                prompts_per_user_week: 1.41,
                tickets_per_100_week: 3.0,
            },
            effectiveness: effectiveness([
                ("spray", 0.998),
                ("theft", 0.99),
                ("travel", 0.97),
                ("legacy", 0.96),
                ("aitm", 0.985),
            ]),
        },
    ];

    let config = SimulationConfig {
        baseline: BaselineModel {
            lognormal_mu: -0.2,
            lognormal_sigma: 0.5,
            failure_pct: 2.0,
            prompts_per_user_week: 0.30,
            tickets_per_100_week: 12.8,
            cohort_size: 1200,
            horizon_weeks: 12,
            signin_rate: 14.0,
        },
        noise: NoiseModel {
            sigma_l: 0.05,
            sigma_f: 0.10,
            sigma_p: 0.05,
            sigma_h: 0.10,
            run_noise_multiplier: 16.0,
        },
        bounds: NormalizationBounds {
            latency_s: ComponentBounds::new(0.2, 10.0).expect("builtin bounds"),
            failure_pct: ComponentBounds::new(0.0, 20.0).expect("builtin bounds"),
            prompts_per_user_week: ComponentBounds::new(0.0, 3.0).expect("builtin bounds"),
            tickets_per_100_week: ComponentBounds::new(0.0, 20.0).expect("builtin bounds"),
        },
        weights: WeightVector::equal(),
        scenarios,
        policies,
        runs_per_policy: DEFAULT_RUNS_PER_POLICY,
        bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        master_seed: DEFAULT_MASTER_SEED,
    };
    config.validate().expect("builtin catalog validates");
    config
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    baseline: Option<RawBaseline>,
    noise: Option<RawNoise>,
    bounds: Option<RawBounds>,
    weights: Option<RawWeights>,
    scenarios: Option<RawScenarios>,
    policy: Option<Vec<RawPolicy>>,
    run: Option<RawRun>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    lognormal_mu: Option<f64>,
    lognormal_sigma: Option<f64>,
    failure_pct: Option<f64>,
    prompts_per_user_week: Option<f64>,
    tickets_per_100_week: Option<f64>,
    cohort_size: Option<u64>,
    horizon_weeks: Option<u64>,
    signin_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    sigma_l: Option<f64>,
    sigma_f: Option<f64>,
    sigma_p: Option<f64>,
    sigma_h: Option<f64>,
    run_noise_multiplier: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundsPair {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    latency_s: Option<RawBoundsPair>,
    failure_pct: Option<RawBoundsPair>,
    prompts_per_user_week: Option<RawBoundsPair>,
    tickets_per_100_week: Option<RawBoundsPair>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    w_l: Option<f64>,
    w_f: Option<f64>,
    w_p: Option<f64>,
    w_h: Option<f64>,
    w_r: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenarios {
    ids: Option<Vec<String>>,
    prevalence: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    latency_s: Option<f64>,
    failure_pct: Option<f64>,
    prompts_per_user_week: Option<f64>,
    tickets_per_100_week: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    id: String,
    display_name: Option<String>,
    baseline: Option<bool>,
    delta: Option<RawDelta>,
    effectiveness: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    runs_per_policy: Option<u64>,
    bootstrap_resamples: Option<u64>,
    master_seed: Option<u64>,
}

fn bounds_pair(field: &str, raw: Option<RawBoundsPair>, default: ComponentBounds) -> Result<ComponentBounds> {
    match raw {
        None => Ok(default),
        Some(p) => ComponentBounds::new(p.lo, p.hi).map_err(|_| {
            Error::invalid(format!("bounds.{field}"), format!("lo must be < hi, got lo={}, hi={}", p.lo, p.hi))
        }),
    }
}

/// Parse a TOML config document, filling unspecified fields from the builtin
/// catalog, and validate the result.
///
/// A `[[policy]]` list, when present, replaces the builtin policy list
/// wholesale; within one policy, `delta` fields default to zero,
/// `display_name` to the id, and `baseline` to false.
pub fn load_config(source: &str) -> Result<SimulationConfig> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    let defaults = builtin_catalog();

    let db = defaults.baseline;
    let baseline = match raw.baseline {
        None => db,
        Some(r) => BaselineModel {
            lognormal_mu: r.lognormal_mu.unwrap_or(db.lognormal_mu),
            lognormal_sigma: r.lognormal_sigma.unwrap_or(db.lognormal_sigma),
            failure_pct: r.failure_pct.unwrap_or(db.failure_pct),
            prompts_per_user_week: r.prompts_per_user_week.unwrap_or(db.prompts_per_user_week),
            tickets_per_100_week: r.tickets_per_100_week.unwrap_or(db.tickets_per_100_week),
            cohort_size: r.cohort_size.unwrap_or(db.cohort_size),
            horizon_weeks: r.horizon_weeks.unwrap_or(db.horizon_weeks),
            signin_rate: r.signin_rate.unwrap_or(db.signin_rate),
        },
    };

    let dn = defaults.noise;
    let noise = match raw.noise {
        None => dn,
        Some(r) => NoiseModel {
            sigma_l: r.sigma_l.unwrap_or(dn.sigma_l),
            sigma_f: r.sigma_f.unwrap_or(dn.sigma_f),
            sigma_p: r.sigma_p.unwrap_or(dn.sigma_p),
            sigma_h: r.sigma_h.unwrap_or(dn.sigma_h),
            run_noise_multiplier: r.run_noise_multiplier.unwrap_or(dn.run_noise_multiplier),
        },
    };

    let bounds = match raw.bounds {
        None => defaults.bounds,
        Some(r) => NormalizationBounds {
            latency_s: bounds_pair("latency_s", r.latency_s, defaults.bounds.latency_s)?,
            failure_pct: bounds_pair("failure_pct", r.failure_pct, defaults.bounds.failure_pct)?,
            prompts_per_user_week: bounds_pair(
                "prompts_per_user_week",
                r.prompts_per_user_week,
                defaults.bounds.prompts_per_user_week,
            )?,
            tickets_per_100_week: bounds_pair(
                "tickets_per_100_week",
                r.tickets_per_100_week,
                defaults.bounds.tickets_per_100_week,
            )?,
        },
    };

    let weights = match raw.weights {
        None => defaults.weights,
        Some(r) => {
            let d = defaults.weights;
            WeightVector::new(
                r.w_l.unwrap_or_else(|| d.w_l()),
                r.w_f.unwrap_or_else(|| d.w_f()),
                r.w_p.unwrap_or_else(|| d.w_p()),
                r.w_h.unwrap_or_else(|| d.w_h()),
                r.w_r.unwrap_or_else(|| d.w_r()),
            )?
        }
    };

    let scenarios = match raw.scenarios {
        None => defaults.scenarios.clone(),
        Some(r) => ScenarioSet::new(
            r.ids.unwrap_or_else(|| defaults.scenarios.ids().to_vec()),
            r.prevalence.unwrap_or_else(|| defaults.scenarios.prevalence().to_vec()),
        )?,
    };

    let policies = match raw.policy {
        None => defaults.policies.clone(),
        Some(raw_policies) => {
            let mut policies = Vec::with_capacity(raw_policies.len());
            for rp in raw_policies {
                let delta = rp.delta.map_or(ComponentDeltas::default(), |d| ComponentDeltas {
                    latency_s: d.latency_s.unwrap_or(0.0),
                    failure_pct: d.failure_pct.unwrap_or(0.0),
                    prompts_per_user_week: d.prompts_per_user_week.unwrap_or(0.0),
                    tickets_per_100_week: d.tickets_per_100_week.unwrap_or(0.0),
                });
                let effectiveness = EffectivenessVector::new(rp.effectiveness.into_iter().collect())
                    .map_err(|e| match e {
                        Error::Invalid { field, message } => {
                            Error::invalid(format!("policy[{}].{field}", rp.id), message)
                        }
                        other => other,
                    })?;
                policies.push(PolicyDefinition {
                    display_name: rp.display_name.unwrap_or_else(|| rp.id.clone()),
                    baseline: rp.baseline.unwrap_or(false),
                    id: rp.id,
                    delta,
                    effectiveness,
                });
            }
            policies
        }
    };

    let (runs_per_policy, bootstrap_resamples, master_seed) = match raw.run {
        None => (defaults.runs_per_policy, defaults.bootstrap_resamples, defaults.master_seed),
        Some(r) => (
            r.runs_per_policy.unwrap_or(defaults.runs_per_policy),
            r.bootstrap_resamples.unwrap_or(defaults.bootstrap_resamples),
            r.master_seed.unwrap_or(defaults.master_seed),
        ),
    };

    let config = SimulationConfig {
        baseline,
        noise,
        bounds,
        weights,
        scenarios,
        policies,
        runs_per_policy,
        bootstrap_resamples,
        master_seed,
    };
    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

fn toml_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn push_float(out: &mut String, key: &str, v: f64) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(&format_sig9(v));
    out.push('\n');
}

fn push_int(out: &mut String, key: &str, v: u64) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(&v.to_string());
    out.push('\n');
}

fn push_bounds(out: &mut String, name: &str, b: &ComponentBounds) {
    out.push_str(&format!("[bounds.{name}]\n"));
    push_float(out, "hi", b.hi());
    push_float(out, "lo", b.lo());
    out.push('\n');
}

/// Canonical TOML rendering of a config: sections and keys sorted, floats
/// with 9 significant digits, policies in catalog order.
pub fn serialize_config(config: &SimulationConfig) -> String {
    let mut out = String::new();

    out.push_str("[baseline]\n");
    push_int(&mut out, "cohort_size", config.baseline.cohort_size);
    push_float(&mut out, "failure_pct", config.baseline.failure_pct);
    push_int(&mut out, "horizon_weeks", config.baseline.horizon_weeks);
    push_float(&mut out, "lognormal_mu", config.baseline.lognormal_mu);
    push_float(&mut out, "lognormal_sigma", config.baseline.lognormal_sigma);
    push_float(&mut out, "prompts_per_user_week", config.baseline.prompts_per_user_week);
    push_float(&mut out, "signin_rate", config.baseline.signin_rate);
    push_float(&mut out, "tickets_per_100_week", config.baseline.tickets_per_100_week);
    out.push('\n');

    push_bounds(&mut out, "failure_pct", &config.bounds.failure_pct);
    push_bounds(&mut out, "latency_s", &config.bounds.latency_s);
    push_bounds(&mut out, "prompts_per_user_week", &config.bounds.prompts_per_user_week);
    push_bounds(&mut out, "tickets_per_100_week", &config.bounds.tickets_per_100_week);

    out.push_str("[noise]\n");
    push_float(&mut out, "run_noise_multiplier", config.noise.run_noise_multiplier);
    push_float(&mut out, "sigma_f", config.noise.sigma_f);
    push_float(&mut out, "sigma_h", config.noise.sigma_h);
    push_float(&mut out, "sigma_l", config.noise.sigma_l);
    push_float(&mut out, "sigma_p", config.noise.sigma_p);
    out.push('\n');

    for p in &config.policies {
        out.push_str("[[policy]]\n");
        out.push_str(&format!("baseline = {}\n", p.baseline));
        out.push_str(&format!("display_name = {}\n", toml_string(&p.display_name)));
        out.push_str(&format!("id = {}\n", toml_string(&p.id)));
        out.push('\n');
        out.push_str("[policy.delta]\n");
        push_float(&mut out, "failure_pct", p.delta.failure_pct);
        push_float(&mut out, "latency_s", p.delta.latency_s);
        push_float(&mut out, "prompts_per_user_week", p.delta.prompts_per_user_week);
        push_float(&mut out, "tickets_per_100_week", p.delta.tickets_per_100_week);
        out.push('\n');
        out.push_str("[policy.effectiveness]\n");
        let mut entries: Vec<&(String, f64)> = p.effectiveness.entries().iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for (id, e) in entries {
            push_float(&mut out, id, *e);
        }
        out.push('\n');
    }

    out.push_str("[run]\n");
    push_int(&mut out, "bootstrap_resamples", config.bootstrap_resamples);
    push_int(&mut out, "master_seed", config.master_seed);
    push_int(&mut out, "runs_per_policy", config.runs_per_policy);
    out.push('\n');

    out.push_str("[scenarios]\n");
    let ids: Vec<String> = config.scenarios.ids().iter().map(|s| toml_string(s)).collect();
    out.push_str(&format!("ids = [{}]\n", ids.join(", ")));
    let prevalence: Vec<String> = config.scenarios.prevalence().iter().map(|p| format_sig9(*p)).collect();
    out.push_str(&format!("prevalence = [{}]\n", prevalence.join(", ")));
    out.push('\n');

    out.push_str("[weights]\n");
    push_float(&mut out, "w_f", config.weights.w_f());
    push_float(&mut out, "w_h", config.weights.w_h());
    push_float(&mut out, "w_l", config.weights.w_l());
    push_float(&mut out, "w_p", config.weights.w_p());
    push_float(&mut out, "w_r", config.weights.w_r());

    out
}

/// Hex SHA-256 of the canonical serialization; the manifest's config hash.
pub fn config_sha256(config: &SimulationConfig) -> String {
    let digest = Sha256::digest(serialize_config(config).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_validates() {
        let config = builtin_catalog();
        assert!(config.validate().is_ok());
        assert_eq!(config.policies.len(), 5);
        assert_eq!(config.baseline.cohort_size, 1200);
        assert_eq!(config.baseline.horizon_weeks, 12);
        assert_eq!(config.baseline.signin_rate, 14.0);
        assert_eq!(config.runs_per_policy, 2000);
        assert_eq!(config.bootstrap_resamples, 10_000);
        let sum: f64 = config.scenarios.prevalence().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(config.baseline_policy().id, "baseline_password_only");
    }

    #[test]
    fn builtin_round_trips_exactly() {
        let config = builtin_catalog();
        let text = serialize_config(&config);
        let reloaded = load_config(&text).unwrap();
        assert_eq!(reloaded, config);
        assert_eq!(serialize_config(&reloaded), text);
    }

    #[test]
    fn unit_sum_violation_names_weights() {
        let err = load_config("[weights]\nw_l = 0.3\nw_f = 0.3\nw_p = 0.3\nw_h = 0.3\nw_r = 0.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("weights"), "{msg}");
        assert!(msg.contains("1.5"), "{msg}");
    }

    #[test]
    fn seed_only_override_keeps_builtin() {
        let config = load_config("[run]\nmaster_seed = 7\n").unwrap();
        let mut expected = builtin_catalog();
        expected.master_seed = 7;
        assert_eq!(config, expected);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_config("[run]\nmaster_sead = 7\n").unwrap_err();
        assert!(err.to_string().contains("master_sead"));
        let err = load_config("[simulation]\nx = 1\n").unwrap_err();
        assert!(err.to_string().contains("simulation"));
    }

    #[test]
    fn degenerate_bounds_are_rejected() {
        let err = load_config("[bounds.latency_s]\nlo = 2.0\nhi = 2.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bounds.latency_s"), "{msg}");
    }

    #[test]
    fn effectiveness_outside_unit_interval_names_field() {
        let doc = r#"
[[policy]]
id = "p1"
baseline = true
[policy.effectiveness]
spray = 1.2
theft = 1.0
travel = 1.0
legacy = 1.0
aitm = 1.0
"#;
        let err = load_config(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("policy[p1].effectiveness[spray]"), "{msg}");
    }

    #[test]
    fn policy_list_replaces_builtin_and_requires_one_baseline() {
        let doc = r#"
[[policy]]
id = "only"
[policy.effectiveness]
spray = 0.5
theft = 0.5
travel = 0.5
legacy = 0.5
aitm = 0.5
"#;
        let err = load_config(doc).unwrap_err();
        assert!(err.to_string().contains("baseline"), "{err}");
        let doc = doc.replace("id = \"only\"", "id = \"only\"\nbaseline = true");
        let config = load_config(&doc).unwrap();
        assert_eq!(config.policies.len(), 1);
        assert_eq!(config.policies[0].display_name, "only");
        assert_eq!(config.policies[0].delta, ComponentDeltas::default());
    }

    #[test]
    fn mismatched_effectiveness_ids_are_rejected() {
        let doc = r#"
[[policy]]
id = "p"
baseline = true
[policy.effectiveness]
spray = 0.5
theft = 0.5
travel = 0.5
legacy = 0.5
phishing = 0.5
"#;
        let err = load_config(doc).unwrap_err();
        assert!(err.to_string().contains("policy[p].effectiveness"), "{err}");
    }

    #[test]
    fn runs_below_two_are_rejected() {
        let err = load_config("[run]\nruns_per_policy = 1\n").unwrap_err();
        assert!(err.to_string().contains("runs_per_policy"));
    }

    #[test]
    fn prevalence_sum_violation_names_field() {
        let err = load_config("[scenarios]\nprevalence = [0.5, 0.25, 0.15, 0.15, 0.15]\n").unwrap_err();
        assert!(err.to_string().contains("scenarios.prevalence"), "{err}");
    }

    #[test]
    fn config_hash_tracks_effective_config() {
        let a = builtin_catalog();
        let mut b = builtin_catalog();
        assert_eq!(config_sha256(&a), config_sha256(&b));
        b.master_seed = 43;
        assert_ne!(config_sha256(&a), config_sha256(&b));
    }
}
