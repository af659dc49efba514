//! The Security Friction Quotient and its supporting arithmetic.
//!
//! Five measured components feed the score: median sign-in latency `L`
//! (seconds), failure rate `F` (percent), MFA prompts per user per week `P`,
//! helpdesk tickets per 100 users per week `H`, and a residual risk index
//! `R` in [0, 1]. The first four are min-max normalized against fixed
//! clamping bounds; `R` is already unitless and passes through. The score is
//!
//! ```text
//! SFQ = w_l * l_hat + w_f * f_hat + w_p * p_hat + w_h * h_hat + w_r * (1 - r_hat)
//! ```
//!
//! with nonnegative weights summing to one, so SFQ is bounded in [0, 1],
//! strictly increasing in each friction component (given positive weight)
//! and strictly decreasing in `r_hat`.
//!
//! Everything here is a pure function of its inputs; all types are plain
//! data and safe to share across threads.

use crate::error::{Error, Result};

/// Absolute tolerance for unit-sum checks on weights and prevalences.
pub const UNIT_SUM_TOLERANCE: f64 = 1e-9;

fn ensure_finite(field: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {value}")))
    }
}

/// The five measured quantities in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawComponents {
    /// Median sign-in latency in seconds. Must be > 0.
    pub latency_s: f64,
    /// Failure rate in percent. Must be >= 0.
    pub failure_pct: f64,
    /// MFA prompts per user per week. Must be >= 0.
    pub prompts_per_user_week: f64,
    /// Helpdesk tickets per 100 users per week. Must be >= 0.
    pub tickets_per_100_week: f64,
    /// Residual risk index in [0, 1].
    pub risk_index: f64,
}

impl RawComponents {
    pub fn new(
        latency_s: f64,
        failure_pct: f64,
        prompts_per_user_week: f64,
        tickets_per_100_week: f64,
        risk_index: f64,
    ) -> Result<Self> {
        if !(latency_s.is_finite() && latency_s > 0.0) {
            return Err(Error::invalid("latency_s", format!("must be > 0, got {latency_s}")));
        }
        for (field, v) in [
            ("failure_pct", failure_pct),
            ("prompts_per_user_week", prompts_per_user_week),
            ("tickets_per_100_week", tickets_per_100_week),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(field, format!("must be >= 0, got {v}")));
            }
        }
        if !(risk_index.is_finite() && (0.0..=1.0).contains(&risk_index)) {
            return Err(Error::invalid("risk_index", format!("must be in [0, 1], got {risk_index}")));
        }
        Ok(Self {
            latency_s,
            failure_pct,
            prompts_per_user_week,
            tickets_per_100_week,
            risk_index,
        })
    }
}

/// A validated `(lo, hi)` clamp interval in physical units, `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentBounds {
    lo: f64,
    hi: f64,
}

impl ComponentBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure_finite("bounds.lo", lo)?;
        ensure_finite("bounds.hi", hi)?;
        if lo >= hi {
            return Err(Error::invalid(
                "bounds",
                format!("lo must be < hi, got lo={lo}, hi={hi}"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Clamp a physical value into the interval.
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Clamp and rescale into [0, 1].
    pub fn normalize(&self, x: f64) -> f64 {
        (self.clamp(x) - self.lo) / (self.hi - self.lo)
    }
}

/// Clamp intervals for the four friction components (risk needs none).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationBounds {
    pub latency_s: ComponentBounds,
    pub failure_pct: ComponentBounds,
    pub prompts_per_user_week: ComponentBounds,
    pub tickets_per_100_week: ComponentBounds,
}

/// Min-max normalize `x` against `[lo, hi]`, clamping first.
///
/// Monotone nondecreasing in `x`; returns a value in [0, 1].
pub fn normalize_component(x: f64, lo: f64, hi: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    let bounds = ComponentBounds::new(lo, hi)?;
    Ok(bounds.normalize(x))
}

/// The five components normalized into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedComponents {
    pub l_hat: f64,
    pub f_hat: f64,
    pub p_hat: f64,
    pub h_hat: f64,
    pub r_hat: f64,
}

impl NormalizedComponents {
    pub fn new(l_hat: f64, f_hat: f64, p_hat: f64, h_hat: f64, r_hat: f64) -> Result<Self> {
        for (field, v) in [
            ("l_hat", l_hat),
            ("f_hat", f_hat),
            ("p_hat", p_hat),
            ("h_hat", h_hat),
            ("r_hat", r_hat),
        ] {
            if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                return Err(Error::invalid(field, format!("must be in [0, 1], got {v}")));
            }
        }
        Ok(Self { l_hat, f_hat, p_hat, h_hat, r_hat })
    }

    /// The five score terms in weight order: `(l_hat, f_hat, p_hat, h_hat, 1 - r_hat)`.
    pub fn score_terms(&self) -> [f64; 5] {
        [self.l_hat, self.f_hat, self.p_hat, self.h_hat, 1.0 - self.r_hat]
    }
}

/// Normalize raw components; `risk_index` passes through as `r_hat`.
pub fn normalize(raw: &RawComponents, bounds: &NormalizationBounds) -> NormalizedComponents {
    NormalizedComponents {
        l_hat: bounds.latency_s.normalize(raw.latency_s),
        f_hat: bounds.failure_pct.normalize(raw.failure_pct),
        p_hat: bounds.prompts_per_user_week.normalize(raw.prompts_per_user_week),
        h_hat: bounds.tickets_per_100_week.normalize(raw.tickets_per_100_week),
        r_hat: raw.risk_index,
    }
}

/// Nonnegative weights over the five score terms, summing to one.
///
/// Construction validates the unit sum at [`UNIT_SUM_TOLERANCE`] and then
/// renormalizes by the exact floating-point sum, so downstream arithmetic
/// always works with the same simplex point regardless of how the weights
/// were written down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    w: [f64; 5],
}

impl WeightVector {
    pub fn new(w_l: f64, w_f: f64, w_p: f64, w_h: f64, w_r: f64) -> Result<Self> {
        Self::from_array([w_l, w_f, w_p, w_h, w_r])
    }

    pub fn from_array(w: [f64; 5]) -> Result<Self> {
        const NAMES: [&str; 5] = ["weights.w_l", "weights.w_f", "weights.w_p", "weights.w_h", "weights.w_r"];
        for (field, v) in NAMES.iter().zip(w.iter()) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::invalid(*field, format!("must be >= 0, got {v}")));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > UNIT_SUM_TOLERANCE {
            return Err(Error::invalid(
                "weights",
                format!("sum {sum:.9} != 1 (tolerance {UNIT_SUM_TOLERANCE:e})"),
            ));
        }
        let mut w = w;
        for v in &mut w {
            *v /= sum;
        }
        Ok(Self { w })
    }

    /// The default weighting: every term carries 0.2.
    pub fn equal() -> Self {
        Self::from_array([0.2; 5]).expect("equal weights are valid")
    }

    pub fn w_l(&self) -> f64 {
        self.w[0]
    }
    pub fn w_f(&self) -> f64 {
        self.w[1]
    }
    pub fn w_p(&self) -> f64 {
        self.w[2]
    }
    pub fn w_h(&self) -> f64 {
        self.w[3]
    }
    pub fn w_r(&self) -> f64 {
        self.w[4]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.w
    }
}

/// The Security Friction Quotient.
///
/// Dot product of the weights with `(l_hat, f_hat, p_hat, h_hat, 1 - r_hat)`,
/// clamped into [0, 1] to absorb last-ulp rounding at the boundary.
pub fn compute_sfq(norm: &NormalizedComponents, weights: &WeightVector) -> f64 {
    let terms = norm.score_terms();
    let w = weights.as_array();
    let mut acc = 0.0;
    for k in 0..5 {
        acc += w[k] * terms[k];
    }
    acc.clamp(0.0, 1.0)
}

/// Attack scenarios with prevalence weights.
///
/// Prevalences are validated (nonnegative, unit sum at
/// [`UNIT_SUM_TOLERANCE`]) and then renormalized by their exact sum, same as
/// [`WeightVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    ids: Vec<String>,
    prevalence: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(ids: Vec<String>, prevalence: Vec<f64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::invalid("scenarios.ids", "must not be empty"));
        }
        if ids.len() != prevalence.len() {
            return Err(Error::invalid(
                "scenarios.prevalence",
                format!("{} prevalences for {} ids", prevalence.len(), ids.len()),
            ));
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(Error::invalid("scenarios.ids", format!("duplicate id `{id}`")));
            }
        }
        for (id, p) in ids.iter().zip(prevalence.iter()) {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::invalid(
                    format!("scenarios.prevalence[{id}]"),
                    format!("must be >= 0, got {p}"),
                ));
            }
        }
        let sum: f64 = prevalence.iter().sum();
        if (sum - 1.0).abs() > UNIT_SUM_TOLERANCE {
            return Err(Error::invalid(
                "scenarios.prevalence",
                format!("sum {sum:.9} != 1 (tolerance {UNIT_SUM_TOLERANCE:e})"),
            ));
        }
        let prevalence = prevalence.iter().map(|p| p / sum).collect();
        Ok(Self { ids, prevalence })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn prevalence(&self) -> &[f64] {
        &self.prevalence
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Per-scenario mitigation effectiveness, `1` meaning fully mitigated.
///
/// Entries are stored sorted by scenario id, so two vectors built from the
/// same pairs in any order compare equal; lookups go by id.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivenessVector {
    entries: Vec<(String, f64)>,
}

impl EffectivenessVector {
    pub fn new(mut entries: Vec<(String, f64)>) -> Result<Self> {
        for (i, (id, e)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::invalid("effectiveness", format!("duplicate scenario id `{id}`")));
            }
            if !(e.is_finite() && (0.0..=1.0).contains(e)) {
                return Err(Error::invalid(
                    format!("effectiveness[{id}]"),
                    format!("must be in [0, 1], got {e}"),
                ));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, v)| *v)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }
}

/// Residual risk index: the prevalence-weighted sum of unmitigated
/// compromise probability, `sum_s pi_s * (1 - E_s)`.
///
/// The effectiveness vector must cover exactly the scenario set's ids.
pub fn risk_index(scenarios: &ScenarioSet, effectiveness: &EffectivenessVector) -> Result<f64> {
    if effectiveness.entries().len() != scenarios.len() {
        return Err(Error::ScenarioMismatch(format!(
            "{} effectiveness entries for {} scenarios",
            effectiveness.entries().len(),
            scenarios.len()
        )));
    }
    let mut acc = 0.0;
    for (id, pi) in scenarios.ids().iter().zip(scenarios.prevalence()) {
        let e = effectiveness
            .get(id)
            .ok_or_else(|| Error::ScenarioMismatch(format!("no effectiveness for scenario `{id}`")))?;
        acc += pi * (1.0 - e);
    }
    Ok(acc.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_bounds() -> NormalizationBounds {
        NormalizationBounds {
            latency_s: ComponentBounds::new(0.2, 10.0).unwrap(),
            failure_pct: ComponentBounds::new(0.0, 20.0).unwrap(),
            prompts_per_user_week: ComponentBounds::new(0.0, 3.0).unwrap(),
            tickets_per_100_week: ComponentBounds::new(0.0, 20.0).unwrap(),
        }
    }

    fn scenarios() -> ScenarioSet {
        ScenarioSet::new(
            vec!["spray".into(), "theft".into(), "travel".into(), "legacy".into(), "aitm".into()],
            vec![0.30, 0.25, 0.15, 0.15, 0.15],
        )
        .unwrap()
    }

    #[test]
    fn normalize_component_interior_point() {
        // (0.82 - 0.2) / 9.8
        let v = normalize_component(0.82, 0.2, 10.0).unwrap();
        assert_relative_eq!(v, 0.063_265_306_122_448_98, epsilon = 1e-12);
    }

    #[test]
    fn normalize_component_at_lower_bound() {
        assert_eq!(normalize_component(0.2, 0.2, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn normalize_component_clamps_above() {
        assert_eq!(normalize_component(25.0, 0.0, 20.0).unwrap(), 1.0);
    }

    #[test]
    fn normalize_component_rejects_bad_bounds() {
        assert!(normalize_component(1.0, 5.0, 5.0).is_err());
        assert!(normalize_component(1.0, 6.0, 5.0).is_err());
    }

    #[test]
    fn normalize_baseline_components() {
        let raw = RawComponents::new(0.82, 2.0, 0.30, 12.8, 1.0).unwrap();
        let norm = normalize(&raw, &default_bounds());
        assert_relative_eq!(norm.l_hat, 0.063_265_306_122_448_98, epsilon = 1e-12);
        assert_relative_eq!(norm.f_hat, 0.10, epsilon = 1e-12);
        assert_relative_eq!(norm.p_hat, 0.10, epsilon = 1e-12);
        assert_relative_eq!(norm.h_hat, 0.64, epsilon = 1e-12);
        assert_eq!(norm.r_hat, 1.0);
    }

    #[test]
    fn normalize_hits_exact_corners() {
        let bounds = default_bounds();
        let lo = RawComponents::new(0.2, 0.0, 0.0, 0.0, 0.0).unwrap();
        let n = normalize(&lo, &bounds);
        assert_eq!((n.l_hat, n.f_hat, n.p_hat, n.h_hat, n.r_hat), (0.0, 0.0, 0.0, 0.0, 0.0));
        let hi = RawComponents::new(10.0, 20.0, 3.0, 20.0, 1.0).unwrap();
        let n = normalize(&hi, &bounds);
        assert_eq!((n.l_hat, n.f_hat, n.p_hat, n.h_hat, n.r_hat), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn sfq_baseline_score() {
        let norm = NormalizedComponents::new(0.063_265_306_122_448_98, 0.10, 0.10, 0.64, 1.0).unwrap();
        let sfq = compute_sfq(&norm, &WeightVector::equal());
        assert_relative_eq!(sfq, 0.180_653_061_224_489_8, epsilon = 1e-9);
    }

    #[test]
    fn sfq_extremes() {
        let w = WeightVector::equal();
        let zero = NormalizedComponents::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(compute_sfq(&zero, &w), 0.0, epsilon = 1e-12);
        let one = NormalizedComponents::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(compute_sfq(&one, &w), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = WeightVector::new(0.3, 0.3, 0.3, 0.3, 0.3).unwrap_err();
        assert!(err.to_string().contains("weights"));
        assert!(err.to_string().contains("1.5"));
        assert!(WeightVector::new(0.5, 0.5, 0.0, 0.0, 0.0).is_ok());
        assert!(WeightVector::new(0.5, 0.6, -0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn weights_renormalize_to_exact_unit_sum() {
        let w = WeightVector::new(0.2, 0.2, 0.2, 0.2, 0.2 + 4e-10).unwrap();
        let sum: f64 = w.as_array().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn risk_index_full_and_zero_mitigation() {
        let s = scenarios();
        let full = EffectivenessVector::new(
            s.ids().iter().map(|id| (id.clone(), 1.0)).collect(),
        )
        .unwrap();
        assert_eq!(risk_index(&s, &full).unwrap(), 0.0);
        let none = EffectivenessVector::new(
            s.ids().iter().map(|id| (id.clone(), 0.0)).collect(),
        )
        .unwrap();
        assert_eq!(risk_index(&s, &none).unwrap(), 1.0);
    }

    #[test]
    fn risk_index_mixed_effectiveness() {
        let s = scenarios();
        let eff = EffectivenessVector::new(vec![
            ("spray".into(), 0.9),
            ("theft".into(), 0.9),
            ("travel".into(), 0.5),
            ("legacy".into(), 0.5),
            ("aitm".into(), 0.5),
        ])
        .unwrap();
        assert_relative_eq!(risk_index(&s, &eff).unwrap(), 0.28, epsilon = 1e-12);
    }

    #[test]
    fn risk_index_rejects_mismatched_ids() {
        let s = scenarios();
        let eff = EffectivenessVector::new(vec![
            ("spray".into(), 0.9),
            ("theft".into(), 0.9),
            ("travel".into(), 0.5),
            ("legacy".into(), 0.5),
            ("phishing".into(), 0.5),
        ])
        .unwrap();
        assert!(matches!(risk_index(&s, &eff), Err(Error::ScenarioMismatch(_))));
        let short = EffectivenessVector::new(vec![("spray".into(), 0.9)]).unwrap();
        assert!(risk_index(&s, &short).is_err());
    }

    #[test]
    fn risk_index_invariant_under_matched_permutation() {
        let s1 = scenarios();
        let s2 = ScenarioSet::new(
            vec!["aitm".into(), "spray".into(), "legacy".into(), "theft".into(), "travel".into()],
            vec![0.15, 0.30, 0.15, 0.25, 0.15],
        )
        .unwrap();
        let eff = EffectivenessVector::new(vec![
            ("spray".into(), 0.9),
            ("theft".into(), 0.8),
            ("travel".into(), 0.5),
            ("legacy".into(), 0.4),
            ("aitm".into(), 0.2),
        ])
        .unwrap();
        assert_relative_eq!(
            risk_index(&s1, &eff).unwrap(),
            risk_index(&s2, &eff).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn raw_components_validation() {
        assert!(RawComponents::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(RawComponents::new(1.0, -0.1, 0.0, 0.0, 0.0).is_err());
        assert!(RawComponents::new(1.0, 0.0, 0.0, 0.0, 1.2).is_err());
        assert!(RawComponents::new(1.0, 0.0, 0.0, 0.0, f64::NAN).is_err());
    }
}
