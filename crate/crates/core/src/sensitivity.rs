//! Weight-sensitivity analyses: Dirichlet rank stability and one-way
//! tornado perturbation.
//!
//! Both analyses operate on policy-level inputs: the mean normalized
//! components of each policy over its Monte Carlo run set. Rank stability
//! asks how often random weightings preserve the pairwise policy ordering
//! obtained under equal weights; the tornado reports how much the score can
//! swing when one component moves across a range while the others stay at
//! their means.
//!
//! Weight draws come from a flat Dirichlet: `dimension` independent
//! unit-rate exponentials, normalized. Draw `i` uses the substream
//! `stream_seed(seed, DOMAIN_WEIGHTS, 0, i, 0)`, and each exponential is
//! `-ln(1 - u)` with `u` from [`u64_to_open01`], so draws are reproducible
//! under any evaluation order.

use indexmap::IndexMap;
use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::format::format_sig9;
use crate::metric::{compute_sfq, NormalizedComponents, WeightVector};
use crate::rng::{stream_rng, stream_seed, u64_to_open01, DOMAIN_WEIGHTS};
use crate::simulate::RunMap;

/// One draw from the weight prior.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSample {
    pub draw_index: u64,
    pub weights: WeightVector,
}

/// Preservation outcome for one unordered policy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPreservation {
    pub policy_a: String,
    pub policy_b: String,
    pub preserved_fraction: f64,
    /// Per-draw outcomes in draw order (for the plot-data export).
    pub preserved: Vec<bool>,
}

/// Rank-stability report across weight draws.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStabilityReport {
    pub draws: u64,
    /// Mean of per-pair preserved fractions (equivalently, the fraction of
    /// (draw, pair) events preserved).
    pub preserved_fraction: f64,
    pub pairs: Vec<PairPreservation>,
    /// Policy ids sorted by ascending equal-weight score.
    pub reference_order: Vec<String>,
}

/// The five score terms a tornado can perturb. `ResidualRisk` perturbs the
/// security term `1 - r_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SfqTerm {
    Latency,
    Failure,
    Prompts,
    Helpdesk,
    ResidualRisk,
}

impl SfqTerm {
    pub const ALL: [SfqTerm; 5] = [
        SfqTerm::Latency,
        SfqTerm::Failure,
        SfqTerm::Prompts,
        SfqTerm::Helpdesk,
        SfqTerm::ResidualRisk,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SfqTerm::Latency => "latency",
            SfqTerm::Failure => "failure",
            SfqTerm::Prompts => "prompts",
            SfqTerm::Helpdesk => "helpdesk",
            SfqTerm::ResidualRisk => "residual_risk",
        }
    }

    fn index(&self) -> usize {
        match self {
            SfqTerm::Latency => 0,
            SfqTerm::Failure => 1,
            SfqTerm::Prompts => 2,
            SfqTerm::Helpdesk => 3,
            SfqTerm::ResidualRisk => 4,
        }
    }
}

/// Perturbation interval for each score term, in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermRanges {
    /// `[lo, hi]` per term, ordered as [`SfqTerm::ALL`].
    pub ranges: [(f64, f64); 5],
}

impl TermRanges {
    pub fn new(ranges: [(f64, f64); 5]) -> Result<Self> {
        for (term, (lo, hi)) in SfqTerm::ALL.iter().zip(ranges.iter()) {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                return Err(Error::invalid(
                    format!("ranges[{}]", term.id()),
                    format!("must satisfy 0 <= lo <= hi <= 1, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(Self { ranges })
    }

    /// The observed cross-policy range of each term: the default tornado
    /// perturbation when no explicit ranges are configured.
    pub fn from_observed(mean_components: &IndexMap<String, NormalizedComponents>) -> Result<Self> {
        if mean_components.is_empty() {
            return Err(Error::invalid("mean_components", "must not be empty"));
        }
        let mut lo = [f64::INFINITY; 5];
        let mut hi = [f64::NEG_INFINITY; 5];
        for comps in mean_components.values() {
            for (k, v) in comps.score_terms().iter().enumerate() {
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        let mut ranges = [(0.0, 0.0); 5];
        for k in 0..5 {
            ranges[k] = (lo[k], hi[k]);
        }
        Self::new(ranges)
    }
}

/// One tornado entry: a policy's score with one term pinned to each end of
/// its range.
#[derive(Debug, Clone, PartialEq)]
pub struct TornadoEntry {
    pub term: SfqTerm,
    pub policy_id: String,
    pub sfq_low: f64,
    pub sfq_high: f64,
    pub swing: f64,
}

/// Tornado aggregate per term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSwing {
    pub term: SfqTerm,
    pub max_swing: f64,
    /// How many (policy, endpoint) evaluations moved the policy away from
    /// its equal-weight reference rank.
    pub rank_changes: u64,
}

/// One-way perturbation report, terms sorted by descending max swing.
#[derive(Debug, Clone, PartialEq)]
pub struct TornadoReport {
    pub entries: Vec<TornadoEntry>,
    pub term_swings: Vec<TermSwing>,
}

/// Mean normalized components per policy over a run set, in run-map order.
pub fn mean_normalized(runs: &RunMap) -> Result<IndexMap<String, NormalizedComponents>> {
    let mut out = IndexMap::new();
    for (id, policy_runs) in runs {
        if policy_runs.is_empty() {
            return Err(Error::invalid(format!("runs[{id}]"), "must not be empty"));
        }
        let n = policy_runs.len() as f64;
        let mut acc = [0.0; 5];
        for run in policy_runs {
            let c = run.normalized;
            for (k, v) in [c.l_hat, c.f_hat, c.p_hat, c.h_hat, c.r_hat].iter().enumerate() {
                acc[k] += v;
            }
        }
        out.insert(
            id.clone(),
            NormalizedComponents::new(acc[0] / n, acc[1] / n, acc[2] / n, acc[3] / n, acc[4] / n)?,
        );
    }
    Ok(out)
}

/// Normalize raw exponential draws onto the simplex.
pub fn weights_from_raw_draws(raws: &[f64]) -> Result<Vec<f64>> {
    if raws.is_empty() || raws.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid("raw_draws", "must be positive and finite"));
    }
    let sum: f64 = raws.iter().sum();
    Ok(raws.iter().map(|r| r / sum).collect())
}

/// Draw flat-Dirichlet simplex points of the given dimension.
pub fn sample_simplex(count: u64, dimension: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count < 1 {
        return Err(Error::invalid("count", "must be >= 1"));
    }
    if dimension < 2 {
        return Err(Error::invalid("dimension", format!("must be >= 2, got {dimension}")));
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(stream_seed(seed, DOMAIN_WEIGHTS, 0, i, 0));
            let raws: Vec<f64> = (0..dimension).map(|_| -(1.0 - u64_to_open01(rng.next_u64())).ln()).collect();
            weights_from_raw_draws(&raws).expect("exponential draws are positive")
        })
        .collect())
}

/// Draw weight vectors for the five score terms from the flat Dirichlet.
pub fn sample_weights(count: u64, seed: u64) -> Result<Vec<WeightSample>> {
    let simplex = sample_simplex(count, 5, seed)?;
    simplex
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let weights = WeightVector::from_array([w[0], w[1], w[2], w[3], w[4]])?;
            Ok(WeightSample { draw_index: i as u64, weights })
        })
        .collect()
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Policy ids sorted by ascending equal-weight score (ties keep input order).
pub fn equal_weight_order(mean_components: &IndexMap<String, NormalizedComponents>) -> Vec<String> {
    let equal = WeightVector::equal();
    let mut scored: Vec<(String, f64)> = mean_components
        .iter()
        .map(|(id, c)| (id.clone(), compute_sfq(c, &equal)))
        .collect();
    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("scores are finite"));
    scored.into_iter().map(|(id, _)| id).collect()
}

/// Pairwise rank stability across weight draws.
///
/// A pair is preserved under a draw when the sign of its score difference
/// matches the sign under equal weights (a zero matches only a zero). The
/// report's overall fraction averages over all draws and unordered pairs.
pub fn rank_stability(
    mean_components: &IndexMap<String, NormalizedComponents>,
    draws: &[WeightSample],
) -> Result<RankStabilityReport> {
    if mean_components.len() < 2 {
        return Err(Error::invalid(
            "mean_components",
            format!("need >= 2 policies, got {}", mean_components.len()),
        ));
    }
    if draws.is_empty() {
        return Err(Error::invalid("draws", "must not be empty"));
    }

    let ids: Vec<&String> = mean_components.keys().collect();
    let terms: Vec<[f64; 5]> = mean_components.values().map(|c| c.score_terms()).collect();
    let equal = WeightVector::equal();

    let mut pairs = Vec::new();
    let mut preserved_events = 0u64;
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            let gap: [f64; 5] = std::array::from_fn(|k| terms[i][k] - terms[j][k]);
            let dot = |w: &WeightVector| -> f64 {
                let w = w.as_array();
                (0..5).map(|k| w[k] * gap[k]).sum()
            };
            let reference_sign = sign(dot(&equal));
            let preserved: Vec<bool> = draws.iter().map(|d| sign(dot(&d.weights)) == reference_sign).collect();
            let count = preserved.iter().filter(|p| **p).count() as u64;
            preserved_events += count;
            pairs.push(PairPreservation {
                policy_a: ids[i].clone(),
                policy_b: ids[j].clone(),
                preserved_fraction: count as f64 / draws.len() as f64,
                preserved,
            });
        }
    }

    let total_events = (pairs.len() * draws.len()) as u64;
    Ok(RankStabilityReport {
        draws: draws.len() as u64,
        preserved_fraction: preserved_events as f64 / total_events as f64,
        pairs,
        reference_order: equal_weight_order(mean_components),
    })
}

/// One-way tornado: recompute each policy's score with one term pinned to
/// each end of its range, everything else at its mean.
pub fn tornado(
    mean_components: &IndexMap<String, NormalizedComponents>,
    weights: &WeightVector,
    ranges: &TermRanges,
) -> Result<TornadoReport> {
    if mean_components.is_empty() {
        return Err(Error::invalid("mean_components", "must not be empty"));
    }
    let reference_order = equal_weight_order(mean_components);
    let rank_of = |id: &str, order: &[String]| order.iter().position(|o| o == id).expect("policy in order");

    let score_with_term = |comps: &NormalizedComponents, term: SfqTerm, value: f64| -> f64 {
        let mut c = *comps;
        match term {
            SfqTerm::Latency => c.l_hat = value,
            SfqTerm::Failure => c.f_hat = value,
            SfqTerm::Prompts => c.p_hat = value,
            SfqTerm::Helpdesk => c.h_hat = value,
            // Perturbing the security term to v means r_hat = 1 - v.
            SfqTerm::ResidualRisk => c.r_hat = 1.0 - value,
        }
        compute_sfq(&c, weights)
    };

    let equal = WeightVector::equal();
    let mut entries = Vec::new();
    let mut term_swings = Vec::new();
    for term in SfqTerm::ALL {
        let (lo, hi) = ranges.ranges[term.index()];
        let mut max_swing = 0.0f64;
        let mut rank_changes = 0u64;
        for (policy_id, comps) in mean_components {
            let sfq_low = score_with_term(comps, term, lo);
            let sfq_high = score_with_term(comps, term, hi);
            let swing = (sfq_high - sfq_low).abs();
            max_swing = max_swing.max(swing);

            for endpoint in [lo, hi] {
                let mut perturbed: IndexMap<String, NormalizedComponents> = mean_components.clone();
                let mut c = *perturbed.get(policy_id.as_str()).expect("policy present");
                match term {
                    SfqTerm::Latency => c.l_hat = endpoint,
                    SfqTerm::Failure => c.f_hat = endpoint,
                    SfqTerm::Prompts => c.p_hat = endpoint,
                    SfqTerm::Helpdesk => c.h_hat = endpoint,
                    SfqTerm::ResidualRisk => c.r_hat = 1.0 - endpoint,
                }
                perturbed[policy_id.as_str()] = c;
                let perturbed_order: Vec<String> = {
                    let mut scored: Vec<(String, f64)> =
                        perturbed.iter().map(|(id, c)| (id.clone(), compute_sfq(c, &equal))).collect();
                    scored.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("scores are finite"));
                    scored.into_iter().map(|(id, _)| id).collect()
                };
                if rank_of(policy_id, &perturbed_order) != rank_of(policy_id, &reference_order) {
                    rank_changes += 1;
                }
            }

            entries.push(TornadoEntry { term, policy_id: policy_id.clone(), sfq_low, sfq_high, swing });
        }
        term_swings.push(TermSwing { term, max_swing, rank_changes });
    }

    term_swings.sort_by(|a, b| b.max_swing.partial_cmp(&a.max_swing).expect("swings are finite"));
    // Entries follow the term ranking for readable CSV output.
    let term_rank: IndexMap<SfqTerm, usize> =
        term_swings.iter().enumerate().map(|(i, ts)| (ts.term, i)).collect();
    entries.sort_by_key(|e| term_rank[&e.term]);
    Ok(TornadoReport { entries, term_swings })
}

/// Write the rank-stability plot data: one row per (draw, pair).
pub fn write_rank_stability_csv<W: Write>(out: &mut W, report: &RankStabilityReport) -> std::io::Result<()> {
    writeln!(out, "draw_index,pair,preserved")?;
    for draw in 0..report.draws {
        for pair in &report.pairs {
            writeln!(
                out,
                "{},{}|{},{}",
                draw,
                pair.policy_a,
                pair.policy_b,
                if pair.preserved[draw as usize] { 1 } else { 0 }
            )?;
        }
    }
    Ok(())
}

/// Write the tornado plot data.
pub fn write_tornado_csv<W: Write>(out: &mut W, report: &TornadoReport) -> std::io::Result<()> {
    writeln!(out, "component,policy,sfq_low,sfq_high,swing")?;
    for e in &report.entries {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.term.id(),
            e.policy_id,
            format_sig9(e.sfq_low),
            format_sig9(e.sfq_high),
            format_sig9(e.swing)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn comps(l: f64, f: f64, p: f64, h: f64, r: f64) -> NormalizedComponents {
        NormalizedComponents::new(l, f, p, h, r).unwrap()
    }

    #[test]
    fn raw_draw_normalization() {
        let w = weights_from_raw_draws(&[2.0, 3.0, 5.0, 4.0, 6.0]).unwrap();
        let expected = [0.10, 0.15, 0.25, 0.20, 0.30];
        for (a, b) in w.iter().zip(expected.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn simplex_draws_sum_to_one() {
        for draw in sample_simplex(200, 5, 77).unwrap() {
            let sum: f64 = draw.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(draw.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn weight_samples_are_deterministic_and_indexed() {
        let a = sample_weights(50, 5).unwrap();
        let b = sample_weights(50, 5).unwrap();
        assert_eq!(a, b);
        for (i, s) in a.iter().enumerate() {
            assert_eq!(s.draw_index, i as u64);
        }
        let c = sample_weights(50, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn identical_policies_always_preserve() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.3, 0.3, 0.3, 0.3, 0.5));
        m.insert("b".to_string(), comps(0.3, 0.3, 0.3, 0.3, 0.5));
        let draws = sample_weights(500, 3).unwrap();
        let report = rank_stability(&m, &draws).unwrap();
        assert_eq!(report.preserved_fraction, 1.0);
    }

    #[test]
    fn dominated_pairs_always_preserve() {
        let mut m = IndexMap::new();
        // a >= b in every score term, strictly in two.
        m.insert("a".to_string(), comps(0.5, 0.4, 0.3, 0.3, 0.2));
        m.insert("b".to_string(), comps(0.4, 0.4, 0.2, 0.3, 0.2));
        let draws = sample_weights(2000, 11).unwrap();
        let report = rank_stability(&m, &draws).unwrap();
        assert_eq!(report.preserved_fraction, 1.0);
    }

    #[test]
    fn single_equal_weight_draw_preserves_everything() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.5, 0.4, 0.3, 0.3, 0.2));
        m.insert("b".to_string(), comps(0.1, 0.9, 0.2, 0.4, 0.7));
        m.insert("c".to_string(), comps(0.3, 0.3, 0.3, 0.3, 0.3));
        let draws = vec![WeightSample { draw_index: 0, weights: WeightVector::equal() }];
        let report = rank_stability(&m, &draws).unwrap();
        assert_eq!(report.preserved_fraction, 1.0);
    }

    #[test]
    fn rank_stability_is_invariant_under_relabeling() {
        let mut m1 = IndexMap::new();
        m1.insert("x".to_string(), comps(0.5, 0.4, 0.3, 0.3, 0.2));
        m1.insert("y".to_string(), comps(0.2, 0.5, 0.25, 0.35, 0.6));
        let mut m2 = IndexMap::new();
        m2.insert("y".to_string(), comps(0.2, 0.5, 0.25, 0.35, 0.6));
        m2.insert("x".to_string(), comps(0.5, 0.4, 0.3, 0.3, 0.2));
        let draws = sample_weights(1000, 21).unwrap();
        let r1 = rank_stability(&m1, &draws).unwrap();
        let r2 = rank_stability(&m2, &draws).unwrap();
        assert_eq!(r1.preserved_fraction, r2.preserved_fraction);
    }

    #[test]
    fn rank_stability_needs_two_policies() {
        let mut m = IndexMap::new();
        m.insert("only".to_string(), comps(0.1, 0.1, 0.1, 0.1, 0.1));
        assert!(rank_stability(&m, &sample_weights(10, 1).unwrap()).is_err());
    }

    #[test]
    fn tornado_full_range_equal_weights_swings_are_point_two() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.3, 0.3, 0.3, 0.3, 0.5));
        let ranges = TermRanges::new([(0.0, 1.0); 5]).unwrap();
        let report = tornado(&m, &WeightVector::equal(), &ranges).unwrap();
        for e in &report.entries {
            assert_relative_eq!(e.swing, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn tornado_swing_equals_weight_times_width() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.3, 0.3, 0.3, 0.3, 0.5));
        m.insert("b".to_string(), comps(0.5, 0.2, 0.4, 0.1, 0.9));
        let weights = WeightVector::new(0.4, 0.15, 0.15, 0.15, 0.15).unwrap();
        let ranges = TermRanges::new([(0.0, 1.0), (0.2, 0.7), (0.1, 0.1), (0.0, 0.5), (0.25, 0.75)]).unwrap();
        let report = tornado(&m, &weights, &ranges).unwrap();
        let widths = [1.0, 0.5, 0.0, 0.5, 0.5];
        for e in &report.entries {
            let expected = weights.as_array()[e.term.index()] * widths[e.term.index()];
            assert!((e.swing - expected).abs() < 1e-12, "term {:?}", e.term);
        }
        let latency = report.term_swings.iter().find(|t| t.term == SfqTerm::Latency).unwrap();
        assert_relative_eq!(latency.max_swing, 0.4, epsilon = 1e-12);
        assert_eq!(report.term_swings[0].term, SfqTerm::Latency);
    }

    #[test]
    fn tornado_rejects_out_of_range_intervals() {
        assert!(TermRanges::new([(0.0, 1.2), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(TermRanges::new([(0.5, 0.4), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn observed_ranges_span_policies() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.1, 0.3, 0.3, 0.3, 0.2));
        m.insert("b".to_string(), comps(0.5, 0.3, 0.4, 0.3, 0.9));
        let ranges = TermRanges::from_observed(&m).unwrap();
        assert_eq!(ranges.ranges[0], (0.1, 0.5));
        assert_eq!(ranges.ranges[1], (0.3, 0.3));
        // Security term is 1 - r_hat: r_hat 0.2 and 0.9 give 0.8 and 0.1.
        assert_relative_eq!(ranges.ranges[4].0, 0.1, epsilon = 1e-12);
        assert_relative_eq!(ranges.ranges[4].1, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn csv_outputs_are_stable() {
        let mut m = IndexMap::new();
        m.insert("a".to_string(), comps(0.5, 0.4, 0.3, 0.3, 0.2));
        m.insert("b".to_string(), comps(0.2, 0.5, 0.25, 0.35, 0.6));
        let draws = sample_weights(20, 3).unwrap();
        let report = rank_stability(&m, &draws).unwrap();
        let mut csv1 = Vec::new();
        write_rank_stability_csv(&mut csv1, &report).unwrap();
        let mut csv2 = Vec::new();
        write_rank_stability_csv(&mut csv2, &report).unwrap();
        assert_eq!(csv1, csv2);
        let text = String::from_utf8(csv1).unwrap();
        assert!(text.starts_with("draw_index,pair,preserved\n"));
        assert_eq!(text.lines().count(), 1 + 20);
        assert!(text.contains("a|b"));
    }
}
