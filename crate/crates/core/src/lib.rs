//! Security Friction Quotient (SFQ) toolkit.
//!
//! A config-driven simulator and metric library for scoring identity-policy
//! candidates. The SFQ combines normalized operational-friction components
//! (sign-in latency, failure rate, MFA prompts, helpdesk load) with a
//! scenario-weighted residual-risk term into one bounded score, and the
//! surrounding machinery evaluates policy catalogs with seeded Monte Carlo
//! runs, bootstrap confidence intervals, effect sizes, weight-sensitivity
//! analyses, and a calibration routine that fits catalog parameters to
//! target score summaries.
//!
//! Modules:
//!
//! * [`metric`] — the score itself: normalization, weights, residual risk.
//! * [`catalog`] — config types, TOML loading, canonical serialization, the
//!   builtin policy catalog.
//! * [`simulate`] — seeded Monte Carlo run generation (aggregate and
//!   event-level trace modes).
//! * [`stats`] — bootstrap confidence intervals, Cohen's d, policy
//!   summaries.
//! * [`sensitivity`] — Dirichlet rank stability and tornado analyses.
//! * [`calibrate`] — coordinate-descent fitting of catalog parameters to
//!   target means and dispersion.
//! * [`rng`] — the counter-based substream derivation all sampling uses.
//!
//! Determinism is a contract throughout: identical configs and seeds produce
//! byte-identical artifacts regardless of thread count.

pub mod calibrate;
pub mod catalog;
pub mod error;
pub mod format;
pub mod metric;
pub mod rng;
pub mod sensitivity;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
