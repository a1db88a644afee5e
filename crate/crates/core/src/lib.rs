//! Multicriteria benchmarking for open-ended text generation.
//!
//! Evaluation tables hold one row per (prompt instance, decoding method) with
//! several instance-level quality metrics. This crate turns such tables into
//! rankings of decoding methods with three engines:
//!
//! * [`davidson`]: the extended Bradley-Terry model with ties, fitted as a
//!   Poisson log-linear model on pairwise dominance tallies. Produces worth
//!   parameters on the simplex and a total order.
//! * [`ufg`]: union-free generic depth over the per-instance partial orders
//!   built by [`dominance`]. Identifies the most central and most outlying
//!   ranking structures without forcing comparability.
//! * [`qtext`]: the Q*Text composite score, a penalized weighted mean of
//!   normalized perplexity, coherence, and diversity, with a seeded random
//!   local-search tuner that maximizes Spearman correlation with human ratings.
//!
//! [`metrics`] computes the raw instance-level metrics from tokens and token
//! log-probabilities, [`poset`] holds the partial-order machinery, and
//! [`pipeline`] ingests files, drives the engines, and writes reports.
//!
//! ```
//! use decobench::dominance::{Comparator, MetricRecord, MetricSet, Outcome};
//!
//! let metrics = MetricSet::text_default();
//! let cmp = Comparator::new(metrics);
//! let a = MetricRecord::new("p1", "a", [("coherence", -1.0), ("diversity", 0.9), ("perplexity", 4.0)]);
//! let b = MetricRecord::new("p1", "b", [("coherence", -2.0), ("diversity", 0.9), ("perplexity", 4.0)]);
//! assert_eq!(cmp.compare(&a, &b).unwrap(), Outcome::IWins);
//! ```

pub mod davidson;
pub mod dominance;
pub mod metrics;
pub mod pipeline;
pub mod poset;
pub mod qtext;
pub mod ufg;

pub use davidson::{fit, FitConfig, WorthTable, ZeroCountPolicy};
pub use dominance::{ComparisonTally, Direction, MetricRecord, MetricSet, Outcome};
pub use poset::{Poset, PosetSet, Relation};
pub use qtext::{NormalizationBounds, QTextParams};
pub use ufg::{DepthMode, DepthResult};
