//! Config-driven front end for the instability laboratory.
//!
//! A single TOML document describes a scenario end to end: the grid, the
//! operator L = -Delta + V, the steady state v, the nonlinearity f, the
//! coefficient pair (a, b) with its declared norms, the equation kind, the
//! perturbation u0 = v + eps phi_1 (plus the initial rate delta phi_1 in
//! the hyperbolic case), the certification clauses, and the output
//! directory. The [`config`] module owns the schema and its validation;
//! [`runner`] builds the discrete scenario, integrates it, evaluates each
//! clause into a verdict, and persists the artifacts. Every run directory
//! carries the resolved config, the steady state, the eigenpair, the
//! sampled time series, the requested envelopes, the run metadata and the
//! verdicts; `verify` recomputes the verdicts from those files alone.
//!
//! Exit discipline: 0 when every requested clause passes, 2 when a
//! hypothesis audit or a clause conclusion fails (a verdict, not an
//! accident), 1 for operational failures such as schema errors or missing
//! files.

pub mod config;
pub mod runner;

pub use config::{parse_config, parse_document, ConfigDocument, ValidatedConfig};
pub use runner::{batch, dichotomy, run, verify, CliError, RunSummary};
