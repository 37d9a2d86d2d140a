//! Direct treatment effects on networks when each node's interference
//! radius is unknown.
//!
//! The interference term of every node is estimated from control outcomes
//! grouped by treated-count signatures of growing neighbourhoods; a
//! Lepski-type rule decides, per node, how many hops matter. The adjusted
//! outcomes feed outcome-regression and doubly robust effect estimators.
//!
//! ```
//! use adaptive_interference::{fit, estimate_or, Graph, InterferenceConfig, Observations};
//!
//! let graph = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
//! let obs = Observations::unstratified(vec![0, 1, 0, 0, 0], vec![5.0, 8.0, 5.0, 1.0, 1.0])?;
//! let config = InterferenceConfig { lambda: 2.0, delta: 0.5, sigma_bar: 0.1, max_depth: Some(1), ..Default::default() };
//! let fitted = fit(&graph, &obs, &config)?;
//! let tau = estimate_or(&obs, &fitted.f_hat())?;
//! assert_eq!(tau.tau_hat, 7.0);
//! # Ok::<(), adaptive_interference::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod interference;
pub mod io;
pub mod observations;
pub mod patterns;
pub mod rng;
pub mod simulation;

/// Version of every JSON report layout written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

pub use error::{Error, Result};
pub use estimators::{
    estimate_adte, estimate_dr, estimate_or, estimate_propensity, estimate_tau_of_x,
    variance_conservative, variance_plugin, EffectEstimate, Method, PropensityModel, Propensities,
    VarianceKind,
};
pub use graph::{Graph, GraphSpec};
pub use interference::{
    alpha, compute_dn, fit, fit_decoupled, leaf_mean, prune, InterferenceConfig, InterferenceFit,
    PatternSource, PrunedTree, SigmaMode,
};
pub use observations::{NodeObservation, Observations};
pub use patterns::{build_synthetic_pattern_set, signature, PatternIndex, PatternKey};
