//! Capacity bounds, optimal relay placement, and coverage regions for a
//! full-duplex MIMO relay channel under i.i.d. Rayleigh fading with
//! receiver-only channel state information.
//!
//! The library has two tracks that check each other:
//!
//! - an analytic track ([`capacity`]): the exact ergodic rate of the
//!   Rayleigh MIMO link, its high-SNR approximation, and the Wishart
//!   log-determinant expectation behind it;
//! - a sampling track ([`bounds`]): Monte Carlo estimates of the cut-set
//!   upper bound, the decode-and-forward achievable rate, and the direct
//!   link, over deterministic seeded substreams.
//!
//! [`coverage`] builds on both: it inverts the rate-distance relation to
//! place the relay and scans destination grids into coverage masks.
//! [`validate`] packages the acceptance checks that tie the tracks
//! together.

// Domain checks are written `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` lets through. Frozen oracle constants keep
// every digit the oracle produced even where f64 rounds them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod coverage;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod validate;

pub use bounds::{
    broadcast_cut_rate, estimate_bounds, mac_cut_rate, mc_ergodic_rate, no_relay_rate,
    relay_link_rate, BoundsReport, CapacityEstimate, NoRelayMethod,
};
pub use capacity::{
    aux_log_moment, exact_ergodic_rate, high_snr_rate, log_moment_matrix, mimo_distance_from_siso,
    siso_rate, wishart_logdet_expectation, LinkShape,
};
pub use channel::{
    db_to_linear, effective_snr, path_loss_coefficients, sample_channel_realization,
    sample_cn01_matrix, AntennaConfig, Geometry, PathLossCoefficients, PowerBudget,
};
pub use coverage::{
    antenna_ratio_sweep, boundary_polylines, coverage_region, optimal_relay_location,
    rate_vs_antennas_sweep, rate_vs_distance_sweep, region_area, CoverageMode, CoverageRegion,
    GridSpec, PlacementSolution,
};
pub use error::{Error, Result};
pub use scenario::{McParams, ScenarioConfig, SolverParams, DEFAULT_SAMPLES};
