//! Simulation and analysis of adaptive rotate-and-measure preparation of
//! Dicke states `|j, m>`.

pub mod angles;
pub mod asymptotics;
pub mod cavity;
pub mod chain;
pub mod config;
pub mod error;
pub mod geometry;
pub mod simulate;
pub mod special;
pub mod spin;
pub mod stats;
pub mod wigner;

pub use angles::{
    approx_angle_mt0, geometric_angle, optimal_angle, optimal_angles, overlap_probability, policy_angles,
    AnglePolicyResult,
};
pub use asymptotics::{
    bessel_limit, beta_moment, contraction_sum, reset_probability, stationary_phase_d, AsymptoticComparison,
};
pub use cavity::{
    crb_variance, fisher_information, required_photons, resolvable, resonant_peak_gap, simulate_weight_estimator,
    transmission, CavityParams, EstimatorResult,
};
pub use chain::{
    build_chain, build_chain_scoped, expected_steps, mt_sweep, naive_expected_steps, AbsorptionReport, Scope,
    TransitionChain,
};
pub use config::{config_to_json, parse_config, ConfigError, ConfigFile, KeyViolation};
pub use error::{Error, Result};
pub use geometry::{geometric_transition_pdf, husimi_q_dicke, infinitesimal_arc_length, QDistribution};
pub use simulate::{
    monte_carlo_summary, run_many, run_statevector, trajectory_rng, Engine, McSummary, StepRecord, SymmetricState,
    TrajectoryRecord, TrajectorySampler,
};
pub use spin::{
    default_max_iterations, ring_radius, two_m_at, validate_spin, Angle, AnglePolicy, ProtocolConfig, ResetPolicy,
    SpinSpec,
};
pub use stats::{linear_fit, two_sample_chi_square, LinearFit};
pub use wigner::{d_column, d_element, outcome_distribution, Backend, RotationColumn};
