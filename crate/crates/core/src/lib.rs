//! Classical and robust rate-distortion for finite alphabets.
//!
//! The robust problem replaces a known source by every source within a
//! relative-entropy ball around a nominal distribution and asks for the
//! smallest rate that serves all of them at a common distortion budget.

pub mod ball;
pub mod classical;
pub mod cli;
pub mod coding;
pub mod error;
mod game;
pub mod oracle;
pub mod prob;
pub mod robust;

pub use ball::{free_energy, tilted_distribution, worstcase_expectation, TiltResult};
pub use classical::{
    ba_fixed_point, classical_rd, parametric_rate, rate_at_slope, rd_curve, ClassicalSolution, CurvePoint,
};
pub use coding::{
    converse_audit, encode_block, generate_codebook, simulate_admissibility, Codebook, ConverseReport, SimConfig,
    SimReport, SourceStats,
};
pub use error::{Error, Result};
pub use oracle::{brute_force_robust, brute_force_worstcase, sample_ball, GridResult, GridSpec};
pub use prob::{
    binary_entropy, expected_distortion, induced_output, kl_divergence, mutual_information, DistortionMatrix, Kernel,
    ProbVector, ProblemInstance,
};
pub use robust::{
    lemma2_radius, maxmin_solve, minimax_solve, robust_curve, robust_rate_value, saddle_check, ExponentVariant,
    RobustOptions, RobustSolution,
};
