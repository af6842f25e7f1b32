//! One random codebook drawn from the robust output marginal serves every
//! source in the ball at a rate slightly above the robust rate.
use rdball::{
    maxmin_solve, simulate_admissibility, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions, SimConfig,
};

fn main() -> rdball::Result<()> {
    let inst = ProblemInstance::new(DistortionMatrix::hamming(2), ProbVector::bernoulli(0.2)?, 0.02, 0.1)?;
    let sol = maxmin_solve(&inst, &RobustOptions::default())?;
    for margin in [-sol.rate, 0.0, 0.1, 0.3] {
        let report = simulate_admissibility(
            &inst,
            &sol,
            &SimConfig {
                rate_margin: margin,
                source_samples: 20,
                seed: 5,
                ..SimConfig::default()
            },
        )?;
        println!(
            "rate {:.3} ({:>5} words): worst mean distortion {:.4}, admissible at D + 0.05: {}",
            report.codebook_rate,
            report.codebook_size,
            report.worst_mean,
            report.admissible()
        );
    }
    Ok(())
}
