//! Brute-force check of the robust rate: the largest classical rate over a
//! lattice of sources in the ball, with its certified interval.
use rdball::{
    brute_force_robust, maxmin_solve, DistortionMatrix, GridSpec, ProbVector, ProblemInstance, RobustOptions,
};

fn main() -> rdball::Result<()> {
    let rho = DistortionMatrix::hamming(3);
    for (nominal, radius, budget) in [([1.0 / 3.0; 3], 0.05, 0.2), ([0.6, 0.3, 0.1], 0.05, 0.15)] {
        let inst = ProblemInstance::new(rho.clone(), ProbVector::from_weights(nominal.to_vec())?, radius, budget)?;
        let sol = maxmin_solve(&inst, &RobustOptions::default())?;
        let grid = brute_force_robust(&inst, &GridSpec::default(), 1e-11)?;
        let (lo, hi) = grid.certified_interval(1e-9);
        println!(
            "nominal {nominal:.3?}: solver {:.8}, grid {:.8} at {:.4?}, interval [{lo:.8}, {hi:.8}], {} points",
            sol.rate,
            grid.value,
            grid.argmax.as_slice(),
            grid.points_evaluated
        );
    }
    Ok(())
}
