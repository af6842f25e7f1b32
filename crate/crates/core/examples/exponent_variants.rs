//! Compares the two readings of the worst-source exponent: only the
//! reciprocal one reproduces the solver's worst source and lands on the ball.
use rdball::robust::worst_source_from;
use rdball::{
    kl_divergence, lemma2_radius, maxmin_solve, DistortionMatrix, ExponentVariant, ProbVector, ProblemInstance,
    RobustOptions,
};

fn main() -> rdball::Result<()> {
    let inst = ProblemInstance::new(DistortionMatrix::hamming(2), ProbVector::bernoulli(0.2)?, 0.02, 0.1)?;
    let sol = maxmin_solve(&inst, &RobustOptions::default())?;
    println!("solver worst source {:?}, radius 0.02", sol.worst_source.as_slice());
    for variant in [ExponentVariant::Reciprocal, ExponentVariant::Literal] {
        let src = worst_source_from(sol.slope, sol.lambda, &sol.output, &inst, variant)?;
        println!(
            "{variant:?}: source {:?}, KL to nominal {:.6}, containing radius {:.6}",
            src.as_slice(),
            kl_divergence(&src, &inst.nominal)?,
            rdball::robust::lemma2_radius_with(&sol, &inst, 1e-12, variant)?
        );
    }
    println!("default containing radius {:.6}", lemma2_radius(&sol, &inst, 1e-12)?);
    Ok(())
}
