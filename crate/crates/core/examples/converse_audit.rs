//! No source in the ball needs more than the robust rate, and the worst-case
//! source needs exactly that much.
use rdball::{converse_audit, maxmin_solve, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions};

fn main() -> rdball::Result<()> {
    let inst = ProblemInstance::new(DistortionMatrix::hamming(2), ProbVector::bernoulli(0.2)?, 0.02, 0.1)?;
    let sol = maxmin_solve(&inst, &RobustOptions::default())?;
    let report = converse_audit(&inst, &sol, 500, 1e-6, 9)?;
    println!("robust rate          {:.9}", report.robust_rate);
    println!("largest sampled rate {:.9} (sample {})", report.supremum, report.argmax);
    println!("rate at worst source {:.9}", report.at_worst_source);
    println!("violations           {}", report.violations.len());
    Ok(())
}
