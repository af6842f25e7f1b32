//! Monte-Carlo audit of the saddle point: sampled sources cannot beat the
//! robust rate and sampled feasible kernels cannot undercut it.
use rdball::{maxmin_solve, saddle_check, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions};

fn main() -> rdball::Result<()> {
    let rho = DistortionMatrix::new(vec![
        vec![0.0, 0.7, 1.0, 0.4],
        vec![0.9, 0.0, 0.3, 0.6],
        vec![0.5, 0.8, 0.0, 0.2],
    ])?;
    let inst = ProblemInstance::new(rho, ProbVector::new(vec![0.5, 0.3, 0.2])?, 0.02, 0.25)?;
    let sol = maxmin_solve(&inst, &RobustOptions::default())?;
    let report = saddle_check(&sol, &inst, 1000, 1e-6, 42)?;
    println!("rate {:.9}", report.rate);
    println!("largest Lagrangian excess   {:.3e}", report.max_lagrangian_excess);
    println!("largest kernel deficit      {:.3e}", report.max_kernel_deficit);
    println!("largest converse excess     {:.3e}", report.max_converse_excess);
    println!(
        "plain I(source; q*) excess  {:.3e} (not a violation)",
        report.max_source_excess
    );
    println!("violations: {}", report.violations.len());
    Ok(())
}
