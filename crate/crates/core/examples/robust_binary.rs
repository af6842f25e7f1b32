//! Robust rate of a Bernoulli(0.2) source whose true bias may drift within a
//! KL ball of radius 0.02 nats, solved by both orderings of the game.
use rdball::{classical_rd, maxmin_solve, minimax_solve, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions};

fn main() -> rdball::Result<()> {
    let inst = ProblemInstance::new(DistortionMatrix::hamming(2), ProbVector::bernoulli(0.2)?, 0.02, 0.1)?;
    let opts = RobustOptions::default();
    let maxmin = maxmin_solve(&inst, &opts)?;
    let minimax = minimax_solve(&inst, &opts)?;
    let nominal = classical_rd(&inst.nominal, &inst.rho, inst.budget, 1e-12)?;

    println!("nominal rate      {:.9}", nominal.rate);
    println!("maxmin rate       {:.9}  ({:?})", maxmin.rate, maxmin.regime);
    println!("minimax rate      {:.9}", minimax.rate);
    println!("worst source      {:?}", maxmin.worst_source.as_slice());
    println!("output marginal   {:?}", maxmin.output.as_slice());
    println!("slope {:.6}, lambda {:.6}", maxmin.slope, maxmin.lambda);
    println!("KL(worst || nominal) = {:.9}", maxmin.achieved_kl);
    println!("distortion at worst  = {:.9}", maxmin.achieved_distortion);
    println!(
        "worst distortion of the kernel over the ball = {:.9}",
        maxmin.worst_case_distortion
    );
    Ok(())
}
