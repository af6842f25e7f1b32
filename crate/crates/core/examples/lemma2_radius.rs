//! The KL ball around the worst-case source that contains the whole nominal
//! ball, and the sampled distances that stay inside it.
use rdball::robust::lemma2_extremal;
use rdball::{kl_divergence, maxmin_solve, sample_ball, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions};

fn main() -> rdball::Result<()> {
    let inst = ProblemInstance::new(DistortionMatrix::hamming(2), ProbVector::bernoulli(0.2)?, 0.02, 0.1)?;
    let sol = maxmin_solve(&inst, &RobustOptions::default())?;
    let extremal = lemma2_extremal(&sol, &inst, 1e-12)?;
    let mut farthest: f64 = 0.0;
    for s in sample_ball(&inst.nominal, inst.radius, 10_000, 7)? {
        farthest = farthest.max(kl_divergence(&s, &sol.worst_source)?);
    }
    println!("containing radius         {:.9}", sol.lemma2_radius);
    println!("farthest of 10^4 samples  {farthest:.9}");
    println!("extremal point            {:?}", extremal.as_slice());
    println!(
        "its distance              {:.9}",
        kl_divergence(&extremal, &sol.worst_source)?
    );
    Ok(())
}
