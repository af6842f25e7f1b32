//! The worst expectation of a payoff over a relative-entropy ball, computed
//! from the free-energy dual and checked against the tilted maximizer.
use rdball::{free_energy, kl_divergence, tilted_distribution, worstcase_expectation, ProbVector};

fn main() -> rdball::Result<()> {
    let mu = ProbVector::new(vec![0.5, 0.3, 0.2])?;
    let payoff = [1.0, 0.2, -0.5];

    for scale in [0.25, 1.0, 4.0] {
        let tilt = tilted_distribution(&payoff, &mu, scale)?;
        println!(
            "scale {scale:>4}: free energy {:.6}, tilt {:?}",
            free_energy(&payoff, &mu, scale)?,
            tilt.as_slice()
        );
    }

    for radius in [0.0, 0.01, 0.1, 1.0, 5.0] {
        let wc = worstcase_expectation(&payoff, &mu, radius, 1e-12)?;
        println!(
            "radius {radius:>4}: worst expectation {:.6}, KL reached {:.6}, active {}, multiplier {:.4}",
            wc.value,
            kl_divergence(&wc.maximizer, &mu)?,
            wc.constraint_active,
            wc.multiplier
        );
    }
    Ok(())
}
