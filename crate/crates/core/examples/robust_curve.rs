//! Robust rate-distortion curves for several ball radii, printed as CSV.
//! The sweep skips the smallest feasible budget, where the slope diverges.
use rdball::cli::CURVE_HEADER;
use rdball::robust::{robust_min_distortion, robust_zero_rate_distortion};
use rdball::{robust_curve, DistortionMatrix, ProbVector, ProblemInstance, RobustOptions};

fn main() -> rdball::Result<()> {
    let rho = DistortionMatrix::new(vec![
        vec![0.0, 0.7, 1.0, 0.4],
        vec![0.9, 0.0, 0.3, 0.6],
        vec![0.5, 0.8, 0.0, 0.2],
    ])?;
    let base = ProblemInstance::new(rho, ProbVector::new(vec![0.5, 0.3, 0.2])?, 0.0, 0.0)?;
    for radius in [0.0, 0.02, 0.1] {
        let inst = base.with_radius(radius)?;
        let lo = robust_min_distortion(&inst)?;
        let hi = robust_zero_rate_distortion(&inst)?;
        let budgets: Vec<f64> = (1..=10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect();
        println!("# radius {radius}");
        println!("{CURVE_HEADER}");
        for (sol, d) in robust_curve(&inst, &budgets, &RobustOptions::default())?
            .iter()
            .zip(&budgets)
        {
            let p = sol.curve_point(*d);
            println!(
                "{},{},{},{},{},{}",
                p.distortion, p.rate, p.slope, p.lambda, p.kl_achieved, p.worst_distortion
            );
        }
    }
    Ok(())
}
