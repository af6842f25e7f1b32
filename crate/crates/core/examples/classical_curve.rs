//! Classical rate-distortion of a Bernoulli source under Hamming distortion,
//! compared with the closed form `h(p) - h(D)`.
use rdball::{binary_entropy, classical_rd, rd_curve, DistortionMatrix, ProbVector};

fn main() -> rdball::Result<()> {
    let p = 0.2;
    let source = ProbVector::bernoulli(p)?;
    let rho = DistortionMatrix::hamming(2);

    println!("{:>6} {:>12} {:>12} {:>10}", "D", "solver", "closed form", "slope");
    for d in [0.02, 0.05, 0.1, 0.15, 0.19] {
        let sol = classical_rd(&source, &rho, d, 1e-12)?;
        let exact = binary_entropy(p) - binary_entropy(d);
        println!("{d:>6} {:>12.8} {:>12.8} {:>10.5}", sol.rate, exact, sol.slope);
    }

    println!("\nslope sweep:");
    let slopes: Vec<f64> = (0..8).map(|k| -0.5 * k as f64).collect();
    for pt in rd_curve(&source, &rho, &slopes, 1e-12)? {
        println!("s = {:>5.2}  D = {:.6}  R = {:.6}", pt.slope, pt.distortion, pt.rate);
    }
    Ok(())
}
