//! Rate-distortion for a single known source.
//!
//! For a slope `s ≤ 0` the optimal test channel is the tilt
//! `q(x,y) = e^{sρ(x,y)} ν(y) / Σ_z e^{sρ(x,z)} ν(z)` of its own output
//! marginal `ν`; [`ba_fixed_point`] finds that pair by alternating the tilt
//! with the marginal update. [`classical_rd`] then picks the slope whose
//! distortion meets the budget with equality.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{expected_distortion, mutual_information, DistortionMatrix, Kernel, ProbVector};

pub const DEFAULT_BA_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
const BISECTION_CAP: usize = 200;
const DOUBLING_CAP: usize = 60;
/// Relative width at which a slope bracket is treated as a single point.
pub(crate) const SLOPE_COLLAPSE: f64 = 1e-10;

/// Converged Blahut–Arimoto pair for one slope.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalSolution {
    pub slope: f64,
    pub kernel: Kernel,
    pub output: ProbVector,
    pub rate: f64,
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One sample of a rate-distortion curve together with its multipliers.
///
/// Classical points carry `lambda = 0`, `kl_achieved = 0` and
/// `worst_distortion = distortion`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub distortion: f64,
    pub rate: f64,
    pub slope: f64,
    pub lambda: f64,
    pub kl_achieved: f64,
    pub worst_distortion: f64,
}

/// `e^{sρ}` with each row shifted by its minimum so the largest entry of a
/// row is exactly 1; `offset[x] = s · min_y ρ(x, y)` restores the scale.
#[derive(Debug, Clone)]
pub(crate) struct SlopeTable {
    pub slope: f64,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub offset: Vec<f64>,
}

impl SlopeTable {
    pub fn new(rho: &DistortionMatrix, slope: f64) -> Self {
        let minima = rho.row_minima();
        let mut weights = Vec::with_capacity(rho.rows() * rho.cols());
        for (x, &m) in minima.iter().enumerate() {
            weights.extend(rho.row(x).iter().map(|&r| (slope * (r - m)).exp()));
        }
        SlopeTable {
            slope,
            cols: rho.cols(),
            weights,
            offset: minima.iter().map(|&m| slope * m).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.offset.len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.weights[x * self.cols..(x + 1) * self.cols]
    }

    /// Shifted partition sums `Σ_y ν(y) e^{s(ρ(x,y) - min ρ(x,·))}`.
    pub fn shifted_partition(&self, nu: &[f64], out: &mut [f64]) {
        for (x, z) in out.iter_mut().enumerate() {
            *z = self.row(x).iter().zip(nu).map(|(w, n)| w * n).sum();
        }
    }

    /// `ln Σ_y e^{sρ(x,y)} ν(y)` for every source symbol.
    pub fn log_partition(&self, nu: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.rows()];
        self.shifted_partition(nu, &mut z);
        z.iter().zip(&self.offset).map(|(z, o)| o + z.ln()).collect()
    }

    /// One marginal update `ν'(y) = ν(y) Σ_x w(x) e^{sρ(x,y)} / Z_x`.
    pub fn marginal_update(&self, weights: &[f64], nu: &[f64], z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (x, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let scale = w / z[x];
            for (o, &e) in out.iter_mut().zip(self.row(x)) {
                *o += scale * e;
            }
        }
        let mut total = 0.0;
        for (o, &n) in out.iter_mut().zip(nu) {
            *o *= n;
            total += *o;
        }
        out.iter_mut().for_each(|v| *v /= total);
    }

    /// The tilted kernel of `ν`.
    pub fn kernel(&self, nu: &[f64]) -> Kernel {
        let mut data = Vec::with_capacity(self.weights.len());
        for x in 0..self.rows() {
            let row: Vec<f64> = self.row(x).iter().zip(nu).map(|(w, n)| w * n).collect();
            let z: f64 = row.iter().sum();
            data.extend(row.into_iter().map(|v| v / z));
        }
        Kernel::from_flat(self.rows(), self.cols, data)
    }
}

pub(crate) fn check_slope(s: f64) -> Result<()> {
    if !s.is_finite() || s > 0.0 {
        return Err(Error::InvalidSlope(s));
    }
    Ok(())
}

pub(crate) fn check_dims(mu: &ProbVector, rho: &DistortionMatrix) -> Result<()> {
    if mu.len() != rho.rows() {
        return Err(Error::DimensionMismatch {
            expected: rho.rows(),
            found: mu.len(),
        });
    }
    Ok(())
}

/// Alternates the tilted kernel and the output marginal until the marginal
/// moves by less than `tol` in max-norm and no symbol's mass grows by a
/// factor above `1 + tol`, or `max_iter` sweeps have run.
///
/// Hitting `max_iter` is reported through `converged = false`, not an error.
pub fn ba_fixed_point(
    mu: &ProbVector,
    rho: &DistortionMatrix,
    s: f64,
    init_output: &ProbVector,
    tol: f64,
    max_iter: usize,
) -> Result<ClassicalSolution> {
    check_dims(mu, rho)?;
    check_slope(s)?;
    if init_output.len() != rho.cols() {
        return Err(Error::DimensionMismatch {
            expected: rho.cols(),
            found: init_output.len(),
        });
    }
    if let Some(index) = init_output.iter().position(|&v| v <= 0.0) {
        return Err(Error::NonPositiveInit { index });
    }
    let table = SlopeTable::new(rho, s);
    let mut nu = init_output.as_slice().to_vec();
    let mut next = vec![0.0; nu.len()];
    let mut z = vec![0.0; mu.len()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        table.shifted_partition(&nu, &mut z);
        table.marginal_update(mu.as_slice(), &nu, &z, &mut next);
        let change = nu.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let growing = crate::robust::growth(&nu, &next) >= tol;
        std::mem::swap(&mut nu, &mut next);
        if change < tol && !growing {
            converged = true;
            break;
        }
    }
    Ok(finish(mu, rho, &table, nu, iterations, converged))
}

fn finish(
    mu: &ProbVector,
    rho: &DistortionMatrix,
    table: &SlopeTable,
    nu: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> ClassicalSolution {
    let kernel = table.kernel(&nu);
    let rate = mutual_information(mu, &kernel).expect("dimensions checked");
    let distortion = expected_distortion(mu, &kernel, rho).expect("dimensions checked");
    ClassicalSolution {
        slope: table.slope,
        kernel,
        output: ProbVector::from_weights_unchecked(nu),
        rate,
        distortion,
        iterations,
        converged,
    }
}

/// Rate from the slope-parametric form `s D - Σ_x μ(x) ln Σ_y e^{sρ(x,y)} ν(y)`.
pub fn parametric_rate(mu: &ProbVector, rho: &DistortionMatrix, s: f64, output: &ProbVector, distortion: f64) -> f64 {
    let table = SlopeTable::new(rho, s);
    let log_z = table.log_partition(output.as_slice());
    s * distortion - mu.expect(&log_z)
}

/// Solves the fixed point at slope `s` from a uniform start and evaluates the
/// parametric rate.
pub fn rate_at_slope(mu: &ProbVector, rho: &DistortionMatrix, s: f64, tol: f64) -> Result<CurvePoint> {
    let sol = ba_fixed_point(mu, rho, s, &ProbVector::uniform(rho.cols()), tol, DEFAULT_MAX_ITER)?;
    let rate = parametric_rate(mu, rho, s, &sol.output, sol.distortion).max(0.0);
    Ok(CurvePoint {
        distortion: sol.distortion,
        rate,
        slope: s,
        lambda: 0.0,
        kl_achieved: 0.0,
        worst_distortion: sol.distortion,
    })
}

/// Smallest achievable distortion `Σ_x μ(x) min_y ρ(x,y)`.
pub fn min_distortion(mu: &ProbVector, rho: &DistortionMatrix) -> f64 {
    mu.expect(&rho.row_minima())
}

/// Zero-rate distortion `min_y Σ_x μ(x) ρ(x,y)` and the minimizing symbol.
pub fn zero_rate_distortion(mu: &ProbVector, rho: &DistortionMatrix) -> (f64, usize) {
    (0..rho.cols())
        .map(|y| (mu.expect(&rho.column(y)), y))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Blahut–Arimoto tolerance used inside a distortion-targeted solve.
pub(crate) fn inner_tol(tol: f64) -> f64 {
    (tol * 1e-2).clamp(1e-15, DEFAULT_BA_TOL)
}

/// Positive starting point derived from a previous marginal, mixed with a
/// `weight` share of the uniform distribution.
pub(crate) fn warm_start(nu: &[f64], weight: f64) -> ProbVector {
    let n = nu.len() as f64;
    ProbVector::from_weights_unchecked(nu.iter().map(|&v| (1.0 - weight) * v + weight / n).collect())
}

/// Rate-distortion function at budget `budget`: bisects the slope until the
/// achieved distortion is within `tol` of the budget.
///
/// A budget at or above the zero-rate distortion returns the rate-0
/// solution with `s = 0` whose output is a point mass on the best constant
/// reproduction.
pub fn classical_rd(mu: &ProbVector, rho: &DistortionMatrix, budget: f64, tol: f64) -> Result<ClassicalSolution> {
    check_dims(mu, rho)?;
    if !budget.is_finite() || budget < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "budget must be finite and nonnegative, got {budget}"
        )));
    }
    let minimum = min_distortion(mu, rho);
    if budget < minimum - 1e-15 * (1.0 + minimum) {
        return Err(Error::InfeasibleBudget { budget, minimum });
    }
    let (d_max, best_y) = zero_rate_distortion(mu, rho);
    if budget >= d_max {
        let output = ProbVector::point_mass(rho.cols(), best_y);
        return Ok(ClassicalSolution {
            slope: 0.0,
            kernel: Kernel::constant(rho.rows(), &output),
            output,
            rate: 0.0,
            distortion: d_max,
            iterations: 0,
            converged: true,
        });
    }

    let ba_tol = inner_tol(tol);
    let mut warm = ProbVector::uniform(rho.cols());
    let solve = |s: f64, warm: &mut ProbVector| -> Result<ClassicalSolution> {
        let sol = ba_fixed_point(mu, rho, s, warm, ba_tol, DEFAULT_MAX_ITER)?;
        *warm = warm_start(sol.output.as_slice(), 1e-9);
        Ok(sol)
    };

    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut best = solve(lo, &mut warm)?;
    let mut above = None;
    for _ in 0..DOUBLING_CAP {
        if best.distortion < budget {
            break;
        }
        hi = lo;
        lo *= 2.0;
        above = Some(std::mem::replace(&mut best, solve(lo, &mut warm)?));
    }
    if (best.distortion - budget).abs() <= tol {
        return Ok(best);
    }
    let mut below = (best.distortion < budget).then(|| best.clone());
    let mut iterations = best.iterations;
    for _ in 0..BISECTION_CAP {
        if hi - lo <= SLOPE_COLLAPSE * lo.abs() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let sol = solve(mid, &mut warm)?;
        iterations += sol.iterations;
        let gap = sol.distortion - budget;
        if gap.abs() < (best.distortion - budget).abs() {
            best = sol.clone();
        }
        if gap.abs() <= tol {
            break;
        }
        if gap > 0.0 {
            hi = mid;
            above = Some(sol);
        } else {
            lo = mid;
            below = Some(sol);
        }
    }
    if (best.distortion - budget).abs() > tol && hi - lo <= SLOPE_COLLAPSE * lo.abs() {
        if let (Some(a), Some(b)) = (&above, &below) {
            best = blend(mu, rho, budget, a, b);
        }
    }
    best.converged = best.converged && (best.distortion - budget).abs() <= tol;
    best.iterations = iterations;
    Ok(best)
}

/// Where the curve has a straight segment the achieved distortion jumps at
/// a single slope. Both sides share `Z` there and the distortion is linear
/// in `ν`, so mixing the two marginals lands on the budget.
fn blend(
    mu: &ProbVector,
    rho: &DistortionMatrix,
    budget: f64,
    above: &ClassicalSolution,
    below: &ClassicalSolution,
) -> ClassicalSolution {
    let at = |t: f64| {
        let slope = (1.0 - t) * above.slope + t * below.slope;
        let output = ProbVector::from_weights_unchecked(
            above
                .output
                .iter()
                .zip(below.output.iter())
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        );
        let kernel = SlopeTable::new(rho, slope).kernel(output.as_slice());
        let distortion = expected_distortion(mu, &kernel, rho).expect("dimensions agree");
        (slope, output, kernel, distortion)
    };
    // The two sides sit on the face only up to solver accuracy, so the mixing
    // weight is refined on the actual distortion.
    let t = bisect_weight(|t| at(t).3 - budget);
    let (slope, output, kernel, distortion) = at(t);
    ClassicalSolution {
        slope,
        rate: parametric_rate(mu, rho, slope, &output, distortion),
        kernel,
        output,
        distortion,
        iterations: 0,
        converged: above.converged && below.converged,
    }
}

/// Root in `[0, 1]` of `gap`, which is positive at 0 and negative at 1.
pub(crate) fn bisect_weight(gap: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One [`rate_at_slope`] point per slope, sorted by distortion.
pub fn rd_curve(mu: &ProbVector, rho: &DistortionMatrix, slopes: &[f64], tol: f64) -> Result<Vec<CurvePoint>> {
    for &s in slopes {
        check_slope(s)?;
    }
    let mut points = slopes
        .par_iter()
        .map(|&s| rate_at_slope(mu, rho, s, tol))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binary_entropy, induced_output};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    fn check_invariants(mu: &ProbVector, rho: &DistortionMatrix, sol: &ClassicalSolution) {
        let s = sol.slope;
        for x in 0..rho.rows() {
            let z: f64 = (0..rho.cols()).map(|y| (s * rho.get(x, y)).exp() * sol.output[y]).sum();
            for y in 0..rho.cols() {
                let tilt = (s * rho.get(x, y)).exp() * sol.output[y] / z;
                assert!((sol.kernel.get(x, y) - tilt).abs() < 1e-8);
            }
        }
        let induced = induced_output(mu, &sol.kernel).unwrap();
        assert!(induced.max_abs_diff(&sol.output) < 1e-8);
        assert!((sol.rate - mutual_information(mu, &sol.kernel).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn zero_slope_gives_independence() {
        let mu = pv(&[0.3, 0.7]);
        let rho = DistortionMatrix::new(vec![vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 3.0]]).unwrap();
        let init = ProbVector::uniform(3);
        let sol = ba_fixed_point(&mu, &rho, 0.0, &init, 1e-12, 10).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.rate, 0.0);
        for x in 0..2 {
            for y in 0..3 {
                assert_abs_diff_eq!(sol.kernel.get(x, y), sol.output[y], epsilon = 1e-15);
            }
        }
        let indep: f64 = (0..2)
            .flat_map(|x| (0..3).map(move |y| (x, y)))
            .map(|(x, y)| mu[x] * init[y] * rho.get(x, y))
            .sum();
        assert_abs_diff_eq!(sol.distortion, indep, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_binary_fixed_point() {
        let mu = pv(&[0.5, 0.5]);
        let rho = DistortionMatrix::hamming(2);
        let sol = ba_fixed_point(&mu, &rho, -2.0, &ProbVector::uniform(2), 1e-12, 1000).unwrap();
        let d = 1.0 / (1.0 + 2f64.exp());
        assert_abs_diff_eq!(sol.distortion, d, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.distortion, 0.119203, epsilon = 1e-6);
        assert_abs_diff_eq!(sol.rate, std::f64::consts::LN_2 - binary_entropy(d), epsilon = 1e-12);
        check_invariants(&mu, &rho, &sol);
    }

    #[test]
    fn steep_slope_approaches_lossless() {
        let mu = pv(&[0.2, 0.5, 0.3]);
        let rho = DistortionMatrix::hamming(3);
        let sol = ba_fixed_point(&mu, &rho, -50.0, &ProbVector::uniform(3), 1e-13, 100_000).unwrap();
        assert!(sol.distortion < 1e-18);
        assert_abs_diff_eq!(sol.rate, mu.entropy(), epsilon = 1e-9);
    }

    #[test]
    fn ba_rejects_bad_inputs() {
        let mu = pv(&[0.5, 0.5]);
        let rho = DistortionMatrix::hamming(2);
        assert_eq!(
            ba_fixed_point(&mu, &rho, -1.0, &pv(&[1.0, 0.0]), 1e-10, 10).unwrap_err(),
            Error::NonPositiveInit { index: 1 }
        );
        assert_eq!(
            ba_fixed_point(&mu, &rho, 0.5, &ProbVector::uniform(2), 1e-10, 10).unwrap_err(),
            Error::InvalidSlope(0.5)
        );
        let short = ba_fixed_point(&pv(&[0.2, 0.8]), &rho, -0.01, &ProbVector::uniform(2), 1e-15, 3).unwrap();
        assert!(!short.converged);
        assert_eq!(short.iterations, 3);
    }

    #[test]
    fn rate_at_slope_examples() {
        let rho = DistortionMatrix::hamming(2);
        let p = rate_at_slope(&pv(&[0.5, 0.5]), &rho, 0.0, 1e-10).unwrap();
        assert_eq!(p.rate, 0.0);
        assert_abs_diff_eq!(p.distortion, 0.5, epsilon = 1e-15);

        let p = rate_at_slope(&pv(&[0.5, 0.5]), &rho, -2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(p.distortion, 0.119203, epsilon = 1e-6);
        assert_abs_diff_eq!(p.rate, 0.327813, epsilon = 1e-6);
        assert_abs_diff_eq!(
            p.rate,
            std::f64::consts::LN_2 - binary_entropy(p.distortion),
            epsilon = 1e-10
        );

        let mu = pv(&[0.2, 0.8]);
        let p = rate_at_slope(&mu, &rho, -3.0, 1e-13).unwrap();
        assert!(p.distortion > 0.0 && p.distortion < 0.2);
        assert_abs_diff_eq!(
            p.rate,
            binary_entropy(0.2) - binary_entropy(p.distortion),
            epsilon = 1e-8
        );
    }

    #[test]
    fn classical_rd_examples() {
        let rho = DistortionMatrix::hamming(2);
        let sol = classical_rd(&pv(&[0.5, 0.5]), &rho, 0.11, 1e-10).unwrap();
        assert_abs_diff_eq!(sol.rate, std::f64::consts::LN_2 - binary_entropy(0.11), epsilon = 1e-8);
        assert_abs_diff_eq!(sol.rate, 0.346632, epsilon = 1e-6);
        assert!(sol.converged);
        check_invariants(&pv(&[0.5, 0.5]), &rho, &sol);

        for d in [0.3, 0.45] {
            let sol = classical_rd(&pv(&[0.3, 0.7]), &rho, d, 1e-10).unwrap();
            assert_eq!(sol.rate, 0.0);
            assert_eq!(sol.slope, 0.0);
            assert_abs_diff_eq!(sol.distortion, 0.3, epsilon = 1e-15);
        }

        let sol = classical_rd(&pv(&[0.2, 0.8]), &rho, 0.05, 1e-10).unwrap();
        assert_abs_diff_eq!(sol.rate, binary_entropy(0.2) - binary_entropy(0.05), epsilon = 1e-8);
    }

    #[test]
    fn classical_rd_infeasible_budget() {
        let rho = DistortionMatrix::new(vec![vec![0.2, 1.0], vec![1.0, 0.1]]).unwrap();
        let err = classical_rd(&pv(&[0.5, 0.5]), &rho, 0.1, 1e-9).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget { .. }));
    }

    #[test]
    fn curve_examples() {
        let rho = DistortionMatrix::hamming(2);
        let half = pv(&[0.5, 0.5]);
        let single = rd_curve(&half, &rho, &[0.0], 1e-10).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].rate, 0.0);

        let pts = rd_curve(&half, &rho, &[-0.5, -1.0, -2.0, -4.0], 1e-12).unwrap();
        for w in pts.windows(2) {
            assert!(w[0].distortion < w[1].distortion);
            assert!(w[0].rate > w[1].rate);
        }
        for p in &pts {
            assert_abs_diff_eq!(
                p.rate,
                std::f64::consts::LN_2 - binary_entropy(p.distortion),
                epsilon = 1e-9
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn binary_closed_form(p in 0.05f64..0.95, frac in 0.05f64..0.95) {
            let d = frac * p.min(1.0 - p);
            let sol = classical_rd(&ProbVector::bernoulli(p).unwrap(), &DistortionMatrix::hamming(2), d, 1e-11).unwrap();
            prop_assert!((sol.rate - (binary_entropy(p) - binary_entropy(d))).abs() < 1e-6);
        }

        #[test]
        fn curve_is_monotone_and_convex(
            w in prop::collection::vec(0.05f64..1.0, 3),
            rho in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 3),
        ) {
            let mu = ProbVector::from_weights(w).unwrap();
            let rho = DistortionMatrix::new(rho).unwrap();
            let slopes: Vec<f64> = (0..8).map(|k| -0.25 * 2f64.powi(k)).collect();
            let pts = rd_curve(&mu, &rho, &slopes, 1e-13).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[1].distortion >= w[0].distortion - 1e-12);
                prop_assert!(w[1].rate <= w[0].rate + 1e-9);
            }
            for w in pts.windows(3) {
                let span = w[2].distortion - w[0].distortion;
                if span > 1e-6 {
                    let t = (w[1].distortion - w[0].distortion) / span;
                    let chord = (1.0 - t) * w[0].rate + t * w[2].rate;
                    prop_assert!(w[1].rate <= chord + 1e-7);
                }
            }
            for p in &pts {
                let sol = ba_fixed_point(&mu, &rho, p.slope, &ProbVector::uniform(3), 1e-13, DEFAULT_MAX_ITER).unwrap();
                prop_assert!((p.rate - sol.rate).abs() < 1e-7);
            }
        }
    }
}
