//! Brute-force reference computations on small alphabets.
//!
//! The robust rate is recomputed as `max R_{μ'}(D)` over a barycentric
//! lattice of the simplex clipped to the KL ball, with the classical solver
//! as the exact inner problem. The worst-case expectation is recomputed the
//! same way. Both refine around the incumbent with halved steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::ball::worst_case;
use crate::classical::classical_rd;
use crate::error::{Error, Result};
use crate::prob::{kl_divergence, kl_slices, ProbVector, ProblemInstance};

/// Central-difference step for the Lipschitz probe.
const FD_STEP: f64 = 1e-6;
/// Half-width, in fine-lattice steps, of each refinement window.
const REFINE_HALF_WIDTH: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Lattice spacing; rounded so that `1/step` is an integer.
    pub step: f64,
    pub refine_rounds: usize,
    pub max_dim: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 0.005,
            refine_rounds: 3,
            max_dim: 4,
        }
    }
}

impl GridSpec {
    pub fn with_step(step: f64) -> Self {
        GridSpec {
            step,
            ..Default::default()
        }
    }

    fn validate(&self, dim: usize) -> Result<u64> {
        if !(self.step > 0.0 && self.step < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must lie in (0,1), got {}",
                self.step
            )));
        }
        if dim > self.max_dim {
            return Err(Error::AlphabetTooLarge {
                size: dim,
                max: self.max_dim,
            });
        }
        Ok((1.0 / self.step).round().max(1.0) as u64)
    }
}

/// Grid maximum with its argmax and a discretization bound.
#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub value: f64,
    pub argmax: ProbVector,
    /// Spacing of the last refinement round.
    pub final_step: f64,
    /// Largest directional derivative found at the argmax.
    pub lipschitz: f64,
    /// `lipschitz · |A| · step`. Refinement only searches near the
    /// incumbent, so the bound uses the spacing of the full lattice.
    pub discretization_bound: f64,
    pub points_evaluated: usize,
}

impl GridResult {
    /// Interval that contains the true supremum: grid points are feasible,
    /// so the supremum is at least `value - tol` (inner solves are accurate
    /// to `tol`), and at most `value + discretization_bound`.
    pub fn certified_interval(&self, tol: f64) -> (f64, f64) {
        (self.value - tol, self.value + self.discretization_bound)
    }
}

/// A lattice point stored as integer coordinates over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Point(Vec<u64>);

impl Point {
    fn to_prob(&self, denom: u64) -> Vec<f64> {
        self.0.iter().map(|&k| k as f64 / denom as f64).collect()
    }
}

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: u64, parts: usize) -> Vec<Point> {
    let mut out = Vec::new();
    let mut cur = vec![0u64; parts];
    fn rec(i: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Point>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(Point(cur.clone()));
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut cur, &mut out);
    }
    out
}

/// Lattice points at denominator `denom` within `REFINE_HALF_WIDTH` steps of
/// `center` (given at the same denominator) in the first `n-1` coordinates.
fn window(center: &[i64], denom: u64) -> Vec<Point> {
    let n = center.len();
    let mut out = Vec::new();
    let span = 2 * REFINE_HALF_WIDTH + 1;
    let count = (span as usize).pow((n - 1) as u32);
    for code in 0..count {
        let mut rem = code;
        let mut coords = Vec::with_capacity(n);
        let mut used = 0i64;
        for c in &center[..n - 1] {
            let off = (rem % span as usize) as i64 - REFINE_HALF_WIDTH;
            rem /= span as usize;
            coords.push(c + off);
            used += c + off;
        }
        coords.push(denom as i64 - used);
        if coords.iter().all(|&k| k >= 0) {
            out.push(Point(coords.into_iter().map(|k| k as u64).collect()));
        }
    }
    out
}

/// Deterministic max-reduction: larger value wins, ties go to the
/// lexicographically smallest point.
fn better(a: (f64, Point), b: (f64, Point)) -> (f64, Point) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

struct Search<'a, F> {
    mu: &'a [f64],
    radius: f64,
    objective: F,
    evaluated: usize,
}

impl<F> Search<'_, F>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn best_of(&mut self, points: Vec<Point>, denom: u64) -> Result<Option<(f64, Point)>> {
        let inside: Vec<Point> = points
            .into_iter()
            .filter(|p| kl_slices(&p.to_prob(denom), self.mu) <= self.radius)
            .collect();
        self.evaluated += inside.len();
        let objective = &self.objective;
        let scored = inside
            .into_par_iter()
            .map(|p| objective(&p.to_prob(denom)).map(|v| (v, p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(scored.into_iter().reduce(better))
    }

    fn run(&mut self, grid: &GridSpec, denom: u64) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.mu.len();
        let nominal = (self.objective)(self.mu)?;
        self.evaluated += 1;
        let mut incumbent = self.best_of(compositions(denom, n), denom)?;
        let mut step = 1.0 / denom as f64;
        let mut scale = denom;
        for _ in 0..grid.refine_rounds {
            let Some((_, ref center)) = incumbent else { break };
            scale *= 2;
            step *= 0.5;
            let doubled: Vec<i64> = center.0.iter().map(|&k| 2 * k as i64).collect();
            let fine = self.best_of(window(&doubled, scale), scale)?;
            incumbent = match (incumbent, fine) {
                (Some(a), Some(b)) => {
                    // Compare on the finest lattice so ties stay deterministic.
                    let a = (a.0, Point(a.1 .0.iter().map(|k| 2 * k).collect()));
                    Some(better(a, b))
                }
                (a, b) => a.or(b),
            };
        }
        Ok(match incumbent {
            Some((v, p)) if v >= nominal => (v, p.to_prob(scale), step),
            _ => (nominal, self.mu.to_vec(), step),
        })
    }
}

/// Largest central-difference derivative of `f` at `point` along the edge
/// directions `e_i - e_j` that stay inside the simplex.
fn lipschitz_probe<F>(f: &F, point: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = point.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let h = FD_STEP.min(point[j]).min(1.0 - point[i]);
            let back = FD_STEP.min(point[i]).min(1.0 - point[j]);
            if h + back <= 0.0 {
                continue;
            }
            let mut up = point.to_vec();
            up[i] += h;
            up[j] -= h;
            let mut down = point.to_vec();
            down[i] -= back;
            down[j] += back;
            let slope = (f(&up)? - f(&down)?) / (h + back);
            best = best.max(slope.abs());
        }
    }
    Ok(best)
}

/// Grid maximum of the classical rate `R_{μ'}(D)` over the ball.
pub fn brute_force_robust(instance: &ProblemInstance, grid: &GridSpec, tol: f64) -> Result<GridResult> {
    let n = instance.source_size();
    let denom = grid.validate(n)?;
    let rho = &instance.rho;
    let budget = instance.budget;
    let objective = |p: &[f64]| -> Result<f64> {
        let src = ProbVector::from_weights(p.to_vec())?;
        Ok(classical_rd(&src, rho, budget, tol)?.rate)
    };
    let mut search = Search {
        mu: instance.nominal.as_slice(),
        radius: instance.radius,
        objective,
        evaluated: 0,
    };
    let (value, argmax, final_step) = search.run(grid, denom)?;
    let lipschitz = lipschitz_probe(&search.objective, &argmax)?;
    Ok(GridResult {
        value,
        argmax: ProbVector::from_weights(argmax)?,
        final_step,
        lipschitz,
        discretization_bound: lipschitz * n as f64 / denom as f64,
        points_evaluated: search.evaluated,
    })
}

/// Grid maximum of `Σ ℓ μ'` over the ball.
pub fn brute_force_worstcase(ell: &[f64], mu: &ProbVector, radius: f64, grid: &GridSpec) -> Result<GridResult> {
    let n = mu.len();
    if ell.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: ell.len(),
        });
    }
    let denom = grid.validate(n)?;
    let objective = |p: &[f64]| -> Result<f64> { Ok(p.iter().zip(ell).map(|(a, b)| a * b).sum()) };
    let mut search = Search {
        mu: mu.as_slice(),
        radius,
        objective,
        evaluated: 0,
    };
    let (value, argmax, final_step) = search.run(grid, denom)?;
    let lipschitz =
        ell.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ell.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GridResult {
        value,
        argmax: ProbVector::from_weights(argmax)?,
        final_step,
        lipschitz,
        discretization_bound: lipschitz * n as f64 / denom as f64,
        points_evaluated: search.evaluated,
    })
}

/// Deterministic sample of distributions in the ball `KL(·‖μ) ≤ radius`.
///
/// The sequence starts with `μ` and the boundary tilts of `μ` toward each
/// symbol of its support. The rest are points on segments from `μ` toward
/// uniform-Dirichlet draws on `supp μ`, at a uniform fraction of the largest
/// feasible step; every fourth one sits on the boundary. The generator is
/// ChaCha8 seeded with `seed`, so sequences are identical across platforms.
pub fn sample_ball(mu: &ProbVector, radius: f64, count: usize, seed: u64) -> Result<Vec<ProbVector>> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    let m = mu.as_slice();
    let n = m.len();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(mu.clone());
    if radius == 0.0 {
        out.resize(count, mu.clone());
        return Ok(out);
    }
    let support = mu.support();
    for &x in &support {
        if out.len() >= count {
            break;
        }
        let mut ell = vec![0.0; n];
        ell[x] = 1.0;
        let wc = worst_case(&ell, m, radius, 1e-12);
        if let Some(p) = admit(wc.maximizer, mu, radius) {
            out.push(p);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = 0usize;
    while out.len() < count {
        let mut target = vec![0.0; n];
        let mut total = 0.0;
        for &x in &support {
            let e: f64 = rng.sample(Exp1);
            target[x] = e;
            total += e;
        }
        target.iter_mut().for_each(|v| *v /= total);
        let u: f64 = rng.random();
        let reach = max_step(m, &target, radius);
        let theta = if k % 4 == 3 { reach } else { reach * u };
        k += 1;
        let point: Vec<f64> = m.iter().zip(&target).map(|(a, b)| a + theta * (b - a)).collect();
        if let Some(p) = admit(point, mu, radius) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Largest `θ ∈ [0,1]` with `KL(μ + θ(t - μ) ‖ μ) ≤ radius`; KL is convex
/// along the segment and 0 at `θ = 0`.
fn max_step(mu: &[f64], target: &[f64], radius: f64) -> f64 {
    let at = |theta: f64| {
        let p: Vec<f64> = mu.iter().zip(target).map(|(a, b)| a + theta * (b - a)).collect();
        kl_slices(&p, mu)
    };
    if at(1.0) <= radius {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if at(mid) <= radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Normalizes and keeps the point only if it passes the public KL check.
fn admit(point: Vec<f64>, mu: &ProbVector, radius: f64) -> Option<ProbVector> {
    let p = ProbVector::from_weights(point).ok()?;
    match kl_divergence(&p, mu) {
        Ok(kl) if kl <= radius => Some(p),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::worstcase_expectation;
    use crate::prob::{binary_entropy, DistortionMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn compositions_count() {
        // C(N + n - 1, n - 1) lattice points.
        assert_eq!(compositions(10, 3).len(), 66);
        assert_eq!(compositions(4, 1), vec![Point(vec![4])]);
    }

    #[test]
    fn worstcase_radius_zero_is_mean() {
        let mu = ProbVector::new(vec![0.3, 0.7]).unwrap();
        let r = brute_force_worstcase(&[2.0, -1.0], &mu, 0.0, &GridSpec::with_step(0.01)).unwrap();
        assert_abs_diff_eq!(r.value, 0.3 * 2.0 - 0.7, epsilon = 1e-15);
    }

    #[test]
    fn worstcase_large_radius_is_max() {
        let mu = ProbVector::uniform(2);
        let r = brute_force_worstcase(&[1.0, 0.0], &mu, 2f64.ln(), &GridSpec::with_step(0.01)).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn worstcase_matches_bernoulli_edge() {
        let mu = ProbVector::uniform(2);
        let grid = GridSpec {
            step: 1e-5,
            refine_rounds: 0,
            max_dim: 2,
        };
        let r = brute_force_worstcase(&[1.0, 0.0], &mu, 0.02, &grid).unwrap();
        assert_abs_diff_eq!(r.value, 0.5997, epsilon = 1e-4);
        let dual = worstcase_expectation(&[1.0, 0.0], &mu, 0.02, 1e-12).unwrap();
        assert!(r.value <= dual.value + 1e-12);
        assert!(dual.value - r.value <= 1e-5);
    }

    #[test]
    fn alphabet_limit() {
        let mu = ProbVector::uniform(5);
        let err = brute_force_worstcase(&[0.0; 5], &mu, 0.1, &GridSpec::default()).unwrap_err();
        assert!(matches!(err, Error::AlphabetTooLarge { size: 5, max: 4 }));
    }

    #[test]
    fn robust_radius_zero_is_classical() {
        let mu = ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let inst = ProblemInstance::new(DistortionMatrix::hamming(3), mu.clone(), 0.0, 0.2).unwrap();
        let r = brute_force_robust(&inst, &GridSpec::default(), 1e-10).unwrap();
        let c = classical_rd(&mu, &inst.rho, 0.2, 1e-10).unwrap();
        assert_abs_diff_eq!(r.value, c.rate, epsilon = 1e-12);
        assert_eq!(r.argmax, mu);
    }

    #[test]
    fn robust_binary_against_closed_form() {
        let inst = ProblemInstance::new(
            DistortionMatrix::hamming(2),
            ProbVector::bernoulli(0.2).unwrap(),
            0.02,
            0.1,
        )
        .unwrap();
        let grid = GridSpec {
            step: 1e-3,
            refine_rounds: 3,
            max_dim: 2,
        };
        let r = brute_force_robust(&inst, &grid, 1e-10).unwrap();
        // Independent scan of h(p') - h(D) over the KL interval.
        let mut best = 0.0f64;
        for i in 0..=200_000 {
            let p = 0.2 + 0.3 * i as f64 / 200_000.0;
            let q = ProbVector::bernoulli(p).unwrap();
            if kl_divergence(&q, &inst.nominal).unwrap() <= 0.02 {
                best = best.max(binary_entropy(p) - binary_entropy(0.1));
            }
        }
        assert!(r.value <= best + 1e-9);
        assert!(best - r.value < 2e-4, "{} vs {}", r.value, best);
        assert_abs_diff_eq!(r.argmax[1], 0.284, epsilon = 1e-3);
        let (lo, hi) = r.certified_interval(1e-9);
        assert!(lo <= best && best <= hi);
    }

    #[test]
    fn deterministic_argmax_under_parallelism() {
        let inst = ProblemInstance::new(DistortionMatrix::hamming(3), ProbVector::uniform(3), 0.05, 0.2).unwrap();
        let grid = GridSpec {
            step: 0.02,
            refine_rounds: 1,
            max_dim: 4,
        };
        let a = brute_force_robust(&inst, &grid, 1e-10).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| brute_force_robust(&inst, &grid, 1e-10).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.argmax, b.argmax);
    }

    #[test]
    fn sample_radius_zero() {
        let mu = ProbVector::new(vec![0.1, 0.9]).unwrap();
        let s = sample_ball(&mu, 0.0, 5, 1).unwrap();
        assert!(s.iter().all(|p| *p == mu));
    }

    #[test]
    fn sample_reaches_point_masses() {
        let s = sample_ball(&ProbVector::uniform(2), 2f64.ln(), 200, 9).unwrap();
        assert!(s.iter().any(|p| p[0] > 0.999 || p[1] > 0.999));
    }

    #[test]
    fn sample_deterministic() {
        let mu = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(
            sample_ball(&mu, 0.1, 50, 4).unwrap(),
            sample_ball(&mu, 0.1, 50, 4).unwrap()
        );
        assert_ne!(
            sample_ball(&mu, 0.1, 50, 4).unwrap(),
            sample_ball(&mu, 0.1, 50, 5).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn samples_stay_in_ball(
            w in prop::collection::vec(0.01f64..1.0, 2..5),
            radius in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let mu = ProbVector::from_weights(w).unwrap();
            let s = sample_ball(&mu, radius, 40, seed).unwrap();
            prop_assert_eq!(s.len(), 40);
            for p in &s {
                prop_assert!(kl_divergence(p, &mu).unwrap() <= radius);
            }
        }

        #[test]
        fn grid_worstcase_matches_dual(
            ell in prop::collection::vec(-2.0f64..2.0, 3),
            w in prop::collection::vec(0.05f64..1.0, 3),
            radius in 0.01f64..0.5,
        ) {
            let mu = ProbVector::from_weights(w).unwrap();
            let grid = GridSpec { step: 0.01, refine_rounds: 3, max_dim: 3 };
            let g = brute_force_worstcase(&ell, &mu, radius, &grid).unwrap();
            let d = worstcase_expectation(&ell, &mu, radius, 1e-12).unwrap();
            prop_assert!(g.value <= d.value + 1e-9);
            prop_assert!(d.value - g.value <= g.discretization_bound + 1e-9);
        }
    }
}
