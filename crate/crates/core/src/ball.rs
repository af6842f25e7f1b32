//! Relative-entropy balls and the free-energy duality.
//!
//! For a payoff `ℓ` and reference `μ`,
//!
//! ```text
//! sup_ν { Σ ℓ ν - a KL(ν‖μ) } = a ln Σ_x e^{ℓ(x)/a} μ(x)
//! ```
//!
//! with the supremum attained by the tilt `ν ∝ e^{ℓ/a} μ`. The worst-case
//! expectation over `{μ' : KL(μ'‖μ) ≤ R}` follows by choosing the
//! temperature `a = α` so that the tilt sits on the sphere `KL = R`; its value
//! is `α R + α ln Σ e^{ℓ/α} μ`.
//!
//! Every exponential is shifted by the largest exponent before summation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{kl_slices, ProbVector};

/// Temperatures below this are treated as the point-mass regime.
pub const ALPHA_MIN: f64 = 1e-8;
/// Upper end of the initial temperature bracket. The bracket is widened
/// past it only when the radius is too small to be reached.
pub const ALPHA_MAX: f64 = 1e8;
const ALPHA_CEILING: f64 = 1e300;
const BISECTION_CAP: usize = 400;

/// Outcome of a worst-case expectation over a KL ball.
#[derive(Debug, Clone, Serialize)]
pub struct TiltResult {
    pub value: f64,
    /// Temperature `α`; `0` when the ball contains the argmax point mass,
    /// `+∞` for a radius-0 ball.
    pub multiplier: f64,
    pub maximizer: ProbVector,
    pub achieved_kl: f64,
    pub constraint_active: bool,
}

/// True iff every entry is finite. On a finite alphabet this is all that
/// boundedness from below requires; it rejects `-∞` sentinels and NaN.
pub fn check_bounded_below(ell: &[f64]) -> bool {
    ell.iter().all(|v| v.is_finite())
}

fn validate(ell: &[f64], mu: &ProbVector) -> Result<()> {
    if ell.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            found: ell.len(),
        });
    }
    for (index, (&v, &m)) in ell.iter().zip(mu.iter()).enumerate() {
        if m > 0.0 && !v.is_finite() {
            return Err(Error::NonFinite { index, value: v });
        }
    }
    Ok(())
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::ScaleNonPositive(scale));
    }
    Ok(())
}

/// Largest payoff on the support of `mu`.
pub(crate) fn support_max(ell: &[f64], mu: &[f64]) -> f64 {
    ell.iter()
        .zip(mu)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Unnormalized tilt weights `μ(x) e^{(ℓ(x) - max ℓ)/scale}` and their sum.
pub(crate) fn tilt_weights(ell: &[f64], mu: &[f64], scale: f64, out: &mut [f64]) -> f64 {
    let top = support_max(ell, mu);
    let mut total = 0.0;
    for ((o, &v), &m) in out.iter_mut().zip(ell).zip(mu) {
        *o = if m > 0.0 { m * ((v - top) / scale).exp() } else { 0.0 };
        total += *o;
    }
    total
}

/// Normalized tilt of `mu` by `ell / scale`, written into `out`.
pub(crate) fn tilt_into(ell: &[f64], mu: &[f64], scale: f64, out: &mut [f64]) {
    let total = tilt_weights(ell, mu, scale, out);
    out.iter_mut().for_each(|v| *v /= total);
}

/// Mean of `ell` under `mu` and the largest centered deviation on the support.
fn centered(ell: &[f64], mu: &[f64]) -> (f64, f64) {
    let mean: f64 = ell.iter().zip(mu).filter(|(_, &m)| m > 0.0).map(|(v, m)| v * m).sum();
    let spread = ell
        .iter()
        .zip(mu)
        .filter(|(_, &m)| m > 0.0)
        .map(|(v, _)| (v - mean).abs())
        .fold(0.0, f64::max);
    (mean, spread)
}

/// `E_μ[expm1(t)]` and `E_μ[t e^t]` for `t = (ℓ - mean)/scale`; accurate when
/// `t` is small, where the shifted forms cancel.
fn small_tilt_moments(ell: &[f64], mu: &[f64], mean: f64, scale: f64) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for (&v, &m) in ell.iter().zip(mu) {
        if m > 0.0 {
            let t = (v - mean) / scale;
            let e = t.exp_m1();
            a += m * e;
            b += m * (t + t * e);
        }
    }
    (a, b)
}

/// `scale · ln Σ μ e^{ℓ/scale}` on raw slices.
pub(crate) fn free_energy_slices(ell: &[f64], mu: &[f64], scale: f64) -> f64 {
    let (mean, spread) = centered(ell, mu);
    if spread <= scale {
        let (a, _) = small_tilt_moments(ell, mu, mean, scale);
        return mean + scale * a.ln_1p();
    }
    let top = support_max(ell, mu);
    let sum: f64 = ell
        .iter()
        .zip(mu)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&v, &m)| m * ((v - top) / scale).exp())
        .sum();
    top + scale * sum.ln()
}

/// `μ_tilt(x) ∝ e^{ℓ(x)/scale} μ(x)`.
pub fn tilted_distribution(ell: &[f64], mu: &ProbVector, scale: f64) -> Result<ProbVector> {
    check_scale(scale)?;
    validate(ell, mu)?;
    let mut out = vec![0.0; mu.len()];
    tilt_into(ell, mu.as_slice(), scale, &mut out);
    Ok(ProbVector::from_weights_unchecked(out))
}

/// `scale · ln Σ_x e^{ℓ(x)/scale} μ(x)`, the supremum of
/// `Σ ℓ ν - scale · KL(ν‖μ)` over distributions `ν`.
pub fn free_energy(ell: &[f64], mu: &ProbVector, scale: f64) -> Result<f64> {
    check_scale(scale)?;
    validate(ell, mu)?;
    Ok(free_energy_slices(ell, mu.as_slice(), scale))
}

fn tilt_kl(ell: &[f64], mu: &[f64], alpha: f64, scratch: &mut [f64]) -> f64 {
    let (mean, spread) = centered(ell, mu);
    if spread <= alpha {
        // KL = E_tilt[t] - ln E_μ[e^t] with t centered under μ.
        let (a, b) = small_tilt_moments(ell, mu, mean, alpha);
        return (b / (1.0 + a) - a.ln_1p()).max(0.0);
    }
    tilt_into(ell, mu, alpha, scratch);
    kl_slices(scratch, mu)
}

/// Slice-level result used by the solvers' inner loops.
#[derive(Debug, Clone)]
pub(crate) struct WorstCase {
    pub value: f64,
    pub alpha: f64,
    pub maximizer: Vec<f64>,
    pub kl: f64,
    pub active: bool,
}

pub(crate) fn worst_case(ell: &[f64], mu: &[f64], radius: f64, tol: f64) -> WorstCase {
    let top = support_max(ell, mu);
    let tie = 1e-13 * (1.0 + top.abs());
    let top_mass: f64 = ell
        .iter()
        .zip(mu)
        .filter(|(&v, &m)| m > 0.0 && v >= top - tie)
        .map(|(_, &m)| m)
        .sum();
    let top_kl = -top_mass.ln();
    if top_kl <= radius {
        // The ball holds the argmax point mass (split in proportion to μ).
        let maximizer: Vec<f64> = ell
            .iter()
            .zip(mu)
            .map(|(&v, &m)| if m > 0.0 && v >= top - tie { m / top_mass } else { 0.0 })
            .collect();
        return WorstCase {
            value: top,
            alpha: 0.0,
            maximizer,
            kl: top_kl.max(0.0),
            active: false,
        };
    }
    if radius == 0.0 {
        let value = ell.iter().zip(mu).filter(|(_, &m)| m > 0.0).map(|(v, m)| v * m).sum();
        return WorstCase {
            value,
            alpha: f64::INFINITY,
            maximizer: mu.to_vec(),
            kl: 0.0,
            active: true,
        };
    }

    let mut scratch = vec![0.0; mu.len()];
    let kl_lo = tilt_kl(ell, mu, ALPHA_MIN, &mut scratch);
    let alpha = if kl_lo <= radius {
        ALPHA_MIN
    } else {
        let mut hi = ALPHA_MAX;
        while hi < ALPHA_CEILING && tilt_kl(ell, mu, hi, &mut scratch) > radius {
            hi *= 1e4;
        }
        let (mut lo_log, mut hi_log) = (ALPHA_MIN.ln(), hi.ln());
        let mut best = hi;
        for _ in 0..BISECTION_CAP {
            let mid = 0.5 * (lo_log + hi_log);
            let a = mid.exp();
            let kl = tilt_kl(ell, mu, a, &mut scratch);
            best = a;
            if (kl - radius).abs() <= tol * 1e-3 || hi_log - lo_log <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
            // KL of the tilt decreases as the temperature rises.
            if kl > radius {
                lo_log = mid;
            } else {
                hi_log = mid;
            }
        }
        best
    };
    let kl = tilt_kl(ell, mu, alpha, &mut scratch);
    tilt_into(ell, mu, alpha, &mut scratch);
    WorstCase {
        value: alpha * radius + free_energy_slices(ell, mu, alpha),
        alpha,
        maximizer: scratch,
        kl,
        active: true,
    }
}

/// `sup { Σ ℓ μ' : KL(μ'‖μ) ≤ radius }` with its maximizer and temperature.
///
/// The temperature is found by bisection in `ln α` on the KL of the tilt,
/// which is monotone in `α`. When the ball already contains the point mass on
/// the argmax of `ℓ` (ties split in proportion to `μ`), the constraint is
/// inactive and the value is `max ℓ`.
pub fn worstcase_expectation(ell: &[f64], mu: &ProbVector, radius: f64, tol: f64) -> Result<TiltResult> {
    validate(ell, mu)?;
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    let wc = worst_case(ell, mu.as_slice(), radius, tol);
    Ok(TiltResult {
        value: wc.value,
        multiplier: wc.alpha,
        maximizer: ProbVector::from_weights_unchecked(wc.maximizer),
        achieved_kl: wc.kl,
        constraint_active: wc.active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn half() -> ProbVector {
        ProbVector::uniform(2)
    }

    #[test]
    fn bounded_below() {
        assert!(check_bounded_below(&[0.0, 0.0]));
        assert!(check_bounded_below(&[1.0, -5.0, 3.0]));
        assert!(!check_bounded_below(&[1.0, f64::NEG_INFINITY]));
        assert!(!check_bounded_below(&[f64::NAN]));
    }

    #[test]
    fn tilt_examples() {
        let mu = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let t = tilted_distribution(&[4.0, 4.0, 4.0], &mu, 0.7).unwrap();
        assert!(t.max_abs_diff(&mu) < 1e-15);

        let t = tilted_distribution(&[1.0, 0.0], &half(), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(t[0], e / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(t[0], 0.731059, epsilon = 1e-6);
        assert_abs_diff_eq!(t[1], 0.268941, epsilon = 1e-6);

        let t = tilted_distribution(&[1.0, -2.0, 0.5], &mu, 1e9).unwrap();
        assert!(t.max_abs_diff(&mu) < 1e-8);

        // Large payoffs at low temperature stay finite.
        let t = tilted_distribution(&[1000.0, 0.0], &half(), 1e-3).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 0.0]);

        assert_eq!(
            tilted_distribution(&[1.0, 0.0], &half(), 0.0).unwrap_err(),
            Error::ScaleNonPositive(0.0)
        );
    }

    #[test]
    fn free_energy_examples() {
        let mu = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_abs_diff_eq!(free_energy(&[2.5; 3], &mu, 0.3).unwrap(), 2.5, epsilon = 1e-15);
        let e = std::f64::consts::E;
        let f = free_energy(&[1.0, 0.0], &half(), 1.0).unwrap();
        assert_abs_diff_eq!(f, ((e + 1.0) / 2.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(f, 0.620115, epsilon = 1e-6);
        let f = free_energy(&[1.0, 3.0, -2.0], &mu, 1e-9).unwrap();
        assert_abs_diff_eq!(f, 3.0, epsilon = 1e-8);
        // Zero-mass symbols do not count toward the maximum.
        let mu = ProbVector::new(vec![0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(free_energy(&[5.0, 1.0], &mu, 1e-9).unwrap(), 1.0, epsilon = 1e-12);
        assert!(free_energy(&[1.0], &mu, -1.0).is_err());
    }

    /// Largest `p` with `KL(Bernoulli(p) ‖ Bernoulli(1/2)) ≤ r`, by bisection.
    fn bernoulli_edge(r: f64) -> f64 {
        let kl = |p: f64| ln2_minus_h(p);
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if kl(mid) <= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn ln2_minus_h(p: f64) -> f64 {
        std::f64::consts::LN_2 - crate::prob::binary_entropy(p)
    }

    #[test]
    fn worstcase_examples() {
        let ell = [1.0, 0.0];
        let r = worstcase_expectation(&ell, &half(), 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-15);
        assert_eq!(r.maximizer, half());
        assert!(r.multiplier.is_infinite());

        for radius in [std::f64::consts::LN_2, 1.0] {
            let r = worstcase_expectation(&ell, &half(), radius, 1e-12).unwrap();
            assert_eq!(r.value, 1.0);
            assert_eq!(r.maximizer.as_slice(), &[1.0, 0.0]);
            assert!(!r.constraint_active);
            assert_eq!(r.multiplier, 0.0);
        }

        let r = worstcase_expectation(&ell, &half(), 0.02, 1e-12).unwrap();
        let edge = bernoulli_edge(0.02);
        assert_abs_diff_eq!(r.value, edge, epsilon = 1e-9);
        assert_abs_diff_eq!(r.value, 0.5997, epsilon = 1e-4);
        assert!(r.constraint_active);
        assert_abs_diff_eq!(r.achieved_kl, 0.02, epsilon = 1e-12);
        assert_abs_diff_eq!(r.maximizer[0], r.value, epsilon = 1e-9);
    }

    #[test]
    fn ties_split_in_proportion_to_reference() {
        let mu = ProbVector::new(vec![0.1, 0.3, 0.6]).unwrap();
        let r = worstcase_expectation(&[2.0, 2.0, 0.0], &mu, 2.0, 1e-12).unwrap();
        assert!(!r.constraint_active);
        assert_abs_diff_eq!(r.maximizer[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.maximizer[1], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(r.achieved_kl, -(0.4f64.ln()), epsilon = 1e-15);
    }

    #[test]
    fn tiny_radius_extends_the_bracket() {
        let mu = ProbVector::new(vec![0.3, 0.7]).unwrap();
        let r = worstcase_expectation(&[1.0, 0.0], &mu, 1e-20, 1e-24).unwrap();
        assert!(r.multiplier > ALPHA_MAX);
        // Second-order expansion: mean + sqrt(2 R var).
        let approx = 0.3 + (2.0 * 1e-20 * 0.21f64).sqrt();
        assert_abs_diff_eq!(r.value, approx, epsilon = 1e-14);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, ProbVector)> {
        (2usize..=4).prop_flat_map(|n| {
            (
                prop::collection::vec(-2.0f64..2.0, n),
                prop::collection::vec(0.05f64..1.0, n).prop_map(|w| ProbVector::from_weights(w).unwrap()),
            )
        })
    }

    proptest! {
        #[test]
        fn tilt_kl_decreases_with_temperature((ell, mu) in arb_case()) {
            let mut scratch = vec![0.0; mu.len()];
            let mut prev = f64::INFINITY;
            for k in -12..12 {
                let kl = tilt_kl(&ell, mu.as_slice(), 10f64.powf(k as f64 / 3.0), &mut scratch);
                prop_assert!(kl <= prev + 1e-12);
                prev = kl;
            }
        }

        #[test]
        fn worstcase_monotone_bounded_and_attained((ell, mu) in arb_case()) {
            let top = ell.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut prev = mu.expect(&ell) - 1e-12;
            for radius in [0.0, 0.001, 0.01, 0.05, 0.2, 1.0, 5.0] {
                let r = worstcase_expectation(&ell, &mu, radius, 1e-12).unwrap();
                prop_assert!(r.value >= prev - 1e-10);
                prop_assert!(r.value <= top + 1e-12);
                prop_assert!((r.maximizer.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(r.achieved_kl <= radius + 1e-9);
                if r.constraint_active {
                    prop_assert!((r.maximizer.expect(&ell) - r.value).abs() < 1e-8);
                    prop_assert!((r.achieved_kl - radius).abs() < 1e-9);
                }
                prev = r.value;
            }
        }
    }
}
