//! Robust rate-distortion over a relative-entropy ball of sources.
//!
//! The value computed is `sup { R_{μ'}(D) : KL(μ'‖μ) ≤ R }`. For a slope
//! `s ≤ 0` and output marginal `ν` write
//!
//! ```text
//! Z_x(ν) = Σ_y e^{sρ(x,y)} ν(y),      ℓ(x) = -ln Z_x(ν) ≥ 0.
//! ```
//!
//! The saddle point has the kernel `q*(x,y) = e^{sρ(x,y)} ν*(y) / Z_x`, the
//! worst source `μ* ∝ e^{ℓ/λ} μ = Z^{-1/λ} μ`, and `ν*` equal to the output
//! of `μ*` through `q*`. The two multipliers are fixed by
//! `E_{μ*,q*}[ρ] = D` and `KL(μ*‖μ) = R`, and the value is
//!
//! ```text
//! sD + λR + λ ln Σ_x Z_x(ν*)^{-1/λ} μ(x).
//! ```
//!
//! [`maxmin_solve`] nests three searches: bisection on the slope outside, a
//! bracketed root search on `ln λ` for the KL constraint, and innermost a
//! minimization over `ν` of the convex `λ ln Σ_x μ(x) Z_x(ν)^{-1/λ}`.
//! [`minimax_solve`] keeps the slope
//! bisection but re-solves the worst-case source inside every fixed-point
//! sweep. When the ball is large enough that the constraint goes slack, the
//! inner problem at a fixed slope is the matrix game
//! `max_ν min_x Z_x(ν)`, which is solved exactly.

use serde::{Deserialize, Serialize};

use crate::ball::{self, free_energy_slices, support_max, tilt_into, worst_case};
use crate::classical::{self, check_slope, CurvePoint, SlopeTable, SLOPE_COLLAPSE};
use crate::error::{Error, Result};
use crate::game;
use crate::oracle::sample_ball;
use crate::prob::{
    conditional_distortion, kl_divergence, kl_slices, mutual_information, DistortionMatrix, Kernel, ProbVector,
    ProblemInstance,
};

const DOUBLING_CAP: usize = 60;
const BISECTION_CAP: usize = 200;
const GAME_GAP_TOL: f64 = 1e-12;
const ZERO_RATE_TOL: f64 = 1e-13;
/// Uniform share mixed into the marginal carried between slopes, so symbols
/// that were useless at a milder slope can come back.
const WARM_MIX: f64 = 1e-4;

/// How the worst-case source is read off from `λ`.
///
/// `Reciprocal` uses `μ* ∝ Z^{-1/λ} μ`, which is the tilt consistent with the
/// closed-form value. `Literal` evaluates `μ* ∝ Z^{-λ} μ`, the exponent as it
/// is sometimes printed, and only affects [`worst_source_from`] and
/// [`lemma2_radius_with`] so the two readings can be compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentVariant {
    #[default]
    Reciprocal,
    Literal,
}

impl ExponentVariant {
    /// Power applied to `Z^{-1}` in the worst-source formula.
    pub fn tilt_power(self, lambda: f64) -> f64 {
        match self {
            ExponentVariant::Reciprocal => {
                if lambda.is_infinite() {
                    0.0
                } else {
                    1.0 / lambda
                }
            }
            ExponentVariant::Literal => lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustOptions {
    /// Stationarity tolerance on `ν` for the inner fixed point.
    pub fixed_point_tol: f64,
    /// Allowed gap between achieved distortion and the budget.
    pub slope_tol: f64,
    /// Allowed gap between achieved KL and the radius.
    pub lambda_tol: f64,
    /// Sweep cap for one fixed-point run.
    pub max_iter: usize,
    /// Cap on the total number of slope and `λ` evaluations.
    pub max_outer: usize,
}

impl Default for RobustOptions {
    fn default() -> Self {
        RobustOptions {
            fixed_point_tol: 1e-10,
            slope_tol: 1e-9,
            lambda_tol: 1e-9,
            max_iter: 100_000,
            max_outer: 2000 * 60,
        }
    }
}

impl RobustOptions {
    /// Uses `tol` for both constraint gaps.
    pub fn with_tol(tol: f64) -> Self {
        RobustOptions {
            slope_tol: tol,
            lambda_tol: tol,
            fixed_point_tol: (tol * 0.1).min(1e-10),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Maxmin,
    Minimax,
}

/// Which branch produced the saddle point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Radius 0: the classical solution of the nominal source.
    Singleton,
    /// `KL(μ*‖μ) = R` with a finite positive `λ`.
    Active,
    /// The unconstrained worst source lies inside the ball (`λ = 0`).
    Slack,
    /// Budget at or above the worst-case zero-rate distortion (`s = 0`).
    ZeroRate,
}

/// Converged saddle point of the robust problem.
#[derive(Debug, Clone, Serialize)]
pub struct RobustSolution {
    pub method: Method,
    pub regime: Regime,
    pub slope: f64,
    /// KL multiplier; `+∞` for a radius-0 ball (no tilt).
    pub lambda: f64,
    pub worst_source: ProbVector,
    pub output: ProbVector,
    pub kernel: Kernel,
    /// Closed-form value, nats.
    pub rate: f64,
    /// `I(μ*; q*)`, the information-side cross-check of `rate`.
    pub mutual_information: f64,
    pub achieved_distortion: f64,
    pub achieved_kl: f64,
    /// Radius around `μ*` that contains the whole nominal ball.
    pub lemma2_radius: f64,
    /// `sup_{μ' in ball} E_{μ',q*}[ρ]`.
    pub worst_case_distortion: f64,
    /// False if the multiplier sequence seen during the `λ` search was not
    /// monotone.
    pub lambda_monotone: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl RobustSolution {
    pub fn constraint_active(&self) -> bool {
        matches!(self.regime, Regime::Active | Regime::Singleton)
    }

    /// Curve row at `budget`. A point ball has no finite multiplier, so its
    /// row reports `lambda = 0` like a classical point.
    pub fn curve_point(&self, budget: f64) -> CurvePoint {
        CurvePoint {
            distortion: budget,
            rate: self.rate,
            slope: self.slope,
            lambda: if self.lambda.is_finite() { self.lambda } else { 0.0 },
            kl_achieved: self.achieved_kl,
            worst_distortion: self.worst_case_distortion,
        }
    }
}

/// Maxmin solutions at each budget, sorted by budget.
pub fn robust_curve(instance: &ProblemInstance, budgets: &[f64], opts: &RobustOptions) -> Result<Vec<RobustSolution>> {
    use rayon::prelude::*;
    let mut budgets = budgets.to_vec();
    budgets.sort_by(f64::total_cmp);
    budgets
        .par_iter()
        .map(|&d| maxmin_solve(&instance.with_budget(d)?, opts))
        .collect()
}

/// Saddle data at one slope on the support-restricted problem.
#[derive(Debug, Clone)]
struct Saddle {
    slope: f64,
    lambda: f64,
    nu: Vec<f64>,
    source: Vec<f64>,
    distortion: f64,
    kl: f64,
    slack: bool,
    converged: bool,
    sweeps: usize,
}

/// Support-restricted view of the instance.
struct Reduced {
    rho: DistortionMatrix,
    mu: Vec<f64>,
    radius: f64,
    budget: f64,
    support: Vec<usize>,
}

impl Reduced {
    fn new(instance: &ProblemInstance) -> Self {
        let (reduced, support) = instance.restrict_to_support();
        Reduced {
            rho: reduced.rho,
            mu: reduced.nominal.into_vec(),
            radius: instance.radius,
            budget: instance.budget,
            support,
        }
    }

    fn distortion(&self, table: &SlopeTable, nu: &[f64], source: &[f64]) -> f64 {
        let kernel = table.kernel(nu);
        conditional_distortion(&kernel, &self.rho)
            .iter()
            .zip(source)
            .map(|(d, p)| d * p)
            .sum()
    }
}

/// `max_y ν'(y)/ν(y) - 1`: a symbol with almost no mass can still be
/// growing geometrically while the max-norm change is negligible.
pub(crate) fn growth(nu: &[f64], next: &[f64]) -> f64 {
    nu.iter()
        .zip(next)
        .filter(|(&a, _)| a > 0.0)
        .map(|(a, b)| b / a - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn neg_log_partition(table: &SlopeTable, nu: &[f64], z: &mut [f64], ell: &mut [f64]) {
    table.shifted_partition(nu, z);
    for ((l, &zz), &o) in ell.iter_mut().zip(z.iter()).zip(&table.offset) {
        *l = -(o + zz.ln());
    }
}

/// A convex objective in `ν` evaluated at one point, with the source that
/// attains it and the factors `c(y) = Σ_x μ*(x) e^{sρ(x,y)} / Z_x`, so that
/// `-c` is the gradient.
struct Point {
    value: f64,
    source: Vec<f64>,
    factors: Vec<f64>,
    /// Row-major `n × n` Hessian, when the objective is smooth at the point.
    hessian: Option<Vec<f64>>,
}

fn factors(table: &SlopeTable, source: &[f64], z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; table.cols];
    for (x, &w) in source.iter().enumerate() {
        if w > 0.0 {
            let scale = w / z[x];
            for (c, &e) in out.iter_mut().zip(table.row(x)) {
                *c += scale * e;
            }
        }
    }
    out
}

/// Hessian of `λ ln Σ_x μ(x) Z_x^{-1/λ}` in `ν`: with `a(x,y) = e^{sρ(x,y)}/Z_x`
/// and `θ = 1/λ` it is `(1+θ) Σ_x μ*(x) a_x a_xᵀ - θ c cᵀ`. When `λ` is the
/// optimal temperature of the ball's worst case, `envelope` subtracts the
/// rank-one term `θ v vᵀ / Var_{μ*}(ℓ)` with `v(y) = Cov_{μ*}(a(·,y), ℓ)`.
fn tilt_hessian(
    table: &SlopeTable,
    source: &[f64],
    z: &[f64],
    ell: &[f64],
    lambda: f64,
    c: &[f64],
    envelope: bool,
) -> Option<Vec<f64>> {
    let n = table.cols;
    let theta = 1.0 / lambda;
    if !theta.is_finite() {
        return None;
    }
    let mut h = vec![0.0; n * n];
    let mut a = vec![0.0; n];
    let mean_ell: f64 = source.iter().zip(ell).map(|(w, l)| w * l).sum();
    let mut var_ell = 0.0;
    let mut cov = vec![0.0; n];
    for (x, &w) in source.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        for (ay, &e) in a.iter_mut().zip(table.row(x)) {
            *ay = e / z[x];
        }
        let dl = ell[x] - mean_ell;
        var_ell += w * dl * dl;
        for y in 0..n {
            cov[y] += w * a[y] * dl;
            let wa = w * a[y] * (1.0 + theta);
            for k in 0..n {
                h[y * n + k] += wa * a[k];
            }
        }
    }
    for y in 0..n {
        for k in 0..n {
            h[y * n + k] -= theta * c[y] * c[k];
        }
    }
    if envelope {
        if var_ell <= 1e-300 {
            return None;
        }
        for y in 0..n {
            for k in 0..n {
                h[y * n + k] -= theta * cov[y] * cov[k] / var_ell;
            }
        }
    }
    h.iter().all(|v| v.is_finite()).then_some(h)
}

/// Newton direction on the simplex restricted to `free`: minimizes
/// `-c·Δ + ½ ΔᵀHΔ` subject to `Σ Δ = 0`.
fn newton_direction(h: &[f64], c: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let n = c.len();
    let k = free.len();
    if k < 2 {
        return None;
    }
    let scale = free.iter().map(|&i| h[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    // Augmented KKT system [H 1; 1ᵀ 0] [Δ; κ] = [c; 0].
    let w = k + 2;
    let mut m = vec![0.0; (k + 1) * w];
    for (r, &i) in free.iter().enumerate() {
        for (col, &j) in free.iter().enumerate() {
            m[r * w + col] = h[i * n + j];
        }
        m[r * w + r] += 1e-12 * scale;
        m[r * w + k] = 1.0;
        m[r * w + k + 1] = c[i] - 1.0;
    }
    for col in 0..k {
        m[k * w + col] = 1.0;
    }
    for col in 0..=k {
        let pivot = (col..=k).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[pivot * w + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..w {
                m.swap(pivot * w + j, col * w + j);
            }
        }
        let p = m[col * w + col];
        for r in 0..=k {
            if r != col {
                let f = m[r * w + col] / p;
                if f != 0.0 {
                    for j in col..w {
                        m[r * w + j] -= f * m[col * w + j];
                    }
                }
            }
        }
    }
    let mut delta = vec![0.0; n];
    for (r, &i) in free.iter().enumerate() {
        delta[i] = m[r * w + k + 1] / m[r * w + r];
    }
    delta.iter().all(|v| v.is_finite()).then_some(delta)
}

const TILT_FLOOR: f64 = 1e-12;
const MAX_TILT_STEP: f64 = 1e8;

/// Max-norm of the plain update `ν ⊙ c - ν`.
fn residual(nu: &[f64], point: &Point) -> f64 {
    nu.iter()
        .zip(&point.factors)
        .map(|(v, c)| (v * (c - 1.0)).abs())
        .fold(0.0, f64::max)
}

/// Minimizes a convex objective over the simplex whose gradient is `-c`.
///
/// The plain update `ν ← ν ⊙ c` is the fixed-point map of both solvers; it
/// oscillates once the tilt is sharp and crawls near flat faces, so each
/// step is `ν ⊙ c^η` (renormalized) with `η` adapted by backtracking. When
/// the evaluation supplies a Hessian, a Newton step is tried first. The
/// run stops when `max_y ν(c-1)` and `max_y (c-1)` are both below the
/// tolerance; the latter bounds the optimality gap.
fn mirror_descent(
    nu0: &[f64],
    opts: &RobustOptions,
    mut eval: impl FnMut(&[f64]) -> Point,
) -> (Vec<f64>, Point, usize, bool) {
    let n = nu0.len();
    // Multiplicative steps cannot revive an exact zero, so every symbol keeps a floor.
    let mut nu: Vec<f64> = nu0.iter().map(|&v| v.max(TILT_FLOOR)).collect();
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|v| *v /= total);
    let mut point = eval(&nu);
    let mut step: f64 = 1.0;
    let mut trial = vec![0.0; n];
    let mut sweeps = 0;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let gap = point.factors.iter().map(|c| c - 1.0).fold(f64::NEG_INFINITY, f64::max);
        if residual(&nu, &point) < opts.fixed_point_tol && gap < opts.fixed_point_tol {
            return (nu, point, sweeps, true);
        }
        if let Some(next) = newton_step(&nu, &point, &mut trial, &mut eval) {
            nu.copy_from_slice(&trial);
            point = next;
            continue;
        }
        loop {
            let mut total = 0.0;
            for ((t, &v), &c) in trial.iter_mut().zip(&nu).zip(&point.factors) {
                *t = if v > 0.0 { v * c.powf(step) } else { 0.0 };
                total += *t;
            }
            trial.iter_mut().for_each(|t| *t /= total);
            let next = eval(&trial);
            if descends(&nu, &point, &trial, &next) || step < 1e-12 {
                nu.copy_from_slice(&trial);
                point = next;
                step = (step * 2.0).min(MAX_TILT_STEP);
                break;
            }
            step *= 0.5;
        }
    }
    (nu, point, sweeps, false)
}

/// Convexity gives `F(ν) ≥ F(t) + c(t)·(t - ν)`, so a nonnegative slope at
/// the trial point certifies descent even when `F` is flat to rounding.
/// `Σ(t - ν) = 0`, so the centered form avoids cancellation when `c ≈ 1`.
fn descends(nu: &[f64], point: &Point, trial: &[f64], next: &Point) -> bool {
    let slope: f64 = trial
        .iter()
        .zip(nu)
        .zip(&next.factors)
        .map(|((t, v), c)| (c - 1.0) * (t - v))
        .sum();
    next.value < point.value || slope >= 0.0
}

/// Damped Newton step on the coordinates that are not pinned at the floor,
/// clipped to the simplex. `None` if no certified descent was found.
fn newton_step(nu: &[f64], point: &Point, trial: &mut [f64], eval: &mut impl FnMut(&[f64]) -> Point) -> Option<Point> {
    let h = point.hessian.as_ref()?;
    // Coordinates near the floor are left to the multiplicative step.
    let free: Vec<usize> = (0..nu.len()).filter(|&y| nu[y] > 1e3 * TILT_FLOOR).collect();
    let delta = newton_direction(h, &point.factors, &free)?;
    // Longest step that keeps every coordinate at or above the floor.
    let mut reach: f64 = 1.0;
    for (&v, &d) in nu.iter().zip(&delta) {
        if d < 0.0 {
            reach = reach.min((v - TILT_FLOOR).max(0.0) / -d);
        }
    }
    let size = delta.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    let mut tau = reach;
    for _ in 0..30 {
        if tau * size < 1e-15 {
            return None;
        }
        let mut total = 0.0;
        for ((t, &v), &d) in trial.iter_mut().zip(nu).zip(&delta) {
            *t = (v + tau * d).max(TILT_FLOOR);
            total += *t;
        }
        trial.iter_mut().for_each(|t| *t /= total);
        let next = eval(trial);
        if descends(nu, point, trial, &next) && next.value <= point.value + 1e-12 * (1.0 + point.value.abs()) {
            return Some(next);
        }
        tau *= 0.5;
    }
    None
}

/// Saddle at `(s, λ)`: `ν` minimizes the convex function
/// `Ψ(ν) = λ ln Σ_x μ(x) Z_x(ν)^{-1/λ}` and `μ*` is the tilt at `ν`.
fn tilt_saddle(red: &Reduced, table: &SlopeTable, lambda: f64, nu0: &[f64], opts: &RobustOptions) -> Saddle {
    let m = red.mu.len();
    let mut z = vec![0.0; m];
    let mut ell = vec![0.0; m];
    let (nu, point, sweeps, converged) = mirror_descent(nu0, opts, |nu| {
        neg_log_partition(table, nu, &mut z, &mut ell);
        let mut source = vec![0.0; m];
        tilt_into(&ell, &red.mu, lambda, &mut source);
        let c = factors(table, &source, &z);
        Point {
            value: free_energy_slices(&ell, &red.mu, lambda),
            hessian: tilt_hessian(table, &source, &z, &ell, lambda, &c, false),
            factors: c,
            source,
        }
    });
    Saddle {
        slope: table.slope,
        lambda,
        distortion: red.distortion(table, &nu, &point.source),
        kl: kl_slices(&point.source, &red.mu),
        nu,
        source: point.source,
        slack: false,
        converged,
        sweeps,
    }
}

/// Saddle at slope `s` with the worst case over the ball re-solved at every
/// point: `ν` minimizes `sup_{μ'} Σ_x μ'(x) ℓ_ν(x)`.
fn worstcase_saddle(red: &Reduced, table: &SlopeTable, nu0: &[f64], opts: &RobustOptions) -> Saddle {
    let m = red.mu.len();
    let mut z = vec![0.0; m];
    let mut ell = vec![0.0; m];
    let (nu, point, sweeps, converged) = mirror_descent(nu0, opts, |nu| {
        neg_log_partition(table, nu, &mut z, &mut ell);
        let wc = worst_case(&ell, &red.mu, red.radius, opts.lambda_tol);
        let c = factors(table, &wc.maximizer, &z);
        let hessian = if wc.active {
            tilt_hessian(table, &wc.maximizer, &z, &ell, wc.alpha, &c, true)
        } else {
            None
        };
        Point {
            value: wc.value,
            hessian,
            factors: c,
            source: wc.maximizer,
        }
    });
    neg_log_partition(table, &nu, &mut z, &mut ell);
    let wc = worst_case(&ell, &red.mu, red.radius, opts.lambda_tol);
    Saddle {
        slope: table.slope,
        lambda: wc.alpha,
        distortion: red.distortion(table, &nu, &point.source),
        kl: wc.kl,
        nu,
        source: point.source,
        slack: !wc.active,
        converged,
        sweeps,
    }
}

/// Unconstrained saddle at slope `s`: the game `max_ν min_x Z_x(ν)`.
fn game_saddle(red: &Reduced, table: &SlopeTable) -> Saddle {
    let m = red.mu.len();
    let n = table.cols;
    let top = table.offset.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut payoff = Vec::with_capacity(m * n);
    for x in 0..m {
        let scale = (table.offset[x] - top).exp();
        payoff.extend(table.row(x).iter().map(|w| w * scale));
    }
    let g = game::solve(&payoff, m, n);
    let source = g.row_strategy;
    let nu = g.col_strategy;
    Saddle {
        slope: table.slope,
        lambda: 0.0,
        distortion: red.distortion(table, &nu, &source),
        kl: kl_slices(&source, &red.mu),
        nu,
        source,
        slack: true,
        converged: g.gap <= GAME_GAP_TOL * g.value.abs().max(f64::MIN_POSITIVE),
        sweeps: 0,
    }
}

/// Budget bookkeeping shared by both solvers.
struct Counter {
    used: usize,
    cap: usize,
}

impl Counter {
    fn tick(&mut self) -> bool {
        self.used += 1;
        self.used <= self.cap
    }
}

/// Maxmin inner problem at one slope: find `λ` with `KL(μ*‖μ) = R` for the
/// tilt saddle. KL falls as `λ` grows, so the root is bracketed by
/// geometric steps from `guess` and then located by regula falsi (Illinois
/// variant) on `ln KL` against `ln λ`.
fn maxmin_at_slope(
    red: &Reduced,
    s: f64,
    warm: &[f64],
    guess: &mut f64,
    opts: &RobustOptions,
    counter: &mut Counter,
    monotone: &mut bool,
) -> Saddle {
    let table = SlopeTable::new(&red.rho, s);
    let game = game_saddle(red, &table);
    if game.converged && game.kl <= red.radius {
        return game;
    }

    let target = red.radius.ln();
    let mut warm = warm.to_vec();
    let mut evals: Vec<(f64, f64)> = Vec::new();
    let mut sweeps = 0;
    let mut eval = |u: f64, warm: &mut Vec<f64>, counter: &mut Counter| {
        counter.tick();
        let sad = tilt_saddle(red, &table, u.exp(), warm, opts);
        warm.clone_from(&sad.nu);
        evals.push((u, sad.kl));
        sweeps += sad.sweeps;
        let g = sad.kl.max(f64::MIN_POSITIVE).ln() - target;
        (g, sad)
    };
    // Tolerances are on the rate, which moves by λ·ΔKL and s·ΔD.
    let close = |sad: &Saddle| (sad.kl - red.radius).abs() * sad.lambda.max(1.0) <= opts.lambda_tol;

    let lo_limit = ball::ALPHA_MIN.ln();
    let hi_limit = 690.0;
    let factor = 4f64.ln();
    let mut u0 = guess.max(ball::ALPHA_MIN).ln();
    let (mut g0, mut best) = eval(u0, &mut warm, counter);
    let (mut u1, mut g1);
    if close(&best) {
        return finish_slope(best, sweeps, guess, &evals, monotone);
    }
    // Bracket: g > 0 means the tilt is too strong, so raise λ.
    let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
    loop {
        u1 = (u0 + dir * factor).clamp(lo_limit, hi_limit);
        let (g, sad) = eval(u1, &mut warm, counter);
        g1 = g;
        if close(&sad) {
            return finish_slope(sad, sweeps, guess, &evals, monotone);
        }
        if g1.abs() < g0.abs() {
            best = sad;
        }
        if g1.signum() != g0.signum() || u1 == lo_limit || u1 == hi_limit || counter.used > counter.cap {
            break;
        }
        u0 = u1;
        g0 = g1;
    }
    if g1.signum() != g0.signum() {
        let mut side = 0i8;
        for _ in 0..BISECTION_CAP {
            if counter.used > counter.cap {
                break;
            }
            let mut u = (u0 * g1 - u1 * g0) / (g1 - g0);
            if !u.is_finite() || u <= u0.min(u1) || u >= u0.max(u1) {
                u = 0.5 * (u0 + u1);
            }
            let (g, sad) = eval(u, &mut warm, counter);
            let width = (u1 - u0).abs();
            let done = close(&sad) || width <= 1e-14 * (1.0 + u.abs());
            if g.abs() <= (best.kl.max(f64::MIN_POSITIVE).ln() - target).abs() || done {
                best = sad;
            }
            if done {
                break;
            }
            if g.signum() == g1.signum() {
                u1 = u;
                g1 = g;
                if side == -1 {
                    g0 *= 0.5;
                }
                side = -1;
            } else {
                u0 = u;
                g0 = g;
                if side == 1 {
                    g1 *= 0.5;
                }
                side = 1;
            }
        }
    }
    finish_slope(best, sweeps, guess, &evals, monotone)
}

fn finish_slope(mut best: Saddle, sweeps: usize, guess: &mut f64, evals: &[(f64, f64)], monotone: &mut bool) -> Saddle {
    let mut sorted = evals.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.windows(2).any(|w| w[1].1 > w[0].1 * (1.0 + 1e-6) + 1e-12) {
        *monotone = false;
    }
    *guess = best.lambda;
    best.sweeps = sweeps;
    best
}

/// Minimax inner problem at one slope.
fn minimax_at_slope(red: &Reduced, s: f64, warm: &[f64], opts: &RobustOptions) -> Saddle {
    let table = SlopeTable::new(&red.rho, s);
    let game = game_saddle(red, &table);
    if game.converged && game.kl <= red.radius {
        return game;
    }
    worstcase_saddle(red, &table, warm, opts)
}

/// Bisection on the slope so that `E_{μ*,q*}[ρ] = D`; the inner saddle
/// solver runs at every trial slope.
fn slope_search<F>(red: &Reduced, opts: &RobustOptions, counter: &mut Counter, mut inner: F) -> Saddle
where
    F: FnMut(f64, &[f64], &mut Counter) -> Saddle,
{
    let n = red.rho.cols();
    let mut warm = vec![1.0 / n as f64; n];
    let mut total_sweeps = 0;
    let mut eval = |s: f64, warm: &mut Vec<f64>, counter: &mut Counter| {
        let sad = inner(s, warm, counter);
        *warm = classical::warm_start(&sad.nu, WARM_MIX).into_vec();
        total_sweeps += sad.sweeps;
        sad
    };

    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut best = eval(lo, &mut warm, counter);
    // Last saddles seen on each side of the budget.
    let mut above: Option<Saddle> = None;
    for _ in 0..DOUBLING_CAP {
        if best.distortion < red.budget {
            break;
        }
        hi = lo;
        lo *= 2.0;
        above = Some(std::mem::replace(&mut best, eval(lo, &mut warm, counter)));
    }
    let mut below = (best.distortion < red.budget).then(|| best.clone());
    let close = |sad: &Saddle| (sad.distortion - red.budget).abs() * sad.slope.abs().max(1.0) <= opts.slope_tol;
    if !close(&best) {
        for _ in 0..BISECTION_CAP {
            if !counter.tick() || hi - lo <= SLOPE_COLLAPSE * lo.abs() {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let sad = eval(mid, &mut warm, counter);
            let gap = sad.distortion - red.budget;
            if (gap.abs() <= (best.distortion - red.budget).abs()) || close(&sad) {
                best = sad.clone();
            }
            if close(&sad) {
                break;
            }
            if gap > 0.0 {
                hi = mid;
                above = Some(sad);
            } else {
                lo = mid;
                below = Some(sad);
            }
        }
        if !close(&best) && hi - lo <= SLOPE_COLLAPSE * lo.abs() {
            if let (Some(a), Some(b)) = (&above, &below) {
                best = blend(red, a, b);
            }
        }
    }
    best.sweeps = total_sweeps;
    best
}

/// At a slope where the distortion jumps, the minimizers of the inner problem
/// form a face on which `Z`, and with it `μ*` and the KL, are constant while
/// the distortion is linear in `ν`. Mixing the marginals from both sides of
/// the jump hits the budget exactly.
fn blend(red: &Reduced, above: &Saddle, below: &Saddle) -> Saddle {
    let mix =
        |t: f64, a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect() };
    let at = |t: f64| {
        let slope = (1.0 - t) * above.slope + t * below.slope;
        let table = SlopeTable::new(&red.rho, slope);
        let nu = mix(t, &above.nu, &below.nu);
        let source = mix(t, &above.source, &below.source);
        let distortion = red.distortion(&table, &nu, &source);
        (slope, nu, source, distortion)
    };
    let t = classical::bisect_weight(|t| at(t).3 - red.budget);
    let (slope, nu, source, distortion) = at(t);
    Saddle {
        slope,
        lambda: (1.0 - t) * above.lambda + t * below.lambda,
        distortion,
        kl: kl_slices(&source, &red.mu),
        nu,
        source,
        slack: above.slack && below.slack,
        converged: above.converged && below.converged,
        sweeps: 0,
    }
}

/// `max_{μ' in ball} min_y E_{μ'}[ρ(·, y)]`: above this budget every source
/// in the ball has rate 0. Computed as `min_ν sup_{μ'} E_{μ'}[ρν]` by
/// exponentiated-gradient descent with backtracking.
fn zero_rate_point(red: &Reduced, tol: f64) -> (f64, Vec<f64>, ball::WorstCase) {
    let (m, n) = (red.rho.rows(), red.rho.cols());
    let objective = |nu: &[f64]| {
        let ell: Vec<f64> = (0..m)
            .map(|x| red.rho.row(x).iter().zip(nu).map(|(r, v)| r * v).sum())
            .collect();
        worst_case(&ell, &red.mu, red.radius, tol)
    };
    // Start from the best pure reproduction, lightly mixed.
    let best_y = (0..n)
        .map(|y| (objective(&unit(n, y)).value, y))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    let mut best_nu = unit(n, best_y.1);
    let mut best = objective(&best_nu);
    let mut nu: Vec<f64> = (0..n)
        .map(|y| {
            if y == best_y.1 {
                0.9
            } else {
                0.1 / (n as f64 - 1.0).max(1.0)
            }
        })
        .collect();
    if n == 1 {
        nu = vec![1.0];
    }
    let mut current = objective(&nu);
    let scale = red
        .rho
        .to_rows()
        .iter()
        .flatten()
        .copied()
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut step = 1.0 / scale;
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..n)
            .map(|y| (0..m).map(|x| current.maximizer[x] * red.rho.get(x, y)).sum())
            .collect();
        let gmin = grad.iter().copied().fold(f64::INFINITY, f64::min);
        let mut trial: Vec<f64> = nu
            .iter()
            .zip(&grad)
            .map(|(v, g)| v * (-step * (g - gmin)).exp())
            .collect();
        let total: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|v| *v /= total);
        let cand = objective(&trial);
        if cand.value < current.value {
            nu = trial;
            current = cand;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step * scale < 1e-14 {
                break;
            }
        }
    }
    if current.value < best.value {
        best = current;
        best_nu = nu;
    }
    (best.value, best_nu, best)
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn validate_instance(instance: &ProblemInstance) -> Result<()> {
    if !instance.radius.is_finite() || instance.radius < 0.0 {
        return Err(Error::InvalidRadius(instance.radius));
    }
    Ok(())
}

/// Smallest budget any source in the ball can meet:
/// `sup_{μ'} Σ_x μ'(x) min_y ρ(x, y)`.
pub fn robust_min_distortion(instance: &ProblemInstance) -> Result<f64> {
    let red = Reduced::new(instance);
    Ok(worst_case(&red.rho.row_minima(), &red.mu, red.radius, 1e-13).value)
}

/// Budget at and above which the robust rate is 0.
pub fn robust_zero_rate_distortion(instance: &ProblemInstance) -> Result<f64> {
    let red = Reduced::new(instance);
    Ok(zero_rate_point(&red, ZERO_RATE_TOL).0)
}

enum Prelude {
    Done(RobustSolution),
    Solve(Reduced),
}

fn prelude(instance: &ProblemInstance, method: Method, opts: &RobustOptions) -> Result<Prelude> {
    validate_instance(instance)?;
    if instance.radius == 0.0 {
        let sol = classical::classical_rd(&instance.nominal, &instance.rho, instance.budget, opts.slope_tol)?;
        return Ok(Prelude::Done(from_classical(instance, sol, method)));
    }
    let red = Reduced::new(instance);
    let minimum = worst_case(&red.rho.row_minima(), &red.mu, red.radius, 1e-13).value;
    if red.budget < minimum - 1e-15 * (1.0 + minimum) {
        return Err(Error::InfeasibleBudget {
            budget: red.budget,
            minimum,
        });
    }
    let (d_max, nu0, wc) = zero_rate_point(&red, ZERO_RATE_TOL);
    if red.budget >= d_max {
        let sad = Saddle {
            slope: 0.0,
            lambda: 0.0,
            distortion: d_max,
            kl: wc.kl,
            source: wc.maximizer,
            nu: nu0,
            slack: !wc.active,
            converged: true,
            sweeps: 0,
        };
        return Ok(Prelude::Done(assemble(
            instance,
            &red,
            sad,
            method,
            Regime::ZeroRate,
            true,
            opts,
        )));
    }
    Ok(Prelude::Solve(red))
}

fn from_classical(instance: &ProblemInstance, sol: classical::ClassicalSolution, method: Method) -> RobustSolution {
    let rate = if sol.slope == 0.0 {
        0.0
    } else {
        classical::parametric_rate(
            &instance.nominal,
            &instance.rho,
            sol.slope,
            &sol.output,
            instance.budget,
        )
    };
    RobustSolution {
        method,
        regime: Regime::Singleton,
        slope: sol.slope,
        lambda: f64::INFINITY,
        worst_source: instance.nominal.clone(),
        rate: rate.max(0.0),
        mutual_information: sol.rate,
        achieved_distortion: sol.distortion,
        achieved_kl: 0.0,
        lemma2_radius: 0.0,
        worst_case_distortion: sol.distortion,
        lambda_monotone: true,
        iterations: sol.iterations,
        converged: sol.converged,
        output: sol.output,
        kernel: sol.kernel,
    }
}

/// Expands a reduced saddle to the full alphabet and fills in diagnostics.
fn assemble(
    instance: &ProblemInstance,
    red: &Reduced,
    sad: Saddle,
    method: Method,
    regime: Regime,
    monotone: bool,
    opts: &RobustOptions,
) -> RobustSolution {
    let mut source = vec![0.0; instance.source_size()];
    for (&x, &p) in red.support.iter().zip(&sad.source) {
        source[x] = p;
    }
    let worst_source = ProbVector::from_weights_unchecked(source);
    // Entries held at the positivity floor are zero at the optimum.
    let nu: Vec<f64> = sad
        .nu
        .iter()
        .map(|&v| if v <= 10.0 * TILT_FLOOR { 0.0 } else { v })
        .collect();
    let output = ProbVector::from_weights(nu).unwrap_or_else(|_| ProbVector::from_weights_unchecked(sad.nu.clone()));
    let table = SlopeTable::new(&instance.rho, sad.slope);
    let kernel = table.kernel(output.as_slice());
    let mi = mutual_information(&worst_source, &kernel).expect("dimensions agree");
    let rate = if regime == Regime::ZeroRate {
        0.0
    } else {
        rate_value(sad.slope, sad.lambda, output.as_slice(), instance)
    };
    let cond = conditional_distortion(&kernel, &instance.rho);
    let worst_case_distortion = worst_case(&cond, instance.nominal.as_slice(), instance.radius, 1e-13).value;
    let mut sol = RobustSolution {
        method,
        regime,
        slope: sad.slope,
        lambda: sad.lambda,
        achieved_kl: kl_divergence(&worst_source, &instance.nominal).expect("dimensions agree"),
        worst_source,
        output,
        kernel,
        rate: rate.max(0.0),
        mutual_information: mi,
        achieved_distortion: sad.distortion,
        lemma2_radius: 0.0,
        worst_case_distortion,
        lambda_monotone: monotone,
        iterations: sad.sweeps,
        converged: sad.converged,
    };
    sol.lemma2_radius =
        lemma2_radius_with(&sol, instance, opts.lambda_tol, ExponentVariant::Reciprocal).unwrap_or(f64::INFINITY);
    sol
}

fn finish(
    instance: &ProblemInstance,
    red: &Reduced,
    sad: Saddle,
    method: Method,
    monotone: bool,
    counter: &Counter,
    opts: &RobustOptions,
) -> RobustSolution {
    let regime = if sad.slack { Regime::Slack } else { Regime::Active };
    let within = (sad.distortion - red.budget).abs() * sad.slope.abs().max(1.0) <= opts.slope_tol
        && (sad.slack || (sad.kl - red.radius).abs() * sad.lambda.max(1.0) <= opts.lambda_tol);
    let converged = sad.converged && within && counter.used <= counter.cap;
    let mut sol = assemble(instance, red, sad, method, regime, monotone, opts);
    sol.converged = converged;
    sol
}

/// Maxmin solver: slope bisection outside, a root search on `λ` for
/// `KL(μ*‖μ) = R` inside, and the tilt saddle on `ν` innermost.
///
/// A zero radius returns the classical solution of the nominal source.
pub fn maxmin_solve(instance: &ProblemInstance, opts: &RobustOptions) -> Result<RobustSolution> {
    let red = match prelude(instance, Method::Maxmin, opts)? {
        Prelude::Done(sol) => return Ok(sol),
        Prelude::Solve(red) => red,
    };
    let mut counter = Counter {
        used: 0,
        cap: opts.max_outer,
    };
    let mut monotone = true;
    let mut guess = 1.0;
    let sad = slope_search(&red, opts, &mut counter, |s, warm, counter| {
        maxmin_at_slope(&red, s, warm, &mut guess, opts, counter, &mut monotone)
    });
    Ok(finish(instance, &red, sad, Method::Maxmin, monotone, &counter, opts))
}

/// Minimax solver: slope bisection outside; each fixed-point sweep tilts
/// the nominal source toward `ℓ(x) = Σ_y q*(x,y) ln(e^{-sρ(x,y)} q*(x,y)/ν(y))`
/// at the temperature that puts it on the ball's boundary.
pub fn minimax_solve(instance: &ProblemInstance, opts: &RobustOptions) -> Result<RobustSolution> {
    let red = match prelude(instance, Method::Minimax, opts)? {
        Prelude::Done(sol) => return Ok(sol),
        Prelude::Solve(red) => red,
    };
    let mut counter = Counter {
        used: 0,
        cap: opts.max_outer,
    };
    let sad = slope_search(&red, opts, &mut counter, |s, warm, _| {
        minimax_at_slope(&red, s, warm, opts)
    });
    Ok(finish(instance, &red, sad, Method::Minimax, true, &counter, opts))
}

fn rate_value(s: f64, lambda: f64, output: &[f64], instance: &ProblemInstance) -> f64 {
    let table = SlopeTable::new(&instance.rho, s);
    let ell: Vec<f64> = table.log_partition(output).iter().map(|v| -v).collect();
    let mu = instance.nominal.as_slice();
    let d = instance.budget;
    if lambda.is_infinite() {
        s * d
            + mu.iter()
                .zip(&ell)
                .filter(|(&m, _)| m > 0.0)
                .map(|(m, l)| m * l)
                .sum::<f64>()
    } else if lambda == 0.0 {
        s * d + support_max(&ell, mu)
    } else {
        s * d + lambda * instance.radius + free_energy_slices(&ell, mu, lambda)
    }
}

/// `sD + λR + λ ln Σ_x (Σ_y e^{sρ(x,y)} ν(y))^{-1/λ} μ(x)`, evaluated
/// directly. `λ = 0` takes the zero-temperature limit `sD + max_x ℓ(x)` and
/// `λ = ∞` the classical parametric form.
pub fn robust_rate_value(s: f64, lambda: f64, output: &ProbVector, instance: &ProblemInstance) -> Result<f64> {
    check_slope(s)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::LambdaNonPositive(lambda));
    }
    if output.len() != instance.repro_size() {
        return Err(Error::DimensionMismatch {
            expected: instance.repro_size(),
            found: output.len(),
        });
    }
    Ok(rate_value(s, lambda, output.as_slice(), instance))
}

/// Worst-source formula `μ*(x) ∝ (Σ_y e^{sρ(x,y)} ν(y))^{-p} μ(x)` with the
/// power `p` chosen by `variant`.
pub fn worst_source_from(
    s: f64,
    lambda: f64,
    output: &ProbVector,
    instance: &ProblemInstance,
    variant: ExponentVariant,
) -> Result<ProbVector> {
    check_slope(s)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::LambdaNonPositive(lambda));
    }
    let power = variant.tilt_power(lambda);
    let table = SlopeTable::new(&instance.rho, s);
    let ell: Vec<f64> = table
        .log_partition(output.as_slice())
        .iter()
        .map(|v| -v * power)
        .collect();
    let mut out = vec![0.0; ell.len()];
    tilt_into(&ell, instance.nominal.as_slice(), 1.0, &mut out);
    Ok(ProbVector::from_weights_unchecked(out))
}

/// `R* = offset + sup_{μ' in ball} Σ_x μ'(x) g(x)`, returned as `(offset, g)`.
/// `None` means `μ*` misses part of the nominal support, so `R*` is infinite
/// and `g` marks the missed symbols.
fn lemma2_objective(
    solution: &RobustSolution,
    instance: &ProblemInstance,
    variant: ExponentVariant,
) -> (Option<f64>, Vec<f64>) {
    let mu = instance.nominal.as_slice();
    let radius = instance.radius;
    let tilted = matches!(solution.regime, Regime::Active | Regime::Singleton) || variant == ExponentVariant::Literal;
    if tilted {
        let power = variant.tilt_power(solution.lambda);
        let table = SlopeTable::new(&instance.rho, solution.slope);
        let log_z = table.log_partition(solution.output.as_slice());
        let neg: Vec<f64> = log_z.iter().map(|v| -power * v).collect();
        let g: Vec<f64> = log_z.iter().map(|v| power * v).collect();
        return (Some(free_energy_slices(&neg, mu, 1.0) + radius), g);
    }
    let missed: Vec<f64> = mu
        .iter()
        .zip(solution.worst_source.iter())
        .map(|(&m, &p)| if m > 0.0 && p <= 0.0 { 1.0 } else { 0.0 })
        .collect();
    if missed.iter().any(|&v| v > 0.0) {
        return (None, missed);
    }
    let g = mu
        .iter()
        .zip(solution.worst_source.iter())
        .map(|(&m, &p)| if m > 0.0 { (m / p).ln() } else { 0.0 })
        .collect();
    (Some(radius), g)
}

/// Source in the nominal ball that attains `lemma2_radius`, i.e. the
/// farthest point of the ball from `μ*`.
pub fn lemma2_extremal(solution: &RobustSolution, instance: &ProblemInstance, tol: f64) -> Result<ProbVector> {
    let (_, g) = lemma2_objective(solution, instance, ExponentVariant::Reciprocal);
    let mu = &instance.nominal;
    let support = mu.support();
    let (lo, hi) = support.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(g[x]), hi.max(g[x]))
    });
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        // Every point of the ball maximizes a constant objective; the
        // distance is attained on the boundary, reached fastest by tilting
        // toward the least likely symbol.
        let rare = support
            .iter()
            .copied()
            .min_by(|&a, &b| mu[a].total_cmp(&mu[b]))
            .unwrap_or(0);
        let mut toward = vec![0.0; mu.len()];
        toward[rare] = 1.0;
        return Ok(ball::worstcase_expectation(&toward, mu, instance.radius, tol)?.maximizer);
    }
    Ok(ball::worstcase_expectation(&g, mu, instance.radius, tol)?.maximizer)
}

/// Radius `R*` with `KL(μ'‖μ*) ≤ R*` for every `μ'` in the nominal ball.
pub fn lemma2_radius(solution: &RobustSolution, instance: &ProblemInstance, tol: f64) -> Result<f64> {
    lemma2_radius_with(solution, instance, tol, ExponentVariant::Reciprocal)
}

/// [`lemma2_radius`] with an explicit reading of the worst-source exponent.
///
/// For a tilted worst source with power `p`,
/// `R* = ln Σ_x Z_x^{-p} μ(x) + R + p (αR + α ln Σ_x Z_x^{1/α} μ(x))`
/// where `α` is the temperature of the worst case of `ln Z` over the ball.
/// Sources that are not of tilt form (slack or zero-rate regimes) use the
/// general bound `R + sup_{μ'} Σ μ' ln(μ/μ*)`.
pub fn lemma2_radius_with(
    solution: &RobustSolution,
    instance: &ProblemInstance,
    tol: f64,
    variant: ExponentVariant,
) -> Result<f64> {
    match lemma2_objective(solution, instance, variant) {
        (Some(offset), g) => {
            Ok((offset + worst_case(&g, instance.nominal.as_slice(), instance.radius, tol).value).max(0.0))
        }
        (None, _) => Ok(if instance.radius > 0.0 { f64::INFINITY } else { 0.0 }),
    }
}

/// One failed inequality found by [`saddle_check`].
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub check: &'static str,
    pub sample: usize,
    pub value: f64,
    pub bound: f64,
}

/// Outcome of the Monte-Carlo saddle audit.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub samples: usize,
    pub seed: u64,
    pub rate: f64,
    /// `max_{μ'} I(μ'; q*) - rate`; informational only.
    pub max_source_excess: f64,
    /// `max_{μ'} [I(μ'; q*) - s(E_{μ',q*}[ρ] - D)] - rate`.
    pub max_lagrangian_excess: f64,
    /// `rate - min_q I(μ*; q)` over sampled feasible kernels.
    pub max_kernel_deficit: f64,
    /// `max_{μ'} R_{μ'}(D) - rate`.
    pub max_converse_excess: f64,
    pub violations: Vec<Violation>,
}

impl SaddleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits the saddle point with sampled sources from the ball and sampled
/// feasible kernels. Sample 0 of the sources is `μ*` itself.
///
/// Checks, each at tolerance `tol`:
/// - `lagrangian`: `I(μ'; q*) - s (E_{μ',q*}[ρ] - D) ≤ rate` for sources `μ'`
///   in the ball. The kernel `q*` only meets the budget at `μ*`, so the bare
///   `I(μ'; q*) ≤ rate` can fail for sources that incur more distortion; its
///   largest excess is reported as `max_source_excess` but not flagged.
/// - `kernel`: `I(μ*; q) ≥ rate` for `q` mixing `q*` with the
///   minimum-distortion deterministic kernel;
/// - `converse`: `R_{μ'}(D) ≤ rate` for sources in the ball.
pub fn saddle_check(
    solution: &RobustSolution,
    instance: &ProblemInstance,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<SaddleReport> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    let mut sources = vec![solution.worst_source.clone()];
    sources.extend(sample_ball(
        &instance.nominal,
        instance.radius,
        samples.saturating_sub(1),
        seed,
    )?);
    let rate = solution.rate;
    let s = solution.slope;
    let d = instance.budget;
    let cond = conditional_distortion(&solution.kernel, &instance.rho);
    let rows: Vec<_> = sources
        .par_iter()
        .map(|src| -> Result<(f64, f64, f64)> {
            let info = mutual_information(src, &solution.kernel)?;
            let lagr = info - s * (src.expect(&cond) - d);
            let conv = classical::classical_rd(src, &instance.rho, d, 1e-11)?.rate;
            Ok((info, lagr, conv))
        })
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let (mut max_source, mut max_lagr, mut max_conv) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &(info, lagr, conv)) in rows.iter().enumerate() {
        max_source = max_source.max(info - rate);
        max_lagr = max_lagr.max(lagr - rate);
        max_conv = max_conv.max(conv - rate);
        for (check, value) in [("lagrangian", lagr), ("converse", conv)] {
            if value > rate + tol {
                violations.push(Violation {
                    check,
                    sample: i,
                    value,
                    bound: rate + tol,
                });
            }
        }
    }

    // Feasible kernels: mixtures with the row-wise minimum-distortion map.
    let (m, n) = (instance.source_size(), instance.repro_size());
    let mut det = vec![0.0; m * n];
    for x in 0..m {
        let row = instance.rho.row(x);
        let y = (0..n).fold(0, |b, y| if row[y] < row[b] { y } else { b });
        det[x * n + y] = 1.0;
    }
    let det = Kernel::from_flat(m, n, det);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let mut max_deficit = f64::NEG_INFINITY;
    for i in 0..samples.max(1) {
        let t = if i == 0 { 0.0 } else { rng.random::<f64>() };
        let q = solution.kernel.mix(&det, t)?;
        let info = mutual_information(&solution.worst_source, &q)?;
        max_deficit = max_deficit.max(rate - info);
        if info < rate - tol {
            violations.push(Violation {
                check: "kernel",
                sample: i,
                value: info,
                bound: rate - tol,
            });
        }
    }
    Ok(SaddleReport {
        samples: sources.len(),
        seed,
        rate,
        max_source_excess: max_source,
        max_lagrangian_excess: max_lagr,
        max_kernel_deficit: max_deficit,
        max_converse_excess: max_conv,
        violations,
    })
}
