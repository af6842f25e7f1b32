//! Probability primitives on finite alphabets.
//!
//! Distributions, stochastic kernels and distortion matrices, plus the
//! information functionals built on them. All logarithms are natural, so
//! every entropy-like quantity is in nats. The conventions `0 ln 0 = 0` and
//! `0 ln(0/0) = 0` are used throughout.
//!
//! The joint measure `μ ⊗ q` and the product `μ × ν` are never stored; the
//! functionals below are double sums evaluated on the fly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`ProbVector`] or kernel row.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability distribution on `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates `raw` with [`validate_pmf`] at [`NORMALIZATION_TOL`].
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        validate_pmf(&raw, NORMALIZATION_TOL)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs a nonempty alphabet");
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, index: usize) -> Self {
        assert!(index < n);
        let mut p = vec![0.0; n];
        p[index] = 1.0;
        ProbVector(p)
    }

    /// Bernoulli source `(1 - p, p)`; symbol 1 has probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    /// Normalizes finite nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index, value: w });
            }
            if w < 0.0 {
                return Err(Error::NegativeMass { index, value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NotNormalized { sum: total });
        }
        Ok(ProbVector(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Wraps weights that are already known to be a distribution up to
    /// rounding, renormalizing them.
    pub(crate) fn from_weights_unchecked(mut weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        debug_assert!(total > 0.0 && total.is_finite(), "degenerate weights {weights:?}");
        for w in &mut weights {
            *w /= total;
        }
        ProbVector(weights)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Indices carrying strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.0[i] > 0.0).collect()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
    }

    /// Sum of `f(x) p(x)`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.0
            .iter()
            .zip(f)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &v)| p * v)
            .sum()
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &ProbVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Checks a raw probability vector and renormalizes it to sum exactly to 1.
///
/// Entries in `[-tol, 0)` are treated as rounding noise and clamped to zero.
pub fn validate_pmf(raw: &[f64], tol: f64) -> Result<ProbVector> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if value < -tol {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let clamped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if (sum - 1.0).abs() > tol || sum <= 0.0 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(ProbVector(clamped.into_iter().map(|v| v / sum).collect()))
}

/// Row-major dense matrix shared by kernels and distortion matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Empty);
        }
        let cols = rows[0].len();
        for r in &rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
        }
        let n = rows.len();
        Ok(Dense {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Row-stochastic matrix `q(x, y)`: one row per source symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel(Dense);

impl Kernel {
    /// Validates every row as a distribution (tolerance [`NORMALIZATION_TOL`]).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dense = Dense::from_rows(rows)?;
        for i in 0..dense.rows {
            let row = dense.row(i);
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeMass {
                        index: i * dense.cols + j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidKernelRow { row: i, sum });
            }
        }
        Ok(Kernel(dense))
    }

    pub(crate) fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Kernel(Dense { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Kernel::from_flat(n, n, data)
    }

    /// Kernel whose every row is `row`: the output ignores the input.
    pub fn constant(source_size: usize, row: &ProbVector) -> Self {
        let data = (0..source_size).flat_map(|_| row.iter().copied()).collect();
        Kernel::from_flat(source_size, row.len(), data)
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn binary_symmetric(crossover: f64) -> Result<Self> {
        Kernel::new(vec![vec![1.0 - crossover, crossover], vec![crossover, 1.0 - crossover]])
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.data[i * self.0.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    /// Convex combination `(1 - t) self + t other`.
    pub fn mix(&self, other: &Kernel, t: f64) -> Result<Kernel> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.rows() * self.cols(),
                found: other.rows() * other.cols(),
            });
        }
        let data = self
            .0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Ok(Kernel::from_flat(self.rows(), self.cols(), data))
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> f64 {
        self.0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Per-letter distortion `ρ(x, y) ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix(Dense);

impl DistortionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dense = Dense::from_rows(rows)?;
        for i in 0..dense.rows {
            for (j, &value) in dense.row(i).iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidDistortion { row: i, col: j, value });
                }
            }
        }
        Ok(DistortionMatrix(dense))
    }

    /// `ρ(x, y) = [x ≠ y]` on an `n × n` alphabet.
    pub fn hamming(n: usize) -> Self {
        let data = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { 1.0 }).collect();
        DistortionMatrix(Dense { rows: n, cols: n, data })
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.data[i * self.0.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    /// `min_y ρ(x, y)` for every source symbol.
    pub fn row_minima(&self) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.row(i).iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Column `y` as a function of the source symbol.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    /// Keeps only the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> DistortionMatrix {
        let data = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        DistortionMatrix(Dense {
            rows: rows.len(),
            cols: self.cols(),
            data,
        })
    }
}

impl Serialize for DistortionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Everything a robust solve needs: distortion, nominal source, KL radius
/// (nats) and distortion budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance {
    pub rho: DistortionMatrix,
    pub nominal: ProbVector,
    pub radius: f64,
    pub budget: f64,
}

impl ProblemInstance {
    pub fn new(rho: DistortionMatrix, nominal: ProbVector, radius: f64, budget: f64) -> Result<Self> {
        if nominal.len() != rho.rows() {
            return Err(Error::DimensionMismatch {
                expected: rho.rows(),
                found: nominal.len(),
            });
        }
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidRadius(radius));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "budget must be finite and nonnegative, got {budget}"
            )));
        }
        Ok(ProblemInstance {
            rho,
            nominal,
            radius,
            budget,
        })
    }

    pub fn source_size(&self) -> usize {
        self.rho.rows()
    }

    pub fn repro_size(&self) -> usize {
        self.rho.cols()
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.rho.clone(), self.nominal.clone(), radius, self.budget)
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.rho.clone(), self.nominal.clone(), self.radius, budget)
    }

    /// Drops source symbols with zero nominal mass. Every distribution at
    /// finite KL distance from the nominal vanishes on them too.
    ///
    /// Returns the reduced instance and the original index of each kept row.
    pub fn restrict_to_support(&self) -> (ProblemInstance, Vec<usize>) {
        let support = self.nominal.support();
        let nominal = ProbVector::from_weights_unchecked(support.iter().map(|&i| self.nominal[i]).collect());
        let reduced = ProblemInstance {
            rho: self.rho.select_rows(&support),
            nominal,
            radius: self.radius,
            budget: self.budget,
        };
        (reduced, support)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Relative entropy `Σ p ln(p/q)` in nats; `+∞` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok(kl_slices(p.as_slice(), q.as_slice()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).ln();
        }
    }
    acc.max(0.0)
}

/// Output marginal `ν(y) = Σ_x μ(x) q(x, y)`.
pub fn induced_output(mu: &ProbVector, q: &Kernel) -> Result<ProbVector> {
    check_len(q.rows(), mu.len())?;
    Ok(ProbVector::from_weights_unchecked(induced_weights(mu.as_slice(), q)))
}

pub(crate) fn induced_weights(mu: &[f64], q: &Kernel) -> Vec<f64> {
    let mut nu = vec![0.0; q.cols()];
    for (x, &m) in mu.iter().enumerate() {
        if m > 0.0 {
            for (acc, &v) in nu.iter_mut().zip(q.row(x)) {
                *acc += m * v;
            }
        }
    }
    nu
}

/// `I(μ; q) = Σ_x Σ_y μ(x) q(x,y) ln(q(x,y)/ν(y))` with `ν` the induced output.
pub fn mutual_information(mu: &ProbVector, q: &Kernel) -> Result<f64> {
    let nu = induced_output(mu, q)?;
    let mut acc = 0.0;
    for x in 0..mu.len() {
        if mu[x] <= 0.0 {
            continue;
        }
        let mut row_acc = 0.0;
        for (y, &qxy) in q.row(x).iter().enumerate() {
            // Terms whose joint mass underflows contribute nothing.
            if mu[x] * qxy > 0.0 {
                row_acc += qxy * (qxy / nu[y]).ln();
            }
        }
        acc += mu[x] * row_acc;
    }
    Ok(acc.max(0.0))
}

/// `Σ_x Σ_y μ(x) q(x,y) ρ(x,y)`.
pub fn expected_distortion(mu: &ProbVector, q: &Kernel, rho: &DistortionMatrix) -> Result<f64> {
    check_len(q.rows(), mu.len())?;
    check_len(rho.rows(), mu.len())?;
    check_len(rho.cols(), q.cols())?;
    Ok(conditional_distortion(q, rho)
        .iter()
        .zip(mu.iter())
        .map(|(d, m)| d * m)
        .sum())
}

/// `Σ_y q(x,y) ρ(x,y)` for every source symbol.
pub fn conditional_distortion(q: &Kernel, rho: &DistortionMatrix) -> Vec<f64> {
    (0..q.rows())
        .map(|x| q.row(x).iter().zip(rho.row(x)).map(|(a, b)| a * b).sum())
        .collect()
}

/// Binary entropy `h(p)` in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |t: f64| if t > 0.0 { -t * t.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn validate_pmf_cases() {
        assert_eq!(validate_pmf(&[0.5, 0.5], 1e-12).unwrap().as_slice(), &[0.5, 0.5]);
        assert_eq!(validate_pmf(&[1.0, 0.0], 1e-12).unwrap().as_slice(), &[1.0, 0.0]);
        assert!(matches!(
            validate_pmf(&[0.3, 0.8], 1e-12),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            validate_pmf(&[1.5, -0.5], 1e-12),
            Err(Error::NegativeMass { index: 1, .. })
        ));
        assert_eq!(validate_pmf(&[], 1e-12), Err(Error::Empty));
        let nearly = validate_pmf(&[0.5 + 1e-13, 0.5], 1e-12).unwrap();
        assert_abs_diff_eq!(nearly.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn kl_examples() {
        let half = pv(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&half, &half).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kl_divergence(&pv(&[1.0, 0.0]), &half).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        // 0.75 ln 1.5 + 0.25 ln 0.5
        let direct = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        let kl = kl_divergence(&pv(&[0.75, 0.25]), &half).unwrap();
        assert_abs_diff_eq!(kl, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(kl, 0.130812, epsilon = 1e-6);
        assert_eq!(kl_divergence(&half, &pv(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert!(matches!(
            kl_divergence(&half, &ProbVector::uniform(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn induced_output_examples() {
        let half = pv(&[0.5, 0.5]);
        assert_eq!(
            induced_output(&half, &Kernel::identity(2)).unwrap().as_slice(),
            &[0.5, 0.5]
        );
        let r = pv(&[0.2, 0.3, 0.5]);
        let out = induced_output(&pv(&[0.1, 0.9]), &Kernel::constant(2, &r)).unwrap();
        assert!(out.max_abs_diff(&r) < 1e-15);
        let q = Kernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let out = induced_output(&pv(&[0.3, 0.7]), &q).unwrap();
        assert_abs_diff_eq!(out[0], 0.41, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.59, epsilon = 1e-15);
        assert!(induced_output(&ProbVector::uniform(3), &q).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let half = pv(&[0.5, 0.5]);
        let r = pv(&[0.3, 0.7]);
        assert_eq!(mutual_information(&half, &Kernel::constant(2, &r)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            mutual_information(&half, &Kernel::identity(2)).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let bsc = Kernel::binary_symmetric(0.1).unwrap();
        let mi = mutual_information(&half, &bsc).unwrap();
        assert_abs_diff_eq!(mi, std::f64::consts::LN_2 - binary_entropy(0.1), epsilon = 1e-15);
        assert_abs_diff_eq!(mi, 0.368064, epsilon = 1e-6);
    }

    #[test]
    fn expected_distortion_examples() {
        let ham = DistortionMatrix::hamming(2);
        let mu = pv(&[0.3, 0.7]);
        assert_eq!(expected_distortion(&mu, &Kernel::identity(2), &ham).unwrap(), 0.0);
        let flat = Kernel::constant(2, &pv(&[0.5, 0.5]));
        assert_abs_diff_eq!(expected_distortion(&mu, &flat, &ham).unwrap(), 0.5, epsilon = 1e-15);
        let q = Kernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_abs_diff_eq!(expected_distortion(&mu, &q, &ham).unwrap(), 0.17, epsilon = 1e-15);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            DistortionMatrix::new(vec![vec![0.0, -1.0]]),
            Err(Error::InvalidDistortion { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            DistortionMatrix::new(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Kernel::new(vec![vec![0.5, 0.6]]),
            Err(Error::InvalidKernelRow { row: 0, .. })
        ));
    }

    #[test]
    fn support_restriction_drops_null_symbols() {
        let rho = DistortionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let inst = ProblemInstance::new(rho, pv(&[0.4, 0.0, 0.6]), 0.1, 0.2).unwrap();
        let (reduced, kept) = inst.restrict_to_support();
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(reduced.nominal.as_slice(), &[0.4, 0.6]);
        assert_eq!(reduced.rho.row(1), &[0.5, 0.5]);
    }

    fn arb_pmf(n: usize) -> impl Strategy<Value = ProbVector> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|w| ProbVector::from_weights(w).unwrap())
    }

    fn arb_kernel(m: usize, n: usize) -> impl Strategy<Value = Kernel> {
        prop::collection::vec(arb_pmf(n), m)
            .prop_map(|rows| Kernel::new(rows.into_iter().map(|r| r.into_vec()).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn kl_nonnegative_and_zero_on_diagonal(p in arb_pmf(4), q in arb_pmf(4)) {
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
            if p.max_abs_diff(&q) > 1e-3 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn induced_output_is_normalized(mu in arb_pmf(3), q in arb_kernel(3, 4)) {
            let nu = induced_output(&mu, &q).unwrap();
            prop_assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mutual_information_matches_joint_product_divergence(mu in arb_pmf(3), q in arb_kernel(3, 3)) {
            // Explicit joint μ⊗q against product μ×ν, flattened.
            let nu = induced_output(&mu, &q).unwrap();
            let mut joint = Vec::new();
            let mut product = Vec::new();
            for x in 0..3 {
                for y in 0..3 {
                    joint.push(mu[x] * q.get(x, y));
                    product.push(mu[x] * nu[y]);
                }
            }
            let kl = kl_slices(&joint, &product);
            let mi = mutual_information(&mu, &q).unwrap();
            prop_assert!((kl - mi).abs() < 1e-12);
            prop_assert!(mi >= 0.0);
        }

        #[test]
        fn mutual_information_vanishes_for_constant_rows(mu in arb_pmf(4), r in arb_pmf(3)) {
            let q = Kernel::constant(4, &r);
            prop_assert!(mutual_information(&mu, &q).unwrap().abs() < 1e-15);
        }
    }
}
