//! Random block codes drawn from a reproduction distribution, and Monte-Carlo
//! audits of robust achievability and the converse.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), seeded explicitly. The
//! codebook uses stream 0 of the seed; source `i` of a simulation uses stream
//! `i + 1`, so reports do not depend on thread scheduling.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::classical_rd;
use crate::error::{Error, Result};
use crate::oracle::sample_ball;
use crate::prob::{DistortionMatrix, ProbVector, ProblemInstance};
use crate::robust::RobustSolution;

/// Default upper bound on the number of codewords.
pub const DEFAULT_WORD_CAP: usize = 1 << 20;

/// Fixed-length block code over the reproduction alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    symbols: Vec<u32>,
    block_len: usize,
    /// Nominal rate in nats per symbol.
    pub rate: f64,
}

impl Codebook {
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn len(&self) -> usize {
        self.symbols.len() / self.block_len
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn word(&self, index: usize) -> &[u32] {
        &self.symbols[index * self.block_len..(index + 1) * self.block_len]
    }

    /// The first `count` words, as a codebook of its own.
    pub fn prefix(&self, count: usize) -> Codebook {
        let count = count.clamp(1, self.len());
        Codebook {
            symbols: self.symbols[..count * self.block_len].to_vec(),
            block_len: self.block_len,
            rate: (count as f64).ln() / self.block_len as f64,
        }
    }
}

/// `⌈e^{n·rate}⌉`, snapping to an integer when the exponential lands within
/// floating-point noise of one (so `rate = ln k / n` gives exactly `k` words).
pub fn word_count(block_len: usize, rate: f64) -> f64 {
    let raw = (block_len as f64 * rate).exp();
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0)
    } else {
        raw.ceil().max(1.0)
    }
}

/// Draws `⌈e^{n·rate}⌉` words with i.i.d. symbols from `output`.
///
/// Words are generated in order from one stream, so the codebook for a lower
/// rate under the same seed is a prefix of the one for a higher rate.
pub fn generate_codebook(output: &ProbVector, block_len: usize, rate: f64, seed: u64) -> Result<Codebook> {
    generate_codebook_capped(output, block_len, rate, seed, DEFAULT_WORD_CAP)
}

pub fn generate_codebook_capped(
    output: &ProbVector,
    block_len: usize,
    rate: f64,
    seed: u64,
    cap: usize,
) -> Result<Codebook> {
    if block_len == 0 {
        return Err(Error::InvalidParameter("block length must be at least 1".into()));
    }
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "rate must be finite and nonnegative, got {rate}"
        )));
    }
    let words = word_count(block_len, rate);
    if words > cap as f64 {
        return Err(Error::RateTooLargeForMemory { words, cap });
    }
    let words = words as usize;
    let symbols = symbol_sampler(output)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..words * block_len)
        .map(|_| symbols.sample(&mut rng) as u32)
        .collect();
    Ok(Codebook {
        symbols,
        block_len,
        rate,
    })
}

fn symbol_sampler(dist: &ProbVector) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(dist.as_slice()).map_err(|e| Error::InvalidParameter(format!("cannot sample distribution: {e}")))
}

/// Nearest codeword under average per-letter distortion; ties go to the
/// smallest index. Returns `(index, distortion)`.
pub fn encode_block(block: &[usize], codebook: &Codebook, rho: &DistortionMatrix) -> Result<(usize, f64)> {
    if block.len() != codebook.block_len {
        return Err(Error::DimensionMismatch {
            expected: codebook.block_len,
            found: block.len(),
        });
    }
    if let Some(&x) = block.iter().find(|&&x| x >= rho.rows()) {
        return Err(Error::DimensionMismatch {
            expected: rho.rows(),
            found: x + 1,
        });
    }
    if let Some(&y) = codebook.symbols.iter().find(|&&y| y as usize >= rho.cols()) {
        return Err(Error::DimensionMismatch {
            expected: rho.cols(),
            found: y as usize + 1,
        });
    }
    let (index, total) = nearest(block, codebook, rho);
    Ok((index, total / codebook.block_len as f64))
}

/// Unchecked search returning the total (not averaged) distortion.
fn nearest(block: &[usize], codebook: &Codebook, rho: &DistortionMatrix) -> (usize, f64) {
    let rows: Vec<&[f64]> = block.iter().map(|&x| rho.row(x)).collect();
    let mut best = (0, f64::INFINITY);
    for (index, word) in codebook.symbols.chunks_exact(codebook.block_len).enumerate() {
        let mut total = 0.0;
        for (row, &y) in rows.iter().zip(word) {
            total += row[y as usize];
            if total >= best.1 {
                break;
            }
        }
        if total < best.1 {
            best = (index, total);
        }
    }
    best
}

/// Parameters of [`simulate_admissibility`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub block_len: usize,
    /// Added to the robust rate to set the codebook rate; may be negative as
    /// long as the sum stays nonnegative.
    pub rate_margin: f64,
    /// Blocks encoded per source.
    pub trials: usize,
    /// Number of sources, counting the worst-case and nominal ones.
    pub source_samples: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            block_len: 12,
            rate_margin: 0.1,
            trials: 2000,
            source_samples: 50,
            epsilon: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceStats {
    pub source: ProbVector,
    pub mean_distortion: f64,
    pub std_err: f64,
    /// Fraction of blocks with distortion above `D + ε`.
    pub exceed_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub per_source: Vec<SourceStats>,
    pub worst_mean: f64,
    pub trials: usize,
    pub seed: u64,
    pub block_len: usize,
    pub codebook_rate: f64,
    pub codebook_size: usize,
    pub budget: f64,
    pub epsilon: f64,
}

impl SimReport {
    /// Every source's mean distortion is within `D + ε`.
    pub fn admissible(&self) -> bool {
        self.worst_mean <= self.budget + self.epsilon
    }
}

/// Encodes i.i.d. blocks from many sources of the ball with one codebook
/// drawn from the solution's output distribution at rate `R* + margin`.
///
/// Source 0 is the worst-case source and source 1 the nominal one; the rest
/// come from [`sample_ball`].
pub fn simulate_admissibility(
    instance: &ProblemInstance,
    solution: &RobustSolution,
    config: &SimConfig,
) -> Result<SimReport> {
    if !solution.converged {
        return Err(Error::InvalidParameter("solution did not converge".into()));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let rate = (solution.rate + config.rate_margin).max(0.0);
    if solution.rate + config.rate_margin < -1e-12 {
        return Err(Error::InvalidParameter(format!(
            "rate margin {} drives the codebook rate below zero",
            config.rate_margin
        )));
    }
    let codebook = generate_codebook(&solution.output, config.block_len, rate, config.seed)?;
    if let Some(y) = codebook.symbols.iter().find(|&&y| y as usize >= instance.repro_size()) {
        return Err(Error::DimensionMismatch {
            expected: instance.repro_size(),
            found: *y as usize + 1,
        });
    }

    let mut sources = vec![solution.worst_source.clone()];
    sources.extend(sample_ball(
        &instance.nominal,
        instance.radius,
        config.source_samples.saturating_sub(1),
        config.seed,
    )?);

    let threshold = instance.budget + config.epsilon;
    let n = config.block_len as f64;
    let per_source = sources
        .into_par_iter()
        .enumerate()
        .map(|(i, source)| -> Result<SourceStats> {
            let sampler = symbol_sampler(&source)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            let mut block = vec![0usize; config.block_len];
            let (mut sum, mut sum_sq, mut exceed) = (0.0, 0.0, 0usize);
            for _ in 0..config.trials {
                block.iter_mut().for_each(|x| *x = sampler.sample(&mut rng));
                let d = nearest(&block, &codebook, &instance.rho).1 / n;
                sum += d;
                sum_sq += d * d;
                exceed += usize::from(d > threshold);
            }
            let t = config.trials as f64;
            let mean = sum / t;
            let var = if config.trials > 1 {
                ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0)
            } else {
                0.0
            };
            Ok(SourceStats {
                source,
                mean_distortion: mean,
                std_err: (var / t).sqrt(),
                exceed_frac: exceed as f64 / t,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let worst_mean = per_source
        .iter()
        .map(|s| s.mean_distortion)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SimReport {
        per_source,
        worst_mean,
        trials: config.trials,
        seed: config.seed,
        block_len: config.block_len,
        codebook_rate: rate,
        codebook_size: codebook.len(),
        budget: instance.budget,
        epsilon: config.epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseViolation {
    pub sample: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub samples: usize,
    pub seed: u64,
    pub robust_rate: f64,
    /// Largest classical rate over the sampled sources.
    pub supremum: f64,
    pub argmax: usize,
    /// Classical rate at the worst-case source (sample 0).
    pub at_worst_source: f64,
    pub tol: f64,
    pub violations: Vec<ConverseViolation>,
}

impl ConverseReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// `robust_rate - supremum`; near zero when the supremum is attained.
    pub fn gap(&self) -> f64 {
        self.robust_rate - self.supremum
    }
}

/// Checks `R_{μ'}(D) ≤ R* + tol` for sources in the ball. Sample 0 is the
/// worst-case source, where the bound should be attained.
pub fn converse_audit(
    instance: &ProblemInstance,
    solution: &RobustSolution,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ConverseReport> {
    if !solution.converged {
        return Err(Error::InvalidParameter("solution did not converge".into()));
    }
    let mut sources = vec![solution.worst_source.clone()];
    sources.extend(sample_ball(
        &instance.nominal,
        instance.radius,
        samples.saturating_sub(1),
        seed,
    )?);
    let rates = sources
        .par_iter()
        .map(|src| classical_rd(src, &instance.rho, instance.budget, 1e-11).map(|c| c.rate))
        .collect::<Result<Vec<_>>>()?;
    let (argmax, supremum) =
        rates.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, r)| if r > best.1 { (i, r) } else { best },
        );
    let violations = rates
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r > solution.rate + tol)
        .map(|(sample, &rate)| ConverseViolation { sample, rate })
        .collect();
    Ok(ConverseReport {
        samples: sources.len(),
        seed,
        robust_rate: solution.rate,
        supremum,
        argmax,
        at_worst_source: rates[0],
        tol,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::{maxmin_solve, RobustOptions};
    use proptest::prelude::*;

    fn binary_example() -> (ProblemInstance, RobustSolution) {
        let inst = ProblemInstance::new(
            DistortionMatrix::hamming(2),
            ProbVector::bernoulli(0.2).unwrap(),
            0.02,
            0.1,
        )
        .unwrap();
        let sol = maxmin_solve(&inst, &RobustOptions::default()).unwrap();
        (inst, sol)
    }

    #[test]
    fn word_counts() {
        assert_eq!(word_count(10, 0.4), 55.0);
        assert_eq!(word_count(7, 0.0), 1.0);
        assert_eq!(word_count(3, 5f64.ln() / 3.0), 5.0);
        // Just above an integer by more than the snapping tolerance.
        assert_eq!(word_count(1, (5.0f64 + 1e-6).ln()), 6.0);
    }

    #[test]
    fn codebook_shapes() {
        let nu = ProbVector::new(vec![0.3, 0.7]).unwrap();
        let single = generate_codebook(&nu, 8, 0.0, 1).unwrap();
        assert_eq!(single.len(), 1);
        let cb = generate_codebook(&nu, 10, 0.4, 1).unwrap();
        assert_eq!(cb.len(), 55);
        assert_eq!(cb.word(3).len(), 10);
        let degenerate = generate_codebook(&ProbVector::point_mass(2, 0), 6, 0.5, 9).unwrap();
        assert!(degenerate.symbols.iter().all(|&y| y == 0));
        assert_eq!(generate_codebook(&nu, 10, 0.4, 1).unwrap(), cb);
    }

    #[test]
    fn codebook_errors() {
        let nu = ProbVector::uniform(2);
        assert!(matches!(
            generate_codebook(&nu, 30, 1.0, 0),
            Err(Error::RateTooLargeForMemory { .. })
        ));
        assert!(generate_codebook_capped(&nu, 4, 1.0, 0, 54).is_err());
        assert_eq!(generate_codebook_capped(&nu, 4, 1.0, 0, 55).unwrap().len(), 55);
        assert!(generate_codebook(&nu, 0, 0.1, 0).is_err());
        assert!(generate_codebook(&nu, 4, -0.1, 0).is_err());
    }

    #[test]
    fn prefix_property() {
        let nu = ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let small = generate_codebook(&nu, 5, 0.5, 42).unwrap();
        let large = generate_codebook(&nu, 5, 0.9, 42).unwrap();
        assert!(large.len() > small.len());
        assert_eq!(large.prefix(small.len()).symbols, small.symbols);
    }

    #[test]
    fn encode_hand_checked() {
        let rho = DistortionMatrix::hamming(2);
        let cb = Codebook {
            symbols: vec![0, 1, 1, 0, 1, 1, 0, 0, 0, 0, 1, 1],
            block_len: 4,
            rate: 3f64.ln() / 4.0,
        };
        // Block 1,1,0,1 against 0110, 1100, 0011: 3, 1 and 3 mismatches.
        assert_eq!(encode_block(&[1, 1, 0, 1], &cb, &rho).unwrap(), (1, 0.25));
        assert_eq!(encode_block(&[0, 1, 1, 0], &cb, &rho).unwrap(), (0, 0.0));
        // 0,0,0,0 is two away from every word: first index wins.
        assert_eq!(encode_block(&[0, 0, 0, 0], &cb, &rho).unwrap(), (0, 0.5));
        let single = cb.prefix(1);
        assert_eq!(encode_block(&[1, 0, 0, 1], &single, &rho).unwrap(), (0, 1.0));
        assert!(matches!(
            encode_block(&[0, 1], &cb, &rho),
            Err(Error::DimensionMismatch { expected: 4, found: 2 })
        ));
        assert!(encode_block(&[0, 1, 2, 0], &cb, &rho).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn encoding_is_optimal(
            seed in any::<u64>(),
            rate in 0.0f64..1.0,
            block in prop::collection::vec(0usize..3, 4),
            costs in prop::collection::vec(0.0f64..2.0, 9),
        ) {
            let rho = DistortionMatrix::new(costs.chunks(3).map(<[f64]>::to_vec).collect()).unwrap();
            let nu = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
            let cb = generate_codebook(&nu, 4, rate, seed).unwrap();
            let (index, best) = encode_block(&block, &cb, &rho).unwrap();
            for i in 0..cb.len() {
                let d: f64 = block.iter().zip(cb.word(i)).map(|(&x, &y)| rho.get(x, y as usize)).sum::<f64>() / 4.0;
                prop_assert!(best <= d + 1e-15);
                if i < index {
                    prop_assert!(d > best);
                }
            }
        }

        #[test]
        fn nested_codebooks_never_worsen(seed in any::<u64>(), block in prop::collection::vec(0usize..2, 6)) {
            let rho = DistortionMatrix::hamming(2);
            let cb = generate_codebook(&ProbVector::uniform(2), 6, 0.6, seed).unwrap();
            let mut last = f64::INFINITY;
            for k in 1..=cb.len() {
                let d = encode_block(&block, &cb.prefix(k), &rho).unwrap().1;
                prop_assert!(d <= last);
                last = d;
            }
        }
    }

    #[test]
    fn simulation_is_deterministic_and_includes_key_sources() {
        let (inst, sol) = binary_example();
        let cfg = SimConfig {
            trials: 200,
            source_samples: 6,
            seed: 7,
            ..SimConfig::default()
        };
        let a = simulate_admissibility(&inst, &sol, &cfg).unwrap();
        let b = simulate_admissibility(&inst, &sol, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_source.len(), 6);
        assert_eq!(a.per_source[0].source, sol.worst_source);
        assert_eq!(a.per_source[1].source, inst.nominal);
        let worst = a.per_source.iter().map(|s| s.mean_distortion).fold(0.0, f64::max);
        assert_eq!(a.worst_mean, worst);
        assert!(a.per_source.iter().all(|s| (0.0..=1.0).contains(&s.exceed_frac)));
        assert_eq!(a.codebook_size as f64, word_count(12, sol.rate + 0.1));
    }

    #[test]
    fn generous_rate_on_point_ball() {
        // Rate ln 2 covers every binary word of length 8: zero distortion.
        let (inst, _) = binary_example();
        let inst = inst.with_radius(0.0).unwrap();
        let sol = maxmin_solve(&inst, &RobustOptions::default()).unwrap();
        let cfg = SimConfig {
            block_len: 8,
            rate_margin: 2f64.ln() + 0.3,
            trials: 300,
            source_samples: 3,
            epsilon: 0.01,
            seed: 3,
        };
        let rep = simulate_admissibility(&inst, &sol, &cfg).unwrap();
        assert!(rep.admissible());
        assert!(rep.per_source.iter().all(|s| s.exceed_frac <= 0.05));
    }

    #[test]
    fn zero_rate_single_word() {
        let (inst, sol) = binary_example();
        let cfg = SimConfig {
            rate_margin: -sol.rate,
            trials: 4000,
            source_samples: 2,
            seed: 11,
            ..SimConfig::default()
        };
        let rep = simulate_admissibility(&inst, &sol, &cfg).unwrap();
        assert_eq!(rep.codebook_size, 1);
        // One word with k ones: expected Hamming distortion is
        // (k(1-p) + (n-k)p)/n for a Bernoulli(p) source.
        let word = generate_codebook(&sol.output, 12, 0.0, 11).unwrap();
        let ones = word.word(0).iter().filter(|&&y| y == 1).count() as f64;
        for s in &rep.per_source {
            let p = s.source.as_slice()[1];
            let expected = (ones * (1.0 - p) + (12.0 - ones) * p) / 12.0;
            assert!((s.mean_distortion - expected).abs() < 5.0 * s.std_err + 1e-12);
        }
        assert!(!rep.admissible());
        assert!(simulate_admissibility(
            &inst,
            &sol,
            &SimConfig {
                rate_margin: -sol.rate - 0.1,
                ..cfg
            }
        )
        .is_err());
    }

    #[test]
    fn converse_attained_at_worst_source() {
        let (inst, sol) = binary_example();
        let rep = converse_audit(&inst, &sol, 500, 1e-6, 5).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
        assert_eq!(rep.samples, 500);
        assert!((rep.at_worst_source - sol.rate).abs() < 1e-6);
        assert!(rep.gap().abs() < 1e-6);
        let nominal = classical_rd(&inst.nominal, &inst.rho, inst.budget, 1e-11).unwrap().rate;
        assert!(nominal <= sol.rate);
    }
}
