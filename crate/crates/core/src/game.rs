//! Finite two-player zero-sum games with a strictly positive payoff matrix,
//! solved exactly by the simplex method.
//!
//! The column player picks a mixed strategy `ν` to maximize `min_x (Wν)_x`;
//! the row player picks `μ` to minimize `max_y (μᵀW)_y`. With `W > 0` the
//! value is positive and the game is the linear program
//! `max Σ w  s.t.  Wᵀ w ≤ 1, w ≥ 0`, whose dual variables give `ν`.

const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone)]
pub(crate) struct GameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
    /// `max_y (μᵀW)_y - min_x (Wν)_x` for the returned pair.
    pub gap: f64,
}

/// `payoff` is row-major `rows × cols`, all entries finite and positive.
pub(crate) fn solve(payoff: &[f64], rows: usize, cols: usize) -> GameSolution {
    debug_assert_eq!(payoff.len(), rows * cols);
    let scale = payoff.iter().copied().fold(0.0, f64::max);
    let width = rows + cols + 1;
    // Constraint y: Σ_x W(x,y)/scale w_x + slack_y = 1.
    let mut t = vec![0.0; (cols + 1) * width];
    for y in 0..cols {
        for x in 0..rows {
            t[y * width + x] = payoff[x * cols + y] / scale;
        }
        t[y * width + rows + y] = 1.0;
        t[y * width + width - 1] = 1.0;
    }
    for x in 0..rows {
        t[cols * width + x] = -1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + cols).collect();

    for _ in 0..MAX_PIVOTS {
        // Bland's rule: smallest entering index with negative reduced cost.
        let Some(enter) = (0..width - 1).find(|&j| t[cols * width + j] < -1e-13) else {
            break;
        };
        let col_max = (0..cols).map(|i| t[i * width + enter].abs()).fold(0.0, f64::max);
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..cols {
            let a = t[i * width + enter];
            if a > 1e-12 * col_max {
                let ratio = t[i * width + width - 1] / a;
                match leave {
                    Some((li, r)) if ratio > r || (ratio == r && basis[i] > basis[li]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            break;
        };
        let p = t[pivot_row * width + enter];
        for j in 0..width {
            t[pivot_row * width + j] /= p;
        }
        for i in 0..=cols {
            if i == pivot_row {
                continue;
            }
            let f = t[i * width + enter];
            if f != 0.0 {
                for j in 0..width {
                    t[i * width + j] -= f * t[pivot_row * width + j];
                }
            }
        }
        basis[pivot_row] = enter;
    }

    let mut w = vec![0.0; rows];
    for (i, &b) in basis.iter().enumerate() {
        if b < rows {
            w[b] = t[i * width + width - 1].max(0.0);
        }
    }
    let u: Vec<f64> = (0..cols).map(|y| t[cols * width + rows + y].max(0.0)).collect();
    let row_strategy = normalize(w);
    let col_strategy = normalize(u);

    let lower = (0..rows)
        .map(|x| (0..cols).map(|y| payoff[x * cols + y] * col_strategy[y]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = (0..cols)
        .map(|y| (0..rows).map(|x| payoff[x * cols + y] * row_strategy[x]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    GameSolution {
        value: 0.5 * (lower + upper),
        row_strategy,
        col_strategy,
        gap: upper - lower,
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_mixed() {
        // No saddle point: value (ad - bc) / (a + d - b - c).
        let (a, b, c, d) = (3.0, 1.0, 1.0, 2.0);
        let g = solve(&[a, b, c, d], 2, 2);
        assert_abs_diff_eq!(g.value, (a * d - b * c) / (a + d - b - c), epsilon = 1e-14);
        // Column player equalizes rows: 3ν0 + ν1 = ν0 + 2ν1.
        assert_abs_diff_eq!(g.col_strategy[0], 1.0 / 3.0, epsilon = 1e-14);
        // Row player equalizes columns: 3μ0 + μ1 = μ0 + 2μ1.
        assert_abs_diff_eq!(g.row_strategy[0], 1.0 / 3.0, epsilon = 1e-14);
        assert!(g.gap.abs() < 1e-14);
    }

    #[test]
    fn pure_saddle() {
        // Column 0 dominates column 1 for the maximizer.
        let g = solve(&[2.0, 1.0, 3.0, 0.5], 2, 2);
        assert_abs_diff_eq!(g.value, 2.0, epsilon = 1e-14);
        assert_eq!(g.col_strategy, vec![1.0, 0.0]);
        assert_eq!(g.row_strategy, vec![1.0, 0.0]);
    }

    /// Value by brute force over a fine grid of column strategies (3 columns).
    fn grid_value(w: &[f64], rows: usize) -> f64 {
        let k = 600;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=k {
            for j in 0..=k - i {
                let nu = [i as f64 / k as f64, j as f64 / k as f64, (k - i - j) as f64 / k as f64];
                let v = (0..rows)
                    .map(|x| (0..3).map(|y| w[x * 3 + y] * nu[y]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                best = best.max(v);
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn matches_grid_and_closes_gap(w in prop::collection::vec(0.05f64..1.0, 9)) {
            let g = solve(&w, 3, 3);
            prop_assert!(g.gap.abs() < 1e-12);
            let grid = grid_value(&w, 3);
            prop_assert!(grid <= g.value + 1e-12);
            prop_assert!(g.value - grid < 5e-3);
        }
    }
}
