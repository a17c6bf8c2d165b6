//! Shared test oracles, independent of the solver paths they check.

use scenario_opt::lp::{LinearProgram, Row, RowTag};
use scenario_opt::rng::SplitMix64;

/// Solves an n-by-n linear system by Gaussian elimination with partial
/// pivoting; `None` for (near-)singular systems.
pub fn solve_square(mut matrix: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| matrix[a][col].abs().total_cmp(&matrix[b][col].abs()))
            .unwrap();
        if matrix[pivot_row][col].abs() < 1e-9 {
            return None;
        }
        matrix.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = matrix[row][col] / matrix[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                matrix[row][k] -= factor * matrix[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    Some((0..n).map(|i| rhs[i] / matrix[i][i]).collect())
}

/// Vertex-enumeration LP oracle: tries every choice of `n` active rows,
/// keeps feasible intersections, and returns the best objective value with
/// its vertex. Exponential, but exact for the small instances tested.
pub fn vertex_oracle(objective: &[f64], rows: &[Row]) -> Option<(f64, Vec<f64>)> {
    let n = objective.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut active = vec![0usize; n];

    fn recurse(
        rows: &[Row],
        objective: &[f64],
        active: &mut Vec<usize>,
        depth: usize,
        start: usize,
        best: &mut Option<(f64, Vec<f64>)>,
    ) {
        let n = objective.len();
        if depth == n {
            let matrix: Vec<Vec<f64>> = active
                .iter()
                .map(|&i| rows[i].coefficients.clone())
                .collect();
            let rhs: Vec<f64> = active.iter().map(|&i| rows[i].bound).collect();
            if let Some(x) = solve_square(matrix, rhs) {
                let feasible = rows.iter().all(|row| {
                    row.coefficients
                        .iter()
                        .zip(&x)
                        .map(|(a, v)| a * v)
                        .sum::<f64>()
                        <= row.bound + 1e-7
                });
                if feasible {
                    let value = objective
                        .iter()
                        .zip(&x)
                        .map(|(c, v)| c * v)
                        .sum::<f64>();
                    let better = best
                        .as_ref()
                        .map(|(current, _)| value < *current)
                        .unwrap_or(true);
                    if better {
                        *best = Some((value, x));
                    }
                }
            }
            return;
        }
        for i in start..rows.len() {
            active[depth] = i;
            recurse(rows, objective, active, depth + 1, i + 1, best);
        }
    }

    recurse(rows, objective, &mut active, 0, 0, &mut best);
    best
}

/// Random bounded-feasible LP: a box plus affine rows that are slack at an
/// interior point, so the program is feasible, compact, and generic.
pub fn random_bounded_lp(rng: &mut SplitMix64) -> LinearProgram {
    let n = 1 + rng.next_index(4);
    let extra_rows = rng.next_index(9);

    let mut rows = Vec::new();
    let mut interior = Vec::with_capacity(n);
    for coordinate in 0..n {
        let lo = -1.0 - rng.next_f64();
        let hi = 1.0 + rng.next_f64();
        let mut upper = vec![0.0; n];
        upper[coordinate] = 1.0;
        rows.push(Row::new(
            upper,
            hi,
            RowTag::Bound {
                coordinate,
                upper: true,
            },
        ));
        let mut lower = vec![0.0; n];
        lower[coordinate] = -1.0;
        rows.push(Row::new(
            lower,
            -lo,
            RowTag::Bound {
                coordinate,
                upper: false,
            },
        ));
        interior.push(rng.next_range(lo + 0.1, hi - 0.1));
    }

    for index in 0..extra_rows {
        let mut normal: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        if normal.iter().all(|a| a.abs() < 0.1) {
            normal[0] = 0.5;
        }
        let slack = rng.next_range(0.05, 1.05);
        let bound = normal
            .iter()
            .zip(&interior)
            .map(|(a, x)| a * x)
            .sum::<f64>()
            + slack;
        rows.push(Row::new(normal, bound, RowTag::Domain(index)));
    }

    let objective: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
    LinearProgram { objective, rows }
}

/// Discretized robust value of the benchmark: restricting to the diagonal is
/// exact because the feasible polygon and the objective are symmetric under
/// coordinate swap, so `J = -2 * min(1, (1 + gamma) / max_j (cos d_j + sin d_j))`.
pub fn example1_rcp_grid_oracle(gamma: f64, grid: usize) -> f64 {
    let mut sharpest = f64::NEG_INFINITY;
    for j in 0..grid {
        let d = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
        sharpest = sharpest.max(d.cos() + d.sin());
    }
    -2.0 * 1.0_f64.min((1.0 + gamma) / sharpest)
}

/// Discretized chance-constrained value of the benchmark: bisection for the
/// largest diagonal point whose grid-violation stays within `eps`.
pub fn example1_ccp_grid_oracle(eps: f64, grid: usize) -> f64 {
    let cuts: Vec<f64> = (0..grid)
        .map(|j| {
            let d = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
            d.cos() + d.sin()
        })
        .collect();
    let violation = |t: f64| cuts.iter().filter(|&&c| t * c > 1.0).count() as f64 / grid as f64;

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if violation(1.0) <= eps {
        return -2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if violation(mid) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    -2.0 * lo
}
