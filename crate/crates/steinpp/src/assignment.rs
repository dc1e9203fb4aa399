//! Exact solver for the square linear assignment problem.
//!
//! Shortest augmenting path with row/column potentials (the Jonker-Volgenant
//! scheme), O(n^3) worst case, real-valued costs. No scaling to integers:
//! the potentials stay exact up to floating-point rounding, which the metric
//! oracles in this crate require.

const NONE: usize = usize::MAX;

/// Minimizes the total cost of a perfect matching on an `n x n` cost matrix
/// given in row-major order. Returns the column assigned to each row and the
/// total cost. Costs must be finite.
pub fn solve_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n*n");
    assert!(cost.iter().all(|c| c.is_finite()), "costs must be finite");
    if n == 0 {
        return (Vec::new(), 0.0);
    }

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n + 1];
    // match_col[j] = row currently assigned to column j; index n is a virtual
    // column through which each new row enters.
    let mut match_col = vec![NONE; n + 1];

    for row in 0..n {
        match_col[n] = row;
        let mut j0 = n;
        let mut min_slack = vec![f64::INFINITY; n];
        let mut prev = vec![n; n];
        let mut used = vec![false; n + 1];

        // Dijkstra over columns on reduced costs.
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = n;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 * n + j] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    prev[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            debug_assert!(j1 != n, "some column must be reachable");
            for j in 0..=n {
                if used[j] {
                    if match_col[j] != NONE {
                        u[match_col[j]] += delta;
                    }
                    v[j] -= delta;
                } else if j < n {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == NONE {
                break;
            }
        }

        // Augment along the alternating path back to the virtual column.
        while j0 != n {
            let j1 = prev[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![NONE; n];
    for j in 0..n {
        row_to_col[match_col[j]] = j;
    }
    let total = (0..n).map(|i| cost[i * n + row_to_col[i]]).sum();
    (row_to_col, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn permute(rest: &mut Vec<usize>, chosen: &mut Vec<usize>, best: &mut f64, cost: &[f64], n: usize) {
            if rest.is_empty() {
                let total: f64 = chosen.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                if total < *best {
                    *best = total;
                }
                return;
            }
            for idx in 0..rest.len() {
                let j = rest.remove(idx);
                chosen.push(j);
                permute(rest, chosen, best, cost, n);
                chosen.pop();
                rest.insert(idx, j);
            }
        }
        let mut best = f64::INFINITY;
        permute(&mut (0..n).collect(), &mut Vec::new(), &mut best, cost, n);
        best
    }

    #[test]
    fn trivial_cases() {
        let (ass, total) = solve_assignment(&[], 0);
        assert!(ass.is_empty());
        assert_eq!(total, 0.0);

        let (ass, total) = solve_assignment(&[3.5], 1);
        assert_eq!(ass, vec![0]);
        assert_eq!(total, 3.5);
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = crate::rng::stream(42);
        for n in 1..=7 {
            for _ in 0..30 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let (ass, total) = solve_assignment(&cost, n);
                let mut seen = vec![false; n];
                for &j in &ass {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
                let best = brute_force(&cost, n);
                assert!(
                    (total - best).abs() < 1e-10,
                    "n={n}: solver {total} vs brute force {best}"
                );
            }
        }
    }

    #[test]
    fn handles_ties_and_duplicate_rows() {
        let cost = vec![1.0, 1.0, 1.0, 1.0];
        let (_, total) = solve_assignment(&cost, 2);
        assert_eq!(total, 2.0);
    }
}
