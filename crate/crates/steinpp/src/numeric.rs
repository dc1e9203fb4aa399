//! Small numerical helpers shared across modules: sample statistics,
//! log-log slope fits, Poisson pmf tables and adaptive quadrature.

use statrs::function::gamma::{gamma, ln_gamma};

/// Volume of the Euclidean unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample standard deviation (0 for fewer than two values).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    sample_sd(xs) / (xs.len() as f64).sqrt()
}

/// Pearson correlation of two equally long samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
///
/// All inputs must be strictly positive.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "slope fit needs at least two points");
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..lx.len() {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    num / den
}

/// ln of the Poisson pmf at `k`.
pub fn ln_poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)
}

/// Poisson pmf at `k`.
pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    ln_poisson_pmf(lambda, k).exp()
}

/// Poisson pmf table truncated where the remaining tail mass drops below
/// `tail_tol`. Returns the table and the actual tail mass left out.
///
/// The recursion is seeded at the mode in log space, so the table stays
/// accurate for large means where `e^{-lambda}` underflows.
pub fn poisson_pmf_table(lambda: f64, tail_tol: f64) -> (Vec<f64>, f64) {
    if lambda == 0.0 {
        return (vec![1.0], 0.0);
    }
    let mode = lambda.floor() as u64;
    let p_mode = poisson_pmf(lambda, mode);

    // Walk upward from the mode until the running total saturates.
    let mut upper = vec![p_mode];
    let mut above = p_mode;
    let mut k = mode;
    let mut p = p_mode;
    while (p > tail_tol * 1e-3 || k as f64 <= lambda) && k < mode + 10_000_000 {
        k += 1;
        p *= lambda / k as f64;
        upper.push(p);
        above += p;
    }
    // Walk downward to zero.
    let mut lower = Vec::with_capacity(mode as usize);
    let mut below = 0.0;
    p = p_mode;
    for j in (1..=mode).rev() {
        p *= j as f64 / lambda;
        lower.push(p);
        below += p;
    }
    lower.reverse();
    lower.extend(upper);
    let probs = lower;
    let cum = below + above;
    (probs, (1.0 - cum).max(0.0))
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Tensor-grid adaptive quadrature of `f` over `[-1, 1]^dim` (`dim <= 3`).
pub fn cube_quadrature(f: &dyn Fn(&[f64]) -> f64, dim: usize, tol: f64) -> f64 {
    assert!((1..=3).contains(&dim), "quadrature supports 1..=3 dims");
    match dim {
        1 => adaptive_simpson(&|x| f(&[x]), -1.0, 1.0, tol),
        2 => adaptive_simpson(
            &|x| adaptive_simpson(&|y| f(&[x, y]), -1.0, 1.0, tol / 4.0), // inner cut tighter
            -1.0,
            1.0,
            tol,
        ),
        3 => adaptive_simpson(
            &|x| {
                adaptive_simpson(
                    &|y| adaptive_simpson(&|z| f(&[x, y, z]), -1.0, 1.0, tol / 16.0),
                    -1.0,
                    1.0,
                    tol / 4.0,
                )
            },
            -1.0,
            1.0,
            tol,
        ),
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_pure_power_is_exact() {
        let xs = [2.0f64, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn poisson_table_sums_to_one() {
        let (probs, tail) = poisson_pmf_table(3.7, 1e-13);
        let total: f64 = probs.iter().sum();
        assert!(tail < 1e-13);
        assert!((total + tail - 1.0).abs() < 1e-12);
        assert!((probs[0] - (-3.7f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn poisson_table_survives_large_means() {
        // e^{-lambda} underflows here; the mode-seeded recursion must not.
        let (probs, tail) = poisson_pmf_table(800.0, 1e-13);
        let total: f64 = probs.iter().sum();
        assert!(tail < 1e-12);
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
        let mode = 800usize;
        assert!((probs[mode] - poisson_pmf(800.0, 800)).abs() < 1e-18);
        // Mean of the table sits at lambda.
        let mean_k: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean_k - 800.0).abs() < 1e-6, "mean {mean_k}");
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = adaptive_simpson(&|x| x * x * x + 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - (4.0 + 4.0 + 2.0)).abs() < 1e-10);
    }

    #[test]
    fn cube_quadrature_matches_product_integral() {
        // int_{[-1,1]^2} x^2 y^2 = (2/3)^2
        let v = cube_quadrature(&|p| p[0] * p[0] * p[1] * p[1], 2, 1e-9);
        assert!((v - 4.0 / 9.0).abs() < 1e-7);
    }
}
