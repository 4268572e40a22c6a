//! Small quadrature and interpolation kernels shared across the crate.

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Composite Simpson over sampled data on a (possibly non-uniform) grid.
/// Consecutive interval pairs use the unequal-spacing three-point rule;
/// a leftover final interval falls back to the trapezoid rule.
pub(crate) fn simpson_sampled(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let k = x.len();
    if k < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 < k {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * y[i] + hs * hs / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i + 1 < k {
        total += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    total
}

/// Per-interval Simpson with midpoint evaluation, for evaluable integrands.
pub(crate) fn simpson_eval(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        total += simpson_rule(a, b, f(a), f(0.5 * (a + b)), f(b));
    }
    total
}

/// Cubic Hermite value and derivative on `[x0, x1]` from endpoint data.
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let deriv = dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
    (value, deriv)
}

/// Two-point quintic Hermite value and derivative on `[x0, x1]` from
/// endpoint values, slopes and curvatures. Exact through degree five.
#[allow(clippy::too_many_arguments)]
pub(crate) fn hermite5(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
    c0: f64,
    c1: f64,
    x: f64,
) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let phi0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let phi1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let phi2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let psi0 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let psi1 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let psi2 = 0.5 * (t3 - 2.0 * t4 + t5);
    let value = y0 * phi0
        + h * d0 * phi1
        + h * h * c0 * phi2
        + y1 * psi0
        + h * d1 * psi1
        + h * h * c1 * psi2;
    let dphi0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let dphi1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let dphi2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let dpsi0 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let dpsi1 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let dpsi2 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let deriv = (y0 * dphi0
        + h * d0 * dphi1
        + h * h * c0 * dphi2
        + y1 * dpsi0
        + h * d1 * dpsi1
        + h * h * c1 * dpsi2)
        / h;
    (value, deriv)
}

/// `∫_R^∞ r^k e^{-a r} dr` for integer `k ≥ 0`, `a > 0`.
pub(crate) fn exp_tail_integral(k: u32, a: f64, big_r: f64) -> f64 {
    // e^{-aR} Σ_{j=0..k} (k!/j!) R^j / a^{k-j+1}
    let mut sum = 0.0;
    let mut fact_ratio = 1.0; // k!/j! built downward from j = k
    for j in (0..=k).rev() {
        sum += fact_ratio * big_r.powi(j as i32) / a.powi((k - j + 1) as i32);
        fact_ratio *= j as f64;
    }
    (-a * big_r).exp() * sum
}

/// Weighted least-squares line fit `y ≈ intercept + slope·x`.
pub(crate) fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_simpson_matches_closed_forms() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| 1.0 + x * x, 0.0, 1.0, 1e-12);
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_simpson_is_exact_on_cubics() {
        let x: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&t| t * t * t - 2.0 * t).collect();
        let v = simpson_sampled(&x, &y);
        assert!((v - (0.25 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn exp_tail_integral_matches_quadrature() {
        // ∫_2^∞ r² e^{-3r} dr against adaptive quadrature on a long window
        let exact = exp_tail_integral(2, 3.0, 2.0);
        let num = adaptive_simpson(&|r: f64| r * r * (-3.0 * r).exp(), 2.0, 30.0, 1e-14);
        assert!((exact - num).abs() < 1e-12);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let f = |x: f64| 1.0 + x - x * x + 0.5 * x * x * x;
        let d = |x: f64| 1.0 - 2.0 * x + 1.5 * x * x;
        let (v, dv) = hermite(1.0, 2.0, f(1.0), f(2.0), d(1.0), d(2.0), 1.3);
        assert!((v - f(1.3)).abs() < 1e-14);
        assert!((dv - d(1.3)).abs() < 1e-13);
    }

    #[test]
    fn hermite5_reproduces_quintic() {
        let f = |x: f64| 2.0 - x + 0.5 * x * x + x * x * x - 0.25 * x * x * x * x
            + 0.1 * x * x * x * x * x;
        let d = |x: f64| -1.0 + x + 3.0 * x * x - x * x * x + 0.5 * x * x * x * x;
        let c = |x: f64| 1.0 + 6.0 * x - 3.0 * x * x + 2.0 * x * x * x;
        let (x0, x1) = (0.5, 1.7);
        for i in 0..=10 {
            let x = x0 + (x1 - x0) * i as f64 / 10.0;
            let (v, dv) = hermite5(x0, x1, f(x0), f(x1), d(x0), d(x1), c(x0), c(x1), x);
            assert!((v - f(x)).abs() < 1e-13, "x={x}: {v} vs {}", f(x));
            assert!((dv - d(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|t| 2.5 - 1.25 * t).collect();
        let w = [1.0, 0.5, 2.0, 1.0];
        let (b, a) = weighted_line_fit(&x, &y, &w);
        assert!((b - 2.5).abs() < 1e-13);
        assert!((a + 1.25).abs() < 1e-13);
    }
}
