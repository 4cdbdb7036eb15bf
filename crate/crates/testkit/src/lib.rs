//! Reference oracles for the test suites.
//!
//! Nothing in here shares code with `aoi-core`: the Gaussian tail, the
//! exponential integral and the annulus capacity integral are evaluated by
//! brute-force quadrature or plain series summation so they can be used to
//! check the production routines.

use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Adaptive composite Gauss-Legendre quadrature. A panel is accepted when a
/// 20-point and a 30-point rule agree to `rel_tol` of its own value, or to its
/// width share of `rel_tol` times a rough estimate of the whole integral.
/// `rel_tol` is floored at 1e-14, where the two rules stop agreeing further.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rel_tol = rel_tol.max(1e-14);
    let lo = gauss_legendre(20);
    let hi = gauss_legendre(30);
    let rough = adapt(&f, (a, b), (&lo, &hi), 1e-8, 1e-318, 24);
    let budget = (rel_tol * rough.abs() / (b - a).abs()).max(1e-321);
    adapt(&f, (a, b), (&lo, &hi), rel_tol, budget, 40)
}

type Rules<'a> = (&'a [(f64, f64)], &'a [(f64, f64)]);

fn adapt<F: Fn(f64) -> f64>(f: &F, (a, b): (f64, f64), (lo, hi): Rules, rel_tol: f64, abs_per_width: f64, max_depth: u32) -> f64 {
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((x0, x1, depth)) = stack.pop() {
        let coarse = panel(f, x0, x1, lo);
        let fine = panel(f, x0, x1, hi);
        let err = (fine - coarse).abs();
        if err <= rel_tol * fine.abs() || err <= abs_per_width * (x1 - x0).abs() || depth >= max_depth {
            total += fine;
        } else {
            let m = 0.5 * (x0 + x1);
            stack.push((x0, m, depth + 1));
            stack.push((m, x1, depth + 1));
        }
    }
    total
}

/// Upper tail of the standard normal by direct integration of the density.
pub fn gaussian_tail(x: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    if x >= 0.0 {
        // The density is below 1e-300 past x + 40 for every x >= 0.
        let mut acc = 0.0;
        let mut a = x;
        while a < x + 40.0 {
            acc += integrate(pdf, a, a + 1.0, 1e-15);
            a += 1.0;
        }
        acc
    } else {
        1.0 - gaussian_tail(-x)
    }
}

/// Exponential integral by quadrature.
///
/// x < 0: `Ei(x) = -E1(-x)` with `E1(z) = ∫_0^1 exp(-z/u)/u du`.
/// x > 0: `Ei(x) = γ + ln x + ∫_0^x (e^t - 1)/t dt`.
pub fn ei_quadrature(x: f64) -> f64 {
    assert!(x != 0.0);
    if x < 0.0 {
        let z = -x;
        // Integrand vanishes at u = 0; split so the steep region near 0 is resolved.
        let f = |u: f64| if u <= 0.0 { 0.0 } else { (-z / u).exp() / u };
        let mut acc = 0.0;
        let mut edges = vec![0.0];
        let mut e = 1.0;
        while e > 1e-4 {
            edges.push(e);
            e *= 0.5;
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in edges.windows(2) {
            acc += integrate(f, w[0], w[1], 1e-15);
        }
        -acc
    } else {
        let g = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
        let mut acc = 0.0;
        let mut a = 0.0;
        while a < x {
            let b = (a + 1.0).min(x);
            acc += integrate(g, a, b, 1e-15);
            a = b;
        }
        EULER_GAMMA + x.ln() + acc
    }
}

/// Exponential integral by raw power-series summation (compensated), valid
/// for moderate |x|.
pub fn ei_series(x: f64) -> f64 {
    assert!(x != 0.0);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut term = 1.0f64; // x^k / k!
    for k in 1..400 {
        term *= x / k as f64;
        let add = term / k as f64;
        let y = add - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if add.abs() < 1e-18 * sum.abs().max(1e-300) && k as f64 > x.abs() {
            break;
        }
    }
    EULER_GAMMA + x.abs().ln() + sum
}

/// `∫_{d1}^{d2} f(d) / (c0 - (η/2) log2 d) dd` with `f(d) = 2d / (d2² - d1²)`,
/// i.e. the mean of `1/C` over UEs uniformly spread on the annulus.
pub fn annulus_inverse_capacity(c0: f64, eta: f64, d1: f64, d2: f64) -> f64 {
    let area = d2 * d2 - d1 * d1;
    let f = |d: f64| 2.0 * d / area / (c0 - 0.5 * eta * d.log2());
    let pieces = 64;
    let h = (d2 - d1) / pieces as f64;
    (0..pieces)
        .map(|i| integrate(f, d1 + i as f64 * h, d1 + (i + 1) as f64 * h, 1e-14))
        .sum()
}

/// Relative difference, symmetric in its arguments.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
