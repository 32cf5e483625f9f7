//! Test-only oracles, independent of the library's closed forms.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

/// Tanh–sinh quadrature of `f` over `[a, b]`. The integrand receives
/// `(x, x − a, b − x)` with both distances computed without cancellation, so
/// endpoint singularities can be evaluated accurately.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        let e = (-2.0 * u.abs()).exp();
        let near = r * 2.0 * e / (1.0 + e); // distance to the nearer endpoint
        if near <= 0.0 {
            return 0.0;
        }
        let far = 2.0 * r - near;
        let (x, dl, dr) = if u >= 0.0 { (b - near, far, near) } else { (a + near, near, far) };
        let _ = c;
        r * w * f(x, dl, dr)
    };
    let tmax = 6.5;
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += node(k as f64 * h) + node(-(k as f64) * h);
        k += 1;
    }
    let mut est = h * sum;
    for _ in 0..12 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= tmax {
            add += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        sum += add;
        let next = h * sum;
        if (next - est).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        est = next;
    }
    est
}

/// `H(2H−1) d^{2H−2}`
pub fn phi_of_distance(d: f64, h: f64) -> f64 {
    h * (2.0 * h - 1.0) * d.powf(2.0 * h - 2.0)
}

/// `∫_c^d φ(s, v) dv` by quadrature, split at `s`.
pub fn inner_integral(s: f64, c: f64, d: f64, h: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    // part below s: distance s − v
    let hi = d.min(s);
    if hi > c {
        let gap = s - hi;
        total += tanh_sinh(|_, _, dr| phi_of_distance(gap + dr, h), c, hi, tol);
    }
    let lo = c.max(s);
    if d > lo {
        let gap = lo - s;
        total += tanh_sinh(|_, dl, _| phi_of_distance(gap + dl, h), lo, d, tol);
    }
    total
}

/// `∫_a^b ∫_c^d φ(s, v) dv ds` by nested quadrature, the outer range split at
/// `c` and `d`.
pub fn rect_quadrature(a: f64, b: f64, c: f64, d: f64, h: f64) -> f64 {
    let tol = 1e-11;
    let mut cuts = vec![a, b];
    for p in [c, d] {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.windows(2)
        .map(|w| tanh_sinh(|s, _, _| inner_integral(s, c, d, h, tol), w[0], w[1], tol))
        .sum()
}

/// `½(t^{2H} + s^{2H} − |t − s|^{2H})`, written out independently.
pub fn fbm_cov(s: f64, t: f64, h: f64) -> f64 {
    0.5 * (t.powf(2.0 * h) + s.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
