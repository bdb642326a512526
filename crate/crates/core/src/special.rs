//! Riemann zeta, its tails, Bernoulli polynomials and the one-dimensional
//! periodic series `S_alpha(x) = sum_{h>=1} cos(2 pi h x) / h^(2 alpha)`.

use std::f64::consts::PI;

/// B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Below this cut-off the tail is summed directly before switching to
/// Euler-Maclaurin.
const EM_START: u64 = 16;

/// `sum_{k > terms} k^(-s)` for `s > 1`.
pub fn zeta_tail(s: f64, terms: u64) -> f64 {
    assert!(s > 1.0, "zeta_tail requires s > 1, got {s}");
    let mut head = 0.0;
    let mut start = terms + 1;
    if start < EM_START {
        // summed from the largest term down
        for k in (start..EM_START).rev() {
            head += (k as f64).powf(-s);
        }
        start = EM_START;
    }
    head + euler_maclaurin_tail(s, start as f64)
}

/// `sum_{k >= big_n} k^(-s)` via Euler-Maclaurin with ten correction terms.
fn euler_maclaurin_tail(s: f64, big_n: f64) -> f64 {
    let mut total = big_n.powf(1.0 - s) / (s - 1.0) + 0.5 * big_n.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) / (2j)!
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = big_n.powf(-s - 1.0);
    let inv_n2 = 1.0 / (big_n * big_n);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / factorial * rising * power;
        total += term;
        if term.abs() < 1e-18 * total.abs() {
            break;
        }
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        factorial *= (m + 1.0) * (m + 2.0);
        power *= inv_n2;
    }
    total
}

/// Riemann zeta function for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    if s == 2.0 {
        return PI * PI / 6.0;
    }
    if s == 4.0 {
        return PI.powi(4) / 90.0;
    }
    if s == 6.0 {
        return PI.powi(6) / 945.0;
    }
    1.0 + zeta_tail(s, 1)
}

/// `sum_{k=1}^{terms} k^(-s)`.
pub fn zeta_partial(s: f64, terms: u64) -> f64 {
    if terms <= 1024 {
        (1..=terms).rev().map(|k| (k as f64).powf(-s)).sum()
    } else {
        zeta(s) - zeta_tail(s, terms)
    }
}

pub fn bernoulli_1(x: f64) -> f64 {
    x - 0.5
}

pub fn bernoulli_2(x: f64) -> f64 {
    x * x - x + 1.0 / 6.0
}

pub fn bernoulli_4(x: f64) -> f64 {
    let x2 = x * x;
    x2 * (x2 - 2.0 * x + 1.0) - 1.0 / 30.0
}

pub fn bernoulli_6(x: f64) -> f64 {
    let x2 = x * x;
    x2 * (x2 * (x2 - 3.0 * x + 2.5) - 0.5) + 1.0 / 42.0
}

/// Returns `Some(a)` when `alpha` is one of the integers with a hard-coded
/// Bernoulli closed form.
pub fn closed_form_order(alpha: f64) -> Option<u32> {
    [1u32, 2, 3].into_iter().find(|&a| alpha == a as f64)
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Closed form of `S_alpha(x)` for integer `alpha` in {1, 2, 3}:
/// `(-1)^(alpha+1) (2 pi)^(2 alpha) / (2 (2 alpha)!) B_(2 alpha)({x})`.
#[inline]
pub fn periodic_series_closed(order: u32, x: f64) -> f64 {
    let t = frac(x);
    match order {
        1 => PI * PI * bernoulli_2(t),
        2 => -PI.powi(4) / 3.0 * bernoulli_4(t),
        3 => 2.0 * PI.powi(6) / 45.0 * bernoulli_6(t),
        _ => unreachable!("no closed form for order {order}"),
    }
}

/// Truncated `sum_{h=1}^{terms} cos(2 pi h x) / h^(2 alpha)`, summed from the
/// smallest term up.
pub fn periodic_series_truncated(alpha: f64, x: f64, terms: u64) -> f64 {
    let t = frac(x);
    let two_alpha = 2.0 * alpha;
    let mut acc = 0.0;
    for h in (1..=terms).rev() {
        let hf = h as f64;
        // reduce h t mod 1 before taking the cosine
        let phase = frac(hf * t);
        acc += (2.0 * PI * phase).cos() / hf.powf(two_alpha);
    }
    acc
}

/// Neumaier-compensated sum; squared errors are small differences of
/// averages near one, so plain accumulation would swamp them.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
