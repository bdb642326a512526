//! Squared worst-case errors of (tent-transformed, shifted) lattice rules.
//!
//! Two independent routes are provided for every quantity: the kernel
//! quadratic form over the point set, and the truncated sum over the dual
//! lattice with an attached bound on the omitted tail.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{lattice_points, tent, tented_lattice_points, DualScanner, GeneratingVector, PointSet, Shift};
use crate::spaces::{Kernel, KernelKind, KernelSpec, PeriodicSeries, SeriesMethod, SpaceParams, WeightSpec};
use crate::special::{compensated_sum, frac, zeta, zeta_tail};

/// Round-off below this magnitude is clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Largest dimension for which the `2^d` sign loop is run.
pub const MAX_SIGN_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WceMethod {
    KernelForm,
    DualSum,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WceReport {
    pub squared_error: f64,
    pub method: WceMethod,
    /// Bound on the error of `squared_error` caused by truncation; zero when exact.
    pub truncation_bound: f64,
    /// Set when a tiny negative value was clamped to zero.
    pub clamped: bool,
    pub n: u64,
    pub d: usize,
    pub alpha: f64,
    pub weights_spec: WeightSpec,
}

impl WceReport {
    fn new(value: f64, method: WceMethod, truncation_bound: f64, n: u64, params: &SpaceParams) -> Self {
        let (squared_error, clamped) = if (-CLAMP_TOLERANCE..0.0).contains(&value) {
            (0.0, true)
        } else {
            (value, false)
        };
        Self {
            squared_error,
            method,
            truncation_bound,
            clamped,
            n,
            d: params.dim(),
            alpha: params.alpha(),
            weights_spec: params.weight_spec().clone(),
        }
    }

    /// Root of the squared error.
    pub fn error(&self) -> f64 {
        self.squared_error.max(0.0).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn check_dims(params: &SpaceParams, d: usize) -> Result<()> {
    if params.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: d,
        });
    }
    Ok(())
}

/// `-1 + (1/n^2) sum_{i,i'} K(t_i, t_i')`: every kernel here integrates to
/// one in each argument.
pub fn wce_kernel_form(spec: &KernelSpec, ps: &PointSet) -> Result<WceReport> {
    check_dims(&spec.params, ps.dim())?;
    let kernel = Kernel::new(spec)?;
    let n = ps.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = ps.point(i);
            compensated_sum(ps.iter().map(|y| kernel.eval(x, y)))
        })
        .collect();
    let total = compensated_sum(rows);
    let value = -1.0 + total / (n as f64 * n as f64);
    Ok(WceReport::new(
        value,
        WceMethod::KernelForm,
        kernel.truncation_bound(),
        n as u64,
        &spec.params,
    ))
}

/// Default dual truncation box `max(32, 4n)`.
pub fn default_box(n: u64) -> u32 {
    (4 * n).clamp(32, u32::MAX as u64) as u32
}

/// `sum_{h outside the box} 1/r(h)`, which bounds every omitted dual term.
pub fn box_tail_bound(params: &SpaceParams, bound: u32) -> f64 {
    let z = zeta(2.0 * params.alpha());
    let tail = zeta_tail(2.0 * params.alpha(), bound as u64);
    let (full, inside) = params.gamma().iter().fold((1.0, 1.0), |(f, p), g| {
        (f * (1.0 + 2.0 * g * z), p * (1.0 + 2.0 * g * (z - tail)))
    });
    full - inside
}

/// Truncated `sum_{0 != h in dual} 1/r(h)` (Korobov space).
pub fn wce_korobov_dual(params: &SpaceParams, gen: &GeneratingVector, bound: Option<u32>) -> Result<WceReport> {
    check_dims(params, gen.dim())?;
    let bound = bound.unwrap_or_else(|| default_box(gen.n()));
    let tables = params.inverse_r_tables(bound as u64);
    let scanner = DualScanner::new(gen, bound);
    let total = scanner.sum(|h| {
        if h.iter().all(|&v| v == 0) {
            return 0.0;
        }
        inverse_r(&tables, h)
    });
    Ok(WceReport::new(
        total,
        WceMethod::DualSum,
        box_tail_bound(params, bound),
        gen.n(),
        params,
    ))
}

#[inline]
fn inverse_r(tables: &[Vec<f64>], h: &[i64]) -> f64 {
    tables
        .iter()
        .zip(h)
        .map(|(t, &v)| t[v.unsigned_abs() as usize])
        .product()
}

/// Fraction of the `2^d` sign patterns `sigma` with `sigma(k)` in the dual.
pub fn sign_factor(k: &[i64], gen: &GeneratingVector) -> f64 {
    let n = gen.n();
    let contrib: Vec<u64> = k
        .iter()
        .zip(gen.z())
        .filter(|(&kj, _)| kj != 0)
        .map(|(&kj, &zj)| ((kj as i128).rem_euclid(n as i128) as u128 * zj as u128 % n as u128) as u64)
        .collect();
    // flips of zero components do not change sigma(k)
    let patterns = 1u64 << contrib.len();
    let mut hits = 0u64;
    for mask in 0..patterns {
        let mut r = 0u64;
        for (j, &c) in contrib.iter().enumerate() {
            let c = if mask >> j & 1 == 1 { (n - c) % n } else { c };
            r = (r + c) % n;
        }
        if r == 0 {
            hits += 1;
        }
    }
    hits as f64 / patterns as f64
}

/// Truncated `sum_{0 != k in dual} (1/r(k)) * sign_factor(k)`, the squared
/// worst-case error of the tent-transformed rule in the cosine space.
pub fn wce_cosine_tented(params: &SpaceParams, gen: &GeneratingVector, bound: Option<u32>) -> Result<WceReport> {
    check_dims(params, gen.dim())?;
    if gen.dim() > MAX_SIGN_DIM {
        return Err(Error::Unsupported(format!(
            "sign-pattern sum limited to d <= {MAX_SIGN_DIM}, got d = {}",
            gen.dim()
        )));
    }
    let bound = bound.unwrap_or_else(|| default_box(gen.n()));
    let tables = params.inverse_r_tables(bound as u64);
    let scanner = DualScanner::new(gen, bound);
    let total = scanner.sum(|h| {
        if h.iter().all(|&v| v == 0) {
            return 0.0;
        }
        inverse_r(&tables, h) * sign_factor(h, gen)
    });
    Ok(WceReport::new(
        total,
        WceMethod::DualSum,
        box_tail_bound(params, bound),
        gen.n(),
        params,
    ))
}

/// `-1 + (1/n) sum_i prod_j (1 + 2 gamma_j S_alpha(i z_j / n))`, the Korobov
/// squared error evaluated in `O(n d)` from the group structure.
pub fn wce_korobov_lattice(params: &SpaceParams, gen: &GeneratingVector) -> Result<WceReport> {
    check_dims(params, gen.dim())?;
    let series = PeriodicSeries::new(
        params.alpha(),
        SeriesMethod::Auto,
        crate::spaces::DEFAULT_SERIES_TERMS,
        crate::spaces::DEFAULT_SERIES_TOLERANCE,
    )?;
    let n = gen.n();
    let tables: Vec<Vec<f64>> = params
        .gamma()
        .iter()
        .map(|&g| omega_table(&series, g, n))
        .collect();
    let total = compensated_sum((0..n).map(|i| {
        tables
            .iter()
            .zip(gen.z())
            .map(|(t, &zj)| t[(i as u128 * zj as u128 % n as u128) as usize])
            .product::<f64>()
    }));
    let z = zeta(2.0 * params.alpha());
    let tail = series.tail_bound();
    let bound = params
        .gamma()
        .iter()
        .map(|g| 1.0 + 2.0 * g * (z + tail))
        .product::<f64>()
        - params.full_inverse_r_sum();
    Ok(WceReport::new(
        -1.0 + total / n as f64,
        WceMethod::ClosedForm,
        bound,
        n,
        params,
    ))
}

/// `omega(m/n) = 1 + 2 gamma S_alpha(m/n)` for `m = 0..n`, mirrored so that
/// `table[m] == table[n - m]` bit for bit.
pub(crate) fn omega_table(series: &PeriodicSeries, gamma: f64, n: u64) -> Vec<f64> {
    let n = n as usize;
    let mut t = vec![0.0; n];
    for m in 0..=n / 2 {
        let v = 1.0 + 2.0 * gamma * series.eval(m as f64 / n as f64);
        t[m] = v;
        if m != 0 {
            t[n - m] = v;
        }
    }
    t
}

/// Shift-averaged squared error of the tent-transformed randomly shifted
/// rule, by both routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsReport {
    /// `-1 + (1/n^2) sum K^{sh,psi}(t_i, t_i')` on the plain lattice points.
    pub kernel_form: WceReport,
    /// Truncated `sum_{0 != k in dual} 2^{-|k|_0}/r(k)`.
    pub dual_sum: WceReport,
}

impl RmsReport {
    /// Whether the two routes agree within the attached truncation bounds.
    pub fn agrees(&self, slack: f64) -> bool {
        (self.kernel_form.squared_error - self.dual_sum.squared_error).abs()
            <= self.kernel_form.truncation_bound + self.dual_sum.truncation_bound + slack
    }
}

pub fn wce_rms_shifted(params: &SpaceParams, gen: &GeneratingVector, bound: Option<u32>) -> Result<RmsReport> {
    let spec = KernelSpec::new(KernelKind::ShiftInvariantTented, params.clone());
    let mut kernel_form = wce_kernel_form(&spec, &lattice_points(gen))?;
    // 2^{-|k|_0} / r_gamma(k) = 1 / r_{gamma/2}(k)
    let mut dual_sum = wce_korobov_dual(&params.halved(), gen, bound)?;
    kernel_form.weights_spec = params.weight_spec().clone();
    dual_sum.weights_spec = params.weight_spec().clone();
    Ok(RmsReport { kernel_form, dual_sum })
}

/// `((prod_j (1 + c zeta(2 alpha lambda) gamma_j^lambda) - 1)/(n-1))^{1/(2 lambda)}`
/// with `c = 2`, or `c = 2^{1-lambda}` for the halved-weight criterion.
pub fn cbc_error_bound(params: &SpaceParams, n: u64, lambda: f64, halve_weights: bool) -> Result<f64> {
    let lo = 0.5 / params.alpha();
    if !(lambda > lo && lambda <= 1.0) {
        return Err(invalid(format!("lambda must lie in ({lo}, 1], got {lambda}")));
    }
    if n < 2 {
        return Err(invalid("CBC error bound needs n >= 2"));
    }
    let c = if halve_weights { 2f64.powf(1.0 - lambda) } else { 2.0 };
    let z = zeta(2.0 * params.alpha() * lambda);
    let prod: f64 = params
        .gamma()
        .iter()
        .map(|g| 1.0 + c * z * g.powf(lambda))
        .product();
    Ok(((prod - 1.0) / (n - 1) as f64).powf(0.5 / lambda))
}

/// Monte Carlo estimate over uniform shifts of the kernel-form squared
/// error of the shifted tent-transformed rule in the cosine space; returns
/// `(mean, standard error)`.
pub fn rms_monte_carlo<R: Rng>(
    params: &SpaceParams,
    gen: &GeneratingVector,
    shifts: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if shifts < 2 {
        return Err(invalid("need at least two shifts"));
    }
    let spec = KernelSpec::new(KernelKind::Cosine, params.clone());
    let d = gen.dim();
    let mut values = Vec::with_capacity(shifts);
    for _ in 0..shifts {
        let delta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let shift = Shift::new(delta)?;
        let ps = tented_lattice_points(gen, Some(&shift));
        values.push(wce_kernel_form(&spec, &ps)?.squared_error);
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt()))
}

/// Midpoint-rule average over shifts of `K(psi(x + Delta), psi(y + Delta))`
/// for the cosine kernel; the kernel is a product so each coordinate is
/// averaged separately.
pub fn shift_averaged_tented_kernel(params: &SpaceParams, x: &[f64], y: &[f64], nodes: usize) -> Result<f64> {
    check_dims(params, x.len())?;
    check_dims(params, y.len())?;
    let series = PeriodicSeries::new(
        params.alpha(),
        SeriesMethod::Auto,
        crate::spaces::DEFAULT_SERIES_TERMS,
        crate::spaces::DEFAULT_SERIES_TOLERANCE,
    )?;
    let mut prod = 1.0;
    for (j, g) in params.gamma().iter().enumerate() {
        let mut acc = 0.0;
        for q in 0..nodes {
            let delta = (q as f64 + 0.5) / nodes as f64;
            let a = tent(frac(x[j] + delta));
            let b = tent(frac(y[j] + delta));
            acc += 1.0 + g * (series.eval(0.5 * (a - b).abs()) + series.eval(0.5 * (a + b)));
        }
        prod *= acc / nodes as f64;
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(alpha: f64, gamma: &[f64]) -> SpaceParams {
        SpaceParams::new(alpha, gamma.to_vec()).unwrap()
    }

    fn gv(n: u64, z: &[i64]) -> GeneratingVector {
        GeneratingVector::new(n, z).unwrap()
    }

    #[test]
    fn single_point_kernel_form() {
        let p = params(1.0, &[1.0]);
        let spec = KernelSpec::new(KernelKind::Korobov, p);
        let r = wce_kernel_form(&spec, &lattice_points(&gv(1, &[0]))).unwrap();
        assert!((r.squared_error - PI * PI / 3.0).abs() < 1e-13);
        assert_eq!(r.method, WceMethod::KernelForm);
    }

    #[test]
    fn degenerate_multiset() {
        let p = params(2.0, &[1.0, 0.5]);
        let spec = KernelSpec::new(KernelKind::Cosine, p.clone());
        let t = vec![0.3, 0.8];
        let ps = PointSet::from_rows(&[t.clone(), t.clone(), t.clone()], crate::lattice::PointKind::Plain).unwrap();
        let r = wce_kernel_form(&spec, &ps).unwrap();
        let k = Kernel::new(&spec).unwrap().eval(&t, &t);
        assert!((r.squared_error - (k - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn tented_points_equal_tented_kernel() {
        let p = params(1.0, &[1.0, 0.7]);
        let g = gv(7, &[1, 3]);
        let a = wce_kernel_form(&KernelSpec::new(KernelKind::Cosine, p.clone()), &tented_lattice_points(&g, None)).unwrap();
        let b = wce_kernel_form(&KernelSpec::new(KernelKind::TentedCosine, p), &lattice_points(&g)).unwrap();
        assert_eq!(a.squared_error, b.squared_error);
    }

    #[test]
    fn two_point_rule_closed_values() {
        let p = params(1.0, &[1.0]);
        let g = gv(2, &[1]);
        let kor = wce_korobov_dual(&p, &g, Some(4096)).unwrap();
        assert!((kor.squared_error - PI * PI / 12.0).abs() <= kor.truncation_bound);
        let exact = wce_korobov_lattice(&p, &g).unwrap();
        assert!((exact.squared_error - PI * PI / 12.0).abs() < 1e-14);
        let rms = wce_rms_shifted(&p, &g, None).unwrap();
        assert!((rms.kernel_form.squared_error - PI * PI / 24.0).abs() < 1e-13);
        assert!(rms.agrees(1e-13));
    }

    #[test]
    fn full_lattice_identity() {
        let p = params(2.0, &[1.0, 0.5]);
        let r = wce_korobov_lattice(&p, &gv(1, &[0, 0])).unwrap();
        assert!((r.squared_error - (p.full_inverse_r_sum() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dual_sum_matches_kernel_form() {
        let p = params(2.0, &[1.0, 1.0]);
        let g = gv(4, &[1, 3]);
        let dual = wce_korobov_dual(&p, &g, None).unwrap();
        let kernel = wce_kernel_form(&KernelSpec::new(KernelKind::Korobov, p.clone()), &lattice_points(&g)).unwrap();
        assert!((dual.squared_error - kernel.squared_error).abs() <= dual.truncation_bound);

        let p1 = params(1.0, &[1.0, 1.0]);
        let cos = wce_cosine_tented(&p1, &g, Some(32)).unwrap();
        let kernel = wce_kernel_form(&KernelSpec::new(KernelKind::TentedCosine, p1.clone()), &lattice_points(&g)).unwrap();
        assert!((cos.squared_error - kernel.squared_error).abs() <= cos.truncation_bound);
    }

    #[test]
    fn one_dimensional_sign_factor_is_one() {
        let p = params(1.0, &[0.6]);
        let g = gv(7, &[3]);
        let a = wce_korobov_dual(&p, &g, Some(64)).unwrap();
        let b = wce_cosine_tented(&p, &g, Some(64)).unwrap();
        assert_eq!(a.squared_error, b.squared_error);
    }

    #[test]
    fn sign_factor_examples() {
        let g = gv(4, &[1, 3]);
        // (1,1) in the dual; (1,-1) is not: 1 - 3 = -2
        assert_eq!(sign_factor(&[1, 1], &g), 0.5);
        assert_eq!(sign_factor(&[0, 0], &g), 1.0);
        assert_eq!(sign_factor(&[2, 2], &g), 1.0);
    }

    #[test]
    fn cbc_bound_examples() {
        let p = params(1.0, &[1.0]);
        let b = cbc_error_bound(&p, 2, 1.0, false).unwrap();
        assert!((b - (PI * PI / 3.0).sqrt()).abs() < 1e-14);
        let b = cbc_error_bound(&p, 2, 1.0, true).unwrap();
        assert!((b - (PI * PI / 6.0).sqrt()).abs() < 1e-14);
        assert!(cbc_error_bound(&p, 101, 0.75, false).unwrap() < cbc_error_bound(&p, 53, 0.75, false).unwrap());
        assert!(cbc_error_bound(&p, 10, 0.5, false).is_err());
        assert!(cbc_error_bound(&p, 10, 1.1, false).is_err());
        assert!(cbc_error_bound(&p, 1, 1.0, false).is_err());
    }

    #[test]
    fn clamping() {
        let p = params(1.0, &[1.0]);
        let r = WceReport::new(-1e-14, WceMethod::KernelForm, 0.0, 1, &p);
        assert!(r.clamped);
        assert_eq!(r.squared_error, 0.0);
        let json = r.to_json();
        assert!(json.contains("\"method\":\"kernel-form\""));
        assert!(json.contains("\"weights_spec\":[1.0]"));
    }

    #[test]
    fn shift_averaged_kernel_matches_halved_korobov() {
        let p = params(1.0, &[1.0, 0.5]);
        let sh = Kernel::new(&KernelSpec::new(KernelKind::ShiftInvariantTented, p.clone())).unwrap();
        let (x, y) = ([0.2, 0.9], [0.65, 0.1]);
        let avg = shift_averaged_tented_kernel(&p, &x, &y, 20_000).unwrap();
        assert!((avg - sh.eval(&x, &y)).abs() < 1e-7, "{avg} vs {}", sh.eval(&x, &y));
    }
}
