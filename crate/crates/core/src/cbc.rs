//! Component-by-component construction of generating vectors.
//!
//! The integration criteria use the per-point product form
//! `e^2(z) = -1 + (1/n) sum_i prod_j omega_j(i z_j mod n / n)` with
//! `omega_j(x) = 1 + 2 gamma_j S_alpha(x)`. The plain engine evaluates every
//! candidate directly in `O(n^2)`; the fast engine reorders the indices by
//! a primitive root so that all candidates come out of one circular
//! correlation of length `n - 1`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypercross::enumerate_h;
use crate::lattice::{DualScanner, GeneratingVector};
use crate::spaces::{r_weight, PeriodicSeries, SeriesMethod, SpaceParams, DEFAULT_SERIES_TERMS, DEFAULT_SERIES_TOLERANCE};
use crate::special::{compensated_sum, zeta, zeta_tail};
use crate::wce::omega_table;

/// Default upper limit on the fast engine's working memory.
pub const DEFAULT_MEMORY_LIMIT: usize = 2 << 30;

/// Relative window in which fast-engine minima are re-checked directly.
const RECHECK_WINDOW: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    KorobovIntegration,
    KorobovIntegrationHalved,
    ApproximationE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Plain,
    Fast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbcConfig {
    pub n: u64,
    pub params: SpaceParams,
    pub criterion: Criterion,
    /// Hyperbolic cross parameter, required for [`Criterion::ApproximationE`].
    pub m: Option<f64>,
    /// Feasibility constant in `n >= kappa M^{1/(2 alpha)}`.
    pub kappa: f64,
    pub engine: Engine,
    pub memory_limit: usize,
}

impl CbcConfig {
    pub fn new(n: u64, params: SpaceParams, criterion: Criterion, engine: Engine) -> Self {
        Self {
            n,
            params,
            criterion,
            m: None,
            kappa: 2.0,
            engine,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.n) {
            return Err(Error::NotPrime(self.n));
        }
        if self.criterion == Criterion::ApproximationE {
            let m = self
                .m
                .ok_or_else(|| invalid("approximation criterion needs M"))?;
            if !(m >= 1.0) {
                return Err(invalid(format!("M must be >= 1, got {m}")));
            }
            if !(self.kappa > 1.0) {
                return Err(invalid(format!("kappa must exceed 1, got {}", self.kappa)));
            }
            let need = self.kappa * m.powf(0.5 / self.params.alpha());
            if (self.n as f64) < need {
                return Err(Error::Infeasible(format!(
                    "n = {} < kappa M^(1/(2 alpha)) = {need:.3}",
                    self.n
                )));
            }
            if self.engine == Engine::Fast {
                return Err(Error::Unsupported(
                    "the approximation criterion is only searched with the plain engine".into(),
                ));
            }
        }
        if self.engine == Engine::Fast {
            let needed = fast_memory_estimate(self.n, self.dim());
            if needed > self.memory_limit {
                return Err(Error::MemoryLimit {
                    needed,
                    limit: self.memory_limit,
                });
            }
        }
        Ok(())
    }
}

fn fast_memory_estimate(n: u64, d: usize) -> usize {
    // product vector, omega table and three complex buffers of length n - 1
    let n = n as usize;
    n * 8 * 2 + n * 16 * 3 + d * 8
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbcResult {
    pub gen: GeneratingVector,
    /// Criterion value after fixing each component.
    pub criterion_values: Vec<f64>,
    #[serde(skip)]
    pub elapsed: Vec<Duration>,
    pub engine: Engine,
    pub criterion: Criterion,
}

#[derive(Serialize)]
struct CbcJson<'a> {
    schema: &'static str,
    n: u64,
    z: &'a [u64],
    criterion: &'a [f64],
    criterion_kind: Criterion,
    engine: Engine,
}

impl CbcResult {
    /// `{n, z, criterion, engine}` plus schema tag.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CbcJson {
            schema: crate::SCHEMA,
            n: self.gen.n(),
            z: self.gen.z(),
            criterion: &self.criterion_values,
            criterion_kind: self.criterion,
            engine: self.engine,
        })
        .expect("cbc result serializes")
    }

    /// One integer per line.
    pub fn z_file(&self) -> String {
        self.gen.z().iter().map(|z| format!("{z}\n")).collect()
    }
}

/// Parses a z-file (one integer per line, blank lines and `#` comments ignored).
pub fn parse_z_file(text: &str, n: u64) -> Result<GeneratingVector> {
    let z = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<u64>().map_err(|e| Error::Parse(format!("{l:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    GeneratingVector::from_unsigned(n, z)
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Smallest primitive root of a prime `n`, by trial over the prime divisors
/// of `n - 1`.
pub fn primitive_root(n: u64) -> Result<u64> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    if n == 2 {
        return Ok(1);
    }
    let mut factors = Vec::new();
    let mut rest = n - 1;
    let mut p = 2;
    while p * p <= rest {
        if rest.is_multiple_of(p) {
            factors.push(p);
            while rest.is_multiple_of(p) {
                rest /= p;
            }
        }
        p += 1;
    }
    if rest > 1 {
        factors.push(rest);
    }
    (2..n)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (n - 1) / q, n) != 1))
        .ok_or_else(|| invalid(format!("no primitive root for {n}")))
}

fn series_for(params: &SpaceParams) -> Result<PeriodicSeries> {
    PeriodicSeries::new(
        params.alpha(),
        SeriesMethod::Auto,
        DEFAULT_SERIES_TERMS,
        DEFAULT_SERIES_TOLERANCE,
    )
}

/// Incremental state of the Korobov-criterion search.
struct KorobovState {
    n: u64,
    /// `p[i] = prod_{j < s} omega_j(i z_j mod n / n)`.
    prod: Vec<f64>,
    omegas: Vec<Vec<f64>>,
}

impl KorobovState {
    fn new(params: &SpaceParams, n: u64) -> Result<Self> {
        let series = series_for(params)?;
        Ok(Self {
            n,
            prod: vec![1.0; n as usize],
            omegas: params.gamma().iter().map(|&g| omega_table(&series, g, n)).collect(),
        })
    }

    /// Criterion for candidate `c` in component `s` (0-based), summed over
    /// `i = 0..n` in order.
    fn value(&self, s: usize, c: u64) -> f64 {
        let n = self.n;
        let omega = &self.omegas[s];
        let mut idx = 0u64;
        let acc = compensated_sum(self.prod.iter().map(|&p| {
            let v = p * omega[idx as usize];
            idx += c;
            if idx >= n {
                idx -= n;
            }
            v
        }));
        -1.0 + acc / n as f64
    }

    fn all_plain(&self, s: usize) -> Vec<f64> {
        (1..self.n).into_par_iter().map(|c| self.value(s, c)).collect()
    }

    fn all_fast(&self, s: usize, fft: &FastPlan) -> Vec<f64> {
        let n = self.n as usize;
        let m = n - 1;
        if m == 1 {
            return vec![self.value(s, 1)];
        }
        let omega = &self.omegas[s];
        let mut p_hat: Vec<Complex64> = fft.perm.iter().map(|&i| Complex64::new(self.prod[i], 0.0)).collect();
        let mut w_hat: Vec<Complex64> = fft.perm.iter().map(|&i| Complex64::new(omega[i], 0.0)).collect();
        fft.forward.process(&mut p_hat);
        fft.forward.process(&mut w_hat);
        // V[b] = sum_a P[a] W[a + b]  <=>  V^ = conj(P^) W^
        let mut v: Vec<Complex64> = p_hat.iter().zip(&w_hat).map(|(p, w)| p.conj() * w).collect();
        fft.inverse.process(&mut v);
        let base = self.prod[0] * omega[0];
        let mut out = vec![0.0; m];
        for (b, val) in v.iter().enumerate() {
            let c = fft.perm[b];
            out[c - 1] = -1.0 + (base + val.re / m as f64) / n as f64;
        }
        out
    }

    fn fix(&mut self, s: usize, z: u64) {
        let n = self.n;
        let omega = &self.omegas[s];
        let mut idx = 0u64;
        for p in self.prod.iter_mut() {
            *p *= omega[idx as usize];
            idx += z;
            if idx >= n {
                idx -= n;
            }
        }
    }
}

struct FastPlan {
    /// `perm[a] = g^a mod n`.
    perm: Vec<usize>,
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl FastPlan {
    fn new(n: u64) -> Result<Self> {
        let g = primitive_root(n)?;
        let m = (n - 1) as usize;
        let mut perm = Vec::with_capacity(m);
        let mut x = 1u64;
        for _ in 0..m {
            perm.push(x as usize);
            x = mul_mod(x, g, n);
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            perm,
            forward: planner.plan_fft_forward(m.max(1)),
            inverse: planner.plan_fft_inverse(m.max(1)),
        })
    }
}

/// Korobov criterion for every candidate `c = 1..n` in component `s`
/// (1-based) with `frozen_z` fixed; entry `c - 1` holds the value for `c`.
pub fn korobov_criterion_all_candidates(
    params: &SpaceParams,
    n: u64,
    frozen_z: &[u64],
    s: usize,
    engine: Engine,
) -> Result<Vec<f64>> {
    if s == 0 || s > params.dim() || frozen_z.len() != s - 1 {
        return Err(invalid(format!(
            "component {s} needs {} frozen components and dimension >= {s}",
            s.saturating_sub(1)
        )));
    }
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let mut state = KorobovState::new(&params.truncate(s), n)?;
    for (j, &z) in frozen_z.iter().enumerate() {
        state.fix(j, z % n);
    }
    Ok(match engine {
        Engine::Plain => state.all_plain(s - 1),
        Engine::Fast => state.all_fast(s - 1, &FastPlan::new(n)?),
    })
}

/// Smallest candidate attaining the minimum, by exact comparison.
fn argmin(values: impl Iterator<Item = (u64, f64)>) -> (u64, f64) {
    values
        .fold(None, |best: Option<(u64, f64)>, (c, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((c, v)),
        })
        .expect("at least one candidate")
}

pub fn cbc_construct(cfg: &CbcConfig) -> Result<CbcResult> {
    cfg.validate()?;
    match cfg.criterion {
        Criterion::KorobovIntegration => cbc_korobov(cfg, &cfg.params),
        Criterion::KorobovIntegrationHalved => cbc_korobov(cfg, &cfg.params.halved()),
        Criterion::ApproximationE => cbc_approximation(cfg),
    }
}

fn cbc_korobov(cfg: &CbcConfig, params: &SpaceParams) -> Result<CbcResult> {
    let n = cfg.n;
    let d = params.dim();
    let mut state = KorobovState::new(params, n)?;
    let plan = match cfg.engine {
        Engine::Fast if n > 2 => Some(FastPlan::new(n)?),
        _ => None,
    };
    let mut z = Vec::with_capacity(d);
    let mut values = Vec::with_capacity(d);
    let mut elapsed = Vec::with_capacity(d);
    for s in 0..d {
        let start = Instant::now();
        // every unit gives the same one-dimensional point set, so z_1 = 1
        let (best, value) = if s == 0 || n == 2 {
            (1, state.value(s, 1))
        } else {
            match &plan {
                None => argmin(state.all_plain(s).into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v))),
                Some(plan) => {
                    let approx = state.all_fast(s, plan);
                    let lo = approx.iter().copied().fold(f64::INFINITY, f64::min);
                    let window = RECHECK_WINDOW * (1.0 + lo.abs());
                    argmin(
                        approx
                            .iter()
                            .enumerate()
                            .filter(|(_, &v)| v <= lo + window)
                            .map(|(i, _)| {
                                let c = i as u64 + 1;
                                (c, state.value(s, c))
                            }),
                    )
                }
            }
        };
        state.fix(s, best);
        z.push(best);
        values.push(value);
        elapsed.push(start.elapsed());
    }
    Ok(CbcResult {
        gen: GeneratingVector::from_unsigned(n, z)?,
        criterion_values: values,
        elapsed,
        engine: cfg.engine,
        criterion: cfg.criterion,
    })
}

/// Incremental state for the approximation criterion
/// `E~(z) = (1/n) sum_i prod_j omega_j(t_ij) C(t_i) - sum_{k in H~} 1/r(k)`
/// with `C(t) = sum_{k in H~_M} cos(2 pi k.t)`, exact for closed-form alpha.
struct ApproxState {
    n: u64,
    m: f64,
    params: SpaceParams,
    prod: Vec<f64>,
    omegas: Vec<Vec<f64>>,
    cos: Vec<f64>,
}

impl ApproxState {
    fn new(params: &SpaceParams, n: u64, m: f64) -> Result<Self> {
        let series = series_for(params)?;
        let cos = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        Ok(Self {
            n,
            m,
            params: params.clone(),
            prod: vec![1.0; n as usize],
            omegas: params.gamma().iter().map(|&g| omega_table(&series, g, n)).collect(),
            cos,
        })
    }

    /// Projected cross in `s + 1` dimensions with frozen phases
    /// `a_k = sum_{j<s} k_j z_j mod n`; returns `(a_k, k_s)` pairs and
    /// `sum 1/r(k)`.
    fn frame(&self, s: usize, z: &[u64]) -> Result<(Vec<(u64, i64)>, f64)> {
        let proj = self.params.truncate(s + 1);
        let cross = enumerate_h(&proj, self.m, true)?;
        let n = self.n;
        let mut inv_sum = 0.0;
        let frame = cross
            .iter()
            .map(|k| {
                inv_sum += 1.0 / r_weight(&proj, k);
                let a = k[..s].iter().zip(z).fold(0u64, |acc, (&kj, &zj)| {
                    let kj = (kj as i64).rem_euclid(n as i64) as u64;
                    (acc + mul_mod(kj, zj, n)) % n
                });
                (a, k[s] as i64)
            })
            .collect();
        Ok((frame, inv_sum))
    }

    fn value(&self, s: usize, c: u64, frame: &[(u64, i64)], inv_sum: f64) -> f64 {
        let n = self.n;
        let phases: Vec<u64> = frame
            .iter()
            .map(|&(a, ks)| (a + mul_mod(ks.rem_euclid(n as i64) as u64, c, n)) % n)
            .collect();
        let omega = &self.omegas[s];
        let acc = compensated_sum((0..n).map(|i| {
            let c_sum: f64 = phases.iter().map(|&b| self.cos[mul_mod(i, b, n) as usize]).sum();
            self.prod[i as usize] * omega[mul_mod(i, c, n) as usize] * c_sum
        }));
        acc / n as f64 - inv_sum
    }

    fn fix(&mut self, s: usize, z: u64) {
        let n = self.n;
        for (i, p) in self.prod.iter_mut().enumerate() {
            *p *= self.omegas[s][mul_mod(i as u64, z, n) as usize];
        }
    }
}

fn cbc_approximation(cfg: &CbcConfig) -> Result<CbcResult> {
    let n = cfg.n;
    let m = cfg.m.expect("validated");
    let d = cfg.dim();
    let mut state = ApproxState::new(&cfg.params, n, m)?;
    let mut z: Vec<u64> = Vec::with_capacity(d);
    let mut values = Vec::with_capacity(d);
    let mut elapsed = Vec::with_capacity(d);
    for s in 0..d {
        let start = Instant::now();
        let (frame, inv_sum) = state.frame(s, &z)?;
        let (best, value) = if s == 0 || n == 2 {
            (1, state.value(s, 1, &frame, inv_sum))
        } else {
            let vals: Vec<f64> = (1..n)
                .into_par_iter()
                .map(|c| state.value(s, c, &frame, inv_sum))
                .collect();
            argmin(vals.into_iter().enumerate().map(|(i, v)| (i as u64 + 1, v)))
        };
        state.fix(s, best);
        z.push(best);
        values.push(value);
        elapsed.push(start.elapsed());
    }
    Ok(CbcResult {
        gen: GeneratingVector::from_unsigned(n, z)?,
        criterion_values: values,
        elapsed,
        engine: cfg.engine,
        criterion: cfg.criterion,
    })
}

/// `E~_{n,d,M}(z)` evaluated exactly through the lattice points (no dual
/// truncation) for closed-form smoothness.
pub fn approximation_criterion_exact(params: &SpaceParams, gen: &GeneratingVector, m: f64) -> Result<f64> {
    if params.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: gen.dim(),
        });
    }
    let d = gen.dim();
    let mut state = ApproxState::new(params, gen.n(), m)?;
    for (s, &zs) in gen.z()[..d - 1].iter().enumerate() {
        state.fix(s, zs);
    }
    let (frame, inv_sum) = state.frame(d - 1, &gen.z()[..d - 1])?;
    Ok(state.value(d - 1, gen.z()[d - 1], &frame, inv_sum))
}

/// Truncated criterion with a bound on the omitted dual terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedSum {
    pub value: f64,
    pub truncation_bound: f64,
}

/// `sum_{k in H~_M} sum_{0 != h in dual, |h_j| <= H} 1/r(h + k)`.
pub fn approximation_criterion(params: &SpaceParams, gen: &GeneratingVector, m: f64, bound: u32) -> Result<TruncatedSum> {
    if params.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: gen.dim(),
        });
    }
    let cross = enumerate_h(params, m, true)?;
    let kmax = cross.max_abs();
    if kmax > bound {
        return Err(invalid(format!(
            "dual box {bound} must cover the cross radius {kmax}"
        )));
    }
    let tables = params.inverse_r_tables(bound as u64 + kmax as u64);
    let ks = cross.as_slice();
    let value = DualScanner::new(gen, bound).sum(|h| {
        if h.iter().all(|&v| v == 0) {
            return 0.0;
        }
        ks.iter()
            .map(|k| {
                tables
                    .iter()
                    .zip(h.iter().zip(k))
                    .map(|(t, (&hj, &kj))| t[(hj + kj as i64).unsigned_abs() as usize])
                    .product::<f64>()
            })
            .sum::<f64>()
    });
    let truncation_bound = ks.iter().map(|k| shifted_box_tail(params, bound, k)).sum();
    Ok(TruncatedSum { value, truncation_bound })
}

/// `sum_{l : |l_j| > H - |k_j| for some j} 1/r(l)`, which contains every
/// `h + k` with `h` outside the box.
pub(crate) fn shifted_box_tail(params: &SpaceParams, bound: u32, k: &[i32]) -> f64 {
    let two_alpha = 2.0 * params.alpha();
    let z = zeta(two_alpha);
    let (full, inside) = params.gamma().iter().zip(k).fold((1.0, 1.0), |(f, p), (g, &kj)| {
        let radius = bound as u64 - kj.unsigned_abs() as u64;
        let partial = if radius == 0 { 0.0 } else { z - zeta_tail(two_alpha, radius) };
        (f * (1.0 + 2.0 * g * z), p * (1.0 + 2.0 * g * partial))
    });
    full - inside
}
