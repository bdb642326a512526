//! Function approximation from tent-transformed lattice samples on a
//! weighted hyperbolic cross, with exact error evaluation for cosine
//! polynomials and the aliasing bounds on the worst-case error.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbc::{approximation_criterion, is_prime, shifted_box_tail};
use crate::error::{invalid, Error, Result};
use crate::hypercross::{enumerate_h, IndexSet};
use crate::lattice::{in_dual, tented_lattice_points, DualScanner, GeneratingVector};
use crate::spaces::{cosine_basis, nonzero_count, r_weight, SpaceParams};
use crate::special::zeta;
use crate::wce::MAX_SIGN_DIM;

/// Largest dimension accepted by the tensor quadrature check.
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Finitely supported cosine coefficients `f^(k)`, `k` in `Z_+^d`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientMap {
    dim: usize,
    entries: BTreeMap<Vec<i32>, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientLine {
    k: Vec<i32>,
    re: f64,
    im: f64,
}

impl CoefficientMap {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replaces the coefficient at `k`.
    pub fn insert(&mut self, k: Vec<i32>, value: impl Into<Complex64>) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: k.len(),
            });
        }
        if k.iter().any(|&v| v < 0) {
            return Err(invalid(format!("cosine frequencies are non-negative, got {k:?}")));
        }
        self.entries.insert(k, value.into());
        Ok(())
    }

    pub fn get(&self, k: &[i32]) -> Complex64 {
        self.entries.get(k).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i32], Complex64)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// `sum |f^(k)|^2`, the squared `L_2` norm.
    pub fn l2_norm_sq(&self) -> f64 {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    /// `sum r(k) |f^(k)|^2`, the squared norm in the cosine space.
    pub fn space_norm_sq(&self, params: &SpaceParams) -> f64 {
        self.iter().map(|(k, c)| r_weight(params, k) * c.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Largest frequency component, the polynomial degree per coordinate.
    pub fn max_degree(&self) -> u32 {
        self.entries.keys().flatten().map(|&v| v as u32).max().unwrap_or(0)
    }

    /// `f(x) = sum_k f^(k) phi_k(x)`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.iter().map(|(k, c)| c * cosine_basis(k, x)).sum()
    }

    /// One JSON object `{k, re, im}` per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in self.iter() {
            let line = CoefficientLine {
                k: k.to_vec(),
                re: v.re,
                im: v.im,
            };
            writeln!(out, "{}", serde_json::to_string(&line).map_err(std::io::Error::other)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, dim: usize) -> Result<Self> {
        let mut map = Self::new(dim);
        for line in input.lines() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let c: CoefficientLine = serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
            map.insert(c.k, Complex64::new(c.re, c.im))?;
        }
        Ok(map)
    }
}

/// Approximated coefficients `f^_a(k)` over `H_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxResult {
    pub coeffs: CoefficientMap,
    pub gen: GeneratingVector,
    pub m: f64,
}

#[derive(Serialize)]
struct ApproxJson<'a> {
    schema: &'static str,
    n: u64,
    z: &'a [u64],
    m: f64,
    coefficients: Vec<CoefficientLine>,
}

impl ApproxResult {
    /// `A(f)(x) = sum_{k in H_M} f^_a(k) phi_k(x)`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.coeffs.eval(x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ApproxJson {
            schema: crate::SCHEMA,
            n: self.gen.n(),
            z: self.gen.z(),
            m: self.m,
            coefficients: self
                .coeffs
                .iter()
                .map(|(k, v)| CoefficientLine {
                    k: k.to_vec(),
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        })
        .expect("approximation serializes")
    }
}

fn check_dims(params: &SpaceParams, gen: &GeneratingVector) -> Result<()> {
    if params.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: gen.dim(),
        });
    }
    Ok(())
}

/// `f^_a(k) = (1/n) sum_{t} f(psi(t)) phi_k(psi(t))` for `k in H_M`.
pub fn approximate<F, C>(f: F, gen: &GeneratingVector, params: &SpaceParams, m: f64) -> Result<ApproxResult>
where
    F: Fn(&[f64]) -> C + Sync,
    C: Into<Complex64>,
{
    check_dims(params, gen)?;
    let cross = enumerate_h(params, m, false)?;
    let points = tented_lattice_points(gen, None);
    let values: Vec<Complex64> = points.iter().map(|t| f(t).into()).collect();
    let n = points.len() as f64;
    let coeffs: Vec<Complex64> = cross
        .as_slice()
        .par_iter()
        .map(|k| {
            points
                .iter()
                .zip(&values)
                .map(|(t, v)| v * cosine_basis(k, t))
                .sum::<Complex64>()
                / n
        })
        .collect();
    let mut map = CoefficientMap::new(gen.dim());
    for (k, c) in cross.iter().zip(coeffs) {
        map.insert(k.to_vec(), c)?;
    }
    Ok(ApproxResult {
        coeffs: map,
        gen: gen.clone(),
        m,
    })
}

/// All signed vectors `v` with `|v| = l`.
fn sign_images(l: &[i32]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::with_capacity(l.len())];
    for &lj in l {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                let signs: &[i64] = if lj == 0 { &[1] } else { &[1, -1] };
                signs.iter().map(move |&s| {
                    let mut v = prefix.clone();
                    v.push(s * lj as i64);
                    v
                })
            })
            .collect();
    }
    out
}

/// Aliasing term `sum_{0 != h in dual} sum_sigma f^(|sigma(h) + k|)
/// sqrt(2)^{|k|_0 - |sigma(h)+k|_0} / 2^d`, found by solving
/// `sigma(h) + k = v` for every signed image `v` of a support point.
fn alias_term(f: &CoefficientMap, gen: &GeneratingVector, k: &[i32]) -> Result<Complex64> {
    let d = k.len();
    let k0 = nonzero_count(k) as i32;
    let scale = 0.5f64.powi(d as i32);
    let mut acc = Complex64::default();
    let mut h = vec![0i64; d];
    for (l, c) in f.iter() {
        let weight = std::f64::consts::SQRT_2.powi(k0 - nonzero_count(l) as i32) * scale;
        for v in sign_images(l) {
            if v.iter().zip(k).all(|(&a, &b)| a == b as i64) {
                continue; // h = 0
            }
            for mask in 0..1u32 << d {
                for j in 0..d {
                    let s = if mask >> j & 1 == 1 { -1 } else { 1 };
                    h[j] = s * (v[j] - k[j] as i64);
                }
                if in_dual(&h, gen)? {
                    acc += c * weight;
                }
            }
        }
    }
    Ok(acc)
}

/// `f^_a(k)` over `H_M` computed from the exact coefficients of `f`.
pub fn aliased_coefficients(f: &CoefficientMap, gen: &GeneratingVector, params: &SpaceParams, m: f64) -> Result<CoefficientMap> {
    check_dims(params, gen)?;
    check_sign_dim(gen.dim())?;
    let cross = enumerate_h(params, m, false)?;
    let mut out = CoefficientMap::new(gen.dim());
    for k in cross.iter() {
        out.insert(k.to_vec(), f.get(k) + alias_term(f, gen, k)?)?;
    }
    Ok(out)
}

fn check_sign_dim(d: usize) -> Result<()> {
    if d > MAX_SIGN_DIM {
        return Err(Error::Unsupported(format!("sign sums need d <= {MAX_SIGN_DIM}, got {d}")));
    }
    Ok(())
}

/// `||f - A(f)||^2 = sum_{k not in H_M} |f^(k)|^2 + sum_{k in H_M} |f^_a(k) - f^(k)|^2`,
/// exact for finitely supported `f`.
pub fn exact_l2_error(f: &CoefficientMap, gen: &GeneratingVector, params: &SpaceParams, m: f64) -> Result<f64> {
    check_dims(params, gen)?;
    check_sign_dim(gen.dim())?;
    let cross = enumerate_h(params, m, false)?;
    let truncation: f64 = f
        .iter()
        .filter(|(k, _)| !cross.contains(k))
        .map(|(_, c)| c.norm_sqr())
        .sum();
    let aliasing = cross
        .as_slice()
        .par_iter()
        .map(|k| alias_term(f, gen, k).map(|a| a.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum::<f64>();
    Ok(truncation + aliasing)
}

/// Smallest midpoint level integrating a squared cosine polynomial of the
/// given degree exactly.
pub fn quadrature_level_for(degree: u32) -> usize {
    degree as usize + 1
}

/// `||f - A(f)||^2` by the tensor midpoint rule with `level` nodes per
/// coordinate. The rule integrates `cos(pi m x)` exactly for `m < 2 level`,
/// so the result is exact when `level` exceeds the degree of both `f` and
/// `A(f)`; `f_degree` is the caller's degree of `f`.
pub fn empirical_l2_error<F, C>(f: F, f_degree: u32, approx: &ApproxResult, level: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> C + Sync,
    C: Into<Complex64>,
{
    let d = approx.gen.dim();
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::Unsupported(format!(
            "tensor quadrature needs d <= {MAX_QUADRATURE_DIM}, got {d}"
        )));
    }
    let need = quadrature_level_for(f_degree.max(approx.coeffs.max_degree()));
    if level < need {
        return Err(invalid(format!("quadrature level {level} below the exact level {need}")));
    }
    let nodes: Vec<f64> = (0..level).map(|i| (i as f64 + 0.5) / level as f64).collect();
    let total = level.pow(d as u32);
    let sum: f64 = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for xj in x.iter_mut() {
                *xj = nodes[idx % level];
                idx /= level;
            }
            (f(&x).into() - approx.eval(&x)).norm_sqr()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(sum / total as f64)
}

/// Worst-case error bound `1/M + sum_{k in H_M} sum_h sum_sigma
/// 2^{|k|_0}/(2^d r(sigma(h) + k))` with the dual sum truncated to a box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxBound {
    pub m: f64,
    /// Truncated aliasing sum (second term).
    pub aliasing: f64,
    /// Bound on the omitted part of the aliasing sum.
    pub truncation_bound: f64,
}

impl ApproxBound {
    /// `1/M + aliasing`, excluding the truncation bound.
    pub fn value(&self) -> f64 {
        1.0 / self.m + self.aliasing
    }

    /// Guaranteed upper bound including the omitted tail.
    pub fn rigorous(&self) -> f64 {
        self.value() + self.truncation_bound
    }
}

pub fn wce_upper_bound(params: &SpaceParams, gen: &GeneratingVector, m: f64, bound: u32) -> Result<ApproxBound> {
    check_dims(params, gen)?;
    let cross = enumerate_h(params, m, false)?;
    let kmax = cross.max_abs();
    if kmax > bound {
        return Err(invalid(format!("dual box {bound} must cover the cross radius {kmax}")));
    }
    let d = gen.dim();
    let tables = params.inverse_r_tables(bound as u64 + kmax as u64);
    let ks = cross.as_slice();
    // sum over sigma of prod_j 1/r_j(sigma_j h_j + k_j) factorizes per coordinate
    let weights: Vec<f64> = ks.iter().map(|k| 0.5f64.powi(d as i32 - nonzero_count(k) as i32)).collect();
    let aliasing = DualScanner::new(gen, bound).sum(|h| {
        if h.iter().all(|&v| v == 0) {
            return 0.0;
        }
        ks.iter()
            .zip(&weights)
            .map(|(k, w)| {
                w * tables
                    .iter()
                    .zip(h.iter().zip(k))
                    .map(|(t, (&hj, &kj))| {
                        let kj = kj as i64;
                        t[(kj + hj).unsigned_abs() as usize] + t[(kj - hj).unsigned_abs() as usize]
                    })
                    .product::<f64>()
            })
            .sum::<f64>()
    });
    let truncation_bound = ks
        .iter()
        .map(|k| 2f64.powi(nonzero_count(k) as i32) * shifted_box_tail(params, bound, k))
        .sum();
    Ok(ApproxBound {
        m,
        aliasing,
        truncation_bound,
    })
}

/// Cosine-side triple sum over `H_M` against the Korobov-side double sum
/// over the signed cross, both truncated to the same dual box.
pub fn aliasing_bound_equality(params: &SpaceParams, gen: &GeneratingVector, m: f64, bound: u32) -> Result<(f64, f64)> {
    let lhs = wce_upper_bound(params, gen, m, bound)?.aliasing;
    let rhs = approximation_criterion(params, gen, m, bound)?.value;
    Ok((lhs, rhs))
}

/// `1/M + M^{tau/lambda}/(n-1)^{1/lambda} (1/mu)
/// prod_j [(1 + 2 zeta(2 alpha tau) gamma_j^tau)(1 + 2(1 + mu^lambda) zeta(2 alpha lambda) gamma_j^lambda)]^{1/lambda}`.
pub fn approx_error_bound_formula(params: &SpaceParams, n: u64, m: f64, tau: f64, lambda: f64, mu: f64) -> Result<f64> {
    let lo = 0.5 / params.alpha();
    if !(tau > lo) {
        return Err(invalid(format!("tau must exceed {lo}, got {tau}")));
    }
    if !(lambda > lo && lambda <= 1.0) {
        return Err(invalid(format!("lambda must lie in ({lo}, 1], got {lambda}")));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid(format!("mu must lie in (0, 1), got {mu}")));
    }
    if !(m >= 1.0) {
        return Err(invalid(format!("M must be >= 1, got {m}")));
    }
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let a = 2.0 * params.alpha();
    let zt = zeta(a * tau);
    let zl = zeta(a * lambda);
    let prod: f64 = params
        .gamma()
        .iter()
        .map(|g| (1.0 + 2.0 * zt * g.powf(tau)) * (1.0 + 2.0 * (1.0 + mu.powf(lambda)) * zl * g.powf(lambda)))
        .product();
    Ok(1.0 / m + m.powf(tau / lambda) / ((n - 1) as f64).powf(1.0 / lambda) / mu * prod.powf(1.0 / lambda))
}

/// Largest admissible `mu = (1 - 1/kappa)^{2 alpha}`.
pub fn max_mu(kappa: f64, alpha: f64) -> f64 {
    (1.0 - 1.0 / kappa).powf(2.0 * alpha)
}

/// Random real cosine polynomial supported on `H_{M'}`, scaled to unit norm
/// in the cosine space.
pub fn random_cosine_polynomial<R: Rng>(params: &SpaceParams, m_support: f64, terms: usize, rng: &mut R) -> Result<CoefficientMap> {
    let support = enumerate_h(params, m_support, false)?;
    let mut f = CoefficientMap::new(params.dim());
    let picks = terms.min(support.len());
    let mut chosen = std::collections::BTreeSet::new();
    while chosen.len() < picks {
        chosen.insert(rng.random_range(0..support.len()));
    }
    for i in chosen {
        f.insert(support.as_slice()[i].clone(), rng.random_range(-1.0..1.0))?;
    }
    let norm = f.space_norm_sq(params).sqrt();
    if norm == 0.0 {
        return Err(invalid("degenerate random polynomial"));
    }
    Ok(f.scaled(1.0 / norm))
}

/// Kernel representer `K(., y)` truncated to `H_{M'}`, coefficients
/// `phi_k(y)/r(k)`, scaled to unit norm.
pub fn kernel_representer(params: &SpaceParams, y: &[f64], m_support: f64) -> Result<CoefficientMap> {
    if y.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: y.len(),
        });
    }
    let support: IndexSet = enumerate_h(params, m_support, false)?;
    let mut f = CoefficientMap::new(params.dim());
    for k in support.iter() {
        f.insert(k.to_vec(), cosine_basis(k, y) / r_weight(params, k))?;
    }
    let norm = f.space_norm_sq(params).sqrt();
    Ok(f.scaled(1.0 / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wce::wce_korobov_dual;
    use rand::SeedableRng;

    fn params(alpha: f64, gamma: &[f64]) -> SpaceParams {
        SpaceParams::new(alpha, gamma.to_vec()).unwrap()
    }

    fn phi(k: Vec<i32>) -> CoefficientMap {
        let mut f = CoefficientMap::new(k.len());
        f.insert(k, 1.0).unwrap();
        f
    }

    #[test]
    fn constant_function() {
        let p = params(1.0, &[1.0, 0.5]);
        let g = GeneratingVector::new(7, &[1, 3]).unwrap();
        let res = approximate(|_| 1.0, &g, &p, 4.0).unwrap();
        assert!((res.coeffs.get(&[0, 0]) - 1.0).norm() < 1e-14);
        let exact = aliased_coefficients(&phi(vec![0, 0]), &g, &p, 4.0).unwrap();
        for (k, c) in res.coeffs.iter() {
            assert!((c - exact.get(k)).norm() < 1e-13, "{k:?}");
        }
    }

    #[test]
    fn alias_free_basis_function_is_reproduced() {
        let p = params(1.0, &[1.0, 1.0]);
        let g = GeneratingVector::new(5, &[1, 2]).unwrap();
        let f = phi(vec![1, 0]);
        let res = approximate(|x: &[f64]| f.eval(x), &g, &p, 1.0).unwrap();
        assert!((res.coeffs.get(&[1, 0]) - 1.0).norm() < 1e-13);
        // (1, 0) aliases into (1, 1) through h = (2, -1), so the error is that leak
        let leak: f64 = res.coeffs.iter().filter(|(k, _)| *k != [1, 0]).map(|(_, c)| c.norm_sqr()).sum();
        assert!(leak > 0.1);
        assert!((exact_l2_error(&f, &g, &p, 1.0).unwrap() - leak).abs() < 1e-13);
    }

    #[test]
    fn pure_truncation() {
        let p = params(1.0, &[1.0]);
        let g = GeneratingVector::new(101, &[1]).unwrap();
        let f = phi(vec![5]).scaled(0.5);
        assert!((exact_l2_error(&f, &g, &p, 4.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hand_case_two_points() {
        // psi maps the points 0.5 and 0 to 1 and 0, where phi_2 = sqrt(2)
        let p = params(1.0, &[1.0]);
        let g = GeneratingVector::new(2, &[1]).unwrap();
        let f = phi(vec![2]);
        let res = approximate(|x: &[f64]| f.eval(x), &g, &p, 1.0).unwrap();
        assert!((res.coeffs.get(&[0]).re - std::f64::consts::SQRT_2).abs() < 1e-14);
        let exact = exact_l2_error(&f, &g, &p, 1.0).unwrap();
        let quad = empirical_l2_error(|x: &[f64]| f.eval(x), 2, &res, 8).unwrap();
        assert!((exact - quad).abs() < 1e-12);
        assert!((exact - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_polynomials_exact_vs_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let p = params(1.0, &[1.0, 0.6]);
        let g = GeneratingVector::new(13, &[1, 5]).unwrap();
        for _ in 0..4 {
            let f = random_cosine_polynomial(&p, 12.0, 6, &mut rng).unwrap();
            let res = approximate(|x: &[f64]| f.eval(x), &g, &p, 4.0).unwrap();
            let exact_coeffs = aliased_coefficients(&f, &g, &p, 4.0).unwrap();
            for (k, c) in res.coeffs.iter() {
                assert!((c - exact_coeffs.get(k)).norm() < 1e-12);
            }
            let exact = exact_l2_error(&f, &g, &p, 4.0).unwrap();
            let level = quadrature_level_for(f.max_degree().max(res.coeffs.max_degree()));
            let quad = empirical_l2_error(|x: &[f64]| f.eval(x), f.max_degree(), &res, level).unwrap();
            assert!((exact - quad).abs() < 1e-12, "{exact} {quad}");
            let bound = wce_upper_bound(&p, &g, 4.0, 64).unwrap();
            assert!(exact <= bound.rigorous() + 1e-10);
        }
    }

    #[test]
    fn quadrature_rejects_low_level() {
        let p = params(1.0, &[1.0]);
        let g = GeneratingVector::new(5, &[1]).unwrap();
        let res = approximate(|_| 1.0, &g, &p, 4.0).unwrap();
        assert!(empirical_l2_error(|_| 1.0, 0, &res, 2).is_err());
        assert!(empirical_l2_error(|_| 1.0, 0, &res, 3).unwrap() < 1e-24);
    }

    #[test]
    fn equality_one_dimensional() {
        let p = params(1.0, &[1.0]);
        let g = GeneratingVector::new(2, &[1]).unwrap();
        let (lhs, rhs) = aliasing_bound_equality(&p, &g, 4.0, 64).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
        // direct sum over even h and k in {-2..2}
        let mut direct = 0.0;
        for h in (-64i64..=64).filter(|h| h % 2 == 0 && *h != 0) {
            for k in -2i64..=2 {
                let v = (h + k) as f64;
                direct += if v == 0.0 { 1.0 } else { 1.0 / (v * v) };
            }
        }
        assert!((direct - rhs).abs() < 1e-12);
    }

    #[test]
    fn unit_cross_reduces_to_korobov_error() {
        let p = params(1.0, &[0.5]);
        let g = GeneratingVector::new(7, &[1]).unwrap();
        let b = wce_upper_bound(&p, &g, 1.0, 64).unwrap();
        let kor = wce_korobov_dual(&p, &g, Some(64)).unwrap();
        assert!((b.aliasing - kor.squared_error).abs() < 1e-14);
    }

    #[test]
    fn bound_formula_substitution() {
        let p = params(1.0, &[1.0, 0.5]);
        let mu = max_mu(2.0, 1.0);
        assert_eq!(mu, 0.25);
        let v = approx_error_bound_formula(&p, 101, 9.0, 1.0, 1.0, mu).unwrap();
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let prod: f64 = [1.0f64, 0.5]
            .iter()
            .map(|g| (1.0 + 2.0 * z2 * g) * (1.0 + 2.0 * 1.25 * z2 * g))
            .product();
        let expected = 1.0 / 9.0 + 9.0 / 100.0 / 0.25 * prod;
        assert!((v - expected).abs() < 1e-12 * expected);
        assert!(approx_error_bound_formula(&p, 100, 9.0, 1.0, 1.0, mu).is_err());
        assert!(approx_error_bound_formula(&p, 101, 9.0, 0.4, 1.0, mu).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut f = CoefficientMap::new(2);
        f.insert(vec![0, 3], Complex64::new(0.1, -1.0 / 3.0)).unwrap();
        f.insert(vec![2, 1], 1e-17).unwrap();
        assert!(f.insert(vec![-1, 0], 1.0).is_err());
        let mut buf = Vec::new();
        f.write_jsonl(&mut buf).unwrap();
        let back = CoefficientMap::read_jsonl(buf.as_slice(), 2).unwrap();
        assert_eq!(back, f);
    }
}
