//! Weighted cosine and Korobov space parameters and their reproducing
//! kernels.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::tent;
use crate::special::{
    bernoulli_1, bernoulli_2, closed_form_order, periodic_series_closed, periodic_series_truncated,
    zeta, zeta_tail,
};

/// Default number of series terms for non-integer smoothness.
pub const DEFAULT_SERIES_TERMS: u64 = 1_000_000;
/// Default admissible tail bound for truncated series.
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-8;

/// How the product weights were specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    List(Vec<f64>),
    /// `gamma_j = c * j^(-eta)`.
    PowerLaw { c: f64, eta: f64 },
}

impl WeightSpec {
    pub fn weights(&self, dim: usize) -> Result<Vec<f64>> {
        match self {
            WeightSpec::List(w) => {
                if w.len() < dim {
                    return Err(invalid(format!(
                        "{} weights supplied for dimension {dim}",
                        w.len()
                    )));
                }
                Ok(w[..dim].to_vec())
            }
            WeightSpec::PowerLaw { c, eta } => {
                if !(*c > 0.0 && *c <= 1.0) || *eta < 0.0 {
                    return Err(invalid(format!("power-law weights need 0 < c <= 1, eta >= 0 (got c={c}, eta={eta})")));
                }
                Ok((1..=dim).map(|j| c * (j as f64).powf(-eta)).collect())
            }
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        match self {
            WeightSpec::List(w) => WeightSpec::List(w.iter().map(|g| g * factor).collect()),
            WeightSpec::PowerLaw { c, eta } => WeightSpec::PowerLaw {
                c: c * factor,
                eta: *eta,
            },
        }
    }
}

/// Parses either `c=<c>,eta=<eta>` or a comma-separated list of weights.
impl FromStr for WeightSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('=') {
            let mut c = None;
            let mut eta = None;
            for part in s.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value in {part:?}")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("{value:?}: {e}")))?;
                match key.trim() {
                    "c" => c = Some(value),
                    "eta" => eta = Some(value),
                    other => return Err(Error::Parse(format!("unknown weight key {other:?}"))),
                }
            }
            Ok(WeightSpec::PowerLaw {
                c: c.unwrap_or(1.0),
                eta: eta.ok_or_else(|| Error::Parse("power-law weights need eta".into()))?,
            })
        } else {
            s.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{v:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(WeightSpec::List)
        }
    }
}

/// Config block `{ alpha, weights: [..] | {c, eta} }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub alpha: f64,
    pub weights: WeightSpec,
}

impl SpaceConfig {
    pub fn build(&self, dim: usize) -> Result<SpaceParams> {
        SpaceParams::from_spec(self.alpha, self.weights.clone(), dim)
    }
}

/// Smoothness `alpha > 1/2` and product weights `1 >= gamma_1 >= ... > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceParams {
    alpha: f64,
    gamma: Vec<f64>,
    weights: WeightSpec,
}

impl SpaceParams {
    pub fn new(alpha: f64, gamma: Vec<f64>) -> Result<Self> {
        let dim = gamma.len();
        Self::from_spec(alpha, WeightSpec::List(gamma), dim)
    }

    pub fn from_spec(alpha: f64, weights: WeightSpec, dim: usize) -> Result<Self> {
        if !(alpha > 0.5) || !alpha.is_finite() {
            return Err(invalid(format!("smoothness alpha must exceed 1/2, got {alpha}")));
        }
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let gamma = weights.weights(dim)?;
        validate_weights(&gamma)?;
        Ok(Self {
            alpha,
            gamma,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn weight_spec(&self) -> &WeightSpec {
        &self.weights
    }

    /// Same space with every weight halved.
    pub fn halved(&self) -> Self {
        Self {
            alpha: self.alpha,
            gamma: self.gamma.iter().map(|g| g / 2.0).collect(),
            weights: self.weights.scaled(0.5),
        }
    }

    /// Projection onto the first `s` coordinates.
    pub fn truncate(&self, s: usize) -> Self {
        assert!(s >= 1 && s <= self.dim());
        let weights = match &self.weights {
            WeightSpec::List(w) => WeightSpec::List(w[..s].to_vec()),
            p @ WeightSpec::PowerLaw { .. } => p.clone(),
        };
        Self {
            alpha: self.alpha,
            gamma: self.gamma[..s].to_vec(),
            weights,
        }
    }

    /// `r_{alpha,gamma_j}(k)` for a single coordinate.
    #[inline]
    pub fn r_coord(&self, j: usize, k: i64) -> f64 {
        if k == 0 {
            1.0
        } else {
            abs_pow(k.unsigned_abs(), self.alpha) / self.gamma[j]
        }
    }

    /// Per-coordinate tables of `1 / r_{alpha,gamma_j}(k)` for `0 <= k <= max_abs`.
    pub fn inverse_r_tables(&self, max_abs: u64) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| (0..=max_abs).map(|k| 1.0 / self.r_coord(j, k as i64)).collect())
            .collect()
    }

    /// `prod_j (1 + 2 gamma_j zeta(2 alpha))`, the full sum of `1/r` over `Z^d`.
    pub fn full_inverse_r_sum(&self) -> f64 {
        let z = zeta(2.0 * self.alpha);
        self.gamma.iter().map(|g| 1.0 + 2.0 * g * z).product()
    }
}

fn validate_weights(gamma: &[f64]) -> Result<()> {
    for (j, &g) in gamma.iter().enumerate() {
        if !(g > 0.0 && g <= 1.0) {
            return Err(invalid(format!("weight gamma_{} = {g} not in (0, 1]", j + 1)));
        }
        if j > 0 && g > gamma[j - 1] {
            return Err(invalid(format!(
                "weights must be non-increasing: gamma_{} = {} > gamma_{} = {}",
                j + 1,
                g,
                j,
                gamma[j - 1]
            )));
        }
    }
    Ok(())
}

/// `|k|^(2 alpha)`, exact for integer alpha at desk-scale `k`.
#[inline]
pub(crate) fn abs_pow(k: u64, alpha: f64) -> f64 {
    let two_alpha = 2.0 * alpha;
    if two_alpha == two_alpha.round() && two_alpha <= 16.0 {
        (k as f64).powi(two_alpha as i32)
    } else {
        (k as f64).powf(two_alpha)
    }
}

/// `r_{alpha,gamma}(k) = prod_j r_{alpha,gamma_j}(k_j)`.
pub fn r_weight<T: Copy + Into<i64>>(params: &SpaceParams, k: &[T]) -> f64 {
    debug_assert_eq!(k.len(), params.dim());
    k.iter()
        .enumerate()
        .map(|(j, &kj)| params.r_coord(j, kj.into()))
        .product()
}

/// Number of non-zero components.
pub fn nonzero_count<T: Copy + Into<i64>>(k: &[T]) -> u32 {
    k.iter().filter(|&&v| v.into() != 0).count() as u32
}

/// Tensor-product half-period cosine `sqrt(2)^{|k|_0} prod_j cos(pi k_j x_j)`.
pub fn cosine_basis<T: Copy + Into<i64>>(k: &[T], x: &[f64]) -> f64 {
    debug_assert_eq!(k.len(), x.len());
    k.iter()
        .zip(x)
        .map(|(&kj, &xj)| {
            let kj: i64 = kj.into();
            if kj == 0 {
                1.0
            } else {
                std::f64::consts::SQRT_2 * (PI * kj as f64 * xj).cos()
            }
        })
        .product()
}

/// Value of `S_alpha(x)` together with an upper bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Evaluation strategy for `S_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesMethod {
    /// Bernoulli closed form for alpha in {1, 2, 3}, truncated series otherwise.
    #[default]
    Auto,
    /// Always the truncated series.
    Truncated,
}

/// One-dimensional evaluator for `S_alpha(x) = sum_{h>=1} cos(2 pi h x)/h^{2 alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodicSeries {
    Closed { order: u32 },
    Truncated { alpha: f64, terms: u64, tail: f64 },
}

impl PeriodicSeries {
    pub fn new(alpha: f64, method: SeriesMethod, terms: u64, tolerance: f64) -> Result<Self> {
        if !(alpha > 0.5) {
            return Err(invalid(format!("smoothness alpha must exceed 1/2, got {alpha}")));
        }
        if method == SeriesMethod::Auto {
            if let Some(order) = closed_form_order(alpha) {
                return Ok(PeriodicSeries::Closed { order });
            }
        }
        if terms == 0 {
            return Err(invalid("series truncation must be at least 1"));
        }
        if !(tolerance > 0.0) {
            return Err(invalid("series tolerance must be positive"));
        }
        let tail = zeta_tail(2.0 * alpha, terms);
        if tail > tolerance {
            return Err(Error::SeriesTolerance {
                alpha,
                terms,
                bound: tail,
                tolerance,
            });
        }
        Ok(PeriodicSeries::Truncated { alpha, terms, tail })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PeriodicSeries::Closed { order } => periodic_series_closed(order, x),
            PeriodicSeries::Truncated { alpha, terms, .. } => periodic_series_truncated(alpha, x, terms),
        }
    }

    pub fn tail_bound(&self) -> f64 {
        match *self {
            PeriodicSeries::Closed { .. } => 0.0,
            PeriodicSeries::Truncated { tail, .. } => tail,
        }
    }
}

/// `S_alpha(x)` with default truncation settings.
pub fn one_dim_series(alpha: f64, x: f64) -> Result<SeriesValue> {
    one_dim_series_with(alpha, x, DEFAULT_SERIES_TERMS, DEFAULT_SERIES_TOLERANCE)
}

pub fn one_dim_series_with(alpha: f64, x: f64, terms: u64, tolerance: f64) -> Result<SeriesValue> {
    let s = PeriodicSeries::new(alpha, SeriesMethod::Auto, terms, tolerance)?;
    Ok(SeriesValue {
        value: s.eval(x),
        tail_bound: s.tail_bound(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Cosine,
    Korobov,
    TentedCosine,
    ShiftInvariantTented,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub params: SpaceParams,
    pub series_terms: u64,
    pub tolerance: f64,
    pub method: SeriesMethod,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, params: SpaceParams) -> Self {
        Self {
            kind,
            params,
            series_terms: DEFAULT_SERIES_TERMS,
            tolerance: DEFAULT_SERIES_TOLERANCE,
            method: SeriesMethod::Auto,
        }
    }

    pub fn with_series(mut self, method: SeriesMethod, terms: u64, tolerance: f64) -> Self {
        self.method = method;
        self.series_terms = terms;
        self.tolerance = tolerance;
        self
    }
}

/// A validated kernel ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Kernel {
    kind: KernelKind,
    weights: Vec<f64>,
    series: PeriodicSeries,
    bound: f64,
}

impl Kernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        let series = PeriodicSeries::new(spec.params.alpha(), spec.method, spec.series_terms, spec.tolerance)?;
        let weights: Vec<f64> = match spec.kind {
            KernelKind::ShiftInvariantTented => spec.params.gamma().iter().map(|g| g / 2.0).collect(),
            _ => spec.params.gamma().to_vec(),
        };
        let z = zeta(2.0 * spec.params.alpha());
        let tail = series.tail_bound();
        let (exact, perturbed) = weights.iter().fold((1.0, 1.0), |(a, b), g| {
            let factor = 1.0 + 2.0 * g * z;
            (a * factor, b * (factor + 2.0 * g * tail))
        });
        Ok(Self {
            kind: spec.kind,
            weights,
            series,
            bound: perturbed - exact,
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Upper bound on the truncation error of a single evaluation.
    pub fn truncation_bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        match self.kind {
            KernelKind::Cosine => self.cosine(x.iter().copied(), y.iter().copied()),
            KernelKind::TentedCosine => self.cosine(x.iter().map(|&v| tent(v)), y.iter().map(|&v| tent(v))),
            KernelKind::Korobov | KernelKind::ShiftInvariantTented => self.korobov(x, y),
        }
    }

    fn cosine(&self, x: impl Iterator<Item = f64>, y: impl Iterator<Item = f64>) -> f64 {
        // cos(A)cos(B) = (cos(A-B) + cos(A+B))/2 turns the half-period series
        // into S_alpha at (x-y)/2 and (x+y)/2
        self.weights
            .iter()
            .zip(x.zip(y))
            .map(|(g, (xj, yj))| {
                1.0 + g * (self.series.eval(0.5 * (xj - yj).abs()) + self.series.eval(0.5 * (xj + yj)))
            })
            .product()
    }

    fn korobov(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x.iter().zip(y))
            .map(|(g, (xj, yj))| 1.0 + 2.0 * g * self.series.eval((xj - yj).abs()))
            .product()
    }
}

/// Single kernel evaluation; see [`Kernel`] for repeated use.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(spec.params.dim(), x.len())?;
    check_dim(spec.params.dim(), y.len())?;
    Ok(Kernel::new(spec)?.eval(x, y))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// Unanchored Sobolev kernel of smoothness 1,
/// `prod_j (1 + gamma_j B1(x_j) B1(y_j) + gamma_j B2(|x_j - y_j|) / 2)`.
pub fn sobolev_kernel_eval(params: &SpaceParams, x: &[f64], y: &[f64]) -> Result<f64> {
    if params.alpha() != 1.0 {
        return Err(invalid(format!(
            "the Sobolev kernel is only defined for alpha = 1, got {}",
            params.alpha()
        )));
    }
    check_dim(params.dim(), x.len())?;
    check_dim(params.dim(), y.len())?;
    Ok(sobolev_kernel_weighted(params.gamma(), x, y))
}

/// Bernoulli-form Sobolev kernel with arbitrary positive weights.
pub fn sobolev_kernel_weighted(weights: &[f64], x: &[f64], y: &[f64]) -> f64 {
    weights
        .iter()
        .zip(x.iter().zip(y))
        .map(|(g, (&xj, &yj))| {
            1.0 + g * bernoulli_1(xj) * bernoulli_1(yj) + g * bernoulli_2((xj - yj).abs()) / 2.0
        })
        .product()
}

/// Sobolev weights under which the Bernoulli-form kernel equals the
/// cosine kernel of smoothness 1: `pi^2 gamma_j`, because the Sobolev norm
/// measures `|f'|^2 = sum pi^2 k^2 |f_hat(k)|^2` while `r` uses `k^2`.
pub fn sobolev_weights_for_cosine(params: &SpaceParams) -> Vec<f64> {
    params.gamma().iter().map(|g| PI * PI * g).collect()
}
