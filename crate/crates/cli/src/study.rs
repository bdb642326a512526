//! Convergence and consistency studies driven by a JSON spec.
//!
//! CSV columns per mode:
//! - `integration_convergence`: `n,z,criterion,wce_korobov,wce_tented,wce_rms,cbc_bound`
//!   (root errors; `cbc_bound` is the smallest guarantee over the lambda grid)
//! - `approximation_convergence`: `n,M,feasible,z,criterion,wce_bound,formula_bound,corpus_max_error,note`
//!   (`wce_bound` is the root of `1/M + E`; `corpus_max_error` the root of the
//!   largest exact L2 error over seeded unit-ball test functions)
//! - `error_tables`: `n,z,quantity,kernel_form,dual_sum,truncation_bound,agrees` (squared errors)
//! - `equality_checks`: `check,status,detail`

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use latcosine::approx::{approx_error_bound_formula, exact_l2_error, max_mu, random_cosine_polynomial};
use latcosine::cbc::{approximation_criterion_exact, cbc_construct, is_prime, CbcConfig, CbcResult, Criterion, Engine};
use latcosine::fit::{loglog_fit, PowerFit};
use latcosine::lattice::{lattice_points, tented_lattice_points, GeneratingVector};
use latcosine::spaces::{KernelKind, KernelSpec};
use latcosine::wce::{
    cbc_error_bound, wce_cosine_tented, wce_kernel_form, wce_korobov_dual, wce_korobov_lattice, wce_rms_shifted,
    WceReport,
};
use latcosine::{Error, SpaceParams, WeightSpec, SCHEMA};

use crate::{check, CliError, CliResult, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMode {
    IntegrationConvergence,
    ApproximationConvergence,
    ErrorTables,
    EqualityChecks,
}

/// `M = c n^{1/(2 lambda)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MRule {
    #[serde(default = "one")]
    pub c: f64,
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn three() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub mode: StudyMode,
    #[serde(default)]
    pub n_list: Vec<u64>,
    #[serde(default = "one_dim")]
    pub d: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_weights")]
    pub weights: WeightSpec,
    #[serde(default)]
    pub m_rule: Option<MRule>,
    #[serde(default = "two")]
    pub kappa: f64,
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub seed: u64,
    /// Test functions per row in approximation studies.
    #[serde(default = "three")]
    pub corpus_size: usize,
    /// Fails the study when the fitted slope exceeds this value.
    #[serde(default)]
    pub max_slope: Option<f64>,
    /// Output prefix; `<prefix>.csv` and `<prefix>.json` are written.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

fn one_dim() -> usize {
    1
}

fn default_weights() -> WeightSpec {
    WeightSpec::PowerLaw { c: 1.0, eta: 2.0 }
}

impl StudySpec {
    pub fn params(&self) -> CliResult<SpaceParams> {
        Ok(SpaceParams::from_spec(self.alpha, self.weights.clone(), self.d)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.mode == StudyMode::EqualityChecks {
            return Ok(());
        }
        if self.n_list.is_empty() {
            return Err(CliError::Usage("n_list must not be empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("n_list must be strictly increasing".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| !is_prime(n)) {
            return Err(CliError::Usage(format!("n_list entry {n} is not prime")));
        }
        if self.mode == StudyMode::ApproximationConvergence {
            let Some(rule) = self.m_rule else {
                return Err(CliError::Usage("approximation studies need m_rule".into()));
            };
            let lo = 0.5 / self.alpha;
            if !(rule.lambda > lo && rule.lambda <= 1.0) || !(rule.c > 0.0) {
                return Err(CliError::Usage(format!(
                    "m_rule needs c > 0 and lambda in ({lo}, 1], got c = {}, lambda = {}",
                    rule.c, rule.lambda
                )));
            }
        }
        self.params().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyArtifact {
    pub csv: String,
    pub summary: serde_json::Value,
    pub passed: bool,
}

impl StudyArtifact {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("json");
        s.push('\n');
        s
    }
}

pub fn run_study(spec: &StudySpec) -> CliResult<StudyArtifact> {
    spec.validate()?;
    match spec.mode {
        StudyMode::IntegrationConvergence => integration(spec),
        StudyMode::ApproximationConvergence => approximation(spec),
        StudyMode::ErrorTables => error_tables(spec),
        StudyMode::EqualityChecks => {
            let outcomes = check::run_checks();
            let passed = outcomes.iter().all(|o| o.passed);
            Ok(StudyArtifact {
                csv: check::render(&outcomes, Format::Csv),
                summary: serde_json::json!({
                    "schema": SCHEMA,
                    "mode": spec.mode,
                    "passed": passed,
                    "checks": outcomes,
                }),
                passed,
            })
        }
    }
}

fn z_column(gen: &GeneratingVector) -> String {
    gen.z().iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

fn construct(spec: &StudySpec, params: &SpaceParams, n: u64) -> Result<CbcResult, Error> {
    let engine = spec.engine.unwrap_or(Engine::Fast);
    cbc_construct(&CbcConfig::new(n, params.clone(), Criterion::KorobovIntegration, engine))
}

fn slope_summary(x: &[f64], y: &[f64]) -> Option<PowerFit> {
    loglog_fit(x, y).ok()
}

fn slope_ok(spec: &StudySpec, fit: Option<&PowerFit>) -> bool {
    match (spec.max_slope, fit) {
        (Some(max), Some(f)) => f.slope <= max,
        (Some(_), None) => false,
        (None, _) => true,
    }
}

struct IntegrationRow {
    n: u64,
    gen: GeneratingVector,
    criterion: f64,
    korobov: f64,
    tented: f64,
    rms: f64,
    bound: f64,
}

fn integration(spec: &StudySpec) -> CliResult<StudyArtifact> {
    let params = spec.params()?;
    let rows: Vec<IntegrationRow> = spec
        .n_list
        .par_iter()
        .map(|&n| -> Result<IntegrationRow, Error> {
            let res = construct(spec, &params, n)?;
            let korobov = wce_korobov_lattice(&params, &res.gen)?.error();
            let tented = wce_kernel_form(&KernelSpec::new(KernelKind::TentedCosine, params.clone()), &lattice_points(&res.gen))?
                .error();
            let rms = wce_korobov_lattice(&params.halved(), &res.gen)?.error();
            let bound = [0.6, 0.75, 1.0]
                .iter()
                .filter(|&&l| l > 0.5 / params.alpha())
                .map(|&l| cbc_error_bound(&params, n, l, false))
                .collect::<Result<Vec<f64>, Error>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            Ok(IntegrationRow {
                n,
                criterion: *res.criterion_values.last().expect("d >= 1"),
                gen: res.gen,
                korobov,
                tented,
                rms,
                bound,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("n,z,criterion,wce_korobov,wce_tented,wce_rms,cbc_bound\n");
    for r in &rows {
        csv += &format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            r.n,
            z_column(&r.gen),
            r.criterion,
            r.korobov,
            r.tented,
            r.rms,
            r.bound
        );
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fit = |f: fn(&IntegrationRow) -> f64| slope_summary(&x, &rows.iter().map(f).collect::<Vec<_>>());
    let tented = fit(|r| r.tented);
    let within_bound = rows.iter().all(|r| r.korobov <= r.bound);
    let passed = within_bound && slope_ok(spec, tented.as_ref());
    Ok(StudyArtifact {
        csv,
        summary: serde_json::json!({
            "schema": SCHEMA,
            "mode": spec.mode,
            "spec": spec,
            "fit": {
                "wce_tented": tented,
                "wce_korobov": fit(|r| r.korobov),
                "wce_rms": fit(|r| r.rms),
            },
            "within_cbc_bound": within_bound,
            "passed": passed,
        }),
        passed,
    })
}

struct ApproxRow {
    n: u64,
    m: f64,
    outcome: Result<ApproxValues, Error>,
}

struct ApproxValues {
    gen: GeneratingVector,
    criterion: f64,
    bound: f64,
    formula: f64,
    corpus_max: f64,
}

fn approximation(spec: &StudySpec) -> CliResult<StudyArtifact> {
    let params = spec.params()?;
    let rule = spec.m_rule.expect("validated");
    let lambda = rule.lambda;
    let rows: Vec<ApproxRow> = spec
        .n_list
        .par_iter()
        .enumerate()
        .map(|(row, &n)| {
            let m = rule.c * (n as f64).powf(0.5 / lambda);
            let outcome = (|| -> Result<ApproxValues, Error> {
                let mut cfg = CbcConfig::new(n, params.clone(), Criterion::ApproximationE, Engine::Plain).with_m(m);
                cfg.kappa = spec.kappa;
                let res = cbc_construct(&cfg)?;
                let e = approximation_criterion_exact(&params, &res.gen, m)?;
                let formula = approx_error_bound_formula(&params, n, m, lambda, lambda, max_mu(spec.kappa, params.alpha()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(row as u64);
                let mut corpus_max: f64 = 0.0;
                for i in 0..spec.corpus_size {
                    let f = random_cosine_polynomial(&params, 4.0 * m, 3 + i, &mut rng)?;
                    corpus_max = corpus_max.max(exact_l2_error(&f, &res.gen, &params, m)?);
                }
                Ok(ApproxValues {
                    gen: res.gen,
                    criterion: e,
                    bound: (1.0 / m + e).sqrt(),
                    formula: formula.sqrt(),
                    corpus_max: corpus_max.sqrt(),
                })
            })();
            ApproxRow { n, m, outcome }
        })
        .collect();
    let mut csv = String::from("n,M,feasible,z,criterion,wce_bound,formula_bound,corpus_max_error,note\n");
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut consistent = true;
    for r in &rows {
        match &r.outcome {
            Ok(v) => {
                csv += &format!(
                    "{},{:.17e},true,{},{:.17e},{:.17e},{:.17e},{:.17e},\n",
                    r.n,
                    r.m,
                    z_column(&v.gen),
                    v.criterion,
                    v.bound,
                    v.formula,
                    v.corpus_max
                );
                consistent &= v.corpus_max <= v.bound && v.bound <= v.formula;
                x.push(r.n as f64);
                y.push(v.bound);
            }
            Err(e @ Error::Infeasible(_)) => {
                csv += &format!("{},{:.17e},false,,,,,,\"{e}\"\n", r.n, r.m);
            }
            Err(e) => return Err(CliError::Numerical(e.clone())),
        }
    }
    let fit = slope_summary(&x, &y);
    let passed = consistent && slope_ok(spec, fit.as_ref());
    Ok(StudyArtifact {
        csv,
        summary: serde_json::json!({
            "schema": SCHEMA,
            "mode": spec.mode,
            "spec": spec,
            "fit": { "wce_bound": fit },
            "bounds_consistent": consistent,
            "feasible_rows": x.len(),
            "passed": passed,
        }),
        passed,
    })
}

fn error_tables(spec: &StudySpec) -> CliResult<StudyArtifact> {
    let params = spec.params()?;
    type Table = (u64, GeneratingVector, Vec<(&'static str, WceReport, WceReport)>);
    let tables: Vec<Table> = spec
        .n_list
        .par_iter()
        .map(|&n| -> Result<Table, Error> {
            let gen = construct(spec, &params, n)?.gen;
            let rms = wce_rms_shifted(&params, &gen, None)?;
            let rows = vec![
                (
                    "korobov",
                    wce_kernel_form(&KernelSpec::new(KernelKind::Korobov, params.clone()), &lattice_points(&gen))?,
                    wce_korobov_dual(&params, &gen, None)?,
                ),
                (
                    "tented",
                    wce_kernel_form(&KernelSpec::new(KernelKind::Cosine, params.clone()), &tented_lattice_points(&gen, None))?,
                    wce_cosine_tented(&params, &gen, None)?,
                ),
                ("rms", rms.kernel_form, rms.dual_sum),
            ];
            Ok((n, gen, rows))
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("n,z,quantity,kernel_form,dual_sum,truncation_bound,agrees\n");
    let mut passed = true;
    for (n, gen, rows) in &tables {
        for (name, k, d) in rows {
            let bound = k.truncation_bound + d.truncation_bound;
            let agrees = (k.squared_error - d.squared_error).abs() <= bound + 1e-12;
            passed &= agrees;
            csv += &format!(
                "{n},{},{name},{:.17e},{:.17e},{:.17e},{agrees}\n",
                z_column(gen),
                k.squared_error,
                d.squared_error,
                bound
            );
        }
    }
    Ok(StudyArtifact {
        csv,
        summary: serde_json::json!({
            "schema": SCHEMA,
            "mode": spec.mode,
            "spec": spec,
            "passed": passed,
        }),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> StudySpec {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn spec_defaults() {
        let spec = parse(r#"{"mode":"error_tables","n_list":[31]}"#);
        assert_eq!((spec.d, spec.alpha, spec.kappa, spec.seed, spec.corpus_size), (1, 1.0, 2.0, 0, 3));
        assert_eq!(spec.weights, WeightSpec::PowerLaw { c: 1.0, eta: 2.0 });
        assert!(spec.validate().is_ok());
        let spec = parse(r#"{"mode":"approximation_convergence","n_list":[31],"m_rule":{"lambda":0.75}}"#);
        assert_eq!(spec.m_rule.unwrap().c, 1.0);
    }

    #[test]
    fn spec_validation() {
        for bad in [
            r#"{"mode":"error_tables","n_list":[]}"#,
            r#"{"mode":"error_tables","n_list":[61,31]}"#,
            r#"{"mode":"error_tables","n_list":[31,35]}"#,
            r#"{"mode":"error_tables","n_list":[31],"alpha":0.4}"#,
            r#"{"mode":"approximation_convergence","n_list":[31]}"#,
            r#"{"mode":"approximation_convergence","n_list":[31],"m_rule":{"c":0,"lambda":0.75}}"#,
        ] {
            assert!(parse(bad).validate().is_err(), "{bad}");
        }
        assert!(parse(r#"{"mode":"equality_checks"}"#).validate().is_ok());
    }

    #[test]
    fn output_path_is_not_part_of_the_summary() {
        let mut spec = parse(r#"{"mode":"error_tables","n_list":[7],"d":2}"#);
        let a = run_study(&spec).unwrap();
        spec.output = Some("/somewhere/else".into());
        assert_eq!(run_study(&spec).unwrap(), a);
        assert!(a.passed);
        assert_eq!(a.csv.lines().count(), 4);
    }
}
