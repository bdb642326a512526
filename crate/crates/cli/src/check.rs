//! Invariant suite behind `latcosine check` and the `equality_checks`
//! study mode. Every check is small enough to run in a few seconds.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use latcosine::approx::{
    aliasing_bound_equality, approximate, empirical_l2_error, exact_l2_error, quadrature_level_for,
    random_cosine_polynomial, wce_upper_bound, CoefficientMap,
};
use latcosine::cbc::{cbc_construct, is_prime, parse_z_file, CbcConfig, Criterion, Engine};
use latcosine::fit::loglog_fit;
use latcosine::hypercross::{cardinality_bound, enumerate_h, scan_box};
use latcosine::lattice::{lattice_points, tented_lattice_points, GeneratingVector, PointKind, PointSet};
use latcosine::spaces::{sobolev_kernel_weighted, sobolev_weights_for_cosine, Kernel, KernelKind, KernelSpec};
use latcosine::wce::{
    cbc_error_bound, wce_cosine_tented, wce_kernel_form, wce_korobov_dual, wce_korobov_lattice, wce_rms_shifted,
};
use latcosine::{Result, SpaceParams, WeightSpec, SCHEMA};

use crate::Format;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, Check)] = &[
    ("closed-case values", closed_case),
    ("dual sums match kernel forms", oracle_equivalence),
    ("sign factor never exceeds one", sign_factor_inequality),
    ("aliasing bounds agree", aliasing_equality),
    ("exact approximation error matches quadrature", approximation_exactness),
    ("approximation error within the bound", approximation_bound),
    ("hyperbolic cross matches box scan", hypercross),
    ("plain and fast engines agree", engine_equivalence),
    ("constructed rules meet the guarantee", cbc_guarantee),
    ("cosine kernel equals Sobolev kernel", sobolev),
    ("power-law fit recovers exponents", fit_recovery),
    ("artifacts round-trip", round_trip),
];

pub fn run_checks() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

pub fn render(outcomes: &[CheckOutcome], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("check,status,detail\n");
            for o in outcomes {
                s += &format!(
                    "{},{},\"{}\"\n",
                    o.name,
                    if o.passed { "PASS" } else { "FAIL" },
                    o.detail.replace('"', "'")
                );
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string(&serde_json::json!({
                "schema": SCHEMA,
                "passed": outcomes.iter().all(|o| o.passed),
                "checks": outcomes,
            }))
            .expect("json");
            s.push('\n');
            s
        }
    }
}

fn params(alpha: f64, gamma: Vec<f64>) -> Result<SpaceParams> {
    SpaceParams::new(alpha, gamma)
}

fn closed_case() -> Result<(bool, String)> {
    let p = params(1.0, vec![1.0])?;
    let g = GeneratingVector::new(2, &[1])?;
    let kor = wce_korobov_lattice(&p, &g)?.squared_error;
    let rms = wce_rms_shifted(&p, &g, None)?.kernel_form.squared_error;
    let ok = (kor - PI * PI / 12.0).abs() < 1e-10 && (rms - PI * PI / 24.0).abs() < 1e-10;
    Ok((ok, format!("korobov {kor:.12}, rms {rms:.12}")))
}

fn small_grid() -> Result<Vec<(SpaceParams, GeneratingVector)>> {
    let mut out = Vec::new();
    for (n, z) in [(2u64, [1i64, 1]), (5, [1, 2]), (13, [1, 5])] {
        for d in 1..=2 {
            for alpha in [1.0, 2.0] {
                out.push((params(alpha, vec![1.0, 0.5][..d].to_vec())?, GeneratingVector::new(n, &z[..d])?));
            }
        }
    }
    Ok(out)
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (p, g) in small_grid()? {
        let pairs = [
            (
                wce_kernel_form(&KernelSpec::new(KernelKind::Korobov, p.clone()), &lattice_points(&g))?,
                wce_korobov_dual(&p, &g, None)?,
            ),
            (
                wce_kernel_form(&KernelSpec::new(KernelKind::Cosine, p.clone()), &tented_lattice_points(&g, None))?,
                wce_cosine_tented(&p, &g, None)?,
            ),
        ];
        for (a, b) in pairs {
            let excess = (a.squared_error - b.squared_error).abs() - a.truncation_bound - b.truncation_bound;
            worst = worst.max(excess);
        }
        let rms = wce_rms_shifted(&p, &g, None)?;
        if !rms.agrees(1e-12) {
            worst = worst.max(1.0);
        }
    }
    Ok((worst <= 1e-12, format!("largest excess over truncation bound {worst:e}")))
}

fn sign_factor_inequality() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for (p, g) in small_grid()? {
        let kor = wce_korobov_lattice(&p, &g)?.squared_error;
        let cos = wce_kernel_form(&KernelSpec::new(KernelKind::TentedCosine, p.clone()), &lattice_points(&g))?.squared_error;
        worst = worst.max(cos - kor);
    }
    Ok((worst <= 1e-12, format!("max(tented - korobov) {worst:e}")))
}

fn aliasing_equality() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (alpha, gamma, n, z, m) in [
        (1.0, vec![1.0], 2u64, vec![1i64], 4.0),
        (1.0, vec![1.0, 0.5], 13, vec![1, 5], 16.0),
        (2.0, vec![1.0, 0.5, 0.25], 7, vec![1, 2, 3], 8.0),
    ] {
        let (lhs, rhs) = aliasing_bound_equality(&params(alpha, gamma)?, &GeneratingVector::new(n, &z)?, m, 32)?;
        worst = worst.max((lhs - rhs).abs() / rhs.max(1.0));
    }
    Ok((worst <= 1e-10, format!("worst relative gap {worst:e}")))
}

fn corpus() -> Result<Vec<(SpaceParams, GeneratingVector, f64, CoefficientMap)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut out = Vec::new();
    for (p, g, m) in [
        (params(1.0, vec![1.0])?, GeneratingVector::new(7, &[1])?, 4.0),
        (params(1.0, vec![1.0, 0.5])?, GeneratingVector::new(13, &[1, 5])?, 4.0),
        (params(2.0, vec![1.0, 0.5, 0.25])?, GeneratingVector::new(17, &[1, 4, 7])?, 8.0),
    ] {
        for terms in [2, 5] {
            let f = random_cosine_polynomial(&p, 4.0 * m, terms, &mut rng)?;
            out.push((p.clone(), g.clone(), m, f));
        }
    }
    Ok(out)
}

fn approximation_exactness() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let corpus = corpus()?;
    for (p, g, m, f) in &corpus {
        let res = approximate(|x: &[f64]| f.eval(x), g, p, *m)?;
        let level = quadrature_level_for(f.max_degree().max(res.coeffs.max_degree()));
        let quad = empirical_l2_error(|x: &[f64]| f.eval(x), f.max_degree(), &res, level)?;
        worst = worst.max((exact_l2_error(f, g, p, *m)? - quad).abs());
    }
    Ok((worst <= 1e-9, format!("{} functions, worst gap {worst:e}", corpus.len())))
}

fn approximation_bound() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for (p, g, m, f) in corpus()? {
        worst = worst.max(exact_l2_error(&f, &g, &p, m)? - wce_upper_bound(&p, &g, m, 32)?.value());
    }
    Ok((worst <= 1e-10, format!("max(error - bound) {worst:e}")))
}

fn hypercross() -> Result<(bool, String)> {
    let mut cases = 0;
    for alpha in [1.0, 2.0] {
        for gamma in [vec![1.0, 0.5], vec![1.0, 1.0, 0.3]] {
            let p = params(alpha, gamma)?;
            for m in [1.0f64, 7.0, 50.0] {
                let radius = m.powf(0.5 / alpha).ceil() as i32 + 1;
                let h = enumerate_h(&p, m, false)?;
                let ht = enumerate_h(&p, m, true)?;
                let signed: usize = h.iter().map(|k| 1usize << k.iter().filter(|&&v| v != 0).count()).sum();
                let mut scanned = scan_box(&p, m, true, radius);
                scanned.sort();
                if ht.to_vecs() != scanned || signed != ht.len() {
                    return Ok((false, format!("mismatch at alpha={alpha} M={m}")));
                }
                if alpha == 1.0 && ht.len() as f64 > cardinality_bound(&p, m, 1.0)? {
                    return Ok((false, format!("cardinality bound fails at M={m}")));
                }
                cases += 1;
            }
        }
    }
    Ok((true, format!("{cases} cases")))
}

fn engine_equivalence() -> Result<(bool, String)> {
    let p = SpaceParams::from_spec(1.0, WeightSpec::PowerLaw { c: 1.0, eta: 2.0 }, 5)?;
    let mut count = 0;
    for n in (2..=101).filter(|&n| is_prime(n)) {
        let plain = cbc_construct(&CbcConfig::new(n, p.clone(), Criterion::KorobovIntegration, Engine::Plain))?;
        let fast = cbc_construct(&CbcConfig::new(n, p.clone(), Criterion::KorobovIntegration, Engine::Fast))?;
        if plain.gen != fast.gen {
            return Ok((false, format!("n={n}: {:?} vs {:?}", plain.gen.z(), fast.gen.z())));
        }
        count += 1;
    }
    Ok((true, format!("{count} primes")))
}

fn cbc_guarantee() -> Result<(bool, String)> {
    let p = SpaceParams::from_spec(1.0, WeightSpec::PowerLaw { c: 1.0, eta: 2.0 }, 6)?;
    let res = cbc_construct(&CbcConfig::new(127, p.clone(), Criterion::KorobovIntegration, Engine::Fast))?;
    let e = wce_korobov_lattice(&p, &res.gen)?.error();
    let mut tightest = f64::INFINITY;
    for lambda in [0.6, 0.75, 1.0] {
        tightest = tightest.min(cbc_error_bound(&p, 127, lambda, false)?);
    }
    Ok((e <= tightest, format!("error {e:e}, tightest bound {tightest:e}")))
}

fn sobolev() -> Result<(bool, String)> {
    let p = params(1.0, vec![0.9])?;
    let k = Kernel::new(&KernelSpec::new(KernelKind::Cosine, p.clone()))?;
    let w = sobolev_weights_for_cosine(&p);
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        for j in 0..=20 {
            let (x, y) = ([i as f64 / 20.0], [j as f64 / 20.0]);
            worst = worst.max((k.eval(&x, &y) - sobolev_kernel_weighted(&w, &x, &y)).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max difference {worst:e}")))
}

fn fit_recovery() -> Result<(bool, String)> {
    let x = [37.0, 67.0, 131.0, 257.0, 521.0];
    let y: Vec<f64> = x.iter().map(|n: &f64| 0.3 * n.powf(-1.9)).collect();
    let fit = loglog_fit(&x, &y)?;
    Ok(((fit.slope + 1.9).abs() <= 1e-10, format!("slope {:.12}", fit.slope)))
}

fn round_trip() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = GeneratingVector::new(31, &[1, 12, 7])?;
    let ps = tented_lattice_points(&g, None);
    let mut buf = Vec::new();
    ps.write_csv(&mut buf).expect("memory");
    let back = PointSet::read_csv(buf.as_slice(), PointKind::Tented)?;
    let points_ok = back == ps;
    let mut f = CoefficientMap::new(2);
    for _ in 0..5 {
        f.insert(vec![rng.random_range(0..9), rng.random_range(0..9)], rng.random::<f64>() / 3.0)?;
    }
    let mut buf = Vec::new();
    f.write_jsonl(&mut buf).expect("memory");
    let coeffs_ok = CoefficientMap::read_jsonl(buf.as_slice(), 2)? == f;
    let p = params(1.0, vec![1.0, 0.5, 0.25])?;
    let res = cbc_construct(&CbcConfig::new(31, p, Criterion::KorobovIntegration, Engine::Plain))?;
    let z_ok = parse_z_file(&res.z_file(), 31)? == res.gen;
    Ok((
        points_ok && coeffs_ok && z_ok,
        format!("points {points_ok}, coefficients {coeffs_ok}, z-file {z_ok}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_details_and_marks_failures() {
        let outcomes = [
            CheckOutcome { name: "a", passed: true, detail: "x, \"y\"".into() },
            CheckOutcome { name: "b", passed: false, detail: String::new() },
        ];
        assert_eq!(render(&outcomes, Format::Csv), "check,status,detail\na,PASS,\"x, 'y'\"\nb,FAIL,\"\"\n");
        let v: serde_json::Value = serde_json::from_str(&render(&outcomes, Format::Json)).unwrap();
        assert_eq!(v["passed"], false);
        assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn check_names_are_unique() {
        let mut names: Vec<_> = CHECKS.iter().map(|(n, _)| *n).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
    }
}
