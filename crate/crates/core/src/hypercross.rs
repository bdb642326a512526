//! Weighted hyperbolic crosses `H_M` (non-negative octant) and `H~_M`
//! (all octants), plus the cardinality bound for `|H~_M|`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spaces::{r_weight, SpaceParams};
use crate::special::zeta;

/// Hard cap on the number of enumerated frequencies.
pub const MAX_INDEX_SET_LEN: usize = 100_000_000;

/// Relative slack on the membership test `r(k) <= M`.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// What a set of frequency vectors was enumerated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexBound {
    HyperbolicCross { m: f64, signed: bool },
    DualBox { bound: u32 },
}

/// Lexicographically sorted, duplicate-free list of integer frequency
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    dim: usize,
    indices: Vec<Vec<i32>>,
    bound: IndexBound,
}

impl IndexSet {
    pub(crate) fn from_sorted(dim: usize, indices: Vec<Vec<i32>>, bound: IndexBound) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { dim, indices, bound }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bound(&self) -> IndexBound {
        self.bound
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[i32]> + '_ {
        self.indices.iter().map(Vec::as_slice)
    }

    pub fn as_slice(&self) -> &[Vec<i32>] {
        &self.indices
    }

    pub fn to_vecs(&self) -> Vec<Vec<i32>> {
        self.indices.clone()
    }

    pub fn contains(&self, k: &[i32]) -> bool {
        self.indices.binary_search_by(|v| v.as_slice().cmp(k)).is_ok()
    }

    /// Largest absolute component over the set.
    pub fn max_abs(&self) -> u32 {
        self.iter()
            .flat_map(|k| k.iter().map(|v| v.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// One frequency vector per row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in self.iter() {
            let row: Vec<String> = k.iter().map(i32::to_string).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[inline]
pub fn within_cross(r: f64, m: f64) -> bool {
    r <= m * (1.0 + MEMBERSHIP_SLACK)
}

/// Enumerates `{k : r_{alpha,gamma}(k) <= M}` over `Z_+^d` (unsigned) or `Z^d`
/// (signed) by depth-first search with a per-coordinate radius.
pub fn enumerate_h(params: &SpaceParams, m: f64, signed: bool) -> Result<IndexSet> {
    if !(m >= 1.0) {
        return Err(invalid(format!("hyperbolic cross needs M >= 1, got {m}")));
    }
    let d = params.dim();
    let mut out = Vec::new();
    let mut k = vec![0i32; d];
    descend(params, m, signed, 0, 1.0, &mut k, &mut out)?;
    Ok(IndexSet::from_sorted(
        d,
        out,
        IndexBound::HyperbolicCross { m, signed },
    ))
}

fn descend(
    params: &SpaceParams,
    m: f64,
    signed: bool,
    level: usize,
    r_prefix: f64,
    k: &mut Vec<i32>,
    out: &mut Vec<Vec<i32>>,
) -> Result<()> {
    if level == k.len() {
        if out.len() >= MAX_INDEX_SET_LEN {
            return Err(Error::IndexSetTooLarge {
                limit: MAX_INDEX_SET_LEN,
            });
        }
        out.push(k.clone());
        return Ok(());
    }
    // every nonzero factor is >= 1, so |k_j| <= (gamma_j M / r_prefix)^(1/(2 alpha))
    let radius = (params.gamma()[level] * m / r_prefix).powf(0.5 / params.alpha()).floor() as i64 + 1;
    let radius = radius.min(i32::MAX as i64) as i32;
    let lo = if signed { -radius } else { 0 };
    for v in lo..=radius {
        let r = r_prefix * params.r_coord(level, v as i64);
        if !within_cross(r, m) {
            continue;
        }
        k[level] = v;
        descend(params, m, signed, level + 1, r, k, out)?;
    }
    k[level] = 0;
    Ok(())
}

/// `|H~_M| <= M^q prod_j (1 + 2 zeta(2 alpha q) gamma_j^q)` for `q > 1/(2 alpha)`.
pub fn cardinality_bound(params: &SpaceParams, m: f64, q: f64) -> Result<f64> {
    if !(q > 0.5 / params.alpha()) {
        return Err(invalid(format!(
            "cardinality bound needs q > 1/(2 alpha) = {}, got {q}",
            0.5 / params.alpha()
        )));
    }
    let z = zeta(2.0 * params.alpha() * q);
    Ok(m.powf(q)
        * params
            .gamma()
            .iter()
            .map(|g| 1.0 + 2.0 * z * g.powf(q))
            .product::<f64>())
}

/// Minimum of the cardinality bound over `q` values, returning `(q, bound)`.
pub fn min_cardinality_bound(params: &SpaceParams, m: f64, qs: &[f64]) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &q in qs {
        let b = cardinality_bound(params, m, q)?;
        if best.is_none_or(|(_, v)| b < v) {
            best = Some((q, b));
        }
    }
    best.ok_or_else(|| invalid("empty q grid"))
}

/// `q` grid `1/(2 alpha) + step, ..., up to q_max`.
pub fn default_q_grid(alpha: f64) -> Vec<f64> {
    let start = 0.5 / alpha;
    (1..=40).map(|i| start + i as f64 * 0.05).collect()
}

/// Exhaustive scan of the box `|k_j| <= radius` filtered by `r(k) <= M`.
/// Kept as an oracle for [`enumerate_h`].
pub fn scan_box(params: &SpaceParams, m: f64, signed: bool, radius: i32) -> Vec<Vec<i32>> {
    let d = params.dim();
    let lo = if signed { -radius } else { 0 };
    let mut k = vec![lo; d];
    let mut out = Vec::new();
    loop {
        if within_cross(r_weight(params, &k), m) {
            out.push(k.clone());
        }
        let mut j = d;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if k[j] < radius {
                k[j] += 1;
                break;
            }
            k[j] = lo;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, gamma: &[f64]) -> SpaceParams {
        SpaceParams::new(alpha, gamma.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_crosses() {
        let p = params(1.0, &[1.0]);
        let h = enumerate_h(&p, 4.0, false).unwrap();
        assert_eq!(h.to_vecs(), vec![vec![0], vec![1], vec![2]]);
        let ht = enumerate_h(&p, 4.0, true).unwrap();
        assert_eq!(ht.to_vecs(), vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]]);
        assert_eq!(ht.len(), 2 * h.len() - 1);
    }

    #[test]
    fn two_dimensional_cross() {
        let p = params(1.0, &[1.0, 1.0]);
        let h = enumerate_h(&p, 4.0, false).unwrap();
        let mut expected = vec![
            vec![0, 0],
            vec![0, 1],
            vec![0, 2],
            vec![1, 0],
            vec![2, 0],
            vec![1, 1],
            vec![1, 2],
            vec![2, 1],
        ];
        expected.sort();
        assert_eq!(h.to_vecs(), expected);
        assert!(!h.contains(&[2, 2]));
        assert!(h.contains(&[1, 2]));
    }

    #[test]
    fn rejects_small_m() {
        assert!(enumerate_h(&params(1.0, &[1.0]), 0.5, true).is_err());
    }

    #[test]
    fn cardinality_examples() {
        let p = params(1.0, &[1.0]);
        let b = cardinality_bound(&p, 4.0, 1.0).unwrap();
        assert!((b - 4.0 * (1.0 + std::f64::consts::PI.powi(2) / 3.0)).abs() < 1e-12);
        assert!(b >= 5.0);
        assert!(cardinality_bound(&p, 4.0, 0.5).is_err());
        assert!(cardinality_bound(&p, 1.0, 1.0).unwrap() >= 1.0);
        let (q, best) = min_cardinality_bound(&p, 50.0, &default_q_grid(1.0)).unwrap();
        assert!(q > 0.5 && best <= cardinality_bound(&p, 50.0, 1.0).unwrap());
    }

    #[test]
    fn csv_rows() {
        let h = enumerate_h(&params(1.0, &[1.0, 0.5]), 2.0, true).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), h.len());
        assert!(text.lines().any(|l| l == "0,0"));
    }
}
