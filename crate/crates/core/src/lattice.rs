//! Rank-1 lattice point sets, shifts, the tent transform and dual-lattice
//! queries.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypercross::{IndexBound, IndexSet};

/// Generating vector `z` of an `n`-point rank-1 lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratingVector {
    n: u64,
    z: Vec<u64>,
}

impl GeneratingVector {
    /// Components are reduced mod `n`; negative entries are allowed on input.
    pub fn new(n: u64, z: &[i64]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("number of points must be at least 1"));
        }
        if z.is_empty() {
            return Err(invalid("generating vector must have dimension >= 1"));
        }
        let z = z.iter().map(|&c| reduce(c, n)).collect();
        Ok(Self { n, z })
    }

    pub fn from_unsigned(n: u64, z: Vec<u64>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("number of points must be at least 1"));
        }
        if z.is_empty() {
            return Err(invalid("generating vector must have dimension >= 1"));
        }
        Ok(Self {
            n,
            z: z.into_iter().map(|c| c % n).collect(),
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Restriction to the first `s` components.
    pub fn truncate(&self, s: usize) -> Self {
        assert!(s >= 1 && s <= self.dim());
        Self {
            n: self.n,
            z: self.z[..s].to_vec(),
        }
    }

    /// `h . z mod n`, accumulated modulo `n` so no overflow can occur.
    pub fn residue(&self, h: &[i64]) -> u64 {
        debug_assert_eq!(h.len(), self.dim());
        let n = self.n as u128;
        h.iter()
            .zip(&self.z)
            .fold(0u128, |acc, (&hj, &zj)| {
                (acc + reduce(hj, self.n) as u128 * zj as u128) % n
            }) as u64
    }
}

#[inline]
fn reduce(v: i64, n: u64) -> u64 {
    (v as i128).rem_euclid(n as i128) as u64
}

/// Shift vector with components in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shift(Vec<f64>);

impl Shift {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if let Some(bad) = delta.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return Err(invalid(format!("shift component {bad} not in [0, 1)")));
        }
        Ok(Self(delta))
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    Plain,
    Shifted,
    Tented,
    ShiftedTented,
}

/// Ordered multiset of points in `[0,1]^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    kind: PointKind,
}

impl PointSet {
    pub fn from_rows(rows: &[Vec<f64>], kind: PointKind) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(invalid("point set must be non-empty with dimension >= 1"));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                return Err(invalid(format!("coordinate {bad} outside [0, 1]")));
            }
            coords.extend_from_slice(row);
        }
        Ok(Self { dim, coords, kind })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// One point per row, 17 significant digits, no header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, kind: PointKind) -> Result<Self> {
        let mut rows = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows, kind)
    }
}

/// Point `i` (for `i = 1..=n`) is `(i z / n) mod 1`; `i = n` is the origin.
pub fn lattice_points(gen: &GeneratingVector) -> PointSet {
    let n = gen.n();
    let d = gen.dim();
    let mut coords = Vec::with_capacity(n as usize * d);
    for i in 1..=n {
        for &zj in gen.z() {
            let m = (i as u128 * zj as u128 % n as u128) as u64;
            coords.push(m as f64 / n as f64);
        }
    }
    PointSet {
        dim: d,
        coords,
        kind: PointKind::Plain,
    }
}

/// Tent transform `1 - |2x - 1|`.
#[inline]
pub fn tent(x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x), "tent argument {x} outside [0, 1]");
    1.0 - (2.0 * x - 1.0).abs()
}

/// Shift (mod 1) and then tent-transform a plain point set. Multiset
/// collisions are kept.
pub fn transform_points(ps: &PointSet, shift: Option<&Shift>, apply_tent: bool) -> Result<PointSet> {
    if ps.kind != PointKind::Plain {
        return Err(invalid("transform_points expects a plain point set"));
    }
    if let Some(s) = shift {
        if s.dim() != ps.dim {
            return Err(Error::DimensionMismatch {
                expected: ps.dim,
                got: s.dim(),
            });
        }
    }
    let kind = match (shift.is_some(), apply_tent) {
        (false, false) => PointKind::Plain,
        (true, false) => PointKind::Shifted,
        (false, true) => PointKind::Tented,
        (true, true) => PointKind::ShiftedTented,
    };
    let coords = ps
        .coords
        .chunks_exact(ps.dim)
        .flat_map(|p| {
            p.iter().enumerate().map(move |(j, &t)| {
                let moved = match shift {
                    Some(s) => crate::special::frac(t + s.as_slice()[j]),
                    None => t,
                };
                if apply_tent {
                    tent(moved)
                } else {
                    moved
                }
            })
        })
        .collect();
    Ok(PointSet {
        dim: ps.dim,
        coords,
        kind,
    })
}

/// Tent-transformed lattice points, optionally shifted first.
pub fn tented_lattice_points(gen: &GeneratingVector, shift: Option<&Shift>) -> PointSet {
    transform_points(&lattice_points(gen), shift, true).expect("plain lattice with matching shift")
}

/// `h . z == 0 (mod n)`.
pub fn in_dual(h: &[i64], gen: &GeneratingVector) -> Result<bool> {
    if h.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            got: h.len(),
        });
    }
    Ok(gen.residue(h) == 0)
}

/// All dual-lattice vectors in the box `|h_j| <= bound`, in lexicographic
/// order, found by a full nested scan of the box.
pub fn enumerate_dual(gen: &GeneratingVector, bound: u32) -> Result<IndexSet> {
    if bound == 0 {
        return Err(invalid("box bound must be at least 1"));
    }
    let d = gen.dim();
    let n = gen.n() as u128;
    let b = bound as i64;
    // running residues: partial[j] = sum_{i<j} h_i z_i mod n
    let mut h = vec![-b; d];
    let mut partial = vec![0u128; d + 1];
    let contrib = |v: i64, j: usize| reduce(v, gen.n()) as u128 * gen.z()[j] as u128 % n;
    for j in 0..d {
        partial[j + 1] = (partial[j] + contrib(h[j], j)) % n;
    }
    let mut out = Vec::new();
    loop {
        if partial[d] == 0 {
            out.push(h.iter().map(|&v| v as i32).collect());
        }
        // odometer step from the last coordinate
        let mut j = d;
        loop {
            if j == 0 {
                return Ok(IndexSet::from_sorted(
                    d,
                    out,
                    IndexBound::DualBox { bound },
                ));
            }
            j -= 1;
            if h[j] < b {
                h[j] += 1;
                break;
            }
            h[j] = -b;
        }
        for i in j..d {
            partial[i + 1] = (partial[i] + contrib(h[i], i)) % n;
        }
    }
}

/// Visits dual vectors in a box without scanning the last coordinate: the
/// admissible last components are bucketed by residue.
pub struct DualScanner<'a> {
    gen: &'a GeneratingVector,
    bound: i64,
    offsets: Vec<usize>,
    last: Vec<i64>,
}

impl<'a> DualScanner<'a> {
    pub fn new(gen: &'a GeneratingVector, bound: u32) -> Self {
        let n = gen.n() as usize;
        let b = bound as i64;
        let zd = *gen.z().last().expect("dim >= 1");
        let mut counts = vec![0usize; n + 1];
        let res = |v: i64| (reduce(v, gen.n()) as u128 * zd as u128 % gen.n() as u128) as usize;
        for v in -b..=b {
            counts[res(v) + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut last = vec![0i64; (2 * b + 1) as usize];
        for v in -b..=b {
            let r = res(v);
            last[fill[r]] = v;
            fill[r] += 1;
        }
        Self {
            gen,
            bound: b,
            offsets,
            last,
        }
    }

    fn bucket(&self, residue: u64) -> &[i64] {
        let n = self.gen.n();
        let want = ((n - residue % n) % n) as usize;
        &self.last[self.offsets[want]..self.offsets[want + 1]]
    }

    /// Visit every dual vector in the box, lexicographically.
    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        let d = self.gen.dim();
        let mut h = vec![0i64; d];
        if d == 1 {
            for &v in self.bucket(0) {
                h[0] = v;
                f(&h);
            }
            return;
        }
        for first in -self.bound..=self.bound {
            self.for_each_with_first(first, &mut h, &mut f);
        }
    }

    /// Visit the dual vectors whose first component equals `first` (d >= 2).
    pub fn for_each_with_first(&self, first: i64, h: &mut [i64], f: &mut impl FnMut(&[i64])) {
        let d = self.gen.dim();
        debug_assert!(d >= 2);
        h[0] = first;
        let r0 = self.contrib(first, 0);
        self.descend(1, r0, h, f);
    }

    fn contrib(&self, v: i64, j: usize) -> u64 {
        let n = self.gen.n();
        (reduce(v, n) as u128 * self.gen.z()[j] as u128 % n as u128) as u64
    }

    fn descend(&self, level: usize, residue: u64, h: &mut [i64], f: &mut impl FnMut(&[i64])) {
        let d = h.len();
        if level == d - 1 {
            for &v in self.bucket(residue) {
                h[level] = v;
                f(h);
            }
            return;
        }
        let n = self.gen.n();
        for v in -self.bound..=self.bound {
            h[level] = v;
            let r = (residue + self.contrib(v, level)) % n;
            self.descend(level + 1, r, h, f);
        }
    }

    /// Deterministic parallel sum of `term(h)` over the dual vectors in the
    /// box: partial sums per first component are reduced in index order.
    pub fn sum<F>(&self, term: F) -> f64
    where
        F: Fn(&[i64]) -> f64 + Sync,
    {
        let d = self.gen.dim();
        if d == 1 {
            let mut acc = 0.0;
            self.for_each(|h| acc += term(h));
            return acc;
        }
        let partials: Vec<f64> = (-self.bound..=self.bound)
            .into_par_iter()
            .map(|first| {
                let mut h = vec![0i64; d];
                let mut acc = 0.0;
                self.for_each_with_first(first, &mut h, &mut |v: &[i64]| acc += term(v));
                acc
            })
            .collect();
        partials.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gv(n: u64, z: &[i64]) -> GeneratingVector {
        GeneratingVector::new(n, z).unwrap()
    }

    fn close(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(p, q)| p.iter().zip(q).all(|(x, y)| (x - y).abs() < 1e-15))
    }

    #[test]
    fn points_of_small_lattices() {
        let ps = lattice_points(&gv(4, &[1, 3]));
        assert!(close(
            &ps.to_rows(),
            &[vec![0.25, 0.75], vec![0.5, 0.5], vec![0.75, 0.25], vec![0.0, 0.0]]
        ));
        let ps = lattice_points(&gv(1, &[0, 0, 0]));
        assert_eq!(ps.to_rows(), vec![vec![0.0, 0.0, 0.0]]);
        let ps = lattice_points(&gv(5, &[1, 2]));
        assert!(close(
            &ps.to_rows(),
            &[
                vec![0.2, 0.4],
                vec![0.4, 0.8],
                vec![0.6, 0.2],
                vec![0.8, 0.6],
                vec![0.0, 0.0]
            ]
        ));
    }

    #[test]
    fn tent_values() {
        assert_eq!(tent(0.0), 0.0);
        assert_eq!(tent(0.5), 1.0);
        assert_eq!(tent(0.25), 0.5);
        assert_eq!(tent(0.75), 0.5);
        assert_eq!(tent(1.0), 0.0);
    }

    #[test]
    fn transforms() {
        let plain = lattice_points(&gv(4, &[1, 3]));
        let tented = transform_points(&plain, None, true).unwrap();
        assert_eq!(tented.kind(), PointKind::Tented);
        assert_eq!(
            tented.to_rows(),
            vec![vec![0.5, 0.5], vec![1.0, 1.0], vec![0.5, 0.5], vec![0.0, 0.0]]
        );
        let same = transform_points(&plain, Some(&Shift::zero(2)), false).unwrap();
        assert_eq!(same.to_rows(), plain.to_rows());

        let one = lattice_points(&gv(2, &[1]));
        let st = transform_points(&one, Some(&Shift::new(vec![0.25]).unwrap()), true).unwrap();
        assert_eq!(st.to_rows(), vec![vec![0.5], vec![0.5]]);
        assert_eq!(st.kind(), PointKind::ShiftedTented);

        assert!(transform_points(&tented, None, true).is_err());
        assert!(transform_points(&plain, Some(&Shift::zero(3)), true).is_err());
    }

    #[test]
    fn shift_rejects_out_of_range() {
        assert!(Shift::new(vec![1.0]).is_err());
        assert!(Shift::new(vec![-0.1]).is_err());
        assert!(Shift::new(vec![0.0, 0.999]).is_ok());
    }

    #[test]
    fn dual_membership() {
        let g = gv(4, &[1, 3]);
        assert!(in_dual(&[1, 1], &g).unwrap());
        assert!(in_dual(&[0, 0], &g).unwrap());
        assert!(!in_dual(&[1, 0], &g).unwrap());
        assert!(in_dual(&[1], &g).is_err());
        // large components must not overflow
        assert!(in_dual(&[i64::MAX, i64::MIN], &gv(7, &[3, 5])).is_ok());
    }

    #[test]
    fn dual_enumeration_examples() {
        let s = enumerate_dual(&gv(2, &[1]), 4).unwrap();
        assert_eq!(s.to_vecs(), vec![vec![-4], vec![-2], vec![0], vec![2], vec![4]]);
        let s = enumerate_dual(&gv(1, &[5, 7]), 1).unwrap();
        assert_eq!(s.len(), 9);
        let s = enumerate_dual(&gv(4, &[1, 3]), 1).unwrap();
        assert_eq!(s.to_vecs(), vec![vec![-1, -1], vec![0, 0], vec![1, 1]]);
        assert!(enumerate_dual(&gv(4, &[1, 3]), 0).is_err());
    }

    #[test]
    fn scanner_matches_full_scan() {
        for (n, z) in [(1u64, vec![0i64, 0]), (7, vec![1, 3]), (12, vec![1, 5, 7]), (13, vec![2, 0, 6]), (5, vec![3])] {
            let g = gv(n, &z);
            let oracle = enumerate_dual(&g, 5).unwrap().to_vecs();
            let mut seen = Vec::new();
            DualScanner::new(&g, 5).for_each(|h| seen.push(h.iter().map(|&v| v as i32).collect::<Vec<_>>()));
            assert_eq!(seen, oracle, "n={n} z={z:?}");
            let count = DualScanner::new(&g, 5).sum(|_| 1.0);
            assert_eq!(count as usize, oracle.len());
        }
    }

    #[test]
    fn csv_round_trip() {
        let ps = tented_lattice_points(&gv(7, &[1, 3, 2]), Some(&Shift::new(vec![0.1, 0.2, 0.3]).unwrap()));
        let mut buf = Vec::new();
        ps.write_csv(&mut buf).unwrap();
        let back = PointSet::read_csv(buf.as_slice(), ps.kind()).unwrap();
        assert_eq!(back, ps);
    }
}
