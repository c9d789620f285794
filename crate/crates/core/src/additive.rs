//! Additive-combinatorics predicates and constructions: the norm coloring,
//! corner-free class extraction, corner / 3-AP / triple-condition verifiers
//! that return checkable witnesses, Behrend sets and exhaustive `r_3(n)`.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, PointSet};

/// A deduplicated set of pairs `(x, y)` of lattice points of one dimension,
/// sorted lexicographically by `(x, y)`.
#[derive(Clone)]
pub struct CornerSet {
    dim: usize,
    // 2 * dim coordinates per pair: x then y
    data: Vec<i64>,
    index: FxHashSet<Box<[i64]>>,
}

impl CornerSet {
    pub fn new(dim: usize, pairs: impl IntoIterator<Item = (LatticePoint, LatticePoint)>) -> Result<Self> {
        let mut flat = Vec::new();
        for (x, y) in pairs {
            Error::check_dim(dim, x.dim())?;
            Error::check_dim(dim, y.dim())?;
            flat.extend_from_slice(&x.0);
            flat.extend_from_slice(&y.0);
        }
        Ok(Self::from_flat(dim, flat))
    }

    /// Builds from row-major `x ++ y` rows; sorts and deduplicates.
    pub fn from_flat(dim: usize, data: Vec<i64>) -> Self {
        assert!(dim >= 1, "pair dimension must be >= 1");
        assert_eq!(data.len() % (2 * dim), 0, "coordinate count not a multiple of 2*dim");
        let mut rows: Vec<&[i64]> = data.chunks_exact(2 * dim).collect();
        rows.sort_unstable();
        rows.dedup();
        let data = rows.concat();
        let index = data.chunks_exact(2 * dim).map(Box::from).collect();
        CornerSet { dim, data, index }
    }

    /// Pairs from one-dimensional integers, for small hand-written examples.
    pub fn from_ints(pairs: &[(i64, i64)]) -> Self {
        Self::from_flat(1, pairs.iter().flat_map(|&(x, y)| [x, y]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / (2 * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pair(&self, i: usize) -> (&[i64], &[i64]) {
        let row = &self.data[2 * self.dim * i..2 * self.dim * (i + 1)];
        row.split_at(self.dim)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &[i64])> + '_ {
        self.data.chunks_exact(2 * self.dim).map(|r| r.split_at(self.dim))
    }

    pub fn contains(&self, x: &[i64], y: &[i64]) -> bool {
        if x.len() != self.dim || y.len() != self.dim {
            return false;
        }
        let key: Vec<i64> = x.iter().chain(y).copied().collect();
        self.index.contains(key.as_slice())
    }

    pub fn to_pairs(&self) -> Vec<(LatticePoint, LatticePoint)> {
        self.iter().map(|(x, y)| (x.into(), y.into())).collect()
    }

    /// Projections `f1 = x`, `f2 = y`, `f3 = x + y` of all pairs.
    pub fn projections(&self) -> [PointSet; 3] {
        let mut f = [Vec::new(), Vec::new(), Vec::new()];
        for (x, y) in self.iter() {
            f[0].extend_from_slice(x);
            f[1].extend_from_slice(y);
            f[2].extend(x.iter().zip(y).map(|(a, b)| a + b));
        }
        f.map(|v| PointSet::from_flat(self.dim, v))
    }
}

impl PartialEq for CornerSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data == other.data
    }
}

impl Eq for CornerSet {}

impl fmt::Debug for CornerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for CornerSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_pairs().serialize(s)
    }
}

/// A concrete, independently checkable counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `(x, y), (x + d, y), (x, y + d)` all present, `d != 0`.
    Corner {
        x: LatticePoint,
        y: LatticePoint,
        d: LatticePoint,
    },
    /// `start, start + d, start + 2d` all present, `d != 0`.
    ThreeAp { start: LatticePoint, d: LatticePoint },
    /// `f1(a2) = f1(a3)`, `f2(a3) = f2(a1)`, `f3(a1) = f3(a2)` with the three not all equal.
    TripleCondition {
        a1: (LatticePoint, LatticePoint),
        a2: (LatticePoint, LatticePoint),
        a3: (LatticePoint, LatticePoint),
    },
    /// An edge lying in a number of triangles other than one (all triangles listed).
    Diamond { edge: (u64, u64), triangles: Vec<[u64; 3]> },
}

pub type Verdict = std::result::Result<(), Witness>;

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

impl Witness {
    /// Re-evaluates a corner or triple-condition witness against `a`.
    pub fn confirms_pairs(&self, a: &CornerSet) -> bool {
        match self {
            Witness::Corner { x, y, d } => {
                d.0.iter().any(|&v| v != 0)
                    && a.contains(&x.0, &y.0)
                    && a.contains(&add(&x.0, &d.0), &y.0)
                    && a.contains(&x.0, &add(&y.0, &d.0))
            }
            Witness::TripleCondition { a1, a2, a3 } => {
                let present = [a1, a2, a3].iter().all(|p| a.contains(&p.0 .0, &p.1 .0));
                present
                    && a2.0 == a3.0
                    && a3.1 == a1.1
                    && add(&a1.0 .0, &a1.1 .0) == add(&a2.0 .0, &a2.1 .0)
                    && !(a1 == a2 && a2 == a3)
            }
            _ => false,
        }
    }

    /// Re-evaluates a 3-AP witness against `w`.
    pub fn confirms_ap(&self, w: &PointSet) -> bool {
        match self {
            Witness::ThreeAp { start, d } => {
                let mid = add(&start.0, &d.0);
                let end = add(&mid, &d.0);
                d.0.iter().any(|&v| v != 0) && w.contains(&start.0) && w.contains(&mid) && w.contains(&end)
            }
            _ => false,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Corner { x, y, d } => write!(f, "corner at x={x:?} y={y:?} d={d:?}"),
            Witness::ThreeAp { start, d } => write!(f, "3-AP from {start:?} with d={d:?}"),
            Witness::TripleCondition { a1, a2, a3 } => write!(
                f,
                "non-diagonal triple a1=({:?},{:?}) a2=({:?},{:?}) a3=({:?},{:?})",
                a1.0, a1.1, a2.0, a2.1, a3.0, a3.1
            ),
            Witness::Diamond { edge, triangles } => write!(
                f,
                "edge {}-{} lies in {} triangles {:?}",
                edge.0,
                edge.1,
                triangles.len(),
                triangles
            ),
        }
    }
}

/// `||x - y||_2^2`.
pub fn norm_color(x: &[i64], y: &[i64]) -> Result<u64> {
    Error::check_dim(x.len(), y.len())?;
    let mut acc: u64 = 0;
    for (a, b) in x.iter().zip(y) {
        let d = a.checked_sub(*b).ok_or(Error::Overflow("norm_color"))?.unsigned_abs();
        acc = d
            .checked_mul(d)
            .and_then(|s| acc.checked_add(s))
            .ok_or(Error::Overflow("norm_color"))?;
    }
    Ok(acc)
}

/// The largest norm-color class of a pair set.
#[derive(Clone, Debug)]
pub struct ColorClass {
    pub color: u64,
    pub set: CornerSet,
    pub classes_present: usize,
    /// Class size per color, ascending by color.
    pub sizes: BTreeMap<u64, u64>,
    pub total: u64,
}

/// Partitions `a0` by [`norm_color`] and returns the largest class, ties to
/// the smallest color.
pub fn largest_cornerfree_class(a0: &CornerSet) -> Result<ColorClass> {
    extract_color_class(a0.dim(), |f| {
        for (x, y) in a0.iter() {
            f(x, y);
        }
    })
}

/// Streaming form of [`largest_cornerfree_class`]: `source` is invoked twice
/// and must replay the same pairs (without duplicates) each time.
pub fn extract_color_class<S>(dim: usize, source: S) -> Result<ColorClass>
where
    S: Fn(&mut dyn FnMut(&[i64], &[i64])),
{
    let mut hist: FxHashMap<u64, u64> = FxHashMap::default();
    let mut failure = None;
    source(&mut |x, y| match norm_color(x, y) {
        Ok(c) => *hist.entry(c).or_default() += 1,
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let sizes: BTreeMap<u64, u64> = hist.into_iter().collect();
    let total = sizes.values().sum();
    let (&color, _) = sizes
        .iter()
        .rev()
        .max_by_key(|(_, &n)| n)
        .ok_or_else(|| Error::invalid("color extraction needs a nonempty pair set"))?;
    let mut data = Vec::new();
    source(&mut |x, y| {
        if norm_color(x, y).ok() == Some(color) {
            data.extend_from_slice(x);
            data.extend_from_slice(y);
        }
    });
    Ok(ColorClass {
        color,
        set: CornerSet::from_flat(dim, data),
        classes_present: sizes.len(),
        sizes,
        total,
    })
}

/// Finds a corner `(x, y), (x + d, y), (x, y + d)`, `d != 0`, if any.
pub fn is_corner_free(a: &CornerSet) -> Verdict {
    let mut by_y: FxHashMap<&[i64], Vec<&[i64]>> = FxHashMap::default();
    for (x, y) in a.iter() {
        by_y.entry(y).or_default().push(x);
    }
    for (x, y) in a.iter() {
        for &x2 in &by_y[y] {
            if x2 == x {
                continue;
            }
            let d = sub(x2, x);
            if a.contains(x, &add(y, &d)) {
                return Err(Witness::Corner {
                    x: x.into(),
                    y: y.into(),
                    d: LatticePoint(d),
                });
            }
        }
    }
    Ok(())
}

/// Finds a nontrivial 3-term progression in `w`, if any.
pub fn is_3ap_free(w: &PointSet) -> Verdict {
    let n = w.len();
    let mut mid = vec![0i64; w.dim()];
    for i in 0..n {
        let a = w.point(i);
        for j in i + 1..n {
            let c = w.point(j);
            if a.iter().zip(c).any(|(p, q)| (p + q) % 2 != 0) {
                continue;
            }
            for k in 0..mid.len() {
                mid[k] = (a[k] + c[k]) / 2;
            }
            if w.contains(&mid) {
                return Err(Witness::ThreeAp {
                    start: a.into(),
                    d: LatticePoint(sub(&mid, a)),
                });
            }
        }
    }
    Ok(())
}

/// Search strategy for [`check_triple_condition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TripleMode {
    /// All `|A|^3` tuples; refuses when `|A|^3 > budget`.
    Brute { budget: u128 },
    /// Groups by `f3`; the third element is then determined.
    Indexed,
}

/// Checks that `f1(a2) = f1(a3)`, `f2(a3) = f2(a1)`, `f3(a1) = f3(a2)` forces
/// `a1 = a2 = a3`. Both modes report the first violation in the order
/// `(a1, a2, a3)` over the sorted pairs.
pub fn check_triple_condition(a: &CornerSet, mode: TripleMode) -> Result<Verdict> {
    let n = a.len();
    let witness = |a1: (&[i64], &[i64]), a2: (&[i64], &[i64]), a3: (&[i64], &[i64])| {
        let lp = |p: (&[i64], &[i64])| (LatticePoint::from(p.0), LatticePoint::from(p.1));
        Witness::TripleCondition {
            a1: lp(a1),
            a2: lp(a2),
            a3: lp(a3),
        }
    };
    match mode {
        TripleMode::Brute { budget } => {
            let cube = (n as u128).pow(3);
            if cube > budget {
                return Err(Error::Budget {
                    what: "triple-condition tuples",
                    requested: cube,
                    limit: budget,
                });
            }
            for i in 0..n {
                let a1 = a.pair(i);
                for j in 0..n {
                    let a2 = a.pair(j);
                    if add(a1.0, a1.1) != add(a2.0, a2.1) {
                        continue;
                    }
                    for k in 0..n {
                        let a3 = a.pair(k);
                        if a2.0 == a3.0 && a3.1 == a1.1 && !(i == j && j == k) {
                            return Ok(Err(witness(a1, a2, a3)));
                        }
                    }
                }
            }
            Ok(Ok(()))
        }
        TripleMode::Indexed => {
            let mut by_sum: FxHashMap<Vec<i64>, Vec<usize>> = FxHashMap::default();
            for (i, (x, y)) in a.iter().enumerate() {
                by_sum.entry(add(x, y)).or_default().push(i);
            }
            for i in 0..n {
                let a1 = a.pair(i);
                for &j in &by_sum[&add(a1.0, a1.1)] {
                    let a2 = a.pair(j);
                    // a3 = (x2, y1) is forced
                    if i != j && a.contains(a2.0, a1.1) {
                        return Ok(Err(witness(a1, a2, (a2.0, a1.1))));
                    }
                }
            }
            Ok(Ok(()))
        }
    }
}

/// A 3-AP-free subset of `{1, ..., n}` built from a sphere level of a digit
/// expansion: integers whose base-`(2d - 1)` digits are all below `d` and whose
/// digit squares have a fixed sum. Scans bases and keeps the largest level.
pub fn behrend_set(n: u64) -> PointSet {
    let mut best: Vec<i64> = if n >= 1 { vec![1] } else { Vec::new() };
    if n >= 2 {
        let d_max = ((n as f64).ln().sqrt().exp().ceil() as u64) + 2;
        for d in 2..=d_max {
            if let Some(level) = behrend_level(n, d) {
                if level.len() > best.len() {
                    best = level;
                }
            }
        }
    }
    PointSet::from_flat(1, best)
}

// largest digit-sphere level for digit bound d, with maximal length k
fn behrend_level(n: u64, d: u64) -> Option<Vec<i64>> {
    let base = 2 * d - 1;
    // k digits reach (base^k - 1) / 2, shifted up by one
    let mut k = 0u32;
    while let Some(p) = base.checked_pow(k + 1) {
        if (p - 1) / 2 + 1 > n {
            break;
        }
        k += 1;
    }
    if k == 0 {
        return None;
    }
    let mut levels: BTreeMap<u64, Vec<i64>> = BTreeMap::new();
    let mut digits = vec![0u64; k as usize];
    loop {
        let value = digits.iter().rev().fold(0u64, |acc, &g| acc * base + g);
        let norm = digits.iter().map(|g| g * g).sum();
        levels.entry(norm).or_default().push(value as i64 + 1);
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return levels
                    .into_values()
                    .rev()
                    .max_by_key(|v| v.len());
            }
            digits[pos] += 1;
            if digits[pos] < d {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Largest `n` accepted by [`r3_exhaustive`].
pub const R3_MAX_N: usize = 25;

/// `r_3(n)`, the maximum size of a 3-AP-free subset of `{1, ..., n}`, with a
/// maximizer. Exact branch and bound using the values for shorter intervals.
pub fn r3_exhaustive(n: usize) -> Result<(usize, PointSet)> {
    if n > R3_MAX_N {
        return Err(Error::OutOfRange(format!("r3_exhaustive supports n <= {R3_MAX_N}, got {n}")));
    }
    // r[m] and a maximizer (bitmask over {1..m}, bit i-1 for element i)
    let mut r = vec![0usize; n + 1];
    let mut best_mask = 0u32;
    for m in 1..=n {
        let target = r[m - 1] + 1;
        let mut found = None;
        search(m, 1, 0, 0, target, &r, &mut found);
        match found {
            Some(mask) => {
                r[m] = target;
                best_mask = mask;
            }
            None => r[m] = r[m - 1],
        }
    }
    let elems: Vec<i64> = (1..=n as i64).filter(|&i| best_mask >> (i - 1) & 1 == 1).collect();
    Ok((r[n], PointSet::from_flat(1, elems)))
}

fn search(m: usize, next: usize, mask: u32, size: usize, target: usize, r: &[usize], found: &mut Option<u32>) {
    if found.is_some() {
        return;
    }
    if size == target {
        *found = Some(mask);
        return;
    }
    if next > m {
        return;
    }
    // the whole interval [m] is only bounded by the target itself
    let rest = m - next + 1;
    let bound = if rest == m { target } else { r[rest] };
    if size + bound < target {
        return;
    }
    // include `next` if it closes no progression a < b < next
    let closes = (1..next).any(|a| {
        (a + next) % 2 == 0 && mask >> (a - 1) & 1 == 1 && mask >> ((a + next) / 2 - 1) & 1 == 1
    });
    if !closes {
        search(m, next + 1, mask | 1 << (next - 1), size + 1, target, r, found);
    }
    search(m, next + 1, mask, size, target, r, found);
}
