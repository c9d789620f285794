//! Integer-lattice geometry: points and point sets in `Z^D`, exact ball
//! enumeration, additive-triple counting, and the random-shift search that
//! places a continuous body so that it captures many lattice points.
//!
//! All membership decisions are made in exact integer arithmetic. Ball
//! centers and squared radii are rationals; a ball is normalized once to the
//! integer test `sum_i (L p_i - c_i)^2 <= bound` with a common denominator `L`.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Shifts are drawn on the dyadic grid `k / 2^SHIFT_BITS`.
pub const SHIFT_BITS: u32 = 20;
/// Real squared radii are rounded down to denominator `2^RADIUS_BITS`.
pub const RADIUS_BITS: u32 = 40;

/// Resource caps for enumeration and pair scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Maximum number of lattice points scanned when enumerating one body.
    pub points: u128,
    /// Maximum `|X| * |Y|` for a pair scan.
    pub pairs: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            points: 10_000_000,
            pairs: 4_000_000_000,
        }
    }
}

impl Budget {
    pub fn check_points(&self, requested: u128) -> Result<()> {
        if requested > self.points {
            return Err(Error::Budget {
                what: "enumeration points",
                requested,
                limit: self.points,
            });
        }
        Ok(())
    }

    pub fn check_pairs(&self, requested: u128) -> Result<()> {
        if requested > self.pairs {
            return Err(Error::Budget {
                what: "pair scan",
                requested,
                limit: self.pairs,
            });
        }
        Ok(())
    }
}

/// A point of `Z^D`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        LatticePoint(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&[i64]> for LatticePoint {
    fn from(p: &[i64]) -> Self {
        LatticePoint(p.to_vec())
    }
}

/// Anything that can answer "is this lattice point in the set?".
pub trait Membership: Sync {
    fn dim(&self) -> usize;
    fn contains(&self, p: &[i64]) -> bool;
}

/// Adapts a closure into a [`Membership`] test.
pub struct Predicate<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[i64]) -> bool + Sync> Predicate<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Predicate { dim, f }
    }
}

impl<F: Fn(&[i64]) -> bool + Sync> Membership for Predicate<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, p: &[i64]) -> bool {
        (self.f)(p)
    }
}

// ----------------------------------------------------------------------------
// Volumes
// ----------------------------------------------------------------------------

/// Lebesgue measure of the `dim`-dimensional Euclidean ball of the given radius.
pub fn ball_volume(dim: usize, radius: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("ball_volume: dim must be >= 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("ball_volume: radius must be positive"));
    }
    let d = dim as f64;
    Ok((log_unit_ball_volume(dim) + d * radius.ln()).exp())
}

/// Inverse of [`ball_volume`] in the radius.
pub fn radius_for_volume(dim: usize, volume: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::invalid("radius_for_volume: dim must be >= 1"));
    }
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(Error::invalid("radius_for_volume: volume must be positive"));
    }
    let d = dim as f64;
    Ok(((volume.ln() - log_unit_ball_volume(dim)) / d).exp())
}

fn log_unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    half * std::f64::consts::PI.ln() - ln_gamma(half + 1.0)
}

// ----------------------------------------------------------------------------
// Balls with exact membership
// ----------------------------------------------------------------------------

/// A closed Euclidean ball with rational center and rational squared radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallSpec {
    radius_sq: Ratio<i128>,
    center: Vec<Ratio<i128>>,
    // normalized test: sum_i (scale * p_i - scaled_center_i)^2 <= bound
    scale: i128,
    scaled_center: Vec<i128>,
    bound: i128,
}

impl BallSpec {
    pub fn new(center: Vec<Ratio<i128>>, radius_sq: Ratio<i128>) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("ball dimension must be >= 1"));
        }
        if radius_sq < Ratio::from_integer(0) {
            return Err(Error::invalid("radius_sq must be >= 0"));
        }
        let scale = center.iter().fold(1i128, |acc, c| acc.lcm(c.denom()));
        let scaled_center = center
            .iter()
            .map(|c| {
                c.numer()
                    .checked_mul(scale / c.denom())
                    .ok_or(Error::Overflow("ball center"))
            })
            .collect::<Result<Vec<_>>>()?;
        let bound = scale
            .checked_mul(scale)
            .and_then(|l2| radius_sq.numer().checked_mul(l2))
            .ok_or(Error::Overflow("ball radius"))?;
        let bound = Integer::div_floor(&bound, radius_sq.denom());
        Ok(BallSpec {
            radius_sq,
            center,
            scale,
            scaled_center,
            bound,
        })
    }

    /// Ball around the origin.
    pub fn centered(dim: usize, radius_sq: Ratio<i128>) -> Result<Self> {
        Self::new(vec![Ratio::from_integer(0); dim], radius_sq)
    }

    /// Ball around the origin whose squared radius is `radius^2` rounded down
    /// to denominator `2^RADIUS_BITS`.
    pub fn from_radius(dim: usize, radius: f64) -> Result<Self> {
        Self::centered(dim, rational_radius_sq(radius)?)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn radius_sq(&self) -> Ratio<i128> {
        self.radius_sq
    }

    pub fn center(&self) -> &[Ratio<i128>] {
        &self.center
    }

    /// The ball translated by `shift`.
    pub fn translated(&self, shift: &[Ratio<i128>]) -> Result<Self> {
        Error::check_dim(self.dim(), shift.len())?;
        let center = self
            .center
            .iter()
            .zip(shift)
            .map(|(c, s)| c + s)
            .collect();
        Self::new(center, self.radius_sq)
    }

    /// Integer bounding box, one inclusive range per axis.
    pub fn bounding_box(&self) -> Vec<(i64, i64)> {
        let s = isqrt(self.bound);
        self.scaled_center
            .iter()
            .map(|&c| axis_range(c, s, self.scale))
            .collect()
    }

    fn box_volume(&self) -> u128 {
        self.bounding_box()
            .iter()
            .fold(1u128, |acc, &(lo, hi)| {
                acc.saturating_mul((hi - lo + 1).max(0) as u128)
            })
    }
}

impl Membership for BallSpec {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[i64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        let mut acc: i128 = 0;
        for (&x, &c) in p.iter().zip(&self.scaled_center) {
            let d = (x as i128).saturating_mul(self.scale).saturating_sub(c);
            acc = acc.saturating_add(d.saturating_mul(d));
            if acc > self.bound {
                return false;
            }
        }
        true
    }
}

/// `radius^2` rounded down to denominator `2^RADIUS_BITS`.
pub fn rational_radius_sq(radius: f64) -> Result<Ratio<i128>> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius must be finite and >= 0"));
    }
    let scaled = (radius * radius) * (1u64 << RADIUS_BITS) as f64;
    if scaled >= i128::MAX as f64 {
        return Err(Error::Overflow("radius"));
    }
    Ok(Ratio::new(scaled.floor() as i128, 1i128 << RADIUS_BITS))
}

fn isqrt(v: i128) -> i128 {
    if v <= 0 {
        0
    } else {
        (v as u128).isqrt() as i128
    }
}

// lattice p with |scale * p - c| <= s
fn axis_range(c: i128, s: i128, scale: i128) -> (i64, i64) {
    let lo = Integer::div_ceil(&(c - s), &scale);
    let hi = Integer::div_floor(&(c + s), &scale);
    (clamp_i64(lo), clamp_i64(hi))
}

fn clamp_i64(v: i128) -> i64 {
    v.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

/// All lattice points of the closed ball, in lexicographic order.
pub fn enumerate_ball(spec: &BallSpec, budget: &Budget) -> Result<PointSet> {
    budget.check_points(spec.box_volume())?;
    let dim = spec.dim();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(dim);
    enumerate_axis(spec, 0, spec.bound, &mut cur, &mut out);
    Ok(PointSet::from_sorted_flat(dim, out))
}

fn enumerate_axis(spec: &BallSpec, axis: usize, rem: i128, cur: &mut Vec<i64>, out: &mut Vec<i64>) {
    let c = spec.scaled_center[axis];
    let (lo, hi) = axis_range(c, isqrt(rem), spec.scale);
    let last = axis + 1 == spec.dim();
    for p in lo..=hi {
        let d = p as i128 * spec.scale - c;
        let left = rem - d * d;
        if left < 0 {
            continue;
        }
        cur.push(p);
        if last {
            out.extend_from_slice(cur);
        } else {
            enumerate_axis(spec, axis + 1, left, cur, out);
        }
        cur.pop();
    }
}

// ----------------------------------------------------------------------------
// Point sets
// ----------------------------------------------------------------------------

/// A deduplicated, lexicographically sorted set of lattice points of one
/// dimension, with constant-time membership.
#[derive(Clone)]
pub struct PointSet {
    dim: usize,
    coords: Vec<i64>,
    index: Index,
}

#[derive(Clone)]
enum Index {
    Dense {
        lo: Vec<i64>,
        extent: Vec<u64>,
        bits: Vec<u64>,
    },
    Hashed(FxHashSet<Box<[i64]>>),
}

const DENSE_MAX_CELLS: u128 = 1 << 28;

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        Self::from_sorted_flat(dim, Vec::new())
    }

    pub fn new(dim: usize, points: impl IntoIterator<Item = LatticePoint>) -> Result<Self> {
        let mut flat = Vec::new();
        for p in points {
            Error::check_dim(dim, p.dim())?;
            flat.extend_from_slice(&p.0);
        }
        Ok(Self::from_flat(dim, flat))
    }

    /// Builds a set from row-major coordinates; sorts and deduplicates.
    pub fn from_flat(dim: usize, coords: Vec<i64>) -> Self {
        assert!(dim >= 1, "point dimension must be >= 1");
        assert_eq!(coords.len() % dim, 0, "coordinate count not a multiple of dim");
        let mut rows: Vec<&[i64]> = coords.chunks_exact(dim).collect();
        rows.sort_unstable();
        rows.dedup();
        let sorted = rows.concat();
        Self::from_sorted_flat(dim, sorted)
    }

    pub(crate) fn from_sorted_flat(dim: usize, coords: Vec<i64>) -> Self {
        debug_assert!(coords
            .chunks_exact(dim)
            .zip(coords.chunks_exact(dim).skip(1))
            .all(|(a, b)| a < b));
        let index = build_index(dim, &coords);
        PointSet { dim, coords, index }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, i64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<LatticePoint> {
        self.iter().map(LatticePoint::from).collect()
    }

    pub fn flat(&self) -> &[i64] {
        &self.coords
    }

    /// Rank of `p` in the sorted order.
    pub fn position(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dim {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.point(mid).cmp(p) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        if p.len() != self.dim {
            return false;
        }
        match &self.index {
            Index::Dense { lo, extent, bits } => {
                let mut cell: u64 = 0;
                for ((&x, &l), &e) in p.iter().zip(lo).zip(extent) {
                    let off = x.wrapping_sub(l) as u64;
                    if x < l || off >= e {
                        return false;
                    }
                    cell = cell * e + off;
                }
                bits[(cell / 64) as usize] >> (cell % 64) & 1 == 1
            }
            Index::Hashed(set) => set.contains(p),
        }
    }

    /// Per-axis inclusive coordinate ranges; `None` for the empty set.
    pub fn bounds(&self) -> Option<Vec<(i64, i64)>> {
        bounds_of(self.dim, &self.coords)
    }

    /// The set translated by `v`.
    pub fn translated(&self, v: &[i64]) -> Result<Self> {
        Error::check_dim(self.dim, v.len())?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        // translation preserves lexicographic order
        Ok(Self::from_sorted_flat(self.dim, coords))
    }

    /// Splits into `parts` consecutive runs of the sorted order, sizes
    /// differing by at most one (larger runs first).
    pub fn split_sorted(&self, parts: usize) -> Vec<PointSet> {
        let parts = parts.max(1);
        let n = self.len();
        let (q, r) = (n / parts, n % parts);
        let mut start = 0;
        (0..parts)
            .map(|i| {
                let len = q + usize::from(i < r);
                let piece = self.coords[start * self.dim..(start + len) * self.dim].to_vec();
                start += len;
                PointSet::from_sorted_flat(self.dim, piece)
            })
            .collect()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.iter().all(|p| other.contains(p))
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl Eq for PointSet {}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Membership for PointSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, p: &[i64]) -> bool {
        PointSet::contains(self, p)
    }
}

fn bounds_of(dim: usize, coords: &[i64]) -> Option<Vec<(i64, i64)>> {
    let mut rows = coords.chunks_exact(dim);
    let first = rows.next()?;
    let mut b: Vec<(i64, i64)> = first.iter().map(|&x| (x, x)).collect();
    for p in rows {
        for (r, &x) in b.iter_mut().zip(p) {
            r.0 = r.0.min(x);
            r.1 = r.1.max(x);
        }
    }
    Some(b)
}

fn build_index(dim: usize, coords: &[i64]) -> Index {
    let n = (coords.len() / dim) as u128;
    if let Some(b) = bounds_of(dim, coords) {
        let extent: Vec<u64> = b.iter().map(|&(l, h)| (h - l) as u64 + 1).collect();
        let cells = extent
            .iter()
            .fold(1u128, |acc, &e| acc.saturating_mul(e as u128));
        if cells <= DENSE_MAX_CELLS && cells <= (16 * n).max(4096) {
            let lo: Vec<i64> = b.iter().map(|r| r.0).collect();
            let mut bits = vec![0u64; (cells as usize).div_ceil(64)];
            for p in coords.chunks_exact(dim) {
                let mut cell: u64 = 0;
                for ((&x, &l), &e) in p.iter().zip(&lo).zip(&extent) {
                    cell = cell * e + (x - l) as u64;
                }
                bits[(cell / 64) as usize] |= 1 << (cell % 64);
            }
            return Index::Dense { lo, extent, bits };
        }
    }
    Index::Hashed(coords.chunks_exact(dim).map(Box::from).collect())
}

// ----------------------------------------------------------------------------
// Additive triples
// ----------------------------------------------------------------------------

/// Number of ordered pairs `(x, y)` in `X x Y` with `x + y` in `Z`.
pub fn count_additive_triples<Z: Membership + ?Sized>(x: &PointSet, y: &PointSet, z: &Z) -> Result<u64> {
    Error::check_dim(x.dim(), y.dim())?;
    Error::check_dim(x.dim(), z.dim())?;
    let dim = x.dim();
    Ok((0..x.len())
        .into_par_iter()
        .map_init(
            || vec![0i64; dim],
            |buf, i| {
                let xp = x.point(i);
                y.iter()
                    .filter(|yp| {
                        for k in 0..dim {
                            buf[k] = xp[k] + yp[k];
                        }
                        z.contains(buf)
                    })
                    .count() as u64
            },
        )
        .sum())
}

/// Like [`count_additive_triples`], returning the index pairs `(i, j)` with
/// `x[i] + y[j]` in `Z`, ordered by `i` then `j`.
pub fn collect_additive_pairs<Z: Membership + ?Sized>(
    x: &PointSet,
    y: &PointSet,
    z: &Z,
) -> Result<Vec<(u32, u32)>> {
    Error::check_dim(x.dim(), y.dim())?;
    Error::check_dim(x.dim(), z.dim())?;
    let dim = x.dim();
    let rows: Vec<Vec<(u32, u32)>> = (0..x.len())
        .into_par_iter()
        .map_init(
            || vec![0i64; dim],
            |buf, i| {
                let xp = x.point(i);
                let mut row = Vec::new();
                for (j, yp) in y.iter().enumerate() {
                    for k in 0..dim {
                        buf[k] = xp[k] + yp[k];
                    }
                    if z.contains(buf) {
                        row.push((i as u32, j as u32));
                    }
                }
                row
            },
        )
        .collect();
    Ok(rows.concat())
}

/// A point set stored as intervals along the last axis, one per prefix of
/// the first `D - 1` coordinates. Balls, boxes and their sorted splits all
/// have this shape.
#[derive(Clone, Debug)]
pub struct Columns {
    dim: usize,
    prefixes: Vec<i64>,
    ranges: Vec<(i64, i64)>,
    lookup: ColumnLookup,
}

#[derive(Clone, Debug)]
enum ColumnLookup {
    Dense {
        lo: Vec<i64>,
        extent: Vec<u64>,
        slots: Vec<u32>,
    },
    Hashed(FxHashMap<Box<[i64]>, u32>),
}

impl Columns {
    /// `None` if some column is not a contiguous interval.
    pub fn new(set: &PointSet) -> Option<Self> {
        let dim = set.dim();
        let pre = dim - 1;
        let mut prefixes = Vec::new();
        let mut ranges: Vec<(i64, i64)> = Vec::new();
        for p in set.iter() {
            let (head, last) = (&p[..pre], p[pre]);
            let same = !ranges.is_empty() && &prefixes[prefixes.len() - pre..] == head;
            if same {
                let r = ranges.last_mut().unwrap();
                if last != r.1 + 1 {
                    return None;
                }
                r.1 = last;
            } else {
                prefixes.extend_from_slice(head);
                ranges.push((last, last));
            }
        }
        let lookup = build_column_lookup(pre, &prefixes, ranges.len());
        Some(Columns {
            dim,
            prefixes,
            ranges,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column_count(&self) -> usize {
        self.ranges.len()
    }

    pub fn len(&self) -> u64 {
        self.ranges.iter().map(|r| (r.1 - r.0 + 1) as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    fn prefix(&self, i: usize) -> &[i64] {
        let pre = self.dim - 1;
        &self.prefixes[i * pre..(i + 1) * pre]
    }

    /// Last-axis interval above `prefix`, if any.
    pub fn find(&self, prefix: &[i64]) -> Option<(i64, i64)> {
        let slot = match &self.lookup {
            ColumnLookup::Dense { lo, extent, slots } => {
                let mut cell: u64 = 0;
                for ((&x, &l), &e) in prefix.iter().zip(lo).zip(extent) {
                    let off = x.wrapping_sub(l) as u64;
                    if x < l || off >= e {
                        return None;
                    }
                    cell = cell * e + off;
                }
                slots[cell as usize]
            }
            ColumnLookup::Hashed(map) => *map.get(prefix)?,
        };
        (slot != 0).then(|| self.ranges[slot as usize - 1])
    }
}

fn build_column_lookup(pre: usize, prefixes: &[i64], n: usize) -> ColumnLookup {
    if pre == 0 {
        return ColumnLookup::Dense {
            lo: Vec::new(),
            extent: Vec::new(),
            slots: vec![if n > 0 { 1 } else { 0 }],
        };
    }
    if let Some(b) = bounds_of(pre, prefixes) {
        let extent: Vec<u64> = b.iter().map(|&(l, h)| (h - l) as u64 + 1).collect();
        let cells = extent
            .iter()
            .fold(1u128, |acc, &e| acc.saturating_mul(e as u128));
        if cells <= (16 * n as u128).max(4096) {
            let lo: Vec<i64> = b.iter().map(|r| r.0).collect();
            let mut slots = vec![0u32; cells as usize];
            for (i, p) in prefixes.chunks_exact(pre).enumerate() {
                let mut cell: u64 = 0;
                for ((&x, &l), &e) in p.iter().zip(&lo).zip(&extent) {
                    cell = cell * e + (x - l) as u64;
                }
                slots[cell as usize] = i as u32 + 1;
            }
            return ColumnLookup::Dense { lo, extent, slots };
        }
    }
    ColumnLookup::Hashed(
        prefixes
            .chunks_exact(pre)
            .enumerate()
            .map(|(i, p)| (Box::from(p), i as u32 + 1))
            .collect(),
    )
}

/// Number of `(a, b)` in `[a0, a1] x [b0, b1]` with `a + b` in `[s0, s1]`.
pub fn rectangle_sum_count(a: (i64, i64), b: (i64, i64), s: (i64, i64)) -> u64 {
    let wa = (a.1 - a.0 + 1) as i128;
    let wb = (b.1 - b.0 + 1) as i128;
    if wa <= 0 || wb <= 0 || s.1 < s.0 {
        return 0;
    }
    // pairs with a' + b' <= t, a' in [0, wa), b' in [0, wb)
    let tri = |t: i128| if t < 0 { 0 } else { (t + 1) * (t + 2) / 2 };
    let below = |t: i128| tri(t) - tri(t - wa) - tri(t - wb) + tri(t - wa - wb);
    let base = (a.0 + b.0) as i128;
    (below(s.1 as i128 - base) - below(s.0 as i128 - 1 - base)) as u64
}

/// Column-wise view of a triple `(X, Y, Z)` for counting and listing the
/// pairs `(x, y)` with `x + y` in `Z` without scanning `X x Y`.
pub struct ColumnTriple {
    x: Columns,
    y: Columns,
    z: Columns,
}

impl ColumnTriple {
    pub fn new(x: &PointSet, y: &PointSet, z: &PointSet) -> Result<Self> {
        Error::check_dim(x.dim(), y.dim())?;
        Error::check_dim(x.dim(), z.dim())?;
        let cols = |s: &PointSet| {
            Columns::new(s).ok_or_else(|| Error::invalid("point set is not column-convex"))
        };
        Ok(ColumnTriple {
            x: cols(x)?,
            y: cols(y)?,
            z: cols(z)?,
        })
    }

    pub fn count(&self) -> u64 {
        let pre = self.x.dim - 1;
        (0..self.x.column_count())
            .into_par_iter()
            .map_init(
                || vec![0i64; pre],
                |buf, i| {
                    let xp = self.x.prefix(i);
                    let xr = self.x.ranges[i];
                    let mut total = 0u64;
                    for j in 0..self.y.column_count() {
                        let yp = self.y.prefix(j);
                        for k in 0..pre {
                            buf[k] = xp[k] + yp[k];
                        }
                        if let Some(zr) = self.z.find(buf) {
                            total += rectangle_sum_count(xr, self.y.ranges[j], zr);
                        }
                    }
                    total
                },
            )
            .sum()
    }

    /// Calls `f(x, y)` for every pair, ordered by x-column, y-column, then
    /// last coordinates.
    pub fn for_each_pair(&self, mut f: impl FnMut(&[i64], &[i64])) {
        let pre = self.x.dim - 1;
        let mut zbuf = vec![0i64; pre];
        let mut xbuf = vec![0i64; self.x.dim];
        let mut ybuf = vec![0i64; self.x.dim];
        for i in 0..self.x.column_count() {
            let xp = self.x.prefix(i);
            let (xlo, xhi) = self.x.ranges[i];
            xbuf[..pre].copy_from_slice(xp);
            for j in 0..self.y.column_count() {
                let yp = self.y.prefix(j);
                for k in 0..pre {
                    zbuf[k] = xp[k] + yp[k];
                }
                let Some((zlo, zhi)) = self.z.find(&zbuf) else {
                    continue;
                };
                let (ylo, yhi) = self.y.ranges[j];
                ybuf[..pre].copy_from_slice(yp);
                for a in xlo..=xhi {
                    let lo = ylo.max(zlo - a);
                    let hi = yhi.min(zhi - a);
                    xbuf[pre] = a;
                    for b in lo..=hi {
                        ybuf[pre] = b;
                        f(&xbuf, &ybuf);
                    }
                }
            }
        }
    }
}

// ----------------------------------------------------------------------------
// Shift search
// ----------------------------------------------------------------------------

/// The three balls of a sum-closure body `{(x, y) : x in Bx, y in By, x + y in Bs}`.
#[derive(Clone, Debug)]
pub struct SumBalls {
    pub x: BallSpec,
    pub y: BallSpec,
    pub sum: BallSpec,
}

impl SumBalls {
    pub fn new(x: BallSpec, y: BallSpec, sum: BallSpec) -> Result<Self> {
        Error::check_dim(x.dim(), y.dim())?;
        Error::check_dim(x.dim(), sum.dim())?;
        Ok(SumBalls { x, y, sum })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Translate by `t = (t1, t2)`: x-ball by `t1`, y-ball by `t2`, sum-ball by `t1 + t2`.
    pub fn shifted(&self, shift: &[Ratio<i128>]) -> Result<Self> {
        let d = self.dim();
        Error::check_dim(2 * d, shift.len())?;
        let (t1, t2) = shift.split_at(d);
        let t12: Vec<_> = t1.iter().zip(t2).map(|(a, b)| a + b).collect();
        Ok(SumBalls {
            x: self.x.translated(t1)?,
            y: self.y.translated(t2)?,
            sum: self.sum.translated(&t12)?,
        })
    }

    pub fn lattice_sets(&self, budget: &Budget) -> Result<[PointSet; 3]> {
        Ok([
            enumerate_ball(&self.x, budget)?,
            enumerate_ball(&self.y, budget)?,
            enumerate_ball(&self.sum, budget)?,
        ])
    }

    /// Lattice points of the body, i.e. pairs of lattice points of the x- and
    /// y-balls whose sum lies in the sum-ball.
    pub fn lattice_count(&self, budget: &Budget) -> Result<u64> {
        let [x, y, z] = self.lattice_sets(budget)?;
        Ok(ColumnTriple::new(&x, &y, &z)?.count())
    }
}

/// One evaluated shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    /// Numerators of the shift coordinates over `2^SHIFT_BITS`.
    pub shift: Vec<u32>,
    pub count: u64,
    pub target: f64,
    pub achieved: bool,
    pub trial: usize,
}

impl ShiftResult {
    pub fn shift_rational(&self) -> Vec<Ratio<i128>> {
        dyadic_shift(&self.shift)
    }
}

/// Summary of a shift search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSearch {
    pub best: ShiftResult,
    pub trials: usize,
    pub mean_count: f64,
    pub stddev_count: f64,
}

pub fn dyadic_shift(numerators: &[u32]) -> Vec<Ratio<i128>> {
    numerators
        .iter()
        .map(|&k| Ratio::new(k as i128, 1i128 << SHIFT_BITS))
        .collect()
}

/// A shift in `[0, 1)^len` on the dyadic grid, derived from `(seed, trial)` only.
pub fn draw_shift(seed: u64, trial: usize, len: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (0..len).map(|_| rng.next_u32() >> (32 - SHIFT_BITS)).collect()
}

/// Samples `trials` shifts `t in [0,1)^{2D}` and keeps the one whose shifted
/// body captures the most lattice points (earliest trial on ties).
pub fn find_good_shift(
    balls: &SumBalls,
    target: f64,
    trials: usize,
    seed: u64,
    budget: &Budget,
) -> Result<ShiftSearch> {
    if trials == 0 {
        return Err(Error::invalid("shift trials must be >= 1"));
    }
    if !(target >= 0.0) {
        return Err(Error::invalid("shift target must be >= 0"));
    }
    let len = 2 * balls.dim();
    let counts = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let shift = draw_shift(seed, trial, len);
            let count = balls.shifted(&dyadic_shift(&shift))?.lattice_count(budget)?;
            Ok((count, shift))
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut best_trial, mut best_count) = (0, counts[0].0);
    for (i, (c, _)) in counts.iter().enumerate() {
        if *c > best_count {
            best_trial = i;
            best_count = *c;
        }
    }
    let (mean, stddev) = mean_stddev(counts.iter().map(|c| c.0 as f64));
    Ok(ShiftSearch {
        best: ShiftResult {
            shift: counts[best_trial].1.clone(),
            count: best_count,
            target,
            achieved: best_count as f64 >= target,
            trial: best_trial,
        },
        trials,
        mean_count: mean,
        stddev_count: stddev,
    })
}

/// `|(t + B) cap Z^D|` for `trials` independent dyadic shifts `t in [0,1)^D`.
pub fn sample_shifted_counts(ball: &BallSpec, trials: usize, seed: u64, budget: &Budget) -> Result<Vec<u64>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let t = dyadic_shift(&draw_shift(seed, trial, ball.dim()));
            Ok(enumerate_ball(&ball.translated(&t)?, budget)?.len() as u64)
        })
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_stddev(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i128, d: i128) -> Ratio<i128> {
        Ratio::new(n, d)
    }

    fn brute_ball(spec: &BallSpec) -> Vec<LatticePoint> {
        let b = spec.bounding_box();
        let mut out = Vec::new();
        let mut cur = vec![0i64; spec.dim()];
        fn rec(axis: usize, b: &[(i64, i64)], cur: &mut Vec<i64>, spec: &BallSpec, out: &mut Vec<LatticePoint>) {
            if axis == b.len() {
                // independent rational test
                let dist: Ratio<i128> = cur
                    .iter()
                    .zip(spec.center())
                    .map(|(&p, c)| {
                        let d = Ratio::from_integer(p as i128) - c;
                        d * d
                    })
                    .sum();
                if dist <= spec.radius_sq() {
                    out.push(LatticePoint::new(cur.clone()));
                }
                return;
            }
            for p in b[axis].0 - 1..=b[axis].1 + 1 {
                cur[axis] = p;
                rec(axis + 1, b, cur, spec, out);
            }
        }
        rec(0, &b, &mut cur, spec, &mut out);
        out
    }

    #[test]
    fn volumes() {
        assert!((ball_volume(1, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0).unwrap() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
        assert!(ball_volume(0, 1.0).is_err());
        assert!(ball_volume(2, 0.0).is_err());
        assert!(ball_volume(2, -1.0).is_err());
    }

    #[test]
    fn radius_inverse() {
        assert!((radius_for_volume(2, std::f64::consts::PI).unwrap() - 1.0).abs() < 1e-12);
        assert!((radius_for_volume(1, 5.0).unwrap() - 2.5).abs() < 1e-12);
        // (2e4 / pi^2)^(1/4), evaluated at 40 digits
        let r4 = radius_for_volume(4, 1e4).unwrap();
        assert!((r4 - 6.709_382_669_654_139).abs() / 6.71 < 1e-10);
        for d in 1..40 {
            let r = radius_for_volume(d, 1234.5).unwrap();
            assert!((ball_volume(d, r).unwrap() / 1234.5 - 1.0).abs() < 1e-10);
        }
        assert!(radius_for_volume(3, 0.0).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let b = Budget::default();
        let disk = BallSpec::centered(2, r(1, 1)).unwrap();
        let pts = enumerate_ball(&disk, &b).unwrap();
        let expect: Vec<LatticePoint> = [[-1, 0], [0, -1], [0, 0], [0, 1], [1, 0]]
            .iter()
            .map(|p| LatticePoint::new(p.to_vec()))
            .collect();
        assert_eq!(pts.to_points(), expect);

        let seg = BallSpec::centered(1, r(25, 4)).unwrap();
        let pts = enumerate_ball(&seg, &b).unwrap();
        assert_eq!(pts.flat(), &[-2, -1, 0, 1, 2]);

        let dot = BallSpec::new(vec![r(3, 1), r(-2, 1)], r(0, 1)).unwrap();
        assert_eq!(enumerate_ball(&dot, &b).unwrap().len(), 1);
        let off = BallSpec::new(vec![r(1, 2)], r(0, 1)).unwrap();
        assert_eq!(enumerate_ball(&off, &b).unwrap().len(), 0);
    }

    #[test]
    fn enumerate_budget() {
        let big = BallSpec::from_radius(6, 40.0).unwrap();
        let err = enumerate_ball(&big, &Budget { points: 1000, pairs: 1 }).unwrap_err();
        assert!(matches!(err, Error::Budget { limit: 1000, .. }));
    }

    #[test]
    fn enumerate_matches_full_scan() {
        let b = Budget::default();
        for dim in 1..=4 {
            for rsq in 0..=36 {
                let c: Vec<_> = (0..dim).map(|i| r((i as i128 * 7) % 5 - 2, 3)).collect();
                let spec = BallSpec::new(c, r(rsq, 1)).unwrap();
                assert_eq!(enumerate_ball(&spec, &b).unwrap().to_points(), brute_ball(&spec), "dim {dim} rsq {rsq}");
            }
        }
    }

    #[test]
    fn additive_examples() {
        let one = |v: &[i64]| PointSet::from_flat(1, v.to_vec());
        assert_eq!(count_additive_triples(&one(&[0]), &one(&[0]), &one(&[0])).unwrap(), 1);
        let s = one(&[-1, 0, 1]);
        assert_eq!(count_additive_triples(&s, &s, &s).unwrap(), 7);
        assert_eq!(count_additive_triples(&s, &s, &PointSet::empty(1)).unwrap(), 0);
        let pairs = collect_additive_pairs(&s, &s, &s).unwrap();
        assert_eq!(pairs.len(), 7);
        assert!(!pairs.contains(&(0, 0)) && !pairs.contains(&(2, 2)));
        let two = PointSet::from_flat(2, vec![0, 0]);
        assert!(matches!(
            count_additive_triples(&s, &two, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rectangle_count_matches_scan() {
        for a0 in -3..3 {
            for a1 in a0 - 1..a0 + 4 {
                for b0 in -2..2 {
                    for b1 in b0..b0 + 5 {
                        for s0 in -7..7 {
                            for s1 in s0 - 1..s0 + 6 {
                                let mut n = 0;
                                for a in a0..=a1 {
                                    for b in b0..=b1 {
                                        n += u64::from((s0..=s1).contains(&(a + b)));
                                    }
                                }
                                assert_eq!(rectangle_sum_count((a0, a1), (b0, b1), (s0, s1)), n);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn column_triple_matches_generic() {
        let b = Budget::default();
        for dim in 1..=3 {
            let balls = SumBalls::new(
                BallSpec::from_radius(dim, 3.3).unwrap(),
                BallSpec::from_radius(dim, 2.6).unwrap(),
                BallSpec::from_radius(dim, 3.0).unwrap(),
            )
            .unwrap();
            for trial in 0..5 {
                let t = dyadic_shift(&draw_shift(9, trial, 2 * dim));
                let sb = balls.shifted(&t).unwrap();
                let [x, y, z] = sb.lattice_sets(&b).unwrap();
                let ct = ColumnTriple::new(&x, &y, &z).unwrap();
                let generic = count_additive_triples(&x, &y, &sb.sum).unwrap();
                assert_eq!(ct.count(), generic);
                let mut listed = Vec::new();
                ct.for_each_pair(|p, q| listed.push((p.to_vec(), q.to_vec())));
                assert_eq!(listed.len() as u64, generic);
                assert!(listed.iter().all(|(p, q)| x.contains(p) && y.contains(q)));
            }
        }
    }

    #[test]
    fn columns_reject_gaps() {
        let s = PointSet::from_flat(2, vec![0, 0, 0, 2]);
        assert!(Columns::new(&s).is_none());
        let s = PointSet::from_flat(2, vec![0, 0, 0, 1, 3, 5]);
        let c = Columns::new(&s).unwrap();
        assert_eq!(c.find(&[0]), Some((0, 1)));
        assert_eq!(c.find(&[3]), Some((5, 5)));
        assert_eq!(c.find(&[1]), None);
    }

    #[test]
    fn split_sorted_partitions() {
        let s = enumerate_ball(&BallSpec::from_radius(2, 3.0).unwrap(), &Budget::default()).unwrap();
        let parts = s.split_sorted(2);
        assert_eq!(parts[0].len() + parts[1].len(), s.len());
        assert!(parts[0].len() >= parts[1].len());
        assert!(parts.iter().all(|p| Columns::new(p).is_some()));
    }

    #[test]
    fn shift_target_zero_always_achieved() {
        let ball = BallSpec::from_radius(1, 2.5).unwrap();
        let balls = SumBalls::new(ball.clone(), ball.clone(), ball).unwrap();
        let s = find_good_shift(&balls, 0.0, 8, 3, &Budget::default()).unwrap();
        assert!(s.best.achieved);
        assert!(s.best.shift.iter().all(|&k| k < 1 << SHIFT_BITS));
        assert!(find_good_shift(&balls, 0.0, 0, 3, &Budget::default()).is_err());
    }

    #[test]
    fn shift_search_is_deterministic() {
        let ball = BallSpec::from_radius(2, 2.2).unwrap();
        let balls = SumBalls::new(ball.clone(), ball.clone(), ball).unwrap();
        let a = find_good_shift(&balls, 10.0, 16, 42, &Budget::default()).unwrap();
        let b = find_good_shift(&balls, 10.0, 16, 42, &Budget::default()).unwrap();
        assert_eq!(a, b);
        // independent recount of the chosen shift with the exact ball predicate
        let sb = balls.shifted(&a.best.shift_rational()).unwrap();
        let [x, y, _] = sb.lattice_sets(&Budget::default()).unwrap();
        assert_eq!(count_additive_triples(&x, &y, &sb.sum).unwrap(), a.best.count);
    }

    #[test]
    fn half_open_interval_shifts() {
        // [0, 2.5] shifted by t in [0,1) holds 2 or 3 integers, mean 2.5
        let seg = BallSpec::new(vec![r(5, 4)], r(25, 16)).unwrap();
        let counts = sample_shifted_counts(&seg, 4000, 5, &Budget::default()).unwrap();
        assert!(counts.iter().all(|&c| c == 2 || c == 3));
        assert!(counts.contains(&3));
        let (mean, sd) = mean_stddev(counts.iter().map(|&c| c as f64));
        assert!((mean - 2.5).abs() <= 4.0 * sd / (counts.len() as f64).sqrt());
    }
}
