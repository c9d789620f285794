//! End-to-end constructions. Each pipeline produces a corner-free set, its
//! tripartite graph (verified and padded to order `3n`) and a density report.
//!
//! * box: `X = Y = Z = {-M/2..M/2}^D`, translated into the positive orthant;
//! * ball: lattice points of a randomly shifted ball of volume `n`;
//! * abstract: `{(x, y) in [n]^2 : x + y in [n], x - y in t + W}` for a
//!   3-AP-free `W`.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::additive::{behrend_set, extract_color_class, is_corner_free, r3_exhaustive, CornerSet, R3_MAX_N};
use crate::error::{Error, Result};
use crate::graphgen::{
    build_tripartite, density_report, DensityReport, Fraction, ReportContext, ReportCounts, ReportParams,
    TripartiteGraph, TripleSystem, VerifyLevel,
};
use crate::lattice::{
    count_additive_triples, find_good_shift, radius_for_volume, BallSpec, Budget, ColumnTriple,
    PointSet, SumBalls,
};
use crate::probability::{box_sum_count, mc_ball_closure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Box,
    Ball,
    Abstract,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Box => "box",
            Kind::Ball => "ball",
            Kind::Abstract => "abstract",
        }
    }
}

/// Settings shared by all pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub verify: VerifyLevel,
    pub budget: Budget,
    /// Monte-Carlo samples for the closure probability of the ball pipeline.
    pub mc_samples: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            verify: VerifyLevel::Full,
            budget: Budget::default(),
            mc_samples: 1_000_000,
        }
    }
}

pub const DEFAULT_SHIFT_TRIALS: usize = 64;

/// One pipeline run. `size` is `M` for the box pipeline and `n` otherwise;
/// `dim` is ignored by the abstract pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub kind: Kind,
    pub dim: usize,
    pub size: u64,
    pub seed: u64,
    pub shift_trials: usize,
    pub options: RunOptions,
}

impl PipelineConfig {
    pub fn new(kind: Kind, dim: usize, size: u64) -> Self {
        PipelineConfig {
            kind,
            dim,
            size,
            seed: 0,
            shift_trials: DEFAULT_SHIFT_TRIALS,
            options: RunOptions::default(),
        }
    }

    pub fn run(&self) -> Result<PipelineOutput> {
        let o = &self.options;
        match self.kind {
            Kind::Box => run_box_pipeline(self.dim, self.size, o),
            Kind::Ball => run_ball_pipeline(self.dim, self.size, self.seed, self.shift_trials, o),
            Kind::Abstract => run_abstract_pipeline(self.size, o),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub set: CornerSet,
    pub triples: TripleSystem,
    /// Padded to order `3n`.
    pub graph: TripartiteGraph,
    pub report: DensityReport,
}

struct Extracted {
    color: u64,
    classes_present: usize,
    set: CornerSet,
}

// Largest norm-color class of the pairs of a column triple; empty input
// yields an empty class.
fn extract(dim: usize, triple: &ColumnTriple, a0: u64) -> Result<Extracted> {
    if a0 == 0 {
        return Ok(Extracted {
            color: 0,
            classes_present: 0,
            set: CornerSet::from_flat(dim, Vec::new()),
        });
    }
    let class = extract_color_class(dim, |f| triple.for_each_pair(|x, y| f(x, y)))?;
    if class.total != a0 {
        return Err(Error::Inconsistent(format!(
            "pair stream produced {} pairs, expected {a0}",
            class.total
        )));
    }
    Ok(Extracted {
        color: class.color,
        classes_present: class.classes_present,
        set: class.set,
    })
}

fn finish(
    set: CornerSet,
    n: u64,
    params: ReportParams,
    counts: ReportCounts,
    options: &RunOptions,
    diagnostics: serde_json::Value,
) -> Result<PipelineOutput> {
    let (triples, graph) = build_tripartite(&set, options.verify != VerifyLevel::Off)?;
    let ctx = ReportContext {
        params,
        counts,
        verify: options.verify,
        diagnostics,
    };
    let (graph, report) = density_report(&graph, n, ctx)?;
    Ok(PipelineOutput {
        set,
        triples,
        graph,
        report,
    })
}

fn cube(side: u64, dim: usize) -> Result<u64> {
    u32::try_from(dim)
        .ok()
        .and_then(|d| side.checked_pow(d))
        .ok_or(Error::Overflow("box size"))
}

fn grid(dim: usize, lo: i64, hi: i64) -> PointSet {
    let side = (hi - lo + 1) as usize;
    let total = side.pow(dim as u32);
    let mut flat = Vec::with_capacity(total * dim);
    for mut i in 0..total {
        let start = flat.len();
        for _ in 0..dim {
            flat.push(lo + (i % side) as i64);
            i /= side;
        }
        flat[start..].reverse();
    }
    PointSet::from_flat(dim, flat)
}

/// `X = Y = {1..M+1}^D`, `Z = M + 2 + {-M/2..M/2}^D`, `A0 = {(x, y) : x + y in Z}`.
pub fn run_box_pipeline(dim: usize, m: u64, options: &RunOptions) -> Result<PipelineOutput> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    if m < 2 || m % 2 == 1 {
        return Err(Error::invalid(format!("M must be even and >= 2, got {m}")));
    }
    let n = cube(m + 1, dim)?;
    options.budget.check_pairs(n as u128 * n as u128)?;
    let h = (m / 2) as i64;
    let side = m as i64 + 1;
    let x = grid(dim, 1, side);
    let z = grid(dim, side + 1 - h, side + 1 + h);
    let triple = ColumnTriple::new(&x, &x, &z)?;
    let a0 = triple.count();
    let expected = cube(box_sum_count(m / 2), dim)?;
    if a0 != expected {
        return Err(Error::Inconsistent(format!("box pair count {a0}, expected {expected}")));
    }
    let ext = extract(dim, &triple, a0)?;
    let density = a0 as f64 / (n as f64 * n as f64);
    let bound = 0.75f64.powi(dim as i32);
    let diagnostics = json!({
        "a0_expected": expected,
        "a0_density": density,
        "box_bound": bound,
        "box_bound_holds": density >= bound,
        "pigeonhole_holds": ext.set.len() * ext.classes_present >= a0 as usize,
    });
    let counts = ReportCounts {
        a0,
        classes_present: ext.classes_present,
        color: ext.color,
        a: ext.set.len() as u64,
        x: n,
        y: n,
        z: n,
    };
    let params = ReportParams {
        kind: "box".into(),
        dim,
        n,
        m: Some(m),
        radius: None,
        seed: None,
        shift_trials: None,
    };
    finish(ext.set, n, params, counts, options, diagnostics)
}

/// Result of splitting oversize sets into sorted chunks and keeping the
/// chunk combination with the most pairs.
#[derive(Clone, Debug)]
pub struct Trim {
    pub sets: [PointSet; 3],
    pub chunks: [usize; 3],
    pub chosen: [usize; 3],
    pub retained: u64,
    /// Sum over all combinations; equals the untrimmed pair count.
    pub total: u64,
}

impl Trim {
    pub fn active(&self) -> bool {
        self.chunks.iter().any(|&c| c > 1)
    }

    pub fn combinations(&self) -> u64 {
        self.chunks.iter().map(|&c| c as u64).product()
    }
}

/// Splits each set larger than `n` into `ceil(len / n)` consecutive runs of
/// its sorted order and keeps the combination carrying the most pairs
/// (first combination on ties). Every pair lies in exactly one combination.
pub fn trim_sets(sets: [&PointSet; 3], n: u64) -> Result<Trim> {
    let n = n.max(1) as usize;
    let parts = sets.map(|s| {
        if s.len() > n {
            s.split_sorted(s.len().div_ceil(n))
        } else {
            vec![s.clone()]
        }
    });
    let (mut best, mut chosen, mut total) = (None, [0; 3], 0u64);
    for i in 0..parts[0].len() {
        for j in 0..parts[1].len() {
            for k in 0..parts[2].len() {
                let c = ColumnTriple::new(&parts[0][i], &parts[1][j], &parts[2][k])?.count();
                total += c;
                if best.is_none_or(|b| c > b) {
                    best = Some(c);
                    chosen = [i, j, k];
                }
            }
        }
    }
    let chunks = [parts[0].len(), parts[1].len(), parts[2].len()];
    let [px, py, pz] = parts;
    Ok(Trim {
        sets: [
            px.into_iter().nth(chosen[0]).expect("chunk"),
            py.into_iter().nth(chosen[1]).expect("chunk"),
            pz.into_iter().nth(chosen[2]).expect("chunk"),
        ],
        chunks,
        chosen,
        retained: best.unwrap_or(0),
        total,
    })
}

fn min_corner(s: &PointSet) -> Vec<i64> {
    match s.bounds() {
        Some(b) => b.iter().map(|r| 1 - r.0).collect(),
        None => vec![0; s.dim()],
    }
}

/// Lattice points of a shifted ball of volume `n`, trimmed to size `n`, moved
/// into `[M+1]^D` with minimal `M`, then color-extracted.
pub fn run_ball_pipeline(dim: usize, n: u64, seed: u64, shift_trials: usize, options: &RunOptions) -> Result<PipelineOutput> {
    if dim == 0 || n == 0 {
        return Err(Error::invalid("ball pipeline needs dim >= 1 and n >= 1"));
    }
    let budget = &options.budget;
    let radius = radius_for_volume(dim, n as f64)?;
    let ball = BallSpec::from_radius(dim, radius)?;
    let closure = mc_ball_closure(dim, options.mc_samples.max(1), seed)?;
    let target = (n as f64) * (n as f64) * closure.value;
    let balls = SumBalls::new(ball.clone(), ball.clone(), ball.clone())?;
    let search = find_good_shift(&balls, target, shift_trials, seed, budget)?;
    let shifted = balls.shifted(&search.best.shift_rational())?;
    let [x0, y0, z0] = shifted.lattice_sets(budget)?;
    budget.check_pairs(x0.len() as u128 * y0.len() as u128)?;
    let count0 = search.best.count;

    // independent recount with the exact ball predicate
    let recount = if options.verify == VerifyLevel::Full && ((x0.len() * y0.len()) as u128) <= budget.pairs {
        let c = count_additive_triples(&x0, &y0, &shifted.sum)?;
        if c != count0 {
            return Err(Error::Inconsistent(format!("shift count {count0} but recount {c}")));
        }
        Some(c)
    } else {
        None
    };

    let trim = trim_sets([&x0, &y0, &z0], n)?;
    if trim.total != count0 {
        return Err(Error::Inconsistent(format!("trim combinations sum to {}, expected {count0}", trim.total)));
    }
    let retention_ok = trim.retained as u128 * trim.combinations() as u128 >= count0 as u128;
    let [x1, y1, z1] = &trim.sets;

    let a = min_corner(x1);
    let b = min_corner(y1);
    let ab: Vec<i64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
    let (x2, y2, z2) = (x1.translated(&a)?, y1.translated(&b)?, z1.translated(&ab)?);
    let m = [&x2, &y2]
        .iter()
        .filter_map(|s| s.bounds())
        .flat_map(|bd| bd.into_iter().map(|r| r.1))
        .max()
        .map_or(0, |top| (top - 1).max(0) as u64);

    let triple = ColumnTriple::new(&x2, &y2, &z2)?;
    let a0 = triple.count();
    if a0 != trim.retained {
        return Err(Error::Inconsistent(format!("translation changed pair count {} to {a0}", trim.retained)));
    }
    let ext = extract(dim, &triple, a0)?;
    let two_n = 2 * n as usize;
    let diagnostics = json!({
        "radius": radius,
        "radius_sq": ratio_string(ball.radius_sq()),
        "shift": search.best.shift,
        "shift_denominator": 1u64 << crate::lattice::SHIFT_BITS,
        "shift_trial": search.best.trial,
        "shift_trials": search.trials,
        "shift_count_mean": search.mean_count,
        "shift_count_stddev": search.stddev_count,
        "target": target,
        "target_achieved": search.best.achieved,
        "closure_mc": closure.value,
        "closure_mc_stderr": closure.stderr,
        "closure_measured": count0 as f64 / (x0.len() as f64 * y0.len() as f64),
        "sizes_untrimmed": [x0.len(), y0.len(), z0.len()],
        "size_certificate_holds": x0.len() <= two_n && y0.len() <= two_n && z0.len() <= two_n,
        "pairs_untrimmed": count0,
        "recount": recount,
        "trim_active": trim.active(),
        "trim_chunks": trim.chunks,
        "trim_chosen": trim.chosen,
        "pairs_retained": trim.retained,
        "trim_retention_holds": retention_ok,
        "translation_x": a,
        "translation_y": b,
    });
    let counts = ReportCounts {
        a0,
        classes_present: ext.classes_present,
        color: ext.color,
        a: ext.set.len() as u64,
        x: x2.len() as u64,
        y: y2.len() as u64,
        z: z2.len() as u64,
    };
    let params = ReportParams {
        kind: "ball".into(),
        dim,
        n,
        m: Some(m),
        radius: Some(radius),
        seed: Some(seed),
        shift_trials: Some(shift_trials),
    };
    finish(ext.set, n, params, counts, options, diagnostics)
}

fn ratio_string(r: Ratio<i128>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Number of `(x, y) in [n]^2` with `x + y in [n]` and `x - y = delta`.
pub fn diagonal_count(n: u64, delta: i64) -> u64 {
    let n = n as i64;
    // y from max(1, 1 - delta) up to floor((n - delta) / 2)
    let lo = 1.max(1 - delta);
    let hi = (n - delta).div_euclid(2);
    (hi - lo + 1).max(0) as u64
}

/// The 3-AP-free set used by the abstract pipeline and the best offset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractChoice {
    pub w: Vec<i64>,
    pub source: String,
    pub t: i64,
    pub count: u64,
}

/// Picks `W` (exhaustive optimum for `n <= 25`, Behrend otherwise) and the
/// `t in {-2n..n}` maximizing the pair count, smallest `t` on ties.
pub fn choose_abstract_offset(n: u64) -> Result<AbstractChoice> {
    if n < 2 {
        return Err(Error::invalid("abstract pipeline needs n >= 2"));
    }
    let (w, source) = if n as usize <= R3_MAX_N {
        (r3_exhaustive(n as usize)?.1, "exhaustive")
    } else {
        (behrend_set(n), "behrend")
    };
    let w: Vec<i64> = w.flat().to_vec();
    let ni = n as i64;
    let (mut best_t, mut best) = (-2 * ni, None);
    for t in -2 * ni..=ni {
        let c: u64 = w.iter().map(|&v| diagonal_count(n, t + v)).sum();
        if best.is_none_or(|b| c > b) {
            best = Some(c);
            best_t = t;
        }
    }
    Ok(AbstractChoice {
        w,
        source: source.into(),
        t: best_t,
        count: best.unwrap_or(0),
    })
}

/// `A = {(x, y) in [n]^2 : x + y in [n], x - y in t + W}`.
pub fn run_abstract_pipeline(n: u64, options: &RunOptions) -> Result<PipelineOutput> {
    let choice = choose_abstract_offset(n)?;
    options.budget.check_pairs(choice.count as u128)?;
    let ni = n as i64;
    let mut flat = Vec::with_capacity(2 * choice.count as usize);
    for &v in &choice.w {
        let delta = choice.t + v;
        let lo = 1.max(1 - delta);
        let hi = (ni - delta).div_euclid(2);
        for y in lo..=hi {
            flat.extend([y + delta, y]);
        }
    }
    let set = CornerSet::from_flat(1, flat);
    if set.len() as u64 != choice.count {
        return Err(Error::Inconsistent(format!("built {} pairs, expected {}", set.len(), choice.count)));
    }
    is_corner_free(&set)?;
    let a = set.len() as u64;
    let w_len = choice.w.len() as u64;
    let reference_den = 4 * (3 * n + 1);
    let diagnostics = json!({
        "w": choice.w,
        "w_source": choice.source,
        "t": choice.t,
        "p_hat": Fraction::new(a, n * n),
        "p_reference": Fraction::new(w_len, reference_den),
        "p_reference_holds": a as u128 * reference_den as u128 >= w_len as u128 * (n * n) as u128,
        "corner_free": true,
    });
    let counts = ReportCounts {
        a0: a,
        classes_present: 1,
        color: 0,
        a,
        x: n,
        y: n,
        z: n,
    };
    let params = ReportParams {
        kind: "abstract".into(),
        dim: 1,
        n,
        m: Some(n - 1),
        radius: None,
        seed: None,
        shift_trials: None,
    };
    finish(set, n, params, counts, options, diagnostics)
}

// ----------------------------------------------------------------------------
// Sweeps
// ----------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: Kind,
    pub dim: usize,
    pub n: Option<u64>,
    pub m: Option<u64>,
    pub seed: u64,
    pub report: Option<DensityReport>,
    pub error: Option<String>,
}

pub const SWEEP_COLUMNS: [&str; 16] = [
    "kind",
    "D",
    "n",
    "M",
    "seed",
    "A0",
    "classes",
    "A",
    "edges",
    "triangles",
    "eta_lower",
    "theory_behrend",
    "theory_green",
    "theory_new",
    "verified",
    "error",
];

/// Runs one pipeline per `(dim, size)` cell, in order. Cell failures are
/// recorded in their row. The abstract pipeline ignores `dims`.
pub fn sweep(kind: Kind, dims: &[usize], sizes: &[u64], seed: u64, shift_trials: usize, options: &RunOptions) -> Result<Vec<SweepRow>> {
    if sizes.is_empty() || (dims.is_empty() && kind != Kind::Abstract) {
        return Err(Error::invalid("sweep needs nonempty dimension and size lists"));
    }
    let dims: Vec<usize> = if kind == Kind::Abstract { vec![1] } else { dims.to_vec() };
    let mut rows = Vec::new();
    for &dim in &dims {
        for &size in sizes {
            let cfg = PipelineConfig {
                kind,
                dim,
                size,
                seed,
                shift_trials,
                options: *options,
            };
            let (n, m) = match kind {
                Kind::Box => (cube(size + 1, dim).ok(), Some(size)),
                _ => (Some(size), None),
            };
            let row = match cfg.run() {
                Ok(out) => SweepRow {
                    kind,
                    dim,
                    n: Some(out.report.params.n),
                    m: out.report.params.m,
                    seed,
                    report: Some(out.report),
                    error: None,
                },
                Err(e) => SweepRow {
                    kind,
                    dim,
                    n,
                    m,
                    seed,
                    report: None,
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV rendering of a sweep with [`SWEEP_COLUMNS`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let mut cells = vec![r.kind.name().to_string(), r.dim.to_string(), opt(r.n), opt(r.m), r.seed.to_string()];
        match &r.report {
            Some(rep) => cells.extend([
                rep.counts.a0.to_string(),
                rep.counts.classes_present.to_string(),
                rep.counts.a.to_string(),
                rep.graph.edges.to_string(),
                rep.graph.triangles.to_string(),
                rep.eta_lower.value.to_string(),
                rep.theory.behrend.to_string(),
                rep.theory.green.to_string(),
                rep.theory.new.to_string(),
                rep.graph.verified.to_string(),
                String::new(),
            ]),
            None => {
                cells.extend(std::iter::repeat_n(String::new(), 9));
                cells.push("false".into());
                cells.push(r.error.clone().unwrap_or_default());
            }
        }
        let line: Vec<String> = cells.iter().map(|c| csv_field(c)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}
