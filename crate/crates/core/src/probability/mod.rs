//! Probabilities behind the density of the constructions: exact box-sum
//! probabilities, Monte-Carlo ball and sphere closure, the dot-product
//! density of two uniform unit vectors, the integrals bounding the sphere
//! closure, and the theory curves with their optimization over `D`.

pub mod quadrature;

use std::f64::consts::PI;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use quadrature::{integrate_default, Integral};

/// How an estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    /// `sqrt(p (1 - p) / samples)` for Monte-Carlo, 0 otherwise.
    pub stderr: f64,
    pub samples: u64,
    pub method: Method,
    /// Quadrature error estimate, 0 otherwise.
    pub error_bound: f64,
    /// Sphere samples discarded for lying within the boundary band.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub band_discarded: Option<u64>,
    /// Sphere samples on which the norm and dot-product indicators disagreed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub identity_mismatches: Option<u64>,
}

impl ProbabilityEstimate {
    fn monte_carlo(hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        ProbabilityEstimate {
            value: p,
            stderr: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            method: Method::MonteCarlo,
            error_bound: 0.0,
            band_discarded: None,
            identity_mismatches: None,
        }
    }
}

/// Number of `(a, b) in {-m..m}^2` with `a + b in {-m..m}`, by convolving
/// the two uniform counts.
pub fn box_sum_count(m: u64) -> u64 {
    let w = 2 * m + 1;
    // pairs with a + b = s number 2m + 1 - |s|
    (0..=2 * m)
        .map(|i| {
            let s = i.abs_diff(m);
            w - s
        })
        .sum()
}

/// `P(a + b in {-m..m})` for independent uniform `a, b` in `{-m..m}`.
pub fn box_sum_probability(m: u64) -> Ratio<u64> {
    let w = 2 * m + 1;
    Ratio::new(box_sum_count(m), w * w)
}

fn fill_gaussian_unit<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm += *v * *v;
        }
        if norm > 0.0 {
            let inv = norm.sqrt().recip();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

fn fill_ball<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    fill_gaussian_unit(rng, out);
    let u: f64 = rng.sample(Open01);
    let s = u.powf(1.0 / out.len() as f64);
    out.iter_mut().for_each(|v| *v *= s);
}

/// A uniform point of the unit sphere `S^{D-1}`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    fill_gaussian_unit(rng, &mut v);
    v
}

/// A uniform point of the closed unit ball.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    fill_ball(rng, &mut v);
    v
}

const CHUNK: u64 = 1 << 15;

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

// Splits `samples` into fixed chunks, each with its own stream, and sums
// the integer tallies; the result does not depend on scheduling.
fn run_chunks<F>(samples: u64, seed: u64, f: F) -> [u64; 3]
where
    F: Fn(&mut ChaCha8Rng, u64) -> [u64; 3] + Sync,
{
    (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| f(&mut chunk_rng(seed, c), CHUNK.min(samples - c * CHUNK)))
        .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
}

/// Monte-Carlo `P(x + y in B)` for independent uniform points `x, y` of the
/// unit ball `B`.
pub fn mc_ball_closure(dim: usize, samples: u64, seed: u64) -> Result<ProbabilityEstimate> {
    if dim == 0 || samples == 0 {
        return Err(Error::invalid("mc_ball_closure needs dim >= 1 and samples >= 1"));
    }
    let [hits, _, _] = run_chunks(samples, seed, |rng, n| {
        let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
        let mut hits = 0;
        for _ in 0..n {
            fill_ball(rng, &mut x);
            fill_ball(rng, &mut y);
            let s: f64 = x.iter().zip(&y).map(|(a, b)| (a + b) * (a + b)).sum();
            hits += u64::from(s <= 1.0);
        }
        [hits, 0, 0]
    });
    Ok(ProbabilityEstimate::monte_carlo(hits, samples))
}

/// Half-width of the band around `<u, v> = -1/2` whose samples are discarded.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Monte-Carlo `P(<u, v> <= -1/2)` for independent uniform unit vectors,
/// checking on every sample outside the boundary band that this event
/// coincides with `||u + v|| <= 1`.
pub fn mc_sphere_closure(dim: usize, samples: u64, seed: u64) -> Result<ProbabilityEstimate> {
    if dim < 2 || samples == 0 {
        return Err(Error::invalid("mc_sphere_closure needs dim >= 2 and samples >= 1"));
    }
    let [hits, discarded, mismatches] = run_chunks(samples, seed, |rng, n| {
        let (mut u, mut v) = (vec![0.0; dim], vec![0.0; dim]);
        let mut tally = [0u64; 3];
        for _ in 0..n {
            fill_gaussian_unit(rng, &mut u);
            fill_gaussian_unit(rng, &mut v);
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            if (dot + 0.5).abs() <= BOUNDARY_BAND {
                tally[1] += 1;
                continue;
            }
            let sum_sq: f64 = u.iter().zip(&v).map(|(a, b)| (a + b) * (a + b)).sum();
            let by_dot = dot <= -0.5;
            tally[0] += u64::from(by_dot);
            tally[2] += u64::from(by_dot != (sum_sq <= 1.0));
        }
        tally
    });
    let kept = samples - discarded;
    if kept == 0 {
        return Err(Error::invalid("every sphere sample fell in the boundary band"));
    }
    let mut est = ProbabilityEstimate::monte_carlo(hits, kept);
    est.band_discarded = Some(discarded);
    est.identity_mismatches = Some(mismatches);
    Ok(est)
}

fn ln_dot_pdf_constant(dim: usize) -> f64 {
    let d = dim as f64;
    ln_gamma(d / 2.0) - 0.5 * PI.ln() - ln_gamma((d - 1.0) / 2.0)
}

/// Density of `<u, v>` for independent uniform `u, v` on `S^{D-1}`:
/// `Gamma(D/2) / (sqrt(pi) Gamma((D-1)/2)) (1 - r^2)^((D-3)/2)` on `|r| < 1`.
///
/// # Panics
/// If `dim < 2`.
pub fn dot_pdf(dim: usize, r: f64) -> f64 {
    assert!(dim >= 2, "dot_pdf needs dim >= 2");
    if !(r.abs() < 1.0) {
        return 0.0;
    }
    let exponent = (dim as f64 - 3.0) / 2.0;
    let ln_one_minus_sq = (-r).ln_1p() + r.ln_1p();
    (ln_dot_pdf_constant(dim) + exponent * ln_one_minus_sq).exp()
}

/// `int_a^b dot_pdf(D, r) dr` for `-1 <= a <= b <= 1`, integrated in the
/// angle `r = -cos(theta)`, which removes the endpoint singularity at `D = 2`.
pub fn integrate_dot_pdf(dim: usize, a: f64, b: f64) -> Result<Integral> {
    if dim < 2 || !(-1.0..=1.0).contains(&a) || !(a..=1.0).contains(&b) {
        return Err(Error::invalid("integrate_dot_pdf needs dim >= 2 and -1 <= a <= b <= 1"));
    }
    let (ta, tb) = ((-a).acos(), (-b).acos());
    integrate_default(|t| dot_pdf(dim, -t.cos()) * t.sin(), ta, tb)
}

/// `P(<u, v> <= -1/2) = int_{-1}^{-1/2} dot_pdf(D, r) dr` by quadrature.
pub fn exact_sphere_closure(dim: usize) -> Result<ProbabilityEstimate> {
    let q = integrate_dot_pdf(dim, -1.0, -0.5)?;
    Ok(ProbabilityEstimate {
        value: q.value,
        stderr: 0.0,
        samples: 0,
        method: Method::Quadrature,
        error_bound: q.error,
        band_discarded: None,
        identity_mismatches: None,
    })
}

/// `int_{-1}^{-1/2} (1 - r^2)^{D/2} dr` and the explicit lower bounds
/// compared against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundChain {
    pub dim: usize,
    pub integral: f64,
    pub error_bound: f64,
    /// `(1/D) (1 - (1/2 + 1/D)^2)^{D/2}`: interval length times the integrand
    /// minimum on `[-1/2 - 1/D, -1/2]`.
    pub window_bound: f64,
    /// `(1/D) (1 - (1/D - 1/2)^2)^{D/2}`, the same bound with the sign of
    /// `1/D` flipped; it evaluates the integrand outside the range.
    pub flipped_window_bound: f64,
    /// `(1/D) (3/4 - 1/D)^{D/2}`.
    pub final_bound: f64,
    pub window_holds: bool,
    pub flipped_window_holds: bool,
    pub final_holds: bool,
}

pub fn lower_bound_integral(dim: usize) -> Result<LowerBoundChain> {
    if dim < 2 {
        return Err(Error::invalid("lower_bound_integral needs dim >= 2"));
    }
    let d = dim as f64;
    let half = d / 2.0;
    let q = integrate_default(|r| ((1.0 - r) * (1.0 + r)).powf(half), -1.0, -0.5)?;
    let window_bound = (1.0 - (0.5 + 1.0 / d).powi(2)).max(0.0).powf(half) / d;
    let flipped_window_bound = (1.0 - (1.0 / d - 0.5).powi(2)).powf(half) / d;
    let final_bound = (0.75 - 1.0 / d).powf(half) / d;
    // compare with the quadrature error allowed on the integral's side
    let holds = |b: f64| q.value + q.error >= b;
    Ok(LowerBoundChain {
        dim,
        integral: q.value,
        error_bound: q.error,
        window_bound,
        flipped_window_bound,
        final_bound,
        window_holds: holds(window_bound),
        flipped_window_holds: holds(flipped_window_bound),
        final_holds: holds(final_bound),
    })
}

// ----------------------------------------------------------------------------
// Theory curves
// ----------------------------------------------------------------------------

/// The three density curves `base(D) * n^{-2/D}`, polynomial factors in `D` dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Curve {
    /// `(1/2)^D n^{-2/D}`.
    Behrend,
    /// `(3/4)^D n^{-2/D}`.
    Green,
    /// `(3/4)^{D/2} n^{-2/D}`.
    New,
}

impl Curve {
    pub const ALL: [Curve; 3] = [Curve::Behrend, Curve::Green, Curve::New];

    /// The factor raised to the power `D`.
    pub fn base(self) -> f64 {
        match self {
            Curve::Behrend => 0.5,
            Curve::Green => 0.75,
            Curve::New => 0.75f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Curve::Behrend => "behrend",
            Curve::Green => "green",
            Curve::New => "new",
        }
    }

    pub fn value(self, dim: usize, n: f64) -> f64 {
        let d = dim as f64;
        let ln = match self {
            Curve::Behrend => -d * 2f64.ln(),
            Curve::Green => d * 0.75f64.ln(),
            Curve::New => 0.5 * d * 0.75f64.ln(),
        };
        (ln - 2.0 * n.ln() / d).exp()
    }

    /// `max_D value(D, n)` over `D` in `1..=ETA_MAX_DIM`, nonincreasing in `n`.
    pub fn eta(self, n: u64) -> f64 {
        (1..=ETA_MAX_DIM)
            .map(|d| self.value(d, n as f64))
            .fold(0.0, f64::max)
    }
}

/// Dimension range used by [`Curve::eta`]; covers the optimum for all `u64` `n`.
pub const ETA_MAX_DIM: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurves {
    pub behrend: f64,
    pub green: f64,
    pub new: f64,
    pub note: String,
}

pub fn theory_curves(dim: usize, n: f64) -> TheoryCurves {
    TheoryCurves {
        behrend: Curve::Behrend.value(dim, n),
        green: Curve::Green.value(dim, n),
        new: Curve::New.value(dim, n),
        note: "exponential factors only; poly(D) factors dropped".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimOptimum {
    pub curve: Curve,
    pub n: f64,
    pub d_best: usize,
    pub value: f64,
    pub grid_max: usize,
    /// Stationary point `sqrt(2 ln n / ln(1/base))` of the continuous curve.
    pub d_star: f64,
}

/// Grid search for the `D` in `1..=ceil(8 sqrt(log2 n))` maximizing the
/// curve at `n` (smallest `D` on ties).
pub fn optimize_dim(n: f64, curve: Curve) -> Result<DimOptimum> {
    if !(n >= 2.0 && n.is_finite()) {
        return Err(Error::invalid("optimize_dim needs n >= 2"));
    }
    let grid_max = (8.0 * n.log2().sqrt()).ceil() as usize;
    let (mut d_best, mut value) = (1, curve.value(1, n));
    for d in 2..=grid_max {
        let v = curve.value(d, n);
        if v > value {
            (d_best, value) = (d, v);
        }
    }
    Ok(DimOptimum {
        curve,
        n,
        d_best,
        value,
        grid_max,
        d_star: (2.0 * n.ln() / -curve.base().ln()).sqrt(),
    })
}

/// Exponent constant of the new bound, `1 / (4 log2(4/3))`.
pub fn c_new() -> f64 {
    1.0 / (4.0 * (4.0f64 / 3.0).log2())
}

/// Exponent constant of the earlier bound, half of [`c_new`].
pub fn c_old() -> f64 {
    c_new() / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound {
    pub epsilon: f64,
    /// Largest `n` with `eta(n) >= 3 epsilon`.
    pub n_max: u64,
    pub delta: f64,
    /// `log2(1/delta) / log2(1/epsilon)^2`.
    pub exponent: f64,
}

/// `delta(epsilon) < 1 / max{n : eta(n) >= 3 epsilon}` for a nonincreasing `eta`.
pub fn eta_to_delta<F: Fn(u64) -> f64>(eta: F, epsilon: f64) -> Result<DeltaBound> {
    if !(epsilon > 0.0 && epsilon < 1.0 / 3.0) {
        return Err(Error::invalid("epsilon must lie in (0, 1/3)"));
    }
    let ok = |n: u64| eta(n) >= 3.0 * epsilon;
    if !ok(1) {
        return Err(Error::OutOfRange(format!("no n >= 1 has eta(n) >= {}", 3.0 * epsilon)));
    }
    let mut lo = 1u64;
    loop {
        let Some(next) = lo.checked_mul(2).filter(|&v| v <= 1 << 62) else {
            return Err(Error::OutOfRange("threshold not reached below 2^62".into()));
        };
        if !ok(next) {
            break;
        }
        lo = next;
    }
    // ok(lo), !ok(hi)
    let mut hi = 2 * lo;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 1.0 / lo as f64;
    Ok(DeltaBound {
        epsilon,
        n_max: lo,
        delta,
        exponent: (lo as f64).log2() / (1.0 / epsilon).log2().powi(2),
    })
}
