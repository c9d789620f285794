//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the per-interval `|K15 - G7|` estimates.
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the summed estimate is at most `tolerance`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tolerance: f64, max_subdivisions: usize) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    if !first.value.is_finite() {
        return Err(Error::invalid("integrand is not finite on the interval"));
    }
    let mut error = first.error;
    heap.push(first);
    let mut subdivisions = 0;
    loop {
        if error <= tolerance {
            // refresh the running sum before accepting
            error = heap.iter().map(|s| s.error).sum();
            if error <= tolerance {
                break;
            }
        }
        if subdivisions >= max_subdivisions {
            return Err(Error::Quadrature { subdivisions, error });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    let mut segs = heap.into_vec();
    segs.sort_by(|p, q| p.a.total_cmp(&q.a));
    Ok(Integral {
        value: segs.iter().map(|s| s.value).sum(),
        error,
        subdivisions,
    })
}

/// [`integrate`] with the default tolerance and subdivision cap.
pub fn integrate_default<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Integral> {
    integrate(f, a, b, DEFAULT_TOLERANCE, DEFAULT_MAX_SUBDIVISIONS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate_default(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0).unwrap();
        assert!((r.value - 3.75).abs() < 1e-13);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn smooth_functions() {
        let r = integrate_default(f64::exp, 0.0, 1.0).unwrap();
        assert!((r.value - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        let r = integrate_default(|x| 1.0 / (1.0 + 25.0 * x * x), -1.0, 1.0).unwrap();
        assert!((r.value - 0.4 * 5f64.atan()).abs() < 1e-9);
    }

    #[test]
    fn mild_endpoint_singularity() {
        let r = integrate_default(f64::sqrt, 0.0, 1.0).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        assert!(r.subdivisions > 0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-15, 10);
        assert!(matches!(r, Err(Error::Quadrature { subdivisions: 10, .. })));
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate_default(f64::exp, 1.0, 1.0).unwrap().value, 0.0);
    }
}
