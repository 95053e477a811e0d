//! Locally weighted linear scatterplot smoothing.
//!
//! For each distinct `u`, a line is fitted by weighted least squares to the
//! `q = ⌈span·n⌉` nearest points, with tricube weights on distance scaled by
//! the `q`-th nearest distance. Each robustness pass multiplies those weights
//! by bisquare weights of the previous residuals, scaled by six times their
//! median absolute value.

use serde::{Deserialize, Serialize};

use super::curve::Curve;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowessParams {
    pub span: f64,
    pub robust_iters: usize,
}

impl Default for LowessParams {
    fn default() -> Self {
        Self {
            span: 2.0 / 3.0,
            robust_iters: 3,
        }
    }
}

pub fn lowess(points: &[(f64, f64)], span: f64, robust_iters: usize) -> Result<Curve> {
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::Lowess(format!("span {span} outside (0, 1]")));
    }
    let n = points.len();
    if n < 2 {
        return Err(Error::Lowess("need at least two points".into()));
    }
    if points.iter().any(|(u, y)| !u.is_finite() || !y.is_finite()) {
        return Err(Error::Lowess("non-finite input".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if pts[0].0 == pts[n - 1].0 {
        return Err(Error::Lowess("all u values are identical".into()));
    }
    let q = neighbour_count(span, n);
    if q < 2 {
        return Err(Error::Lowess(format!("span {span} leaves fewer than two neighbours")));
    }
    let u: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();

    // distinct u values and the knot index of every point
    let mut knots_u: Vec<f64> = Vec::new();
    let mut knot_of = Vec::with_capacity(n);
    for &ui in &u {
        if knots_u.last() != Some(&ui) {
            knots_u.push(ui);
        }
        knot_of.push(knots_u.len() - 1);
    }

    let windows: Vec<Window> = knots_u.iter().map(|&u0| Window::locate(&u, u0, q)).collect();
    let mut robust = vec![1.0; n];
    let mut fit = fit_all(&u, &y, &knots_u, &windows, &robust);
    for _ in 0..robust_iters {
        let resid: Vec<f64> = (0..n).map(|i| y[i] - fit[knot_of[i]]).collect();
        let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
        let scale = 6.0 * median(&mut abs);
        if scale <= 0.0 {
            break;
        }
        for (w, r) in robust.iter_mut().zip(&resid) {
            let t = r / scale;
            *w = if t.abs() < 1.0 { (1.0 - t * t).powi(2) } else { 0.0 };
        }
        fit = fit_all(&u, &y, &knots_u, &windows, &robust);
    }
    Curve::new(knots_u.into_iter().zip(fit).collect())
}

fn neighbour_count(span: f64, n: usize) -> usize {
    // guard against 2/3 * 3 = 2.0000000000000004
    ((span * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Points with distance strictly below `h` from the knot, as an index range
/// into the sorted arrays.
struct Window {
    lo: usize,
    hi: usize,
    h: f64,
}

impl Window {
    fn locate(u: &[f64], u0: f64, q: usize) -> Self {
        let n = u.len();
        // contiguous block of q points nearest to u0
        let pos = u.partition_point(|&v| v < u0);
        let mut a = pos.saturating_sub(q / 2).min(n - q);
        while a > 0 && u0 - u[a - 1] < u[a + q - 1] - u0 {
            a -= 1;
        }
        while a + q < n && u[a + q] - u0 < u0 - u[a] {
            a += 1;
        }
        let h = (u0 - u[a]).max(u[a + q - 1] - u0);
        if h == 0.0 {
            let lo = u.partition_point(|&v| v < u0);
            let hi = u.partition_point(|&v| v <= u0);
            return Self { lo, hi, h };
        }
        let lo = u.partition_point(|&v| u0 - v >= h);
        let hi = u.partition_point(|&v| v - u0 < h);
        Self { lo, hi, h }
    }

    fn weight(&self, d: f64) -> f64 {
        if self.h == 0.0 {
            return 1.0;
        }
        let t = d / self.h;
        if t < 1.0 {
            let c = 1.0 - t * t * t;
            c * c * c
        } else {
            0.0
        }
    }
}

fn fit_all(u: &[f64], y: &[f64], knots: &[f64], windows: &[Window], robust: &[f64]) -> Vec<f64> {
    knots
        .iter()
        .zip(windows)
        .map(|(&u0, w)| {
            local_line(u, y, u0, w, Some(robust))
                .unwrap_or_else(|| local_line(u, y, u0, w, None).expect("tricube weights cannot all vanish"))
        })
        .collect()
}

/// Weighted least-squares line evaluated at `u0`; `None` if all weights vanish.
fn local_line(u: &[f64], y: &[f64], u0: f64, win: &Window, robust: Option<&[f64]>) -> Option<f64> {
    let weight = |i: usize| win.weight((u[i] - u0).abs()) * robust.map_or(1.0, |r| r[i]);
    let mut sw = 0.0;
    let mut su = 0.0;
    let mut sy = 0.0;
    for i in win.lo..win.hi {
        let w = weight(i);
        sw += w;
        su += w * u[i];
        sy += w * y[i];
    }
    if sw <= 0.0 {
        return None;
    }
    let mu = su / sw;
    let my = sy / sw;
    let mut suu = 0.0;
    let mut suy = 0.0;
    for i in win.lo..win.hi {
        let w = weight(i);
        let du = u[i] - mu;
        suu += w * du * du;
        suy += w * du * (y[i] - my);
    }
    if suu <= f64::EPSILON * sw * win.h * win.h {
        return Some(my);
    }
    Some(my + suy / suu * (u0 - mu))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force lowess: every weight from a full distance sort, every
    /// local fit from the raw 2×2 normal equations.
    fn oracle(points: &[(f64, f64)], span: f64, iters: usize) -> Vec<(f64, f64)> {
        let n = points.len();
        let q = ((span * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
        let mut knots: Vec<f64> = points.iter().map(|p| p.0).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let fit_at = |u0: f64, rob: &[f64], use_rob: bool| -> Option<f64> {
            let mut d: Vec<f64> = points.iter().map(|p| (p.0 - u0).abs()).collect();
            let mut sorted = d.clone();
            sorted.sort_by(f64::total_cmp);
            let h = sorted[q - 1];
            for di in d.iter_mut() {
                *di = if h == 0.0 {
                    if *di == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else if *di < h {
                    (1.0 - (*di / h).powi(3)).powi(3)
                } else {
                    0.0
                };
            }
            let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, p) in points.iter().enumerate() {
                let w = d[i] * if use_rob { rob[i] } else { 1.0 };
                s0 += w;
                s1 += w * p.0;
                s2 += w * p.0 * p.0;
                t0 += w * p.1;
                t1 += w * p.0 * p.1;
            }
            if s0 == 0.0 {
                return None;
            }
            let det = s0 * s2 - s1 * s1;
            if det.abs() <= 1e-12 * s0 * s2.max(1.0) {
                return Some(t0 / s0);
            }
            let b = (s0 * t1 - s1 * t0) / det;
            let a = (t0 - b * s1) / s0;
            Some(a + b * u0)
        };

        let mut rob = vec![1.0; n];
        let mut fit: Vec<f64> = knots.iter().map(|&k| fit_at(k, &rob, true).unwrap()).collect();
        for _ in 0..iters {
            let value_at = |u: f64| fit[knots.iter().position(|&k| k == u).unwrap()];
            let res: Vec<f64> = points.iter().map(|p| p.1 - value_at(p.0)).collect();
            let mut a: Vec<f64> = res.iter().map(|r| r.abs()).collect();
            a.sort_by(f64::total_cmp);
            let m = if n % 2 == 1 {
                a[n / 2]
            } else {
                (a[n / 2 - 1] + a[n / 2]) / 2.0
            };
            if m == 0.0 {
                break;
            }
            for i in 0..n {
                let t = res[i] / (6.0 * m);
                rob[i] = if t.abs() < 1.0 { (1.0 - t * t).powi(2) } else { 0.0 };
            }
            fit = knots
                .iter()
                .map(|&k| fit_at(k, &rob, true).or_else(|| fit_at(k, &rob, false)).unwrap())
                .collect();
        }
        knots.into_iter().zip(fit).collect()
    }

    fn noisy_sine(n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let u = i as f64 * 0.37 + rng.random::<f64>() * 0.1;
                (u, u.sin() + rng.random_range(-0.4..0.4))
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_noisy_sine() {
        let pts = noisy_sine(20, 11);
        let curve = lowess(&pts, 0.5, 3).unwrap();
        let expected = oracle(&pts, 0.5, 3);
        assert_eq!(curve.knots().len(), expected.len());
        for (got, want) in curve.knots().iter().zip(&expected) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() <= 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn matches_brute_force_with_tied_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|i| {
                let u = (i % 10 + 1) as f64;
                (u, 0.5 * u + rng.random_range(-1.0..1.0))
            })
            .collect();
        for (span, iters) in [(2.0 / 3.0, 3), (0.3, 0), (1.0, 2)] {
            let curve = lowess(&pts, span, iters).unwrap();
            let expected = oracle(&pts, span, iters);
            for (got, want) in curve.knots().iter().zip(&expected) {
                assert!((got.1 - want.1).abs() <= 1e-9, "span {span}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn reproduces_constants_and_lines() {
        let c = lowess(&[(0.0, 3.0), (1.0, 3.0), (2.5, 3.0), (4.0, 3.0)], 2.0 / 3.0, 3).unwrap();
        assert!(c.knots().iter().all(|k| (k.1 - 3.0).abs() < 1e-12));
        let pts: Vec<(f64, f64)> = (0..15).map(|i| (i as f64 * 0.3, 1.5 - 2.0 * i as f64 * 0.3)).collect();
        let c = lowess(&pts, 0.4, 3).unwrap();
        for (u, s) in c.knots() {
            assert!((s - (1.5 - 2.0 * u)).abs() <= 1e-9);
        }
    }

    #[test]
    fn input_errors() {
        assert!(lowess(&[(1.0, 2.0)], 0.5, 0).is_err());
        assert!(lowess(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)], 0.5, 0).is_err());
        assert!(lowess(&[(1.0, 2.0), (2.0, 3.0)], 0.0, 0).is_err());
        assert!(lowess(&[(1.0, 2.0), (2.0, 3.0), (3.0, 1.0), (4.0, 0.0)], 0.25, 0).is_err());
    }

    proptest! {
        #[test]
        fn order_and_shift_invariance(seed in 0u64..500, shift in -50.0f64..50.0) {
            let pts = noisy_sine(25, seed);
            let base = lowess(&pts, 2.0 / 3.0, 3).unwrap();
            let mut rev = pts.clone();
            rev.reverse();
            let r = lowess(&rev, 2.0 / 3.0, 3).unwrap();
            prop_assert_eq!(&base, &r);
            let shifted: Vec<(f64, f64)> = pts.iter().map(|&(u, y)| (u + shift, y)).collect();
            let s = lowess(&shifted, 2.0 / 3.0, 3).unwrap();
            for (a, b) in base.knots().iter().zip(s.knots()) {
                prop_assert!((a.0 + shift - b.0).abs() < 1e-9);
                prop_assert!((a.1 - b.1).abs() < 1e-6);
            }
        }
    }
}
