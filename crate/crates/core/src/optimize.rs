//! Bounded derivative-free maximization in one and two variables.
//!
//! A coarse scan brackets the best grid cell, golden-section search narrows
//! it down, and a finite-difference Newton polish removes the last
//! `sqrt(eps)` of error that pure function comparisons cannot resolve.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`. Ties go left, so
/// a flat function returns `a`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let a0 = a;
    let fa = f(a);
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (best, fbest) = if fc >= fd { (c, fc) } else { (d, fd) };
    // interior probes never land on the left end
    if fa >= fbest {
        (a0, fa)
    } else {
        (best, fbest)
    }
}

/// Scan `points` equally spaced values and return the cell around the best one.
pub fn scan_bracket<F: FnMut(f64) -> f64>(mut f: F, range: Interval, points: usize) -> (Interval, f64, f64) {
    let points = points.max(2);
    let step = range.width() / (points - 1) as f64;
    let mut best_k = 0;
    let mut best_x = range.lo;
    let mut best_f = f64::NEG_INFINITY;
    for k in 0..points {
        let x = if k + 1 == points { range.hi } else { range.lo + step * k as f64 };
        let fx = f(x);
        if fx > best_f {
            best_k = k;
            best_x = x;
            best_f = fx;
        }
    }
    let lo = if best_k == 0 { range.lo } else { range.lo + step * (best_k - 1) as f64 };
    let hi = if best_k + 1 >= points { range.hi } else { range.lo + step * (best_k + 1) as f64 };
    (Interval::new(lo, hi.min(range.hi)), best_x, best_f)
}

/// Scan, then golden section inside the best cell. Returns `(x, f(x))`.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(mut f: F, range: Interval, scan_points: usize, tol: f64) -> (f64, f64) {
    if range.width() <= 0.0 {
        return (range.lo, f(range.lo));
    }
    let (cell, scan_x, scan_f) = scan_bracket(&mut f, range, scan_points);
    let (x, fx) = golden_section_max(&mut f, cell.lo, cell.hi, tol);
    if scan_f > fx {
        (scan_x, scan_f)
    } else {
        (x, fx)
    }
}

/// Newton iterations on finite-difference derivatives of `f` over the
/// coordinates that sit at least one difference step away from their bounds.
/// A step is taken only if it does not lower `f` beyond rounding noise.
///
/// Works for one or two coordinates.
pub fn newton_polish<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &mut [f64],
    bounds: &[Interval],
    scale: f64,
    max_steps: usize,
) -> f64 {
    assert!(x.len() == bounds.len() && (1..=2).contains(&x.len()));
    // gradient by Richardson-extrapolated central differences, O(h^4)
    let hg = 2e-4 * scale;
    let hh = 1e-4 * scale;
    let mut fx = f(x);
    for _ in 0..max_steps {
        let active: Vec<usize> = (0..x.len())
            .filter(|&k| x[k] - hg >= bounds[k].lo && x[k] + hg <= bounds[k].hi)
            .collect();
        if active.is_empty() {
            break;
        }
        let mut probe = x.to_vec();
        let mut eval = |probe: &mut Vec<f64>, k: usize, dk: f64, l: usize, dl: f64| {
            let (xk, xl) = (probe[k], probe[l]);
            probe[k] += dk;
            probe[l] += dl;
            let v = f(probe);
            probe[k] = xk;
            probe[l] = xl;
            v
        };
        let grad: Vec<f64> = active
            .iter()
            .map(|&k| {
                let wide = (eval(&mut probe, k, hg, k, 0.0) - eval(&mut probe, k, -hg, k, 0.0)) / (2.0 * hg);
                let half = 0.5 * hg;
                let narrow = (eval(&mut probe, k, half, k, 0.0) - eval(&mut probe, k, -half, k, 0.0)) / hg;
                (4.0 * narrow - wide) / 3.0
            })
            .collect();
        let m = active.len();
        let mut hess = [[0.0; 2]; 2];
        for (a, &k) in active.iter().enumerate() {
            hess[a][a] = (eval(&mut probe, k, hh, k, 0.0) - 2.0 * fx + eval(&mut probe, k, -hh, k, 0.0)) / (hh * hh);
            for (b, &l) in active.iter().enumerate().skip(a + 1) {
                let v = (eval(&mut probe, k, hh, l, hh) - eval(&mut probe, k, hh, l, -hh)
                    - eval(&mut probe, k, -hh, l, hh)
                    + eval(&mut probe, k, -hh, l, -hh))
                    / (4.0 * hh * hh);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        let step: Vec<f64> = if m == 1 {
            if !(hess[0][0] < 0.0) {
                break;
            }
            vec![-grad[0] / hess[0][0]]
        } else {
            let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
            // negative definite: leading minor < 0, determinant > 0
            if !(hess[0][0] < 0.0 && det > 0.0) {
                break;
            }
            vec![
                -(hess[1][1] * grad[0] - hess[0][1] * grad[1]) / det,
                -(-hess[1][0] * grad[0] + hess[0][0] * grad[1]) / det,
            ]
        };
        let mut candidate = x.to_vec();
        for (a, &k) in active.iter().enumerate() {
            candidate[k] = bounds[k].clamp(x[k] + step[a]);
        }
        let fc = f(&candidate);
        if !(fc >= fx - 8.0 * f64::EPSILON * fx.abs()) {
            break;
        }
        let moved = active
            .iter()
            .map(|&k| (candidate[k] - x[k]).abs())
            .fold(0.0, f64::max);
        x.copy_from_slice(&candidate);
        fx = fc;
        if moved <= 1e-15 * scale {
            break;
        }
    }
    fx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(fx <= 0.0 && fx > -1e-13);
    }

    #[test]
    fn flat_function_returns_lower_bound() {
        let (x, _) = maximize_scalar(|_| 1.0, Interval::new(0.2, 0.9), 10, 1e-12);
        assert_eq!(x, 0.2);
    }

    #[test]
    fn monotone_function_returns_upper_bound() {
        let (x, _) = maximize_scalar(|x| x, Interval::new(0.0, 1.0), 10, 1e-12);
        assert!((x - 1.0).abs() < 1e-11);
    }

    #[test]
    fn scan_picks_global_of_bimodal() {
        let f = |x: f64| (-(x - 0.2).powi(2) / 0.001).exp() + 2.0 * (-(x - 0.8).powi(2) / 0.001).exp();
        let (x, _) = maximize_scalar(f, Interval::new(0.0, 1.0), 21, 1e-12);
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn newton_polish_reaches_machine_precision() {
        let f = |v: &[f64]| -(v[0] - 0.31).powi(2) - 2.0 * (v[1] - 0.47).powi(2) - (v[0] - 0.31) * (v[1] - 0.47);
        let mut x = [0.31 + 3e-8, 0.47 - 2e-8];
        let b = [Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];
        newton_polish(f, &mut x, &b, 1.0, 10);
        assert!((x[0] - 0.31).abs() < 1e-11 && (x[1] - 0.47).abs() < 1e-11, "{x:?}");
    }

    #[test]
    fn newton_polish_skips_coordinates_at_bounds() {
        let f = |v: &[f64]| -v[0] - (v[1] - 0.5).powi(2);
        let mut x = [0.0, 0.5 + 1e-7];
        let b = [Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)];
        newton_polish(f, &mut x, &b, 1.0, 10);
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 0.5).abs() < 1e-11);
    }
}
