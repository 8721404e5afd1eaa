//! Dense BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop as soon as the objective drops to this value.
    pub f_target: f64,
    /// Stop when ‖∇f‖∞ falls below this.
    pub g_tol: f64,
    /// Stop when the objective improved by less than `stall_rel` (relative)
    /// over the last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            f_target: f64::NEG_INFINITY,
            g_tol: 1e-10,
            stall_window: 50,
            stall_rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfgsStatus {
    TargetReached,
    GradientConverged,
    MaxIterations,
    Stalled,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective after every accepted iterate, starting with f(x0).
    pub history: Vec<f64>,
    pub status: BfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Objective<'a, F> {
    f: &'a mut F,
    evaluations: usize,
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective<'_, F> {
    fn eval(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x, g);
        if v.is_finite() && g.iter().all(|d| d.is_finite()) {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimizer of the cubic through (a, fa, ga), (b, fb, gb), clamped to the
/// interior of the bracket.
fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let lo = a.min(b);
    let hi = a.max(b);
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    let mid = 0.5 * (a + b);
    if !fb.is_finite() || disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

struct LineSearch {
    f: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

#[allow(clippy::too_many_arguments)]
fn zoom<F: FnMut(&[f64], &mut [f64]) -> f64>(
    obj: &mut Objective<'_, F>,
    x0: &[f64],
    d: &[f64],
    f0: f64,
    dg0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    best: &mut Option<LineSearch>,
) -> Option<LineSearch> {
    let n = x0.len();
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    for _ in 0..30 {
        let a = cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2);
        for i in 0..n {
            x[i] = x0[i] + a * d[i];
        }
        let fa = obj.eval(&x, &mut g);
        let ga = dot(&g, d);
        if fa < best.as_ref().map_or(f0, |b| b.f) {
            *best = Some(LineSearch {
                f: fa,
                x: x.clone(),
                g: g.clone(),
            });
        }
        if fa > f0 + C1 * a * dg0 || fa >= lo.1 {
            hi = (a, fa, ga);
        } else {
            if ga.abs() <= -C2 * dg0 {
                return Some(LineSearch { f: fa, x, g });
            }
            if ga * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, ga);
        }
        if (hi.0 - lo.0).abs() < 1e-14 * lo.0.abs().max(1e-300) {
            break;
        }
    }
    None
}

fn line_search<F: FnMut(&[f64], &mut [f64]) -> f64>(
    obj: &mut Objective<'_, F>,
    x0: &[f64],
    f0: f64,
    g0: &[f64],
    d: &[f64],
    alpha0: f64,
) -> Option<LineSearch> {
    let dg0 = dot(g0, d);
    if dg0 >= 0.0 {
        return None;
    }
    let n = x0.len();
    let mut prev = (0.0, f0, dg0);
    let mut alpha = alpha0;
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut best: Option<LineSearch> = None;
    for i in 0..25 {
        for k in 0..n {
            x[k] = x0[k] + alpha * d[k];
        }
        let fa = obj.eval(&x, &mut g);
        let ga = dot(&g, d);
        if fa < best.as_ref().map_or(f0, |b| b.f) {
            best = Some(LineSearch {
                f: fa,
                x: x.clone(),
                g: g.clone(),
            });
        }
        if fa > f0 + C1 * alpha * dg0 || (i > 0 && fa >= prev.1) {
            let found = zoom(obj, x0, d, f0, dg0, prev, (alpha, fa, ga), &mut best);
            return found.or_else(|| best.filter(|b| b.f < f0));
        }
        if ga.abs() <= -C2 * dg0 {
            return Some(LineSearch { f: fa, x, g });
        }
        if ga >= 0.0 {
            let found = zoom(obj, x0, d, f0, dg0, (alpha, fa, ga), prev, &mut best);
            return found.or_else(|| best.filter(|b| b.f < f0));
        }
        prev = (alpha, fa, ga);
        alpha *= 2.0;
    }
    best.filter(|b| b.f < f0)
}

/// Minimize `f` from `x0`. The closure writes the gradient into its second
/// argument and returns the objective value.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut obj = Objective {
        f: &mut f,
        evaluations: 0,
    };
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = obj.eval(&x, &mut g);
    let mut history = vec![fx];
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    reset(&mut h, 1.0);
    let mut fresh = true;
    let mut status = BfgsStatus::MaxIterations;
    let mut iterations = 0;
    let mut d = vec![0.0; n];
    let mut hy = vec![0.0; n];

    while iterations < opts.max_iterations {
        if fx <= opts.f_target {
            status = BfgsStatus::TargetReached;
            break;
        }
        if inf_norm(&g) <= opts.g_tol {
            status = BfgsStatus::GradientConverged;
            break;
        }
        if opts.stall_window > 0 && history.len() > opts.stall_window {
            let past = history[history.len() - 1 - opts.stall_window];
            if past - fx <= opts.stall_rel * past.abs() {
                status = BfgsStatus::Stalled;
                break;
            }
        }
        for i in 0..n {
            d[i] = -dot(&h[i * n..(i + 1) * n], &g);
        }
        let alpha0 = if fresh {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            1.0
        };
        let step = line_search(&mut obj, &x, fx, &g, &d, alpha0);
        let Some(step) = step else {
            if fresh {
                status = BfgsStatus::LineSearchFailed;
                break;
            }
            reset(&mut h, 1.0);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if fresh {
                reset(&mut h, sy / dot(&y, &y));
            }
            for i in 0..n {
                hy[i] = dot(&h[i * n..(i + 1) * n], &y);
            }
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let c = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x = step.x;
        g = step.g;
        fx = step.f;
        history.push(fx);
        iterations += 1;
    }
    if iterations >= opts.max_iterations && fx <= opts.f_target {
        status = BfgsStatus::TargetReached;
    }
    BfgsResult {
        x,
        f: fx,
        iterations,
        evaluations: obj.evaluations,
        history,
        status,
    }
}

/// Central-difference gradient, used as an oracle and for tiny problems.
pub fn numeric_gradient<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], eps: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + eps;
            let fp = f(&xp);
            xp[i] = orig - eps;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * eps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let n = x.len();
        let mut f = 0.0;
        g.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            g[i] += -400.0 * x[i] * a - 2.0 * b;
            g[i + 1] += 200.0 * a;
        }
        f
    }

    #[test]
    fn solves_rosenbrock() {
        let r = bfgs(rosenbrock, &[-1.2, 1.0, -0.5, 0.8], &BfgsOptions::default());
        assert!(r.f < 1e-16, "{:?}", r.status);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn history_is_non_increasing() {
        let r = bfgs(rosenbrock, &[2.0, -1.0, 0.3], &BfgsOptions::default());
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.history.len(), r.iterations + 1);
    }

    #[test]
    fn starting_at_optimum_takes_no_step() {
        let r = bfgs(rosenbrock, &[1.0, 1.0], &BfgsOptions::default());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.f, 0.0);
        assert_eq!(r.status, BfgsStatus::GradientConverged);
    }

    #[test]
    fn target_stops_early() {
        let opts = BfgsOptions {
            f_target: 1e-2,
            ..BfgsOptions::default()
        };
        let r = bfgs(rosenbrock, &[-1.2, 1.0], &opts);
        assert_eq!(r.status, BfgsStatus::TargetReached);
        assert!(r.f <= 1e-2);
    }

    #[test]
    fn quadratic_converges_exactly() {
        let a = [3.0, 1.0, 0.5, 10.0];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = a[i] * (x[i] - i as f64);
                v += 0.5 * a[i] * (x[i] - i as f64).powi(2);
            }
            v
        };
        let r = bfgs(f, &[5.0; 4], &BfgsOptions::default());
        assert!(r.f < 1e-20);
        assert!(r.iterations <= 30, "{:?}", r);
    }

    #[test]
    fn numeric_gradient_of_quadratic() {
        let g = numeric_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, 5.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }
}
