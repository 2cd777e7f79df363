//! Composite Gauss-Legendre quadrature.
//!
//! Every integral over an interval uses [`NODE_BUDGET`] nodes split into
//! 16-point panels, so results are bit-reproducible for a given density.

use std::sync::OnceLock;

pub const PANEL_ORDER: usize = 16;
pub const NODE_BUDGET: usize = 4096;

struct Rule {
    nodes: [f64; PANEL_ORDER],
    weights: [f64; PANEL_ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = PANEL_ORDER;
        let mut nodes = [0.0; PANEL_ORDER];
        let mut weights = [0.0; PANEL_ORDER];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

/// Integrates `f` over `[a, b]` with `panels` equal Gauss-Legendre panels.
pub fn integrate_panels(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let r = rule();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Integrates `f` over `[a, b]` with the full node budget.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate_panels(f, a, b, NODE_BUDGET / PANEL_ORDER)
}

/// Zeroth, first and second moments of `f` over `[a, b]`.
pub fn moments(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> [f64; 3] {
    if b <= a {
        return [0.0; 3];
    }
    let r = rule();
    let h = (b - a) / panels as f64;
    let mut m = [0.0; 3];
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in r.nodes.iter().zip(r.weights.iter()) {
            let t = mid + 0.5 * h * x;
            let fw = 0.5 * h * w * f(t);
            m[0] += fw;
            m[1] += fw * t;
            m[2] += fw * t * t;
        }
    }
    m
}
