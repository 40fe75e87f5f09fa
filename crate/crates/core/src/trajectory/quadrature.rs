use std::sync::OnceLock;

/// Node count of the per-piece Gauss–Legendre rule.
pub const QUAD_NODES: usize = 16;

/// Gauss–Legendre nodes and weights mapped to the unit interval `[0, 1]`.
pub fn gauss_legendre_unit() -> &'static [(f64, f64); QUAD_NODES] {
    static RULE: OnceLock<[(f64, f64); QUAD_NODES]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUAD_NODES;
        let mut rule = [(0.0, 0.0); QUAD_NODES];
        for i in 0..n {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
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
            // map [-1, 1] → [0, 1], ascending order
            rule[n - 1 - i] = (0.5 * (x + 1.0), 0.5 * w);
        }
        rule
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let s: f64 = gauss_legendre_unit().iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_degree_31() {
        let approx: f64 = gauss_legendre_unit()
            .iter()
            .map(|(x, w)| w * x.powi(31))
            .sum();
        assert!((approx - 1.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_ascending_inside_unit_interval() {
        let r = gauss_legendre_unit();
        for w in r.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        assert!(r[0].0 > 0.0 && r[QUAD_NODES - 1].0 < 1.0);
    }
}
