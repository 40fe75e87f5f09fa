//! Minimum-jerk piecewise quintic through prescribed waypoints.
//!
//! Unknowns are the stacked coefficients of all pieces. Rows of the banded
//! system, in order: three start conditions; for each interior joint the
//! jerk and snap continuity, the waypoint, then position, velocity and
//! acceleration continuity; three goal conditions. With this ordering every
//! pivot of the unpivoted LU stays on the band of half-width six.

use super::{
    eval_basis, BandedMatrix, BoundaryState, CoeffGradient, Coeffs, Trajectory, BASIS_LEN,
};
use crate::error::{Error, Result};
use crate::Vec2;

const BAND: usize = 6;

/// A solved minimum-jerk trajectory together with the factorized system,
/// kept for gradient propagation.
#[derive(Debug, Clone)]
pub struct Minco {
    system: BandedMatrix,
    trajectory: Trajectory,
}

/// Gradient with respect to the decision variables of [`minco_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct MincoGradient {
    pub waypoints: Vec<Vec2>,
    pub durations: Vec<f64>,
}

pub fn minco_solve(
    start: &BoundaryState,
    goal: &BoundaryState,
    waypoints: &[Vec2],
    durations: &[f64],
) -> Result<Minco> {
    Minco::solve(start, goal, waypoints, durations)
}

impl Minco {
    pub fn solve(
        start: &BoundaryState,
        goal: &BoundaryState,
        waypoints: &[Vec2],
        durations: &[f64],
    ) -> Result<Self> {
        let m = durations.len();
        if m == 0 {
            return Err(Error::domain("at least one piece is required"));
        }
        if waypoints.len() + 1 != m {
            return Err(Error::domain(format!(
                "{} pieces need {} waypoints, got {}",
                m,
                m - 1,
                waypoints.len()
            )));
        }
        if let Some(t) = durations.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::domain(format!(
                "piece duration must be positive, got {t}"
            )));
        }
        if !start.is_finite()
            || !goal.is_finite()
            || waypoints.iter().any(|q| !q.iter().all(|v| v.is_finite()))
        {
            return Err(Error::domain(
                "boundary states and waypoints must be finite",
            ));
        }

        let n = BASIS_LEN * m;
        let mut a = BandedMatrix::new(n, BAND, BAND);
        let mut b = vec![0.0; n * 2];
        let mut set_rhs = |row: usize, v: &Vec2| {
            b[row * 2] = v.x;
            b[row * 2 + 1] = v.y;
        };

        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(2, 2, 2.0);
        set_rhs(0, &start.position);
        set_rhs(1, &start.velocity);
        set_rhs(2, &start.acceleration);

        for i in 0..m - 1 {
            let t = durations[i];
            let base = BASIS_LEN * i;
            let next = base + BASIS_LEN;
            let put = |a: &mut BandedMatrix, row: usize, order: usize| {
                for (j, v) in eval_basis(t, order).iter().enumerate() {
                    if *v != 0.0 {
                        a.set(row, base + j, *v);
                    }
                }
            };
            put(&mut a, base + 3, 3);
            a.set(base + 3, next + 3, -6.0);
            put(&mut a, base + 4, 4);
            a.set(base + 4, next + 4, -24.0);
            put(&mut a, base + 5, 0);
            set_rhs(base + 5, &waypoints[i]);
            put(&mut a, base + 6, 0);
            a.set(base + 6, next, -1.0);
            put(&mut a, base + 7, 1);
            a.set(base + 7, next + 1, -1.0);
            put(&mut a, base + 8, 2);
            a.set(base + 8, next + 2, -2.0);
        }

        let t = durations[m - 1];
        let base = BASIS_LEN * (m - 1);
        for (r, order) in [(n - 3, 0), (n - 2, 1), (n - 1, 2)] {
            for (j, v) in eval_basis(t, order).iter().enumerate() {
                if *v != 0.0 {
                    a.set(r, base + j, *v);
                }
            }
        }
        set_rhs(n - 3, &goal.position);
        set_rhs(n - 2, &goal.velocity);
        set_rhs(n - 1, &goal.acceleration);

        a.factorize()?;
        a.solve(&mut b, 2);
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { row: n });
        }

        let pieces = (0..m)
            .map(|i| Coeffs::from_fn(|j, d| b[(BASIS_LEN * i + j) * 2 + d]))
            .collect();
        let trajectory = Trajectory::new(pieces, durations.to_vec())?;
        Ok(Self {
            system: a,
            trajectory,
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }

    /// Pulls a coefficient-space gradient back to waypoints and durations.
    ///
    /// `grad.durations` holds the explicit duration partials (coefficients held
    /// fixed); the implicit part through the linear system is added here.
    pub fn backprop(&self, grad: &CoeffGradient) -> Result<MincoGradient> {
        let traj = &self.trajectory;
        let m = traj.piece_count();
        if grad.coeffs.len() != m || grad.durations.len() != m {
            return Err(Error::domain(format!(
                "gradient has {}/{} pieces, trajectory has {}",
                grad.coeffs.len(),
                grad.durations.len(),
                m
            )));
        }
        let n = BASIS_LEN * m;
        let mut adj = vec![0.0; n * 2];
        for (i, c) in grad.coeffs.iter().enumerate() {
            for j in 0..BASIS_LEN {
                adj[(BASIS_LEN * i + j) * 2] = c[(j, 0)];
                adj[(BASIS_LEN * i + j) * 2 + 1] = c[(j, 1)];
            }
        }
        self.system.solve_transposed(&mut adj, 2);
        let row = |r: usize| Vec2::new(adj[r * 2], adj[r * 2 + 1]);

        let waypoints = (0..m - 1).map(|i| row(BASIS_LEN * i + 5)).collect();

        // dJ/dT_i = direct − λᵀ (∂A/∂T_i) c, where only rows evaluating piece i
        // at its end time depend on T_i; their derivative raises the order by one.
        let mut durations = grad.durations.clone();
        for (i, dt) in durations.iter_mut().enumerate() {
            let t = traj.durations()[i];
            let base = BASIS_LEN * i;
            let rows: &[(usize, usize)] = if i + 1 < m {
                &[
                    (base + 3, 4),
                    (base + 4, 5),
                    (base + 5, 1),
                    (base + 6, 1),
                    (base + 7, 2),
                    (base + 8, 3),
                ]
            } else {
                &[(n - 3, 1), (n - 2, 2), (n - 1, 3)]
            };
            for &(r, order) in rows {
                *dt -= row(r).dot(&traj.piece_derivative(i, t, order));
            }
        }
        Ok(MincoGradient {
            waypoints,
            durations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rest(x: f64, y: f64) -> BoundaryState {
        BoundaryState::at_rest(Vec2::new(x, y))
    }

    /// Independent oracle: dense Gaussian elimination on the 6×6 boundary system.
    fn single_segment_oracle(t: f64, p0: f64, p1: f64) -> [f64; 6] {
        let mut rows: Vec<Vec<f64>> = vec![
            eval_basis(0.0, 0).to_vec(),
            eval_basis(0.0, 1).to_vec(),
            eval_basis(0.0, 2).to_vec(),
            eval_basis(t, 0).to_vec(),
            eval_basis(t, 1).to_vec(),
            eval_basis(t, 2).to_vec(),
        ];
        let mut rhs = vec![p0, 0.0, 0.0, p1, 0.0, 0.0];
        for col in 0..6 {
            let piv = (col..6)
                .max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))
                .unwrap();
            rows.swap(col, piv);
            rhs.swap(col, piv);
            for r in 0..6 {
                if r != col {
                    let f = rows[r][col] / rows[col][col];
                    for c in 0..6 {
                        rows[r][c] -= f * rows[col][c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
        let mut out = [0.0; 6];
        for i in 0..6 {
            out[i] = rhs[i] / rows[i][i];
        }
        out
    }

    #[test]
    fn unit_segment_is_the_minimum_jerk_quintic() {
        let traj = minco_solve(&rest(0.0, 0.0), &rest(1.0, 0.0), &[], &[1.0])
            .unwrap()
            .into_trajectory();
        let expected = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        let oracle = single_segment_oracle(1.0, 0.0, 1.0);
        for j in 0..6 {
            assert!((traj.pieces()[0][(j, 0)] - expected[j]).abs() < 1e-8);
            assert!((oracle[j] - expected[j]).abs() < 1e-10);
            assert!(traj.pieces()[0][(j, 1)].abs() < 1e-12);
        }
        let mid = traj.eval(0.5).unwrap().position;
        assert!((mid.x - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_midpoint_split_reproduces_single_segment() {
        let one = minco_solve(&rest(0.0, 0.0), &rest(1.0, 0.0), &[], &[1.0])
            .unwrap()
            .into_trajectory();
        let two = minco_solve(
            &rest(0.0, 0.0),
            &rest(1.0, 0.0),
            &[Vec2::new(0.5, 0.0)],
            &[0.5, 0.5],
        )
        .unwrap()
        .into_trajectory();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let a = one.eval(t).unwrap();
            let b = two.eval(t).unwrap();
            assert!((a.position - b.position).norm() < 1e-8);
            assert!((a.velocity - b.velocity).norm() < 1e-8);
            assert!((a.acceleration - b.acceleration).norm() < 1e-8);
        }
    }

    fn random_problem(
        rng: &mut ChaCha8Rng,
        m: usize,
    ) -> (BoundaryState, BoundaryState, Vec<Vec2>, Vec<f64>) {
        let mut v = || Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let start = BoundaryState {
            position: v(),
            velocity: v(),
            acceleration: v(),
        };
        let goal = BoundaryState {
            position: v(),
            velocity: v(),
            acceleration: v(),
        };
        let q = (0..m - 1).map(|_| v()).collect();
        let t = (0..m).map(|_| rng.gen_range(0.2..3.0)).collect();
        (start, goal, q, t)
    }

    #[test]
    fn joints_are_c4_and_pass_waypoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..8 {
            let (s, g, q, t) = random_problem(&mut rng, m);
            let traj = minco_solve(&s, &g, &q, &t).unwrap().into_trajectory();
            for k in 0..m - 1 {
                for order in 0..=4 {
                    let left = traj.piece_derivative(k, t[k], order);
                    let right = traj.piece_derivative(k + 1, 0.0, order);
                    let scale = 1.0 + left.norm().max(right.norm());
                    assert!(
                        (left - right).norm() < 1e-8 * scale,
                        "m={m} k={k} order={order}"
                    );
                }
                assert!((traj.piece_derivative(k, t[k], 0) - q[k]).norm() < 1e-9);
            }
            let end = traj.piece_state(m - 1, t[m - 1]);
            assert!((end.position - g.position).norm() < 1e-8);
            assert!((end.velocity - g.velocity).norm() < 1e-8);
            assert!((end.acceleration - g.acceleration).norm() < 1e-8);
            let st = traj.piece_state(0, 0.0);
            assert!((st.velocity - s.velocity).norm() < 1e-12);
        }
    }

    #[test]
    fn resolve_through_own_joints_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (s, g, q, t) = random_problem(&mut rng, 5);
        let traj = minco_solve(&s, &g, &q, &t).unwrap().into_trajectory();
        let again = minco_solve(&s, &g, &traj.joint_positions(), &t)
            .unwrap()
            .into_trajectory();
        for (a, b) in traj.pieces().iter().zip(again.pieces()) {
            assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = rest(0.0, 0.0);
        assert!(matches!(
            minco_solve(&s, &s, &[], &[0.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            minco_solve(&s, &s, &[], &[-1.0]),
            Err(Error::Domain(_))
        ));
        assert!(minco_solve(&s, &s, &[Vec2::zeros()], &[1.0]).is_err());
        assert!(minco_solve(&s, &s, &[], &[]).is_err());
    }

    #[test]
    fn zero_gradient_maps_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (s, g, q, t) = random_problem(&mut rng, 4);
        let minco = minco_solve(&s, &g, &q, &t).unwrap();
        let out = minco.backprop(&CoeffGradient::zeros(4)).unwrap();
        assert!(out.waypoints.iter().all(|w| *w == Vec2::zeros()));
        assert!(out.durations.iter().all(|d| *d == 0.0));
        assert!(minco.backprop(&CoeffGradient::zeros(3)).is_err());
    }

    #[test]
    fn total_duration_objective_ignores_waypoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (s, g, q, t) = random_problem(&mut rng, 3);
        let minco = minco_solve(&s, &g, &q, &t).unwrap();
        let mut grad = CoeffGradient::zeros(3);
        grad.durations = vec![1.0; 3];
        let out = minco.backprop(&grad).unwrap();
        assert!(out.waypoints.iter().all(|w| w.norm() == 0.0));
        assert_eq!(out.durations, vec![1.0; 3]);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        // J = |p(t_fix) - target|² with t_fix inside the second piece.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (s, g, q, t) = random_problem(&mut rng, 3);
        let t_fix = t[0] + 0.4 * t[1];
        let target = Vec2::new(0.3, -0.8);
        let objective = |q: &[Vec2], t: &[f64]| {
            let traj = minco_solve(&s, &g, q, t).unwrap().into_trajectory();
            (traj.probe(t_fix).state.position - target).norm_squared()
        };
        let minco = minco_solve(&s, &g, &q, &t).unwrap();
        let traj = minco.trajectory();
        let probe = traj.probe(t_fix);
        let mut grad = CoeffGradient::zeros_like(traj);
        grad.add_state_gradient(
            traj,
            &probe,
            &(2.0 * (probe.state.position - target)),
            &Vec2::zeros(),
        );
        let out = minco.backprop(&grad).unwrap();

        let h = 1e-6;
        for i in 0..q.len() {
            for d in 0..2 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i][d] += h;
                qm[i][d] -= h;
                let fd = (objective(&qp, &t) - objective(&qm, &t)) / (2.0 * h);
                let an = out.waypoints[i][d];
                assert!(
                    (fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-3),
                    "q{i}{d}: {fd} vs {an}"
                );
            }
        }
        for i in 0..t.len() {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[i] += h;
            tm[i] -= h;
            let fd = (objective(&q, &tp) - objective(&q, &tm)) / (2.0 * h);
            let an = out.durations[i];
            assert!(
                (fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-3),
                "T{i}: {fd} vs {an}"
            );
        }
    }
}
