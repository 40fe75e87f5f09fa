use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};

/// Samples per trajectory for the minimum-distance scan.
pub const METRIC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub computation_ms: f64,
    /// Sum of arc lengths over all vehicles, m.
    pub total_travel_distance: f64,
    /// Sum of trajectory durations over all vehicles, s.
    pub total_travel_duration: f64,
    pub max_duration: f64,
    /// Infinite with fewer than two vehicles.
    pub min_pairwise_distance: f64,
}

/// Smallest centre distance over `samples` evenly spaced instants of the
/// common window; vehicles wait at their goals after finishing.
pub fn min_pairwise_distance(trajs: &[Trajectory], samples: usize) -> f64 {
    let horizon = trajs
        .iter()
        .map(Trajectory::total_duration)
        .fold(0.0, f64::max);
    let n = samples.max(2);
    let mut best = f64::INFINITY;
    let mut positions = Vec::with_capacity(trajs.len());
    for i in 0..n {
        let t = if i == n - 1 {
            horizon
        } else {
            horizon * i as f64 / (n - 1) as f64
        };
        positions.clear();
        positions.extend(trajs.iter().map(|tr| tr.probe(t).state.position));
        for (a, pa) in positions.iter().enumerate() {
            for pb in &positions[a + 1..] {
                best = best.min((pa - pb).norm());
            }
        }
    }
    best
}

pub fn compute_metrics(trajs: &[Trajectory], computation_ms: f64) -> Metrics {
    Metrics {
        computation_ms,
        total_travel_distance: trajs.iter().map(Trajectory::arc_length).sum(),
        total_travel_duration: trajs.iter().map(Trajectory::total_duration).sum(),
        max_duration: trajs
            .iter()
            .map(Trajectory::total_duration)
            .fold(0.0, f64::max),
        min_pairwise_distance: min_pairwise_distance(trajs, METRIC_SAMPLES),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{minco_solve, BoundaryState, Coeffs};
    use crate::Vec2;

    fn parked(p: Vec2, duration: f64) -> Trajectory {
        let mut c = Coeffs::zeros();
        c[(0, 0)] = p.x;
        c[(0, 1)] = p.y;
        Trajectory::new(vec![c], vec![duration]).unwrap()
    }

    #[test]
    fn straight_ten_metres() {
        let t = minco_solve(
            &BoundaryState::at_rest(Vec2::zeros()),
            &BoundaryState::at_rest(Vec2::new(10.0, 0.0)),
            &[Vec2::new(5.0, 0.0)],
            &[3.0, 3.0],
        )
        .unwrap()
        .into_trajectory();
        let m = compute_metrics(&[t], 1.0);
        assert!((m.total_travel_distance - 10.0).abs() < 1e-4);
        assert_eq!(m.min_pairwise_distance, f64::INFINITY);
    }

    #[test]
    fn durations_add_up() {
        let trajs: Vec<_> = [8.1, 8.0, 8.1, 8.1]
            .iter()
            .enumerate()
            .map(|(i, &d)| parked(Vec2::new(10.0 * i as f64, 0.0), d))
            .collect();
        let m = compute_metrics(&trajs, 0.0);
        assert!((m.total_travel_duration - 32.3).abs() < 1e-12);
        assert_eq!(m.max_duration, 8.1);
    }

    #[test]
    fn parked_pair_distance() {
        let trajs = [parked(Vec2::zeros(), 1.0), parked(Vec2::new(0.0, 3.0), 2.0)];
        assert!((min_pairwise_distance(&trajs, METRIC_SAMPLES) - 3.0).abs() < 1e-12);
        let reversed = [trajs[1].clone(), trajs[0].clone()];
        assert_eq!(
            compute_metrics(&trajs, 0.0),
            compute_metrics(&reversed, 0.0)
        );
    }
}
