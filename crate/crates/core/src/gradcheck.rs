//! Finite-difference verification of the joint objective gradient.

use crate::costs::{CostModel, Family, StageConfig, StageMask, Terms, TopologyHinge};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::solver::{decode_trajectories, initialize, layout_for};
use crate::topology::{closest_approach, metric_at_keypoint, pair_window};
use crate::trajectory::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub samples: usize,
    pub tolerance: f64,
    /// Central-difference step in decision space.
    pub step: f64,
    /// Uniform waypoint perturbation around the initial guess, m.
    pub waypoint_jitter: f64,
    /// Uniform perturbation of the duration parameters.
    pub duration_jitter: f64,
    pub seed: u64,
    pub stage: Option<StageConfig>,
    /// Resampling budget per requested sample.
    pub max_resamples: usize,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            samples: 20,
            tolerance: 1e-4,
            step: 1e-6,
            waypoint_jitter: 0.5,
            duration_jitter: 0.3,
            seed: 0,
            stage: None,
            max_resamples: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyError {
    pub family: Family,
    /// `max_i |g_i − fd_i| / max(‖fd‖∞, 1e-8)` over all accepted samples.
    pub worst_relative_error: f64,
    /// Samples where the family had a non-zero gradient.
    pub active_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub samples: usize,
    /// Draws rejected because a key point sat on a hinge kink or was degenerate.
    pub resampled: usize,
    pub families: Vec<FamilyError>,
    pub worst_relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Distance of the topology hinge argument from its kink below which a draw is rejected.
const KINK_GUARD: f64 = 1e-4;

fn near_kink(scenario: &Scenario, trajs: &[Trajectory], stage: &StageConfig) -> Result<bool> {
    if !stage.mask.include_topology {
        return Ok(false);
    }
    let obstacles: Vec<Trajectory> = scenario
        .obstacles
        .iter()
        .map(|o| Trajectory::stationary(o.center))
        .collect();
    for (i, va) in scenario.vehicles.iter().enumerate() {
        let others = scenario
            .vehicles
            .iter()
            .enumerate()
            .skip(i + 1)
            .map(|(j, vb)| (&vb.id, &trajs[j]))
            .chain(
                scenario
                    .obstacles
                    .iter()
                    .zip(&obstacles)
                    .map(|(o, t)| (&o.id, t)),
            );
        for (id, tb) in others {
            let label = scenario.pattern.get(&va.id, id);
            if label.eta() == 0 {
                continue;
            }
            let sol = closest_approach(&trajs[i], tb, pair_window(&trajs[i], tb))?;
            let arg = f64::from(label.eta()) * metric_at_keypoint(&sol) + stage.hinge.margin;
            if arg.abs() < KINK_GUARD || (arg > 0.0 && !sol.has_sensitivity()) || sol.f_tt < 1e-3 {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Compares the analytic gradient of every cost family with central
/// differences at `samples` random decision vectors near the initial guess.
pub fn gradient_check(scenario: &Scenario, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    if opts.samples == 0 {
        return Err(Error::domain("gradient check needs at least one sample"));
    }
    if !(opts.step > 0.0 && opts.tolerance > 0.0) {
        return Err(Error::domain("step and tolerance must be positive"));
    }
    let stage = opts.stage.unwrap_or(StageConfig {
        mask: StageMask::FULL,
        topology_weight: scenario.weights.topology_stage2,
        hinge: TopologyHinge::default(),
    });
    let layout = layout_for(scenario)?;
    let base = initialize(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = [0.0f64; 5];
    let mut active = [0usize; 5];
    let mut resampled = 0;

    for _ in 0..opts.samples {
        let mut tries = 0;
        let x = loop {
            let mut x = base.clone();
            for i in 0..layout.vehicle_count() {
                let range = layout.range(i);
                let split = range.start + 2 * (layout.pieces(i) - 1);
                for v in &mut x[range.start..split] {
                    *v += rng.gen_range(-opts.waypoint_jitter..=opts.waypoint_jitter);
                }
                for v in &mut x[split..range.end] {
                    *v += rng.gen_range(-opts.duration_jitter..=opts.duration_jitter);
                }
            }
            let trajs = decode_trajectories(scenario, &x)?;
            if !near_kink(scenario, &trajs, &stage)? {
                break x;
            }
            resampled += 1;
            tries += 1;
            if tries > opts.max_resamples {
                return Err(Error::Optimization(
                    "could not draw a sample away from hinge kinks".into(),
                ));
            }
        };

        let horizons: Vec<f64> = layout
            .decode(&x)?
            .iter()
            .map(|(_, t)| t.iter().sum())
            .collect();
        let model = CostModel::new(scenario, layout.clone(), &horizons)?;
        for (f, family) in Family::ALL.iter().enumerate() {
            let terms = Terms::only(*family);
            let analytic = model.evaluate_terms(&x, &stage, terms)?.gradient;
            let mut fd = vec![0.0; x.len()];
            let mut xp = x.clone();
            for k in 0..x.len() {
                xp[k] = x[k] + opts.step;
                let plus = model.evaluate_terms(&xp, &stage, terms)?.breakdown.total;
                xp[k] = x[k] - opts.step;
                let minus = model.evaluate_terms(&xp, &stage, terms)?.breakdown.total;
                xp[k] = x[k];
                fd[k] = (plus - minus) / (2.0 * opts.step);
            }
            let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 && analytic.iter().all(|v| *v == 0.0) {
                continue;
            }
            active[f] += 1;
            let err = analytic
                .iter()
                .zip(&fd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / scale.max(1e-8);
            worst[f] = worst[f].max(err);
        }
    }

    let families: Vec<FamilyError> = Family::ALL
        .iter()
        .enumerate()
        .map(|(f, &family)| FamilyError {
            family,
            worst_relative_error: worst[f],
            active_samples: active[f],
        })
        .collect();
    let overall = worst.iter().copied().fold(0.0, f64::max);
    Ok(GradcheckReport {
        samples: opts.samples,
        resampled,
        families,
        worst_relative_error: overall,
        tolerance: opts.tolerance,
        passed: overall < opts.tolerance,
    })
}
