//! Two-stage quasi-Newton optimization over all vehicles jointly.

mod decision;
mod lbfgs;

pub use decision::{
    duration_inverse, duration_transform, duration_transform_grad, DecisionLayout, DecisionVector,
    VehicleDecision, MIN_DURATION,
};
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, LbfgsReport, Termination};

use crate::costs::{CostBreakdown, CostModel, StageConfig, StageMask, TopologyHinge};
use crate::error::{Error, Result};
use crate::scenario::{compute_metrics, Metrics, Scenario, Vehicle};
use crate::topology::{closest_approach, metric_at_keypoint, pair_window, Interaction};
use crate::trajectory::{minco_solve, Trajectory};
use crate::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Target length of one piece when the scenario does not fix the count.
pub const PIECE_LENGTH: f64 = 1.5;
pub const MIN_PIECES: usize = 4;
/// Cruise speed of the initial guess as a fraction of `v_max`.
pub const INIT_SPEED_FRACTION: f64 = 0.8;
/// Samples per trajectory used by the feasibility audit.
pub const AUDIT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Topology without collision first, then everything.
    TwoStage,
    /// Only the collision-free topology stage.
    StageOneOnly,
    /// Every penalty from the start with the first-stage topology weight.
    SingleStage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub lbfgs: LbfgsOptions,
    /// Required `−η·M` before the first stage may exit, in m²/s.
    pub topology_margin: f64,
    pub cubic_hinge: bool,
    pub schedule: Schedule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            lbfgs: LbfgsOptions::default(),
            topology_margin: 0.2,
            cubic_hinge: false,
            schedule: Schedule::TwoStage,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        self.lbfgs.validate()?;
        if !(self.topology_margin >= 0.0 && self.topology_margin.is_finite()) {
            return Err(Error::domain("topology margin must be non-negative"));
        }
        Ok(())
    }

    /// The first-stage hinge overshoots the exit margin so the exit is reachable.
    fn stage_one(&self, scenario: &Scenario) -> StageConfig {
        StageConfig {
            mask: StageMask::TOPOLOGY_ONLY,
            topology_weight: scenario.weights.topology_stage1,
            hinge: TopologyHinge {
                margin: 2.0 * self.topology_margin,
                cubic: self.cubic_hinge,
            },
        }
    }

    fn stage_two(&self, scenario: &Scenario) -> StageConfig {
        StageConfig {
            mask: StageMask::FULL,
            topology_weight: scenario.weights.topology_stage2,
            hinge: TopologyHinge {
                margin: self.topology_margin,
                cubic: self.cubic_hinge,
            },
        }
    }

    fn single_stage(&self, scenario: &Scenario) -> StageConfig {
        StageConfig {
            mask: StageMask::FULL,
            topology_weight: scenario.weights.topology_stage1,
            hinge: TopologyHinge {
                margin: self.topology_margin,
                cubic: self.cubic_hinge,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub final_cost: f64,
    /// Every constrained pair has `η·M ≤ −margin` at the stage output.
    pub topology_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub obstacle: bool,
    pub interaction: String,
    pub eta: i8,
    pub metric: f64,
    pub t_star: f64,
    pub distance: f64,
    pub satisfied: bool,
}

/// Dense resampling check of the limits the penalties only enforce softly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityAudit {
    pub max_speed: f64,
    pub max_acceleration: f64,
    pub min_pairwise_distance: f64,
    /// Smallest ratio of vehicle–obstacle distance to the required clearance.
    pub min_obstacle_ratio: f64,
    pub speed_ok: bool,
    pub acceleration_ok: bool,
    pub collision_checked: bool,
    pub distance_ok: bool,
    pub passed: bool,
}

pub const SPEED_TOLERANCE: f64 = 1.01;
pub const ACCELERATION_TOLERANCE: f64 = 1.05;
pub const DISTANCE_TOLERANCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub scenario: String,
    pub schedule: Schedule,
    pub stages: Vec<StageReport>,
    pub breakdown: CostBreakdown,
    pub pairs: Vec<PairReport>,
    /// Every requested label holds strictly (`η·M < 0`).
    pub all_satisfied: bool,
    pub topology_margin: f64,
    pub min_pairwise_distance: f64,
    pub feasibility: FeasibilityAudit,
    pub convergence: Termination,
    pub wall_clock_ms: f64,
    pub metrics: Metrics,
}

impl OptimizationReport {
    pub fn success(&self) -> bool {
        self.all_satisfied && self.feasibility.passed
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub decision: DecisionVector,
    pub trajectories: Vec<Trajectory>,
    pub report: OptimizationReport,
}

/// Piece count of a vehicle: its override, else one piece per 1.5 m with at least four.
pub fn piece_count(vehicle: &Vehicle) -> usize {
    vehicle.pieces.unwrap_or_else(|| {
        let dist = (vehicle.goal.position - vehicle.start.position).norm();
        ((dist / PIECE_LENGTH).ceil() as usize).max(MIN_PIECES)
    })
}

pub fn layout_for(scenario: &Scenario) -> Result<DecisionLayout> {
    DecisionLayout::new(scenario.vehicles.iter().map(piece_count).collect())
}

/// Rest-to-rest travel time with a trapezoidal speed profile.
fn trapezoid_time(dist: f64, v: f64, a: f64) -> f64 {
    if dist >= v * v / a {
        dist / v + v / a
    } else {
        2.0 * (dist / a).sqrt()
    }
}

/// Waypoints evenly spaced along the start–goal segment (bowed sideways by
/// the vehicle's `init_offset`) and uniform durations from a trapezoidal
/// profile at 0.8·v_max.
pub fn initialize(scenario: &Scenario) -> Result<DecisionVector> {
    let layout = layout_for(scenario)?;
    let w = &scenario.weights;
    let blocks: Vec<VehicleDecision> = scenario
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let m = layout.pieces(i);
            let delta = v.goal.position - v.start.position;
            let dist = delta.norm();
            let left = if dist > 0.0 {
                Vec2::new(-delta.y, delta.x) / dist
            } else {
                Vec2::zeros()
            };
            let q = (1..m)
                .map(|k| {
                    let s = k as f64 / m as f64;
                    v.start.position
                        + s * delta
                        + v.init_offset * (std::f64::consts::PI * s).sin() * left
                })
                .collect();
            let total = trapezoid_time(dist, INIT_SPEED_FRACTION * w.v_max, w.a_max);
            let piece = (total / m as f64).max(0.1);
            (q, vec![piece; m])
        })
        .collect();
    layout.encode(&blocks)
}

/// [`initialize`] with every waypoint coordinate shifted uniformly in `±jitter` metres.
pub fn initialize_seeded(scenario: &Scenario, seed: u64, jitter: f64) -> Result<DecisionVector> {
    let layout = layout_for(scenario)?;
    let mut x = initialize(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if jitter > 0.0 {
        for i in 0..layout.vehicle_count() {
            let range = layout.range(i);
            let waypoints = 2 * (layout.pieces(i) - 1);
            for v in &mut x[range.start..range.start + waypoints] {
                *v += rng.gen_range(-jitter..=jitter);
            }
        }
    }
    Ok(x)
}

/// Minimum-jerk trajectories of a decision vector.
pub fn decode_trajectories(scenario: &Scenario, x: &[f64]) -> Result<Vec<Trajectory>> {
    let layout = layout_for(scenario)?;
    layout
        .decode(x)?
        .into_iter()
        .zip(&scenario.vehicles)
        .map(|((q, t), v)| Ok(minco_solve(&v.start, &v.goal, &q, &t)?.into_trajectory()))
        .collect()
}

/// Key-point metric of every vehicle pair and of every labelled vehicle–obstacle pair.
pub fn pair_reports(scenario: &Scenario, trajs: &[Trajectory]) -> Result<Vec<PairReport>> {
    let mut out = Vec::new();
    let mut push =
        |a: &str, b: &str, obstacle: bool, ta: &Trajectory, tb: &Trajectory| -> Result<()> {
            let interaction = scenario.pattern.get(a, b);
            let sol = closest_approach(ta, tb, pair_window(ta, tb))?;
            let metric = metric_at_keypoint(&sol);
            out.push(PairReport {
                a: a.to_string(),
                b: b.to_string(),
                obstacle,
                interaction: interaction.name().to_string(),
                eta: interaction.eta(),
                metric,
                t_star: sol.t_star,
                distance: sol.f_value.sqrt(),
                satisfied: interaction.is_satisfied_by(metric),
            });
            Ok(())
        };
    for (i, va) in scenario.vehicles.iter().enumerate() {
        for (j, vb) in scenario.vehicles.iter().enumerate().skip(i + 1) {
            push(&va.id, &vb.id, false, &trajs[i], &trajs[j])?;
        }
    }
    for (i, v) in scenario.vehicles.iter().enumerate() {
        for o in &scenario.obstacles {
            if scenario.pattern.get(&v.id, &o.id) != Interaction::None {
                push(
                    &v.id,
                    &o.id,
                    true,
                    &trajs[i],
                    &Trajectory::stationary(o.center),
                )?;
            }
        }
    }
    Ok(out)
}

fn margin_satisfied(pairs: &[PairReport], margin: f64) -> bool {
    pairs
        .iter()
        .all(|p| p.eta == 0 || f64::from(p.eta) * p.metric <= -margin)
}

fn topology_margin_met(scenario: &Scenario, x: &[f64], margin: f64) -> bool {
    decode_trajectories(scenario, x)
        .and_then(|t| pair_reports(scenario, &t))
        .map(|p| margin_satisfied(&p, margin))
        .unwrap_or(false)
}

/// Samples `[0, horizon]` at `n` evenly spaced times, both ends included.
fn sample_times(horizon: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = horizon / (n - 1) as f64;
    (0..n).map(move |i| if i == n - 1 { horizon } else { i as f64 * step })
}

pub fn feasibility_audit(
    scenario: &Scenario,
    trajs: &[Trajectory],
    check_collision: bool,
) -> FeasibilityAudit {
    let w = &scenario.weights;
    let mut max_speed: f64 = 0.0;
    let mut max_acc: f64 = 0.0;
    for t in trajs {
        for time in sample_times(t.total_duration(), AUDIT_SAMPLES) {
            let s = t.probe(time).state;
            max_speed = max_speed.max(s.velocity.norm());
            max_acc = max_acc.max(s.acceleration.norm());
        }
    }
    let min_dist = crate::scenario::min_pairwise_distance(trajs, AUDIT_SAMPLES);
    let mut obstacle_ratio = f64::INFINITY;
    for (t, v) in trajs.iter().zip(&scenario.vehicles) {
        for time in sample_times(t.total_duration(), AUDIT_SAMPLES) {
            let p = t.probe(time).state.position;
            for o in &scenario.obstacles {
                obstacle_ratio = obstacle_ratio.min((p - o.center).norm() / (o.radius + v.radius));
            }
        }
    }
    let speed_ok = max_speed <= w.v_max * SPEED_TOLERANCE;
    let acceleration_ok = max_acc <= w.a_max * ACCELERATION_TOLERANCE;
    let distance_ok = !check_collision
        || (min_dist >= w.d_safe * DISTANCE_TOLERANCE && obstacle_ratio >= DISTANCE_TOLERANCE);
    FeasibilityAudit {
        max_speed,
        max_acceleration: max_acc,
        min_pairwise_distance: min_dist,
        min_obstacle_ratio: obstacle_ratio,
        speed_ok,
        acceleration_ok,
        collision_checked: check_collision,
        distance_ok,
        passed: speed_ok && acceleration_ok && distance_ok,
    }
}

fn run_stage(
    name: &str,
    scenario: &Scenario,
    x0: &[f64],
    stage: &StageConfig,
    opts: &SolverOptions,
    exit_margin: Option<f64>,
) -> Result<(DecisionVector, StageReport)> {
    let layout = layout_for(scenario)?;
    let horizons: Vec<f64> = layout
        .decode(x0)?
        .iter()
        .map(|(_, t)| t.iter().sum())
        .collect();
    let model = CostModel::new(scenario, layout, &horizons)?;
    let margin = exit_margin.unwrap_or(opts.topology_margin);
    let constrained = scenario
        .pattern
        .iter()
        .any(|(_, _, l)| l != Interaction::None);

    if exit_margin.is_some() && (!constrained || topology_margin_met(scenario, x0, margin)) {
        let cost = model.evaluate(x0, stage)?.breakdown.total;
        return Ok((
            x0.to_vec(),
            StageReport {
                name: name.into(),
                iterations: 0,
                evaluations: 1,
                termination: Termination::Callback,
                final_cost: cost,
                topology_satisfied: true,
            },
        ));
    }

    let objective = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let e = model.evaluate(x, stage)?;
        Ok((e.breakdown.total, e.gradient))
    };
    let callback = |_: usize, x: &[f64], _: f64| {
        exit_margin.is_some() && topology_margin_met(scenario, x, margin)
    };
    let (x, rep) = lbfgs_minimize(objective, x0, &opts.lbfgs, callback)?;
    let satisfied = topology_margin_met(scenario, &x, margin);
    Ok((
        x,
        StageReport {
            name: name.into(),
            iterations: rep.iterations,
            evaluations: rep.evaluations,
            termination: rep.termination,
            final_cost: rep.final_cost,
            topology_satisfied: satisfied,
        },
    ))
}

/// Runs the configured schedule from `x0`.
pub fn optimize_from(scenario: &Scenario, x0: &[f64], opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    let clock = Instant::now();
    let mut stages = Vec::new();
    let (x, last_config) = match opts.schedule {
        Schedule::TwoStage | Schedule::StageOneOnly => {
            let config = opts.stage_one(scenario);
            let (x1, r1) = run_stage(
                "topology",
                scenario,
                x0,
                &config,
                opts,
                Some(opts.topology_margin),
            )?;
            stages.push(r1);
            if opts.schedule == Schedule::StageOneOnly {
                (x1, config)
            } else {
                let config = opts.stage_two(scenario);
                let (x2, r2) = run_stage("full", scenario, &x1, &config, opts, None)?;
                stages.push(r2);
                (x2, config)
            }
        }
        Schedule::SingleStage => {
            let config = opts.single_stage(scenario);
            let (x1, r1) = run_stage("single", scenario, x0, &config, opts, None)?;
            stages.push(r1);
            (x1, config)
        }
    };

    let trajectories = decode_trajectories(scenario, &x)?;
    let layout = layout_for(scenario)?;
    let horizons: Vec<f64> = trajectories
        .iter()
        .map(Trajectory::total_duration)
        .collect();
    let breakdown = CostModel::new(scenario, layout, &horizons)?
        .evaluate_trajectories(&trajectories, &last_config)?
        .breakdown;
    let pairs = pair_reports(scenario, &trajectories)?;
    let all_satisfied = pairs.iter().all(|p| p.satisfied);
    let feasibility = feasibility_audit(
        scenario,
        &trajectories,
        opts.schedule != Schedule::StageOneOnly,
    );
    let wall_clock_ms = clock.elapsed().as_secs_f64() * 1e3;
    let metrics = compute_metrics(&trajectories, wall_clock_ms);
    let report = OptimizationReport {
        scenario: scenario.name.clone(),
        schedule: opts.schedule,
        convergence: stages
            .last()
            .map(|s| s.termination)
            .unwrap_or(Termination::MaxIterations),
        stages,
        breakdown,
        pairs,
        all_satisfied,
        topology_margin: opts.topology_margin,
        min_pairwise_distance: feasibility.min_pairwise_distance,
        feasibility,
        wall_clock_ms,
        metrics,
    };
    Ok(Solution {
        decision: x,
        trajectories,
        report,
    })
}

/// Optimizes a scenario from its deterministic initial guess.
pub fn two_stage_optimize(
    scenario: &Scenario,
    opts: &SolverOptions,
) -> Result<(Vec<Trajectory>, OptimizationReport)> {
    let x0 = initialize(scenario)?;
    let sol = optimize_from(scenario, &x0, opts)?;
    Ok((sol.trajectories, sol.report))
}
