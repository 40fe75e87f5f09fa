//! Joint objective: control effort, time, kinodynamic, collision and topology
//! terms with exact gradients in coefficient/duration space.

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::solver::DecisionLayout;
use crate::topology::{
    closest_approach, keypoint_sensitivities, metric_at_keypoint, pair_window, Interaction,
    KeyPointSensitivity, KeyPointSolution, RotationForm,
};
use crate::trajectory::eval_basis;
use crate::trajectory::{
    gauss_legendre_unit, minco_solve, CoeffGradient, Coeffs, Minco, Trajectory, BASIS_LEN,
};
use crate::Vec2;
use serde::{Deserialize, Serialize};

/// Penalty weights and limits.
///
/// `kinodynamic`, `collision` and `d_safe` are engineering defaults: `d_safe`
/// is two enclosing-disk radii of a 0.85 m × 0.65 m body plus 0.13 m clearance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub time: f64,
    pub topology_stage1: f64,
    pub topology_stage2: f64,
    pub kinodynamic: f64,
    pub collision: f64,
    pub d_safe: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            time: 100.0,
            topology_stage1: 500.0,
            topology_stage2: 5000.0,
            kinodynamic: 1e4,
            collision: 1e6,
            d_safe: 1.2,
            v_max: 3.0,
            a_max: 2.0,
        }
    }
}

/// Weighted cost terms; `total` is their sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub effort: f64,
    pub time: f64,
    pub kinodynamic: f64,
    pub collision: f64,
    pub topology: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.effort + self.time + self.kinodynamic + self.collision + self.topology;
        self
    }
}

/// Which pairwise penalty families are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageMask {
    pub include_collision: bool,
    pub include_topology: bool,
}

impl StageMask {
    pub const FULL: StageMask = StageMask {
        include_collision: true,
        include_topology: true,
    };
    pub const TOPOLOGY_ONLY: StageMask = StageMask {
        include_collision: false,
        include_topology: true,
    };
}

/// Shape of the topology hinge `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopologyHinge {
    /// Shift `δ` so that the penalty acts on `η·M + δ`.
    pub margin: f64,
    /// Use `[max(η·M + δ, 0)]³` instead of the linear hinge.
    pub cubic: bool,
}

impl Default for TopologyHinge {
    fn default() -> Self {
        Self {
            margin: 0.0,
            cubic: false,
        }
    }
}

/// Per-vehicle and per-pair contributions, summed in sorted order so the
/// totals do not depend on how vehicles are labelled.
#[derive(Default)]
struct FamilyParts {
    effort: Vec<f64>,
    time: Vec<f64>,
    kinodynamic: Vec<f64>,
    collision: Vec<f64>,
    topology: Vec<f64>,
}

impl FamilyParts {
    fn total(self) -> CostBreakdown {
        let sum = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v.iter().sum()
        };
        CostBreakdown {
            effort: sum(self.effort),
            time: sum(self.time),
            kinodynamic: sum(self.kinodynamic),
            collision: sum(self.collision),
            topology: sum(self.topology),
            total: 0.0,
        }
        .finish()
    }
}

/// Everything that changes between optimization stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    pub mask: StageMask,
    pub topology_weight: f64,
    pub hinge: TopologyHinge,
}

impl StageConfig {
    pub fn full(weights: &Weights) -> Self {
        Self {
            mask: StageMask::FULL,
            topology_weight: weights.topology_stage1,
            hinge: TopologyHinge::default(),
        }
    }
}

/// Cost families of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Effort,
    Time,
    Kinodynamic,
    Collision,
    Topology,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Effort,
        Family::Time,
        Family::Kinodynamic,
        Family::Collision,
        Family::Topology,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Effort => "effort",
            Family::Time => "time",
            Family::Kinodynamic => "kinodynamic",
            Family::Collision => "collision",
            Family::Topology => "topology",
        }
    }
}

/// Subset of families to evaluate, independent of the stage mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub effort: bool,
    pub time: bool,
    pub kinodynamic: bool,
    pub collision: bool,
    pub topology: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        effort: true,
        time: true,
        kinodynamic: true,
        collision: true,
        topology: true,
    };

    pub fn only(family: Family) -> Self {
        Terms {
            effort: family == Family::Effort,
            time: family == Family::Time,
            kinodynamic: family == Family::Kinodynamic,
            collision: family == Family::Collision,
            topology: family == Family::Topology,
        }
    }
}

// ---------------------------------------------------------------------------
// Per-vehicle terms

/// `∫ ‖jerk‖² dt` in closed form, with gradients.
pub fn effort_cost(traj: &Trajectory) -> (f64, CoeffGradient) {
    let mut grad = CoeffGradient::zeros_like(traj);
    let mut total = 0.0;
    for (k, (c, &t)) in traj.pieces().iter().zip(traj.durations()).enumerate() {
        let (t2, t3, t4, t5) = (t * t, t * t * t, t * t * t * t, t * t * t * t * t);
        for d in 0..2 {
            let (c3, c4, c5) = (c[(3, d)], c[(4, d)], c[(5, d)]);
            total += 36.0 * c3 * c3 * t
                + 144.0 * c3 * c4 * t2
                + (192.0 * c4 * c4 + 240.0 * c3 * c5) * t3
                + 720.0 * c4 * c5 * t4
                + 720.0 * c5 * c5 * t5;
            grad.coeffs[k][(3, d)] += 72.0 * c3 * t + 144.0 * c4 * t2 + 240.0 * c5 * t3;
            grad.coeffs[k][(4, d)] += 144.0 * c3 * t2 + 384.0 * c4 * t3 + 720.0 * c5 * t4;
            grad.coeffs[k][(5, d)] += 240.0 * c3 * t3 + 720.0 * c4 * t4 + 1440.0 * c5 * t5;
            grad.durations[k] += 36.0 * c3 * c3
                + 288.0 * c3 * c4 * t
                + 3.0 * (192.0 * c4 * c4 + 240.0 * c3 * c5) * t2
                + 2880.0 * c4 * c5 * t3
                + 3600.0 * c5 * c5 * t4;
        }
    }
    (total, grad)
}

/// `w_T · Σ T_i` and its gradient.
pub fn time_cost(durations: &[f64], weight: f64) -> (f64, Vec<f64>) {
    (
        weight * durations.iter().sum::<f64>(),
        vec![weight; durations.len()],
    )
}

fn add_basis_outer(target: &mut Coeffs, basis: &[f64; BASIS_LEN], g: &Vec2) {
    for j in 0..BASIS_LEN {
        target[(j, 0)] += basis[j] * g.x;
        target[(j, 1)] += basis[j] * g.y;
    }
}

/// Cubic hinge `[max(x, 0)]³` and its derivative.
#[inline]
fn cubic_hinge(x: f64) -> (f64, f64) {
    if x > 0.0 {
        (x * x * x, 3.0 * x * x)
    } else {
        (0.0, 0.0)
    }
}

/// Quadrature of `φ(p, ṗ, p̈)` over every piece, weighted by `w_j T_k`.
///
/// `integrand` returns `(φ, ∂φ/∂p, ∂φ/∂ṗ, ∂φ/∂p̈)`.
fn integrate_pieces(
    traj: &Trajectory,
    mut integrand: impl FnMut(&Vec2, &Vec2, &Vec2) -> (f64, Vec2, Vec2, Vec2),
) -> (f64, CoeffGradient) {
    let rule = gauss_legendre_unit();
    let mut grad = CoeffGradient::zeros_like(traj);
    let mut total = 0.0;
    for k in 0..traj.piece_count() {
        let dur = traj.durations()[k];
        for &(x, w) in rule.iter() {
            let tau = x * dur;
            let s = traj.piece_state(k, tau);
            let (phi, gp, gv, ga) = integrand(&s.position, &s.velocity, &s.acceleration);
            if phi == 0.0 && gp == Vec2::zeros() && gv == Vec2::zeros() && ga == Vec2::zeros() {
                continue;
            }
            let scale = w * dur;
            total += scale * phi;
            add_basis_outer(&mut grad.coeffs[k], &eval_basis(tau, 0), &(scale * gp));
            add_basis_outer(&mut grad.coeffs[k], &eval_basis(tau, 1), &(scale * gv));
            add_basis_outer(&mut grad.coeffs[k], &eval_basis(tau, 2), &(scale * ga));
            let dphi_dtau = gp.dot(&s.velocity) + gv.dot(&s.acceleration) + ga.dot(&s.jerk);
            grad.durations[k] += w * phi + scale * dphi_dtau * x;
        }
    }
    (total, grad)
}

/// Unweighted `Σ [max(‖ṗ‖²−v²,0)]³ + [max(‖p̈‖²−a²,0)]³` over the quadrature nodes.
pub fn kinodynamic_penalty(traj: &Trajectory, v_max: f64, a_max: f64) -> (f64, CoeffGradient) {
    let (vm2, am2) = (v_max * v_max, a_max * a_max);
    integrate_pieces(traj, |_, v, a| {
        let (pv, dv) = cubic_hinge(v.norm_squared() - vm2);
        let (pa, da) = cubic_hinge(a.norm_squared() - am2);
        (pv + pa, Vec2::zeros(), 2.0 * dv * v, 2.0 * da * a)
    })
}

/// Unweighted clearance penalty `Σ [max(r²−‖p−o‖²,0)]³` against a static disk.
pub fn obstacle_penalty(traj: &Trajectory, center: &Vec2, clearance: f64) -> (f64, CoeffGradient) {
    let r2 = clearance * clearance;
    integrate_pieces(traj, |p, _, _| {
        let d = p - center;
        let (phi, dphi) = cubic_hinge(r2 - d.norm_squared());
        (phi, -2.0 * dphi * d, Vec2::zeros(), Vec2::zeros())
    })
}

/// Default collision sampling: 32 intervals per second, at least 64.
pub fn collision_intervals(window: f64) -> usize {
    ((32.0 * window).ceil() as usize).max(64)
}

/// Unweighted pairwise collision penalty on the default sampling of the pair window.
pub fn collision_penalty(
    a: &Trajectory,
    b: &Trajectory,
    d_safe: f64,
) -> (f64, CoeffGradient, CoeffGradient) {
    let n = collision_intervals(pair_window(a, b).1);
    collision_penalty_sampled(a, b, d_safe, n)
}

/// Trapezoidal sum of `[max(d²−‖p−p̂‖²,0)]³` over `intervals` uniform steps
/// of `[0, max(T_a, T_b)]`.
///
/// The sample times scale with the window, so the longer trajectory's
/// durations also receive the derivative through the node positions.
pub fn collision_penalty_sampled(
    a: &Trajectory,
    b: &Trajectory,
    d_safe: f64,
    intervals: usize,
) -> (f64, CoeffGradient, CoeffGradient) {
    let mut ga = CoeffGradient::zeros_like(a);
    let mut gb = CoeffGradient::zeros_like(b);
    let window = pair_window(a, b).1;
    let n = intervals.max(1);
    let step = window / n as f64;
    let d2 = d_safe * d_safe;
    let mut total = 0.0;
    let mut d_window = 0.0;
    for j in 0..=n {
        let t = if j == n { window } else { j as f64 * step };
        let pa = a.probe(t);
        let pb = b.probe(t);
        let rel = pa.state.position - pb.state.position;
        let (phi, dphi) = cubic_hinge(d2 - rel.norm_squared());
        if phi == 0.0 && dphi == 0.0 {
            continue;
        }
        let weight = if j == 0 || j == n { 0.5 * step } else { step };
        total += weight * phi;
        let g_rel = -2.0 * dphi * rel * weight;
        ga.add_state_gradient(a, &pa, &g_rel, &Vec2::zeros());
        gb.add_state_gradient(b, &pb, &(-g_rel), &Vec2::zeros());
        let dphi_dt = g_rel.dot(&(pa.state.velocity - pb.state.velocity));
        d_window += dphi_dt * (j as f64 / n as f64) + weight * phi / window;
    }
    if a.total_duration() >= b.total_duration() {
        ga.durations.iter_mut().for_each(|d| *d += d_window);
    } else {
        gb.durations.iter_mut().for_each(|d| *d += d_window);
    }
    (total, ga, gb)
}

/// Value and gradients of one topology hinge term.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyTerm {
    pub value: f64,
    pub metric: f64,
    pub active: bool,
    pub a: CoeffGradient,
    pub b: CoeffGradient,
}

/// `G = max(η·M + δ, 0)` (or its cube) at the key point, with gradients through
/// the states at `t*` and through `t*` itself.
pub fn topology_penalty(
    sol: &KeyPointSolution,
    sens: &KeyPointSensitivity,
    a: &Trajectory,
    b: &Trajectory,
    interaction: Interaction,
    hinge: &TopologyHinge,
) -> TopologyTerm {
    let metric = metric_at_keypoint(sol);
    let eta = f64::from(interaction.eta());
    let mut term = TopologyTerm {
        value: 0.0,
        metric,
        active: false,
        a: CoeffGradient::zeros_like(a),
        b: CoeffGradient::zeros_like(b),
    };
    if interaction == Interaction::None {
        return term;
    }
    let s = eta * metric + hinge.margin;
    if s <= 0.0 {
        return term;
    }
    let (value, slope) = if hinge.cubic {
        (s * s * s, 3.0 * s * s)
    } else {
        (s, 1.0)
    };
    term.value = value;
    term.active = true;

    let d = sol.relative_position();
    let v = sol.relative_velocity();
    let acc = sol.relative_acceleration();
    let k = slope * eta;
    // ∂G/∂p = η Bᵀ(ṗ−ṗ̂), ∂G/∂ṗ = η B(p−p̂)
    let g_p = k * RotationForm::apply_transpose(&v);
    let g_v = k * RotationForm::apply(&d);
    term.a.add_state_gradient(a, &sol.probe_a, &g_p, &g_v);
    term.b.add_state_gradient(b, &sol.probe_b, &(-g_p), &(-g_v));
    // ∂G/∂t* = η((p̈−p̈̂)ᵀB(p−p̂) + (ṗ−ṗ̂)ᵀB(ṗ−ṗ̂)); the second product vanishes.
    let g_t = k * (RotationForm::bilinear(&acc, &d) + RotationForm::bilinear(&v, &v));
    if g_t != 0.0 {
        term.a.add_scaled(&sens.a, g_t);
        term.b.add_scaled(&sens.b, g_t);
    }
    term
}

// ---------------------------------------------------------------------------
// Joint objective

/// The other side of a pairwise term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counterpart {
    Vehicle(usize),
    Obstacle(usize),
}

/// Key-point diagnostics of one constrained pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStatus {
    pub vehicle: usize,
    pub other: Counterpart,
    pub interaction: Interaction,
    pub metric: f64,
    pub t_star: f64,
    pub active: bool,
    pub has_sensitivity: bool,
}

#[derive(Debug, Clone)]
struct VehiclePair {
    i: usize,
    j: usize,
    interaction: Interaction,
    intervals: usize,
}

/// Scenario-derived data needed to evaluate the objective.
///
/// Collision sample counts are frozen at construction (from the supplied
/// duration horizon) so the objective stays smooth while durations change.
#[derive(Debug, Clone)]
pub struct CostModel {
    scenario: Scenario,
    layout: DecisionLayout,
    obstacles: Vec<Trajectory>,
    pairs: Vec<VehiclePair>,
}

/// Objective value and coefficient-space gradients of every vehicle.
#[derive(Debug, Clone)]
pub struct TrajectoryCosts {
    pub breakdown: CostBreakdown,
    pub gradients: Vec<CoeffGradient>,
    pub pairs: Vec<PairStatus>,
}

/// Objective value and gradient in decision space.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub breakdown: CostBreakdown,
    pub gradient: Vec<f64>,
    pub pairs: Vec<PairStatus>,
}

impl CostModel {
    /// `horizons[i]` is the expected duration of vehicle `i`, used to size the
    /// collision sampling of every pair.
    pub fn new(scenario: &Scenario, layout: DecisionLayout, horizons: &[f64]) -> Result<Self> {
        let n = scenario.vehicles.len();
        if layout.vehicle_count() != n || horizons.len() != n {
            return Err(Error::domain(format!(
                "scenario has {n} vehicles, layout {} and horizons {}",
                layout.vehicle_count(),
                horizons.len()
            )));
        }
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&scenario.vehicles[i].id, &scenario.vehicles[j].id);
                pairs.push(VehiclePair {
                    i,
                    j,
                    interaction: scenario.pattern.get(a, b),
                    intervals: collision_intervals(horizons[i].max(horizons[j])),
                });
            }
        }
        Ok(Self {
            obstacles: scenario
                .obstacles
                .iter()
                .map(|o| Trajectory::stationary(o.center))
                .collect(),
            scenario: scenario.clone(),
            layout,
            pairs,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn layout(&self) -> &DecisionLayout {
        &self.layout
    }

    /// Solves the minimum-jerk systems of every vehicle for a decision vector.
    pub fn trajectories(&self, x: &[f64]) -> Result<Vec<Minco>> {
        let decoded = self.layout.decode(x)?;
        self.scenario
            .vehicles
            .iter()
            .zip(decoded)
            .map(|(v, (q, t))| minco_solve(&v.start, &v.goal, &q, &t))
            .collect()
    }

    /// Objective on explicit trajectories (one per vehicle, scenario order).
    pub fn evaluate_trajectories(
        &self,
        trajs: &[Trajectory],
        stage: &StageConfig,
    ) -> Result<TrajectoryCosts> {
        self.evaluate_terms_on(trajs, stage, Terms::ALL)
    }

    pub fn evaluate_terms_on(
        &self,
        trajs: &[Trajectory],
        stage: &StageConfig,
        terms: Terms,
    ) -> Result<TrajectoryCosts> {
        let scenario = &self.scenario;
        let w = &scenario.weights;
        if trajs.len() != scenario.vehicles.len() {
            return Err(Error::domain(format!(
                "{} trajectories for {} vehicles",
                trajs.len(),
                scenario.vehicles.len()
            )));
        }
        let mut parts = FamilyParts::default();
        let mut grads: Vec<CoeffGradient> = trajs.iter().map(CoeffGradient::zeros_like).collect();
        let mut pairs = Vec::new();

        for (i, traj) in trajs.iter().enumerate() {
            if terms.effort {
                let (e, ge) = effort_cost(traj);
                parts.effort.push(e);
                grads[i].add_scaled(&ge, 1.0);
            }
            if terms.time {
                let (t, gt) = time_cost(traj.durations(), w.time);
                parts.time.push(t);
                grads[i]
                    .durations
                    .iter_mut()
                    .zip(gt)
                    .for_each(|(d, g)| *d += g);
            }
            if terms.kinodynamic && w.kinodynamic > 0.0 {
                let (k, gk) = kinodynamic_penalty(traj, w.v_max, w.a_max);
                parts.kinodynamic.push(w.kinodynamic * k);
                grads[i].add_scaled(&gk, w.kinodynamic);
            }
        }

        for pair in &self.pairs {
            let (a, b) = (&trajs[pair.i], &trajs[pair.j]);
            if terms.collision && stage.mask.include_collision && w.collision > 0.0 {
                let (c, ga, gb) = collision_penalty_sampled(a, b, w.d_safe, pair.intervals);
                if c > 0.0 {
                    parts.collision.push(w.collision * c);
                    grads[pair.i].add_scaled(&ga, w.collision);
                    grads[pair.j].add_scaled(&gb, w.collision);
                }
            }
            if terms.topology
                && stage.mask.include_topology
                && pair.interaction != Interaction::None
            {
                let (term, sol) = self.topology_term(a, b, pair.interaction, &stage.hinge)?;
                parts.topology.push(stage.topology_weight * term.value);
                if term.active {
                    grads[pair.i].add_scaled(&term.a, stage.topology_weight);
                    grads[pair.j].add_scaled(&term.b, stage.topology_weight);
                }
                pairs.push(PairStatus {
                    vehicle: pair.i,
                    other: Counterpart::Vehicle(pair.j),
                    interaction: pair.interaction,
                    metric: term.metric,
                    t_star: sol.t_star,
                    active: term.active,
                    has_sensitivity: sol.has_sensitivity(),
                });
            }
        }

        for (i, traj) in trajs.iter().enumerate() {
            let vehicle = &scenario.vehicles[i];
            for (o, obstacle) in scenario.obstacles.iter().enumerate() {
                if terms.collision && stage.mask.include_collision && w.collision > 0.0 {
                    let (c, g) =
                        obstacle_penalty(traj, &obstacle.center, obstacle.radius + vehicle.radius);
                    if c > 0.0 {
                        parts.collision.push(w.collision * c);
                        grads[i].add_scaled(&g, w.collision);
                    }
                }
                let interaction = scenario.pattern.get(&vehicle.id, &obstacle.id);
                if terms.topology && stage.mask.include_topology && interaction != Interaction::None
                {
                    let (term, sol) =
                        self.topology_term(traj, &self.obstacles[o], interaction, &stage.hinge)?;
                    parts.topology.push(stage.topology_weight * term.value);
                    if term.active {
                        grads[i].add_scaled(&term.a, stage.topology_weight);
                    }
                    pairs.push(PairStatus {
                        vehicle: i,
                        other: Counterpart::Obstacle(o),
                        interaction,
                        metric: term.metric,
                        t_star: sol.t_star,
                        active: term.active,
                        has_sensitivity: sol.has_sensitivity(),
                    });
                }
            }
        }

        Ok(TrajectoryCosts {
            breakdown: parts.total(),
            gradients: grads,
            pairs,
        })
    }

    fn topology_term(
        &self,
        a: &Trajectory,
        b: &Trajectory,
        interaction: Interaction,
        hinge: &TopologyHinge,
    ) -> Result<(TopologyTerm, KeyPointSolution)> {
        let sol = closest_approach(a, b, pair_window(a, b))?;
        let sens = keypoint_sensitivities(&sol, a, b)?;
        Ok((topology_penalty(&sol, &sens, a, b, interaction, hinge), sol))
    }

    /// Objective and gradient with respect to the stacked waypoints and
    /// duration parameters.
    pub fn evaluate(&self, x: &[f64], stage: &StageConfig) -> Result<Evaluation> {
        self.evaluate_terms(x, stage, Terms::ALL)
    }

    pub fn evaluate_terms(
        &self,
        x: &[f64],
        stage: &StageConfig,
        terms: Terms,
    ) -> Result<Evaluation> {
        let mincos = self.trajectories(x)?;
        let trajs: Vec<Trajectory> = mincos.iter().map(|m| m.trajectory().clone()).collect();
        let costs = self.evaluate_terms_on(&trajs, stage, terms)?;
        let mut gradient = vec![0.0; x.len()];
        for (i, (minco, g)) in mincos.iter().zip(&costs.gradients).enumerate() {
            let back = minco.backprop(g)?;
            self.layout
                .write_gradient(x, i, &back.waypoints, &back.durations, &mut gradient);
        }
        Ok(Evaluation {
            breakdown: costs.breakdown,
            gradient,
            pairs: costs.pairs,
        })
    }
}

/// Objective of a scenario at a decision vector; collision sampling is sized
/// from the durations encoded in `x`.
pub fn total_objective(
    scenario: &Scenario,
    x: &[f64],
    layout: &DecisionLayout,
    stage: &StageConfig,
) -> Result<Evaluation> {
    let horizons: Vec<f64> = layout
        .decode(x)?
        .iter()
        .map(|(_, t)| t.iter().sum())
        .collect();
    CostModel::new(scenario, layout.clone(), &horizons)?.evaluate(x, stage)
}
