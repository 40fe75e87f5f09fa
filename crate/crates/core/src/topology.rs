//! Local homotopy invariant between two agents.
//!
//! The invariant is the signed areal velocity of the relative position
//! `(ṗ − ṗ̂)ᵀ B (p − p̂)` evaluated at the instant of closest approach (the key
//! point). Positive values mean agent `a` moves counterclockwise around agent
//! `b`, negative values clockwise. Unlike the winding angle it varies
//! continuously when a trajectory is dragged across the other agent.

use crate::error::{Error, Result};
use crate::trajectory::{CoeffGradient, FlatState, Probe, Trajectory};
use crate::Vec2;
use nalgebra::Matrix2;
use std::collections::BTreeMap;
use std::fmt;

/// The quarter-turn matrix `B = [[0, −1], [1, 0]]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotationForm;

impl RotationForm {
    pub fn matrix() -> Matrix2<f64> {
        Matrix2::new(0.0, -1.0, 1.0, 0.0)
    }

    /// `B v`
    #[inline]
    pub fn apply(v: &Vec2) -> Vec2 {
        Vec2::new(-v.y, v.x)
    }

    /// `Bᵀ v`
    #[inline]
    pub fn apply_transpose(v: &Vec2) -> Vec2 {
        Vec2::new(v.y, -v.x)
    }

    /// `uᵀ B w`
    #[inline]
    pub fn bilinear(u: &Vec2, w: &Vec2) -> f64 {
        u.dot(&Self::apply(w))
    }
}

/// `rel_vᵀ B rel_p`: positive for counterclockwise relative motion.
#[inline]
pub fn homotopy_metric(rel_p: &Vec2, rel_v: &Vec2) -> f64 {
    RotationForm::bilinear(rel_v, rel_p)
}

/// Requested or observed passing direction of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Interaction {
    CounterClockwise,
    #[default]
    None,
    Clockwise,
}

impl Interaction {
    /// Pattern label: +1 clockwise, −1 counterclockwise, 0 unconstrained.
    pub fn eta(self) -> i8 {
        match self {
            Interaction::CounterClockwise => -1,
            Interaction::None => 0,
            Interaction::Clockwise => 1,
        }
    }

    pub fn from_eta(eta: i64) -> Option<Self> {
        match eta {
            -1 => Some(Interaction::CounterClockwise),
            0 => Some(Interaction::None),
            1 => Some(Interaction::Clockwise),
            _ => None,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Interaction::CounterClockwise => Interaction::Clockwise,
            Interaction::None => Interaction::None,
            Interaction::Clockwise => Interaction::CounterClockwise,
        }
    }

    /// Label of an observed metric value, `None` inside `[-threshold, threshold]`.
    pub fn from_metric(metric: f64, threshold: f64) -> Self {
        if metric > threshold {
            Interaction::CounterClockwise
        } else if metric < -threshold {
            Interaction::Clockwise
        } else {
            Interaction::None
        }
    }

    /// Whether the inequality `η·M < 0` holds (vacuous for `None`).
    pub fn is_satisfied_by(self, metric: f64) -> bool {
        self == Interaction::None || f64::from(self.eta()) * metric < 0.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Interaction::CounterClockwise => "counterclockwise",
            Interaction::None => "none",
            Interaction::Clockwise => "clockwise",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "counterclockwise" | "ccw" | "-1" => Some(Interaction::CounterClockwise),
            "none" | "0" => Some(Interaction::None),
            "clockwise" | "cw" | "1" | "+1" => Some(Interaction::Clockwise),
            _ => None,
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric pairwise interaction labels keyed by agent id.
///
/// Pairs that were never set read as [`Interaction::None`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionPattern {
    labels: BTreeMap<(String, String), Interaction>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl InteractionPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, a: &str, b: &str, label: Interaction) -> Result<()> {
        if a == b {
            return Err(Error::domain(format!(
                "self-pair '{a}' in interaction pattern"
            )));
        }
        let key = pair_key(a, b);
        if label == Interaction::None {
            self.labels.remove(&key);
        } else {
            self.labels.insert(key, label);
        }
        Ok(())
    }

    pub fn get(&self, a: &str, b: &str) -> Interaction {
        self.labels
            .get(&pair_key(a, b))
            .copied()
            .unwrap_or_default()
    }

    /// Constrained pairs in canonical (sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Interaction)> {
        self.labels
            .iter()
            .map(|((a, b), l)| (a.as_str(), b.as_str(), *l))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self {
            labels: self
                .labels
                .iter()
                .map(|(k, l)| (k.clone(), l.reversed()))
                .collect(),
        }
    }
}

/// Settings of the closest-approach search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyPointOptions {
    /// Uniform coarse samples over the window, endpoints included.
    pub samples: usize,
    pub max_newton_iterations: usize,
    /// Curvature below which the key point is treated as degenerate.
    pub curvature_floor: f64,
}

impl Default for KeyPointOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            max_newton_iterations: 20,
            curvature_floor: 1e-8,
        }
    }
}

/// Result of the inner closest-approach problem.
#[derive(Debug, Clone, Copy)]
pub struct KeyPointSolution {
    pub t_star: f64,
    pub window: (f64, f64),
    pub probe_a: Probe,
    pub probe_b: Probe,
    /// Squared distance at `t_star`.
    pub f_value: f64,
    /// First time derivative of the squared distance at `t_star`.
    pub f_t: f64,
    /// Second time derivative of the squared distance at `t_star`.
    pub f_tt: f64,
    pub on_boundary: bool,
    /// Curvature at or below the floor; sensitivities are not defined.
    pub degenerate: bool,
}

impl KeyPointSolution {
    pub fn state_a(&self) -> &FlatState {
        &self.probe_a.state
    }

    pub fn state_b(&self) -> &FlatState {
        &self.probe_b.state
    }

    pub fn relative_position(&self) -> Vec2 {
        self.probe_a.state.position - self.probe_b.state.position
    }

    pub fn relative_velocity(&self) -> Vec2 {
        self.probe_a.state.velocity - self.probe_b.state.velocity
    }

    pub fn relative_acceleration(&self) -> Vec2 {
        self.probe_a.state.acceleration - self.probe_b.state.acceleration
    }

    /// Whether implicit differentiation through `t*` is valid here.
    pub fn has_sensitivity(&self) -> bool {
        !self.on_boundary && !self.degenerate
    }
}

/// Time window on which two trajectories are compared: both are parked at
/// their goals after finishing.
pub fn pair_window(a: &Trajectory, b: &Trajectory) -> (f64, f64) {
    (0.0, a.total_duration().max(b.total_duration()))
}

struct Distance {
    f: f64,
    f_t: f64,
    f_tt: f64,
}

fn distance_at(a: &Trajectory, b: &Trajectory, t: f64) -> (Probe, Probe, Distance) {
    let pa = a.probe(t);
    let pb = b.probe(t);
    let d = pa.state.position - pb.state.position;
    let v = pa.state.velocity - pb.state.velocity;
    let acc = pa.state.acceleration - pb.state.acceleration;
    let dist = Distance {
        f: d.norm_squared(),
        f_t: 2.0 * d.dot(&v),
        f_tt: 2.0 * d.dot(&acc) + 2.0 * v.norm_squared(),
    };
    (pa, pb, dist)
}

pub fn closest_approach(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
) -> Result<KeyPointSolution> {
    closest_approach_with(a, b, window, &KeyPointOptions::default())
}

/// Global minimum of `‖p_a(t) − p_b(t)‖²` over the coarse samples, then damped
/// Newton refinement inside the window.
pub fn closest_approach_with(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
    opts: &KeyPointOptions,
) -> Result<KeyPointSolution> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(Error::domain(format!("invalid window [{lo}, {hi}]")));
    }
    if opts.samples < 2 {
        return Err(Error::domain("closest approach needs at least two samples"));
    }
    let n = opts.samples;
    let h = (hi - lo) / (n - 1) as f64;
    let mut best_t = lo;
    let mut best_f = f64::INFINITY;
    for i in 0..n {
        let t = if i == n - 1 { hi } else { lo + i as f64 * h };
        let (_, _, d) = distance_at(a, b, t);
        // strict comparison keeps the earliest of tied samples
        if d.f < best_f {
            best_f = d.f;
            best_t = t;
        }
    }

    let mut t = best_t;
    let (_, _, mut cur) = distance_at(a, b, t);
    for _ in 0..opts.max_newton_iterations {
        if cur.f_t == 0.0 {
            break;
        }
        let convex = cur.f_tt > opts.curvature_floor;
        let mut step = if convex {
            -cur.f_t / cur.f_tt
        } else {
            -cur.f_t.signum() * h
        };
        step = step.clamp(-h, h);
        let polish = convex && step.abs() <= 1e-6 * h;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = (t + step).clamp(lo, hi);
            if cand == t {
                break;
            }
            let (_, _, d) = distance_at(a, b, cand);
            if polish || d.f <= cur.f {
                accepted = Some((cand, d));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, d)) => {
                let moved = (cand - t).abs();
                t = cand;
                cur = d;
                if moved <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                    break;
                }
            }
            None => break,
        }
    }

    // Rounding in the polishing steps must not leave us above the coarse minimum.
    if cur.f > best_f * (1.0 + 1e-12) + 1e-300 {
        t = best_t;
    }
    let (probe_a, probe_b, d) = distance_at(a, b, t);
    let edge = 4.0 * f64::EPSILON * (1.0 + hi.abs());
    let on_boundary = (t - lo <= edge && d.f_t >= 0.0) || (hi - t <= edge && d.f_t <= 0.0);
    Ok(KeyPointSolution {
        t_star: t,
        window,
        probe_a,
        probe_b,
        f_value: d.f,
        f_t: d.f_t,
        f_tt: d.f_tt,
        on_boundary,
        degenerate: d.f_tt <= opts.curvature_floor,
    })
}

/// Derivatives of the key-point time with respect to the coefficients and
/// durations of both trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyPointSensitivity {
    pub a: CoeffGradient,
    pub b: CoeffGradient,
}

/// Implicit-function sensitivities `∂t*/∂θ = −f_{θt} / f_tt`.
///
/// All zero on a window edge or when the curvature is degenerate.
pub fn keypoint_sensitivities(
    sol: &KeyPointSolution,
    a: &Trajectory,
    b: &Trajectory,
) -> Result<KeyPointSensitivity> {
    check_matches(sol, a, b)?;
    let mut out = KeyPointSensitivity {
        a: CoeffGradient::zeros_like(a),
        b: CoeffGradient::zeros_like(b),
    };
    if !sol.has_sensitivity() {
        return Ok(out);
    }
    // f_t = 2 (p − p̂)ᵀ(ṗ − ṗ̂): partials with respect to p, ṗ of each agent
    let d = sol.relative_position();
    let v = sol.relative_velocity();
    let scale = -1.0 / sol.f_tt;
    out.a
        .add_state_gradient(a, &sol.probe_a, &(2.0 * scale * v), &(2.0 * scale * d));
    out.b
        .add_state_gradient(b, &sol.probe_b, &(-2.0 * scale * v), &(-2.0 * scale * d));
    Ok(out)
}

fn check_matches(sol: &KeyPointSolution, a: &Trajectory, b: &Trajectory) -> Result<()> {
    let same = |traj: &Trajectory, probe: &Probe| {
        probe.location.index < traj.piece_count() && traj.probe(sol.t_star).state == probe.state
    };
    if same(a, &sol.probe_a) && same(b, &sol.probe_b) {
        Ok(())
    } else {
        Err(Error::domain(
            "key point was not computed on these trajectories",
        ))
    }
}

/// Local invariant at the key point.
pub fn metric_at_keypoint(sol: &KeyPointSolution) -> f64 {
    homotopy_metric(&sol.relative_position(), &sol.relative_velocity())
}

/// Total signed angle swept by the relative position of `a` with respect to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingRecord {
    pub total_angle: f64,
}

/// Sampled winding angle of `p_a − p_b` over the window. Reference oracle, not
/// differentiable.
pub fn winding_angle_oracle(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
    samples: usize,
) -> Result<WindingRecord> {
    let (lo, hi) = window;
    if samples < 2 {
        return Err(Error::domain("winding angle needs at least two samples"));
    }
    if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::domain(format!("invalid window [{lo}, {hi}]")));
    }
    let rel = |t: f64| a.probe(t).state.position - b.probe(t).state.position;
    let points = (0..samples).map(|i| rel(lo + (hi - lo) * i as f64 / (samples - 1) as f64));
    winding_of_points(points)
}

/// Sum of signed turning angles between consecutive relative-position vectors.
pub fn winding_of_points(points: impl IntoIterator<Item = Vec2>) -> Result<WindingRecord> {
    let mut total = 0.0;
    let mut prev: Option<Vec2> = None;
    for (i, p) in points.into_iter().enumerate() {
        if p.x == 0.0 && p.y == 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "relative position vanishes at sample {i}"
            )));
        }
        if let Some(q) = prev {
            let cross = q.x * p.y - q.y * p.x;
            total += cross.atan2(q.dot(&p));
        }
        prev = Some(p);
    }
    Ok(WindingRecord { total_angle: total })
}

/// Observed passing direction: the sign of the key-point metric beyond `threshold`.
pub fn classify_interaction(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
    threshold: f64,
) -> Result<(Interaction, f64)> {
    let sol = closest_approach(a, b, window)?;
    let m = metric_at_keypoint(&sol);
    Ok((Interaction::from_metric(m, threshold), m))
}

/// Default classification threshold (m²/s).
pub const CLASSIFY_THRESHOLD: f64 = 1e-3;

/// One time-aligned sample of two agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub t: f64,
    pub a: (Vec2, Vec2),
    pub b: (Vec2, Vec2),
}

/// Classification from discrete samples (positions and velocities at shared
/// times). The key point is the nearest sample refined by a parabola through
/// its neighbours; states are linearly interpolated there.
pub fn classify_samples(samples: &[PairSample], threshold: f64) -> Result<(Interaction, f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let f = |s: &PairSample| (s.a.0 - s.b.0).norm_squared();
    let mut j = 0;
    for (i, s) in samples.iter().enumerate() {
        if f(s) < f(&samples[j]) {
            j = i;
        }
    }
    let lerp = |s0: &PairSample, s1: &PairSample, u: f64| {
        let mix = |x: Vec2, y: Vec2| x * (1.0 - u) + y * u;
        (
            mix(s0.a.0, s1.a.0) - mix(s0.b.0, s1.b.0),
            mix(s0.a.1, s1.a.1) - mix(s0.b.1, s1.b.1),
            s0.t * (1.0 - u) + s1.t * u,
        )
    };
    let (rel_p, rel_v, t) = if j > 0 && j + 1 < samples.len() {
        let (fm, f0, fp) = (f(&samples[j - 1]), f(&samples[j]), f(&samples[j + 1]));
        let denom = fm - 2.0 * f0 + fp;
        let offset = if denom > 0.0 {
            (0.5 * (fm - fp) / denom).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        if offset >= 0.0 {
            lerp(&samples[j], &samples[j + 1], offset)
        } else {
            lerp(&samples[j - 1], &samples[j], 1.0 + offset)
        }
    } else {
        let s = &samples[j];
        (s.a.0 - s.b.0, s.a.1 - s.b.1, s.t)
    };
    let m = homotopy_metric(&rel_p, &rel_v);
    Ok((Interaction::from_metric(m, threshold), m, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Coeffs;

    /// Single-piece trajectory p(t) = p0 + v t.
    fn linear(p0: Vec2, v: Vec2, duration: f64) -> Trajectory {
        let mut c = Coeffs::zeros();
        c[(0, 0)] = p0.x;
        c[(0, 1)] = p0.y;
        c[(1, 0)] = v.x;
        c[(1, 1)] = v.y;
        Trajectory::new(vec![c], vec![duration]).unwrap()
    }

    fn crossing_pair() -> (Trajectory, Trajectory) {
        (
            linear(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 5.0),
            linear(Vec2::new(5.0, 1.0), Vec2::new(-1.0, 0.0), 5.0),
        )
    }

    #[test]
    fn rotation_form_identities() {
        let b = RotationForm::matrix();
        assert_eq!(b.transpose(), -b);
        let v = Vec2::new(0.3, -2.0);
        assert_eq!(RotationForm::apply(&v), b * v);
        assert_eq!(RotationForm::apply_transpose(&v), b.transpose() * v);
        assert_eq!(RotationForm::bilinear(&v, &v), 0.0);
    }

    #[test]
    fn metric_signs() {
        assert_eq!(
            homotopy_metric(&Vec2::new(1.0, 0.0), &Vec2::new(0.0, 1.0)),
            1.0
        );
        assert_eq!(
            homotopy_metric(&Vec2::new(1.0, 0.0), &Vec2::new(0.0, -1.0)),
            -1.0
        );
        assert_eq!(
            homotopy_metric(&Vec2::new(2.0, 2.0), &Vec2::new(1.0, 1.0)),
            0.0
        );
    }

    #[test]
    fn linear_crossing_key_point() {
        let (a, b) = crossing_pair();
        let sol = closest_approach(&a, &b, (0.0, 5.0)).unwrap();
        assert!((sol.t_star - 2.5).abs() < 1e-12);
        assert!((sol.f_value - 1.0).abs() < 1e-12);
        assert!((sol.f_tt - 8.0).abs() < 1e-12);
        assert!(!sol.on_boundary && !sol.degenerate);
        assert!((sol.relative_position() - Vec2::new(0.0, -1.0)).norm() < 1e-12);
        assert!((metric_at_keypoint(&sol) - 2.0).abs() < 1e-12);
        let (label, m) = classify_interaction(&a, &b, (0.0, 5.0), 0.1).unwrap();
        assert_eq!(label, Interaction::CounterClockwise);
        assert!((m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn swapping_roles_keeps_metric() {
        let (a, b) = crossing_pair();
        let ab = metric_at_keypoint(&closest_approach(&a, &b, (0.0, 5.0)).unwrap());
        let ba = metric_at_keypoint(&closest_approach(&b, &a, (0.0, 5.0)).unwrap());
        assert_eq!(ab, ba);
    }

    #[test]
    fn mirror_image_flips_label() {
        let a = linear(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 5.0);
        let b = linear(Vec2::new(5.0, -1.0), Vec2::new(-1.0, 0.0), 5.0);
        let (label, _) = classify_interaction(&a, &b, (0.0, 5.0), 0.1).unwrap();
        assert_eq!(label, Interaction::Clockwise);
    }

    #[test]
    fn parallel_same_velocity_is_unclassified() {
        let a = linear(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), 5.0);
        let b = linear(Vec2::new(0.0, 20.0), Vec2::new(1.0, 0.0), 5.0);
        let (label, m) = classify_interaction(&a, &b, (0.0, 5.0), CLASSIFY_THRESHOLD).unwrap();
        assert_eq!(label, Interaction::None);
        assert_eq!(m, 0.0);
    }

    #[test]
    fn identical_trajectories_are_degenerate() {
        let (a, _) = crossing_pair();
        let sol = closest_approach(&a, &a, (0.0, 5.0)).unwrap();
        assert_eq!(sol.f_value, 0.0);
        assert!(sol.degenerate);
        assert_eq!(metric_at_keypoint(&sol), 0.0);
        let sens = keypoint_sensitivities(&sol, &a, &a).unwrap();
        assert!(sens.a.is_zero() && sens.b.is_zero());
    }

    #[test]
    fn stationary_points_have_flat_distance() {
        let a = Trajectory::stationary(Vec2::new(0.0, 0.0));
        let b = Trajectory::stationary(Vec2::new(3.0, 4.0));
        let sol = closest_approach(&a, &b, (0.0, 2.0)).unwrap();
        assert_eq!(sol.f_value, 25.0);
        assert_eq!(sol.f_tt, 0.0);
        assert!(sol.degenerate);
    }

    #[test]
    fn invalid_window() {
        let (a, b) = crossing_pair();
        assert!(closest_approach(&a, &b, (2.0, 2.0)).is_err());
        assert!(closest_approach(&a, &b, (3.0, 1.0)).is_err());
    }

    #[test]
    fn boundary_solution_has_zero_sensitivity() {
        // Receding agents: closest at t = 0.
        let a = linear(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0), 3.0);
        let b = linear(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 3.0);
        let sol = closest_approach(&a, &b, (0.0, 3.0)).unwrap();
        assert_eq!(sol.t_star, 0.0);
        assert!(sol.on_boundary);
        let sens = keypoint_sensitivities(&sol, &a, &b).unwrap();
        assert!(sens.a.is_zero() && sens.b.is_zero());
    }

    #[test]
    fn sensitivity_to_translation_along_motion() {
        // Shifting b's constant term by δ along x moves t* by δ/2.
        let (a, b) = crossing_pair();
        let sol = closest_approach(&a, &b, (0.0, 5.0)).unwrap();
        let sens = keypoint_sensitivities(&sol, &a, &b).unwrap();
        let delta = 1e-6;
        let mut shifted = b.pieces().to_vec();
        shifted[0][(0, 0)] += delta;
        let b2 = Trajectory::new(shifted, b.durations().to_vec()).unwrap();
        let t2 = closest_approach(&a, &b2, (0.0, 5.0)).unwrap().t_star;
        let measured = (t2 - sol.t_star) / delta;
        assert!((measured - 0.5).abs() < 1e-6);
        assert!((sens.b.coeffs[0][(0, 0)] - measured).abs() < 1e-4 * measured.abs());
    }

    #[test]
    fn mismatched_trajectories_are_rejected() {
        let (a, b) = crossing_pair();
        let sol = closest_approach(&a, &b, (0.0, 5.0)).unwrap();
        let other = linear(Vec2::new(0.0, 3.0), Vec2::new(1.0, 0.0), 5.0);
        assert!(keypoint_sensitivities(&sol, &other, &b).is_err());
    }

    #[test]
    fn winding_of_circle() {
        let pts = (0..1024).map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 1023.0;
            Vec2::new(th.cos(), th.sin())
        });
        let w = winding_of_points(pts).unwrap();
        assert!((w.total_angle - 2.0 * std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn winding_of_straight_line_and_reversal() {
        let (a, b) = crossing_pair();
        let w = winding_angle_oracle(&a, &b, (0.0, 5.0), 200).unwrap();
        assert!(w.total_angle.abs() < std::f64::consts::PI);
        let rev: Vec<Vec2> = (0..200)
            .rev()
            .map(|i| {
                let t = 5.0 * i as f64 / 199.0;
                a.probe(t).state.position - b.probe(t).state.position
            })
            .collect();
        let wr = winding_of_points(rev).unwrap();
        assert!((wr.total_angle + w.total_angle).abs() < 1e-12);
    }

    #[test]
    fn winding_through_origin_is_degenerate() {
        let a = linear(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 2.0);
        let b = Trajectory::stationary(Vec2::zeros());
        assert!(matches!(
            winding_angle_oracle(&a, &b, (0.0, 2.0), 3),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(winding_angle_oracle(&a, &b, (0.0, 2.0), 1).is_err());
    }

    #[test]
    fn passing_above_and_below_differ_by_full_turn() {
        // Shared start and goal; one path bends over the obstacle, one under.
        use crate::trajectory::{minco_solve, BoundaryState};
        let obstacle = Trajectory::stationary(Vec2::zeros());
        let start = BoundaryState::at_rest(Vec2::new(3.0, 0.0));
        let goal = BoundaryState::at_rest(Vec2::new(-3.0, 1.0));
        let path = |y: f64| {
            minco_solve(&start, &goal, &[Vec2::new(0.0, y)], &[3.0, 3.0])
                .unwrap()
                .into_trajectory()
        };
        let above = path(2.0);
        let below = path(-2.0);
        let wa = winding_angle_oracle(&above, &obstacle, (0.0, 6.0), 2000)
            .unwrap()
            .total_angle;
        let wb = winding_angle_oracle(&below, &obstacle, (0.0, 6.0), 2000)
            .unwrap()
            .total_angle;
        let theta = (1.0f64).atan2(-3.0);
        assert!((wa - theta).abs() < 1e-9);
        assert!((wb + (2.0 * std::f64::consts::PI - theta)).abs() < 1e-9);
        assert!(((wa - wb) - 2.0 * std::f64::consts::PI).abs() < 1e-9);
        let above_m = metric_at_keypoint(&closest_approach(&above, &obstacle, (0.0, 6.0)).unwrap());
        let below_m = metric_at_keypoint(&closest_approach(&below, &obstacle, (0.0, 6.0)).unwrap());
        assert!(above_m > 0.0 && below_m < 0.0);
    }

    #[test]
    fn pattern_is_symmetric() {
        let mut p = InteractionPattern::new();
        p.set("1", "2", Interaction::Clockwise).unwrap();
        assert_eq!(p.get("2", "1"), Interaction::Clockwise);
        assert_eq!(p.get("1", "3"), Interaction::None);
        assert!(p.set("4", "4", Interaction::Clockwise).is_err());
        p.set("2", "1", Interaction::None).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn label_helpers() {
        assert_eq!(Interaction::Clockwise.eta(), 1);
        assert!(Interaction::Clockwise.is_satisfied_by(-0.2));
        assert!(!Interaction::Clockwise.is_satisfied_by(0.2));
        assert!(Interaction::None.is_satisfied_by(0.2));
        assert_eq!(
            Interaction::from_eta(-1),
            Some(Interaction::CounterClockwise)
        );
        assert_eq!(Interaction::from_eta(2), None);
        assert_eq!(Interaction::parse("CW"), Some(Interaction::Clockwise));
    }

    #[test]
    fn sampled_classification_matches_continuous() {
        let (a, b) = crossing_pair();
        let samples: Vec<PairSample> = (0..=500)
            .map(|i| {
                let t = i as f64 / 100.0;
                let sa = a.probe(t).state;
                let sb = b.probe(t).state;
                PairSample {
                    t,
                    a: (sa.position, sa.velocity),
                    b: (sb.position, sb.velocity),
                }
            })
            .collect();
        let (label, m, t) = classify_samples(&samples, 0.1).unwrap();
        assert_eq!(label, Interaction::CounterClockwise);
        assert!((m - 2.0).abs() < 1e-9);
        assert!((t - 2.5).abs() < 1e-9);
    }
}
