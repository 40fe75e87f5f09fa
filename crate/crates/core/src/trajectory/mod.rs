//! Piecewise quintic trajectories and the minimum-jerk waypoint/duration
//! parameterization.

mod banded;
mod basis;
mod minco;
mod quadrature;

pub use banded::BandedMatrix;
pub use basis::{eval_basis, BASIS_LEN, MAX_ORDER};
pub use minco::{minco_solve, Minco, MincoGradient};
pub use quadrature::{gauss_legendre_unit, QUAD_NODES};

use crate::error::{Error, Result};
use crate::Vec2;
use nalgebra::SMatrix;

/// Coefficients of one quintic piece; row `j` multiplies `t^j`, columns are x and y.
pub type Coeffs = SMatrix<f64, BASIS_LEN, 2>;

/// Position, velocity and acceleration at a trajectory end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
}

impl BoundaryState {
    pub fn at_rest(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::zeros(),
            acceleration: Vec2::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.position, self.velocity, self.acceleration]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Flat outputs of a planar vehicle: position and its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub jerk: Vec2,
}

impl FlatState {
    pub fn parked(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::zeros(),
            acceleration: Vec2::zeros(),
            jerk: Vec2::zeros(),
        }
    }
}

/// Where an absolute time falls on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceLocation {
    /// Zero-based piece index.
    pub index: usize,
    /// Time relative to the start of the piece.
    pub local_time: f64,
    /// The query lies strictly after the total duration (vehicle parked at goal).
    pub beyond_end: bool,
}

/// A trajectory sampled at one absolute time, together with its location.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub time: f64,
    pub location: PieceLocation,
    pub state: FlatState,
}

impl Probe {
    /// d/dt of a scalar with partials `g_p`, `g_v` with respect to position and velocity.
    pub fn time_derivative(&self, g_p: &Vec2, g_v: &Vec2) -> f64 {
        g_p.dot(&self.state.velocity) + g_v.dot(&self.state.acceleration)
    }
}

/// Piecewise quintic planar trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pieces: Vec<Coeffs>,
    durations: Vec<f64>,
    starts: Vec<f64>,
    total: f64,
}

impl Trajectory {
    pub fn new(pieces: Vec<Coeffs>, durations: Vec<f64>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::domain("trajectory needs at least one piece"));
        }
        if pieces.len() != durations.len() {
            return Err(Error::domain(format!(
                "{} pieces but {} durations",
                pieces.len(),
                durations.len()
            )));
        }
        if let Some(t) = durations.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::domain(format!(
                "piece duration must be positive, got {t}"
            )));
        }
        let mut starts = Vec::with_capacity(durations.len());
        let mut acc = 0.0;
        for t in &durations {
            starts.push(acc);
            acc += t;
        }
        Ok(Self {
            pieces,
            durations,
            starts,
            total: acc,
        })
    }

    /// A trajectory resting at `position` forever.
    pub fn stationary(position: Vec2) -> Self {
        let mut c = Coeffs::zeros();
        c[(0, 0)] = position.x;
        c[(0, 1)] = position.y;
        Self::new(vec![c], vec![1.0]).expect("valid stationary trajectory")
    }

    pub fn pieces(&self) -> &[Coeffs] {
        &self.pieces
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn total_duration(&self) -> f64 {
        self.total
    }

    /// Start time of every piece.
    pub fn piece_starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn locate_piece(&self, t: f64) -> Result<PieceLocation> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("time must be non-negative, got {t}")));
        }
        Ok(self.locate_unchecked(t))
    }

    fn locate_unchecked(&self, t: f64) -> PieceLocation {
        let last = self.pieces.len() - 1;
        if t >= self.total {
            return PieceLocation {
                index: last,
                local_time: self.durations[last],
                beyond_end: t > self.total,
            };
        }
        // Last piece whose start is <= t; joints belong to the later piece.
        let index = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        PieceLocation {
            index,
            local_time: (t - self.starts[index]).clamp(0.0, self.durations[index]),
            beyond_end: false,
        }
    }

    /// Polynomial state of piece `index` at local time `tau`.
    pub fn piece_state(&self, index: usize, tau: f64) -> FlatState {
        let c = &self.pieces[index];
        let at = |order: usize| {
            let b = eval_basis(tau, order);
            let mut v = Vec2::zeros();
            for (j, bj) in b.iter().enumerate() {
                v.x += c[(j, 0)] * bj;
                v.y += c[(j, 1)] * bj;
            }
            v
        };
        FlatState {
            position: at(0),
            velocity: at(1),
            acceleration: at(2),
            jerk: at(3),
        }
    }

    /// Derivative of order `order` of piece `index` at local time `tau`.
    pub fn piece_derivative(&self, index: usize, tau: f64, order: usize) -> Vec2 {
        let c = &self.pieces[index];
        let b = eval_basis(tau, order);
        let mut v = Vec2::zeros();
        for (j, bj) in b.iter().enumerate() {
            v.x += c[(j, 0)] * bj;
            v.y += c[(j, 1)] * bj;
        }
        v
    }

    pub fn eval(&self, t: f64) -> Result<FlatState> {
        self.locate_piece(t)?;
        Ok(self.probe(t).state)
    }

    /// Samples the trajectory at `t >= 0`; after the total duration the
    /// vehicle is parked at its final position.
    pub fn probe(&self, t: f64) -> Probe {
        debug_assert!(t >= 0.0, "negative probe time {t}");
        let location = self.locate_unchecked(t.max(0.0));
        let state = if location.beyond_end {
            FlatState::parked(self.end_position())
        } else {
            self.piece_state(location.index, location.local_time)
        };
        Probe {
            time: t,
            location,
            state,
        }
    }

    pub fn start_position(&self) -> Vec2 {
        self.piece_derivative(0, 0.0, 0)
    }

    pub fn end_position(&self) -> Vec2 {
        let last = self.pieces.len() - 1;
        self.piece_derivative(last, self.durations[last], 0)
    }

    /// Positions at the interior joints (end of every piece but the last).
    pub fn joint_positions(&self) -> Vec<Vec2> {
        (0..self.pieces.len() - 1)
            .map(|k| self.piece_derivative(k, self.durations[k], 0))
            .collect()
    }

    /// Length of the path, by Gauss–Legendre quadrature of the speed on every piece.
    pub fn arc_length(&self) -> f64 {
        let rule = gauss_legendre_unit();
        let mut length = 0.0;
        for (k, &dur) in self.durations.iter().enumerate() {
            let piece: f64 = rule
                .iter()
                .map(|&(x, w)| w * self.piece_derivative(k, x * dur, 1).norm())
                .sum();
            length += piece * dur;
        }
        length
    }
}

/// Gradient of a scalar with respect to a trajectory's coefficients and durations,
/// holding the coefficients fixed when differentiating by a duration.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGradient {
    pub coeffs: Vec<Coeffs>,
    pub durations: Vec<f64>,
}

impl CoeffGradient {
    pub fn zeros(pieces: usize) -> Self {
        Self {
            coeffs: vec![Coeffs::zeros(); pieces],
            durations: vec![0.0; pieces],
        }
    }

    pub fn zeros_like(traj: &Trajectory) -> Self {
        Self::zeros(traj.piece_count())
    }

    pub fn add_scaled(&mut self, other: &CoeffGradient, scale: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * scale;
        }
        for (a, b) in self.durations.iter_mut().zip(&other.durations) {
            *a += b * scale;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|v| *v == 0.0))
            && self.durations.iter().all(|v| *v == 0.0)
    }

    /// Accumulates the partials of a scalar `s(p(t), ṗ(t))` sampled at a fixed
    /// absolute time, given `g_p = ∂s/∂p` and `g_v = ∂s/∂ṗ`.
    ///
    /// Earlier durations shift the local time of the active piece
    /// (`t̄ = t − Σ_{i<k} T_i`). Past the end the position is the polynomial
    /// end point of the last piece and the velocity is identically zero.
    pub fn add_state_gradient(&mut self, traj: &Trajectory, probe: &Probe, g_p: &Vec2, g_v: &Vec2) {
        let loc = probe.location;
        let k = loc.index;
        if loc.beyond_end {
            let b = eval_basis(loc.local_time, 0);
            for (j, bj) in b.iter().enumerate() {
                self.coeffs[k][(j, 0)] += bj * g_p.x;
                self.coeffs[k][(j, 1)] += bj * g_p.y;
            }
            let end_velocity = traj.piece_derivative(k, loc.local_time, 1);
            self.durations[k] += g_p.dot(&end_velocity);
            return;
        }
        let b0 = eval_basis(loc.local_time, 0);
        let b1 = eval_basis(loc.local_time, 1);
        for j in 0..BASIS_LEN {
            self.coeffs[k][(j, 0)] += b0[j] * g_p.x + b1[j] * g_v.x;
            self.coeffs[k][(j, 1)] += b0[j] * g_p.y + b1[j] * g_v.y;
        }
        let shift = -probe.time_derivative(g_p, g_v);
        for d in &mut self.durations[..k] {
            *d += shift;
        }
    }
}
