use crate::error::{Error, Result};
use crate::Vec2;

/// Lower bound of every piece duration in seconds.
pub const MIN_DURATION: f64 = 0.01;

/// Stacked optimization variables of all vehicles.
pub type DecisionVector = Vec<f64>;

/// `T = MIN_DURATION + ln(1 + e^τ)`.
pub fn duration_transform(tau: f64) -> f64 {
    MIN_DURATION + tau.max(0.0) + (-tau.abs()).exp().ln_1p()
}

/// `∂J/∂τ = ∂J/∂T · σ(τ)`.
pub fn duration_transform_grad(tau: f64, grad_t: f64) -> f64 {
    let sigmoid = if tau >= 0.0 {
        1.0 / (1.0 + (-tau).exp())
    } else {
        let e = tau.exp();
        e / (1.0 + e)
    };
    grad_t * sigmoid
}

/// Inverse of [`duration_transform`]: `τ = s + ln(1 − e^{−s})` with `s = T − MIN_DURATION`.
pub fn duration_inverse(duration: f64) -> Result<f64> {
    let s = duration - MIN_DURATION;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!(
            "duration {duration} is not above the minimum {MIN_DURATION}"
        )));
    }
    Ok(s + (-(-s).exp_m1()).ln())
}

/// Per-vehicle waypoints and durations.
pub type VehicleDecision = (Vec<Vec2>, Vec<f64>);

/// Offsets of each vehicle's block in a [`DecisionVector`].
///
/// A block holds the `M − 1` waypoints as `x, y` pairs followed by the `M`
/// duration parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionLayout {
    pieces: Vec<usize>,
    offsets: Vec<usize>,
    len: usize,
}

impl DecisionLayout {
    pub fn new(pieces: Vec<usize>) -> Result<Self> {
        if let Some(i) = pieces.iter().position(|&m| m == 0) {
            return Err(Error::domain(format!("vehicle {i} has no pieces")));
        }
        let mut offsets = Vec::with_capacity(pieces.len());
        let mut len = 0;
        for &m in &pieces {
            offsets.push(len);
            len += 3 * m - 2;
        }
        Ok(Self {
            pieces,
            offsets,
            len,
        })
    }

    pub fn vehicle_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self, vehicle: usize) -> usize {
        self.pieces[vehicle]
    }

    pub fn dim(&self) -> usize {
        self.len
    }

    pub fn range(&self, vehicle: usize) -> std::ops::Range<usize> {
        let start = self.offsets[vehicle];
        start..start + 3 * self.pieces[vehicle] - 2
    }

    pub fn encode(&self, vehicles: &[VehicleDecision]) -> Result<DecisionVector> {
        if vehicles.len() != self.pieces.len() {
            return Err(Error::domain(format!(
                "{} vehicle blocks for a layout of {}",
                vehicles.len(),
                self.pieces.len()
            )));
        }
        let mut x = Vec::with_capacity(self.len);
        for (i, (q, t)) in vehicles.iter().enumerate() {
            let m = self.pieces[i];
            if q.len() + 1 != m || t.len() != m {
                return Err(Error::domain(format!(
                    "vehicle {i}: {} waypoints and {} durations for {m} pieces",
                    q.len(),
                    t.len()
                )));
            }
            for p in q {
                x.push(p.x);
                x.push(p.y);
            }
            for &d in t {
                x.push(duration_inverse(d)?);
            }
        }
        Ok(x)
    }

    pub fn decode(&self, x: &[f64]) -> Result<Vec<VehicleDecision>> {
        if x.len() != self.len {
            return Err(Error::domain(format!(
                "decision vector has length {}, expected {}",
                x.len(),
                self.len
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("decision vector has non-finite entries"));
        }
        Ok((0..self.pieces.len())
            .map(|i| {
                let block = &x[self.range(i)];
                let m = self.pieces[i];
                let q = block[..2 * (m - 1)]
                    .chunks_exact(2)
                    .map(|c| Vec2::new(c[0], c[1]))
                    .collect();
                let t = block[2 * (m - 1)..]
                    .iter()
                    .map(|&tau| duration_transform(tau))
                    .collect();
                (q, t)
            })
            .collect())
    }

    /// Writes the decision-space gradient of vehicle `vehicle` into `out`.
    pub fn write_gradient(
        &self,
        x: &[f64],
        vehicle: usize,
        waypoints: &[Vec2],
        durations: &[f64],
        out: &mut [f64],
    ) {
        let range = self.range(vehicle);
        let m = self.pieces[vehicle];
        let (gq, gt) = out[range.clone()].split_at_mut(2 * (m - 1));
        for (dst, g) in gq.chunks_exact_mut(2).zip(waypoints) {
            dst[0] = g.x;
            dst[1] = g.y;
        }
        let taus = &x[range.start + 2 * (m - 1)..range.end];
        for ((dst, &tau), &g) in gt.iter_mut().zip(taus).zip(durations) {
            *dst = duration_transform_grad(tau, g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_is_strictly_monotone() {
        let mut prev = duration_transform(-30.0);
        assert!(prev > MIN_DURATION);
        for i in -299..=500 {
            let t = duration_transform(i as f64 * 0.1);
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn inverse_round_trips() {
        let mut t = 0.05;
        while t <= 100.0 {
            let back = duration_transform(duration_inverse(t).unwrap());
            assert!((back - t).abs() < 1e-10, "{t} -> {back}");
            t *= 1.07;
        }
        assert!(duration_inverse(MIN_DURATION).is_err());
        assert!(duration_inverse(f64::NAN).is_err());
    }

    #[test]
    fn transform_gradient_matches_finite_differences() {
        for &tau in &[-8.0, -1.0, -0.1, 0.0, 0.3, 2.0, 9.0] {
            let h = 1e-6;
            let fd = (duration_transform(tau + h) - duration_transform(tau - h)) / (2.0 * h);
            let an = duration_transform_grad(tau, 1.0);
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "{tau}: {fd} vs {an}");
        }
    }

    #[test]
    fn layout_round_trip() {
        let layout = DecisionLayout::new(vec![1, 3]).unwrap();
        assert_eq!(layout.dim(), 1 + 7);
        let blocks = vec![
            (vec![], vec![2.0]),
            (
                vec![Vec2::new(1.0, 2.0), Vec2::new(3.0, -4.0)],
                vec![0.5, 1.0, 1.5],
            ),
        ];
        let x = layout.encode(&blocks).unwrap();
        let back = layout.decode(&x).unwrap();
        for ((q0, t0), (q1, t1)) in blocks.iter().zip(&back) {
            assert_eq!(q0, q1);
            for (a, b) in t0.iter().zip(t1) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(layout.decode(&x[1..]).is_err());
        assert!(layout.encode(&blocks[..1]).is_err());
        assert!(DecisionLayout::new(vec![2, 0]).is_err());
    }
}
