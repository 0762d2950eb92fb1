use serde::{Deserialize, Serialize};

use super::ModelError;

/// Piecewise-linear concentration profile, held constant outside its breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    points: Vec<(f64, f64)>,
}

impl Waveform {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::Waveform("waveform needs at least one breakpoint".into()));
        }
        for &(t, v) in &points {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ModelError::Waveform(format!("breakpoint time {t} must be finite and nonnegative")));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(ModelError::Waveform(format!("breakpoint value {v} must be finite and nonnegative")));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ModelError::Waveform("breakpoint times must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn constant(v: f64) -> Self {
        Self { points: vec![(0.0, v)] }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn breakpoint_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let pts = &self.points;
        // index of the first breakpoint strictly after t
        let i = pts.partition_point(|p| p.0 <= t);
        if i == 0 {
            return pts[0].1;
        }
        if i == pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn slope(&self, t: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.0 <= t);
        if i == 0 || i == pts.len() {
            return 0.0;
        }
        let (t0, v0) = pts[i - 1];
        let (t1, v1) = pts[i];
        (v1 - v0) / (t1 - t0)
    }
}
