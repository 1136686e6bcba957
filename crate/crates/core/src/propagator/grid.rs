use crate::error::{Error, Result};
use crate::switching::Drive;

/// Strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `n_samples` evenly spaced times from `t_start` to `t_end` inclusive.
    pub fn uniform(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::Config(format!(
                "need at least 2 samples, got {n_samples}"
            )));
        }
        if !(t_start.is_finite() && t_end.is_finite() && t_end > t_start) {
            return Err(Error::Config(format!(
                "invalid time window [{t_start}, {t_end}]"
            )));
        }
        let dt = (t_end - t_start) / (n_samples - 1) as f64;
        let mut times: Vec<f64> = (0..n_samples).map(|i| t_start + i as f64 * dt).collect();
        times[n_samples - 1] = t_end;
        Ok(Self { times })
    }

    /// Uniform grid augmented with every switching instant of `drive` that
    /// falls inside the window.
    pub fn for_drive(
        t_start: f64,
        t_end: f64,
        n_samples: usize,
        drive: &Drive<'_>,
    ) -> Result<Self> {
        let grid = Self::uniform(t_start, t_end, n_samples)?;
        Ok(match drive.breakpoints() {
            Some(bps) => grid.with_points(bps),
            None => grid,
        })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Config("a grid needs at least 2 times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "grid times must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// Adds the given times that lie inside `[start, end]`.
    pub fn with_points(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        let (lo, hi) = (self.start(), self.end());
        self.times
            .extend(points.into_iter().filter(|t| *t >= lo && *t <= hi));
        self.times.sort_by(f64::total_cmp);
        self.times.dedup();
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
