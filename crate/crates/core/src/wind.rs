//! Turbine power curve and farm aggregation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindError {
    #[error("wind speed must be finite and non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("normalized speed {0} outside [0, 1]")]
    OutOfUnitRange(f64),
    #[error("invalid turbine: {0}")]
    InvalidTurbine(String),
    #[error("invalid farm at bus {bus}: {msg}")]
    InvalidFarm { bus: u32, msg: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    #[default]
    Cubic,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurbineModel {
    pub v_in: f64,
    pub v_r: f64,
    pub v_out: f64,
    pub p_rated: f64,
    #[serde(default)]
    pub ramp: RampShape,
}

impl Default for TurbineModel {
    fn default() -> Self {
        Self { v_in: 2.0, v_r: 12.0, v_out: 18.0, p_rated: 5.0, ramp: RampShape::Cubic }
    }
}

impl TurbineModel {
    pub fn new(v_in: f64, v_r: f64, v_out: f64, p_rated: f64) -> Result<Self, WindError> {
        let t = Self { v_in, v_r, v_out, p_rated, ramp: RampShape::Cubic };
        t.validate()?;
        Ok(t)
    }

    pub fn with_ramp(mut self, ramp: RampShape) -> Self {
        self.ramp = ramp;
        self
    }

    pub fn validate(&self) -> Result<(), WindError> {
        if !(0.0 < self.v_in && self.v_in < self.v_r && self.v_r < self.v_out) {
            return Err(WindError::InvalidTurbine(format!(
                "need 0 < v_in < v_r < v_out, got ({}, {}, {})",
                self.v_in, self.v_r, self.v_out
            )));
        }
        if !(self.p_rated > 0.0 && self.p_rated.is_finite()) {
            return Err(WindError::InvalidTurbine(format!("p_rated must be positive, got {}", self.p_rated)));
        }
        Ok(())
    }

    /// Single-turbine output in MW.
    pub fn power(&self, v: f64) -> Result<f64, WindError> {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(WindError::NegativeSpeed(v));
        }
        Ok(if v <= self.v_in || v >= self.v_out {
            0.0
        } else if v >= self.v_r {
            self.p_rated
        } else {
            match self.ramp {
                RampShape::Cubic => {
                    let vi3 = self.v_in.powi(3);
                    self.p_rated * (v.powi(3) - vi3) / (self.v_r.powi(3) - vi3)
                }
                RampShape::Linear => self.p_rated * (v - self.v_in) / (self.v_r - self.v_in),
            }
        })
    }
}

/// Free-function form of [`TurbineModel::power`].
pub fn power_curve(v: f64, t: &TurbineModel) -> Result<f64, WindError> {
    t.power(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindFarm {
    pub bus: u32,
    #[serde(flatten)]
    pub turbine: TurbineModel,
    pub n_turbines: u32,
    pub power_factor: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl WindFarm {
    /// Farm at `bus` with the default turbine, 8 turbines, power factor 0.95.
    pub fn new(bus: u32, speed_min: f64, speed_max: f64) -> Self {
        Self { bus, turbine: TurbineModel::default(), n_turbines: 8, power_factor: 0.95, speed_min, speed_max }
    }

    pub fn validate(&self) -> Result<(), WindError> {
        self.turbine.validate()?;
        let bad = |msg: String| Err(WindError::InvalidFarm { bus: self.bus, msg });
        if self.n_turbines == 0 {
            return bad("n_turbines must be at least 1".into());
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return bad(format!("power factor {} outside (0, 1]", self.power_factor));
        }
        if !(self.speed_min < self.speed_max) || !self.speed_min.is_finite() || !self.speed_max.is_finite() {
            return bad(format!("speed bounds ({}, {}) are not increasing", self.speed_min, self.speed_max));
        }
        Ok(())
    }

    /// Installed capacity in MW.
    pub fn capacity(&self) -> f64 {
        self.turbine.p_rated * self.n_turbines as f64
    }

    /// Speed in m/s for a normalized sample.
    pub fn denormalize(&self, u: f64) -> Result<f64, WindError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(WindError::OutOfUnitRange(u));
        }
        Ok(self.speed_min + u * (self.speed_max - self.speed_min))
    }

    /// `(P, Q)` in MW / MVAr.
    pub fn output(&self, v: f64) -> Result<(f64, f64), WindError> {
        let p = self.turbine.power(v)? * self.n_turbines as f64;
        let pf = self.power_factor;
        let q = if pf >= 1.0 { 0.0 } else { p * (1.0 - pf * pf).sqrt() / pf };
        Ok((p, q))
    }

    /// Normalized sample straight to `(P, Q)`; the speed is clamped to
    /// `[0, v_out + 1]` first.
    pub fn output_normalized(&self, u: f64) -> Result<(f64, f64), WindError> {
        let v = self.denormalize(u)?.clamp(0.0, self.turbine.v_out + 1.0);
        self.output(v)
    }
}

/// Free-function form of [`WindFarm::output`].
pub fn farm_output(v: f64, farm: &WindFarm) -> Result<(f64, f64), WindError> {
    farm.output(v)
}

/// Free-function form of [`WindFarm::denormalize`].
pub fn denormalize(u: f64, farm: &WindFarm) -> Result<f64, WindError> {
    farm.denormalize(u)
}
