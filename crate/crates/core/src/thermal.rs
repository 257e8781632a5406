//! Single-zone building thermal dynamics and the HVAC electrical model.
//!
//! Cooling-only convention: `a_q < 0`, so HVAC power lowers the indoor
//! temperature of the next step.

use serde::{Deserialize, Serialize};

use crate::netdata::Building;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalCoeffs {
    pub a_in: f64,
    pub a_out: f64,
    /// °C per MW of internal heat.
    pub a_h: f64,
    /// °C per MW of electrical HVAC power (negative for cooling).
    pub a_q: f64,
}

pub fn coeffs(building: &Building, dt: f64) -> ThermalCoeffs {
    assert!(dt > 0.0, "time step must be positive");
    let a_in = (-dt / (building.thermal_resistance * building.heat_capacity)).exp();
    // a_out computed as 1 - a_in so that a_in + a_out == 1 holds bit-exactly.
    let a_out = 1.0 - a_in;
    let a_h = building.thermal_resistance * a_out;
    ThermalCoeffs {
        a_in,
        a_out,
        a_h,
        a_q: -building.cop * a_h,
    }
}

/// One step of the indoor temperature recursion.
pub fn step_temperature(
    c: &ThermalCoeffs,
    theta_in_prev: f64,
    theta_out_prev: f64,
    heat_prev: f64,
    p_hvac_prev: f64,
) -> f64 {
    c.a_in * theta_in_prev + c.a_out * theta_out_prev + c.a_h * heat_prev + c.a_q * p_hvac_prev
}

/// HVAC reactive power for a given active power, MVar.
pub fn reactive_power(building: &Building, p_hvac: f64) -> f64 {
    reactive_ratio(building) * p_hvac
}

pub fn reactive_ratio(building: &Building) -> f64 {
    let phi = building.power_factor;
    (1.0 - phi * phi).sqrt() / phi
}

/// Indoor temperature at step `t` as `constant + Σ_s coeff[s] · p_hvac[s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureExpr {
    pub t: usize,
    pub constant: f64,
    /// Coefficients on p_hvac,0 .. p_hvac,t-1.
    pub coeff: Vec<f64>,
}

impl TemperatureExpr {
    pub fn eval(&self, p_hvac: &[f64]) -> f64 {
        self.constant + self.coeff.iter().zip(p_hvac).map(|(a, p)| a * p).sum::<f64>()
    }
}

/// Comfort and device bounds for one building over the horizon, with the
/// temperature trajectory unrolled into affine functions of HVAC power.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrolledThermal {
    /// Entries for t = 1..=T.
    pub temperature: Vec<TemperatureExpr>,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub p_max: f64,
}

pub fn unroll_constraints(
    building: &Building,
    c: &ThermalCoeffs,
    theta_out: &[f64],
    heat: &[f64],
    horizon: usize,
) -> UnrolledThermal {
    assert!(horizon >= 1);
    assert!(theta_out.len() >= horizon && heat.len() >= horizon);
    let mut temperature = Vec::with_capacity(horizon);
    let mut constant = building.initial_temperature();
    let mut coeff: Vec<f64> = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        constant = c.a_in * constant + c.a_out * theta_out[t - 1] + c.a_h * heat[t - 1];
        coeff.iter_mut().for_each(|a| *a *= c.a_in);
        coeff.push(c.a_q);
        temperature.push(TemperatureExpr { t, constant, coeff: coeff.clone() });
    }
    UnrolledThermal {
        temperature,
        theta_lo: building.theta_lo,
        theta_hi: building.theta_hi,
        p_max: building.p_max,
    }
}

/// Simulates the recursion step by step; returns θ_0..θ_T.
pub fn simulate(
    building: &Building,
    c: &ThermalCoeffs,
    theta_out: &[f64],
    heat: &[f64],
    p_hvac: &[f64],
) -> Vec<f64> {
    let mut theta = vec![building.initial_temperature()];
    for t in 0..p_hvac.len() {
        let prev = theta[t];
        theta.push(step_temperature(c, prev, theta_out[t], heat[t], p_hvac[t]));
    }
    theta
}
