//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes a JSON parameter object and returns a JSON document.
//! The `*_json` functions are the same operations without the wasm wrapper.

use jcc_sched::conic::ClarabelBackend;
use jcc_sched::distflow::build_sensitivity;
use jcc_sched::eval::{utilization_rate, RunConfig};
use jcc_sched::netdata::{bundled_ieee13, Building};
use jcc_sched::scheduler::{assemble, build_security, solve, AssembleOptions, Method, ScenarioOptions, StepUncertainty};
use jcc_sched::svc::polygon_area;
use jcc_sched::thermal;
use jcc_sched::usets::{generate_samples, SamplerConfig};
use serde::Deserialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = std::result::Result<String, String>;

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> std::result::Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("bad parameters: {e}"))
}

fn sampler(dist: &str, seed: u64) -> std::result::Result<SamplerConfig, String> {
    let cfg = RunConfig::bundled();
    let spec = cfg.case_spec(dist).map_err(|e| e.to_string())?;
    Ok(spec.sampler.with_seed(seed))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SetParams {
    dist: String,
    n: usize,
    epsilon: f64,
    #[serde(default)]
    seed: u64,
}

/// Samples one timestep of 2-D forecast errors and returns the SVC, hull and
/// box sets with exact areas and training coverage.
pub fn uncertainty_sets_json(params: &str) -> Out {
    let p: SetParams = parse(params)?;
    if p.n == 0 || p.n > 5000 {
        return Err("n must be in 1..=5000".into());
    }
    let (samples, _) = generate_samples(&sampler(&p.dist, p.seed)?, 1, 2, p.n).map_err(|e| e.to_string())?;
    let mut sets = Vec::new();
    for m in [Method::Svc, Method::Hull, Method::Box] {
        let sec = build_security(m, p.epsilon, &samples, &ScenarioOptions { seed: p.seed, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let StepUncertainty::Set(set) = &sec.steps[0] else { unreachable!("set-based method") };
        let boundary = set.boundary_2d().map_err(|e| e.to_string())?;
        let covered = samples.at(0).rows().filter(|r| set.contains(r, 1e-8)).count();
        sets.push(json!({
            "method": m,
            "boundary": boundary,
            "area": polygon_area(&boundary),
            "covered": covered,
        }));
    }
    let pts: Vec<&[f64]> = samples.at(0).rows().collect();
    Ok(json!({ "samples": pts, "sets": sets }).to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleParams {
    dist: String,
    method: String,
    epsilon: f64,
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    theta_lo: Option<f64>,
}

/// Day-ahead schedule of the bundled feeder from `n` training samples.
pub fn schedule_json(params: &str) -> Out {
    let p: ScheduleParams = parse(params)?;
    if p.n == 0 || p.n > 1000 {
        return Err("n must be in 1..=1000".into());
    }
    let method: Method = p.method.parse().map_err(|e: jcc_sched::Error| e.to_string())?;
    let mut case = bundled_ieee13();
    if let Some(lo) = p.theta_lo {
        for b in &mut case.network.buildings {
            if lo >= b.theta_hi {
                return Err(format!("theta_lo must stay below {}", b.theta_hi));
            }
            b.theta_lo = lo;
        }
    }
    let (h, d) = (case.series.horizon, case.network.n_drg());
    let (train, _) = generate_samples(&sampler(&p.dist, p.seed)?, h, d, p.n).map_err(|e| e.to_string())?;
    let sens = build_sensitivity(&case.network);
    let run = || -> jcc_sched::Result<_> {
        let sec = build_security(method, p.epsilon, &train, &ScenarioOptions { seed: p.seed, ..Default::default() })?;
        let asm = assemble(&case, &sens, &sec, &AssembleOptions::default())?;
        solve(&asm, &case, &ClarabelBackend::default())
    };
    let sol = run().map_err(|e| e.to_string())?;
    Ok(json!({
        "cost": sol.objective,
        "utilization": utilization_rate(&sol, &case),
        "lambda": sol.lambda,
        "drg_nominal": case.series.drg_nominal,
        "p_hvac": sol.p_hvac,
        "theta": sol.theta,
        "theta_lo": case.network.buildings[0].theta_lo,
        "theta_hi": case.network.buildings[0].theta_hi,
        "price_buy": case.series.price_buy,
        "iterations": sol.iterations,
    })
    .to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalParams {
    heat_capacity: f64,
    thermal_resistance: f64,
    cop: f64,
    theta_init: f64,
    /// HVAC power per hour, MW.
    p_hvac: Vec<f64>,
}

/// Indoor temperature of one bundled-profile building under a given HVAC schedule.
pub fn thermal_response_json(params: &str) -> Out {
    let p: ThermalParams = parse(params)?;
    let case = bundled_ieee13();
    let h = case.series.horizon;
    if p.p_hvac.len() != h {
        return Err(format!("p_hvac needs {h} entries"));
    }
    if !(p.heat_capacity > 0.0 && p.thermal_resistance > 0.0 && p.cop > 0.0) {
        return Err("heat_capacity, thermal_resistance and cop must be positive".into());
    }
    let base = &case.network.buildings[0];
    let b = Building {
        heat_capacity: p.heat_capacity,
        thermal_resistance: p.thermal_resistance,
        cop: p.cop,
        theta_init: Some(p.theta_init),
        ..base.clone()
    };
    let c = thermal::coeffs(&b, case.series.dt);
    let theta = thermal::simulate(&b, &c, &case.series.theta_out, &case.series.heat_load[0], &p.p_hvac);
    Ok(json!({ "theta": theta, "theta_out": case.series.theta_out }).to_string())
}

#[wasm_bindgen]
pub fn uncertainty_sets(params: &str) -> Result<String, JsValue> {
    uncertainty_sets_json(params).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn schedule(params: &str) -> Result<String, JsValue> {
    schedule_json(params).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn thermal_response(params: &str) -> Result<String, JsValue> {
    thermal_response_json(params).map_err(|e| JsValue::from_str(&e))
}
