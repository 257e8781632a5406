//! Day-ahead schedule: decision layout, problem assembly, solve and the
//! solution record.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conic::{ConicProgram, ConicSolver, LinExpr, SolveStatus, Tag};
use crate::distflow::FlowSensitivity;
use crate::error::{Error, Result};
use crate::netdata::{Case, SampleSet};
use crate::robust::{
    self, bonferroni_counterpart, box_counterpart, extract_uncertain_constraints, hull_counterpart,
    normal_quantile, positive_ratio, svc_counterpart, CounterpartBlock, Moments, UncertainLinearConstraint,
};
use crate::svc::{export_polyhedron, train_all};
use crate::thermal;
use crate::usets::{fit_box, fit_hull, select_scenarios, BoxSet, UncertaintySet, DEFAULT_DELTA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svc,
    Box,
    Hull,
    Bonferroni,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Svc, Method::Hull, Method::Box, Method::Bonferroni];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Svc => "svc",
            Method::Box => "box",
            Method::Hull => "hull",
            Method::Bonferroni => "bonferroni",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svc" => Ok(Method::Svc),
            "box" => Ok(Method::Box),
            "hull" => Ok(Method::Hull),
            "bonferroni" => Ok(Method::Bonferroni),
            _ => Err(Error::Config(format!("unknown method {s:?} (expected svc, box, hull or bonferroni)"))),
        }
    }
}

/// Indices of the first-stage decision variables in the program.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionLayout {
    /// `[building][t]`
    pub p_hvac: Vec<Vec<usize>>,
    /// `[drg][t]`
    pub lambda: Vec<Vec<usize>>,
    /// `[branch][t]`
    pub p_aux: Vec<Vec<usize>>,
    pub q_aux: Vec<Vec<usize>>,
    pub g_buy: Vec<usize>,
    pub g_sell: Vec<usize>,
    pub n_decision: usize,
}

impl DecisionLayout {
    /// Registers the decision variables; they occupy indices `0..n_decision`.
    pub fn declare(program: &mut ConicProgram, case: &Case) -> Self {
        let net = &case.network;
        let horizon = case.series.horizon;
        let p_hvac = net
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| (0..horizon).map(|t| program.add_var(format!("p_hvac_{i}_{t}"), 0.0, b.p_max)).collect())
            .collect();
        let lambda = (0..net.n_drg())
            .map(|j| (0..horizon).map(|t| program.add_var(format!("lambda_{j}_{t}"), 0.0, 1.0)).collect())
            .collect();
        let caps: Vec<f64> = net.branch_buses().map(|b| b.s_max).collect();
        let p_aux = caps
            .iter()
            .enumerate()
            .map(|(b, &s)| (0..horizon).map(|t| program.add_var(format!("p_aux_{b}_{t}"), 0.0, s)).collect())
            .collect();
        let q_aux = caps
            .iter()
            .enumerate()
            .map(|(b, &s)| (0..horizon).map(|t| program.add_var(format!("q_aux_{b}_{t}"), 0.0, s)).collect())
            .collect();
        let g_buy = (0..horizon).map(|t| program.add_var(format!("g_buy_{t}"), 0.0, f64::INFINITY)).collect();
        let g_sell = (0..horizon).map(|t| program.add_var(format!("g_sell_{t}"), 0.0, f64::INFINITY)).collect();
        Self { p_hvac, lambda, p_aux, q_aux, g_buy, g_sell, n_decision: program.n_vars() }
    }

    /// Layout of a case without building a program.
    pub fn for_case(case: &Case) -> Self {
        Self::declare(&mut ConicProgram::new(), case)
    }
}

/// Uncertainty description for one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepUncertainty {
    Set(UncertaintySet),
    Moments(Moments),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityInputs {
    pub method: Method,
    pub epsilon: f64,
    pub steps: Vec<StepUncertainty>,
    /// Sample mean of ξ per timestep, used on the cost path.
    pub mean_xi: Vec<Vec<f64>>,
}

impl SecurityInputs {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and checks that every step has the same uncertainty dimension.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: SecurityInputs = serde_json::from_str(text)?;
        let dim = s.mean_xi.first().map(Vec::len).unwrap_or(0);
        if s.steps.is_empty() || s.steps.len() != s.mean_xi.len() || dim == 0 {
            return Err(Error::Samples("uncertainty file has no timesteps".into()));
        }
        for (step, mean) in s.steps.iter().zip(&s.mean_xi) {
            let d = match step {
                StepUncertainty::Set(set) => {
                    set.validate()?;
                    set.dim()
                }
                StepUncertainty::Moments(m) => {
                    if m.cov_sqrt.len() != m.mean.len() || m.cov_sqrt.iter().any(|r| r.len() != m.mean.len()) {
                        return Err(Error::DimensionMismatch { expected: m.mean.len(), found: m.cov_sqrt.len() });
                    }
                    m.mean.len()
                }
            };
            if d != dim || mean.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: d });
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioOptions {
    pub delta: f64,
    /// Decision count in the scenario bound; defaults to the uncertainty dimension.
    pub n_decision: Option<usize>,
    pub seed: u64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { delta: DEFAULT_DELTA, n_decision: None, seed: 0 }
    }
}

/// Learns or fits the per-timestep uncertainty description for `method`.
pub fn build_security(method: Method, epsilon: f64, samples: &SampleSet, opts: &ScenarioOptions) -> Result<SecurityInputs> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let mean_xi: Vec<Vec<f64>> = samples.steps().iter().map(|m| m.mean()).collect();
    let n_decision = opts.n_decision.unwrap_or(samples.dim());
    let steps = match method {
        Method::Svc => train_all(samples, epsilon)?
            .iter()
            .map(|m| StepUncertainty::Set(UncertaintySet::Svc(export_polyhedron(m))))
            .collect(),
        Method::Box | Method::Hull => {
            let mut out = Vec::with_capacity(samples.horizon());
            for (t, m) in samples.steps().iter().enumerate() {
                let idx = select_scenarios(m, epsilon, opts.delta, n_decision, opts.seed, t as u64)?;
                let rows = m.select(&idx);
                out.push(StepUncertainty::Set(match method {
                    Method::Box => UncertaintySet::Box(fit_box(&rows)),
                    _ => UncertaintySet::Hull(fit_hull(&rows)),
                }));
            }
            out
        }
        Method::Bonferroni => samples
            .steps()
            .iter()
            .map(|m| Moments::new(m.mean(), &m.covariance()).map(StepUncertainty::Moments))
            .collect::<Result<_>>()?,
    };
    Ok(SecurityInputs { method, epsilon, steps, mean_xi })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct AssembleOptions {
    /// Share one support variable among members with proportional uncertain coefficients.
    pub group_directions: bool,
    /// Drop members that interval bounds prove can never bind.
    pub presolve: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { group_directions: true, presolve: true }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct AssemblyStats {
    pub members: usize,
    pub uncertain_members: usize,
    pub dropped: usize,
    pub groups: usize,
    pub z_clamped: bool,
}

pub struct Assembled {
    pub program: ConicProgram,
    pub layout: DecisionLayout,
    pub method: Method,
    pub epsilon: f64,
    pub stats: AssemblyStats,
}

/// Interval `[lo, hi]` of an affine expression over the variable bounds.
fn interval(e: &LinExpr, program: &ConicProgram) -> (f64, f64) {
    let mut lo = e.constant;
    let mut hi = e.constant;
    for &(v, c) in &e.terms {
        let var = &program.vars[v];
        let (a, b) = (c * var.lower, c * var.upper);
        lo += a.min(b);
        hi += a.max(b);
    }
    (lo, hi)
}

/// Upper bound on `Σ c_d ξ_d − β` over the decision bounds and `ξ ∈ extent`.
fn residual_upper_bound(con: &UncertainLinearConstraint, extent: &BoxSet, program: &ConicProgram) -> f64 {
    let mut ub = -interval(&con.beta, program).0;
    for (k, c) in con.c.iter().enumerate() {
        let (clo, chi) = interval(c, program);
        ub += [clo * extent.lo[k], clo * extent.hi[k], chi * extent.lo[k], chi * extent.hi[k]]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
    }
    ub
}

fn widen(b: &BoxSet) -> BoxSet {
    let pad = |l: f64, h: f64| 1e-6 * (1.0 + (h - l).abs() + l.abs().max(h.abs()));
    BoxSet {
        lo: b.lo.iter().zip(&b.hi).map(|(&l, &h)| l - pad(l, h)).collect(),
        hi: b.lo.iter().zip(&b.hi).map(|(&l, &h)| h + pad(l, h)).collect(),
    }
}

fn set_extent(set: &UncertaintySet) -> Result<BoxSet> {
    if set.dim() == 2 {
        if let UncertaintySet::Svc(_) = set {
            let poly = set.boundary_2d()?;
            if !poly.is_empty() {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for p in &poly {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                return Ok(widen(&BoxSet { lo, hi }));
            }
        }
    }
    Ok(widen(&set.bounding_box()?))
}

fn counterpart(con: &UncertainLinearConstraint, set: &UncertaintySet) -> Result<CounterpartBlock> {
    match set {
        UncertaintySet::Svc(p) => svc_counterpart(con, p),
        UncertaintySet::Box(b) => box_counterpart(con, b),
        UncertaintySet::Hull(h) => hull_counterpart(con, &h.extreme_points()),
    }
}

/// Builds the full day-ahead program for one security method.
pub fn assemble(
    case: &Case,
    sens: &FlowSensitivity,
    security: &SecurityInputs,
    opts: &AssembleOptions,
) -> Result<Assembled> {
    let net = &case.network;
    let ts = &case.series;
    let horizon = ts.horizon;
    if security.steps.len() != horizon || security.mean_xi.len() != horizon {
        return Err(Error::InvalidInput(format!(
            "uncertainty given for {} timesteps, case has {horizon}",
            security.steps.len()
        )));
    }
    let mut program = ConicProgram::new();
    let layout = DecisionLayout::declare(&mut program, case);
    let mut stats = AssemblyStats::default();

    // cost
    let mut obj = LinExpr::default();
    for t in 0..horizon {
        obj.add_term(layout.g_buy[t], ts.price_buy[t] * ts.dt);
        obj.add_term(layout.g_sell[t], -ts.price_sell[t] * ts.dt);
    }
    program.objective = obj;

    // comfort
    for (i, b) in net.buildings.iter().enumerate() {
        let c = thermal::coeffs(b, ts.dt);
        let unrolled = thermal::unroll_constraints(b, &c, &ts.theta_out, &ts.heat_load[i], horizon);
        for te in &unrolled.temperature {
            let mut e = LinExpr::constant(te.constant);
            for (s, &a) in te.coeff.iter().enumerate() {
                e.add_term(layout.p_hvac[i][s], a);
            }
            let mut hi = e.clone();
            hi.constant -= b.theta_hi;
            program.add_le(hi, Tag::new("comfort_hi", te.t, i, 0));
            let mut lo = e.scaled(-1.0);
            lo.constant += b.theta_lo;
            program.add_le(lo, Tag::new("comfort_lo", te.t, i, 0));
        }
    }

    for t in 0..horizon {
        // net purchase at the expected DRG output
        let inj = robust::injections(case, &layout, t);
        let mut balance = LinExpr::term(layout.g_buy[t], 1.0);
        balance.add_term(layout.g_sell[t], -1.0);
        for p in &inj.p {
            balance.add_expr(p, 1.0);
        }
        for (d, e) in inj.drg.iter().enumerate() {
            balance.add_expr(e, security.mean_xi[t][d]);
        }
        balance.compact();
        program.add_eq(balance, Tag::new("balance", t, 0, 0));

        for (b, bus) in net.branch_buses().enumerate() {
            program.add_soc(
                LinExpr::constant(bus.s_max),
                vec![LinExpr::term(layout.p_aux[b][t], 1.0), LinExpr::term(layout.q_aux[b][t], 1.0)],
                Tag::new("apparent_cap", t, b, 0),
            );
        }
    }

    let z = match security.method {
        Method::Bonferroni => {
            let m = 2 * net.n_buses() + 4 * sens.n_branches();
            let (z, clamped) = normal_quantile(security.epsilon / m as f64);
            stats.z_clamped = clamped;
            z
        }
        _ => 0.0,
    };

    for t in 0..horizon {
        let members = extract_uncertain_constraints(case, sens, &layout, t)?;
        stats.members += members.len();
        let extent = match &security.steps[t] {
            StepUncertainty::Set(s) => {
                if s.dim() != net.n_drg() {
                    return Err(Error::DimensionMismatch { expected: net.n_drg(), found: s.dim() });
                }
                s.validate()?;
                set_extent(s)?
            }
            StepUncertainty::Moments(m) => {
                let sd: Vec<f64> = m.cov_sqrt.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
                widen(&BoxSet {
                    lo: m.mean.iter().zip(&sd).map(|(a, s)| a - z * s).collect(),
                    hi: m.mean.iter().zip(&sd).map(|(a, s)| a + z * s).collect(),
                })
            }
        };

        // representative c and support variable for each direction group
        let mut groups: Vec<(Vec<LinExpr>, usize)> = Vec::new();
        for con in &members {
            if opts.presolve && residual_upper_bound(con, &extent, &program) <= 0.0 {
                stats.dropped += 1;
                continue;
            }
            if !con.is_certain() {
                stats.uncertain_members += 1;
            }
            match &security.steps[t] {
                StepUncertainty::Moments(m) => {
                    bonferroni_counterpart(con, m, z)?.append_to(&mut program);
                }
                StepUncertainty::Set(set) => {
                    if con.is_certain() || !opts.group_directions {
                        counterpart(con, set)?.append_to(&mut program);
                        continue;
                    }
                    let found = groups.iter().find_map(|(rep, h)| positive_ratio(&con.c, rep).map(|k| (k, *h)));
                    let (k, h) = match found {
                        Some(x) => x,
                        None => {
                            let h = program.add_var(format!("support_{t}_{}", groups.len()), f64::NEG_INFINITY, f64::INFINITY);
                            let rep = UncertainLinearConstraint {
                                m: con.m,
                                t,
                                kind: con.kind,
                                element: con.element,
                                c: con.c.clone(),
                                beta: LinExpr::term(h, 1.0),
                            };
                            counterpart(&rep, set)?.append_to(&mut program);
                            groups.push((con.c.clone(), h));
                            (1.0, h)
                        }
                    };
                    let mut row = con.beta.scaled(-1.0);
                    row.add_term(h, k);
                    row.compact();
                    program.add_le(row, con.tag());
                }
            }
        }
        stats.groups += groups.len();
    }

    Ok(Assembled { program, layout, method: security.method, epsilon: security.epsilon, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub case: String,
    pub method: Method,
    pub epsilon: f64,
    pub status: SolveStatus,
    /// Objective reported by the solver, $.
    pub objective: f64,
    /// Objective re-evaluated from the returned schedule, $.
    pub objective_evaluated: f64,
    /// `[building][t]`, MW.
    pub p_hvac: Vec<Vec<f64>>,
    /// `[drg][t]`
    pub lambda: Vec<Vec<f64>>,
    /// `[branch][t]`, MW / MVar.
    pub p_aux: Vec<Vec<f64>>,
    pub q_aux: Vec<Vec<f64>>,
    pub g_buy: Vec<f64>,
    pub g_sell: Vec<f64>,
    /// `[building][0..=T]`, °C.
    pub theta: Vec<Vec<f64>>,
    pub solve_time: f64,
    pub iterations: u32,
    pub n_vars: usize,
    pub n_rows: usize,
    pub n_socs: usize,
    pub stats: AssemblyStats,
}

impl ScheduleSolution {
    /// Decision vector in the order of [`DecisionLayout`].
    pub fn decision_vector(&self, layout: &DecisionLayout) -> Vec<f64> {
        let mut x = vec![0.0; layout.n_decision];
        let mut put = |idx: &[Vec<usize>], val: &[Vec<f64>]| {
            for (r, v) in idx.iter().zip(val) {
                for (&i, &a) in r.iter().zip(v) {
                    x[i] = a;
                }
            }
        };
        put(&layout.p_hvac, &self.p_hvac);
        put(&layout.lambda, &self.lambda);
        put(&layout.p_aux, &self.p_aux);
        put(&layout.q_aux, &self.q_aux);
        for t in 0..self.g_buy.len() {
            x[layout.g_buy[t]] = self.g_buy[t];
            x[layout.g_sell[t]] = self.g_sell[t];
        }
        x
    }

    pub fn cost(&self, case: &Case) -> f64 {
        let ts = &case.series;
        (0..ts.horizon)
            .map(|t| (ts.price_buy[t] * self.g_buy[t] - ts.price_sell[t] * self.g_sell[t]) * ts.dt)
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Solves an assembled program. Non-optimal outcomes become
/// [`Error::Solver`] with the implicated row tags.
pub fn solve(assembled: &Assembled, case: &Case, solver: &dyn ConicSolver) -> Result<ScheduleSolution> {
    let program = &assembled.program;
    let layout = &assembled.layout;
    let sol = solver.solve(program)?;
    if sol.status != SolveStatus::Optimal {
        let detail = if sol.conflict.is_empty() {
            format!("backend status {}", sol.backend_status)
        } else {
            format!("conflicting rows: {}", sol.conflict.join(", "))
        };
        return Err(Error::Solver { status: sol.status.to_string(), message: detail });
    }
    let x = &sol.x;
    let objective_evaluated = program.objective.eval(x);

    let grab = |idx: &[Vec<usize>]| -> Vec<Vec<f64>> { idx.iter().map(|r| r.iter().map(|&i| x[i]).collect()).collect() };
    let mut p_hvac = grab(&layout.p_hvac);
    for (i, b) in case.network.buildings.iter().enumerate() {
        p_hvac[i].iter_mut().for_each(|p| *p = p.clamp(0.0, b.p_max));
    }
    let mut lambda = grab(&layout.lambda);
    lambda.iter_mut().flatten().for_each(|l| *l = l.clamp(0.0, 1.0));

    // Auxiliary flow limits appear only in the security rows and the cap, so
    // scaling them out to the cap keeps the schedule optimal.
    let mut p_aux = grab(&layout.p_aux);
    let mut q_aux = grab(&layout.q_aux);
    for (b, bus) in case.network.branch_buses().enumerate() {
        for t in 0..case.series.horizon {
            let (p, q) = (p_aux[b][t].max(0.0), q_aux[b][t].max(0.0));
            let norm = p.hypot(q);
            let (p, q) = if norm > 0.0 {
                (p * bus.s_max / norm, q * bus.s_max / norm)
            } else {
                let r = bus.s_max / 2f64.sqrt();
                (r, r)
            };
            p_aux[b][t] = p;
            q_aux[b][t] = q;
        }
    }

    let ts = &case.series;
    let theta = case
        .network
        .buildings
        .iter()
        .enumerate()
        .map(|(i, b)| thermal::simulate(b, &thermal::coeffs(b, ts.dt), &ts.theta_out, &ts.heat_load[i], &p_hvac[i]))
        .collect();

    Ok(ScheduleSolution {
        case: case.network.name.clone(),
        method: assembled.method,
        epsilon: assembled.epsilon,
        status: sol.status,
        objective: sol.objective,
        objective_evaluated,
        p_hvac,
        lambda,
        p_aux,
        q_aux,
        g_buy: layout.g_buy.iter().map(|&i| x[i].max(0.0)).collect(),
        g_sell: layout.g_sell.iter().map(|&i| x[i].max(0.0)).collect(),
        theta,
        solve_time: sol.solve_time,
        iterations: sol.iterations,
        n_vars: program.n_vars(),
        n_rows: program.rows.len(),
        n_socs: program.socs.len(),
        stats: assembled.stats.clone(),
    })
}

/// Checks the schedule invariants; returns a description of the first failure.
pub fn validate_solution(sol: &ScheduleSolution, case: &Case) -> Result<()> {
    let fail = |m: String| Err(Error::Validation(m));
    let scale = sol.objective.abs().max(1.0);
    if (sol.objective - sol.objective_evaluated).abs() > 1e-6 * scale {
        return fail(format!(
            "solver objective {} differs from re-evaluated {}",
            sol.objective, sol.objective_evaluated
        ));
    }
    for (i, b) in case.network.buildings.iter().enumerate() {
        for (t, &th) in sol.theta[i].iter().enumerate().skip(1) {
            if th < b.theta_lo - 1e-6 || th > b.theta_hi + 1e-6 {
                return fail(format!("building {i} at t={t}: temperature {th:.6} outside comfort band"));
            }
        }
    }
    for t in 0..case.series.horizon {
        if case.series.price_buy[t] > case.series.price_sell[t] && sol.g_buy[t] * sol.g_sell[t] > 1e-6 {
            return fail(format!("t={t}: simultaneous purchase {} and sale {}", sol.g_buy[t], sol.g_sell[t]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ClarabelBackend;
    use crate::distflow::build_sensitivity;
    use crate::netdata::{bundled_ieee13, SampleMatrix};
    use crate::usets::{generate_samples, Family, SamplerConfig};

    fn zero_samples(case: &Case, n: usize) -> SampleSet {
        let d = case.network.n_drg();
        SampleSet::new((0..case.series.horizon).map(|_| SampleMatrix::new(d, vec![0.0; n * d]).unwrap()).collect())
            .unwrap()
    }

    #[test]
    fn security_inputs_round_trip_for_every_method() {
        let cfg = SamplerConfig { family: Family::Gaussian { mean: 0.0, std: 0.1 }, shift: 0.0, scale: 1.0, mixing: None, seed: 3 };
        let (s, _) = generate_samples(&cfg, 3, 2, 60).unwrap();
        for m in Method::ALL {
            let sec = build_security(m, 0.1, &s, &ScenarioOptions::default()).unwrap();
            let back = SecurityInputs::from_json(&sec.to_json().unwrap()).unwrap();
            assert_eq!(back, sec, "{m}");
        }
        assert!(SecurityInputs::from_json(r#"{"method":"box","epsilon":0.1,"steps":[],"mean_xi":[]}"#).is_err());
    }

    fn gaussian_samples(case: &Case, n: usize, seed: u64) -> SampleSet {
        let cfg = SamplerConfig { family: Family::Gaussian { mean: 0.0, std: 0.1 }, shift: 0.0, scale: 1.0, mixing: None, seed };
        generate_samples(&cfg, case.series.horizon, case.network.n_drg(), n).unwrap().0
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("saa".parse::<Method>().is_err());
    }

    #[test]
    fn idle_case_costs_nothing() {
        let mut case = bundled_ieee13();
        let ts = &mut case.series;
        ts.drg_nominal.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.base_p.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.base_q.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.heat_load.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.theta_out.iter_mut().for_each(|v| *v = 26.0);
        for b in &mut case.network.buildings {
            b.theta_init = Some(26.0);
        }
        let sens = build_sensitivity(&case.network);
        let sec = build_security(Method::Box, 0.1, &zero_samples(&case, 20), &ScenarioOptions::default()).unwrap();
        let asm = assemble(&case, &sens, &sec, &AssembleOptions::default()).unwrap();
        let sol = solve(&asm, &case, &ClarabelBackend::default()).unwrap();
        assert!(sol.objective.abs() < 1e-6);
        assert!(sol.p_hvac.iter().flatten().all(|&p| p < 1e-6));
    }

    #[test]
    fn equal_prices_make_cost_independent_of_split() {
        let mut case = bundled_ieee13();
        case.series.price_sell = case.series.price_buy.clone();
        let sens = build_sensitivity(&case.network);
        let sec = build_security(Method::Box, 0.1, &gaussian_samples(&case, 200, 1), &ScenarioOptions::default()).unwrap();
        let asm = assemble(&case, &sens, &sec, &AssembleOptions::default()).unwrap();
        let sol = solve(&asm, &case, &ClarabelBackend::default()).unwrap();
        let net: f64 = (0..24).map(|t| case.series.price_buy[t] * (sol.g_buy[t] - sol.g_sell[t])).sum();
        assert!((net - sol.objective).abs() < 1e-5 * (1.0 + net.abs()));
    }

    #[test]
    fn unreachable_comfort_is_infeasible_with_thermal_rows_named() {
        let mut case = bundled_ieee13();
        let b = &mut case.network.buildings[0];
        b.theta_init = Some(35.0);
        b.p_max = 0.01;
        let sens = build_sensitivity(&case.network);
        let sec = build_security(Method::Box, 0.1, &zero_samples(&case, 20), &ScenarioOptions::default()).unwrap();
        let asm = assemble(&case, &sens, &sec, &AssembleOptions::default()).unwrap();
        match solve(&asm, &case, &ClarabelBackend::default()) {
            Err(Error::Solver { status, message }) => {
                assert_eq!(status, "infeasible");
                assert!(message.contains("comfort_hi"), "{message}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn presolve_and_grouping_do_not_change_the_optimum() {
        let case = bundled_ieee13();
        let sens = build_sensitivity(&case.network);
        let samples = gaussian_samples(&case, 150, 2);
        let solver = ClarabelBackend::default();
        for method in [Method::Svc, Method::Hull] {
            let sec = build_security(method, 0.1, &samples, &ScenarioOptions::default()).unwrap();
            let plain = assemble(&case, &sens, &sec, &AssembleOptions { group_directions: false, presolve: false }).unwrap();
            let fast = assemble(&case, &sens, &sec, &AssembleOptions::default()).unwrap();
            let size = |a: &Assembled| a.program.n_vars() + a.program.rows.len();
            assert!(size(&fast) < size(&plain));
            let a = solve(&plain, &case, &solver).unwrap();
            let b = solve(&fast, &case, &solver).unwrap();
            assert!((a.objective - b.objective).abs() <= 1e-5 * a.objective.abs().max(1.0), "{method}: {} vs {}", a.objective, b.objective);
        }
    }

    #[test]
    fn solutions_satisfy_invariants_and_round_trip() {
        let case = bundled_ieee13();
        let sens = build_sensitivity(&case.network);
        let samples = gaussian_samples(&case, 200, 3);
        for method in Method::ALL {
            let sec = build_security(method, 0.05, &samples, &ScenarioOptions::default()).unwrap();
            let asm = assemble(&case, &sens, &sec, &AssembleOptions::default()).unwrap();
            let sol = solve(&asm, &case, &ClarabelBackend::default()).unwrap();
            validate_solution(&sol, &case).unwrap();
            assert!(sol.lambda.iter().flatten().all(|&l| (0.0..=1.0).contains(&l)));
            assert!((sol.cost(&case) - sol.objective).abs() < 1e-5 * sol.objective.abs().max(1.0));
            let back = ScheduleSolution::from_json(&sol.to_json().unwrap()).unwrap();
            assert_eq!(back, sol);
            let x = back.decision_vector(&asm.layout);
            assert_eq!(x[asm.layout.lambda[0][5]], sol.lambda[0][5]);
        }
    }
}
