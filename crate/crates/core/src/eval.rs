//! Monte-Carlo validation of schedules and the experiment report.

use web_time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conic::{ClarabelBackend, ConicSolver};
use crate::distflow::{build_sensitivity, FlowSensitivity};
use crate::error::{Error, Result};
use crate::netdata::{resolve_case, Case, SampleMatrix, SampleSet};
use crate::robust::extract_uncertain_constraints;
use crate::scheduler::{
    assemble, build_security, solve, validate_solution, AssembleOptions, DecisionLayout, Method, ScenarioOptions,
    ScheduleSolution, SecurityInputs, StepUncertainty,
};
use crate::usets::{generate_heldout, generate_samples, BoxSet, SamplerConfig, UncertaintySet};

/// Residual above which a member constraint counts as violated.
pub const VIOLATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Violation frequency per timestep.
    pub per_t: Vec<f64>,
    pub max: f64,
    pub argmax_t: usize,
    /// Samples per timestep.
    pub n: usize,
    /// 95% normal-approximation half-width at the maximum.
    pub half_width: f64,
}

/// 95% binomial half-width `1.96·√(p(1−p)/n)`.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Frequency with which any member of the joint security constraint is
/// violated, per timestep, over the rows of `samples`.
pub fn violation_probability(
    solution: &ScheduleSolution,
    case: &Case,
    sens: &FlowSensitivity,
    samples: &SampleSet,
) -> Result<ViolationReport> {
    let horizon = case.series.horizon;
    if samples.horizon() != horizon {
        return Err(Error::DimensionMismatch { expected: horizon, found: samples.horizon() });
    }
    if samples.dim() != case.network.n_drg() {
        return Err(Error::DimensionMismatch { expected: case.network.n_drg(), found: samples.dim() });
    }
    let n = samples.at(0).n_rows();
    if n == 0 {
        return Err(Error::Samples("empty evaluation set".into()));
    }
    let layout = DecisionLayout::for_case(case);
    let x = solution.decision_vector(&layout);

    let step = |t: usize| -> Result<f64> {
        let members = extract_uncertain_constraints(case, sens, &layout, t)?;
        let base: Vec<f64> = members.iter().map(|m| -m.beta.eval(&x)).collect();
        let coef: Vec<Vec<f64>> = members.iter().map(|m| m.c.iter().map(|c| c.eval(&x)).collect()).collect();
        let m = samples.at(t);
        let violated = m
            .rows()
            .filter(|xi| {
                base.iter()
                    .zip(&coef)
                    .any(|(b, c)| b + c.iter().zip(*xi).map(|(a, v)| a * v).sum::<f64>() > VIOLATION_TOL)
            })
            .count();
        Ok(violated as f64 / m.n_rows() as f64)
    };
    #[cfg(feature = "parallel")]
    let per_t: Vec<f64> = {
        use rayon::prelude::*;
        (0..horizon).into_par_iter().map(step).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_t: Vec<f64> = (0..horizon).map(step).collect::<Result<_>>()?;

    let (argmax_t, max) = per_t
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (t, v)| if v > a.1 { (t, v) } else { a });
    Ok(ViolationReport { half_width: binomial_half_width(max, n), per_t, max, argmax_t, n })
}

/// Energy-weighted mean utilization `Σ λ Ḡ / Σ Ḡ`.
pub fn utilization_rate(solution: &ScheduleSolution, case: &Case) -> f64 {
    let g = &case.series.drg_nominal;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, row) in solution.lambda.iter().enumerate() {
        for (t, &l) in row.iter().enumerate() {
            num += l * g[j][t];
            den += g[j][t];
        }
    }
    if den > 0.0 {
        num / den
    } else {
        let all: Vec<f64> = solution.lambda.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub area: f64,
    /// Standard error of the estimate.
    pub se: f64,
    pub n: usize,
}

fn mc_points(bbox: &BoxSet, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            [
                bbox.lo[0] + (bbox.hi[0] - bbox.lo[0]) * rng.random::<f64>(),
                bbox.lo[1] + (bbox.hi[1] - bbox.lo[1]) * rng.random::<f64>(),
            ]
        })
        .collect()
}

/// Monte-Carlo area of a 2-D set inside `bbox`: hit fraction times box area.
pub fn set_area_2d(set: &UncertaintySet, bbox: &BoxSet, n_points: usize, seed: u64) -> Result<AreaEstimate> {
    if set.dim() != 2 || bbox.lo.len() != 2 {
        return Err(Error::InvalidInput("area estimation needs D = 2".into()));
    }
    if n_points == 0 {
        return Err(Error::InvalidInput("area estimation needs at least one point".into()));
    }
    let pts = mc_points(bbox, n_points, seed);
    let hits = pts.iter().filter(|p| set.contains(&p[..], 1e-12)).count();
    let frac = hits as f64 / n_points as f64;
    let box_area = bbox.area();
    Ok(AreaEstimate {
        area: frac * box_area,
        se: box_area * (frac * (1.0 - frac) / n_points as f64).sqrt(),
        n: n_points,
    })
}

/// Fraction of rows inside the set; the count is exact.
pub fn coverage(set: &UncertaintySet, rows: &SampleMatrix) -> (usize, usize) {
    (rows.rows().filter(|r| set.contains(r, 1e-8)).count(), rows.n_rows())
}

/// A named sampler that defines one experiment case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub name: String,
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub n_train: usize,
    pub n_heldout: usize,
    pub scenario: ScenarioOptions,
    pub assemble: AssembleOptions,
    pub area_points: usize,
    /// Timesteps at which set areas are estimated.
    pub area_steps: Vec<usize>,
    /// Timestep whose set boundaries are exported for plotting.
    pub plot_step: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            n_train: 1000,
            n_heldout: 10_000,
            scenario: ScenarioOptions::default(),
            assemble: AssembleOptions::default(),
            area_points: 20_000,
            area_steps: vec![6, 10, 14, 18],
            plot_step: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    pub method: Method,
    pub epsilon: f64,
    pub cost: f64,
    pub utilization: f64,
    pub max_violation_out: f64,
    pub half_width_out: f64,
    pub worst_t_out: usize,
    pub n_out: usize,
    pub max_violation_in: f64,
    pub half_width_in: f64,
    pub n_in: usize,
    /// Smallest per-timestep fraction of training rows inside the set.
    pub min_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaRow {
    pub case: String,
    pub method: Method,
    pub epsilon: f64,
    pub t: usize,
    pub area: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub case: String,
    pub method: Method,
    pub epsilon: f64,
    pub t: usize,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub case: String,
    pub method: Method,
    pub epsilon: f64,
    /// Set construction, assembly, solve and evaluation, seconds.
    pub build_s: f64,
    pub assemble_s: f64,
    pub solve_s: f64,
    pub evaluate_s: f64,
    pub n_vars: usize,
    pub n_rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub areas: Vec<AreaRow>,
    pub boundaries: Vec<BoundaryRow>,
    /// Wall-clock measurements; kept out of the deterministic tables.
    #[serde(skip)]
    pub timings: Vec<TimingRow>,
}

/// Everything needed to rerun the experiment grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Bundled case name or path to a case JSON file.
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub cases: Vec<CaseSpec>,
    pub epsilons: Vec<f64>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub experiment: ExperimentSettings,
    #[serde(default)]
    pub solver: ClarabelBackend,
}

const BUNDLED_CONFIG: &str = include_str!("../data/run_config.json");

impl RunConfig {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_CONFIG).expect("bundled run config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read run config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() || self.epsilons.is_empty() || self.methods.is_empty() {
            return Err(Error::Config("run config needs at least one case, epsilon and method".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {e}")));
        }
        let mut names: Vec<&str> = self.cases.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("case names must be unique".into()));
        }
        if self.experiment.n_train == 0 || self.experiment.n_heldout == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        Ok(())
    }

    /// Replaces every sampler seed and the scenario seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.cases.iter_mut().for_each(|c| c.sampler.seed = seed);
        self.experiment.scenario.seed = seed;
        self
    }

    pub fn case_spec(&self, name: &str) -> Result<&CaseSpec> {
        self.cases.iter().find(|c| c.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.cases.iter().map(|c| c.name.as_str()).collect();
            Error::Config(format!("unknown case {name:?}; configured: {}", known.join(", ")))
        })
    }

    pub fn load_case(&self) -> Result<Case> {
        resolve_case(&self.case)
    }
}

/// Training and held-out samples for one case.
pub struct CaseData {
    pub spec: CaseSpec,
    pub train: SampleSet,
    pub heldout: SampleSet,
    pub notes: Vec<String>,
}

pub fn case_data(case: &Case, spec: &CaseSpec, settings: &ExperimentSettings) -> Result<CaseData> {
    let (h, d) = (case.series.horizon, case.network.n_drg());
    let (train, a) = generate_samples(&spec.sampler, h, d, settings.n_train)?;
    let (heldout, b) = generate_heldout(&spec.sampler, h, d, settings.n_heldout)?;
    let notes = [a.bias_note(), b.bias_note()].into_iter().flatten().collect();
    Ok(CaseData { spec: spec.clone(), train, heldout, notes })
}

/// Full result of one (case, method, ε) pipeline run.
pub struct RunOutcome {
    pub row: ReportRow,
    pub timing: TimingRow,
    pub solution: ScheduleSolution,
    pub security: SecurityInputs,
}

pub fn run_single(
    case: &Case,
    data: &CaseData,
    method: Method,
    epsilon: f64,
    settings: &ExperimentSettings,
    solver: &dyn ConicSolver,
) -> Result<RunOutcome> {
    let sens = build_sensitivity(&case.network);
    let t0 = Instant::now();
    let security = build_security(method, epsilon, &data.train, &settings.scenario)?;
    let t1 = Instant::now();
    let asm = assemble(case, &sens, &security, &settings.assemble)?;
    let t2 = Instant::now();
    let solution = solve(&asm, case, solver)?;
    validate_solution(&solution, case)?;
    let t3 = Instant::now();
    let out = violation_probability(&solution, case, &sens, &data.heldout)?;
    let inn = violation_probability(&solution, case, &sens, &data.train)?;
    let min_coverage = security
        .steps
        .iter()
        .enumerate()
        .map(|(t, s)| match s {
            StepUncertainty::Set(set) => {
                let (k, n) = coverage(set, data.train.at(t));
                Some(k as f64 / n as f64)
            }
            StepUncertainty::Moments(_) => None,
        })
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)));
    let t4 = Instant::now();
    let row = ReportRow {
        case: data.spec.name.clone(),
        method,
        epsilon,
        cost: solution.objective,
        utilization: utilization_rate(&solution, case),
        max_violation_out: out.max,
        half_width_out: out.half_width,
        worst_t_out: out.argmax_t,
        n_out: out.n,
        max_violation_in: inn.max,
        half_width_in: inn.half_width,
        n_in: inn.n,
        min_coverage,
    };
    let timing = TimingRow {
        case: data.spec.name.clone(),
        method,
        epsilon,
        build_s: (t1 - t0).as_secs_f64(),
        assemble_s: (t2 - t1).as_secs_f64(),
        solve_s: (t3 - t2).as_secs_f64(),
        evaluate_s: (t4 - t3).as_secs_f64(),
        n_vars: solution.n_vars,
        n_rows: solution.n_rows,
    };
    Ok(RunOutcome { row, timing, solution, security })
}

/// Bounding box shared by several 2-D sets, used for common-random-number areas.
fn union_box(sets: &[&UncertaintySet]) -> Result<BoxSet> {
    let mut lo = vec![f64::INFINITY; 2];
    let mut hi = vec![f64::NEG_INFINITY; 2];
    for s in sets {
        for p in s.boundary_2d()? {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    }
    for k in 0..2 {
        let pad = 1e-3 * (hi[k] - lo[k]).max(1e-6);
        lo[k] -= pad;
        hi[k] += pad;
    }
    Ok(BoxSet { lo, hi })
}

/// Areas and plot boundaries of the set-based methods for one (case, ε).
pub fn set_geometry(
    case_name: &str,
    epsilon: f64,
    runs: &[(Method, &SecurityInputs)],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<(Vec<AreaRow>, Vec<BoundaryRow>)> {
    let mut areas = Vec::new();
    let mut boundaries = Vec::new();
    let set_at = |sec: &SecurityInputs, t: usize| match &sec.steps[t] {
        StepUncertainty::Set(s) if s.dim() == 2 => Some(s.clone()),
        _ => None,
    };
    let horizon = runs.first().map(|r| r.1.steps.len()).unwrap_or(0);
    for &t in settings.area_steps.iter().filter(|&&t| t < horizon) {
        let sets: Vec<(Method, UncertaintySet)> = runs.iter().filter_map(|(m, s)| set_at(s, t).map(|x| (*m, x))).collect();
        if sets.is_empty() {
            continue;
        }
        let refs: Vec<&UncertaintySet> = sets.iter().map(|s| &s.1).collect();
        let bbox = union_box(&refs)?;
        for (m, s) in &sets {
            let a = set_area_2d(s, &bbox, settings.area_points, seed ^ (t as u64).wrapping_mul(0x9E37_79B9))?;
            areas.push(AreaRow { case: case_name.into(), method: *m, epsilon, t, area: a.area, se: a.se, n: a.n });
        }
    }
    if settings.plot_step < horizon {
        for (m, sec) in runs {
            if let Some(s) = set_at(sec, settings.plot_step) {
                boundaries.push(BoundaryRow {
                    case: case_name.into(),
                    method: *m,
                    epsilon,
                    t: settings.plot_step,
                    points: s.boundary_2d()?,
                });
            }
        }
    }
    Ok((areas, boundaries))
}

/// Runs every (case, ε, method) combination. `progress` receives each
/// finished run.
pub fn run_report(
    case: &Case,
    cases: &[CaseSpec],
    epsilons: &[f64],
    methods: &[Method],
    settings: &ExperimentSettings,
    solver: &dyn ConicSolver,
    mut progress: impl FnMut(&ReportRow, &TimingRow),
) -> Result<Report> {
    let mut report = Report::default();
    for spec in cases {
        let data = case_data(case, spec, settings)?;
        for &eps in epsilons {
            let mut runs = Vec::with_capacity(methods.len());
            for &m in methods {
                let out = run_single(case, &data, m, eps, settings, solver)?;
                progress(&out.row, &out.timing);
                report.rows.push(out.row.clone());
                report.timings.push(out.timing.clone());
                runs.push(out);
            }
            let pairs: Vec<(Method, &SecurityInputs)> = runs.iter().map(|r| (r.row.method, &r.security)).collect();
            let (a, b) = set_geometry(&spec.name, eps, &pairs, settings, spec.sampler.seed)?;
            report.areas.extend(a);
            report.boundaries.extend(b);
        }
    }
    Ok(report)
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

impl Report {
    pub fn rows_csv(&self) -> Result<String> {
        csv_of(&self.rows)
    }

    pub fn areas_csv(&self) -> Result<String> {
        csv_of(&self.areas)
    }

    pub fn timings_csv(&self) -> Result<String> {
        csv_of(&self.timings)
    }

    /// Deterministic tables as JSON (timings excluded).
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ClarabelBackend, SolveStatus};
    use crate::netdata::bundled_ieee13;
    use crate::scheduler::AssemblyStats;
    use crate::svc::{export_polyhedron, polygon_area, train_with_kernel, KernelSpec, SmoOptions};
    use crate::usets::{Family, HullSet};

    fn blank_solution(case: &Case, lambda: f64) -> ScheduleSolution {
        let h = case.series.horizon;
        let nb = case.network.n_branches();
        ScheduleSolution {
            case: case.network.name.clone(),
            method: Method::Box,
            epsilon: 0.05,
            status: SolveStatus::Optimal,
            objective: 0.0,
            objective_evaluated: 0.0,
            p_hvac: vec![vec![0.0; h]; case.network.buildings.len()],
            lambda: vec![vec![lambda; h]; case.network.n_drg()],
            p_aux: vec![vec![2.0; h]; nb],
            q_aux: vec![vec![2.0; h]; nb],
            g_buy: vec![0.0; h],
            g_sell: vec![0.0; h],
            theta: vec![],
            solve_time: 0.0,
            iterations: 0,
            n_vars: 0,
            n_rows: 0,
            n_socs: 0,
            stats: AssemblyStats::default(),
        }
    }

    #[test]
    fn bundled_config_round_trips() {
        let cfg = RunConfig::bundled();
        assert_eq!(cfg.cases.len(), 3);
        assert_eq!(cfg.epsilons, vec![0.05, 0.10, 0.15, 0.25]);
        let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back.cases, cfg.cases);
        let seeded = cfg.with_seed(7);
        assert!(seeded.cases.iter().all(|c| c.sampler.seed == 7));
        assert_eq!(seeded.experiment.scenario.seed, 7);
        assert!(RunConfig::from_json(r#"{"case":"ieee13","cases":[],"epsilons":[0.1],"methods":["svc"]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"case":"ieee13","bogus":1}"#).is_err());
    }

    #[test]
    fn no_drg_use_never_violates() {
        let case = bundled_ieee13();
        let sens = build_sensitivity(&case.network);
        let cfg = SamplerConfig { family: Family::Gaussian { mean: 0.0, std: 0.3 }, shift: 0.0, scale: 1.0, mixing: None, seed: 1 };
        let (s, _) = generate_samples(&cfg, 24, 2, 300).unwrap();
        let r = violation_probability(&blank_solution(&case, 0.0), &case, &sens, &s).unwrap();
        assert_eq!(r.max, 0.0);
        assert_eq!(r.n, 300);
    }

    #[test]
    fn three_of_hundred_violate() {
        // one branch feeding a DRG; P_aux chosen so ξ > 0.5 violates
        let mut case = bundled_ieee13();
        case.series.horizon = 1;
        let ts = &mut case.series;
        for v in [&mut ts.theta_out, &mut ts.price_buy, &mut ts.price_sell] {
            v.truncate(1);
        }
        for m in [&mut ts.heat_load, &mut ts.base_p, &mut ts.base_q, &mut ts.drg_nominal] {
            m.iter_mut().for_each(|r| r.truncate(1));
        }
        ts.base_p.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.base_q.iter_mut().flatten().for_each(|v| *v = 0.0);
        ts.drg_nominal = vec![vec![1.0], vec![0.0]];
        for b in &mut case.network.buses {
            b.v_max_sq = 10.0;
            b.v_min_sq = 0.0;
        }
        let sens = build_sensitivity(&case.network);
        let mut sol = blank_solution(&case, 1.0);
        // reverse flow on every branch above DRG 0 is 1 + ξ_0; limit it to 1.5
        sol.p_aux.iter_mut().for_each(|r| r[0] = 1.5);
        let rows: Vec<Vec<f64>> = (0..100).map(|k| vec![if k < 3 { 0.8 } else { 0.1 }, 0.0]).collect();
        let s = SampleSet::new(vec![SampleMatrix::from_rows(&rows).unwrap()]).unwrap();
        let r = violation_probability(&sol, &case, &sens, &s).unwrap();
        assert!((r.max - 0.03).abs() < 1e-15);
        assert!((r.half_width - 1.96 * (0.03f64 * 0.97 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn utilization_values() {
        let case = bundled_ieee13();
        assert_eq!(utilization_rate(&blank_solution(&case, 1.0), &case), 1.0);
        assert_eq!(utilization_rate(&blank_solution(&case, 0.0), &case), 0.0);
        assert!((utilization_rate(&blank_solution(&case, 0.5), &case) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn area_of_unit_box_and_empty_set() {
        let unit = BoxSet { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let a = set_area_2d(&UncertaintySet::Box(unit.clone()), &unit, 1000, 1).unwrap();
        assert_eq!(a.area, 1.0);
        assert_eq!(a.se, 0.0);
        let far = UncertaintySet::Hull(HullSet { vertices: vec![vec![5.0, 5.0], vec![6.0, 5.0], vec![5.0, 6.0]] });
        assert_eq!(set_area_2d(&far, &unit, 1000, 1).unwrap().area, 0.0);
    }

    #[test]
    fn square_svc_area_matches_polygon() {
        let m = train_with_kernel(
            &SampleMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap(),
            0.25,
            KernelSpec::identity(vec![2.0, 2.0]),
            SmoOptions::default(),
        )
        .unwrap();
        let set = UncertaintySet::Svc(export_polyhedron(&m));
        let exact = polygon_area(&set.boundary_2d().unwrap());
        let bbox = BoxSet { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] };
        let mc = set_area_2d(&set, &bbox, 40_000, 3).unwrap();
        assert!((mc.area - exact).abs() < 4.0 * mc.se, "{} vs {exact}", mc.area);
    }

    #[test]
    fn random_svc_area_matches_polygon() {
        let cfg = SamplerConfig { family: Family::Beta { a: 3.0, b: 3.0 }, shift: -0.5, scale: 1.0, mixing: Some(vec![vec![1.0, 0.0], vec![0.6, 0.8]]), seed: 5 };
        let (s, _) = generate_samples(&cfg, 1, 2, 300).unwrap();
        let m = crate::svc::train(s.at(0), 0.1).unwrap();
        let set = UncertaintySet::Svc(export_polyhedron(&m));
        let exact = polygon_area(&set.boundary_2d().unwrap());
        let bbox = union_box(&[&set]).unwrap();
        let mc = set_area_2d(&set, &bbox, 50_000, 9).unwrap();
        assert!((mc.area - exact).abs() < 4.0 * mc.se + 1e-9, "{} vs {exact}", mc.area);
    }

    #[test]
    fn report_is_deterministic_and_complete() {
        let case = bundled_ieee13();
        let cases = vec![CaseSpec {
            name: "gauss".into(),
            sampler: SamplerConfig { family: Family::Gaussian { mean: 0.0, std: 0.08 }, shift: 0.0, scale: 1.0, mixing: None, seed: 7 },
        }];
        let settings = ExperimentSettings { n_train: 120, n_heldout: 400, area_points: 2000, ..Default::default() };
        let solver = ClarabelBackend::default();
        let run = || run_report(&case, &cases, &[0.1, 0.2], &[Method::Svc, Method::Box], &settings, &solver, |_, _| {}).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.rows.len(), 1 * 2 * 2);
        assert_eq!(a.rows_csv().unwrap(), b.rows_csv().unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert!(!a.to_json().unwrap().contains("solve_s"));
        assert_eq!(a.timings.len(), 4);
        for r in &a.rows {
            assert!(r.half_width_out >= 0.0 && r.n_out == 400);
        }
    }
}
