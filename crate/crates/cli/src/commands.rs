use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use jcc_sched::conic::ConicSolver;
use jcc_sched::distflow::build_sensitivity;
use jcc_sched::eval::{case_data, run_report, utilization_rate, violation_probability, CaseData, RunConfig};
use jcc_sched::netdata::{load_samples_for, save_samples, Case, SampleSet};
use jcc_sched::scheduler::{assemble, build_security, solve, validate_solution, Method, ScheduleSolution, SecurityInputs};
use jcc_sched::usets::{generate_heldout, generate_samples};
use jcc_sched::{Error, Result};
use serde_json::json;

use crate::log::Logger;
use crate::{Cli, Command, GlobalOpts};

struct Ctx {
    cfg: RunConfig,
    case: Case,
    out: PathBuf,
    log: Logger,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn eps_tag(eps: f64) -> String {
    format!("eps{eps}")
}

fn check_epsilon(eps: f64) -> Result<f64> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::bundled(),
    };
    if let Some(c) = &g.case {
        cfg.case = c.clone();
    }
    if let Some(s) = g.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(n) = g.n_train {
        cfg.experiment.n_train = n;
    }
    if let Some(n) = g.n_heldout {
        cfg.experiment.n_heldout = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl Ctx {
    fn dists(&self, only: Option<&str>) -> Result<Vec<String>> {
        match only {
            Some(d) => Ok(vec![self.cfg.case_spec(d)?.name.clone()]),
            None => Ok(self.cfg.cases.iter().map(|c| c.name.clone()).collect()),
        }
    }

    fn dist_or_first(&self, d: Option<&str>) -> Result<String> {
        Ok(self.dists(d)?.remove(0))
    }

    fn samples_path(&self, dist: &str, which: &str) -> PathBuf {
        self.out.join("samples").join(dist).join(format!("{which}.csv"))
    }

    fn artifact(&self, kind: &str, dist: &str, method: Method, eps: f64) -> PathBuf {
        self.out.join(kind).join(dist).join(format!("{method}-{}.json", eps_tag(eps)))
    }

    /// Samples from `<out>/samples` when present, otherwise drawn from the config.
    fn samples(&mut self, dist: &str, heldout: bool) -> Result<SampleSet> {
        let which = if heldout { "heldout" } else { "train" };
        let path = self.samples_path(dist, which);
        if path.exists() {
            self.log.event("load_samples", json!({ "path": path.display().to_string() }));
            return load_samples_for(&path, self.case.network.n_drg());
        }
        let spec = self.cfg.case_spec(dist)?.clone();
        let (h, d) = (self.case.series.horizon, self.case.network.n_drg());
        let e = &self.cfg.experiment;
        let (s, stats) = if heldout {
            generate_heldout(&spec.sampler, h, d, e.n_heldout)?
        } else {
            generate_samples(&spec.sampler, h, d, e.n_train)?
        };
        self.log.event("generate_samples", json!({ "dist": dist, "which": which, "rows": s.at(0).n_rows(), "rejected": stats.rejected }));
        Ok(s)
    }

    fn security(&mut self, dist: &str, method: Method, eps: f64, explicit: Option<&Path>) -> Result<SecurityInputs> {
        let default = self.artifact("sets", dist, method, eps);
        let path = explicit.map(Path::to_path_buf).or_else(|| default.exists().then_some(default));
        if let Some(p) = path {
            let sec = SecurityInputs::from_json(&read(&p)?)?;
            if sec.method != method || sec.epsilon != eps {
                return Err(Error::Config(format!(
                    "{} holds {} at epsilon {}, not {method} at {eps}",
                    p.display(),
                    sec.method,
                    sec.epsilon
                )));
            }
            self.log.event("load_sets", json!({ "path": p.display().to_string() }));
            return Ok(sec);
        }
        let train = self.samples(dist, false)?;
        let t0 = Instant::now();
        let sec = build_security(method, eps, &train, &self.cfg.experiment.scenario)?;
        self.log.event("train_sets", json!({ "dist": dist, "method": method, "epsilon": eps, "seconds": t0.elapsed().as_secs_f64() }));
        Ok(sec)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let case = cfg.load_case()?;
    let mut log = Logger::new(cli.global.quiet);
    log.attach(&cli.global.out);
    let mut ctx = Ctx { cfg, case, out: cli.global.out.clone(), log };
    match &cli.command {
        Command::GenSamples { dist } => gen_samples(&mut ctx, dist.as_deref()),
        Command::TrainSets { epsilon, method, dist } => {
            let eps = match epsilon {
                Some(e) => vec![check_epsilon(*e)?],
                None => ctx.cfg.epsilons.clone(),
            };
            let methods = match method {
                Some(m) => vec![m.parse()?],
                None => ctx.cfg.methods.clone(),
            };
            for d in ctx.dists(dist.as_deref())? {
                for &e in &eps {
                    for &m in &methods {
                        let sec = ctx.security(&d, m, e, None)?;
                        let path = ctx.artifact("sets", &d, m, e);
                        write(&path, &sec.to_json()?)?;
                        ctx.log.event("write", json!({ "path": path.display().to_string() }));
                    }
                }
            }
            Ok(())
        }
        Command::Solve { method, epsilon, dist, sets, dump_program } => {
            let m: Method = method.parse()?;
            let e = check_epsilon(*epsilon)?;
            let d = ctx.dist_or_first(dist.as_deref())?;
            solve_one(&mut ctx, &d, m, e, sets.as_deref(), *dump_program)
        }
        Command::Evaluate { method, epsilon, dist, solution } => {
            let m: Method = method.parse()?;
            let e = check_epsilon(*epsilon)?;
            let d = ctx.dist_or_first(dist.as_deref())?;
            evaluate_one(&mut ctx, &d, m, e, solution.as_deref())
        }
        Command::Report { epsilons, methods, dists } => {
            if let Some(e) = epsilons {
                ctx.cfg.epsilons = e.clone();
            }
            if let Some(m) = methods {
                ctx.cfg.methods = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            if let Some(d) = dists {
                let keep: Vec<_> = d.iter().map(|n| ctx.cfg.case_spec(n).cloned()).collect::<Result<_>>()?;
                ctx.cfg.cases = keep;
            }
            ctx.cfg.validate()?;
            report(&mut ctx)
        }
        Command::Reproduce => {
            gen_samples(&mut ctx, None)?;
            report(&mut ctx)
        }
    }
}

fn gen_samples(ctx: &mut Ctx, dist: Option<&str>) -> Result<()> {
    for d in ctx.dists(dist)? {
        let spec = ctx.cfg.case_spec(&d)?.clone();
        let t0 = Instant::now();
        let data: CaseData = case_data(&ctx.case, &spec, &ctx.cfg.experiment)?;
        for note in &data.notes {
            ctx.log.event("bias_note", json!({ "dist": d, "note": note }));
        }
        for (which, s) in [("train", &data.train), ("heldout", &data.heldout)] {
            let path = ctx.samples_path(&d, which);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            save_samples(s, &path)?;
            ctx.log.event("write", json!({ "path": path.display().to_string(), "rows_per_step": s.at(0).n_rows() }));
        }
        ctx.log.event("gen_samples", json!({ "dist": d, "seconds": t0.elapsed().as_secs_f64() }));
    }
    Ok(())
}

fn solve_one(ctx: &mut Ctx, dist: &str, method: Method, eps: f64, sets: Option<&Path>, dump: bool) -> Result<()> {
    let security = ctx.security(dist, method, eps, sets)?;
    let sens = build_sensitivity(&ctx.case.network);
    let t0 = Instant::now();
    let asm = assemble(&ctx.case, &sens, &security, &ctx.cfg.experiment.assemble)?;
    ctx.log.event(
        "assemble",
        json!({ "seconds": t0.elapsed().as_secs_f64(), "vars": asm.program.n_vars(), "rows": asm.program.rows.len(), "socs": asm.program.socs.len(), "stats": asm.stats }),
    );
    if dump {
        let path = ctx.artifact("programs", dist, method, eps).with_extension("lp");
        let mut buf = Vec::new();
        asm.program.write_lp(&mut buf).map_err(|e| Error::io(&path, e))?;
        write(&path, &String::from_utf8_lossy(&buf))?;
    }
    let solver: &dyn ConicSolver = &ctx.cfg.solver;
    let sol = solve(&asm, &ctx.case, solver)?;
    validate_solution(&sol, &ctx.case)?;
    ctx.log.event(
        "solve",
        json!({ "dist": dist, "method": method, "epsilon": eps, "status": sol.status, "objective": sol.objective, "solve_time_s": sol.solve_time, "iterations": sol.iterations }),
    );
    let path = ctx.artifact("solutions", dist, method, eps);
    write(&path, &sol.to_json()?)?;
    ctx.log.event("write", json!({ "path": path.display().to_string() }));
    Ok(())
}

fn evaluate_one(ctx: &mut Ctx, dist: &str, method: Method, eps: f64, solution: Option<&Path>) -> Result<()> {
    let path = solution.map(Path::to_path_buf).unwrap_or_else(|| ctx.artifact("solutions", dist, method, eps));
    if !path.exists() {
        return Err(Error::Config(format!("no solution at {}; run `solve` first", path.display())));
    }
    let sol = ScheduleSolution::from_json(&read(&path)?)?;
    let sens = build_sensitivity(&ctx.case.network);
    let heldout = ctx.samples(dist, true)?;
    let train = ctx.samples(dist, false)?;
    let t0 = Instant::now();
    let out = violation_probability(&sol, &ctx.case, &sens, &heldout)?;
    let inn = violation_probability(&sol, &ctx.case, &sens, &train)?;
    let doc = json!({
        "case": ctx.case.network.name,
        "dist": dist,
        "method": sol.method,
        "epsilon": sol.epsilon,
        "cost": sol.objective,
        "utilization": utilization_rate(&sol, &ctx.case),
        "violation_out_of_sample": out,
        "violation_in_sample": inn,
    });
    ctx.log.event(
        "evaluate",
        json!({ "seconds": t0.elapsed().as_secs_f64(), "max_violation_out": out.max, "half_width_out": out.half_width, "max_violation_in": inn.max }),
    );
    let dst = ctx.artifact("eval", dist, method, eps);
    write(&dst, &serde_json::to_string_pretty(&doc)?)?;
    ctx.log.event("write", json!({ "path": dst.display().to_string() }));
    Ok(())
}

fn report(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg.clone();
    let log = &mut ctx.log;
    let rep = run_report(&ctx.case, &cfg.cases, &cfg.epsilons, &cfg.methods, &cfg.experiment, &cfg.solver, |row, t| {
        log.event(
            "run",
            json!({
                "dist": row.case, "method": row.method, "epsilon": row.epsilon, "cost": row.cost,
                "max_violation_out": row.max_violation_out, "build_s": t.build_s, "assemble_s": t.assemble_s,
                "solve_s": t.solve_s, "evaluate_s": t.evaluate_s, "vars": t.n_vars,
            }),
        )
    })?;
    let dir = ctx.out.join("report");
    for (name, text) in [
        ("report.csv", rep.rows_csv()?),
        ("areas.csv", rep.areas_csv()?),
        ("report.json", rep.to_json()?),
        ("timings.csv", rep.timings_csv()?),
    ] {
        let p = dir.join(name);
        write(&p, &text)?;
        ctx.log.event("write", json!({ "path": p.display().to_string() }));
    }
    Ok(())
}
