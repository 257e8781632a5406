//! Solver-agnostic LP/SOCP representation and the bundled interior-point
//! backend.
//!
//! A [`ConicProgram`] is a list of bounded variables, a linear objective,
//! linear rows in the form `expr ≤ 0` or `expr = 0`, and second-order cone
//! blocks `‖tail‖₂ ≤ head`. Any backend that can consume this and return a
//! status plus primal values implements [`ConicSolver`].

use std::fmt;
use web_time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus as ClarabelStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse affine expression `Σ coeff·x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(var: usize, coeff: f64) -> Self {
        Self { terms: vec![(var, coeff)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: usize, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        for &(v, c) in &other.terms {
            self.add_term(v, c * scale);
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut e = LinExpr::default();
        e.add_expr(self, s);
        e
    }

    /// Merges duplicate variables and drops exact zeros.
    pub fn compact(&mut self) {
        if self.terms.len() < 2 {
            self.terms.retain(|t| t.1 != 0.0);
            return;
        }
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.1.abs()))
    }
}

/// Compact diagnostic label for a row: a static group name plus indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub group: &'static str,
    pub t: u32,
    pub a: u32,
    pub b: u32,
}

impl Tag {
    pub fn new(group: &'static str, t: usize, a: usize, b: usize) -> Self {
        Self { group, t: t as u32, a: a as u32, b: b as u32 }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[t={},{},{}]", self.group, self.t, self.a, self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    /// `expr ≤ 0`
    Le,
    /// `expr = 0`
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub expr: LinExpr,
    pub sense: Sense,
    pub tag: Tag,
}

/// `‖tail‖₂ ≤ head`
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub head: LinExpr,
    pub tail: Vec<LinExpr>,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    pub vars: Vec<Variable>,
    /// Minimized.
    pub objective: LinExpr,
    pub rows: Vec<Row>,
    pub socs: Vec<SocBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.vars.push(Variable { name: name.into(), lower, upper });
        self.vars.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_le(&mut self, expr: LinExpr, tag: Tag) {
        self.rows.push(Row { expr, sense: Sense::Le, tag });
    }

    pub fn add_eq(&mut self, expr: LinExpr, tag: Tag) {
        self.rows.push(Row { expr, sense: Sense::Eq, tag });
    }

    pub fn add_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>, tag: Tag) {
        self.socs.push(SocBlock { head, tail, tag });
    }

    /// Checks that every row references registered variables and that the
    /// objective and cones are well formed.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        let check = |e: &LinExpr, what: &dyn fmt::Display| -> Result<()> {
            if !e.constant.is_finite() {
                return Err(Error::InvalidInput(format!("{what}: non-finite constant")));
            }
            for &(v, c) in &e.terms {
                if v >= n {
                    return Err(Error::InvalidInput(format!("{what}: unknown variable {v}")));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidInput(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        check(&self.objective, &"objective")?;
        for r in &self.rows {
            check(&r.expr, &r.tag)?;
        }
        for s in &self.socs {
            if s.tail.is_empty() {
                return Err(Error::InvalidInput(format!("{}: cone dimension below 2", s.tag)));
            }
            check(&s.head, &s.tag)?;
            for e in &s.tail {
                check(e, &s.tag)?;
            }
        }
        for v in &self.vars {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(Error::InvalidInput(format!("variable {}: empty bounds", v.name)));
            }
        }
        Ok(())
    }

    /// Largest violation of any row, bound or cone at `x`, with its label.
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        let mut bump = |v: f64, label: &dyn Fn() -> String| {
            if v > worst.0 {
                worst = (v, Some(label()));
            }
        };
        for r in &self.rows {
            let v = r.expr.eval(x);
            let viol = match r.sense {
                Sense::Le => v,
                Sense::Eq => v.abs(),
            };
            bump(viol, &|| r.tag.to_string());
        }
        for s in &self.socs {
            let norm = s.tail.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
            bump(norm - s.head.eval(x), &|| s.tag.to_string());
        }
        for (k, v) in self.vars.iter().enumerate() {
            bump(v.lower - x[k], &|| format!("lower bound of {}", v.name));
            bump(x[k] - v.upper, &|| format!("upper bound of {}", v.name));
        }
        worst
    }

    /// Writes the program in a line-oriented LP-style text format.
    pub fn write_lp(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        let fmt_expr = |e: &LinExpr| -> String {
            let mut s = String::new();
            for &(v, c) in &e.terms {
                s.push_str(&format!(" {c:+} {}", self.vars[v].name));
            }
            if e.constant != 0.0 || s.is_empty() {
                s.push_str(&format!(" {:+}", e.constant));
            }
            s
        };
        writeln!(out, "\\ variables={} rows={} cones={}", self.vars.len(), self.rows.len(), self.socs.len())?;
        writeln!(out, "minimize")?;
        writeln!(out, " obj:{}", fmt_expr(&self.objective))?;
        writeln!(out, "subject to")?;
        for r in &self.rows {
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            writeln!(out, " {}:{} {op} 0", r.tag, fmt_expr(&r.expr))?;
        }
        for s in &self.socs {
            let tail: Vec<String> = s.tail.iter().map(|e| format!("({})", fmt_expr(e).trim())).collect();
            writeln!(out, " {}: norm2[{}] <= {}", s.tag, tail.join(", "), fmt_expr(&s.head).trim())?;
        }
        writeln!(out, "bounds")?;
        for v in &self.vars {
            writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper)?;
        }
        writeln!(out, "end")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective reported by the backend.
    pub objective: f64,
    pub iterations: u32,
    pub solve_time: f64,
    /// Labels of the rows implicated in an infeasibility: constraint rows
    /// before variable bounds, larger dual weight first.
    pub conflict: Vec<String>,
    pub backend_status: String,
}

pub trait ConicSolver {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClarabelBackend {
    pub max_iter: u32,
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub verbose: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self { max_iter: 200, tol_gap: 1e-8, tol_feas: 1e-8, verbose: false }
    }
}

enum ConeRef {
    Row(usize),
    Lower(usize),
    Upper(usize),
    Soc(usize),
}

impl ConicSolver for ClarabelBackend {
    fn solve(&self, program: &ConicProgram) -> Result<ConicSolution> {
        program.validate()?;
        let start = Instant::now();
        let n = program.n_vars();

        let mut ii = Vec::new();
        let mut jj = Vec::new();
        let mut vv = Vec::new();
        let mut b = Vec::new();
        let mut origin = Vec::new();
        let mut m = 0usize;

        let push_row = |expr: &LinExpr, sign: f64, scale: f64, ii: &mut Vec<usize>, jj: &mut Vec<usize>, vv: &mut Vec<f64>, b: &mut Vec<f64>, m: &mut usize| {
            for &(v, c) in &expr.terms {
                ii.push(*m);
                jj.push(v);
                vv.push(sign * c * scale);
            }
            b.push(-sign * expr.constant * scale);
            *m += 1;
        };
        let row_scale = |e: &LinExpr| {
            let s = e.max_abs_coeff();
            if s > 0.0 { 1.0 / s } else { 1.0 }
        };

        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        // equalities
        let mut n_eq = 0;
        for (k, r) in program.rows.iter().enumerate() {
            if r.sense == Sense::Eq {
                push_row(&r.expr, 1.0, row_scale(&r.expr), &mut ii, &mut jj, &mut vv, &mut b, &mut m);
                origin.push(ConeRef::Row(k));
                n_eq += 1;
            }
        }
        if n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(n_eq));
        }
        // inequalities and bounds
        let mut n_le = 0;
        for (k, r) in program.rows.iter().enumerate() {
            if r.sense == Sense::Le {
                push_row(&r.expr, 1.0, row_scale(&r.expr), &mut ii, &mut jj, &mut vv, &mut b, &mut m);
                origin.push(ConeRef::Row(k));
                n_le += 1;
            }
        }
        for (k, v) in program.vars.iter().enumerate() {
            if v.lower.is_finite() {
                let mut e = LinExpr::term(k, -1.0);
                e.constant = v.lower;
                let s = if v.lower.abs() > 1.0 { 1.0 / v.lower.abs() } else { 1.0 };
                push_row(&e, 1.0, s, &mut ii, &mut jj, &mut vv, &mut b, &mut m);
                origin.push(ConeRef::Lower(k));
                n_le += 1;
            }
            if v.upper.is_finite() {
                let mut e = LinExpr::term(k, 1.0);
                e.constant = -v.upper;
                let s = if v.upper.abs() > 1.0 { 1.0 / v.upper.abs() } else { 1.0 };
                push_row(&e, 1.0, s, &mut ii, &mut jj, &mut vv, &mut b, &mut m);
                origin.push(ConeRef::Upper(k));
                n_le += 1;
            }
        }
        if n_le > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_le));
        }
        for (k, s) in program.socs.iter().enumerate() {
            let scale = {
                let mx = s.tail.iter().fold(s.head.max_abs_coeff(), |a, e| a.max(e.max_abs_coeff()));
                if mx > 0.0 { 1.0 / mx } else { 1.0 }
            };
            // slack s = b - A x must equal (head, tail...)
            push_row(&s.head, -1.0, scale, &mut ii, &mut jj, &mut vv, &mut b, &mut m);
            origin.push(ConeRef::Soc(k));
            for e in &s.tail {
                push_row(e, -1.0, scale, &mut ii, &mut jj, &mut vv, &mut b, &mut m);
                origin.push(ConeRef::Soc(k));
            }
            cones.push(SupportedConeT::SecondOrderConeT(1 + s.tail.len()));
        }

        let a = CscMatrix::new_from_triplets(m, n, ii, jj, vv);
        let p = CscMatrix::<f64>::zeros((n, n));
        let mut q = vec![0.0; n];
        for &(v, c) in &program.objective.terms {
            q[v] += c;
        }

        let settings = DefaultSettingsBuilder::default()
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol_gap)
            .tol_gap_rel(self.tol_gap)
            .tol_feas(self.tol_feas)
            .verbose(self.verbose)
            .build()
            .map_err(|e| Error::Solver { status: "setup".into(), message: format!("{e:?}") })?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver { status: "setup".into(), message: format!("{e:?}") })?;
        solver.solve();
        let sol = &solver.solution;

        let status = match sol.status {
            ClarabelStatus::Solved | ClarabelStatus::AlmostSolved => SolveStatus::Optimal,
            ClarabelStatus::PrimalInfeasible | ClarabelStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            ClarabelStatus::DualInfeasible | ClarabelStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalFailure,
        };

        let label = |r: &ConeRef| -> String {
            match *r {
                ConeRef::Row(k) => program.rows[k].tag.to_string(),
                ConeRef::Lower(k) => format!("lower bound of {}", program.vars[k].name),
                ConeRef::Upper(k) => format!("upper bound of {}", program.vars[k].name),
                ConeRef::Soc(k) => program.socs[k].tag.to_string(),
            }
        };
        let conflict = match status {
            SolveStatus::Infeasible => {
                // The dual certificate is supported on the rows in conflict.
                let zmax = sol.z.iter().fold(0.0f64, |a, z| a.max(z.abs()));
                let mut idx: Vec<usize> = (0..sol.z.len()).filter(|&i| sol.z[i].abs() > 1e-6 * zmax).collect();
                // named rows first, then variable bounds, each by dual magnitude
                let is_bound = |i: usize| matches!(origin[i], ConeRef::Lower(_) | ConeRef::Upper(_));
                idx.sort_by(|&i, &j| is_bound(i).cmp(&is_bound(j)).then(sol.z[j].abs().total_cmp(&sol.z[i].abs())));
                let mut out: Vec<String> = Vec::new();
                for i in idx {
                    let l = label(&origin[i]);
                    if !out.contains(&l) {
                        out.push(l);
                    }
                    if out.len() >= 20 {
                        break;
                    }
                }
                out
            }
            SolveStatus::NumericalFailure => {
                let (v, l) = program.max_violation(&sol.x);
                l.map(|l| vec![format!("{l} (violation {v:.3e})")]).unwrap_or_default()
            }
            _ => Vec::new(),
        };

        Ok(ConicSolution {
            status,
            objective: sol.obj_val + program.objective.constant,
            x: sol.x.clone(),
            iterations: sol.iterations,
            solve_time: start.elapsed().as_secs_f64(),
            conflict,
            backend_status: format!("{:?}", sol.status),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoke_min_x_above_three() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        p.objective = LinExpr::term(x, 1.0);
        let mut e = LinExpr::term(x, -1.0);
        e.constant = 3.0;
        p.add_le(e, Tag::new("lb", 0, 0, 0));
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-7);
        assert!((s.objective - p.objective.eval(&s.x)).abs() < 1e-6 * (1.0 + s.objective.abs()));
    }

    #[test]
    fn second_order_cone() {
        // min -x - y  s.t. ‖(x, y)‖ ≤ 2  →  x = y = √2
        let mut p = ConicProgram::new();
        let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
        let y = p.add_var("y", f64::NEG_INFINITY, f64::INFINITY);
        let mut obj = LinExpr::term(x, -1.0);
        obj.add_term(y, -1.0);
        p.objective = obj;
        p.add_soc(LinExpr::constant(2.0), vec![LinExpr::term(x, 1.0), LinExpr::term(y, 1.0)], Tag::new("cap", 0, 0, 0));
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 2f64.sqrt()).abs() < 1e-6);
        assert!((s.x[1] - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn infeasible_rows_are_named() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", 0.0, 1.0);
        p.objective = LinExpr::term(x, 1.0);
        let mut e = LinExpr::term(x, -1.0);
        e.constant = 2.0; // x ≥ 2
        p.add_le(e, Tag::new("needs_two", 0, 0, 0));
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.conflict.iter().any(|c| c.starts_with("needs_two")));
        assert!(s.conflict.iter().any(|c| c.contains("upper bound of x")));
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", f64::NEG_INFINITY, 0.0);
        p.objective = LinExpr::term(x, 1.0);
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn validation_rejects_unknown_variables() {
        let mut p = ConicProgram::new();
        p.add_var("x", 0.0, 1.0);
        p.add_le(LinExpr::term(3, 1.0), Tag::new("bad", 0, 0, 0));
        assert!(p.validate().is_err());
    }

    #[test]
    fn lp_text_dump() {
        let mut p = ConicProgram::new();
        let x = p.add_var("x", 0.0, 1.0);
        p.objective = LinExpr::term(x, 2.0);
        p.add_le(LinExpr::term(x, 1.0), Tag::new("row", 1, 2, 3));
        let mut buf = Vec::new();
        p.write_lp(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("row[t=1,2,3]: +1 x <= 0"));
        assert!(text.contains("0 <= x <= 1"));
    }
}
