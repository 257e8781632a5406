//! Uncertain security constraints `Σ_d c_d(y) ξ_d ≤ β(y)` and their
//! deterministic counterparts over the benchmark uncertainty sets.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::conic::{ConicProgram, LinExpr, Sense, Tag};
use crate::distflow::FlowSensitivity;
use crate::error::{Error, Result};
use crate::netdata::Case;
use crate::scheduler::DecisionLayout;
use crate::svc::PolyhedronSet;
use crate::thermal;
use crate::usets::{BoxSet, HullSet};

/// Largest normal quantile used by the Bonferroni counterpart.
pub const Z_CLAMP: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    VoltageMax,
    VoltageMin,
    ActiveFlowPos,
    ActiveFlowNeg,
    ReactiveFlowPos,
    ReactiveFlowNeg,
}

impl ConstraintKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ConstraintKind::VoltageMax => "v_max",
            ConstraintKind::VoltageMin => "v_min",
            ConstraintKind::ActiveFlowPos => "p_flow_pos",
            ConstraintKind::ActiveFlowNeg => "p_flow_neg",
            ConstraintKind::ReactiveFlowPos => "q_flow_pos",
            ConstraintKind::ReactiveFlowNeg => "q_flow_neg",
        }
    }
}

/// `Σ_d c[d](y) · ξ_d ≤ beta(y)`, one member of the joint constraint at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainLinearConstraint {
    pub m: usize,
    pub t: usize,
    pub kind: ConstraintKind,
    /// Bus for voltage rows, branch for flow rows.
    pub element: usize,
    /// `c = Hᵀy`, one affine expression per uncertainty dimension.
    pub c: Vec<LinExpr>,
    pub beta: LinExpr,
}

impl UncertainLinearConstraint {
    pub fn is_certain(&self) -> bool {
        self.c.iter().all(|e| e.terms.is_empty() && e.constant == 0.0)
    }

    /// `Σ c_d ξ_d − β` at decision `x`.
    pub fn residual(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.c.iter().zip(xi).map(|(c, v)| c.eval(x) * v).sum::<f64>() - self.beta.eval(x)
    }

    pub fn tag(&self) -> Tag {
        Tag::new(self.kind.tag(), self.t, self.element, self.m)
    }
}

/// Affine nodal injections at timestep `t` with ξ = 0, plus the per-DRG
/// coefficient expressions `Ḡ_{d,t} λ_{d,t}` that multiply ξ_d.
pub struct Injections {
    pub p: Vec<LinExpr>,
    pub q: Vec<LinExpr>,
    /// `drg[d] = Ḡ_{d,t} λ_{d,t}`.
    pub drg: Vec<LinExpr>,
}

pub fn injections(case: &Case, layout: &DecisionLayout, t: usize) -> Injections {
    let net = &case.network;
    let ts = &case.series;
    let n = net.n_buses();
    let mut p: Vec<LinExpr> = (0..n).map(|k| LinExpr::constant(-ts.base_p[k][t])).collect();
    let mut q: Vec<LinExpr> = (0..n).map(|k| LinExpr::constant(-ts.base_q[k][t])).collect();
    for (i, b) in net.buildings.iter().enumerate() {
        p[b.bus].add_term(layout.p_hvac[i][t], -1.0);
        q[b.bus].add_term(layout.p_hvac[i][t], -thermal::reactive_ratio(b));
    }
    let mut drg = Vec::with_capacity(net.n_drg());
    for (d, unit) in net.drg.iter().enumerate() {
        let e = LinExpr::term(layout.lambda[d][t], ts.drg_nominal[d][t]);
        p[unit.bus].add_expr(&e, 1.0);
        drg.push(e);
    }
    Injections { p, q, drg }
}

fn combine(row: &[f64], inj: &[LinExpr]) -> LinExpr {
    let mut e = LinExpr::default();
    for (k, &s) in row.iter().enumerate() {
        if s != 0.0 {
            e.add_expr(&inj[k], s);
        }
    }
    e.compact();
    e
}

/// The `2·|buses| + 4·|branches|` members of the joint security constraint
/// at timestep `t`, in the order voltage max/min, P ±, Q ±.
pub fn extract_uncertain_constraints(
    case: &Case,
    sens: &FlowSensitivity,
    layout: &DecisionLayout,
    t: usize,
) -> Result<Vec<UncertainLinearConstraint>> {
    let net = &case.network;
    for unit in &net.drg {
        if net.buses[unit.bus].parent.is_none() {
            return Err(Error::InvalidInput(format!("DRG {} sits at the slack bus", unit.name)));
        }
    }
    let inj = injections(case, layout, t);
    let drg_bus: Vec<usize> = net.drg.iter().map(|u| u.bus).collect();
    let uncertain = |row: &[f64]| -> Vec<LinExpr> {
        drg_bus.iter().zip(&inj.drg).map(|(&bus, e)| e.scaled(row[bus])).collect()
    };
    let zero = || vec![LinExpr::default(); drg_bus.len()];

    let mut out = Vec::with_capacity(2 * net.n_buses() + 4 * sens.n_branches());
    let mut push = |kind, element, c: Vec<LinExpr>, beta: LinExpr| {
        let m = out.len();
        out.push(UncertainLinearConstraint { m, t, kind, element, c, beta });
    };

    // U_j = u0 + Σ u_p p + Σ u_q q
    let mut voltages = Vec::with_capacity(net.n_buses());
    for j in 0..net.n_buses() {
        let mut u = combine(&sens.u_p[j], &inj.p);
        u.add_expr(&combine(&sens.u_q[j], &inj.q), 1.0);
        u.constant += sens.u0;
        u.compact();
        voltages.push(u);
    }
    for (j, u) in voltages.iter().enumerate() {
        // U_j ≤ v_max  ⇔  Σ c ξ ≤ v_max − U_j(ξ=0)
        let mut beta = u.scaled(-1.0);
        beta.constant += net.buses[j].v_max_sq;
        push(ConstraintKind::VoltageMax, j, uncertain(&sens.u_p[j]), beta);
    }
    for (j, u) in voltages.iter().enumerate() {
        let mut beta = u.clone();
        beta.constant -= net.buses[j].v_min_sq;
        let c = uncertain(&sens.u_p[j]).into_iter().map(|e| e.scaled(-1.0)).collect();
        push(ConstraintKind::VoltageMin, j, c, beta);
    }
    for sign in [1.0, -1.0] {
        let kind = if sign > 0.0 { ConstraintKind::ActiveFlowPos } else { ConstraintKind::ActiveFlowNeg };
        for b in 0..sens.n_branches() {
            // ±P_b ≤ P_aux,b
            let flow = combine(&sens.a_p[b], &inj.p);
            let mut beta = LinExpr::term(layout.p_aux[b][t], 1.0);
            beta.add_expr(&flow, -sign);
            let c = uncertain(&sens.a_p[b]).into_iter().map(|e| e.scaled(sign)).collect();
            push(kind, b, c, beta);
        }
    }
    for sign in [1.0, -1.0] {
        let kind = if sign > 0.0 { ConstraintKind::ReactiveFlowPos } else { ConstraintKind::ReactiveFlowNeg };
        for b in 0..sens.n_branches() {
            let flow = combine(&sens.a_p[b], &inj.q);
            let mut beta = LinExpr::term(layout.q_aux[b][t], 1.0);
            beta.add_expr(&flow, -sign);
            push(kind, b, zero(), beta);
        }
    }
    for con in &mut out {
        con.c.iter_mut().for_each(|e| e.compact());
        con.beta.compact();
    }
    Ok(out)
}

/// Variable reference inside a counterpart block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRef {
    Decision(usize),
    Aux(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockExpr {
    pub terms: Vec<(VarRef, f64)>,
    pub constant: f64,
}

impl BlockExpr {
    fn from_decision(e: &LinExpr, scale: f64) -> Self {
        Self {
            terms: e.terms.iter().map(|&(v, c)| (VarRef::Decision(v), c * scale)).collect(),
            constant: e.constant * scale,
        }
    }

    fn add(&mut self, v: VarRef, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    fn add_decision(&mut self, e: &LinExpr, scale: f64) {
        for &(v, c) in &e.terms {
            self.add(VarRef::Decision(v), c * scale);
        }
        self.constant += e.constant * scale;
    }

    fn resolve(&self, offset: usize) -> LinExpr {
        let mut e = LinExpr::constant(self.constant);
        for &(v, c) in &self.terms {
            let idx = match v {
                VarRef::Decision(i) => i,
                VarRef::Aux(i) => offset + i,
            };
            e.add_term(idx, c);
        }
        e.compact();
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow {
    pub expr: BlockExpr,
    pub sense: Sense,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSoc {
    pub head: BlockExpr,
    pub tail: Vec<BlockExpr>,
    pub tag: Tag,
}

/// Auxiliary variables and rows that replace one uncertain constraint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CounterpartBlock {
    /// `(name, lower, upper)` of each auxiliary variable.
    pub aux: Vec<(String, f64, f64)>,
    pub rows: Vec<BlockRow>,
    pub socs: Vec<BlockSoc>,
}

impl CounterpartBlock {
    fn add_aux(&mut self, name: String, lower: f64, upper: f64) -> VarRef {
        self.aux.push((name, lower, upper));
        VarRef::Aux(self.aux.len() - 1)
    }

    fn add_le(&mut self, expr: BlockExpr, tag: Tag) {
        self.rows.push(BlockRow { expr, sense: Sense::Le, tag });
    }

    fn add_eq(&mut self, expr: BlockExpr, tag: Tag) {
        self.rows.push(BlockRow { expr, sense: Sense::Eq, tag });
    }

    pub fn n_le(&self) -> usize {
        self.rows.iter().filter(|r| r.sense == Sense::Le).count()
    }

    pub fn n_eq(&self) -> usize {
        self.rows.iter().filter(|r| r.sense == Sense::Eq).count()
    }

    /// Registers the auxiliary variables in `program` and appends the rows.
    /// Returns the index of the first auxiliary variable.
    pub fn append_to(&self, program: &mut ConicProgram) -> usize {
        let offset = program.n_vars();
        for (name, lo, hi) in &self.aux {
            program.add_var(name.clone(), *lo, *hi);
        }
        for r in &self.rows {
            let e = r.expr.resolve(offset);
            match r.sense {
                Sense::Le => program.add_le(e, r.tag),
                Sense::Eq => program.add_eq(e, r.tag),
            }
        }
        for s in &self.socs {
            program.add_soc(s.head.resolve(offset), s.tail.iter().map(|e| e.resolve(offset)).collect(), s.tag);
        }
        offset
    }
}

fn certain_block(con: &UncertainLinearConstraint) -> CounterpartBlock {
    let mut b = CounterpartBlock::default();
    b.add_le(BlockExpr::from_decision(&con.beta, -1.0), con.tag());
    b
}

fn check_dim(con: &UncertainLinearConstraint, dim: usize) -> Result<()> {
    if con.c.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: con.c.len() });
    }
    Ok(())
}

/// Dual of the lifted support LP over the SVC polyhedron:
///
/// `Σ_n (μ_n − ρ_n)ᵀ W ξ_n + π γ ≤ β`, `Σ_n W (ρ_n − μ_n) + c = 0`,
/// `ρ_n + μ_n = π α_n 1`, `ρ, μ, π ≥ 0`.
pub fn svc_counterpart(con: &UncertainLinearConstraint, set: &PolyhedronSet) -> Result<CounterpartBlock> {
    let d = set.dim();
    check_dim(con, d)?;
    if con.is_certain() {
        return Ok(certain_block(con));
    }
    let (t, m) = (con.t, con.m);
    let mut b = CounterpartBlock::default();
    let pi = b.add_aux(format!("pi_{t}_{m}"), 0.0, f64::INFINITY);
    let n_sv = set.n_sv();
    let mut rho = Vec::with_capacity(n_sv);
    let mut mu = Vec::with_capacity(n_sv);
    for n in 0..n_sv {
        rho.push((0..d).map(|k| b.add_aux(format!("rho_{t}_{m}_{n}_{k}"), 0.0, f64::INFINITY)).collect::<Vec<_>>());
        mu.push((0..d).map(|k| b.add_aux(format!("mu_{t}_{m}_{n}_{k}"), 0.0, f64::INFINITY)).collect::<Vec<_>>());
    }

    let mut value = BlockExpr::default();
    for n in 0..n_sv {
        for k in 0..d {
            let wx = set.whitened[n][k];
            value.add(mu[n][k], wx);
            value.add(rho[n][k], -wx);
        }
    }
    value.add(pi, set.gamma);
    value.add_decision(&con.beta, -1.0);
    b.add_le(value, Tag::new("svc_value", t, m, 0));

    for row in 0..d {
        let mut e = BlockExpr::default();
        for n in 0..n_sv {
            for k in 0..d {
                let w = set.w[row][k];
                e.add(rho[n][k], w);
                e.add(mu[n][k], -w);
            }
        }
        e.add_decision(&con.c[row], 1.0);
        b.add_eq(e, Tag::new("svc_stationarity", t, m, row));
    }

    for n in 0..n_sv {
        for k in 0..d {
            let mut e = BlockExpr::default();
            e.add(rho[n][k], 1.0);
            e.add(mu[n][k], 1.0);
            e.add(pi, -set.alpha[n]);
            b.add_eq(e, Tag::new("svc_split", t, m, n));
        }
    }
    Ok(b)
}

/// `Σ_d (hi_d c⁺_d − lo_d c⁻_d) ≤ β` with `c = c⁺ − c⁻`, `c± ≥ 0`.
pub fn box_counterpart(con: &UncertainLinearConstraint, set: &BoxSet) -> Result<CounterpartBlock> {
    check_dim(con, set.lo.len())?;
    if con.is_certain() {
        return Ok(certain_block(con));
    }
    let (t, m) = (con.t, con.m);
    let mut b = CounterpartBlock::default();
    let mut value = BlockExpr::default();
    for k in 0..set.lo.len() {
        let plus = b.add_aux(format!("cp_{t}_{m}_{k}"), 0.0, f64::INFINITY);
        let minus = b.add_aux(format!("cm_{t}_{m}_{k}"), 0.0, f64::INFINITY);
        let mut split = BlockExpr::from_decision(&con.c[k], 1.0);
        split.add(plus, -1.0);
        split.add(minus, 1.0);
        b.add_eq(split, Tag::new("box_split", t, m, k));
        value.add(plus, set.hi[k]);
        value.add(minus, -set.lo[k]);
    }
    value.add_decision(&con.beta, -1.0);
    b.add_le(value, Tag::new("box_value", t, m, 0));
    Ok(b)
}

/// One row `cᵀξ_v ≤ β` per stored vertex.
pub fn hull_counterpart(con: &UncertainLinearConstraint, set: &HullSet) -> Result<CounterpartBlock> {
    if set.vertices.is_empty() {
        return Err(Error::InvalidInput("hull set has no vertices".into()));
    }
    check_dim(con, set.dim())?;
    if con.is_certain() {
        return Ok(certain_block(con));
    }
    let mut b = CounterpartBlock::default();
    for (v, xi) in set.vertices.iter().enumerate() {
        let mut e = BlockExpr::from_decision(&con.beta, -1.0);
        for (k, c) in con.c.iter().enumerate() {
            e.add_decision(c, xi[k]);
        }
        b.add_le(e, Tag::new("hull_vertex", con.t, con.m, v));
    }
    Ok(b)
}

/// Moments of ξ at one timestep for the Bonferroni counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Symmetric square root of the covariance.
    pub cov_sqrt: Vec<Vec<f64>>,
}

impl Moments {
    pub fn new(mean: Vec<f64>, cov: &[Vec<f64>]) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: cov.len() });
        }
        let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
        let eig = SymmetricEigen::new(m);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if eig.eigenvalues.iter().any(|&v| v < -1e-9 * scale.max(1e-300)) {
            return Err(Error::InvalidInput("covariance is not positive semidefinite".into()));
        }
        let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
        let s = &eig.eigenvectors * root * eig.eigenvectors.transpose();
        let cov_sqrt = (0..d).map(|i| (0..d).map(|j| 0.5 * (s[(i, j)] + s[(j, i)])).collect()).collect();
        Ok(Self { mean, cov_sqrt })
    }
}

/// Standard normal quantile `z_{1−risk}`, clamped to [`Z_CLAMP`]. The flag
/// reports whether the clamp was applied.
pub fn normal_quantile(risk: f64) -> (f64, bool) {
    let n = Normal::standard();
    let z = n.inverse_cdf(1.0 - risk);
    if !z.is_finite() || z > Z_CLAMP {
        (Z_CLAMP, true)
    } else {
        (z, false)
    }
}

/// Gaussian-moment individual chance constraint with risk `risk`:
/// `m̂ᵀc + z ‖Σ̂^{1/2} c‖₂ ≤ β`.
pub fn bonferroni_counterpart(con: &UncertainLinearConstraint, moments: &Moments, z: f64) -> Result<CounterpartBlock> {
    let d = moments.mean.len();
    check_dim(con, d)?;
    if con.is_certain() {
        return Ok(certain_block(con));
    }
    let mut head = BlockExpr::from_decision(&con.beta, 1.0);
    for k in 0..d {
        head.add_decision(&con.c[k], -moments.mean[k]);
    }
    let mut tail = Vec::with_capacity(d);
    for row in &moments.cov_sqrt {
        let mut e = BlockExpr::default();
        for k in 0..d {
            e.add_decision(&con.c[k], z * row[k]);
        }
        tail.push(e);
    }
    let mut b = CounterpartBlock::default();
    if tail.iter().all(|e| e.terms.iter().all(|t| t.1 == 0.0) && e.constant == 0.0) {
        head.terms.iter_mut().for_each(|t| t.1 = -t.1);
        head.constant = -head.constant;
        b.add_le(head, con.tag());
        return Ok(b);
    }
    b.socs.push(BlockSoc { head, tail, tag: Tag::new("bonferroni", con.t, con.element, con.m) });
    Ok(b)
}

/// Ratio `k > 0` with `a = k·b` termwise, if any.
pub fn positive_ratio(a: &[LinExpr], b: &[LinExpr]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut ratio: Option<f64> = None;
    for (x, y) in a.iter().zip(b) {
        if x.terms.len() != y.terms.len() || (x.constant == 0.0) != (y.constant == 0.0) {
            return None;
        }
        let pairs = x.terms.iter().map(|t| (t.0, t.1)).chain(std::iter::once((usize::MAX, x.constant)));
        let others = y.terms.iter().map(|t| (t.0, t.1)).chain(std::iter::once((usize::MAX, y.constant)));
        for ((va, ca), (vb, cb)) in pairs.zip(others) {
            if va != vb {
                return None;
            }
            if ca == 0.0 && cb == 0.0 {
                continue;
            }
            if cb == 0.0 || ca == 0.0 {
                return None;
            }
            let r = ca / cb;
            if r <= 0.0 {
                return None;
            }
            match ratio {
                None => ratio = Some(r),
                Some(k) if ((r - k) / k).abs() <= 1e-12 => {}
                Some(_) => return None,
            }
        }
    }
    ratio
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ClarabelBackend, ConicSolver, SolveStatus};
    use crate::distflow::build_sensitivity;
    use crate::netdata::{bundled_ieee13, Bus, Building, DrgUnit, NetworkModel, TimeSeriesInputs};
    use crate::svc::{export_polyhedron, train, train_with_kernel, KernelSpec, SmoOptions};
    use crate::netdata::SampleMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_case() -> Case {
        let network = NetworkModel {
            name: "line".into(),
            base_mva: 1.0,
            slack_voltage_sq: 1.0,
            buses: vec![
                Bus { id: 0, parent: None, r: 0.0, x: 0.0, v_min_sq: 0.9, v_max_sq: 1.1, s_max: 0.0 },
                Bus { id: 1, parent: Some(0), r: 0.01, x: 0.02, v_min_sq: 0.9, v_max_sq: 1.1, s_max: 2.0 },
            ],
            buildings: vec![Building {
                bus: 1,
                heat_capacity: 1.0,
                thermal_resistance: 20.0,
                cop: 3.6,
                power_factor: 0.98,
                p_max: 0.5,
                theta_lo: 24.0,
                theta_hi: 28.0,
                theta_init: None,
            }],
            drg: vec![DrgUnit { name: "pv".into(), bus: 1 }],
        };
        let series = TimeSeriesInputs {
            horizon: 1,
            dt: 1.0,
            theta_out: vec![30.0],
            heat_load: vec![vec![0.0]],
            base_p: vec![vec![0.0], vec![0.2]],
            base_q: vec![vec![0.0], vec![0.05]],
            drg_nominal: vec![vec![1.5]],
            price_buy: vec![50.0],
            price_sell: vec![20.0],
        };
        Case { network, series }
    }

    fn layout_for(case: &Case) -> (ConicProgram, DecisionLayout) {
        let mut p = ConicProgram::new();
        let l = DecisionLayout::declare(&mut p, case);
        (p, l)
    }

    #[test]
    fn two_bus_flow_coefficient() {
        let case = line_case();
        let sens = build_sensitivity(&case.network);
        let (_, layout) = layout_for(&case);
        let cons = extract_uncertain_constraints(&case, &sens, &layout, 0).unwrap();
        let pos = cons.iter().find(|c| c.kind == ConstraintKind::ActiveFlowPos).unwrap();
        // with λ = 1 the coefficient of ξ is −Ḡ
        let mut x = vec![0.0; layout.n_decision];
        x[layout.lambda[0][0]] = 1.0;
        assert!((pos.c[0].eval(&x) + 1.5).abs() < 1e-15);
    }

    #[test]
    fn member_count_of_bundled_case() {
        let case = bundled_ieee13();
        let sens = build_sensitivity(&case.network);
        let (_, layout) = layout_for(&case);
        for t in [0, 11, 23] {
            assert_eq!(extract_uncertain_constraints(&case, &sens, &layout, t).unwrap().len(), 74);
        }
    }

    #[test]
    fn zero_xi_gives_nominal_constraint() {
        let case = bundled_ieee13();
        let sens = build_sensitivity(&case.network);
        let (_, layout) = layout_for(&case);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..layout.n_decision).map(|_| rng.random_range(0.0..1.0)).collect();
        for con in extract_uncertain_constraints(&case, &sens, &layout, 9).unwrap() {
            assert_eq!(con.residual(&x, &[0.0, 0.0]), -con.beta.eval(&x));
        }
    }

    #[test]
    fn drg_at_slack_is_rejected() {
        let mut case = line_case();
        case.network.drg[0].bus = 0;
        let sens = build_sensitivity(&case.network);
        let (_, layout) = layout_for(&case);
        assert!(extract_uncertain_constraints(&case, &sens, &layout, 0).is_err());
    }

    /// Minimizes `Σ(μ−ρ)ᵀWξ_n + πγ` subject to the remaining dual rows with
    /// `c` fixed, giving the support value through the dual.
    fn dual_value(set: &PolyhedronSet, c: &[f64]) -> f64 {
        let mut p = ConicProgram::new();
        let beta = p.add_var("beta", f64::NEG_INFINITY, f64::INFINITY);
        let con = UncertainLinearConstraint {
            m: 0,
            t: 0,
            kind: ConstraintKind::ActiveFlowPos,
            element: 0,
            c: c.iter().map(|&v| LinExpr::constant(v)).collect(),
            beta: LinExpr::term(beta, 1.0),
        };
        svc_counterpart(&con, set).unwrap().append_to(&mut p);
        p.objective = LinExpr::term(beta, 1.0);
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        s.x[beta]
    }

    #[test]
    fn square_support_through_dual() {
        let m = train_with_kernel(
            &SampleMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap(),
            0.25,
            KernelSpec::identity(vec![2.0, 2.0]),
            SmoOptions::default(),
        )
        .unwrap();
        let set = export_polyhedron(&m);
        let oracle = set.support(&[1.0, 0.0], &ClarabelBackend::default()).unwrap().0;
        assert!(oracle >= 1.0 - 1e-7);
        assert!((dual_value(&set, &[1.0, 0.0]) - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()));
    }

    #[test]
    fn zero_h_reduces_to_nominal() {
        let m = train(&SampleMatrix::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0], vec![0.1, 0.3]]).unwrap(), 0.4).unwrap();
        let con = UncertainLinearConstraint {
            m: 0,
            t: 0,
            kind: ConstraintKind::VoltageMax,
            element: 0,
            c: vec![LinExpr::default(); 2],
            beta: LinExpr::term(0, 1.0),
        };
        let b = svc_counterpart(&con, &export_polyhedron(&m)).unwrap();
        assert!(b.aux.is_empty());
        assert_eq!(b.rows.len(), 1);
        assert_eq!(b.rows[0].expr.terms, vec![(VarRef::Decision(0), -1.0)]);
    }

    #[test]
    fn svc_block_shape() {
        let m = train(&SampleMatrix::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0], vec![0.1, 0.3], vec![0.3, 0.2]]).unwrap(), 0.3).unwrap();
        let set = export_polyhedron(&m);
        let con = UncertainLinearConstraint {
            m: 0,
            t: 0,
            kind: ConstraintKind::VoltageMax,
            element: 0,
            c: vec![LinExpr::term(0, 1.0), LinExpr::term(1, 2.0)],
            beta: LinExpr::constant(1.0),
        };
        let b = svc_counterpart(&con, &set).unwrap();
        assert_eq!(b.aux.len(), 1 + 2 * 2 * set.n_sv());
        assert_eq!(b.n_le(), 1);
        assert_eq!(b.n_eq(), 2 + 2 * set.n_sv());
        let wrong = UncertainLinearConstraint { c: vec![LinExpr::term(0, 1.0)], ..con };
        assert!(matches!(svc_counterpart(&wrong, &set), Err(Error::DimensionMismatch { .. })));
    }

    fn support_by_block(block: CounterpartBlock, c: &[f64]) -> f64 {
        // the block was built with β = variable 0; minimize it
        let mut p = ConicProgram::new();
        p.add_var("beta", f64::NEG_INFINITY, f64::INFINITY);
        let _ = c;
        block.append_to(&mut p);
        p.objective = LinExpr::term(0, 1.0);
        let s = ClarabelBackend::default().solve(&p).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        s.x[0]
    }

    fn fixed(c: &[f64]) -> UncertainLinearConstraint {
        UncertainLinearConstraint {
            m: 0,
            t: 0,
            kind: ConstraintKind::ActiveFlowPos,
            element: 0,
            c: c.iter().map(|&v| LinExpr::constant(v)).collect(),
            beta: LinExpr::term(0, 1.0),
        }
    }

    #[test]
    fn box_counterpart_matches_closed_form() {
        let set = BoxSet { lo: vec![0.0, -1.0], hi: vec![2.0, 3.0] };
        for c in [[1.0, 1.0], [-1.0, 2.0], [0.5, -0.25], [-3.0, -1.0]] {
            let v = support_by_block(box_counterpart(&fixed(&c), &set).unwrap(), &c);
            assert!((v - set.support(&c)).abs() < 1e-6);
        }
        let sym = BoxSet { lo: vec![-1.0; 2], hi: vec![1.0; 2] };
        assert!((sym.support(&[0.3, -0.7]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_box_is_point_constraint() {
        let set = BoxSet { lo: vec![0.2, -0.1], hi: vec![0.2, -0.1] };
        let v = support_by_block(box_counterpart(&fixed(&[2.0, 1.0]), &set).unwrap(), &[2.0, 1.0]);
        assert!((v - 0.3).abs() < 1e-7);
    }

    #[test]
    fn single_vertex_hull_is_one_row() {
        let set = HullSet { vertices: vec![vec![0.1, 0.2]] };
        let b = hull_counterpart(&fixed(&[1.0, 1.0]), &set).unwrap();
        assert_eq!(b.rows.len(), 1);
        assert!(b.aux.is_empty());
    }

    #[test]
    fn bonferroni_scalar_margin() {
        let (z, clamped) = normal_quantile(0.05);
        assert!(!clamped);
        assert!((z - 1.6448536).abs() < 1e-6);
        let mom = Moments::new(vec![0.0], &[vec![0.01]]).unwrap();
        let v = support_by_block(bonferroni_counterpart(&fixed(&[1.0]), &mom, z).unwrap(), &[1.0]);
        assert!((v - 0.1644854).abs() < 1e-6);
        let zero = Moments::new(vec![0.3], &[vec![0.0]]).unwrap();
        let b = bonferroni_counterpart(&fixed(&[2.0]), &zero, z).unwrap();
        assert!(b.socs.is_empty());
        assert!((support_by_block(b, &[2.0]) - 0.6).abs() < 1e-7);
    }

    #[test]
    fn bonferroni_risk_split_of_bundled_case() {
        let eps: f64 = 0.05 / 74.0;
        assert!(eps < 0.0015);
        assert!((eps - 0.000676).abs() < 5e-7);
        let (z, clamped) = normal_quantile(1e-30);
        assert!(clamped);
        assert_eq!(z, Z_CLAMP);
    }

    #[test]
    fn proportional_rows_are_detected() {
        let a = vec![LinExpr::term(3, 2.0), LinExpr::term(4, -1.0)];
        let b = vec![LinExpr::term(3, 1.0), LinExpr::term(4, -0.5)];
        assert_eq!(positive_ratio(&a, &b), Some(2.0));
        let neg = vec![LinExpr::term(3, -1.0), LinExpr::term(4, 0.5)];
        assert_eq!(positive_ratio(&a, &neg), None);
        let other = vec![LinExpr::term(3, 1.0), LinExpr::default()];
        assert_eq!(positive_ratio(&a, &other), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn hull_of_box_corners_equals_box(c in proptest::array::uniform2(-3.0..3.0f64)) {
            let bx = BoxSet { lo: vec![-0.5, 0.1], hi: vec![0.4, 0.9] };
            let hull = HullSet { vertices: vec![vec![-0.5, 0.1], vec![0.4, 0.1], vec![-0.5, 0.9], vec![0.4, 0.9]] };
            prop_assert!((hull.support(&c) - bx.support(&c)).abs() < 1e-9);
            let v = support_by_block(hull_counterpart(&fixed(&c), &hull).unwrap(), &c);
            prop_assert!((v - bx.support(&c)).abs() < 1e-6);
        }

        #[test]
        fn svc_dual_equals_lifted_primal(seed in 0u64..500, c in proptest::array::uniform2(-2.0..2.0f64)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..40).map(|_| {
                let a: f64 = rng.random_range(-0.5..0.5);
                vec![a, 0.4 * a + rng.random_range(-0.2..0.2)]
            }).collect();
            let set = export_polyhedron(&train(&SampleMatrix::from_rows(&rows).unwrap(), 0.15).unwrap());
            let oracle = set.support(&c, &ClarabelBackend::default()).unwrap().0;
            let dual = dual_value(&set, &c);
            prop_assert!((dual - oracle).abs() <= 1e-6 * oracle.abs().max(1.0), "dual {dual} oracle {oracle}");
        }
    }
}
