//! One-class support vector clustering with the weighted generalized
//! intersection kernel `K(a, b) = Σ l_d − ‖W(a − b)‖₁`.
//!
//! Under this kernel the learned region is a polyhedron in the original
//! space: `{ξ : Σ_{n∈SV} α_n ‖W(ξ − ξ_n)‖₁ ≤ γ}`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::conic::{ClarabelBackend, ConicProgram, ConicSolver, LinExpr, SolveStatus, Tag};
use crate::error::{Error, Result};
use crate::netdata::{SampleMatrix, SampleSet};

pub const DEFAULT_LAMBDA_REG: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// D×D whitening matrix, row-major rows.
    pub w: Vec<Vec<f64>>,
    /// Per-dimension sample range, measured in whitened coordinates.
    pub l: Vec<f64>,
    pub lambda_reg: f64,
}

impl KernelSpec {
    /// Whitening from the regularized sample covariance, `W = (Σ + λ·tr(Σ)/D·I)^{-1/2}`.
    pub fn fit(samples: &SampleMatrix) -> Self {
        Self::fit_with(samples, DEFAULT_LAMBDA_REG)
    }

    pub fn fit_with(samples: &SampleMatrix, lambda_reg: f64) -> Self {
        let d = samples.dim();
        let cov = samples.covariance();
        let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
        if !(trace > 0.0 && trace.is_finite()) {
            // every sample identical: no scale information
            return Self { w: identity(d), l: vec![1.0; d], lambda_reg };
        }
        let shift = lambda_reg * trace / d as f64;
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j] + if i == j { shift } else { 0.0 });
        let eig = SymmetricEigen::new(m);
        let floor = shift.max(f64::MIN_POSITIVE);
        let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.max(floor).sqrt()));
        let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
        let w: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| 0.5 * (w[(i, j)] + w[(j, i)])).collect()).collect();
        let mut spec = Self { w, l: Vec::new(), lambda_reg };
        // With l_d at least the whitened range every term l_d − |u_d − v_d| is
        // a triangle kernel, so K is positive semidefinite on the samples.
        let white: Vec<Vec<f64>> = samples.rows().map(|r| spec.whiten(r)).collect();
        spec.l = ranges(&white, d);
        spec
    }

    /// `W = I` with the given ranges.
    pub fn identity(l: Vec<f64>) -> Self {
        Self { w: identity(l.len()), l, lambda_reg: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        self.w.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `‖W(a − b)‖₁`
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.w
            .iter()
            .map(|row| row.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y)).sum::<f64>().abs())
            .sum()
    }

    fn inverse_w(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.w[i][j]);
        let inv = m
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("whitening matrix is singular".into()))?;
        Ok((0..d).map(|i| (0..d).map(|j| inv[(i, j)]).collect()).collect())
    }
}

fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn ranges(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[d]), hi.max(r[d])));
            // a constant dimension only shifts K by a constant; keep l_d > 0
            if hi > lo { hi - lo } else { 1.0 }
        })
        .collect()
}

pub fn kernel(a: &[f64], b: &[f64], spec: &KernelSpec) -> f64 {
    spec.l.iter().sum::<f64>() - spec.distance(a, b)
}

/// Smallest Gram-matrix eigenvalue relative to the Frobenius norm.
pub fn gram_min_eigenvalue(samples: &SampleMatrix, spec: &KernelSpec) -> f64 {
    let n = samples.n_rows();
    let g = DMatrix::from_fn(n, n, |i, j| kernel(samples.row(i), samples.row(j), spec));
    let norm = g.norm();
    if norm == 0.0 {
        return 0.0;
    }
    SymmetricEigen::new(g).eigenvalues.min() / norm
}

/// Stopping rule and iteration cap for the dual solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmoOptions {
    /// Relative KKT gap at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleClass {
    /// α = 0, inside the set.
    Interior,
    /// 0 < α < cap, on the boundary.
    Boundary,
    /// α at the cap, outside or on the boundary.
    Outlier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvcModel {
    pub alpha: Vec<f64>,
    pub sv: Vec<usize>,
    pub bsv: Vec<usize>,
    pub gamma: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub samples: Vec<Vec<f64>>,
    /// SMO iterations used.
    pub iterations: usize,
}

impl SvcModel {
    pub fn n_samples(&self) -> usize {
        self.alpha.len()
    }

    /// Upper bound on each α, `1 / (Nε)`.
    pub fn cap(&self) -> f64 {
        upper_cap(self.n_samples(), self.epsilon)
    }

    pub fn tol_alpha(&self) -> f64 {
        1e-6 * self.cap()
    }

    pub fn score(&self, xi: &[f64]) -> f64 {
        self.sv
            .iter()
            .map(|&n| self.alpha[n] * self.kernel.distance(xi, &self.samples[n]))
            .sum()
    }

    pub fn contains(&self, xi: &[f64], slack: f64) -> bool {
        self.score(xi) <= self.gamma + slack
    }

    pub fn classify(&self) -> Vec<SampleClass> {
        let cap = self.cap();
        let tol = self.tol_alpha();
        self.alpha
            .iter()
            .map(|&a| {
                if a <= tol {
                    SampleClass::Interior
                } else if a < cap - tol {
                    SampleClass::Boundary
                } else {
                    SampleClass::Outlier
                }
            })
            .collect()
    }

    /// Number of training samples with `score ≤ γ + slack`.
    pub fn covered(&self, slack: f64) -> usize {
        self.samples.iter().filter(|x| self.contains(x, slack)).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SvcModel = serde_json::from_str(text)?;
        if m.alpha.len() != m.samples.len() || m.samples.iter().any(|r| r.len() != m.kernel.dim()) {
            return Err(Error::InvalidInput("inconsistent SVC model dimensions".into()));
        }
        Ok(m)
    }
}

pub fn upper_cap(n: usize, epsilon: f64) -> f64 {
    1.0 / (n as f64 * epsilon)
}

/// Largest number of samples the cap allows at the upper bound, `⌊Nε⌋`.
pub fn max_outliers(n: usize, epsilon: f64) -> usize {
    (n as f64 * epsilon + 1e-9).floor() as usize
}

/// Smallest covered count guaranteed by the cap, `⌈(1−ε)N⌉`.
pub fn min_covered(n: usize, epsilon: f64) -> usize {
    n - max_outliers(n, epsilon).min(n)
}

pub fn train(samples: &SampleMatrix, epsilon: f64) -> Result<SvcModel> {
    train_with_kernel(samples, epsilon, KernelSpec::fit(samples), SmoOptions::default())
}

pub fn train_with_kernel(
    samples: &SampleMatrix,
    epsilon: f64,
    kernel: KernelSpec,
    opts: SmoOptions,
) -> Result<SvcModel> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if kernel.dim() != samples.dim() {
        return Err(Error::DimensionMismatch { expected: samples.dim(), found: kernel.dim() });
    }
    let n = samples.n_rows();
    let white: Vec<Vec<f64>> = samples.rows().map(|r| kernel.whiten(r)).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = white[i].iter().zip(&white[j]).map(|(a, b)| (a - b).abs()).sum();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let cap = upper_cap(n, epsilon);
    let (alpha, iterations) = solve_dual(&dist, n, cap, opts)?;

    let tol = 1e-6 * cap;
    let sv: Vec<usize> = (0..n).filter(|&k| alpha[k] > tol).collect();
    let bsv: Vec<usize> = sv.iter().copied().filter(|&k| alpha[k] < cap - tol).collect();
    let mut model = SvcModel {
        alpha,
        sv,
        bsv,
        gamma: 0.0,
        epsilon,
        kernel,
        samples: samples.rows().map(|r| r.to_vec()).collect(),
        iterations,
    };
    model.gamma = compute_gamma(&model);
    Ok(model)
}

/// Trains one model per timestep.
pub fn train_all(samples: &SampleSet, epsilon: f64) -> Result<Vec<SvcModel>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        samples.steps().par_iter().map(|m| train(m, epsilon)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        samples.steps().iter().map(|m| train(m, epsilon)).collect()
    }
}

/// Median boundary-SV score; when no α is strictly inside its bounds, the
/// largest interior score.
pub fn compute_gamma(model: &SvcModel) -> f64 {
    let mut scores: Vec<f64> = model.bsv.iter().map(|&k| model.score(&model.samples[k])).collect();
    if scores.is_empty() {
        let tol = model.tol_alpha();
        return (0..model.n_samples())
            .filter(|&k| model.alpha[k] <= tol)
            .map(|k| model.score(&model.samples[k]))
            .fold(0.0, f64::max);
    }
    scores.sort_by(f64::total_cmp);
    let m = scores.len();
    let med = if m % 2 == 1 { scores[m / 2] } else { 0.5 * (scores[m / 2 - 1] + scores[m / 2]) };
    med.max(0.0)
}

/// Maximizes `αᵀDα` over `{Σα = 1, 0 ≤ α ≤ cap}` by pairwise coordinate
/// steps, where D is the whitened L1 distance matrix. This is the same
/// problem as minimizing `αᵀKα` since `K = Σl·11ᵀ − D`.
///
/// Works on `g = −2Dα`, the gradient of the minimized objective `−αᵀDα`.
fn solve_dual(dist: &[f64], n: usize, cap: f64, opts: SmoOptions) -> Result<(Vec<f64>, usize)> {
    let mut alpha = vec![1.0 / n as f64; n];
    if n == 1 {
        return Ok((alpha, 0));
    }
    let full_gradient = |alpha: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| -2.0 * dist[k * n..(k + 1) * n].iter().zip(alpha).map(|(d, a)| d * a).sum::<f64>())
            .collect()
    };
    let mut g = full_gradient(&alpha);
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let stop = opts.tol * scale;

    let mut iter = 0;
    let mut refreshed = false;
    loop {
        let mut i = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for k in 0..n {
            if alpha[k] < cap && g[k] < g_min {
                g_min = g[k];
                i = k;
            }
            if alpha[k] > 0.0 && g[k] > g_max {
                g_max = g[k];
            }
        }
        if i == usize::MAX || g_max - g_min <= stop {
            if refreshed {
                break;
            }
            g = full_gradient(&alpha);
            refreshed = true;
            continue;
        }
        refreshed = false;
        if iter >= opts.max_iter {
            return Err(Error::Solver {
                status: "max-iterations".into(),
                message: format!("dual solver stopped after {iter} iterations with KKT gap {:.3e}", g_max - g_min),
            });
        }
        iter += 1;

        // second-order choice of the decreasing coordinate
        let row_i = &dist[i * n..(i + 1) * n];
        let mut j = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for k in 0..n {
            if alpha[k] > 0.0 && g[k] > g_min && k != i {
                let b = g[k] - g_min;
                let gain = if row_i[k] > 0.0 { b * b / row_i[k] } else { f64::INFINITY };
                if gain > best {
                    best = gain;
                    j = k;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        let b = g[j] - g[i];
        let room = (cap - alpha[i]).min(alpha[j]);
        let step = if row_i[j] > 0.0 { (b / (4.0 * row_i[j])).min(room) } else { room };
        if step <= 0.0 {
            break;
        }
        if step == cap - alpha[i] {
            alpha[i] = cap;
        } else {
            alpha[i] += step;
        }
        if step == alpha[j] {
            alpha[j] = 0.0;
        } else {
            alpha[j] -= step;
        }
        let row_j = &dist[j * n..(j + 1) * n];
        for k in 0..n {
            g[k] -= 2.0 * step * (row_i[k] - row_j[k]);
        }
    }
    Ok((alpha, iter))
}

/// The learned set `{ξ : Σ α_n ‖W(ξ − ξ_n)‖₁ ≤ γ}` restricted to support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedronSet {
    pub w: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    /// `W ξ_n` for each center.
    pub whitened: Vec<Vec<f64>>,
    pub gamma: f64,
}

pub fn export_polyhedron(model: &SvcModel) -> PolyhedronSet {
    let centers: Vec<Vec<f64>> = model.sv.iter().map(|&n| model.samples[n].clone()).collect();
    PolyhedronSet {
        w: model.kernel.w.clone(),
        alpha: model.sv.iter().map(|&n| model.alpha[n]).collect(),
        whitened: centers.iter().map(|c| model.kernel.whiten(c)).collect(),
        centers,
        gamma: model.gamma,
    }
}

impl PolyhedronSet {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn n_sv(&self) -> usize {
        self.alpha.len()
    }

    fn kernel(&self) -> KernelSpec {
        KernelSpec { w: self.w.clone(), l: vec![1.0; self.dim()], lambda_reg: 0.0 }
    }

    pub fn score(&self, xi: &[f64]) -> f64 {
        let u = self.kernel().whiten(xi);
        self.score_whitened(&u)
    }

    fn score_whitened(&self, u: &[f64]) -> f64 {
        self.whitened
            .iter()
            .zip(&self.alpha)
            .map(|(c, a)| a * c.iter().zip(u).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum()
    }

    pub fn contains(&self, xi: &[f64], slack: f64) -> bool {
        self.score(xi) <= self.gamma + slack
    }

    /// Lifted LP over `(ξ, υ)`: `−υ ≤ W(ξ − ξ_n) ≤ υ`, `Σ α_n 1ᵀυ_n ≤ γ`.
    /// Returns the program and the indices of the ξ variables.
    pub fn lifted_program(&self) -> (ConicProgram, Vec<usize>) {
        let d = self.dim();
        let mut p = ConicProgram::new();
        let xi: Vec<usize> = (0..d).map(|k| p.add_var(format!("xi_{k}"), f64::NEG_INFINITY, f64::INFINITY)).collect();
        let mut budget = LinExpr::constant(-self.gamma);
        for (n, c) in self.whitened.iter().enumerate() {
            for k in 0..d {
                let v = p.add_var(format!("ups_{n}_{k}"), 0.0, f64::INFINITY);
                let mut wx = LinExpr::constant(-c[k]);
                for (j, &x) in xi.iter().enumerate() {
                    wx.add_term(x, self.w[k][j]);
                }
                let mut up = wx.clone();
                up.add_term(v, -1.0);
                p.add_le(up, Tag::new("lift_hi", 0, n, k));
                let mut lo = wx.scaled(-1.0);
                lo.add_term(v, -1.0);
                p.add_le(lo, Tag::new("lift_lo", 0, n, k));
                budget.add_term(v, self.alpha[n]);
            }
        }
        p.add_le(budget, Tag::new("level", 0, 0, 0));
        (p, xi)
    }

    /// `max_{ξ ∈ U} cᵀξ` by the lifted LP, with a maximizer.
    pub fn support(&self, c: &[f64], solver: &dyn ConicSolver) -> Result<(f64, Vec<f64>)> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: c.len() });
        }
        let (mut p, xi) = self.lifted_program();
        let mut obj = LinExpr::default();
        for (k, &x) in xi.iter().enumerate() {
            obj.add_term(x, -c[k]);
        }
        p.objective = obj;
        let sol = solver.solve(&p)?;
        if sol.status != SolveStatus::Optimal {
            return Err(Error::Solver { status: sol.status.to_string(), message: "support LP".into() });
        }
        let arg: Vec<f64> = xi.iter().map(|&k| sol.x[k]).collect();
        Ok((c.iter().zip(&arg).map(|(a, b)| a * b).sum(), arg))
    }

    /// Axis-aligned bounding box `(lo, hi)` from 2·D support LPs.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let solver = ClarabelBackend::default();
        let d = self.dim();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            hi[k] = self.support(&e, &solver)?.0;
            e[k] = -1.0;
            lo[k] = -self.support(&e, &solver)?.0;
        }
        Ok((lo, hi))
    }

    /// Exact boundary polygon of a 2-D set, counter-clockwise.
    ///
    /// In whitened coordinates the score separates as `f₁(u₁) + f₂(u₂)` with
    /// each `f` convex piecewise linear, so the boundary is linear between
    /// the abscissae where either function kinks.
    pub fn boundary_2d(&self) -> Result<Vec<[f64; 2]>> {
        if self.dim() != 2 {
            return Err(Error::InvalidInput(format!("boundary tracing needs D = 2, got {}", self.dim())));
        }
        let w_inv = self.kernel().inverse_w()?;
        let f1 = PiecewiseAbs::new(self.whitened.iter().map(|c| c[0]).zip(self.alpha.iter().copied()));
        let f2 = PiecewiseAbs::new(self.whitened.iter().map(|c| c[1]).zip(self.alpha.iter().copied()));
        let budget = self.gamma - f2.min_value();
        if budget < f1.min_value() {
            return Ok(Vec::new());
        }
        let (a, b) = f1.sublevel(budget);
        let mut xs = vec![a, b];
        xs.extend(f1.knots.iter().copied().filter(|&x| x > a && x < b));
        for &k in &f2.knots {
            let s = self.gamma - f2.eval(k);
            if s >= f1.min_value() {
                let (l, r) = f1.sublevel(s);
                xs.push(l);
                xs.push(r);
            }
        }
        xs.retain(|&x| x >= a && x <= b);
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));

        let mut lower = Vec::with_capacity(xs.len());
        let mut upper = Vec::with_capacity(xs.len());
        for &x in &xs {
            let s = (self.gamma - f1.eval(x)).max(f2.min_value());
            let (l, r) = f2.sublevel(s);
            lower.push([x, l]);
            upper.push([x, r]);
        }
        let mut poly: Vec<[f64; 2]> = lower;
        poly.extend(upper.into_iter().rev());
        poly.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
        if poly.len() > 1 && poly.first() == poly.last() {
            poly.pop();
        }
        Ok(poly
            .into_iter()
            .map(|u| {
                [
                    w_inv[0][0] * u[0] + w_inv[0][1] * u[1],
                    w_inv[1][0] * u[0] + w_inv[1][1] * u[1],
                ]
            })
            .collect())
    }
}

/// `f(x) = Σ w_k |x − a_k|` with `w_k ≥ 0`, stored by sorted knots.
struct PiecewiseAbs {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Slope left of the first knot is `−total`, right of the last is `total`.
    total: f64,
    argmin: usize,
}

impl PiecewiseAbs {
    fn new(terms: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut t: Vec<(f64, f64)> = terms.collect();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = t.iter().map(|p| p.1).sum();
        let knots: Vec<f64> = t.iter().map(|p| p.0).collect();
        let values: Vec<f64> = knots.iter().map(|&x| t.iter().map(|&(a, w)| w * (x - a).abs()).sum()).collect();
        let argmin = (0..knots.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap_or(0);
        Self { knots, values, total, argmin }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.knots.len();
        if x <= self.knots[0] {
            return self.values[0] + self.total * (self.knots[0] - x);
        }
        if x >= self.knots[n - 1] {
            return self.values[n - 1] + self.total * (x - self.knots[n - 1]);
        }
        let k = self.knots.partition_point(|&a| a <= x).max(1);
        let (x0, x1) = (self.knots[k - 1], self.knots[k]);
        if x1 == x0 {
            return self.values[k];
        }
        let s = (x - x0) / (x1 - x0);
        self.values[k - 1] + s * (self.values[k] - self.values[k - 1])
    }

    fn min_value(&self) -> f64 {
        self.values[self.argmin]
    }

    /// Interval `{x : f(x) ≤ s}` for `s ≥ min f`.
    fn sublevel(&self, s: f64) -> (f64, f64) {
        let n = self.knots.len();
        let m = self.argmin;
        let cross = |i: usize, j: usize| -> f64 {
            // f is linear between knots i and j, with f(i) ≤ s ≤ f(j) or reverse
            let (xi, xj, vi, vj) = (self.knots[i], self.knots[j], self.values[i], self.values[j]);
            if vj == vi { xi } else { xi + (s - vi) / (vj - vi) * (xj - xi) }
        };
        let mut left = None;
        for i in (0..m).rev() {
            if self.values[i] > s {
                left = Some(cross(i + 1, i));
                break;
            }
        }
        let left = left.unwrap_or_else(|| {
            if self.total > 0.0 { self.knots[0] - (s - self.values[0]) / self.total } else { f64::NEG_INFINITY }
        });
        let mut right = None;
        for i in (m + 1)..n {
            if self.values[i] > s {
                right = Some(cross(i - 1, i));
                break;
            }
        }
        let right = right.unwrap_or_else(|| {
            if self.total > 0.0 { self.knots[n - 1] + (s - self.values[n - 1]) / self.total } else { f64::INFINITY }
        });
        (left, right)
    }
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * twice.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> SampleMatrix {
        SampleMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap()
    }

    fn square_model() -> SvcModel {
        train_with_kernel(&square(), 0.25, KernelSpec::identity(vec![2.0, 2.0]), SmoOptions::default()).unwrap()
    }

    fn random_samples(n: usize, seed: u64) -> SampleMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                vec![a, 0.5 * a + 0.3 * b]
            })
            .collect();
        SampleMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn kernel_values() {
        let spec = KernelSpec::identity(vec![2.0, 2.0]);
        assert_eq!(kernel(&[0.0, 0.0], &[1.0, -1.0], &spec), 2.0);
        assert_eq!(kernel(&[0.3, -0.2], &[0.3, -0.2], &spec), 4.0);
        assert_eq!(kernel(&[0.1, 0.7], &[-0.4, 0.2], &spec), kernel(&[-0.4, 0.2], &[0.1, 0.7], &spec));
    }

    #[test]
    fn whitening_decorrelates() {
        let s = random_samples(500, 1);
        let k = KernelSpec::fit(&s);
        let white: Vec<Vec<f64>> = s.rows().map(|r| k.whiten(r)).collect();
        let cov = SampleMatrix::from_rows(&white).unwrap().covariance();
        assert!((cov[0][0] - 1.0).abs() < 1e-6);
        assert!((cov[1][1] - 1.0).abs() < 1e-6);
        assert!(cov[0][1].abs() < 1e-6);
        assert!((k.w[0][1] - k.w[1][0]).abs() < 1e-15);
    }

    #[test]
    fn constant_samples_fall_back_to_identity() {
        let s = SampleMatrix::from_rows(&[vec![0.2, 0.1], vec![0.2, 0.1]]).unwrap();
        let k = KernelSpec::fit(&s);
        assert_eq!(k.w, identity(2));
        assert!(k.l.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn square_example() {
        let m = square_model();
        for a in &m.alpha {
            assert!((a - 0.25).abs() < 1e-12);
        }
        assert_eq!(m.sv.len(), 4);
        assert_eq!(m.bsv.len(), 4);
        assert!((m.gamma - 2.0).abs() < 1e-12);
        assert!((m.score(&[0.0, 0.0]) - 2.0).abs() < 1e-12);
        let p = export_polyhedron(&m);
        assert_eq!(p.n_sv(), 4);
        assert!((p.gamma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_set_is_the_square() {
        let p = export_polyhedron(&square_model());
        let poly = p.boundary_2d().unwrap();
        assert!((polygon_area(&poly) - 4.0).abs() < 1e-9);
        assert!(p.contains(&[0.99, -0.99], 1e-12));
        assert!(!p.contains(&[1.01, 0.0], 1e-12));
        let (lo, hi) = p.bounding_box().unwrap();
        for k in 0..2 {
            assert!((lo[k] + 1.0).abs() < 1e-6 && (hi[k] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_sample_is_a_point() {
        let s = SampleMatrix::from_rows(&[vec![0.1, -0.2]]).unwrap();
        let m = train(&s, 0.3).unwrap();
        assert_eq!(m.alpha, vec![1.0]);
        assert_eq!(m.gamma, 0.0);
        assert!(m.contains(&[0.1, -0.2], 0.0));
        assert!(!m.contains(&[0.1, -0.19], 1e-9));
        let p = export_polyhedron(&m);
        assert_eq!(polygon_area(&p.boundary_2d().unwrap()), 0.0);
    }

    #[test]
    fn epsilon_outside_unit_interval_is_rejected() {
        assert!(matches!(train(&square(), 1.5), Err(Error::Config(_))));
        assert!(matches!(train(&square(), 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn interior_training_sample_scores_below_gamma() {
        let m = train(&random_samples(200, 3), 0.1).unwrap();
        let classes = m.classify();
        let interior: Vec<usize> = (0..200).filter(|&k| classes[k] == SampleClass::Interior).collect();
        assert!(!interior.is_empty());
        assert!(interior.iter().all(|&k| m.score(&m.samples[k]) <= m.gamma + 1e-9));
        assert!(interior.iter().any(|&k| m.score(&m.samples[k]) < m.gamma - 1e-6));
        for k in 0..200 {
            if classes[k] == SampleClass::Outlier {
                assert!(m.score(&m.samples[k]) >= m.gamma - 1e-9);
            }
        }
    }

    #[test]
    fn gamma_spread_over_boundary_vectors_is_small() {
        let m = train(&random_samples(300, 5), 0.05).unwrap();
        let scores: Vec<f64> = m.bsv.iter().map(|&k| m.score(&m.samples[k])).collect();
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-5 * (1.0 + m.gamma), "spread {}", hi - lo);
    }

    #[test]
    fn gram_matrix_is_conditionally_usable() {
        let s = random_samples(60, 9);
        let min = gram_min_eigenvalue(&s, &KernelSpec::fit(&s));
        assert!(min >= -1e-6, "relative min eigenvalue {min}");
    }

    #[test]
    fn model_json_round_trip() {
        let m = train(&random_samples(40, 2), 0.2).unwrap();
        let back = SvcModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.alpha, m.alpha);
        assert_eq!(back.gamma, m.gamma);
        assert_eq!(back.kernel, m.kernel);
    }

    #[test]
    fn lifted_membership_matches_score() {
        let m = train(&random_samples(30, 11), 0.2).unwrap();
        let p = export_polyhedron(&m);
        let solver = ClarabelBackend::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (mut agree, mut total) = (0, 0);
        for _ in 0..1000 {
            let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let s = p.score(&x);
            if (s - p.gamma).abs() < 1e-6 {
                continue;
            }
            let (mut prog, xi) = p.lifted_program();
            for k in 0..2 {
                prog.vars[xi[k]].lower = x[k];
                prog.vars[xi[k]].upper = x[k];
            }
            let feasible = solver.solve(&prog).unwrap().status == SolveStatus::Optimal;
            total += 1;
            if feasible == (s <= p.gamma) {
                agree += 1;
            }
        }
        assert_eq!(agree, total);
    }

    #[test]
    fn exact_boundary_lies_on_level_set() {
        let m = train(&random_samples(120, 4), 0.1).unwrap();
        let p = export_polyhedron(&m);
        let poly = p.boundary_2d().unwrap();
        assert!(poly.len() >= 4);
        for v in &poly {
            assert!((p.score(v) - p.gamma).abs() < 1e-9 * (1.0 + p.gamma));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn coverage_and_outlier_bound(seed in 0u64..1000, n in 5usize..120, eps in 0.02..0.5f64) {
            let m = train(&random_samples(n, seed), eps).unwrap();
            let at_cap = m.alpha.iter().filter(|&&a| a >= m.cap() - m.tol_alpha()).count();
            prop_assert!(at_cap <= max_outliers(n, eps));
            prop_assert!(m.covered(1e-8) >= min_covered(n, eps));
            prop_assert!((m.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            prop_assert!(m.alpha.iter().all(|&a| (0.0..=m.cap()).contains(&a)));
            prop_assert!(m.gamma >= 0.0);
        }

        #[test]
        fn score_is_lipschitz_in_whitened_l1(seed in 0u64..1000, a in proptest::array::uniform2(-2.0..2.0f64),
                                               b in proptest::array::uniform2(-2.0..2.0f64)) {
            let m = train(&random_samples(25, seed), 0.2).unwrap();
            let lhs = (m.score(&a) - m.score(&b)).abs();
            prop_assert!(lhs <= m.kernel.distance(&a, &b) + 1e-12);
        }

        #[test]
        fn kernel_is_symmetric(a in proptest::array::uniform3(-1.0..1.0f64), b in proptest::array::uniform3(-1.0..1.0f64)) {
            let spec = KernelSpec::identity(vec![1.0, 2.0, 3.0]);
            prop_assert_eq!(kernel(&a, &b, &spec), kernel(&b, &a, &spec));
        }
    }
}
