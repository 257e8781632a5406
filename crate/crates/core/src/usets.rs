//! Benchmark uncertainty sets and synthetic forecast-error samplers.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};

use crate::conic::ConicSolver;
use crate::error::{Error, Result};
use crate::netdata::{SampleMatrix, SampleSet};
use crate::svc::PolyhedronSet;

pub const DEFAULT_DELTA: f64 = 1e-3;

/// Stream offset that keeps held-out draws disjoint from training draws.
const HELDOUT_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// On [0, 1].
    Beta { a: f64, b: f64 },
    /// On [0, ∞), or (−∞, 0] when mirrored.
    Weibull {
        shape: f64,
        /// Weibull scale parameter.
        lambda: f64,
        #[serde(default)]
        mirrored: bool,
    },
    Gaussian { mean: f64, std: f64 },
}

/// Draws `ξ = shift + scale · M x` where `x` has independent components from
/// `family`, and rejects draws with any component below −1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "one")]
    pub scale: f64,
    /// Optional D×D mixing matrix for correlated components.
    #[serde(default)]
    pub mixing: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DrawStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl DrawStats {
    pub fn rejection_rate(&self) -> f64 {
        let total = self.accepted + self.rejected;
        if total == 0 { 0.0 } else { self.rejected as f64 / total as f64 }
    }

    /// A note when truncation at −1 rejected more than 1% of draws.
    pub fn bias_note(&self) -> Option<String> {
        (self.rejection_rate() > 0.01).then(|| {
            format!(
                "{:.2}% of draws fell below -1 and were rejected; the samples follow a truncated distribution",
                100.0 * self.rejection_rate()
            )
        })
    }
}

enum Raw {
    Beta(Beta<f64>),
    Weibull(Weibull<f64>, bool),
    Normal(Normal<f64>),
}

impl Raw {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Raw::Beta(d) => d.sample(rng),
            Raw::Weibull(d, mirrored) => {
                let v = d.sample(rng);
                if *mirrored { -v } else { v }
            }
            Raw::Normal(d) => d.sample(rng),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.raw()?;
        if !(self.shift.is_finite() && self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::Config("sampler shift/scale must be finite with scale ≥ 0".into()));
        }
        if let Some(m) = &self.mixing {
            if m.len() != dim || m.iter().any(|r| r.len() != dim || r.iter().any(|v| !v.is_finite())) {
                return Err(Error::Config(format!("sampler mixing matrix must be finite {dim}×{dim}")));
            }
        }
        Ok(())
    }

    fn raw(&self) -> Result<Raw> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("invalid sampler parameters: {e}"));
        Ok(match self.family {
            Family::Beta { a, b } => Raw::Beta(Beta::new(a, b).map_err(|e| bad(&e))?),
            Family::Weibull { shape, lambda, mirrored } => {
                Raw::Weibull(Weibull::new(lambda, shape).map_err(|e| bad(&e))?, mirrored)
            }
            Family::Gaussian { mean, std } => Raw::Normal(Normal::new(mean, std).map_err(|e| bad(&e))?),
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn draw_step(&self, raw: &Raw, stream: u64, dim: usize, n: usize) -> Result<(SampleMatrix, DrawStats)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let mut stats = DrawStats::default();
        let mut data = Vec::with_capacity(n * dim);
        let mut x = vec![0.0; dim];
        let limit = 1000 * n.max(1) + 10_000;
        while stats.accepted < n {
            if stats.rejected > limit {
                return Err(Error::Config("sampler rejects almost every draw below -1".into()));
            }
            x.iter_mut().for_each(|v| *v = raw.draw(&mut rng));
            let xi: Vec<f64> = match &self.mixing {
                Some(m) => m.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()).collect(),
                None => x.clone(),
            };
            let xi: Vec<f64> = xi.into_iter().map(|v| self.shift + self.scale * v).collect();
            if xi.iter().any(|&v| v < -1.0) {
                stats.rejected += 1;
                continue;
            }
            data.extend_from_slice(&xi);
            stats.accepted += 1;
        }
        Ok((SampleMatrix::new(dim, data)?, stats))
    }

    fn draw_set(&self, stream_base: u64, horizon: usize, dim: usize, n: usize) -> Result<(SampleSet, DrawStats)> {
        if n == 0 || dim == 0 || horizon == 0 {
            return Err(Error::Config("sample counts and dimensions must be positive".into()));
        }
        self.validate(dim)?;
        let raw = self.raw()?;
        let mut steps = Vec::with_capacity(horizon);
        let mut total = DrawStats::default();
        for t in 0..horizon {
            let (m, s) = self.draw_step(&raw, stream_base + t as u64, dim, n)?;
            total.accepted += s.accepted;
            total.rejected += s.rejected;
            steps.push(m);
        }
        Ok((SampleSet::new(steps)?, total))
    }
}

/// Training samples: `horizon` independent N×D matrices, one RNG stream per timestep.
pub fn generate_samples(config: &SamplerConfig, horizon: usize, dim: usize, n: usize) -> Result<(SampleSet, DrawStats)> {
    config.draw_set(0, horizon, dim, n)
}

/// Held-out samples from streams disjoint from [`generate_samples`].
pub fn generate_heldout(config: &SamplerConfig, horizon: usize, dim: usize, n: usize) -> Result<(SampleSet, DrawStats)> {
    config.draw_set(HELDOUT_STREAM, horizon, dim, n)
}

/// `⌈(2/ε)(ln(1/δ) + n_decision)⌉`
pub fn scenario_count(epsilon: f64, delta: f64, n_decision: usize) -> usize {
    ((2.0 / epsilon) * ((1.0 / delta).ln() + n_decision as f64)).ceil() as usize
}

/// Uniform draw of scenario rows without replacement, capped at N.
pub fn select_scenarios(
    samples: &SampleMatrix,
    epsilon: f64,
    delta: f64,
    n_decision: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<usize>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    let n = samples.n_rows();
    let k = scenario_count(epsilon, delta, n_decision).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut idx = index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullSet {
    pub vertices: Vec<Vec<f64>>,
}

pub fn fit_box(rows: &SampleMatrix) -> BoxSet {
    let d = rows.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for r in rows.rows() {
        for k in 0..d {
            lo[k] = lo[k].min(r[k]);
            hi[k] = hi[k].max(r[k]);
        }
    }
    BoxSet { lo, hi }
}

pub fn fit_hull(rows: &SampleMatrix) -> HullSet {
    HullSet { vertices: rows.rows().map(|r| r.to_vec()).collect() }
}

impl BoxSet {
    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        xi.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }

    pub fn support(&self, c: &[f64]) -> f64 {
        c.iter().zip(self.lo.iter().zip(&self.hi)).map(|(c, (l, h))| (c * l).max(c * h)).sum()
    }

    pub fn area(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

impl HullSet {
    pub fn dim(&self) -> usize {
        self.vertices.first().map(|v| v.len()).unwrap_or(0)
    }

    pub fn support(&self, c: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Extreme points of a 2-D hull, counter-clockwise (monotone chain).
    /// Other dimensions return the stored rows unchanged.
    pub fn extreme_points(&self) -> HullSet {
        if self.dim() != 2 || self.vertices.len() < 3 {
            return self.clone();
        }
        let mut pts: Vec<[f64; 2]> = self.vertices.iter().map(|v| [v[0], v[1]]).collect();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return HullSet { vertices: pts.iter().map(|p| p.to_vec()).collect() };
        }
        let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
        for &p in &pts {
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        let lower_len = hull.len() + 1;
        for &p in pts.iter().rev().skip(1) {
            while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
        HullSet { vertices: hull.iter().map(|p| p.to_vec()).collect() }
    }

    /// 2-D membership against the extreme-point polygon.
    fn contains_2d(poly: &[Vec<f64>], xi: &[f64], tol: f64) -> bool {
        match poly.len() {
            0 => false,
            1 => (poly[0][0] - xi[0]).hypot(poly[0][1] - xi[1]) <= tol,
            2 => {
                let (a, b) = (&poly[0], &poly[1]);
                let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                let len2 = dx * dx + dy * dy;
                let s = (((xi[0] - a[0]) * dx + (xi[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
                (a[0] + s * dx - xi[0]).hypot(a[1] + s * dy - xi[1]) <= tol
            }
            n => (0..n).all(|i| {
                let (a, b) = (&poly[i], &poly[(i + 1) % n]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                (b[0] - a[0]) * (xi[1] - a[1]) - (b[1] - a[1]) * (xi[0] - a[0]) >= -tol * len
            }),
        }
    }
}

/// One of the three set families used to robustify the joint constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UncertaintySet {
    Svc(PolyhedronSet),
    Box(BoxSet),
    Hull(HullSet),
}

impl UncertaintySet {
    pub fn dim(&self) -> usize {
        match self {
            UncertaintySet::Svc(p) => p.dim(),
            UncertaintySet::Box(b) => b.lo.len(),
            UncertaintySet::Hull(h) => h.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            UncertaintySet::Box(b) => {
                if b.lo.len() != b.hi.len() || !finite(&b.lo) || !finite(&b.hi) || b.lo.iter().zip(&b.hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidInput("box set needs finite lo ≤ hi".into()));
                }
            }
            UncertaintySet::Hull(h) => {
                if h.vertices.is_empty() || h.vertices.iter().any(|v| v.len() != h.dim() || !finite(v)) {
                    return Err(Error::InvalidInput("hull set needs at least one finite vertex".into()));
                }
            }
            UncertaintySet::Svc(p) => {
                if p.alpha.is_empty() || !p.gamma.is_finite() || p.gamma < 0.0 {
                    return Err(Error::InvalidInput("SVC set needs support vectors and γ ≥ 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Membership test. For D ≠ 2 hulls, vertices are checked as a point cloud
    /// only through [`UncertaintySet::support`]; use an LP for general membership.
    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        match self {
            UncertaintySet::Svc(p) => p.contains(xi, tol),
            UncertaintySet::Box(b) => b.contains(xi, tol),
            UncertaintySet::Hull(h) => {
                let ext = h.extreme_points();
                if h.dim() == 2 {
                    HullSet::contains_2d(&ext.vertices, xi, tol)
                } else {
                    ext.vertices.iter().any(|v| v.iter().zip(xi).all(|(a, b)| (a - b).abs() <= tol))
                }
            }
        }
    }

    /// `max_{ξ ∈ U} cᵀξ`. The SVC set needs an LP solver.
    pub fn support(&self, c: &[f64], solver: &dyn ConicSolver) -> Result<f64> {
        Ok(match self {
            UncertaintySet::Svc(p) => p.support(c, solver)?.0,
            UncertaintySet::Box(b) => b.support(c),
            UncertaintySet::Hull(h) => h.support(c),
        })
    }

    pub fn bounding_box(&self) -> Result<BoxSet> {
        Ok(match self {
            UncertaintySet::Svc(p) => {
                let (lo, hi) = p.bounding_box()?;
                BoxSet { lo, hi }
            }
            UncertaintySet::Box(b) => b.clone(),
            UncertaintySet::Hull(h) => {
                let m = SampleMatrix::from_rows(&h.vertices)?;
                fit_box(&m)
            }
        })
    }

    /// Closed boundary polygon of a 2-D set for plotting.
    pub fn boundary_2d(&self) -> Result<Vec<[f64; 2]>> {
        if self.dim() != 2 {
            return Err(Error::InvalidInput(format!("boundary needs D = 2, got {}", self.dim())));
        }
        Ok(match self {
            UncertaintySet::Svc(p) => p.boundary_2d()?,
            UncertaintySet::Box(b) => vec![[b.lo[0], b.lo[1]], [b.hi[0], b.lo[1]], [b.hi[0], b.hi[1]], [b.lo[0], b.hi[1]]],
            UncertaintySet::Hull(h) => h.extreme_points().vertices.iter().map(|v| [v[0], v[1]]).collect(),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UncertaintySet::Svc(_) => "svc",
            UncertaintySet::Box(_) => "box",
            UncertaintySet::Hull(_) => "hull",
        }
    }
}
