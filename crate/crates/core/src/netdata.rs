//! Static problem data: network topology, buildings, time series and the
//! historical DRG forecast-error samples.
//!
//! Cases are stored as a single JSON document (see `docs/case-format.md`);
//! samples use a long-format CSV with columns `t,node,value`, one line per
//! entry, rows of the per-timestep matrix emitted node by node.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

const IEEE13_JSON: &str = include_str!("../data/ieee13.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Upstream bus; `None` only for the slack bus.
    pub parent: Option<usize>,
    /// Resistance of branch (parent, id), p.u. on the case base.
    #[serde(default)]
    pub r: f64,
    /// Reactance of branch (parent, id), p.u. on the case base.
    #[serde(default)]
    pub x: f64,
    pub v_min_sq: f64,
    pub v_max_sq: f64,
    /// Apparent power cap of branch (parent, id), MVA. Ignored for the slack.
    #[serde(default = "default_s_max")]
    pub s_max: f64,
}

fn default_s_max() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub bus: usize,
    /// MWh/°C
    pub heat_capacity: f64,
    /// °C/MW
    pub thermal_resistance: f64,
    pub cop: f64,
    pub power_factor: f64,
    /// MW
    pub p_max: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// Initial indoor temperature; defaults to `theta_hi`.
    #[serde(default)]
    pub theta_init: Option<f64>,
}

impl Building {
    pub fn initial_temperature(&self) -> f64 {
        self.theta_init.unwrap_or(self.theta_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrgUnit {
    pub name: String,
    pub bus: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub name: String,
    pub base_mva: f64,
    /// Squared slack-bus voltage U_0, p.u.².
    pub slack_voltage_sq: f64,
    pub buses: Vec<Bus>,
    pub buildings: Vec<Building>,
    pub drg: Vec<DrgUnit>,
}

impl NetworkModel {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Branches are identified with their child bus; this excludes the slack.
    pub fn branch_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.parent.is_some())
    }

    pub fn n_branches(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn n_drg(&self) -> usize {
        self.drg.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesInputs {
    pub horizon: usize,
    pub dt: f64,
    pub theta_out: Vec<f64>,
    /// Indoor heat load per building, MW.
    pub heat_load: Vec<Vec<f64>>,
    /// Base active load per bus, MW.
    pub base_p: Vec<Vec<f64>>,
    /// Base reactive load per bus, MVar.
    pub base_q: Vec<Vec<f64>>,
    /// Nominal available output per DRG unit, MW.
    pub drg_nominal: Vec<Vec<f64>>,
    pub price_buy: Vec<f64>,
    pub price_sell: Vec<f64>,
}

impl TimeSeriesInputs {
    /// First hour of maximal purchase price.
    pub fn price_peak(&self) -> usize {
        let mut best = 0;
        for (t, &p) in self.price_buy.iter().enumerate() {
            if p > self.price_buy[best] {
                best = t;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub network: NetworkModel,
    pub series: TimeSeriesInputs,
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    schema_version: u32,
    name: String,
    #[serde(default = "one")]
    base_mva: f64,
    #[serde(default = "one")]
    slack_voltage_sq: f64,
    dt_hours: f64,
    horizon: usize,
    buses: Vec<Bus>,
    buildings: Vec<BuildingEntry>,
    drg: Vec<DrgEntry>,
    #[serde(default)]
    base_loads: Vec<BaseLoadEntry>,
    theta_out: Vec<f64>,
    price_buy: Vec<f64>,
    price_sell: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildingEntry {
    #[serde(flatten)]
    building: Building,
    heat_load: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrgEntry {
    name: String,
    bus: usize,
    nominal: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseLoadEntry {
    bus: usize,
    p: Vec<f64>,
    q: Vec<f64>,
}

/// Loads and validates a case document.
pub fn load_case(path: impl AsRef<Path>) -> Result<Case> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_case(&text)
}

/// Resolves a bundled case by name (`ieee13`) or else loads it from disk.
pub fn resolve_case(name_or_path: &str) -> Result<Case> {
    match name_or_path {
        "ieee13" => parse_case(IEEE13_JSON),
        other => load_case(other),
    }
}

pub fn bundled_ieee13() -> Case {
    parse_case(IEEE13_JSON).expect("bundled case is valid")
}

pub fn parse_case(text: &str) -> Result<Case> {
    let file: CaseFile = serde_json::from_str(text).map_err(|e| {
        Error::schema(
            "document",
            Some(e.line()),
            e.to_string(),
        )
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            None,
            format!("expected {SCHEMA_VERSION}, found {}", file.schema_version),
        ));
    }
    from_file(file)
}

fn from_file(file: CaseFile) -> Result<Case> {
    let t = file.horizon;
    if t == 0 {
        return Err(Error::schema("horizon", None, "must be at least 1"));
    }
    if !(file.dt_hours > 0.0) {
        return Err(Error::schema("dt_hours", None, "must be positive"));
    }
    if !(file.base_mva > 0.0) {
        return Err(Error::schema("base_mva", None, "must be positive"));
    }

    let mut buses = file.buses;
    buses.sort_by_key(|b| b.id);
    let n = buses.len();
    for (k, b) in buses.iter().enumerate() {
        if b.id != k {
            return Err(Error::schema(
                "buses.id",
                Some(k),
                "bus ids must be contiguous from 0",
            ));
        }
    }
    check_tree(&buses)?;
    for (k, b) in buses.iter().enumerate() {
        if b.r < 0.0 || b.x < 0.0 || !b.r.is_finite() || !b.x.is_finite() {
            return Err(Error::schema("buses.r/x", Some(k), "impedance must be finite and nonnegative"));
        }
        if !(b.v_min_sq < b.v_max_sq) {
            return Err(Error::schema("buses.v_min_sq", Some(k), "v_min_sq must be below v_max_sq"));
        }
        if b.parent.is_some() && !(b.s_max > 0.0) {
            return Err(Error::schema("buses.s_max", Some(k), "must be positive"));
        }
    }

    let check_len = |field: &str, row: Option<usize>, v: &[f64]| -> Result<()> {
        if v.len() != t {
            return Err(Error::schema(field, row, format!("expected {t} entries, found {}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::schema(field, row, "non-finite entry"));
        }
        Ok(())
    };

    let mut buildings = Vec::with_capacity(file.buildings.len());
    let mut heat_load = Vec::with_capacity(file.buildings.len());
    for (k, entry) in file.buildings.into_iter().enumerate() {
        let b = entry.building;
        if b.bus >= n || b.bus == 0 {
            return Err(Error::schema("buildings.bus", Some(k), "must reference a non-slack bus"));
        }
        if !(b.heat_capacity > 0.0) || !(b.thermal_resistance > 0.0) || !(b.cop > 0.0) {
            return Err(Error::schema("buildings", Some(k), "C, R and COP must be positive"));
        }
        if !(b.power_factor > 0.0 && b.power_factor <= 1.0) {
            return Err(Error::schema("buildings.power_factor", Some(k), "must lie in (0, 1]"));
        }
        if !(b.p_max >= 0.0) {
            return Err(Error::schema("buildings.p_max", Some(k), "must be nonnegative"));
        }
        if !(b.theta_lo < b.theta_hi) {
            return Err(Error::schema("buildings.theta_lo", Some(k), "theta_lo must be below theta_hi"));
        }
        let init = b.initial_temperature();
        if !(b.theta_lo <= init && init <= b.theta_hi) {
            return Err(Error::schema("buildings.theta_init", Some(k), "must lie within comfort bounds"));
        }
        check_len("buildings.heat_load", Some(k), &entry.heat_load)?;
        buildings.push(b);
        heat_load.push(entry.heat_load);
    }

    let mut drg = Vec::with_capacity(file.drg.len());
    let mut drg_nominal = Vec::with_capacity(file.drg.len());
    for (k, entry) in file.drg.into_iter().enumerate() {
        if entry.bus >= n {
            return Err(Error::schema("drg.bus", Some(k), "unknown bus"));
        }
        if entry.bus == 0 {
            return Err(Error::schema("drg.bus", Some(k), "DRG at the slack bus has no sensitivity"));
        }
        check_len("drg.nominal", Some(k), &entry.nominal)?;
        if entry.nominal.iter().any(|&g| g < 0.0) {
            return Err(Error::schema("drg.nominal", Some(k), "nominal output must be nonnegative"));
        }
        drg.push(DrgUnit { name: entry.name, bus: entry.bus });
        drg_nominal.push(entry.nominal);
    }
    if drg.is_empty() {
        return Err(Error::schema("drg", None, "at least one DRG unit is required"));
    }

    let mut base_p = vec![vec![0.0; t]; n];
    let mut base_q = vec![vec![0.0; t]; n];
    for (k, entry) in file.base_loads.into_iter().enumerate() {
        if entry.bus >= n {
            return Err(Error::schema("base_loads.bus", Some(k), "unknown bus"));
        }
        check_len("base_loads.p", Some(k), &entry.p)?;
        check_len("base_loads.q", Some(k), &entry.q)?;
        for s in 0..t {
            base_p[entry.bus][s] += entry.p[s];
            base_q[entry.bus][s] += entry.q[s];
        }
    }

    check_len("theta_out", None, &file.theta_out)?;
    check_len("price_buy", None, &file.price_buy)?;
    check_len("price_sell", None, &file.price_sell)?;
    for s in 0..t {
        if !(file.price_buy[s] >= file.price_sell[s] && file.price_sell[s] >= 0.0) {
            return Err(Error::schema(
                "price_sell",
                Some(s),
                "prices must satisfy price_buy >= price_sell >= 0",
            ));
        }
    }

    Ok(Case {
        network: NetworkModel {
            name: file.name,
            base_mva: file.base_mva,
            slack_voltage_sq: file.slack_voltage_sq,
            buses,
            buildings,
            drg,
        },
        series: TimeSeriesInputs {
            horizon: t,
            dt: file.dt_hours,
            theta_out: file.theta_out,
            heat_load,
            base_p,
            base_q,
            drg_nominal,
            price_buy: file.price_buy,
            price_sell: file.price_sell,
        },
    })
}

/// Verifies that parent links form a tree rooted at bus 0.
pub fn check_tree(buses: &[Bus]) -> Result<()> {
    let n = buses.len();
    if n == 0 {
        return Err(Error::Topology { message: "empty network".into(), cycle: vec![] });
    }
    if buses[0].parent.is_some() {
        return Err(Error::Topology {
            message: "bus 0 must be the slack bus (no parent)".into(),
            cycle: vec![],
        });
    }
    for b in &buses[1..] {
        match b.parent {
            None => {
                return Err(Error::Topology {
                    message: format!("bus {} has no parent but is not the slack", b.id),
                    cycle: vec![],
                })
            }
            Some(p) if p >= n => {
                return Err(Error::Topology {
                    message: format!("bus {} references unknown parent {p}", b.id),
                    cycle: vec![],
                })
            }
            _ => {}
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches slack
    let mut state = vec![0u8; n];
    state[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = buses[cur].parent.expect("checked above");
        }
        if state[cur] == 1 {
            let pos = path.iter().position(|&b| b == cur).expect("on path");
            return Err(Error::Topology {
                message: "parent links do not reach the slack bus".into(),
                cycle: path[pos..].to_vec(),
            });
        }
        for b in path {
            state[b] = 2;
        }
    }
    Ok(())
}

impl Case {
    /// Serializes back into the case document format.
    pub fn to_json(&self) -> Result<String> {
        let net = &self.network;
        let ts = &self.series;
        let file = CaseFile {
            schema_version: SCHEMA_VERSION,
            name: net.name.clone(),
            base_mva: net.base_mva,
            slack_voltage_sq: net.slack_voltage_sq,
            dt_hours: ts.dt,
            horizon: ts.horizon,
            buses: net.buses.clone(),
            buildings: net
                .buildings
                .iter()
                .zip(&ts.heat_load)
                .map(|(b, h)| BuildingEntry { building: b.clone(), heat_load: h.clone() })
                .collect(),
            drg: net
                .drg
                .iter()
                .zip(&ts.drg_nominal)
                .map(|(d, g)| DrgEntry { name: d.name.clone(), bus: d.bus, nominal: g.clone() })
                .collect(),
            base_loads: (0..net.n_buses())
                .filter(|&b| ts.base_p[b].iter().chain(&ts.base_q[b]).any(|&v| v != 0.0))
                .map(|b| BaseLoadEntry { bus: b, p: ts.base_p[b].clone(), q: ts.base_q[b].clone() })
                .collect(),
            theta_out: ts.theta_out.clone(),
            price_buy: ts.price_buy.clone(),
            price_sell: ts.price_sell.clone(),
            notes: None,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

// ---------------------------------------------------------------------------
// Samples

/// Row-major N×D matrix of forecast-error realizations for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Samples("dimension must be positive".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::Samples(format!(
                "{} entries cannot form rows of width {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Samples(format!("non-finite entry in row {}", pos / dim)));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if let Some(k) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Samples(format!("ragged row {k}")));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, idx: &[usize]) -> SampleMatrix {
        let data = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        SampleMatrix { dim: self.dim, data }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Population covariance (normalized by N).
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let mean = self.mean();
        let n = self.n_rows() as f64;
        let d = self.dim;
        let mut c = vec![vec![0.0; d]; d];
        for r in self.rows() {
            for i in 0..d {
                for j in 0..d {
                    c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        for row in &mut c {
            row.iter_mut().for_each(|v| *v /= n);
        }
        c
    }
}

/// Per-timestep realizations of the DRG uncertainty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    steps: Vec<SampleMatrix>,
}

impl SampleSet {
    pub fn new(steps: Vec<SampleMatrix>) -> Result<Self> {
        let dim = steps
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::Samples("sample set has no timesteps".into()))?;
        for (t, m) in steps.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
            if let Some(k) = m.rows().position(|r| r.iter().any(|&v| v < -1.0)) {
                return Err(Error::Samples(format!(
                    "t={t} row {k}: relative error below -1 implies negative available power"
                )));
            }
        }
        Ok(Self { dim, steps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn at(&self, t: usize) -> &SampleMatrix {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[SampleMatrix] {
        &self.steps
    }
}

pub fn save_samples(samples: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(samples.steps.iter().map(|m| m.data.len() * 24).sum());
    out.push_str("t,node,value\n");
    for (t, m) in samples.steps.iter().enumerate() {
        for row in m.rows() {
            for (d, v) in row.iter().enumerate() {
                // `{}` on f64 prints the shortest representation that parses back exactly.
                out.push_str(&format!("{t},{d},{v}\n"));
            }
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SampleSet> {
    load_samples_inner(path.as_ref(), None)
}

/// Loads samples and checks that they have one column per DRG unit.
pub fn load_samples_for(path: impl AsRef<Path>, dim: usize) -> Result<SampleSet> {
    load_samples_inner(path.as_ref(), Some(dim))
}

fn load_samples_inner(path: &Path, expected_dim: Option<usize>) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Samples(format!("{other:?}")),
        })?;
    let headers = reader.headers()?.clone();
    if headers.len() != 3 || &headers[0] != "t" || &headers[1] != "node" || &headers[2] != "value" {
        return Err(Error::Samples("header must be `t,node,value`".into()));
    }

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse_err = |what: &str| Error::Samples(format!("line {}: bad {what}", line + 2));
        if rec.len() != 3 {
            return Err(parse_err("record length"));
        }
        let t: usize = rec[0].trim().parse().map_err(|_| parse_err("t"))?;
        let d: usize = rec[1].trim().parse().map_err(|_| parse_err("node"))?;
        let v: f64 = rec[2].trim().parse().map_err(|_| parse_err("value"))?;
        if !v.is_finite() {
            return Err(Error::Samples(format!("line {}: non-finite value", line + 2)));
        }
        entries.push((t, d, v));
    }
    if entries.is_empty() {
        return Err(Error::Samples("file contains no samples".into()));
    }

    let dim = entries.iter().map(|e| e.1).max().unwrap() + 1;
    if let Some(exp) = expected_dim {
        if exp != dim {
            return Err(Error::DimensionMismatch { expected: exp, found: dim });
        }
    }
    let horizon = entries.iter().map(|e| e.0).max().unwrap() + 1;
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    let mut cursor: HashMap<usize, usize> = HashMap::new();
    for (line, &(t, d, v)) in entries.iter().enumerate() {
        let next = cursor.entry(t).or_insert(0);
        if d != *next % dim {
            return Err(Error::Samples(format!(
                "line {}: ragged row at t={t} (expected node {}, found {d})",
                line + 2,
                *next % dim
            )));
        }
        *next += 1;
        data[t].push(v);
    }
    let steps = data
        .into_iter()
        .enumerate()
        .map(|(t, v)| {
            if v.is_empty() {
                return Err(Error::Samples(format!("no samples for t={t}")));
            }
            if v.len() % dim != 0 {
                return Err(Error::Samples(format!("ragged final row at t={t}")));
            }
            SampleMatrix::new(dim, v)
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSet::new(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_case_matches_reference_parameters() {
        let case = bundled_ieee13();
        let net = &case.network;
        assert_eq!(net.n_buses(), 13);
        assert_eq!(net.n_branches(), 12);
        assert_eq!(net.n_drg(), 2);
        assert_ne!(net.drg[0].bus, net.drg[1].bus);
        assert_eq!(case.series.horizon, 24);
        assert_eq!(case.series.dt, 1.0);
        for b in &net.buildings {
            assert_eq!(b.heat_capacity, 1.0);
            assert_eq!(b.thermal_resistance, 20.0);
            assert_eq!(b.cop, 3.6);
            assert_eq!(b.power_factor, 0.98);
            assert_eq!(b.p_max, 0.5);
            assert_eq!((b.theta_lo, b.theta_hi), (24.0, 28.0));
        }
        for b in net.branch_buses() {
            assert_eq!(b.s_max, if b.parent == Some(0) { 5.0 } else { 2.0 });
            assert!((b.v_min_sq - 0.95f64 * 0.95).abs() < 1e-12);
            assert!((b.v_max_sq - 1.05f64 * 1.05).abs() < 1e-12);
        }
    }

    #[test]
    fn self_loop_is_a_topology_error() {
        let case = bundled_ieee13();
        let mut json: serde_json::Value = serde_json::from_str(&case.to_json().unwrap()).unwrap();
        json["buses"][4]["parent"] = serde_json::json!(4);
        let err = parse_case(&json.to_string()).unwrap_err();
        match err {
            Error::Topology { cycle, .. } => assert_eq!(cycle, vec![4]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn two_cycle_is_reported() {
        let case = bundled_ieee13();
        let mut json: serde_json::Value = serde_json::from_str(&case.to_json().unwrap()).unwrap();
        json["buses"][2]["parent"] = serde_json::json!(3);
        json["buses"][3]["parent"] = serde_json::json!(2);
        match parse_case(&json.to_string()).unwrap_err() {
            Error::Topology { mut cycle, .. } => {
                cycle.sort();
                assert_eq!(cycle, vec![2, 3]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn schema_errors_name_field_and_row() {
        let case = bundled_ieee13();
        let mut json: serde_json::Value = serde_json::from_str(&case.to_json().unwrap()).unwrap();
        json["buildings"][3]["power_factor"] = serde_json::json!(0.0);
        match parse_case(&json.to_string()).unwrap_err() {
            Error::Schema { field, row, .. } => {
                assert_eq!(field, "buildings.power_factor");
                assert_eq!(row, Some(3));
            }
            other => panic!("unexpected {other}"),
        }

        let mut json: serde_json::Value = serde_json::from_str(&case.to_json().unwrap()).unwrap();
        json["schema_version"] = serde_json::json!(99);
        assert!(matches!(parse_case(&json.to_string()), Err(Error::Schema { .. })));
    }

    #[test]
    fn inverted_prices_are_rejected() {
        let case = bundled_ieee13();
        let mut json: serde_json::Value = serde_json::from_str(&case.to_json().unwrap()).unwrap();
        json["price_sell"][5] = serde_json::json!(1.0e6);
        match parse_case(&json.to_string()).unwrap_err() {
            Error::Schema { field, row, .. } => {
                assert_eq!(field, "price_sell");
                assert_eq!(row, Some(5));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn case_round_trip() {
        let case = bundled_ieee13();
        let again = parse_case(&case.to_json().unwrap()).unwrap();
        assert_eq!(case, again);
    }

    #[test]
    fn sample_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let m = SampleMatrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![0.0, -0.1, 0.2]]).unwrap();
        save_samples(&SampleSet::new(vec![m]).unwrap(), &p).unwrap();
        assert!(matches!(
            load_samples_for(&p, 2),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn empty_sample_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.csv");
        fs::write(&p, "").unwrap();
        assert!(load_samples(&p).is_err());
        fs::write(&p, "t,node,value\n").unwrap();
        assert!(load_samples(&p).is_err());
    }

    #[test]
    fn ragged_and_non_finite_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "t,node,value\n0,0,0.1\n0,1,0.2\n0,1,0.3\n").unwrap();
        assert!(load_samples(&p).is_err());
        fs::write(&p, "t,node,value\n0,0,0.1\n0,1,NaN\n").unwrap();
        assert!(load_samples(&p).is_err());
        fs::write(&p, "t,node,value\n0,0,0.1\n0,1,0.2\n0,0,0.3\n").unwrap();
        assert!(load_samples(&p).is_err());
    }

    #[test]
    fn samples_below_minus_one_are_rejected() {
        let m = SampleMatrix::from_rows(&[vec![-1.5, 0.0]]).unwrap();
        assert!(SampleSet::new(vec![m]).is_err());
    }
}
