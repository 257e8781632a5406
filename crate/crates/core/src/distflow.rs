//! Linearized DistFlow on a radial network, solved in closed form.
//!
//! Flows and injections are in MW/MVar; impedances are per-unit on the case
//! MVA base, so voltage sensitivities carry a `1 / base_mva` factor.

use crate::netdata::NetworkModel;

#[derive(Debug, Clone)]
pub struct FlowSensitivity {
    n_buses: usize,
    /// Child bus of each branch, in branch order.
    pub branches: Vec<usize>,
    /// `downstream[j]`: buses in the subtree rooted at j, inclusive.
    pub downstream: Vec<Vec<usize>>,
    /// Branch × bus: P_b = Σ_k a_p[b][k] p_k (same matrix maps q to Q).
    pub a_p: Vec<Vec<f64>>,
    /// Bus × bus squared-voltage sensitivity to active injections.
    pub u_p: Vec<Vec<f64>>,
    /// Bus × bus squared-voltage sensitivity to reactive injections.
    pub u_q: Vec<Vec<f64>>,
    pub u0: f64,
    branch_of_bus: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Active flow per branch, MW.
    pub p: Vec<f64>,
    /// Reactive flow per branch, MVar.
    pub q: Vec<f64>,
    /// Squared voltage per bus, p.u.².
    pub u: Vec<f64>,
    /// Net power drawn at the substation, MW.
    pub substation: f64,
}

pub fn build_sensitivity(network: &NetworkModel) -> FlowSensitivity {
    let n = network.n_buses();
    let parent: Vec<Option<usize>> = network.buses.iter().map(|b| b.parent).collect();

    let mut downstream: Vec<Vec<usize>> = vec![Vec::new(); n];
    // ancestors(k) includes k itself
    for k in 0..n {
        let mut cur = Some(k);
        while let Some(c) = cur {
            downstream[c].push(k);
            cur = parent[c];
        }
    }
    downstream.iter_mut().for_each(|d| d.sort_unstable());

    let branches: Vec<usize> = (0..n).filter(|&j| parent[j].is_some()).collect();
    let mut branch_of_bus = vec![None; n];
    for (b, &j) in branches.iter().enumerate() {
        branch_of_bus[j] = Some(b);
    }

    let mut a_p = vec![vec![0.0; n]; branches.len()];
    for (b, &j) in branches.iter().enumerate() {
        for &k in &downstream[j] {
            a_p[b][k] = -1.0;
        }
    }

    // U_j = U_0 + 2/base Σ_{branch (a,b) on path(0→j)} Σ_{k ∈ down(b)} (r_ab p_k + x_ab q_k)
    let base = network.base_mva;
    let mut u_p = vec![vec![0.0; n]; n];
    let mut u_q = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut cur = j;
        while let Some(par) = parent[cur] {
            let bus = &network.buses[cur];
            for &k in &downstream[cur] {
                u_p[j][k] += 2.0 * bus.r / base;
                u_q[j][k] += 2.0 * bus.x / base;
            }
            cur = par;
        }
    }

    FlowSensitivity {
        n_buses: n,
        branches,
        downstream,
        a_p,
        u_p,
        u_q,
        u0: network.slack_voltage_sq,
        branch_of_bus,
    }
}

impl FlowSensitivity {
    pub fn n_buses(&self) -> usize {
        self.n_buses
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn branch_of_bus(&self, bus: usize) -> Option<usize> {
        self.branch_of_bus[bus]
    }

    /// Evaluates flows and voltages for nodal injections (positive = generation).
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> FlowState {
        assert_eq!(p.len(), self.n_buses);
        assert_eq!(q.len(), self.n_buses);
        let dot = |row: &[f64], v: &[f64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let pf: Vec<f64> = self.a_p.iter().map(|r| dot(r, p)).collect();
        let qf: Vec<f64> = self.a_p.iter().map(|r| dot(r, q)).collect();
        let u = (0..self.n_buses)
            .map(|j| self.u0 + dot(&self.u_p[j], p) + dot(&self.u_q[j], q))
            .collect();
        FlowState {
            p: pf,
            q: qf,
            u,
            substation: -p.iter().sum::<f64>(),
        }
    }
}

/// Apparent-power cap on one branch at one timestep: P_aux² + Q_aux² ≤ s_max².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocCap {
    pub branch: usize,
    pub t: usize,
    pub s_max: f64,
}

impl SocCap {
    pub fn contains(&self, p_aux: f64, q_aux: f64, tol: f64) -> bool {
        p_aux >= -tol && q_aux >= -tol && p_aux.hypot(q_aux) <= self.s_max + tol
    }
}

pub fn soc_caps(network: &NetworkModel, sens: &FlowSensitivity, horizon: usize) -> Vec<SocCap> {
    let mut caps = Vec::with_capacity(horizon * sens.n_branches());
    for t in 0..horizon {
        for (b, &j) in sens.branches.iter().enumerate() {
            caps.push(SocCap { branch: b, t, s_max: network.buses[j].s_max });
        }
    }
    caps
}
