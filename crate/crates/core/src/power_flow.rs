//! Steady-state AC power flow for radial feeders.
//!
//! The solver is a backward/forward sweep: branch currents are accumulated
//! from the leaves toward the slack, then voltages propagate from the slack
//! outward, repeating until the largest voltage change falls below
//! tolerance. The slack bus is held at exactly 1.0 pu, 0 rad.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::NetworkSpec;

/// Convergence tolerance on the per-iteration voltage change, in pu.
pub const SWEEP_TOLERANCE: f64 = 1e-8;
/// Iteration cap; hitting it reports `converged = false`.
pub const MAX_SWEEP_ITERATIONS: usize = 100;

/// Net complex injections per bus, in pu on the network's power base.
/// Positive injects into the bus; the slack entry is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Injections {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Injections {
    pub fn zeros(n_buses: usize) -> Self {
        Self {
            p: vec![0.0; n_buses],
            q: vec![0.0; n_buses],
        }
    }
}

/// Result of one power-flow solve, indexed like `NetworkSpec::buses`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub v_mag: Vec<f64>,
    pub v_ang: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// A validated radial network prepared for repeated solves.
pub struct RadialSolver {
    /// Buses in breadth-first order from the slack.
    order: Vec<usize>,
    /// Parent bus of each bus (`usize::MAX` for the slack).
    parent: Vec<usize>,
    /// Impedance of the span connecting each bus to its parent, in pu.
    z_pu: Vec<Complex64>,
    n: usize,
    slack: usize,
}

impl RadialSolver {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_buses();
        let index = spec.bus_index();
        let slack = index[&spec.slack_bus];
        let z_base = spec.z_base_ohm();

        let mut adj: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
        for l in &spec.lines {
            let a = index[&l.from];
            let b = index[&l.to];
            let z = Complex64::new(l.resistance_ohm / z_base, l.reactance_ohm / z_base);
            adj[a].push((b, z));
            adj[b].push((a, z));
        }

        let mut order = Vec::with_capacity(n);
        let mut parent = vec![usize::MAX; n];
        let mut z_pu = vec![Complex64::new(0.0, 0.0); n];
        let mut visited = vec![false; n];
        let mut queue = std::collections::VecDeque::from([slack]);
        visited[slack] = true;
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &(j, z) in &adj[i] {
                if !visited[j] {
                    visited[j] = true;
                    parent[j] = i;
                    z_pu[j] = z;
                    queue.push_back(j);
                }
            }
        }

        Ok(Self {
            order,
            parent,
            z_pu,
            n,
            slack,
        })
    }

    /// Runs the sweep. Non-convergence is reported in the solution rather
    /// than as an error so that callers can decide how to treat it.
    pub fn solve(&self, inj: &Injections) -> Result<PfSolution> {
        if inj.p.len() != self.n || inj.q.len() != self.n {
            return Err(Error::Shape(format!(
                "injections sized {}/{}, network has {} buses",
                inj.p.len(),
                inj.q.len(),
                self.n
            )));
        }
        for i in 0..self.n {
            if !inj.p[i].is_finite() || !inj.q[i].is_finite() {
                return Err(Error::Numerical(format!("injection at bus {i} not finite")));
            }
        }

        let mut v = vec![Complex64::new(1.0, 0.0); self.n];
        let mut branch = vec![Complex64::new(0.0, 0.0); self.n];
        let mut converged = false;
        let mut iterations = 0;

        for it in 1..=MAX_SWEEP_ITERATIONS {
            iterations = it;
            self.backward_currents(inj, &v, &mut branch);
            // Forward: voltage drops from the slack outward.
            let mut max_dv: f64 = 0.0;
            for &i in &self.order {
                if i == self.slack {
                    continue;
                }
                let new_v = v[self.parent[i]] - self.z_pu[i] * branch[i];
                max_dv = max_dv.max((new_v - v[i]).norm());
                v[i] = new_v;
            }
            if max_dv < SWEEP_TOLERANCE {
                converged = true;
                break;
            }
        }

        Ok(PfSolution {
            v_mag: v.iter().map(|c| c.norm()).collect(),
            v_ang: v.iter().map(|c| c.arg()).collect(),
            converged,
            iterations,
        })
    }

    /// Current flowing through the span above each bus: the bus's own drawn
    /// current plus everything accumulated from its subtree.
    fn backward_currents(&self, inj: &Injections, v: &[Complex64], branch: &mut [Complex64]) {
        for i in 0..self.n {
            branch[i] = if i == self.slack {
                Complex64::new(0.0, 0.0)
            } else {
                (Complex64::new(-inj.p[i], -inj.q[i]) / v[i]).conj()
            };
        }
        for &i in self.order.iter().rev() {
            if i != self.slack {
                let flow = branch[i];
                branch[self.parent[i]] += flow;
            }
        }
    }

    /// Slack active/reactive injection implied by a solution, in pu.
    pub fn slack_injection(&self, inj: &Injections, sol: &PfSolution) -> (f64, f64) {
        // Recompute converged branch currents from the solved voltages.
        let v: Vec<Complex64> = sol
            .v_mag
            .iter()
            .zip(&sol.v_ang)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect();
        let mut branch = vec![Complex64::new(0.0, 0.0); self.n];
        self.backward_currents(inj, &v, &mut branch);
        let s = v[self.slack] * branch[self.slack].conj();
        (s.re, s.im)
    }
}

/// One-shot convenience wrapper around [`RadialSolver`].
pub fn solve_pf(spec: &NetworkSpec, inj: &Injections) -> Result<PfSolution> {
    RadialSolver::new(spec)?.solve(inj)
}

/// Buses strictly below `v_min` and strictly above `v_max`. Values exactly
/// on a bound count as safe.
pub fn violation_count(sol: &PfSolution, spec: &NetworkSpec) -> Result<(usize, usize)> {
    if !sol.converged {
        return Err(Error::NotConverged);
    }
    let under = sol.v_mag.iter().filter(|&&v| v < spec.v_min_pu).count();
    let over = sol.v_mag.iter().filter(|&&v| v > spec.v_max_pu).count();
    Ok((under, over))
}
