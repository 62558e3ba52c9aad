//! The control environment: observations, joint inverter actions through
//! the power flow, and the three-term reward.
//!
//! One step at time `t` dispatches every inverter from the action vector,
//! solves the controlled power flow, scores it, and hands back the state at
//! `t + 1`. State voltages are taken from the *uncontrolled* power flow by
//! default (loads and solar are exogenous, so transitions do not depend on
//! the action); `StateVoltage::HeldAction` switches to voltages computed
//! with the current action held, which makes the process a proper MDP.

use crate::error::{Error, Result};
use crate::grid::{InverterSpec, NetworkSpec, TimeSeriesSet};
use crate::inverter::{dispatch_all, InverterDispatch};
use crate::power_flow::{Injections, PfSolution, RadialSolver};

/// Scaling factors of the three reward terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 1000.0,
            beta: 5.0,
            omega: 25.0,
        }
    }
}

/// Linear penalty slope applied outside the safe voltage band, per pu.
pub const DEFAULT_FV_SLOPE: f64 = 1.0;

/// Voltage-term floor used when the controlled power flow fails to converge.
pub const DIVERGENCE_RV_FLOOR: f64 = -10.0;

/// Which power flow supplies the voltages observed in states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateVoltage {
    /// Voltages from the zero-action power flow (default).
    Uncontrolled,
    /// Voltages with the current action vector held over to `t + 1`.
    HeldAction,
}

/// Observation at one time step. Raw values; [`EnvState::observation`]
/// produces the normalized vector the networks consume.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub load_p_pu: Vec<f64>,
    pub load_q_pu: Vec<f64>,
    pub pv_p_pu: Vec<f64>,
    pub v_mag_pu: Vec<f64>,
    pub t_index: usize,
}

impl EnvState {
    /// Observation length `n = |loads| + |loads| + |pvs| + |buses|`.
    pub fn len(&self) -> usize {
        self.load_p_pu.len() + self.load_q_pu.len() + self.pv_p_pu.len() + self.v_mag_pu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened, normalized observation: powers in pu, voltages mapped to
    /// `(v - 1) * 10` so every entry has comparable scale.
    pub fn observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.len());
        obs.extend_from_slice(&self.load_p_pu);
        obs.extend_from_slice(&self.load_q_pu);
        obs.extend_from_slice(&self.pv_p_pu);
        obs.extend(self.v_mag_pu.iter().map(|v| (v - 1.0) * 10.0));
        obs
    }
}

/// The three reward terms, their weights, and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub r_v: f64,
    pub r_a: f64,
    pub r_f: f64,
    pub total: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
}

impl RewardBreakdown {
    pub fn compose(r_v: f64, r_a: f64, r_f: f64, w: RewardWeights) -> Self {
        Self {
            r_v,
            r_a,
            r_f,
            total: w.alpha * r_v + w.beta * r_a + w.omega * r_f,
            alpha: w.alpha,
            beta: w.beta,
            omega: w.omega,
        }
    }
}

/// Everything produced by one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStepResult {
    pub next_state: EnvState,
    pub reward: RewardBreakdown,
    pub dispatches: Vec<InverterDispatch>,
    pub pf: PfSolution,
}

/// Voltage deviation penalty `-sum f_v(V_i)`: quadratic around 1 pu inside
/// the safe band, plus a linear term growing with the excursion outside it.
pub fn reward_voltage(v_mag: &[f64], spec: &NetworkSpec, slope: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &v in v_mag {
        if !v.is_finite() {
            return Err(Error::Numerical("NaN voltage in reward_voltage".into()));
        }
        let dev = v - 1.0;
        let mut f = dev * dev;
        if v < spec.v_min_pu {
            f += slope * (spec.v_min_pu - v);
        } else if v > spec.v_max_pu {
            f += slope * (v - spec.v_max_pu);
        }
        sum += f;
    }
    Ok(-sum)
}

/// Action magnitude penalty: the negative L1 norm of the action vector.
pub fn reward_action(actions: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &a in actions {
        if !(-1.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("action {a} outside [-1, 1]")));
        }
        sum += a.abs();
    }
    Ok(-sum)
}

/// Fairness penalty: `-sum |mean(c) - c_i|` over per-inverter curtailments,
/// expressed in pu of the power base so the weight stays scale-free.
pub fn reward_fairness(curtail_pu: &[f64]) -> Result<f64> {
    if curtail_pu.is_empty() {
        return Err(Error::Domain("fairness reward needs at least one value".into()));
    }
    for &c in curtail_pu {
        if !(c >= 0.0) {
            return Err(Error::Domain(format!("curtailment {c} must be >= 0")));
        }
    }
    let mean = curtail_pu.iter().sum::<f64>() / curtail_pu.len() as f64;
    Ok(-curtail_pu.iter().map(|c| (mean - c).abs()).sum::<f64>())
}

/// Immutable simulation bundle: network, series, inverter fleet, reward
/// configuration, and the precomputed uncontrolled power flow per step.
pub struct Env {
    spec: NetworkSpec,
    series: TimeSeriesSet,
    inverters: Vec<InverterSpec>,
    weights: RewardWeights,
    fv_slope: f64,
    state_voltage: StateVoltage,
    solver: RadialSolver,
    uncontrolled: Vec<PfSolution>,
    load_bus: Vec<usize>,
    pv_bus: Vec<usize>,
}

impl Env {
    pub fn new(
        spec: NetworkSpec,
        series: TimeSeriesSet,
        inverters: Vec<InverterSpec>,
        weights: RewardWeights,
        fv_slope: f64,
        state_voltage: StateVoltage,
    ) -> Result<Self> {
        spec.validate()?;
        series.validate()?;
        if series.load_p_w.len() != spec.n_loads() || series.pv_p_avail_w.len() != spec.n_pvs() {
            return Err(Error::Shape(format!(
                "series rows ({} loads, {} pvs) do not match network ({}, {})",
                series.load_p_w.len(),
                series.pv_p_avail_w.len(),
                spec.n_loads(),
                spec.n_pvs()
            )));
        }
        if inverters.len() != spec.n_pvs()
            || inverters
                .iter()
                .zip(&spec.pvs)
                .any(|(inv, att)| inv.gen_id != att.id)
        {
            return Err(Error::Shape(
                "inverter list does not match the network's pv attachments".into(),
            ));
        }
        let solver = RadialSolver::new(&spec)?;
        let index = spec.bus_index();
        let load_bus: Vec<usize> = spec.loads.iter().map(|a| index[&a.bus]).collect();
        let pv_bus: Vec<usize> = spec.pvs.iter().map(|a| index[&a.bus]).collect();

        let mut env = Self {
            spec,
            series,
            inverters,
            weights,
            fv_slope,
            state_voltage,
            solver,
            uncontrolled: Vec::new(),
            load_bus,
            pv_bus,
        };
        env.uncontrolled = (0..env.series.n_steps)
            .map(|t| {
                let inj = env.uncontrolled_injections(t);
                env.solver.solve(&inj)
            })
            .collect::<Result<_>>()?;
        Ok(env)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn series(&self) -> &TimeSeriesSet {
        &self.series
    }

    pub fn inverters(&self) -> &[InverterSpec] {
        &self.inverters
    }

    pub fn weights(&self) -> RewardWeights {
        self.weights
    }

    pub fn n_steps(&self) -> usize {
        self.series.n_steps
    }

    /// Observation vector length.
    pub fn observation_len(&self) -> usize {
        2 * self.spec.n_loads() + self.spec.n_pvs() + self.spec.n_buses()
    }

    /// Action vector length (one entry per inverter).
    pub fn action_len(&self) -> usize {
        self.inverters.len()
    }

    fn pv_avail_w(&self, t: usize) -> Vec<f64> {
        self.series.pv_p_avail_w.iter().map(|row| row[t]).collect()
    }

    fn uncontrolled_injections(&self, t: usize) -> Injections {
        let mut inj = Injections::zeros(self.spec.n_buses());
        let base = self.spec.base_power_va;
        for (i, &bus) in self.load_bus.iter().enumerate() {
            inj.p[bus] -= self.series.load_p_w[i][t] / base;
            inj.q[bus] -= self.series.load_q_var[i][t] / base;
        }
        for (i, &bus) in self.pv_bus.iter().enumerate() {
            inj.p[bus] += self.series.pv_p_avail_w[i][t] / base;
        }
        inj
    }

    fn controlled_injections(&self, t: usize, dispatches: &[InverterDispatch]) -> Injections {
        let mut inj = Injections::zeros(self.spec.n_buses());
        let base = self.spec.base_power_va;
        for (i, &bus) in self.load_bus.iter().enumerate() {
            inj.p[bus] -= self.series.load_p_w[i][t] / base;
            inj.q[bus] -= self.series.load_q_var[i][t] / base;
        }
        for (d, &bus) in dispatches.iter().zip(&self.pv_bus) {
            inj.p[bus] += d.p_out_w / base;
            inj.q[bus] += d.q_cmd_var / base;
        }
        inj
    }

    fn state_from(&self, t: usize, pf: &PfSolution) -> Result<EnvState> {
        if !pf.converged {
            return Err(Error::NotConverged);
        }
        let base = self.spec.base_power_va;
        Ok(EnvState {
            load_p_pu: self
                .series
                .load_p_w
                .iter()
                .map(|row| row[t] / base)
                .collect(),
            load_q_pu: self
                .series
                .load_q_var
                .iter()
                .map(|row| row[t] / base)
                .collect(),
            pv_p_pu: self
                .series
                .pv_p_avail_w
                .iter()
                .map(|row| row[t] / base)
                .collect(),
            v_mag_pu: pf.v_mag.clone(),
            t_index: t,
        })
    }

    /// State at step `t`, voltages from the uncontrolled power flow.
    pub fn build_state(&self, t: usize) -> Result<EnvState> {
        if t >= self.series.n_steps {
            return Err(Error::Index(format!(
                "t = {t} beyond series of {} steps",
                self.series.n_steps
            )));
        }
        self.state_from(t, &self.uncontrolled[t])
    }

    /// Normalized observation at step `t`.
    pub fn observation(&self, t: usize) -> Result<Vec<f64>> {
        Ok(self.build_state(t)?.observation())
    }

    /// The uncontrolled power-flow solution backing `build_state(t)`.
    pub fn uncontrolled_pf(&self, t: usize) -> Result<&PfSolution> {
        self.uncontrolled.get(t).ok_or_else(|| {
            Error::Index(format!("t = {t} beyond series of {} steps", self.series.n_steps))
        })
    }

    /// Applies `actions` at step `t`: inverter dispatch, controlled power
    /// flow, reward, and the successor state at `t + 1`.
    ///
    /// A diverged controlled power flow is not fatal: the voltage term is
    /// floored at [`DIVERGENCE_RV_FLOOR`] and the step is reported with
    /// `pf.converged = false`.
    pub fn step(&self, t: usize, actions: &[f64]) -> Result<EnvStepResult> {
        if t + 1 >= self.series.n_steps {
            return Err(Error::Index(format!(
                "step at t = {t} needs a successor; series has {} steps",
                self.series.n_steps
            )));
        }
        if actions.len() != self.action_len() {
            return Err(Error::Shape(format!(
                "{} actions for {} inverters",
                actions.len(),
                self.action_len()
            )));
        }
        let dispatches = dispatch_all(&self.inverters, &self.pv_avail_w(t), actions)?;
        let inj = self.controlled_injections(t, &dispatches);
        let pf = self.solver.solve(&inj)?;

        let r_v = if pf.converged {
            reward_voltage(&pf.v_mag, &self.spec, self.fv_slope)?
        } else {
            DIVERGENCE_RV_FLOOR
        };
        let r_a = reward_action(actions)?;
        let base = self.spec.base_power_va;
        let curtail_pu: Vec<f64> = dispatches.iter().map(|d| d.curtail_w / base).collect();
        let r_f = if curtail_pu.is_empty() {
            0.0
        } else {
            reward_fairness(&curtail_pu)?
        };
        let reward = RewardBreakdown::compose(r_v, r_a, r_f, self.weights);

        let next_state = match self.state_voltage {
            StateVoltage::Uncontrolled => self.build_state(t + 1)?,
            StateVoltage::HeldAction => {
                let held = dispatch_all(&self.inverters, &self.pv_avail_w(t + 1), actions)?;
                let pf_next = self.solver.solve(&self.controlled_injections(t + 1, &held))?;
                self.state_from(t + 1, &pf_next)?
            }
        };

        Ok(EnvStepResult {
            next_state,
            reward,
            dispatches,
            pf,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::generate_feeder;

    fn desk_env(customers: usize, days: usize, seed: u64) -> Env {
        let (spec, series, inverters) = generate_feeder(customers, days, seed).unwrap();
        Env::new(
            spec,
            series,
            inverters,
            RewardWeights::default(),
            DEFAULT_FV_SLOPE,
            StateVoltage::Uncontrolled,
        )
        .unwrap()
    }

    #[test]
    fn observation_length_follows_the_counting_rule() {
        let env = desk_env(1, 2, 7);
        // 1 load p + 1 load q + 1 pv + 2 buses.
        assert_eq!(env.observation_len(), 5);
        let state = env.build_state(0).unwrap();
        assert_eq!(state.len(), 5);
        assert_eq!(state.observation().len(), 5);
    }

    #[test]
    fn midnight_is_benign_and_peak_sun_overvolts() {
        let env = desk_env(5, 30, 3);
        let spec = env.spec();

        let midnight = env.build_state(0).unwrap();
        for &v in &midnight.v_mag_pu {
            assert!(v >= spec.v_min_pu && v <= spec.v_max_pu, "midnight v {v}");
        }

        // Step with the highest total available PV production.
        let series = env.series();
        let peak_t = (0..series.n_steps)
            .max_by(|&a, &b| {
                let ta: f64 = series.pv_p_avail_w.iter().map(|r| r[a]).sum();
                let tb: f64 = series.pv_p_avail_w.iter().map(|r| r[b]).sum();
                ta.total_cmp(&tb)
            })
            .unwrap();
        let sunny = env.build_state(peak_t).unwrap();
        assert!(
            sunny.v_mag_pu.iter().any(|&v| v > spec.v_max_pu),
            "expected an over-voltage at the sunniest step"
        );
    }

    #[test]
    fn voltage_reward_piecewise_values() {
        let env = desk_env(1, 1, 1);
        let spec = env.spec();
        assert_eq!(reward_voltage(&[1.0, 1.0], spec, 1.0).unwrap(), 0.0);
        let r = reward_voltage(&[1.05], spec, 1.0).unwrap();
        assert!((r + 0.0025).abs() < 1e-15);
        let r = reward_voltage(&[1.07], spec, 1.0).unwrap();
        assert!((r + 0.0249).abs() < 1e-15);
        let r = reward_voltage(&[0.93], spec, 1.0).unwrap();
        assert!((r + (0.0049 + 0.02)).abs() < 1e-15);
        assert!(reward_voltage(&[f64::NAN], spec, 1.0).is_err());
    }

    #[test]
    fn action_reward_is_negative_l1() {
        assert_eq!(reward_action(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(reward_action(&[0.5, -0.5]).unwrap(), -1.0);
        assert_eq!(reward_action(&vec![-1.0; 20]).unwrap(), -20.0);
        assert!(matches!(reward_action(&[1.2]), Err(Error::Domain(_))));
    }

    #[test]
    fn fairness_reward_definition() {
        assert_eq!(reward_fairness(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(reward_fairness(&[1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(reward_fairness(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(reward_fairness(&[]), Err(Error::Domain(_))));
        assert!(matches!(reward_fairness(&[-0.1]), Err(Error::Domain(_))));
    }

    #[test]
    fn fairness_is_permutation_invariant_and_translation_covariant() {
        let a = [0.4, 0.0, 0.1, 0.9];
        let b = [0.9, 0.4, 0.0, 0.1];
        assert_eq!(reward_fairness(&a).unwrap(), reward_fairness(&b).unwrap());
        let shifted: Vec<f64> = a.iter().map(|c| c + 0.5).collect();
        assert!((reward_fairness(&a).unwrap() - reward_fairness(&shifted).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn zero_actions_leave_only_the_voltage_term() {
        let env = desk_env(3, 4, 5);
        let result = env.step(10, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(result.reward.r_a, 0.0);
        assert_eq!(result.reward.r_f, 0.0);
        assert_eq!(result.reward.total, env.weights().alpha * result.reward.r_v);
        assert_eq!(result.dispatches.len(), 3);
    }

    #[test]
    fn total_recomposes_bit_exactly() {
        let env = desk_env(4, 6, 2);
        for t in [0, 33, 48, 300] {
            let r = env.step(t, &[0.3, -0.5, 0.8, -0.1]).unwrap().reward;
            let recomposed = r.alpha * r.r_v + r.beta * r.r_a + r.omega * r.r_f;
            assert_eq!(r.total.to_bits(), recomposed.to_bits());
        }
    }

    #[test]
    fn absorbing_reactive_power_improves_an_overvoltage_step() {
        let env = desk_env(5, 30, 3);
        let series = env.series();
        let peak_t = (0..series.n_steps - 1)
            .max_by(|&a, &b| {
                let ta: f64 = series.pv_p_avail_w.iter().map(|r| r[a]).sum();
                let tb: f64 = series.pv_p_avail_w.iter().map(|r| r[b]).sum();
                ta.total_cmp(&tb)
            })
            .unwrap();
        let idle = env.step(peak_t, &[0.0; 5]).unwrap();
        let absorbing = env.step(peak_t, &[-0.6; 5]).unwrap();
        assert!(
            absorbing.reward.r_v > idle.reward.r_v,
            "absorbing {} vs idle {}",
            absorbing.reward.r_v,
            idle.reward.r_v
        );
    }

    #[test]
    fn step_is_deterministic() {
        let env = desk_env(3, 3, 9);
        let a = env.step(20, &[0.2, -0.7, 0.05]).unwrap();
        let b = env.step(20, &[0.2, -0.7, 0.05]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weight_dominance_on_violating_steps() {
        // Any violation of >= 0.01 pu forces |alpha * r_v| >= 10 at default
        // weights: f_v >= (band + 0.01)^2 + slope * 0.01 > 0.01.
        let env = desk_env(2, 1, 1);
        let spec = env.spec();
        let w = RewardWeights::default();
        for excess in [0.01, 0.02, 0.05, 0.1] {
            for v in [spec.v_max_pu + excess, spec.v_min_pu - excess] {
                let r_v = reward_voltage(&[v], spec, DEFAULT_FV_SLOPE).unwrap();
                assert!(
                    (w.alpha * r_v).abs() >= 10.0,
                    "v = {v} gives weighted term {}",
                    w.alpha * r_v
                );
            }
        }
    }

    #[test]
    fn last_step_has_no_successor() {
        let env = desk_env(1, 1, 1);
        let last = env.n_steps() - 1;
        assert!(matches!(
            env.step(last, &[0.0]),
            Err(Error::Index(_))
        ));
        // build_state still works on the final step.
        assert!(env.build_state(last).is_ok());
        assert!(env.build_state(last + 1).is_err());
    }

    #[test]
    fn held_action_mode_changes_next_state_voltages() {
        let (spec, series, inverters) = generate_feeder(4, 10, 6).unwrap();
        let uncontrolled = Env::new(
            spec.clone(),
            series.clone(),
            inverters.clone(),
            RewardWeights::default(),
            DEFAULT_FV_SLOPE,
            StateVoltage::Uncontrolled,
        )
        .unwrap();
        let held = Env::new(
            spec,
            series,
            inverters,
            RewardWeights::default(),
            DEFAULT_FV_SLOPE,
            StateVoltage::HeldAction,
        )
        .unwrap();
        // Noon step with real production so the action matters.
        let t = 48;
        let actions = [-0.9, -0.9, -0.9, -0.9];
        let a = uncontrolled.step(t, &actions).unwrap();
        let b = held.step(t, &actions).unwrap();
        assert_eq!(a.reward, b.reward);
        assert_ne!(a.next_state.v_mag_pu, b.next_state.v_mag_pu);
    }
}
