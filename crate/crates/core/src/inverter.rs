//! Smart-inverter dispatch under the circular capability constraint.
//!
//! The agent commands each inverter through one scalar action in [-1, 1],
//! which fixes the reactive setpoint `q = s_rated * action`. If the
//! available solar power no longer fits inside the capability circle
//! `p^2 + q^2 <= s_rated^2`, active power is curtailed down to the circle.

use crate::error::{Error, Result};
use crate::grid::{GenId, InverterSpec};

/// Relative slack on the capability check, absorbing squaring error.
pub const CAPABILITY_EPS: f64 = 1e-9;

/// Operating point of one inverter at one step. All power in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct InverterDispatch {
    pub gen_id: GenId,
    /// Solar power available before control, W.
    pub p_avail_w: f64,
    /// Commanded reactive power, var. Positive injects.
    pub q_cmd_var: f64,
    /// Delivered active power after any curtailment, W.
    pub p_out_w: f64,
    /// Curtailed active power, W. `p_out = p_avail - curtail`.
    pub curtail_w: f64,
}

/// Applies one action to one inverter.
pub fn apply_action(spec: &InverterSpec, p_avail_w: f64, action: f64) -> Result<InverterDispatch> {
    if !(-1.0..=1.0).contains(&action) {
        return Err(Error::Domain(format!(
            "action {action} outside [-1, 1] for {}",
            spec.gen_id
        )));
    }
    if !(p_avail_w >= 0.0) {
        return Err(Error::Domain(format!(
            "p_avail {p_avail_w} must be >= 0 for {}",
            spec.gen_id
        )));
    }
    let s = spec.s_rated_va;
    let q = s * action;
    let (p_out, curtail) = if p_avail_w * p_avail_w + q * q <= s * s {
        (p_avail_w, 0.0)
    } else {
        let p_out = (s * s - q * q).max(0.0).sqrt();
        (p_out, p_avail_w - p_out)
    };
    Ok(InverterDispatch {
        gen_id: spec.gen_id.clone(),
        p_avail_w,
        q_cmd_var: q,
        p_out_w: p_out,
        curtail_w: curtail,
    })
}

/// Element-wise [`apply_action`] over a fleet; order preserved.
pub fn dispatch_all(
    specs: &[InverterSpec],
    p_avail_w: &[f64],
    actions: &[f64],
) -> Result<Vec<InverterDispatch>> {
    if specs.len() != p_avail_w.len() || specs.len() != actions.len() {
        return Err(Error::Shape(format!(
            "dispatch_all got {} inverters, {} availabilities, {} actions",
            specs.len(),
            p_avail_w.len(),
            actions.len()
        )));
    }
    specs
        .iter()
        .zip(p_avail_w.iter().zip(actions))
        .map(|(s, (&p, &a))| apply_action(s, p, a))
        .collect()
}
