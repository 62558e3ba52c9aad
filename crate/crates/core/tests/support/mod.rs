//! Shared helpers for the integration suites: an independent Newton-Raphson
//! power-flow reference and random radial network generation.

pub mod newton;

use rand::Rng;
use voltfair_core::grid::{BusId, Line, NetworkSpec};
use voltfair_core::power_flow::Injections;

/// Random radial tree with `n_buses` total buses (slack plus n-1), per-unit
/// line impedances drawn from ranges that keep the loading well away from
/// voltage collapse, on a 400 V / 400 kVA base.
pub fn random_radial_network(n_buses: usize, rng: &mut impl Rng) -> NetworkSpec {
    assert!(n_buses >= 2);
    let z_base = 400.0 * 400.0 / 400_000.0;
    let buses: Vec<BusId> = (0..n_buses).map(|i| BusId(format!("n{i}"))).collect();
    let mut lines = Vec::new();
    for i in 1..n_buses {
        let parent = rng.gen_range(0..i);
        lines.push(Line {
            from: buses[parent].clone(),
            to: buses[i].clone(),
            resistance_ohm: rng.gen_range(0.002..0.02) * z_base,
            reactance_ohm: rng.gen_range(0.001..0.008) * z_base,
        });
    }
    NetworkSpec {
        buses,
        lines,
        slack_bus: BusId("n0".to_string()),
        transformer_rating_va: 400_000.0,
        base_voltage_v: 400.0,
        base_power_va: 400_000.0,
        loads: Vec::new(),
        pvs: Vec::new(),
        v_min_pu: 0.95,
        v_max_pu: 1.05,
    }
}

/// Random injections in [-0.2, 0.2] pu on every non-slack bus.
pub fn random_injections(n_buses: usize, rng: &mut impl Rng) -> Injections {
    let mut inj = Injections::zeros(n_buses);
    for i in 1..n_buses {
        inj.p[i] = rng.gen_range(-0.2..0.2);
        inj.q[i] = rng.gen_range(-0.2..0.2);
    }
    inj
}
