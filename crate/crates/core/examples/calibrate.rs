//! Scratch calibration probe for the desk-scale scenarios.
//!
//! Usage: calibrate <episodes> <hidden> <lr_critic> <lr_actor> <gamma> <scenarios> <seeds>
//! e.g.   calibrate 30 48 1e-3 3e-4 0.99 bcd 123

use voltfair_core::runner::{run_scenario, RunConfig, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let episodes: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(30);
    let hidden: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(48);
    let lr_critic: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let lr_actor: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3e-4);
    let gamma: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.99);
    let scenarios: Vec<Scenario> = args
        .get(5)
        .map(String::as_str)
        .unwrap_or("abcd")
        .chars()
        .map(|c| c.to_string().parse().unwrap())
        .collect();
    let seeds: Vec<u64> = args
        .get(6)
        .map(String::as_str)
        .unwrap_or("123")
        .chars()
        .map(|c| c.to_digit(10).unwrap() as u64)
        .collect();
    let noise_start: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let noise_end: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(0.05);

    for &seed in &seeds {
        for &scenario in &scenarios {
            let t0 = std::time::Instant::now();
            let cfg = RunConfig {
                scenario,
                customers: 5,
                days: 30,
                episodes,
                seed,
                gamma,
                hidden: vec![hidden, hidden],
                lr_actor,
                lr_critic,
                noise_sigma_start: noise_start,
                noise_sigma_end: noise_end,
                fv_slope: std::env::var("FV_SLOPE").ok().and_then(|s| s.parse().ok()).unwrap_or(1.0),
                out_dir: std::env::temp_dir().join(format!(
                    "voltfair-cal-{}-{}",
                    scenario.label(),
                    seed
                )),
                ..RunConfig::default()
            };
            let out = run_scenario(&cfg).expect("run failed");
            let s = &out.summary;
            let first_ret: f64 = out
                .training_log
                .as_ref()
                .map(|l| l.episodes.first().unwrap().ret)
                .unwrap_or(0.0);
            let last_ret: f64 = out
                .training_log
                .as_ref()
                .map(|l| l.episodes.last().unwrap().ret)
                .unwrap_or(0.0);
            println!(
                "seed {seed} scen {} | under {:4} over {:4} | curt {:8.4} MWh / {:8.4} | vmin {:.4} vmax {:.4} | gini med {} | ret {:9.0} -> {:9.0} | {:5.1}s",
                scenario.label(),
                s.n_under,
                s.n_over,
                s.curtailed_mwh,
                s.total_pv_mwh,
                s.v_min_seen,
                s.v_max_seen,
                s.median_gini().map(|g| format!("{g:.3}")).unwrap_or("-".into()),
                first_ret,
                last_ret,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
