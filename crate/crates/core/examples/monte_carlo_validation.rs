//! Simulated success rates next to the analytic values, slot 1.
//!
//! `cargo run --release --example monte_carlo_validation -- 200` sets the
//! number of trials (default 50).

use nbiot_rach::analytic::{rach_success_single_slot, AnalyticParams, GroupSlotInput};
use nbiot_rach::geometry::{CeGroup, CeGroupLayout, GroupCase, NetworkConfig};
use nbiot_rach::simulator::{estimate_success, SimOptions};
use nbiot_rach::traffic::{nonempty_initial, TrafficConfig};
use nbiot_rach::units::db_to_linear;

fn main() -> nbiot_rach::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let params = AnalyticParams::default();
    let traffic = TrafficConfig::default();
    println!("{trials} trials");
    for gamma_db in [-5.0, 0.0, 5.0] {
        let cfg = NetworkConfig { gamma_th: db_to_linear(gamma_db), ..NetworkConfig::default() };
        let layout = CeGroupLayout::three_groups(&cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2)?;
        let counts = estimate_success(&cfg, &layout, &traffic, 1, trials, 7, &SimOptions::default())?;
        for g in CeGroup::ALL {
            let input = GroupSlotInput::for_group(&layout, &cfg, g, nonempty_initial(traffic.mu_new), 1.0);
            let p = rach_success_single_slot(&input, &layout, &params, &cfg)?.p;
            match counts.estimate(1, g) {
                Some(e) => println!(
                    "{gamma_db:>5} dB group {}: analytic {p:.4}  MC {:.4} [{:.4}, {:.4}] from {} attempts",
                    g.index(),
                    e.mean,
                    e.ci_lo,
                    e.ci_hi,
                    e.attempts
                ),
                None => println!("{gamma_db:>5} dB group {}: analytic {p:.4}  MC no attempts", g.index()),
            }
        }
    }
    Ok(())
}
