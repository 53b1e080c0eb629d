//! Single-slot preamble and RACH success probabilities of each group over a
//! range of SINR thresholds.

use nbiot_rach::analytic::{rach_success_single_slot, AnalyticParams, GroupSlotInput};
use nbiot_rach::geometry::{CeGroup, CeGroupLayout, GroupCase, NetworkConfig};
use nbiot_rach::traffic::nonempty_initial;
use nbiot_rach::units::db_to_linear;

fn main() -> nbiot_rach::Result<()> {
    let params = AnalyticParams::default();
    let a = nonempty_initial(0.1);
    println!("{:>8} {:>6} {:>14} {:>14} {:>6}", "gamma", "group", "theta", "P", "terms");
    for gamma_db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
        let cfg = NetworkConfig { gamma_th: db_to_linear(gamma_db), ..NetworkConfig::default() };
        let layout = CeGroupLayout::three_groups(&cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2)?;
        for g in CeGroup::ALL {
            let input = GroupSlotInput::for_group(&layout, &cfg, g, a, 1.0);
            let s = rach_success_single_slot(&input, &layout, &params, &cfg)?;
            println!("{gamma_db:>8} {:>6} {:>14.6e} {:>14.6e} {:>6}", g.index(), s.theta, s.p, s.terms);
        }
    }
    Ok(())
}
