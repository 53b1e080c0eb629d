//! Queue evolution over ten slots under the four access schemes.

use nbiot_rach::analytic::AnalyticParams;
use nbiot_rach::geometry::{CeGroup, CeGroupLayout, GroupCase, NetworkConfig};
use nbiot_rach::traffic::{run_multislot, Scheme, TrafficConfig};
use nbiot_rach::units::db_to_linear;

fn main() -> nbiot_rach::Result<()> {
    let cfg = NetworkConfig { gamma_th: db_to_linear(0.0), ..NetworkConfig::default() };
    let layout = CeGroupLayout::three_groups(&cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2)?;
    let params = AnalyticParams::default();
    let traffic = TrafficConfig { horizon: 10, ..TrafficConfig::default() };

    for scheme in Scheme::ALL {
        let trace = run_multislot(&cfg, &layout, &traffic.with_scheme(scheme), &params)?;
        println!("{scheme} (mu clamps, R clamps) = {:?}", trace.clamp_counts());
        for g in CeGroup::ALL {
            let t = trace.group(g).unwrap();
            let p: Vec<String> = t.p.iter().map(|p| format!("{p:.4}")).collect();
            println!("  group {} P: {}", g.index(), p.join(" "));
            let a: Vec<String> = t.a.iter().map(|a| format!("{a:.4}")).collect();
            println!("  group {} A: {}", g.index(), a.join(" "));
        }
    }
    Ok(())
}
