//! Same-cell contender counts seen by simulated devices against the
//! Voronoi-cell model.

use nbiot_rach::analytic::{interferer_count_pmf, VORONOI_C};
use nbiot_rach::geometry::{CeGroup, CeGroupLayout, GroupCase, NetworkConfig};
use nbiot_rach::simulator::{empirical_interferer_pmf, total_variation};

fn main() -> nbiot_rach::Result<()> {
    let cfg = NetworkConfig::default();
    let layout = CeGroupLayout::three_groups(&cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2)?;
    let activity = 0.5;
    let hist = empirical_interferer_pmf(&cfg, &layout, [activity; 3], 100, 3)?;
    for g in CeGroup::ALL {
        let mu = activity * layout.per_preamble_density(&cfg, g) / cfg.lambda_b;
        let model: Vec<f64> = (0..200).map(|n| interferer_count_pmf(n, mu, VORONOI_C)).collect();
        println!("group {} (mu = {mu:.4}), TV = {:.4}", g.index(), total_variation(&hist[g.index()], &model));
        for n in 0..hist[g.index()].len().min(6) {
            println!("  n = {n}: simulated {:.4}  model {:.4}", hist[g.index()][n], model[n]);
        }
    }
    Ok(())
}
