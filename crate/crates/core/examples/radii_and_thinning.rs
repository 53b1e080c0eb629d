//! Group radii and thinning probabilities for the default network and for a
//! variant whose downlink noise makes case 1 feasible.

use nbiot_rach::geometry::{compute_radii, thinning_probabilities, GroupCase, NetworkConfig};
use nbiot_rach::units::dbm_to_watts;

fn show(label: &str, cfg: &NetworkConfig) {
    let radii = compute_radii(cfg);
    println!("{label}: D_0 = {:.1} m, D_1 = {:.1} m, D_2 = {:.1} m", radii.d0, radii.d1, radii.d2);
    for case in [GroupCase::Case1, GroupCase::Case2] {
        match thinning_probabilities(cfg.lambda_b, &radii, case) {
            Ok(g) => println!("  {}: g = ({:.6}, {:.6}, {:.6})", case.name(), g[0], g[1], g[2]),
            Err(e) => println!("  {}: {e}", case.name()),
        }
    }
}

fn main() {
    let cfg = NetworkConfig::default();
    show("defaults", &cfg);

    let noisy = NetworkConfig { omega: dbm_to_watts(-116.4), ..cfg };
    show("omega = -116.4 dBm", &noisy);
}
