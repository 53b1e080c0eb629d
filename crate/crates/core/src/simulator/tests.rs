use super::*;
use crate::geometry::{GroupCase, Point};
use crate::traffic::Scheme;
use crate::units::db_to_linear;

fn small_cfg(gamma_db: f64) -> NetworkConfig {
    NetworkConfig { area_radius: 10_000.0, gamma_th: db_to_linear(gamma_db), ..NetworkConfig::default() }
}

fn layout(cfg: &NetworkConfig) -> CeGroupLayout {
    CeGroupLayout::three_groups(cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, &[99])
}

#[test]
fn lone_device_in_clean_channel_always_succeeds() {
    let cfg = NetworkConfig { sigma2: 1e-40, ..small_cfg(10.0) };
    let lay = layout(&cfg);
    let dep = Deployment::from_points(&lay, vec![Point::new(0.0, 0.0)], vec![Point::new(300.0, 0.0)]);
    let opts = SimOptions::default();
    let mut states = init_states(&dep, &lay, &cfg, &opts);
    let traffic = TrafficConfig { mu_new: 50.0, ..TrafficConfig::default() };
    let mut r = rng(1);
    for _ in 0..200 {
        let out = run_slot(&dep, &mut states, &lay, &cfg, &traffic, &opts, &mut r);
        assert_eq!(out.groups[0].attempts, 1);
        assert_eq!(out.groups[0].successes, 1);
    }
}

#[test]
fn forced_same_preamble_collides() {
    let cfg = NetworkConfig { sigma2: 1e-40, ..small_cfg(-60.0) };
    let lay = layout(&cfg);
    let dep = Deployment::from_points(
        &lay,
        vec![Point::new(0.0, 0.0)],
        vec![Point::new(200.0, 0.0), Point::new(-250.0, 0.0)],
    );
    let opts = SimOptions::default();
    let states = init_states(&dep, &lay, &cfg, &opts);
    let mut r = rng(2);
    for _ in 0..50 {
        let attempts = resolve_attempts(&dep, &states, &lay, &cfg, &opts, &[(0, 3), (1, 3)], &mut r);
        assert!(attempts.iter().all(|a| a.received && !a.success));
        let attempts = resolve_attempts(&dep, &states, &lay, &cfg, &opts, &[(0, 3), (1, 4)], &mut r);
        assert!(attempts.iter().all(|a| a.success));
    }
}

#[test]
fn buffers_are_conserved_and_barred_devices_stay_silent() {
    let cfg = small_cfg(0.0);
    let lay = layout(&cfg);
    let dep = sample_deployment(&cfg, &lay, 5).unwrap();
    let opts = SimOptions::default();
    for scheme in Scheme::ALL {
        let traffic = TrafficConfig { scheme, ..TrafficConfig::default() };
        let mut states = init_states(&dep, &lay, &cfg, &opts);
        let mut r = rng(3);
        for _ in 0..6 {
            let before: Vec<DeviceState> = states.clone();
            let out = run_slot(&dep, &mut states, &lay, &cfg, &traffic, &opts, &mut r);
            let mut departed = vec![0u32; states.len()];
            for a in &out.attempts {
                // attempts need a packet and no pending backoff
                assert!(before[a.device].bo_remaining == 0);
                assert!(states[a.device].buffer + a.success as u32 >= 1);
                departed[a.device] += a.success as u32;
                let g = states[a.device].group.unwrap();
                let lo = lay.preamble_offset(g);
                assert!(a.preamble >= lo && a.preamble < lo + lay.subcarriers[g.index()]);
            }
            for (j, st) in states.iter().enumerate() {
                assert!(departed[j] <= 1);
                // arrivals are non-negative
                assert!(st.buffer + departed[j] >= before[j].buffer);
                if st.group.is_none() {
                    assert_eq!(st.buffer, 0);
                }
                if !scheme.uses_backoff() {
                    assert_eq!(st.bo_remaining, 0);
                }
            }
        }
    }

    let barred = TrafficConfig { scheme: Scheme::Acb, q_acb: 0.0, ..TrafficConfig::default() };
    let mut states = init_states(&dep, &lay, &cfg, &opts);
    let mut r = rng(4);
    for _ in 0..3 {
        let out = run_slot(&dep, &mut states, &lay, &cfg, &barred, &opts, &mut r);
        assert!(out.attempts.is_empty());
    }
}

#[test]
fn backoff_defers_for_the_window() {
    // γ so high nothing is ever received: every attempt fails
    let cfg = small_cfg(80.0);
    let lay = layout(&cfg);
    let dep = Deployment::from_points(&lay, vec![Point::new(0.0, 0.0)], vec![Point::new(100.0, 0.0)]);
    let opts = SimOptions::default();
    let mut states = init_states(&dep, &lay, &cfg, &opts);
    let traffic = TrafficConfig { scheme: Scheme::Bo, t_bo: 2, mu_new: 50.0, ..TrafficConfig::default() };
    let mut r = rng(5);
    let pattern: Vec<usize> =
        (0..9).map(|_| run_slot(&dep, &mut states, &lay, &cfg, &traffic, &opts, &mut r).attempts.len()).collect();
    assert_eq!(pattern, vec![1, 0, 0, 1, 0, 0, 1, 0, 0]);
}

#[test]
fn estimates_are_deterministic_across_thread_counts() {
    let cfg = small_cfg(-5.0);
    let lay = layout(&cfg);
    let traffic = TrafficConfig { scheme: Scheme::AcbBo, ..TrafficConfig::default() };
    let opts = SimOptions::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate_success(&cfg, &lay, &traffic, 3, 6, 42, &opts).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    assert_eq!(a.trials, 6);
    let c = pool_free(&cfg, &lay, &traffic, &opts, 43);
    assert_ne!(a, c);
}

fn pool_free(cfg: &NetworkConfig, lay: &CeGroupLayout, traffic: &TrafficConfig, opts: &SimOptions, seed: u64) -> McCounts {
    estimate_success(cfg, lay, traffic, 3, 6, seed, opts).unwrap()
}

#[test]
fn zero_attempts_are_undefined_not_zero() {
    let cfg = small_cfg(0.0);
    let lay = layout(&cfg);
    let traffic = TrafficConfig { mu_new: 0.0, ..TrafficConfig::default() };
    let counts = estimate_success(&cfg, &lay, &traffic, 1, 2, 1, &SimOptions::default()).unwrap();
    for g in CeGroup::ALL {
        assert!(counts.estimate(1, g).is_none());
    }
    assert!(estimate_success(&cfg, &lay, &traffic, 1, 0, 1, &SimOptions::default()).is_err());
}

#[test]
fn noise_only_group0_matches_closed_form() {
    let cfg = small_cfg(-10.0);
    let lay = layout(&cfg);
    let opts = SimOptions { contention: Contention::NoiseOnly, ..SimOptions::default() };
    let traffic = TrafficConfig { mu_new: 5.0, ..TrafficConfig::default() };
    let counts = estimate_success(&cfg, &lay, &traffic, 1, 20, 7, &opts).unwrap();
    let est = counts.estimate(1, CeGroup::G0).unwrap();
    let single = (-4.0 * cfg.gamma_th * cfg.sigma2 / cfg.rho).exp();
    let want = 1.0 - (1.0 - single).powi(2);
    assert!(est.attempts > 1000);
    assert!((est.mean - want).abs() <= est.ci_half.max(0.01), "{} vs {want}", est.mean);
}

#[test]
fn group_fractions_track_thinning() {
    let cfg = NetworkConfig::default();
    let lay = layout(&cfg);
    let seeds = 10;
    let mut fractions = vec![[0.0; 3]; seeds];
    for (seed, f) in fractions.iter_mut().enumerate() {
        let dep = sample_deployment(&cfg, &lay, seed as u64).unwrap();
        let mut counts = [0usize; 3];
        let mut total = 0;
        for j in 0..dep.num_devices() {
            if dep.device_points[j].norm() <= 0.5 * cfg.area_radius {
                total += 1;
                counts[dep.group[j].unwrap().index()] += 1;
            }
        }
        for g in 0..3 {
            f[g] = counts[g] as f64 / total as f64;
        }
    }
    for g in 0..3 {
        let mean = fractions.iter().map(|f| f[g]).sum::<f64>() / seeds as f64;
        let var = fractions.iter().map(|f| (f[g] - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        let se = (var / seeds as f64).sqrt();
        eprintln!("group {g}: mean {mean:.4} se {se:.4} g {:.4}", lay.thinning[g]);
        assert!((mean - lay.thinning[g]).abs() <= 3.0 * se, "group {g}: {mean} vs {}", lay.thinning[g]);
    }
}

#[test]
fn pmf_point_mass_without_devices() {
    let cfg = NetworkConfig { lambda_d: 0.0, ..small_cfg(0.0) };
    let lay = layout(&cfg);
    let h = empirical_interferer_pmf(&cfg, &lay, [0.1, 0.1, 0.1], 2, 1).unwrap();
    for g in h {
        assert_eq!(g, vec![1.0]);
    }
}

#[test]
fn pmf_histograms_have_unit_mass() {
    let cfg = small_cfg(0.0);
    let lay = layout(&cfg);
    let h = empirical_interferer_pmf(&cfg, &lay, [0.5, 0.5, 0.5], 3, 9).unwrap();
    for g in &h {
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn total_variation_basics() {
    assert_eq!(total_variation(&[1.0], &[1.0]), 0.0);
    assert!((total_variation(&[1.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    assert!((total_variation(&[0.5, 0.5], &[0.7, 0.3]) - 0.2).abs() < 1e-15);
}
