use super::*;
use crate::geometry::{CeGroupLayout, GroupCase, NetworkConfig, SinglePower};
use crate::units::db_to_linear;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn cfg_at(gamma_db: f64) -> NetworkConfig {
    NetworkConfig { gamma_th: db_to_linear(gamma_db), ..NetworkConfig::default() }
}

fn layout(cfg: &NetworkConfig) -> CeGroupLayout {
    CeGroupLayout::three_groups(cfg, [12, 12, 24], [2, 4, 16], GroupCase::Case2).unwrap()
}

fn a_default() -> f64 {
    -(-0.1f64).exp_m1()
}

#[test]
fn incomplete_gamma_reference() {
    let v = lower_incomplete_gamma(2.0, 1.0).unwrap();
    assert!(rel(v, 0.264_241_117_657_115_36) < 1e-14);
}

#[test]
fn power_moment_reference_and_limits() {
    let cfg = NetworkConfig::default();
    let v = power_moment(cfg.rho, cfg.p_ul, cfg.alpha, cfg.lambda_b).unwrap();
    assert!(rel(v, 0.092_882_483_916_283_438) < 1e-12, "{v}");

    // sparse base stations: powers spread uniformly over the disc area
    let v = power_moment(cfg.rho, cfg.p_ul, 4.0, 1e-20).unwrap();
    assert!(rel(v, 0.5 * cfg.p_ul.sqrt()) < 1e-6);

    assert!(power_moment(cfg.rho, cfg.rho, 4.0, 1e-7).is_err());
    assert!(power_moment(cfg.rho, cfg.p_ul, 2.0, 1e-7).is_err());
    assert!(power_moment(-1.0, cfg.p_ul, 4.0, 1e-7).is_err());
}

#[test]
fn f0_reference_values() {
    let cases = [
        (10.0, 4, 4.0, 1.559_945_884_674_250_5),
        (10.0, 8, 4.0, 2.309_677_709_549_598_1),
        (1.0, 4, 4.0, 1.223_612_574_549_292_4),
        (10f64.sqrt(), 16, 3.5, 4.743_310_176_535_680_7),
        (100.0, 64, 4.0, 7.025_981_762_438_835_4),
    ];
    for (g, l, a, want) in cases {
        let got = cal_f0(g, l, a, 1e-11).unwrap();
        assert!(rel(got, want) < 1e-9, "gamma={g} l={l} alpha={a}: {got} vs {want}");
    }
}

#[test]
fn fi_reference_values() {
    let cases = [
        (10.0, 16, 4.0, 1000.0, 1000.0, 10_622_759.784_188_39),
        (10.0, 4, 4.0, 500.0, 2412.68, 211_509.500_053_866_87),
        (1.0, 64, 4.0, 3000.0, 3217.36, 58_508_133.177_149_518),
        (10f64.powf(1.5), 128, 3.2, 2000.0, 1784.0, 849_482_071.147_739_57),
        (10.0, 8, 4.0, 100.0, 3000.0, 444.436_214_194_985_67),
    ];
    for (g, l, a, r, d, want) in cases {
        let got = cal_fi(g, l, a, r, d, 1e-11).unwrap();
        assert!(rel(got, want) < 1e-9, "r={r} D={d}: {got} vs {want}");
    }
}

#[test]
fn interference_integral_limits() {
    let mut prev = 0.0;
    for l in [4, 8, 16, 32, 64, 128] {
        let f = cal_f0(10.0, l, 4.0, 1e-10).unwrap();
        assert!(f > prev);
        prev = f;
    }
    assert!(cal_f0(1e-12, 4, 4.0, 1e-10).unwrap() < 1e-5);
    assert_eq!(cal_fi(10.0, 4, 4.0, 0.0, 100.0, 1e-10).unwrap(), 0.0);
    assert!(cal_fi(10.0, 4, 4.0, 1e-3, 100.0, 1e-10).unwrap() < 1e-12);
    assert!(cal_f0(10.0, 4, 2.0, 1e-10).is_err());
    assert!(cal_f0(10.0, 6, 4.0, 1e-10).is_err());
    assert!(cal_fi(10.0, 4, 1.5, 1.0, 1.0, 1e-10).is_err());
}

#[test]
fn pmf_examples() {
    assert_eq!(interferer_count_pmf(0, 0.0, VORONOI_C), 1.0);
    assert_eq!(interferer_count_pmf(3, 0.0, VORONOI_C), 0.0);
    let c = VORONOI_C;
    let want = (c / (1.0 + c)).powf(c + 1.0);
    assert!(rel(interferer_count_pmf(0, 1.0, c), want) < 1e-13);
    for mu in [0.1, 1.0, 10.0, 100.0] {
        let total: f64 = (0..20_000).map(|n| interferer_count_pmf(n, mu, c)).sum();
        assert!((total - 1.0).abs() < 1e-9, "mu={mu}: {total}");
        let mean: f64 = (0..20_000).map(|n| n as f64 * interferer_count_pmf(n, mu, c)).sum();
        // size-biased cell: the tagged device sits in a larger-than-typical cell
        assert!(rel(mean, mu * (c + 1.0) / c) < 1e-9);
    }
}

#[test]
fn collision_series_matches_closed_form() {
    let params = AnalyticParams::default();
    let c = params.c;
    for theta in [0.0, 1e-6, 0.3, 0.9, 1.0] {
        for mu in [0.0, 0.01, 0.66, 5.0, 60.0] {
            let (p, _, tail, truncated) = collision_series(theta, mu, &params);
            let closed = theta * (c / (c + mu * theta)).powf(c + 1.0);
            assert!((p - closed).abs() <= 1e-8 + 1e-12, "theta={theta} mu={mu}: {p} vs {closed}");
            assert!(tail <= params.series_tail_tol);
            assert!(!truncated);
        }
    }
    let (p, ..) = collision_series(1.0, 2.0, &params);
    assert!(rel(p, interferer_count_pmf(0, 2.0, c)) < 1e-12);
}

#[test]
fn series_cap_sets_warning() {
    let params = AnalyticParams { n_max_cap: 3, ..AnalyticParams::default() };
    let (_, terms, tail, truncated) = collision_series(0.5, 50.0, &params);
    assert_eq!(terms, 3);
    assert!(tail > 0.5);
    assert!(truncated);
}

#[test]
fn group0_noise_only_closed_form() {
    let params = AnalyticParams::default();
    for gamma_db in [-10.0, -5.0, 0.0] {
        let cfg = cfg_at(gamma_db);
        let lay = layout(&cfg);
        for k in [1u32, 2] {
            let lay = lay.with_repetitions([k, 4, 16]);
            let input = GroupSlotInput { group: CeGroup::G0, a: 0.5, r: 1.0, lambda_a: 0.0, k };
            let th = preamble_success_group0(&input, &lay, &params, &cfg).unwrap().value;
            let single = (-4.0 * cfg.gamma_th * cfg.sigma2 / cfg.rho).exp();
            let want = 1.0 - (1.0 - single).powi(k as i32);
            assert!(rel(th, want) < 1e-12, "{th} vs {want}");
        }
    }
    let cfg = NetworkConfig { sigma2: 1e-30, ..cfg_at(10.0) };
    let lay = layout(&cfg);
    let input = GroupSlotInput { group: CeGroup::G0, a: 1.0, r: 1.0, lambda_a: 0.0, k: 2 };
    let th = preamble_success_group0(&input, &lay, &params, &cfg).unwrap().value;
    assert!((th - 1.0).abs() < 1e-12);
}

#[test]
fn groupi_noise_only_matches_direct_quadrature() {
    let params = AnalyticParams::default();
    for gamma_db in [-10.0, 0.0] {
        let cfg = cfg_at(gamma_db);
        let lay = layout(&cfg);
        for group in [CeGroup::G1, CeGroup::G2] {
            let k = lay.repetitions[group.index()];
            let input = GroupSlotInput { group, a: 1.0, r: 1.0, lambda_a: 0.0, k };
            let th = preamble_success_groupi(&input, &lay, &params, &cfg).unwrap().value;
            let law = lay.distance_law(&cfg, group);
            let success = |r: f64| {
                let single = (-4.0 * cfg.gamma_th * cfg.sigma2 * r.powf(cfg.alpha) / cfg.p_ul).exp();
                1.0 - (1.0 - single).powi(k as i32)
            };
            // plain midpoint rule in r
            let (lo, hi) = (law.inner(), law.outer().min(law.inner() + 40_000.0));
            let n = 400_000;
            let h = (hi - lo) / n as f64;
            let want: f64 = (0..n)
                .map(|i| {
                    let r = lo + (i as f64 + 0.5) * h;
                    success(r) * law.pdf(r) * h
                })
                .sum();
            assert!(rel(th, want) < 1e-7, "{group:?} at {gamma_db} dB: {th} vs {want}");
        }
    }
}

#[test]
fn theta_and_success_against_high_precision_reference() {
    let params = AnalyticParams::default();
    let a = a_default();
    // (gamma dB, group, K, Θ, P)
    let cases = [
        (-10.0, CeGroup::G0, 2, 0.533_173_621_076_136_76, 0.345_786_500_233_117_53),
        (0.0, CeGroup::G0, 2, 4.661_931_873_879_671_5e-5, 4.661_746_741_914_964_1e-5),
        (-10.0, CeGroup::G1, 4, 0.973_557_079_407_993_25, 0.864_418_021_488_229_91),
        (0.0, CeGroup::G1, 4, 0.092_561_760_412_882_272, 0.091_509_035_759_279_853),
        (-10.0, CeGroup::G2, 4, 0.782_461_459_195_458_24, 0.770_551_294_302_448_39),
    ];
    for (gamma_db, group, k, theta_ref, p_ref) in cases {
        let cfg = cfg_at(gamma_db);
        let mut reps = [2, 4, 16];
        reps[group.index()] = k;
        let lay = CeGroupLayout::three_groups(&cfg, [12, 12, 24], [2, 4, 8], GroupCase::Case2)
            .unwrap()
            .with_repetitions(reps);
        let input = GroupSlotInput::for_group(&lay, &cfg, group, a, 1.0);
        let s = rach_success_single_slot(&input, &lay, &params, &cfg).unwrap();
        assert!(rel(s.theta, theta_ref) < 1e-7, "{group:?} {gamma_db} dB: Θ {} vs {theta_ref}", s.theta);
        assert!(rel(s.p, p_ref) < 1e-7, "{group:?} {gamma_db} dB: P {} vs {p_ref}", s.p);
        assert!(!s.truncated);
    }
}

#[test]
fn zero_theta_and_clean_channel() {
    let params = AnalyticParams::default();
    let (p, ..) = collision_series(0.0, 3.0, &params);
    assert_eq!(p, 0.0);
    let cfg = NetworkConfig { sigma2: 1e-40, ..cfg_at(0.0) };
    let lay = layout(&cfg);
    for group in CeGroup::ALL {
        let input = GroupSlotInput { group, a: 1.0, r: 1.0, lambda_a: 0.0, k: lay.repetitions[group.index()] };
        let s = rach_success_single_slot(&input, &lay, &params, &cfg).unwrap();
        assert!((s.p - 1.0).abs() < 1e-9, "{group:?}: {}", s.p);
    }
}

#[test]
fn repetitions_never_hurt_and_threshold_hurts() {
    let params = AnalyticParams::default();
    let a = a_default();
    for group in CeGroup::ALL {
        let mut prev_gamma = f64::INFINITY;
        for gamma_db in [-10.0, -5.0, 0.0, 5.0] {
            let cfg = cfg_at(gamma_db);
            let lay = layout(&cfg);
            let input = GroupSlotInput::for_group(&lay, &cfg, group, a, 1.0);
            let th = preamble_success(&input, &lay, &params, &cfg).unwrap().value;
            assert!(th <= prev_gamma + 1e-12);
            prev_gamma = th;
            let doubled = GroupSlotInput { k: input.k * 2, ..input };
            let th2 = preamble_success(&doubled, &lay, &params, &cfg).unwrap().value;
            assert!(th2 >= th, "{group:?} at {gamma_db} dB: K={} {th}, 2K {th2}", input.k);
        }
    }
}

#[test]
fn large_k_cancellation_is_detected() {
    let params = AnalyticParams::default();
    // good SNR: C(128, k) q^k terms reach 1e37 and the sum is meaningless
    let cfg = cfg_at(-10.0);
    let lay = layout(&cfg);
    let input = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G1, a_default(), 1.0);
    let input = GroupSlotInput { k: 128, ..input };
    match preamble_success(&input, &lay, &params, &cfg) {
        Err(Error::Cancellation { k: 128, bound, .. }) => assert!(bound > CANCELLATION_TOL),
        other => panic!("expected a cancellation error, got {other:?}"),
    }

    // noise-limited: terms decay at once and the sum is benign
    let cfg = cfg_at(10.0);
    let lay = layout(&cfg);
    let input = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G2, a_default(), 1.0);
    let th64 = preamble_success(&GroupSlotInput { k: 64, ..input }, &lay, &params, &cfg).unwrap();
    let th128 = preamble_success(&GroupSlotInput { k: 128, ..input }, &lay, &params, &cfg).unwrap();
    assert!(th128.value >= th64.value);
    assert!(th128.error_bound <= CANCELLATION_TOL);
    assert!(th128.cancellation >= 1.0);
}

#[test]
fn exclusion_rule_toggle() {
    let cfg = cfg_at(-10.0);
    let lay = layout(&cfg);
    let input = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G1, 1.0, 1.0);
    let printed = preamble_success(&input, &lay, &AnalyticParams::default(), &cfg).unwrap().value;
    let inner = AnalyticParams { exclusion: ExclusionRule::InnerEdge, ..AnalyticParams::default() };
    let inner = preamble_success(&input, &lay, &inner, &cfg).unwrap().value;
    // a smaller exclusion radius admits more interference
    assert!(inner < printed);
}

#[test]
fn single_group_modes() {
    let params = AnalyticParams::default();
    let cfg = cfg_at(-10.0);
    for power in [SinglePower::Inversion, SinglePower::Fixed] {
        let lay = CeGroupLayout::single_group(&cfg, power, 4).unwrap();
        let input = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G0, a_default(), 1.0);
        let s = rach_success_single_slot(&input, &lay, &params, &cfg).unwrap();
        assert!(s.p > 0.0 && s.p < 1.0, "{power:?}: {}", s.p);
    }
}

#[test]
fn wrong_power_model_is_rejected() {
    let cfg = cfg_at(0.0);
    let lay = layout(&cfg);
    let p = AnalyticParams::default();
    let g0 = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G0, 0.1, 1.0);
    let g1 = GroupSlotInput::for_group(&lay, &cfg, CeGroup::G1, 0.1, 1.0);
    assert!(preamble_success_groupi(&g0, &lay, &p, &cfg).is_err());
    assert!(preamble_success_group0(&g1, &lay, &p, &cfg).is_err());
    let bad = GroupSlotInput { a: 1.5, ..g1 };
    assert!(rach_success_single_slot(&bad, &lay, &p, &cfg).is_err());
}

#[test]
fn fixed_power_theta_is_scale_invariant() {
    let params = AnalyticParams::default();
    let base = cfg_at(-10.0);
    let s = 3.0f64;
    // distances x s, densities x s^-2, receive-side powers x s^-alpha
    let scaled = NetworkConfig {
        lambda_b: base.lambda_b / (s * s),
        lambda_d: base.lambda_d / (s * s),
        area_radius: base.area_radius * s,
        omega: base.omega / s.powf(base.alpha),
        sigma2: base.sigma2 / s.powf(base.alpha),
        rho: base.rho / s.powf(base.alpha),
        ..base.clone()
    };
    for (cfg_a, cfg_b, case) in [(&base, &scaled, GroupCase::Case2)] {
        let la = CeGroupLayout::three_groups(cfg_a, [12, 12, 24], [2, 4, 16], case).unwrap();
        let lb = CeGroupLayout::three_groups(cfg_b, [12, 12, 24], [2, 4, 16], case).unwrap();
        assert!(rel(lb.radii.d1, s * la.radii.d1) < 1e-12);
        for group in [CeGroup::G1, CeGroup::G2] {
            let ia = GroupSlotInput::for_group(&la, cfg_a, group, 0.3, 1.0);
            let ib = GroupSlotInput::for_group(&lb, cfg_b, group, 0.3, 1.0);
            let ta = preamble_success(&ia, &la, &params, cfg_a).unwrap().value;
            let tb = preamble_success(&ib, &lb, &params, cfg_b).unwrap().value;
            assert!(rel(tb, ta) < 1e-7, "{group:?}: {ta} vs {tb}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fi_scaling(s in 0.1f64..10.0, r in 50.0f64..5000.0, d in 50.0f64..5000.0, l in 1u32..8) {
        let a = cal_fi(10.0, 4 * l, 4.0, r, d, 1e-11).unwrap();
        let b = cal_fi(10.0, 4 * l, 4.0, s * r, s * d, 1e-11).unwrap();
        prop_assert!(rel(b, s * s * a) < 1e-8);
    }

    #[test]
    fn pmf_normalized(mu in 0.0f64..100.0) {
        let total: f64 = (0..40_000).map(|n| interferer_count_pmf(n, mu, VORONOI_C)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn success_is_probability_and_monotone_in_activity(
        gamma_db in -15.0f64..5.0,
        group_idx in 0usize..3,
        a in 0.0f64..1.0,
        r in 0.0f64..1.0,
    ) {
        let params = AnalyticParams::default();
        let cfg = cfg_at(gamma_db);
        let lay = layout(&cfg);
        let group = CeGroup::from_index(group_idx).unwrap();
        let lo = GroupSlotInput::for_group(&lay, &cfg, group, a * r, 1.0);
        let hi = GroupSlotInput::for_group(&lay, &cfg, group, a, 1.0);
        let p_lo = rach_success_single_slot(&lo, &lay, &params, &cfg).unwrap();
        let p_hi = rach_success_single_slot(&hi, &lay, &params, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_lo.p) && (0.0..=1.0).contains(&p_hi.p));
        prop_assert!((0.0..=1.0).contains(&p_lo.theta));
        prop_assert!(p_hi.p <= p_lo.p + 1e-9);
    }

    #[test]
    fn success_nonincreasing_in_density(
        gamma_db in -15.0f64..5.0,
        group_idx in 0usize..3,
        f in 1.0f64..20.0,
    ) {
        let params = AnalyticParams::default();
        let cfg = cfg_at(gamma_db);
        let lay = layout(&cfg);
        let group = CeGroup::from_index(group_idx).unwrap();
        let base = GroupSlotInput::for_group(&lay, &cfg, group, 0.2, 1.0);
        let dense = GroupSlotInput { lambda_a: base.lambda_a * f, ..base };
        let p0 = rach_success_single_slot(&base, &lay, &params, &cfg).unwrap().p;
        let p1 = rach_success_single_slot(&dense, &lay, &params, &cfg).unwrap().p;
        prop_assert!(p1 <= p0 + 1e-9);
    }
}
