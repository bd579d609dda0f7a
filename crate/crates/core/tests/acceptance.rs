//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured numbers (visible with `--nocapture`).

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use pulsefix_core::bounds::{crlb_range, crlb_rss, crlb_toa};
use pulsefix_core::channel::{
    mean_rss, propagate_with_noise_sigma, sample_rss, ChannelParams, MultipathConfig,
    MultipathProfile, NlosConfig, Tap,
};
use pulsefix_core::harness::{
    build_rss_fingerprints, error_cdf, query_fingerprints, rmse, run_monte_carlo, NoiseConfig,
    RunOptions, Scenario,
};
use pulsefix_core::positioning::{
    grid_bayes, hyperbolic_fix, knn_estimate, nls_solve, triangulate, trilaterate, Anchor,
    Measurement, MeasurementKind, Point, PriorGrid, SolveStatus, TrainingSet, Weighting,
};
use pulsefix_core::ranging::{
    tdoa_from_toas, toa_first_path, toa_peak, toa_two_step, ThresholdPolicy, ToaEstimate,
    ToaMethod,
};
use pulsefix_core::signal::{gaussian_pulse, spectral_metrics, Waveform};
use pulsefix_core::SPEED_OF_LIGHT;

const FS: f64 = 50e9;

/// Closed-form β for an order-n Gaussian-derivative pulse with scale σ.
fn gaussian_beta_oracle(order: u32, sigma: f64) -> f64 {
    ((2.0 * order as f64 + 1.0) / (8.0 * std::f64::consts::PI.powi(2) * sigma * sigma)).sqrt()
}

#[test]
fn acceptance_01_rss_crlb_reproduction() {
    let bound: f64 = crlb_rss(4.58, 3.51, 10.0).unwrap();
    assert!(
        (bound - 1.76).abs() <= 0.01,
        "crlb_rss(4.58, 3.51 dB, 10 m) = {bound}, expected 1.76 ± 0.01"
    );
    println!("ACCEPTANCE 1 PASS: crlb_rss(4.58, 3.51 dB, 10 m) = {bound:.4} m (1.76 ± 0.01)");
}

#[test]
fn acceptance_02_toa_crlb_reproduction() {
    let pulse = gaussian_pulse(2, 1e-9, FS).unwrap();
    let beta = spectral_metrics(&pulse).unwrap().effective_bandwidth;
    let oracle = gaussian_beta_oracle(2, 1e-9 / 7.0);
    let beta_err = (beta - oracle).abs() / oracle;
    assert!(beta_err < 0.01, "β = {beta:.4e} vs oracle {oracle:.4e}: {beta_err:.4}");

    let snr = 10f64.powf(5.0 / 10.0);
    let range_bound: f64 = crlb_range(snr, beta).unwrap();
    assert!(
        (0.005..=0.015).contains(&range_bound),
        "range bound at 5 dB = {range_bound} m, expected within [0.5, 1.5] cm"
    );
    println!(
        "ACCEPTANCE 2 PASS: β = {:.4} GHz (oracle error {:.3}%), crlb_range(5 dB) = {:.3} cm",
        beta / 1e9,
        100.0 * beta_err,
        100.0 * range_bound
    );
}

#[test]
fn acceptance_03_bound_attainment() {
    let template = gaussian_pulse(2, 1e-9, FS).unwrap();
    let beta = spectral_metrics(&template).unwrap().effective_bandwidth;
    let energy = template.energy();
    let trials = 500;

    let mut rmse_by_snr = Vec::new();
    for (point, snr_db) in [10.0, 15.0, 20.0, 25.0].iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let sigma = (energy * FS / (2.0 * snr)).sqrt();
        let mut errors = Vec::with_capacity(trials);
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(3_000_000 + (point * trials + trial) as u64);
            let tau: f64 = rng.random_range(20e-9..40e-9);
            let applied = (tau * FS).round() / FS;
            let profile = MultipathProfile::single_path(tau, 1.0);
            let received =
                propagate_with_noise_sigma(&template, &profile, sigma, &mut rng).unwrap();
            // Observe one extra pulse width so the peak is interior.
            let normal = Normal::new(0.0, sigma).unwrap();
            let mut samples = received.samples().to_vec();
            samples.extend((0..template.len()).map(|_| normal.sample(&mut rng)));
            let padded = Waveform::new(FS, received.t0(), samples).unwrap();

            let est = toa_peak(&padded, &template).unwrap();
            errors.push(SPEED_OF_LIGHT * (est.toa - applied));
        }
        rmse_by_snr.push((snr_db, rmse(&errors).unwrap(), SPEED_OF_LIGHT * crlb_toa(snr, beta).unwrap()));
    }

    for pair in rmse_by_snr.windows(2) {
        assert!(
            pair[1].1 < pair[0].1,
            "RMSE not monotone in SNR: {rmse_by_snr:?}"
        );
    }
    // Monte-Carlo floor: the RMSE estimator's own 3σ band.
    let mc_floor = 1.0 - 3.0 / (2.0 * trials as f64).sqrt();
    for &(snr_db, rmse_m, bound) in &rmse_by_snr {
        if *snr_db >= 20.0 {
            assert!(
                rmse_m <= 2.0 * bound,
                "at {snr_db} dB: RMSE {rmse_m} > 2× bound {bound}"
            );
        }
        assert!(
            rmse_m >= mc_floor * bound,
            "at {snr_db} dB: RMSE {rmse_m} below the bound {bound} beyond Monte-Carlo error"
        );
    }
    let table: Vec<String> = rmse_by_snr
        .iter()
        .map(|(s, r, b)| format!("{s} dB: {:.2}/{:.2} mm", r * 1e3, b * 1e3))
        .collect();
    println!(
        "ACCEPTANCE 3 PASS: RMSE/CRLB monotone over SNR, within factor 2 at ≥20 dB [{}]",
        table.join(", ")
    );
}

#[test]
fn acceptance_04_first_path_vs_peak() {
    let template = gaussian_pulse(2, 1e-9, FS).unwrap();
    let profile = MultipathProfile {
        taps: vec![Tap { delay: 20e-9, gain: 0.5 }, Tap { delay: 35e-9, gain: 1.0 }],
        nlos_bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let received =
        propagate_with_noise_sigma(&template, &profile, 0.0, &mut rng).unwrap();
    let mut samples = received.samples().to_vec();
    samples.resize((250e-9 * FS).round() as usize, 0.0);
    let r = Waveform::new(FS, received.t0(), samples).unwrap();

    let policy = ThresholdPolicy::fraction_of_max(0.3);
    let peak = toa_peak(&r, &template).unwrap();
    let first = toa_first_path(&r, &template, &policy).unwrap();
    let two = toa_two_step(&r, &template, 50e-9, &policy).unwrap();

    assert!((peak.toa - 35e-9).abs() < 1e-12, "peak found {}", peak.toa);
    assert!((first.toa - 20e-9).abs() < 1e-12, "first path found {}", first.toa);
    assert!(
        (two.estimate.toa - first.toa).abs() < 1e-15,
        "two-step {} disagrees with first-path {}",
        two.estimate.toa,
        first.toa
    );
    println!(
        "ACCEPTANCE 4 PASS: peak → {:.1} ns (strong tap), first-path → {:.1} ns (weak first tap), two-step agrees",
        peak.toa * 1e9,
        first.toa * 1e9
    );
}

/// Random anchors with sound geometry: pairwise separation and spanned area.
fn random_anchor_triple(rng: &mut ChaCha8Rng) -> Vec<Anchor<f64>> {
    loop {
        let pts: Vec<(f64, f64)> =
            (0..3).map(|_| (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0))).collect();
        let d01 = ((pts[0].0 - pts[1].0).powi(2) + (pts[0].1 - pts[1].1).powi(2)).sqrt();
        let d02 = ((pts[0].0 - pts[2].0).powi(2) + (pts[0].1 - pts[2].1).powi(2)).sqrt();
        let d12 = ((pts[1].0 - pts[2].0).powi(2) + (pts[1].1 - pts[2].1).powi(2)).sqrt();
        let area = 0.5
            * ((pts[1].0 - pts[0].0) * (pts[2].1 - pts[0].1)
                - (pts[2].0 - pts[0].0) * (pts[1].1 - pts[0].1))
                .abs();
        if d01 > 3.0 && d02 > 3.0 && d12 > 3.0 && area > 8.0 {
            return pts
                .into_iter()
                .enumerate()
                .map(|(i, (x, y))| Anchor::new(format!("a{i}"), x, y))
                .collect();
        }
    }
}

/// Random point strictly inside the anchors' convex hull (uniform
/// barycentric weights), where the centroid-initialized solver is
/// well-posed.
fn target_in_hull(anchors: &[Anchor<f64>], rng: &mut ChaCha8Rng) -> Point<f64> {
    let weights: Vec<f64> = (0..anchors.len()).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut p = Point::new(0.0, 0.0);
    for (w, a) in weights.iter().zip(anchors) {
        p.x += w / total * a.position.x;
        p.y += w / total * a.position.y;
    }
    p
}

fn range_measurements(
    anchors: &[Anchor<f64>],
    target: Point<f64>,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Measurement<f64>> {
    let normal = Normal::new(0.0, sigma).unwrap();
    anchors
        .iter()
        .map(|a| {
            let noise = if sigma > 0.0 { normal.sample(rng) } else { 0.0 };
            Measurement::new(
                MeasurementKind::ToaRange,
                a.id.clone(),
                a.position.distance_to(target) + noise,
                if sigma > 0.0 { sigma * sigma } else { 1.0 },
            )
        })
        .collect()
}

#[test]
fn acceptance_05_nls_grid_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let anchors = random_anchor_triple(&mut rng);
        let target = target_in_hull(&anchors, &mut rng);
        let measurements = range_measurements(&anchors, target, 0.5, &mut rng);
        let est = nls_solve(&measurements, &anchors, None).unwrap();

        let objective = |p: Point<f64>| -> f64 {
            measurements
                .iter()
                .zip(&anchors)
                .map(|(m, a)| {
                    let e = m.value - p.distance_to(a.position);
                    e * e / m.variance
                })
                .sum()
        };

        // Exhaustive grid minimizer of the weighted objective: a 5 cm pass
        // over the full domain, then the surrounding 1 cm cells.
        let mut coarse = (Point::new(0.0, 0.0), f64::INFINITY);
        let mut gy = -1.0;
        while gy <= 11.0 {
            let mut gx = -1.0;
            while gx <= 11.0 {
                let p = Point::new(gx, gy);
                let o = objective(p);
                if o < coarse.1 {
                    coarse = (p, o);
                }
                gx += 0.05;
            }
            gy += 0.05;
        }
        let mut fine = coarse;
        let mut gy = coarse.0.y - 0.15;
        while gy <= coarse.0.y + 0.15 {
            let mut gx = coarse.0.x - 0.15;
            while gx <= coarse.0.x + 0.15 {
                let p = Point::new(gx, gy);
                let o = objective(p);
                if o < fine.1 {
                    fine = (p, o);
                }
                gx += 0.01;
            }
            gy += 0.01;
        }

        let distance = est.position.distance_to(fine.0);
        worst = worst.max(distance);
        assert!(
            distance <= 0.015,
            "solver {:?} vs grid oracle {:?}: {distance} m apart",
            est.position,
            fine.0
        );
    }
    println!(
        "ACCEPTANCE 5 PASS: 100/100 noisy NLS solves within one 1 cm cell of the grid oracle (worst {:.4} m)",
        worst
    );
}

#[test]
fn acceptance_06_noiseless_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);

    for _ in 0..100 {
        let anchors = random_anchor_triple(&mut rng);
        let target = target_in_hull(&anchors, &mut rng);
        let ranges: Vec<f64> = anchors.iter().map(|a| a.position.distance_to(target)).collect();

        let tri = trilaterate(&anchors, &ranges).unwrap();
        assert!(tri.position.distance_to(target) < 1e-6, "trilaterate {:?}", tri.position);

        let angles: Vec<f64> = anchors
            .iter()
            .map(|a| (target.y - a.position.y).atan2(target.x - a.position.x))
            .collect();
        let tan = triangulate(&anchors, &angles).unwrap();
        assert!(tan.position.distance_to(target) < 1e-6, "triangulate {:?}", tan.position);

        let m = range_measurements(&anchors, target, 0.0, &mut rng);
        let nls = nls_solve(&m, &anchors, None).unwrap();
        assert!(nls.position.distance_to(target) < 1e-6, "nls {:?}", nls.position);
    }

    // Hyperbolic: four anchors, one of them the TDOA reference.
    for _ in 0..100 {
        let mut anchors = random_anchor_triple(&mut rng);
        anchors.push(Anchor::tdoa_reference(
            "ref",
            rng.random_range(0.0..10.0),
            rng.random_range(0.0..10.0),
        ));
        let target = target_in_hull(&anchors, &mut rng);
        let d_ref = target.distance_to(anchors[3].position);
        let tdoas: Vec<f64> = anchors[..3]
            .iter()
            .map(|a| target.distance_to(a.position) - d_ref)
            .collect();
        let fix = hyperbolic_fix(&anchors, &tdoas).unwrap();
        assert!(
            fix.best.position.distance_to(target) < 1e-6,
            "hyperbolic {:?} vs target {:?}",
            fix.best.position,
            target
        );
    }

    // Grid Bayes with a uniform prior over the full domain, 1 cm cells.
    let prior = PriorGrid::uniform(Point::new(0.0, 0.0), 10.0, 10.0, 0.01).unwrap();
    for _ in 0..100 {
        let anchors = random_anchor_triple(&mut rng);
        let target = target_in_hull(&anchors, &mut rng);
        let m: Vec<Measurement<f64>> = anchors
            .iter()
            .map(|a| {
                Measurement::new(
                    MeasurementKind::ToaRange,
                    a.id.clone(),
                    a.position.distance_to(target),
                    0.01,
                )
            })
            .collect();
        let result = grid_bayes(&m, &anchors, &prior).unwrap();
        let distance = result.map.position.distance_to(target);
        assert!(distance <= 0.0101, "grid MAP {:?} is {distance} m from {target:?}", result.map.position);
    }

    println!("ACCEPTANCE 6 PASS: 100/100 noiseless recoveries within 1e-6 m (1 cm cell for grid MAP) per estimator");
}

#[test]
fn acceptance_07_shadowing_statistics() {
    let params = ChannelParams {
        path_loss_exponent: 4.58,
        ref_power_db: -40.0,
        ref_distance: 1.0,
        shadowing_db: 3.51,
        multipath: MultipathConfig::default(),
        nlos: NlosConfig::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws: Vec<f64> = (0..10_000).map(|_| sample_rss(&params, 10.0, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let std = (draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
        / (draws.len() - 1) as f64)
        .sqrt();

    let expected_mean = mean_rss(&params, 10.0).unwrap();
    assert!(
        (std - 3.51).abs() <= 0.05 * 3.51,
        "sample std {std} outside 5% of σ_sh = 3.51"
    );
    assert!(
        (mean - expected_mean).abs() <= 0.15,
        "sample mean {mean} vs path-loss mean {expected_mean}"
    );
    println!(
        "ACCEPTANCE 7 PASS: 10⁴ shadowing draws: std {std:.3} dB (σ = 3.51 ± 5%), mean offset {:.3} dB (≤ 0.15)",
        mean - expected_mean
    );
}

fn duration_law_scenario(num_frames: usize) -> Scenario {
    let mut scenario: Scenario = serde_json::from_str(
        r#"{
        "seed": 88,
        "trials": 500,
        "anchors": [
            {"id": "a", "x": 0.0, "y": 0.0},
            {"id": "b", "x": 12.0, "y": 0.0},
            {"id": "c", "x": 0.0, "y": 12.0}
        ],
        "targets": [{"x": 4.0, "y": 5.0}],
        "signal": {"frame_interval": 25e-9, "num_frames": 1},
        "channel": {"noise": {"mode": "power_budget", "max_average_power": 1e-3, "noise_psd": 5e-13}}
    }"#,
    )
    .unwrap();
    scenario.signal.num_frames = num_frames;
    scenario
}

#[test]
fn acceptance_08_signal_duration_law() {
    // Under a fixed power budget, doubling N_f doubles the SNR, so the
    // high-SNR ranging RMSE shrinks by √2.
    let short = run_monte_carlo(&duration_law_scenario(2), &RunOptions::default()).unwrap();
    let long = run_monte_carlo(&duration_law_scenario(4), &RunOptions::default()).unwrap();
    let rmse_short = short.report.ranging[0].rmse;
    let rmse_long = long.report.ranging[0].rmse;
    let ratio = rmse_short / rmse_long;
    let expected = 2f64.sqrt();
    assert!(
        (ratio - expected).abs() <= 0.15 * expected,
        "RMSE ratio {ratio} outside √2 ± 15% (short {rmse_short}, long {rmse_long})"
    );
    println!(
        "ACCEPTANCE 8 PASS: doubling N_f (2→4) scaled ranging RMSE by {ratio:.3} (√2 ± 15%), SNR {:.1} → {:.1} dB",
        short.report.crlb.snr_db.unwrap(),
        long.report.crlb.snr_db.unwrap()
    );
}

#[test]
fn acceptance_09_knn_recall() {
    let scenario: Scenario = serde_json::from_str(
        r#"{
        "seed": 99,
        "trials": 1,
        "anchors": [
            {"id": "a", "x": 0.0, "y": 0.0},
            {"id": "b", "x": 25.0, "y": 0.0},
            {"id": "c", "x": 0.0, "y": 20.0},
            {"id": "d", "x": 25.0, "y": 20.0}
        ],
        "targets": [{"x": 10.0, "y": 10.0}]
    }"#,
    )
    .unwrap();
    let (training, _) = build_rss_fingerprints(&scenario, 25, 20, (0.0, 0.0, 25.0, 20.0)).unwrap();
    assert_eq!(training.len(), 500);

    for (vector, location) in training.entries() {
        let hit = knn_estimate(&training, vector, 1, Weighting::Uniform).unwrap();
        assert_eq!(hit, *location, "k=1 recall failed for {location:?}");
    }
    println!("ACCEPTANCE 9 PASS: 500/500 stored fingerprints recalled exactly with k = 1");
}

#[test]
fn acceptance_10_determinism() {
    let scenario: Scenario = serde_json::from_str(
        r#"{
        "seed": 1010,
        "trials": 30,
        "anchors": [
            {"id": "a", "x": 0.0, "y": 0.0},
            {"id": "b", "x": 15.0, "y": 0.0},
            {"id": "c", "x": 0.0, "y": 15.0}
        ],
        "targets": [{"x": 5.0, "y": 6.0}],
        "channel": {"noise": {"mode": "snr", "snr_db": 18.0}}
    }"#,
    )
    .unwrap();
    let serial = run_monte_carlo(&scenario, &RunOptions { parallel: false }).unwrap();
    let parallel = run_monte_carlo(&scenario, &RunOptions { parallel: true }).unwrap();
    let repeat = run_monte_carlo(&scenario, &RunOptions { parallel: true }).unwrap();

    assert_eq!(serial.report.to_json(), parallel.report.to_json());
    assert_eq!(serial.ranging_csv(), parallel.ranging_csv());
    assert_eq!(serial.positions_csv(), parallel.positions_csv());
    assert_eq!(parallel.report.to_json(), repeat.report.to_json());
    assert_eq!(parallel.ranging_csv(), repeat.ranging_csv());
    println!("ACCEPTANCE 10 PASS: serial, parallel, and repeated runs produced byte-identical reports");
}

fn toa(value: f64) -> ToaEstimate {
    ToaEstimate {
        toa: value,
        peak_statistic: 1.0,
        method: ToaMethod::Peak,
        search_window: (f64::MIN, f64::MAX),
        correlation_evals: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn acceptance_11a_tdoa_offset_invariance(
        t1 in -1e-6..1e-6f64,
        t2 in -1e-6..1e-6f64,
        offset in -1e-3..1e-3f64,
    ) {
        let base = tdoa_from_toas(&toa(t1), &toa(t2));
        let shifted = tdoa_from_toas(&toa(t1 + offset), &toa(t2 + offset));
        prop_assert!((base - shifted).abs() <= 1e-12 * (1.0 + offset.abs() / 1e-9));
    }

    #[test]
    fn acceptance_11b_knn_convex_hull_containment(
        entries in prop::collection::vec(
            (prop::collection::vec(-80.0..0.0f64, 3), (-50.0..50.0f64, -50.0..50.0f64)),
            1..12,
        ),
        query in prop::collection::vec(-80.0..0.0f64, 3),
        k_seed in 0usize..12,
        inverse in any::<bool>(),
    ) {
        let mut ts = TrainingSet::new();
        for (v, (x, y)) in &entries {
            ts.push(v.clone(), Point::new(*x, *y)).unwrap();
        }
        let k = 1 + k_seed % ts.len();
        let weighting = if inverse { Weighting::InverseDistance } else { Weighting::Uniform };
        let est = knn_estimate(&ts, &query, k, weighting).unwrap();

        // Support-function test: inside the hull of the k nearest locations
        // iff d·est ≤ max_i d·l_i for every direction d.
        let mut by_dist: Vec<(f64, Point<f64>)> = ts
            .entries()
            .iter()
            .map(|(v, l)| {
                let d = v.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (d, *l)
            })
            .collect();
        by_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let selected = &by_dist[..k];
        for step in 0..16 {
            let angle = step as f64 * std::f64::consts::PI / 8.0;
            let dir = (angle.cos(), angle.sin());
            let support = selected
                .iter()
                .map(|(_, l)| dir.0 * l.x + dir.1 * l.y)
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(dir.0 * est.x + dir.1 * est.y <= support + 1e-9);
        }
    }

    #[test]
    fn acceptance_11c_cdf_monotone_bounded(
        errors in prop::collection::vec(-100.0..100.0f64, 1..64),
        mut thresholds in prop::collection::vec(0.0..120.0f64, 1..64),
    ) {
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let fractions = error_cdf(&errors, &thresholds).unwrap();
        for pair in fractions.windows(2) {
            prop_assert!(pair[1] >= pair[0]);
        }
        for f in &fractions {
            prop_assert!((0.0..=1.0).contains(f));
        }
    }

    #[test]
    fn acceptance_11d_sigma_scaling_argmin_invariance(
        seed in 0u64..5000,
        scale in 0.01..100.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors = random_anchor_triple(&mut rng);
        let target = target_in_hull(&anchors, &mut rng);
        let m = range_measurements(&anchors, target, 0.4, &mut rng);
        let scaled: Vec<Measurement<f64>> = m
            .iter()
            .cloned()
            .map(|mut mm| {
                mm.variance *= scale;
                mm
            })
            .collect();
        let a = nls_solve(&m, &anchors, None).unwrap();
        let b = nls_solve(&scaled, &anchors, None).unwrap();
        prop_assert!(
            a.position.distance_to(b.position) < 1e-7,
            "argmin moved: {:?} vs {:?}", a.position, b.position
        );
    }

    #[test]
    fn acceptance_11e_first_path_never_later_than_peak(
        seed in 0u64..5000,
        first_gain in 0.2..1.0f64,
        second_gain in 0.2..1.0f64,
        delay1 in 10e-9..25e-9f64,
        gap in 3e-9..20e-9f64,
        snr_db in 12.0..30.0f64,
        fraction in 0.2..0.9f64,
    ) {
        let fs = 20e9;
        let template = gaussian_pulse(2, 1e-9, fs).unwrap();
        let profile = MultipathProfile {
            taps: vec![
                Tap { delay: delay1, gain: first_gain },
                Tap { delay: delay1 + gap, gain: second_gain },
            ],
            nlos_bias: 0.0,
        };
        let snr = 10f64.powf(snr_db / 10.0);
        let sigma = (profile.energy_gain() * template.energy() * fs / (2.0 * snr)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let received = propagate_with_noise_sigma(&template, &profile, sigma, &mut rng).unwrap();
        let normal = Normal::new(0.0, sigma).unwrap();
        let mut samples = received.samples().to_vec();
        samples.extend((0..template.len()).map(|_| normal.sample(&mut rng)));
        let r = Waveform::new(fs, received.t0(), samples).unwrap();

        let peak = toa_peak(&r, &template).unwrap();
        let first = toa_first_path(&r, &template, &ThresholdPolicy::fraction_of_max(fraction)).unwrap();
        prop_assert!(
            first.toa <= peak.toa + 1e-12,
            "first-path {} later than peak {}", first.toa, peak.toa
        );
    }
}

#[test]
fn acceptance_11_summary() {
    println!(
        "ACCEPTANCE 11 PASS: property suites (TDOA offset invariance, k-NN hull containment, \
         CDF monotonicity, σ-scaling argmin invariance, first-path ≤ peak) each run 1000 cases"
    );
}

#[test]
fn acceptance_harness_noiseless_pipeline() {
    // Companion check to criterion 6 at the pipeline level: a noiseless
    // waveform run recovers the target essentially exactly.
    let scenario: Scenario = serde_json::from_str(
        r#"{
        "seed": 5,
        "trials": 5,
        "anchors": [
            {"id": "a", "x": 0.0, "y": 0.0},
            {"id": "b", "x": 20.0, "y": 0.0},
            {"id": "c", "x": 0.0, "y": 20.0}
        ],
        "targets": [{"x": 6.0, "y": 7.0}]
    }"#,
    )
    .unwrap();
    assert!(matches!(scenario.channel.noise, NoiseConfig::Noiseless));
    let out = run_monte_carlo(&scenario, &RunOptions::default()).unwrap();
    let rmse = out.report.positioning_rmse_m.unwrap();
    assert!(rmse <= 1e-6, "noiseless pipeline RMSE {rmse}");
    println!("ACCEPTANCE 6 (pipeline) PASS: noiseless end-to-end RMSE {rmse:.2e} m");
}
