use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bounds::{crlb_aoa, crlb_rss, crlb_toa};
use crate::channel::{
    apply_nlos, draw_multipath_profile, propagate_with_noise_sigma, quantize_delay, rss_to_range,
    sample_rss, ChannelParams, noise_sigma_for_snr,
};
use crate::positioning::{
    grid_bayes, hyperbolic_fix, knn_estimate, nls_solve, triangulate, trilaterate, wrap_angle,
    Anchor, Measurement, MeasurementKind, Point, PositionEstimate, PriorGrid, SolveStatus,
    TrainingSet, Weighting,
};
use crate::ranging::{toa_first_path, toa_peak, toa_two_step, ula_delays, aoa_ula};
use crate::signal::{build_ranging_signal_with_ratio, spectral_metrics, Waveform};
use crate::SPEED_OF_LIGHT;

use super::report::{
    CdfPoint, CrlbReference, MonteCarloOutput, PositionRecord, RangingStats, RmseReport,
    TrialRecord,
};
use super::scenario::{EstimatorConfig, NoiseConfig, RangingMethod, Scenario};
use super::seed::trial_rng;
use super::HarnessError;

/// Seed-path tags keeping the random streams of different measurement kinds
/// disjoint.
const TAG_TOA: u64 = 1;
const TAG_RSS: u64 = 2;
const TAG_AOA: u64 = 3;
const TAG_TDOA: u64 = 4;
const TAG_FINGERPRINT: u64 = 100;

/// Execution knobs that must not change results.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Run trials on the rayon pool. Reports are byte-identical either way.
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

/// Run the full two-step pipeline over every (target, trial) pair: build the
/// ranging signal, draw a channel per anchor, estimate the configured
/// parameters, fuse them into a position, and aggregate the errors.
///
/// Identical (scenario, seed) inputs produce byte-identical reports,
/// regardless of `options.parallel`.
pub fn run_monte_carlo(
    scenario: &Scenario,
    options: &RunOptions,
) -> Result<MonteCarloOutput, HarnessError> {
    scenario.validate()?;
    let ctx = RunContext::prepare(scenario)?;
    let total = scenario.trials * scenario.targets.len();

    let results: Vec<TrialResult> = if options.parallel {
        (0..total).into_par_iter().map(|t| ctx.run_trial(t)).collect()
    } else {
        (0..total).map(|t| ctx.run_trial(t)).collect()
    };

    Ok(ctx.assemble(results))
}

enum NoiseMode {
    Off,
    /// Per-sample noise deviation derived from the configured SNR or budget.
    Sigma(f64),
}

struct RunContext<'a> {
    scenario: &'a Scenario,
    anchors: Vec<Anchor<f64>>,
    params: ChannelParams,
    tx: Waveform,
    noise: NoiseMode,
    /// Link SNR (linear) when the noise model defines one.
    snr: Option<f64>,
    beta: f64,
    /// Variance of a TOA-derived range measurement, m².
    toa_range_var: f64,
}

impl<'a> RunContext<'a> {
    fn prepare(scenario: &'a Scenario) -> Result<Self, HarnessError> {
        let spec = scenario.signal.to_spec();
        let signal = build_ranging_signal_with_ratio(
            &spec,
            scenario.signal.width_sigma_ratio,
            scenario.signal.sample_rate,
        )?;

        let (tx, noise, snr) = match scenario.channel.noise {
            NoiseConfig::Noiseless => (signal, NoiseMode::Off, None),
            NoiseConfig::Snr { snr_db } => {
                if snr_db.is_infinite() {
                    (signal, NoiseMode::Off, None)
                } else {
                    let sigma = noise_sigma_for_snr(
                        signal.energy(),
                        snr_db,
                        scenario.signal.sample_rate,
                    );
                    (signal, NoiseMode::Sigma(sigma), Some(10f64.powf(snr_db / 10.0)))
                }
            }
            NoiseConfig::PowerBudget { max_average_power, noise_psd } => {
                // Scale so each transmitted pulse carries T_f·P_max of
                // energy; the link SNR is then (code weight)·T_f·P_max/N₀
                // and grows with the frame count.
                let weight = spec.code_weight() as f64;
                let pulse_energy = signal.energy() / weight;
                let target_energy = spec.frame_interval * max_average_power;
                let scaled = signal.scaled((target_energy / pulse_energy).sqrt());
                let snr = scaled.energy() / noise_psd;
                let sigma = (noise_psd * scenario.signal.sample_rate / 2.0).sqrt();
                (scaled, NoiseMode::Sigma(sigma), Some(snr))
            }
        };

        let beta = spectral_metrics(&tx)?.effective_bandwidth;
        let toa_range_var = match snr {
            Some(snr) => {
                let bound = SPEED_OF_LIGHT * crlb_toa(snr, beta)?;
                bound * bound
            }
            None => 1.0,
        };

        Ok(Self {
            scenario,
            anchors: scenario.anchors(),
            params: scenario.channel.to_params(),
            tx,
            noise,
            snr,
            beta,
            toa_range_var,
        })
    }

    fn fs(&self) -> f64 {
        self.scenario.signal.sample_rate
    }

    /// Post-signal observation margin: 1.5 pulse widths of samples.
    fn observation_tail(&self) -> usize {
        (1.5 * self.scenario.signal.pulse_width * self.fs()).ceil() as usize + 8
    }

    fn run_trial(&self, trial: usize) -> TrialResult {
        let target_cfg = self.scenario.targets[trial / self.scenario.trials];
        let target = Point::new(target_cfg.x, target_cfg.y);
        let nlos = self.scenario.channel.nlos.enabled;

        let mut result = TrialResult::default();
        let mut measurements: Vec<Measurement<f64>> = Vec::new();

        for &kind in &self.scenario.measurements {
            match kind {
                MeasurementKind::ToaRange => {
                    for (i, anchor) in self.anchors.iter().enumerate() {
                        result.attempts += 1;
                        match self.estimate_toa(trial, i, TAG_TOA, target) {
                            Some(toa) => {
                                result.detected += 1;
                                let est = SPEED_OF_LIGHT * toa.estimate;
                                let truth = SPEED_OF_LIGHT * toa.los_delay;
                                result.records.push(TrialRecord {
                                    trial,
                                    anchor_id: anchor.id.clone(),
                                    kind,
                                    true_value: truth,
                                    estimated: est,
                                    error: est - truth,
                                    nlos,
                                });
                                measurements.push(Measurement::new(
                                    kind,
                                    anchor.id.clone(),
                                    est,
                                    self.toa_range_var,
                                ));
                            }
                            None => {
                                result.failed = true;
                            }
                        }
                    }
                }
                MeasurementKind::TdoaRange => {
                    let toas: Vec<Option<ToaOutcome>> = (0..self.anchors.len())
                        .map(|i| {
                            result.attempts += 1;
                            let out = self.estimate_toa(trial, i, TAG_TDOA, target);
                            if out.is_some() {
                                result.detected += 1;
                            }
                            out
                        })
                        .collect();
                    let ref_idx = self
                        .anchors
                        .iter()
                        .position(|a| a.is_tdoa_reference)
                        .expect("validated");
                    let Some(ref_toa) = &toas[ref_idx] else {
                        result.failed = true;
                        continue;
                    };
                    for (i, anchor) in self.anchors.iter().enumerate() {
                        if i == ref_idx {
                            continue;
                        }
                        let Some(toa) = &toas[i] else {
                            result.failed = true;
                            continue;
                        };
                        let est = SPEED_OF_LIGHT * (toa.estimate - ref_toa.estimate);
                        let truth = SPEED_OF_LIGHT * (toa.los_delay - ref_toa.los_delay);
                        result.records.push(TrialRecord {
                            trial,
                            anchor_id: anchor.id.clone(),
                            kind,
                            true_value: truth,
                            estimated: est,
                            error: est - truth,
                            nlos,
                        });
                        let mut m = Measurement::new(
                            kind,
                            anchor.id.clone(),
                            est,
                            // Differencing two TOA estimates sums their
                            // variances.
                            2.0 * self.toa_range_var,
                        );
                        m.ref_anchor_id = Some(self.anchors[ref_idx].id.clone());
                        measurements.push(m);
                    }
                }
                MeasurementKind::RssRange => {
                    for (i, anchor) in self.anchors.iter().enumerate() {
                        result.attempts += 1;
                        let mut rng = trial_rng(self.scenario.seed, &[trial as u64, i as u64, TAG_RSS]);
                        let d = target.distance_to(anchor.position);
                        let Ok(rss) = sample_rss(&self.params, d, &mut rng) else {
                            result.failed = true;
                            continue;
                        };
                        result.detected += 1;
                        let est = rss_to_range(&self.params, rss);
                        let variance = if self.params.shadowing_db > 0.0 {
                            let bound = crlb_rss(
                                self.params.path_loss_exponent,
                                self.params.shadowing_db,
                                est,
                            )
                            .expect("positive inputs");
                            bound * bound
                        } else {
                            1.0
                        };
                        result.records.push(TrialRecord {
                            trial,
                            anchor_id: anchor.id.clone(),
                            kind,
                            true_value: d,
                            estimated: est,
                            error: est - d,
                            nlos,
                        });
                        measurements.push(Measurement::new(kind, anchor.id.clone(), est, variance));
                    }
                }
                MeasurementKind::Aoa => {
                    for (i, anchor) in self.anchors.iter().enumerate() {
                        result.attempts += 1;
                        match self.estimate_aoa(trial, i, target) {
                            Some((est, variance)) => {
                                result.detected += 1;
                                let truth = (target.y - anchor.position.y)
                                    .atan2(target.x - anchor.position.x);
                                result.records.push(TrialRecord {
                                    trial,
                                    anchor_id: anchor.id.clone(),
                                    kind,
                                    true_value: truth,
                                    estimated: est,
                                    error: wrap_angle(est - truth),
                                    nlos,
                                });
                                measurements.push(Measurement::new(
                                    kind,
                                    anchor.id.clone(),
                                    est,
                                    variance,
                                ));
                            }
                            None => {
                                result.failed = true;
                            }
                        }
                    }
                }
            }
        }

        if !result.failed {
            match self.solve_position(&measurements) {
                Some(est) if est.status == SolveStatus::Converged => {
                    let error = est.position.distance_to(target);
                    result.position = Some(PositionRecord {
                        trial,
                        true_x: target.x,
                        true_y: target.y,
                        est_x: est.position.x,
                        est_y: est.position.y,
                        error,
                    });
                }
                _ => {
                    result.failed = true;
                }
            }
        }
        result
    }

    /// Channel draw, propagation, and TOA estimation for one link. `None`
    /// means the estimator declared no detection (or the draw degenerated).
    fn estimate_toa(
        &self,
        trial: usize,
        anchor_idx: usize,
        tag: u64,
        target: Point<f64>,
    ) -> Option<ToaOutcome> {
        let anchor = &self.anchors[anchor_idx];
        let true_delay = target.distance_to(anchor.position) / SPEED_OF_LIGHT;
        let mut rng = trial_rng(self.scenario.seed, &[trial as u64, anchor_idx as u64, tag]);

        let profile =
            draw_multipath_profile(&self.params.multipath, true_delay, &mut rng).ok()?;
        let profile = apply_nlos(&profile, &self.params.nlos, &mut rng).ok()?;
        let sigma = match self.noise {
            NoiseMode::Off => 0.0,
            NoiseMode::Sigma(s) => s,
        };
        let mut received =
            propagate_with_noise_sigma(&self.tx, &profile, sigma, &mut rng).ok()?;

        // The propagated record stops where the last echo ends; keep
        // observing for a pulse width beyond it so the correlation peak is
        // interior and sub-sample refinement has both neighbors.
        received = pad_with_noise(received, self.observation_tail(), sigma, &mut rng);
        if self.scenario.ranging.method == RangingMethod::TwoStep {
            received = self.pad_to_block(received, sigma, &mut rng);
        }

        let estimate = match self.scenario.ranging.method {
            RangingMethod::Peak => toa_peak(&received, &self.tx).ok()?.toa,
            RangingMethod::First => {
                toa_first_path(&received, &self.tx, &self.scenario.ranging.threshold)
                    .ok()?
                    .toa
            }
            RangingMethod::TwoStep => {
                toa_two_step(
                    &received,
                    &self.tx,
                    self.scenario.ranging.two_step_block,
                    &self.scenario.ranging.threshold,
                )
                .ok()?
                .estimate
                .toa
            }
        };

        // The simulator places the first path on the sample grid; fold the
        // known quantization remainder back in so simulator granularity does
        // not masquerade as estimator error. NLOS excess delay stays in.
        let (_, remainder) = quantize_delay(profile.first_path_delay(), self.fs());
        Some(ToaOutcome { estimate: estimate + remainder, los_delay: true_delay })
    }

    /// Extend a record to a whole number of energy blocks, with fresh noise
    /// so the tail blocks keep honest statistics.
    fn pad_to_block<R: Rng>(&self, received: Waveform, sigma: f64, rng: &mut R) -> Waveform {
        let block_samples =
            (self.scenario.ranging.two_step_block * self.fs()).round().max(1.0) as usize;
        let remainder = received.len() % block_samples;
        if remainder == 0 {
            return received;
        }
        pad_with_noise(received, block_samples - remainder, sigma, rng)
    }

    /// Synthesize per-element ULA delays from the true bearing plus Gaussian
    /// delay noise and fit the angle back out. The estimation error of the
    /// ULA chain is applied to the true bearing, which sidesteps the array's
    /// front-back ambiguity for targets behind the aperture.
    fn estimate_aoa(&self, trial: usize, anchor_idx: usize, target: Point<f64>) -> Option<(f64, f64)> {
        let cfg = &self.scenario.ranging.aoa;
        let ula = cfg.to_ula();
        let anchor = &self.anchors[anchor_idx];
        let bearing =
            (target.y - anchor.position.y).atan2(target.x - anchor.position.x);
        let base_delay = target.distance_to(anchor.position) / SPEED_OF_LIGHT;

        let mut delays = ula_delays(bearing, &ula, base_delay);
        if cfg.delay_noise > 0.0 {
            let mut rng =
                trial_rng(self.scenario.seed, &[trial as u64, anchor_idx as u64, TAG_AOA]);
            let normal = Normal::new(0.0, cfg.delay_noise).expect("positive sigma");
            for d in &mut delays {
                *d += normal.sample(&mut rng);
            }
        }
        let fitted = aoa_ula(&delays, &ula).ok()?;
        let folded_truth = bearing.sin().clamp(-1.0, 1.0).asin();
        let est = wrap_angle(bearing + (fitted.angle - folded_truth));

        let variance = if cfg.delay_noise > 0.0 {
            let n = cfg.num_elements as f64;
            // Var of the LS slope over element index, mapped through
            // sin α = c·slope/l and the asin derivative.
            let k_var = n * (n * n - 1.0) / 12.0;
            let slope_var = cfg.delay_noise * cfg.delay_noise / k_var;
            let sin_var = (SPEED_OF_LIGHT / cfg.spacing).powi(2) * slope_var;
            let cos = fitted.angle.cos().max(1e-6);
            sin_var / (cos * cos)
        } else {
            1.0
        };
        Some((est, variance))
    }

    fn solve_position(&self, measurements: &[Measurement<f64>]) -> Option<PositionEstimate<f64>> {
        match self.scenario.estimator {
            EstimatorConfig::Nls => nls_solve(measurements, &self.anchors, None).ok(),
            EstimatorConfig::Trilaterate => {
                let ranges: Option<Vec<f64>> = self
                    .anchors
                    .iter()
                    .map(|a| {
                        measurements
                            .iter()
                            .find(|m| {
                                m.anchor_id == a.id
                                    && matches!(
                                        m.kind,
                                        MeasurementKind::ToaRange | MeasurementKind::RssRange
                                    )
                            })
                            .map(|m| m.value)
                    })
                    .collect();
                trilaterate(&self.anchors, &ranges?).ok()
            }
            EstimatorConfig::Triangulate => {
                let angles: Option<Vec<f64>> = self
                    .anchors
                    .iter()
                    .map(|a| {
                        measurements
                            .iter()
                            .find(|m| m.anchor_id == a.id && m.kind == MeasurementKind::Aoa)
                            .map(|m| m.value)
                    })
                    .collect();
                triangulate(&self.anchors, &angles?).ok()
            }
            EstimatorConfig::Hyperbolic => {
                let tdoas: Option<Vec<f64>> = self
                    .anchors
                    .iter()
                    .filter(|a| !a.is_tdoa_reference)
                    .map(|a| {
                        measurements
                            .iter()
                            .find(|m| m.anchor_id == a.id && m.kind == MeasurementKind::TdoaRange)
                            .map(|m| m.value)
                    })
                    .collect();
                hyperbolic_fix(&self.anchors, &tdoas?).ok().map(|fix| fix.best)
            }
            EstimatorConfig::GridBayes { origin_x, origin_y, width, height, resolution } => {
                let prior =
                    PriorGrid::uniform(Point::new(origin_x, origin_y), width, height, resolution)
                        .ok()?;
                grid_bayes(measurements, &self.anchors, &prior).ok().map(|r| r.map)
            }
        }
    }

    fn assemble(&self, results: Vec<TrialResult>) -> MonteCarloOutput {
        let total = results.len();
        let mut ranging_records = Vec::new();
        let mut position_records = Vec::new();
        let mut attempts = 0usize;
        let mut detected = 0usize;
        let mut failed_trials = 0usize;
        for r in results {
            ranging_records.extend(r.records);
            if let Some(p) = r.position {
                position_records.push(p);
            }
            attempts += r.attempts;
            detected += r.detected;
            if r.failed {
                failed_trials += 1;
            }
        }

        let kinds = [
            MeasurementKind::ToaRange,
            MeasurementKind::RssRange,
            MeasurementKind::Aoa,
            MeasurementKind::TdoaRange,
        ];
        let mut ranging = Vec::new();
        for kind in kinds {
            for nlos in [false, true] {
                let errors: Vec<f64> = ranging_records
                    .iter()
                    .filter(|r| r.kind == kind && r.nlos == nlos)
                    .map(|r| r.error)
                    .collect();
                if errors.is_empty() {
                    continue;
                }
                let mean = errors.iter().sum::<f64>() / errors.len() as f64;
                ranging.push(RangingStats {
                    kind,
                    nlos,
                    count: errors.len(),
                    rmse: super::metrics::rmse(&errors).expect("non-empty"),
                    mean_error: mean,
                });
            }
        }

        let mut position_errors: Vec<f64> =
            position_records.iter().map(|p| p.error).collect();
        let positioning_rmse_m = if position_errors.is_empty() {
            None
        } else {
            Some(super::metrics::rmse(&position_errors).expect("non-empty"))
        };
        position_errors.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
        let n = position_errors.len();
        let position_error_cdf: Vec<CdfPoint> = position_errors
            .iter()
            .enumerate()
            .map(|(i, &e)| CdfPoint { threshold_m: e, fraction: (i + 1) as f64 / n as f64 })
            .collect();

        let report = RmseReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.scenario.seed,
            trials: total,
            completed_trials: total - failed_trials,
            failed_trials,
            failure_policy: self.scenario.failure_policy,
            detection_rate: if attempts > 0 { detected as f64 / attempts as f64 } else { 1.0 },
            ranging,
            positioning_rmse_m,
            position_error_cdf,
            crlb: self.crlb_reference(),
        };

        MonteCarloOutput { report, ranging_records, position_records }
    }

    fn crlb_reference(&self) -> CrlbReference {
        let toa_range_m = self
            .snr
            .map(|snr| SPEED_OF_LIGHT * crlb_toa(snr, self.beta).expect("positive inputs"));
        let rss_range_m = if self.params.shadowing_db > 0.0 {
            let target = self.scenario.targets[0];
            let point = Point::new(target.x, target.y);
            let mean_d = self
                .anchors
                .iter()
                .map(|a| a.position.distance_to(point))
                .sum::<f64>()
                / self.anchors.len() as f64;
            crlb_rss(self.params.path_loss_exponent, self.params.shadowing_db, mean_d).ok()
        } else {
            None
        };
        let aoa_rad = self.snr.and_then(|snr| {
            let cfg = &self.scenario.ranging.aoa;
            crlb_aoa(snr, self.beta, cfg.num_elements, cfg.spacing, 0.0).ok()
        });
        CrlbReference {
            label: "single-path AWGN bound (also shown for multipath/NLOS runs)".to_string(),
            snr_db: self.snr.map(|s| 10.0 * s.log10()),
            effective_bandwidth_hz: self.beta,
            toa_range_m,
            rss_range_m,
            aoa_rad,
        }
    }
}

/// Append `extra` samples of measurement noise (zeros when noiseless).
fn pad_with_noise<R: Rng>(received: Waveform, extra: usize, sigma: f64, rng: &mut R) -> Waveform {
    let mut samples = received.samples().to_vec();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        samples.extend((0..extra).map(|_| normal.sample(rng)));
    } else {
        samples.extend(std::iter::repeat(0.0).take(extra));
    }
    Waveform::new(received.sample_rate(), received.t0(), samples).expect("non-empty")
}

struct ToaOutcome {
    /// Arrival-time estimate with the grid quantization remainder restored.
    estimate: f64,
    /// True geometric line-of-sight delay.
    los_delay: f64,
}

#[derive(Default)]
struct TrialResult {
    records: Vec<TrialRecord>,
    position: Option<PositionRecord>,
    attempts: usize,
    detected: usize,
    failed: bool,
}

/// Synthesize an RSS fingerprint database on an `nx` × `ny` grid over the
/// given domain (origin, width, height): one shadowing draw per anchor per
/// grid point, reproducible from the scenario seed.
pub fn build_rss_fingerprints(
    scenario: &Scenario,
    nx: usize,
    ny: usize,
    domain: (f64, f64, f64, f64),
) -> Result<(TrainingSet<f64>, Vec<String>), HarnessError> {
    scenario.validate()?;
    if nx == 0 || ny == 0 {
        return Err(HarnessError::invalid("fingerprint", "grid must be at least 1×1"));
    }
    let (x0, y0, width, height) = domain;
    let params = scenario.channel.to_params();
    let anchors = scenario.anchors();
    let mut training = TrainingSet::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let location = Point::new(
                x0 + (ix as f64 + 0.5) * width / nx as f64,
                y0 + (iy as f64 + 0.5) * height / ny as f64,
            );
            let idx = (iy * nx + ix) as u64;
            let mut vector = Vec::with_capacity(anchors.len());
            for (a_idx, anchor) in anchors.iter().enumerate() {
                let mut rng =
                    trial_rng(scenario.seed, &[TAG_FINGERPRINT, idx, a_idx as u64]);
                let d = location.distance_to(anchor.position).max(1e-3);
                vector.push(sample_rss(&params, d, &mut rng)?);
            }
            training.push(vector, location)?;
        }
    }
    let ids = anchors.iter().map(|a| a.id.clone()).collect();
    Ok((training, ids))
}

/// Estimate a position for each query vector against a fingerprint database.
pub fn query_fingerprints(
    training: &TrainingSet<f64>,
    queries: &[Vec<f64>],
    k: usize,
    weighting: Weighting,
) -> Result<Vec<Point<f64>>, HarnessError> {
    queries
        .iter()
        .map(|q| knn_estimate(training, q, k, weighting).map_err(HarnessError::from))
        .collect()
}
