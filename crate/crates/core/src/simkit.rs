//! Monte Carlo link simulation: Rayleigh flat fading, AWGN, BER/SER and
//! complexity aggregation per (SNR, detector).
//!
//! Every trial draws from its own ChaCha stream keyed by
//! `(seed, snr_index, trial_index)`, and all detectors of a trial see the
//! same channel, symbols and noise. Results therefore do not depend on the
//! detector list, the thread count or the scheduling order.

use crate::detectors::{ml_point_count, Detector, KBestSchedule, ML_MAX_POINTS};
use crate::error::{Error, Result};
use crate::lattice::{build_problem, LatticeProblem, RadiusPolicy, Representation};
use crate::modem::{bits_to_symbols, symbols_to_bits, Constellation, SymbolVector};
use crate::numkit::ComplexMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Channel redraws allowed per trial before the trial fails.
pub const MAX_CHANNEL_REDRAWS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let r = Self { start, stop, step };
        r.validate()?;
        Ok(r)
    }

    pub fn single(snr_db: f64) -> Self {
        Self { start: snr_db, stop: snr_db, step: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config(format!("invalid SNR range {self:?}; step must be positive")));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!("SNR stop {} is below start {}", self.stop, self.start)));
        }
        Ok(())
    }

    /// `start, start + step, ...` up to and including `stop` (with a small
    /// tolerance for accumulated rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_antennas: usize,
    pub mod_order: u32,
    pub detectors: Vec<Detector>,
    pub snr_db: SnrRange,
    pub trials_per_point: u64,
    pub seed: u64,
    pub radius_policy: RadiusPolicy,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::Config("need at least one antenna".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors selected".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials per point must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        self.snr_db.validate()?;
        self.radius_policy.validate()?;
        let c = self.constellation()?;
        if self.detectors.contains(&Detector::Ml) {
            let points = ml_point_count(self.n_antennas, &c);
            if points > ML_MAX_POINTS {
                return Err(Error::Config(format!(
                    "ml detector would enumerate {points} points for {n}x{n} {}-QAM (limit {ML_MAX_POINTS})",
                    self.mod_order,
                    n = self.n_antennas
                )));
            }
        }
        if self.detectors.contains(&Detector::SdProposed) {
            self.schedule()?;
        }
        Ok(())
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::new(self.mod_order)
    }

    pub fn schedule(&self) -> Result<KBestSchedule> {
        KBestSchedule::for_system(self.n_antennas, self.mod_order)
    }
}

/// One realization of `y = H s + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    pub h: ComplexMatrix,
    pub bits: Vec<u8>,
    /// Transmitted rail levels in natural order.
    pub symbols: SymbolVector,
    pub s: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub sigma_sq: f64,
    pub y: Vec<Complex64>,
    pub redraws: u32,
}

/// Detector output for one trial, scored against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub detector: Detector,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub flops: u64,
    pub preproc_flops: u64,
    pub nodes: u64,
    pub restarts: u32,
    pub weight: f64,
    /// Detected rail levels in natural order.
    pub x_hat: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub detector: Detector,
    pub n: usize,
    #[serde(rename = "mod")]
    pub mod_order: u32,
    pub ber: f64,
    pub ser: f64,
    pub mean_flops: f64,
    pub mean_preproc_flops: f64,
    pub mean_nodes: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub seed: u64,
}

/// Independent stream for one trial.
pub fn trial_rng(seed: u64, snr_index: usize, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) ^ trial_index);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// N x N matrix of i.i.d. CN(0, 1) path gains.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let entries = (0..n * n).map(|_| complex_gaussian(rng, 1.0)).collect();
    ComplexMatrix::new(n, n, entries).expect("n*n entries")
}

/// Total complex noise variance for a per-receive-antenna SNR of
/// `N * E_s / sigma^2`.
pub fn sigma_for_snr(snr_db: f64, c: &Constellation, n: usize) -> f64 {
    n as f64 * c.avg_symbol_energy() / 10f64.powf(snr_db / 10.0)
}

fn to_complex(natural: &SymbolVector) -> Vec<Complex64> {
    natural
        .as_slice()
        .chunks(2)
        .map(|p| Complex64::new(p[0] as f64, p[1] as f64))
        .collect()
}

/// Both lattice problems for one instance.
pub struct Problems {
    pub stacked: LatticeProblem,
    pub interleaved: LatticeProblem,
}

impl Problems {
    pub fn get(&self, r: Representation) -> &LatticeProblem {
        match r {
            Representation::Stacked => &self.stacked,
            Representation::Interleaved => &self.interleaved,
        }
    }
}

/// Draws bits, noise and a channel whose two lattice forms both factorize,
/// redrawing only the channel on failure.
pub fn draw_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    c: &Constellation,
    sigma_sq: f64,
    policy: &RadiusPolicy,
) -> Result<(ChannelInstance, Problems)> {
    let bits: Vec<u8> = (0..2 * n * c.bits_per_rail()).map(|_| rng.gen_range(0..=1u8)).collect();
    let symbols = bits_to_symbols(&bits, c, n)?;
    let s = to_complex(&symbols);
    let v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(rng, sigma_sq)).collect();
    let mut redraws = 0;
    loop {
        let h = draw_channel(rng, n);
        let hs = h.mul_vec(&s)?;
        let y: Vec<Complex64> = hs.iter().zip(&v).map(|(a, b)| a + b).collect();
        let built = build_problem(&h, &y, sigma_sq, Representation::Stacked, policy).and_then(|stacked| {
            build_problem(&h, &y, sigma_sq, Representation::Interleaved, policy)
                .map(|interleaved| Problems { stacked, interleaved })
        });
        match built {
            Ok(problems) => {
                let inst = ChannelInstance { h, bits, symbols, s, v, sigma_sq, y, redraws };
                return Ok((inst, problems));
            }
            Err(Error::DegenerateChannel { .. } | Error::ZeroStructure(_)) if redraws < MAX_CHANNEL_REDRAWS => {
                redraws += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs every configured detector on one freshly drawn instance.
pub fn run_trial<R: Rng + ?Sized>(rng: &mut R, cfg: &SimConfig, snr_db: f64) -> Result<Vec<TrialOutcome>> {
    let c = cfg.constellation()?;
    let schedule = if cfg.detectors.contains(&Detector::SdProposed) {
        cfg.schedule()?
    } else {
        KBestSchedule::none()
    };
    let sigma_sq = sigma_for_snr(snr_db, &c, cfg.n_antennas);
    let (inst, problems) = draw_instance(rng, cfg.n_antennas, &c, sigma_sq, &cfg.radius_policy)?;
    cfg.detectors
        .iter()
        .map(|&d| {
            let repr = d.representation();
            let p = problems.get(repr);
            let out = d.detect(p, &c, &cfg.radius_policy, &schedule)?;
            if (out.path_weight - out.weight).abs() > 1e-6 * out.weight.max(1.0) {
                return Err(Error::Domain(format!(
                    "{d}: search weight {} disagrees with recomputed weight {}",
                    out.path_weight, out.weight
                )));
            }
            let natural = repr.to_natural(&out.x_hat);
            let bits = symbols_to_bits(&natural, &c)?;
            let bit_errors = bits.iter().zip(&inst.bits).filter(|(a, b)| a != b).count() as u64;
            let symbol_errors = natural
                .as_slice()
                .chunks(2)
                .zip(inst.symbols.as_slice().chunks(2))
                .filter(|(a, b)| a != b)
                .count() as u64;
            Ok(TrialOutcome {
                detector: d,
                bit_errors,
                symbol_errors,
                flops: out.flops,
                preproc_flops: p.preprocessing.flops(),
                nodes: out.nodes_visited,
                restarts: out.restarts,
                weight: out.weight,
                x_hat: natural.0,
            })
        })
        .collect()
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// All trials at one SNR point, in trial order.
pub fn run_point(cfg: &SimConfig, snr_index: usize, snr_db: f64) -> Result<Vec<Vec<TrialOutcome>>> {
    cfg.validate()?;
    with_pool(cfg.threads, || {
        (0..cfg.trials_per_point)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, snr_index, t);
                run_trial(&mut rng, cfg, snr_db)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// Folds per-trial outcomes into one record per detector.
pub fn aggregate(cfg: &SimConfig, snr_db: f64, trials: &[Vec<TrialOutcome>]) -> Result<Vec<SweepRecord>> {
    let c = cfg.constellation()?;
    let count = trials.len() as u64;
    let bits_per_trial = (2 * cfg.n_antennas * c.bits_per_rail()) as f64;
    Ok(cfg
        .detectors
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let (mut bit_errors, mut sym_errors, mut flops, mut pre, mut nodes) = (0u64, 0u64, 0u64, 0u64, 0u64);
            for t in trials {
                let o = &t[i];
                debug_assert_eq!(o.detector, d);
                bit_errors += o.bit_errors;
                sym_errors += o.symbol_errors;
                flops += o.flops;
                pre += o.preproc_flops;
                nodes += o.nodes;
            }
            let n = count as f64;
            SweepRecord {
                snr_db,
                detector: d,
                n: cfg.n_antennas,
                mod_order: cfg.mod_order,
                ber: bit_errors as f64 / (n * bits_per_trial),
                ser: sym_errors as f64 / (n * cfg.n_antennas as f64),
                mean_flops: flops as f64 / n,
                mean_preproc_flops: pre as f64 / n,
                mean_nodes: nodes as f64 / n,
                trials: count,
                bit_errors,
                seed: cfg.seed,
            }
        })
        .collect())
}

/// One record per (SNR point, detector), SNR-major.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for (i, snr) in cfg.snr_db.points().into_iter().enumerate() {
        let trials = run_point(cfg, i, snr)?;
        let recs = aggregate(cfg, snr, &trials)?;
        for r in &recs {
            log::info!(
                "snr {:>5.1} dB  {:<7}  ber {:.3e}  flops {:.1}  nodes {:.1}",
                r.snr_db,
                r.detector.name(),
                r.ber,
                r.mean_flops,
                r.mean_nodes
            );
        }
        records.extend(recs);
    }
    Ok(records)
}
