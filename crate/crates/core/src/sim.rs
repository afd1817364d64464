//! Seeded, frame-parallel Monte Carlo BLER engine.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aed::AeDecoder;
use crate::error::{Error, Result};
use crate::perm::{sample_ensemble, Architecture, EnsembleSpec, SamplingPolicy};
use crate::polar::{puf_code_1024, CodeSpec};
use crate::puf::{enroll, sample_noise, HelperData, PufDevice, SegmentedScheme};
use crate::sc::{bit_to_llr, PlanOptions};

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959963984540054;

/// Frames simulated per parallel batch.
const BATCH: u64 = 1024;

pub const DEFAULT_MIN_ERRORS: u64 = 100;
pub const DEFAULT_MAX_FRAMES: u64 = 10_000_000;

/// Wilson score interval at 95% confidence.
pub fn ci_bounds(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let high = if errors == frames {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low, high)
}

/// Counter-based seed derivation: the ChaCha8 keystream under the master
/// seed, read at stream `point` and position `frame`. Distinct
/// `(point, frame)` inputs address disjoint keystream words.
#[derive(Clone)]
pub struct FrameSeeder {
    base: ChaCha8Rng,
    point: u64,
}

impl FrameSeeder {
    pub fn new(master: u64, point: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(master),
            point,
        }
    }

    pub fn seed(&self, frame: u64) -> u64 {
        let mut rng = self.base.clone();
        rng.set_stream(self.point);
        rng.set_word_pos(2 * frame as u128);
        rng.next_u64()
    }

    /// Seed for per-point setup (device and message), outside the frame range.
    pub fn setup_seed(&self) -> u64 {
        let mut rng = self.base.clone();
        rng.set_stream(self.point | 1 << 63);
        rng.next_u64()
    }
}

pub fn frame_seed(master: u64, point: u64, frame: u64) -> u64 {
    FrameSeeder::new(master, point).seed(frame)
}

/// Stop once `min_errors` frame errors have been seen or after `max_frames`
/// frames, whichever comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: DEFAULT_MIN_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_errors == 0 {
            return Err(Error::InvalidParameter(
                "stopping rule needs at least one error".into(),
            ));
        }
        if self.max_frames == 0 {
            return Err(Error::InvalidParameter(
                "stopping rule allows no frames".into(),
            ));
        }
        if self.min_errors > self.max_frames {
            return Err(Error::InvalidParameter(format!(
                "{} errors can never be observed within {} frames",
                self.min_errors, self.max_frames
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub frames: u64,
    pub errors: u64,
    pub bler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seconds: f64,
    pub saturations: u64,
}

impl SweepRow {
    fn new(epsilon: f64, frames: u64, errors: u64, seconds: f64, saturations: u64) -> Self {
        let (ci_low, ci_high) = ci_bounds(errors, frames);
        let bler = if frames == 0 {
            0.0
        } else {
            errors as f64 / frames as f64
        };
        Self {
            epsilon,
            frames,
            errors,
            bler,
            ci_low,
            ci_high,
            seconds,
            saturations,
        }
    }
}

/// Everything needed to simulate one decoder on one segmented scheme.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub scheme: SegmentedScheme,
    pub decoder: AeDecoder,
    pub stop: StopRule,
    pub seed: u64,
    pub workers: usize,
    /// Transmit the all-zero payload over the noise alone instead of running
    /// enrollment and activation.
    pub all_zero: bool,
    /// Record wall-clock time; when off, `seconds` is written as 0 so that
    /// output files are byte-reproducible.
    pub timing: bool,
}

/// Enrolled device state shared by all frames of a sweep point.
struct Enrollment {
    device: PufDevice,
    message: Vec<u8>,
    helper: HelperData,
    codeword: Vec<u8>,
}

struct Worker {
    decoder: AeDecoder,
    noise: Vec<u8>,
    llr: Vec<i32>,
    estimate: Vec<u8>,
}

impl Simulation {
    pub fn new(scheme: SegmentedScheme, decoder: AeDecoder, seed: u64) -> Result<Self> {
        if decoder.len() != scheme.code.len() {
            return Err(Error::LengthMismatch {
                expected: scheme.code.len(),
                found: decoder.len(),
            });
        }
        Ok(Self {
            scheme,
            decoder,
            stop: StopRule::default(),
            seed,
            workers: 1,
            all_zero: false,
            timing: true,
        })
    }

    fn enroll_point(&self, epsilon: f64, seeder: &FrameSeeder) -> Result<Enrollment> {
        let mut rng = ChaCha8Rng::seed_from_u64(seeder.setup_seed());
        let device = PufDevice::random(self.scheme.cells(), epsilon, None, &mut rng)?;
        let message: Vec<u8> = (0..self.scheme.payload_bits())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        let helper = enroll(&device, &message, &self.scheme)?;
        let codeword = message
            .chunks(self.scheme.code.k())
            .map(|m| self.scheme.code.encode(m))
            .collect::<Result<Vec<_>>>()?
            .concat();
        Ok(Enrollment {
            device,
            message,
            helper,
            codeword,
        })
    }

    /// Simulates one frame; returns whether the payload was lost.
    fn frame(
        &self,
        epsilon: f64,
        enrolled: Option<&Enrollment>,
        worker: &mut Worker,
        seed: u64,
    ) -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.scheme.code.len();
        worker.noise = sample_noise(self.scheme.cells(), epsilon, &mut rng);
        let k = self.scheme.code.k();
        for s in 0..self.scheme.segments {
            let cells = s * n..(s + 1) * n;
            let e = &worker.noise[cells.clone()];
            match enrolled {
                Some(en) => {
                    let x = &en.device.golden[cells.clone()];
                    let w = &en.helper.offset[cells.clone()];
                    let c = &en.codeword[cells];
                    for i in 0..n {
                        let y = x[i] ^ e[i] ^ w[i];
                        // y = x* ⊕ e ⊕ c ⊕ x* = c ⊕ e
                        if y != c[i] ^ e[i] {
                            return Err(Error::InvalidParameter(
                                "helper data does not match the enrolled device".into(),
                            ));
                        }
                        worker.llr[i] = bit_to_llr(y);
                    }
                }
                None => {
                    for (l, &b) in worker.llr.iter_mut().zip(e) {
                        *l = bit_to_llr(b);
                    }
                }
            }
            worker
                .decoder
                .decode_into(&worker.llr, &mut worker.estimate, None)?;
            let ok = match enrolled {
                Some(en) => {
                    let m = self.scheme.code.extract_message(&worker.estimate)?;
                    m[..] == en.message[s * k..(s + 1) * k]
                }
                None => worker.estimate.iter().all(|&b| b == 0),
            };
            if !ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Runs one sweep point. The stopping frame is determined exactly, so
    /// the result does not depend on the worker count.
    pub fn run_point(&self, epsilon: f64, point: u64) -> Result<SweepRow> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {epsilon} not in [0, 0.5)"
            )));
        }
        self.stop.validate()?;
        let start = Instant::now();
        let seeder = FrameSeeder::new(self.seed, point);
        let enrolled = if self.all_zero {
            None
        } else {
            Some(self.enroll_point(epsilon, &seeder)?)
        };
        let n = self.scheme.code.len();
        let new_worker = || Worker {
            decoder: self.decoder.clone(),
            noise: Vec::new(),
            llr: vec![0; n],
            estimate: vec![0; n],
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;

        let (mut frames, mut errors, mut saturations) = (0u64, 0u64, 0u64);
        'outer: while frames < self.stop.max_frames {
            let end = (frames + BATCH).min(self.stop.max_frames);
            let outcomes: Vec<(bool, u64)> = pool.install(|| {
                (frames as usize..end as usize)
                    .into_par_iter()
                    .with_min_len(16)
                    .map_init(new_worker, |w, f| {
                        let lost =
                            self.frame(epsilon, enrolled.as_ref(), w, seeder.seed(f as u64))?;
                        Ok((lost, w.decoder.take_saturations()))
                    })
                    .collect::<Result<_>>()
            })?;
            for (lost, sat) in outcomes {
                frames += 1;
                saturations += sat;
                if lost {
                    errors += 1;
                    if errors >= self.stop.min_errors {
                        break 'outer;
                    }
                }
            }
        }
        let seconds = if self.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok(SweepRow::new(epsilon, frames, errors, seconds, saturations))
    }

    pub fn run_sweep(&self, epsilons: &[f64]) -> Result<Vec<SweepRow>> {
        epsilons
            .iter()
            .enumerate()
            .map(|(i, &e)| self.run_point(e, i as u64))
            .collect()
    }
}

/// Sweep configuration file. Relative paths resolve against the file's
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Code spec file; the (1024, 78) PUF code when absent.
    #[serde(default)]
    pub code: Option<PathBuf>,
    /// Ensemble file; takes precedence over `architecture`.
    #[serde(default)]
    pub ensemble: Option<PathBuf>,
    #[serde(default)]
    pub architecture: Option<Architecture>,
    #[serde(default = "one")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub ensemble_seed: Option<u64>,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub q_max: Option<u32>,
    #[serde(default = "one")]
    pub segments: usize,
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub all_zero: bool,
    #[serde(default = "yes")]
    pub timing: bool,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}
fn default_max_frames() -> u64 {
    DEFAULT_MAX_FRAMES
}

impl ExperimentConfig {
    pub fn new(epsilons: Vec<f64>, seed: u64) -> Self {
        Self {
            code: None,
            ensemble: None,
            architecture: None,
            ensemble_size: 1,
            ensemble_seed: None,
            epsilons,
            q_max: None,
            segments: 1,
            min_errors: DEFAULT_MIN_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
            seed,
            workers: None,
            output: None,
            all_zero: false,
            timing: true,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.code, &mut cfg.ensemble, &mut cfg.output]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        StopRule {
            min_errors: self.min_errors,
            max_frames: self.max_frames,
        }
        .validate()?;
        if self.epsilons.is_empty() {
            return Err(Error::InvalidParameter("epsilon list is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..0.5).contains(*e)) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {e} not in [0, 0.5)"
            )));
        }
        Ok(())
    }

    pub fn load_code(&self) -> Result<CodeSpec> {
        match &self.code {
            Some(p) => CodeSpec::load(p),
            None => Ok(puf_code_1024()),
        }
    }

    /// Ensemble from the file, sampled from `architecture`, or the identity.
    pub fn load_ensemble(&self, code: &CodeSpec) -> Result<EnsembleSpec> {
        if let Some(p) = &self.ensemble {
            return EnsembleSpec::load(p);
        }
        match self.architecture {
            None if self.ensemble_size == 1 => Ok(EnsembleSpec::identity()),
            None => Err(Error::InvalidEnsemble(
                "ensemble_size > 1 needs an ensemble file or an architecture".into(),
            )),
            Some(arch) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.ensemble_seed.unwrap_or(self.seed));
                let mut spec = sample_ensemble(
                    code,
                    arch,
                    self.ensemble_size,
                    SamplingPolicy::for_code(code),
                    &mut rng,
                )?;
                spec.seed = self.ensemble_seed.or(Some(self.seed));
                Ok(spec)
            }
        }
    }

    pub fn simulation(&self) -> Result<Simulation> {
        self.validate()?;
        let code = Arc::new(self.load_code()?);
        let ensemble = self.load_ensemble(&code)?;
        let decoder = AeDecoder::new(&code, &ensemble, PlanOptions::binary(self.q_max))?;
        let mut sim = Simulation::new(
            SegmentedScheme::new(code, self.segments)?,
            decoder,
            self.seed,
        )?;
        sim.stop = StopRule {
            min_errors: self.min_errors,
            max_frames: self.max_frames,
        };
        sim.workers = self.workers.unwrap_or(1);
        sim.all_zero = self.all_zero;
        sim.timing = self.timing;
        Ok(sim)
    }
}

/// Runs the configured sweep and writes the CSV if an output path is set.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let rows = config.simulation()?.run_sweep(&config.epsilons)?;
    if let Some(path) = &config.output {
        write_csv(path, &rows)?;
    }
    Ok(rows)
}

pub fn write_csv_to<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "epsilon",
        "frames",
        "errors",
        "bler",
        "ci_low",
        "ci_high",
        "seconds",
        "saturations",
    ])?;
    for r in rows {
        w.write_record([
            r.epsilon.to_string(),
            r.frames.to_string(),
            r.errors.to_string(),
            format!("{:.6e}", r.bler),
            format!("{:.6e}", r.ci_low),
            format!("{:.6e}", r.ci_high),
            format!("{:.3}", r.seconds),
            r.saturations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv_to(std::fs::File::create(path)?, rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_sim(all_zero: bool) -> Simulation {
        let code = Arc::new(puf_code_1024());
        let decoder = AeDecoder::new(
            &code,
            &EnsembleSpec::identity(),
            PlanOptions::binary(Some(5)),
        )
        .unwrap();
        let mut sim = Simulation::new(SegmentedScheme::new(code, 1).unwrap(), decoder, 9).unwrap();
        sim.all_zero = all_zero;
        sim.timing = false;
        sim
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(ci_bounds(0, 100).0, 0.0);
        assert_eq!(ci_bounds(100, 100).1, 1.0);
        let (lo, hi) = ci_bounds(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 1e-3);
        // by hand: centre 0.5, half = 1.96/1.0384 * sqrt(0.0025 + 0.0000960) = 0.0961...
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        for (e, n) in [(1, 10), (3, 1000), (999, 1000)] {
            let (lo, hi) = ci_bounds(e, n);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StopRule {
            min_errors: 0,
            max_frames: 10
        }
        .validate()
        .is_err());
        assert!(StopRule {
            min_errors: 11,
            max_frames: 10
        }
        .validate()
        .is_err());
        assert!(StopRule {
            min_errors: 1,
            max_frames: 0
        }
        .validate()
        .is_err());
        assert!(StopRule::default().validate().is_ok());
    }

    #[test]
    fn frame_seeds_do_not_collide() {
        let mut seen = HashSet::new();
        for point in 0..4 {
            let s = FrameSeeder::new(77, point);
            assert!(seen.insert(s.setup_seed()));
            for f in 0..5000 {
                assert!(seen.insert(s.seed(f)));
            }
        }
        assert_eq!(frame_seed(77, 2, 17), FrameSeeder::new(77, 2).seed(17));
        assert_ne!(frame_seed(77, 2, 17), frame_seed(78, 2, 17));
    }

    #[test]
    fn noiseless_point_runs_to_max_frames() {
        let mut sim = small_sim(false);
        sim.stop = StopRule {
            min_errors: 1,
            max_frames: 300,
        };
        let row = sim.run_point(0.0, 0).unwrap();
        assert_eq!((row.frames, row.errors, row.bler), (300, 0, 0.0));
        assert_eq!(row.ci_low, 0.0);
    }

    #[test]
    fn stops_exactly_at_the_requested_error() {
        let mut sim = small_sim(false);
        sim.stop = StopRule {
            min_errors: 20,
            max_frames: 100_000,
        };
        let row = sim.run_point(0.22, 0).unwrap();
        assert_eq!(row.errors, 20);
        // the last simulated frame is an error
        let mut shorter = sim.clone();
        shorter.stop.max_frames = row.frames - 1;
        assert_eq!(shorter.run_point(0.22, 0).unwrap().errors, 19);
    }

    #[test]
    fn worker_count_does_not_change_the_csv() {
        let mut sim = small_sim(false);
        sim.stop = StopRule {
            min_errors: 15,
            max_frames: 20_000,
        };
        let mut outputs = Vec::new();
        for workers in [1, 3] {
            sim.workers = workers;
            let rows = sim.run_sweep(&[0.2, 0.24]).unwrap();
            let mut buf = Vec::new();
            write_csv_to(&mut buf, &rows).unwrap();
            outputs.push(buf);
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let rows = vec![SweepRow::new(0.25, 1000, 10, 0.0, 3)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("epsilon,frames,errors,bler,ci_low,ci_high,seconds,saturations\n"));
        let back = read_csv(&path).unwrap();
        assert_eq!(back[0].frames, 1000);
        assert_eq!(back[0].errors, 10);
        assert!((back[0].bler - 0.01).abs() < 1e-12);
    }

    #[test]
    fn config_parsing_and_defaults() {
        let cfg: ExperimentConfig = toml::from_str("epsilons = [0.28]\nseed = 4\n").unwrap();
        assert_eq!(cfg.min_errors, 100);
        assert_eq!(cfg.max_frames, 10_000_000);
        assert_eq!(cfg.segments, 1);
        assert!(cfg.timing);
        assert!(toml::from_str::<ExperimentConfig>("epsilons = []\nseed = 1\nbogus = 3").is_err());
        let mut bad = cfg.clone();
        bad.epsilons = vec![0.6];
        assert!(bad.validate().is_err());
        bad.epsilons = vec![];
        assert!(bad.validate().is_err());
        let mut many = cfg.clone();
        many.ensemble_size = 4;
        assert!(many.load_ensemble(&puf_code_1024()).is_err());
    }
}
