//! Reproducible robustness sweeps over watermark lengths and channels.
//!
//! # Config file
//!
//! A flat `key = value` text file; `#` starts a comment, blank lines are
//! ignored. Lists may be wrapped in `[...]`; numbers are separated by `,`,
//! channel specs by `;` (specs contain commas).
//!
//! ```text
//! shape     = 4x64x64
//! k         = [128, 256, 512]
//! channels  = [identity; gauss:0.3; flip:0.30,0.45,0.675]
//! trials    = 200
//! base_seed = 42
//! fpr       = 1e-6
//! output    = report.csv    # optional
//! workers   = 4             # optional, 0 = all cores
//! ```
//!
//! # Seeding
//!
//! Trial `t` of cell `(k, channel #c)` uses
//! `trial = derive_u64("trial", [base_seed, k, c, t])`, and from it
//! `derive_u64("latent", [trial])` for sampling,
//! `derive_bytes("key", [trial])` for the model key,
//! `derive_bytes("watermark", [trial])` for the watermark and
//! `derive_u64("channel", [trial])` for the channel noise
//! (see [`crate::rng::derive_bytes`]). Every trial is therefore independent of
//! scheduling, and reports do not depend on the worker count.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::channel::{apply_channel, ChannelRun, ChannelSpec};
use crate::codec::{embed_with_retry, extract, EmbeddingParams, ModelKey, Watermark};
use crate::error::{Error, Result};
use crate::latent::{LatentShape, Seed};
use crate::rng::{derive_bytes, derive_u64};
use crate::stats::{detection_threshold, match_count, DetectionThreshold};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shape: LatentShape,
    pub k_values: Vec<usize>,
    pub channel_grid: Vec<ChannelSpec>,
    pub trials: usize,
    pub base_seed: Seed,
    pub fpr: f64,
    pub output_path: Option<String>,
    /// Worker threads; `None` or `Some(0)` uses every core.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut shape = None;
        let mut k_values = None;
        let mut channels = None;
        let mut trials = None;
        let mut base_seed = None;
        let mut fpr = None;
        let mut output_path = None;
        let mut workers = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::ConfigInvalid(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let value = value.trim();
            let bad = |what: &str| {
                Error::ConfigInvalid(format!("line {}: invalid {what}: {value:?}", lineno + 1))
            };
            match key.trim() {
                "shape" => shape = Some(value.parse::<LatentShape>().map_err(|_| bad("shape"))?),
                "k" => {
                    k_values = Some(
                        list_items(value, ',')
                            .map(|t| t.parse::<usize>().map_err(|_| bad("k list")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "channels" => {
                    channels = Some(
                        list_items(value, ';')
                            .map(|t| {
                                t.parse::<ChannelSpec>().map_err(|e| {
                                    Error::ConfigInvalid(format!("line {}: {e}", lineno + 1))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "trials" => trials = Some(value.parse::<usize>().map_err(|_| bad("trials"))?),
                "base_seed" => base_seed = Some(Seed(value.parse().map_err(|_| bad("base_seed"))?)),
                "fpr" => fpr = Some(value.parse::<f64>().map_err(|_| bad("fpr"))?),
                "output" => output_path = Some(value.to_string()),
                "workers" => workers = Some(value.parse::<usize>().map_err(|_| bad("workers"))?),
                other => {
                    return Err(Error::ConfigInvalid(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }

        let missing = |k: &str| Error::ConfigInvalid(format!("missing required key `{k}`"));
        let cfg = Self {
            shape: shape.ok_or_else(|| missing("shape"))?,
            k_values: k_values.ok_or_else(|| missing("k"))?,
            channel_grid: channels.ok_or_else(|| missing("channels"))?,
            trials: trials.ok_or_else(|| missing("trials"))?,
            base_seed: base_seed.unwrap_or_default(),
            fpr: fpr.unwrap_or(1e-6),
            output_path,
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::ConfigInvalid("trials must be at least 1".into()));
        }
        if self.k_values.is_empty() {
            return Err(Error::ConfigInvalid("k list is empty".into()));
        }
        if self.channel_grid.is_empty() {
            return Err(Error::ConfigInvalid("channel list is empty".into()));
        }
        if !(self.fpr > 0.0 && self.fpr < 1.0) {
            return Err(Error::ConfigInvalid(format!("fpr={} must lie in (0, 1)", self.fpr)));
        }
        for &k in &self.k_values {
            EmbeddingParams::new(self.shape, k).map_err(|e| {
                Error::ConfigInvalid(format!("k={k} with shape {}: {e}", self.shape))
            })?;
        }
        Ok(())
    }
}

fn list_items(value: &str, sep: char) -> impl Iterator<Item = &str> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .unwrap_or(value);
    inner.split(sep).map(str::trim).filter(|t| !t.is_empty())
}

/// Everything random about one trial.
#[derive(Debug, Clone)]
pub struct TrialMaterial {
    pub latent_seed: Seed,
    pub key: ModelKey,
    pub watermark: Watermark,
    pub channel_seed: Seed,
}

impl TrialMaterial {
    pub fn derive(trial_seed: u64, k: usize) -> Result<Self> {
        Ok(Self {
            latent_seed: Seed(derive_u64("latent", &[trial_seed])),
            key: ModelKey::from_bytes(derive_bytes("key", &[trial_seed])),
            watermark: Watermark::random(k, derive_bytes("watermark", &[trial_seed]))?,
            channel_seed: Seed(derive_u64("channel", &[trial_seed])),
        })
    }
}

pub fn trial_seed(base_seed: Seed, k: usize, channel_index: usize, trial_index: usize) -> u64 {
    derive_u64(
        "trial",
        &[base_seed.value(), k as u64, channel_index as u64, trial_index as u64],
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub matches: usize,
    pub bit_accuracy: f64,
    pub detected: bool,
}

/// Embed, pass through the channel, extract and score one trial.
pub fn run_trial(
    params: &EmbeddingParams,
    channel: &ChannelSpec,
    material: &TrialMaterial,
    thresh: &DetectionThreshold,
) -> Result<TrialOutcome> {
    let (z, _) = embed_with_retry(&material.watermark, material.latent_seed, &material.key, params)?;
    let z = apply_channel(&z, &ChannelRun::new(channel.clone(), material.channel_seed));
    let out = extract(&z, &material.key, params)?;
    let matches = match_count(material.watermark.bits(), &out.bits)?;
    Ok(TrialOutcome {
        matches,
        bit_accuracy: matches as f64 / params.k() as f64,
        detected: matches > thresh.tau,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub tau: usize,
    pub fpr: f64,
    pub channel: String,
    pub trials: usize,
    pub bit_acc_mean: f64,
    pub bit_acc_std: f64,
    pub tpr: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "K,tau,fpr,channel,trials,bit_acc_mean,bit_acc_std,tpr";

impl SweepReport {
    /// CSV with one row per `(k, channel)` cell. The channel field is always
    /// quoted. With `include_timing` a trailing `wall_time_s` column is added;
    /// it is the only non-reproducible field.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let mut s = String::from(CSV_HEADER);
        if include_timing {
            s.push_str(",wall_time_s");
        }
        s.push('\n');
        for r in &self.rows {
            write!(
                s,
                "{},{},{},\"{}\",{},{:.6},{:.6},{:.6}",
                r.k, r.tau, r.fpr, r.channel, r.trials, r.bit_acc_mean, r.bit_acc_std, r.tpr
            )
            .unwrap();
            if include_timing {
                write!(s, ",{:.3}", r.wall_time_s).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Runs `trials` trials of one cell. Outcomes are returned in trial order.
pub fn run_cell(
    params: &EmbeddingParams,
    channel: &ChannelSpec,
    channel_index: usize,
    trials: usize,
    base_seed: Seed,
    thresh: &DetectionThreshold,
) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(base_seed, params.k(), channel_index, t);
            let material = TrialMaterial::derive(seed, params.k())?;
            run_trial(params, channel, &material, thresh)
        })
        .collect()
}

fn summarize(outcomes: &[TrialOutcome]) -> (f64, f64, f64) {
    let n = outcomes.len() as f64;
    let mean = compensated_sum(outcomes.iter().map(|o| o.bit_accuracy)) / n;
    let var = if outcomes.len() > 1 {
        compensated_sum(outcomes.iter().map(|o| (o.bit_accuracy - mean).powi(2))) / (n - 1.0)
    } else {
        0.0
    };
    let hits = outcomes.iter().filter(|o| o.detected).count();
    (mean, var.sqrt(), hits as f64 / n)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let mut rows = Vec::new();
        for &k in &cfg.k_values {
            let params = EmbeddingParams::new(cfg.shape, k)?;
            let thresh = detection_threshold(k, cfg.fpr)?;
            for (ci, channel) in cfg.channel_grid.iter().enumerate() {
                let start = Instant::now();
                let outcomes = run_cell(&params, channel, ci, cfg.trials, cfg.base_seed, &thresh)?;
                let (mean, std, tpr) = summarize(&outcomes);
                rows.push(SweepRow {
                    k,
                    tau: thresh.tau,
                    fpr: cfg.fpr,
                    channel: channel.to_string(),
                    trials: cfg.trials,
                    bit_acc_mean: mean,
                    bit_acc_std: std,
                    tpr,
                    wall_time_s: start.elapsed().as_secs_f64(),
                });
            }
        }
        Ok(SweepReport { rows })
    })
}
