//! Browser bindings for the demo page in `www/`.

use lwm::channel::{apply_channel, ChannelRun, ChannelSpec};
use lwm::codec::{embed_with_retry, extract, keyed_unshuffle, EmbeddingParams, ModelKey, Watermark};
use lwm::harness::run_cell;
use lwm::latent::{LatentShape, Seed};
use lwm::rng::derive_bytes;
use lwm::stats::{bit_accuracy, detection_threshold, match_count};
use wasm_bindgen::prelude::*;

fn err(e: lwm::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn params(k: usize) -> Result<EmbeddingParams, JsError> {
    EmbeddingParams::new(LatentShape::sd_default(), k).map_err(err)
}

fn key_for(seed: u64) -> ModelKey {
    ModelKey::from_bytes(derive_bytes("demo-key", &[seed]))
}

#[wasm_bindgen]
pub struct RoundTrip {
    k: usize,
    matches: usize,
    tau: usize,
    accuracy: f64,
    embedded: String,
    recovered: String,
}

#[wasm_bindgen]
impl RoundTrip {
    #[wasm_bindgen(getter)]
    pub fn k(&self) -> usize {
        self.k
    }

    #[wasm_bindgen(getter)]
    pub fn matches(&self) -> usize {
        self.matches
    }

    #[wasm_bindgen(getter)]
    pub fn tau(&self) -> usize {
        self.tau
    }

    #[wasm_bindgen(getter)]
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    #[wasm_bindgen(getter)]
    pub fn detected(&self) -> bool {
        self.matches > self.tau
    }

    #[wasm_bindgen(getter)]
    pub fn embedded(&self) -> String {
        self.embedded.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn recovered(&self) -> String {
        self.recovered.clone()
    }
}

/// Embeds a random watermark, passes the latent through `channel` (same
/// grammar as the CLI, e.g. `gauss:0.5`) and extracts it again.
/// `wrong_key` extracts with a different key.
#[wasm_bindgen]
pub fn round_trip(k: usize, seed: u64, channel: &str, wrong_key: bool) -> Result<RoundTrip, JsError> {
    let params = params(k)?;
    let spec: ChannelSpec = channel.parse().map_err(err)?;
    let m = Watermark::random(k, derive_bytes("demo-watermark", &[seed])).map_err(err)?;
    let key = key_for(seed);
    let (z, _) = embed_with_retry(&m, Seed(seed), &key, &params).map_err(err)?;
    let noisy = apply_channel(&z, &ChannelRun::new(spec, Seed(seed ^ 0x5eed)));
    let read_key = if wrong_key { key_for(!seed) } else { key };
    let out = extract(&noisy, &read_key, &params).map_err(err)?;
    let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
    Ok(RoundTrip {
        k,
        matches: match_count(m.bits(), &out.bits).map_err(err)?,
        tau: detection_threshold(k, 1e-6).map_err(err)?.tau,
        accuracy: bit_accuracy(m.bits(), &out.bits).map_err(err)?,
        embedded: bits(m.bits()),
        recovered: bits(&out.bits),
    })
}

/// Mean bit accuracy under additive Gaussian error, one value per sigma.
#[wasm_bindgen]
pub fn accuracy_curve(k: usize, sigmas: Vec<f64>, trials: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let params = params(k)?;
    let thresh = detection_threshold(k, 1e-6).map_err(err)?;
    sigmas
        .iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let spec = if sigma > 0.0 {
                ChannelSpec::gaussian(sigma).map_err(err)?
            } else {
                ChannelSpec::identity()
            };
            let outcomes = run_cell(&params, &spec, i, trials.max(1), Seed(seed), &thresh).map_err(err)?;
            Ok(outcomes.iter().map(|o| o.bit_accuracy).sum::<f64>() / outcomes.len() as f64)
        })
        .collect()
}

/// The embedded latent before and after the keyed shuffle, concatenated:
/// the first `r` values are the structured arrangement, the last `r` what
/// is actually handed to the sampler.
#[wasm_bindgen]
pub fn arrangement(k: usize, seed: u64) -> Result<Vec<f32>, JsError> {
    let params = params(k)?;
    let m = Watermark::random(k, derive_bytes("demo-watermark", &[seed])).map_err(err)?;
    let key = key_for(seed);
    let (z, _) = embed_with_retry(&m, Seed(seed), &key, &params).map_err(err)?;
    let mut out = keyed_unshuffle(&z, &key);
    out.extend_from_slice(z.values());
    Ok(out)
}

#[wasm_bindgen]
pub fn threshold(k: usize, fpr: f64) -> Result<usize, JsError> {
    Ok(detection_threshold(k, fpr).map_err(err)?.tau)
}
