#![allow(dead_code)]

use std::path::Path;

use avsync_core::audio::{encode_wav_f32, Fps};
use avsync_core::envelope::{Envelope, EnvelopeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn raw(values: Vec<f64>) -> Envelope {
    Envelope::new(values, Fps::default(), EnvelopeKind::Raw).unwrap()
}

pub fn random_envelope(rng: &mut ChaCha8Rng, n: usize) -> Envelope {
    raw((0..n).map(|_| rng.gen_range(0.0..1.0)).collect())
}

/// Sharp attacks with exponential decay on a quiet noise floor.
pub fn thunder_envelope(n: usize, strikes: &[usize], decay: f64, floor: f64) -> Envelope {
    raw((0..n)
        .map(|t| {
            let burst: f64 = strikes
                .iter()
                .filter(|&&s| t >= s)
                .map(|&s| (-((t - s) as f64) / decay).exp())
                .sum();
            floor + burst
        })
        .collect())
}

/// Slowly spreading fire: a ramp that grows over the clip.
pub fn wildfire_envelope(n: usize) -> Envelope {
    raw((0..n).map(|t| 0.05 + 0.9 * t as f64 / (n - 1) as f64).collect())
}

/// Thunder-like mono audio: noise under decaying bursts at `strikes` seconds.
pub fn thunder_samples(sample_rate: u32, seconds: f64, strikes: &[f64], seed: u64) -> Vec<f32> {
    let mut rng = rng(seed);
    let n = (sample_rate as f64 * seconds).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let amp: f64 = 0.03
                + strikes
                    .iter()
                    .filter(|&&s| t >= s)
                    .map(|&s| 0.9 * (-(t - s) / 0.25).exp())
                    .sum::<f64>();
            let noise: f64 = rng.gen_range(-1.0..1.0);
            (amp.min(1.0) * noise) as f32
        })
        .collect()
}

pub fn write_thunder_wav(path: &Path, seconds: f64, strikes: &[f64], seed: u64) {
    let samples = thunder_samples(8000, seconds, strikes, seed);
    std::fs::write(path, encode_wav_f32(&samples, 1, 8000)).unwrap();
}

pub fn write_constant_wav(path: &Path, seconds: f64, amplitude: f32) {
    let n = (8000.0 * seconds) as usize;
    std::fs::write(path, encode_wav_f32(&vec![amplitude; n], 1, 8000)).unwrap();
}

/// Embedding file whose audio entries point at different tokens:
/// `thunder.wav` -> "storm" (index 3), `fire.wav` -> "fire" (index 5).
pub const EMBEDDINGS_JSON: &str = r#"{
  "dim": 4,
  "prompt": "a storm over a forest fire at night",
  "entries": [
    {"token": "a", "index": 0, "vector": [0.1, 0.1, 0.1, 0.1]},
    {"token": "storm", "index": 3, "vector": [1.0, 0.1, 0.0, 0.0]},
    {"token": "forest", "index": 4, "vector": [0.0, 0.0, 1.0, 0.2]},
    {"token": "fire", "index": 5, "vector": [0.0, 1.0, 0.1, 0.0]},
    {"token": "night", "index": 7, "vector": [0.0, 0.0, 0.2, 1.0]}
  ],
  "audio": [
    {"label": "thunder.wav", "vector": [0.9, 0.2, 0.1, 0.0]},
    {"label": "fire.wav", "vector": [0.1, 0.9, 0.0, 0.1]}
  ]
}"#;
