//! Per-frame audio magnitude, sliding-window smoothing and the mapping from
//! magnitude to attention multipliers.

use std::path::Path;

use crate::audio::{AudioClip, Fps, FrameGrid};
use crate::error::{Error, Result};
use crate::fsutil;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeKind {
    Raw,
    Smoothed,
    Multiplier,
}

/// Non-negative series with one value per video frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    values: Vec<f64>,
    fps: Fps,
    kind: EnvelopeKind,
}

impl Envelope {
    pub fn new(values: Vec<f64>, fps: Fps, kind: EnvelopeKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("envelope must have at least one frame".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Validation(format!(
                "envelope value {v} at frame {i} is not a finite non-negative number"
            )));
        }
        Ok(Self { values, fps, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fps(&self) -> Fps {
        self.fps
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        fsutil::columns_to_csv("frame_index", &[("value", &self.values)])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, &self.to_csv()?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    Rms,
    Peak,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SmoothingMode {
    #[default]
    Centered,
    Causal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SmoothingConfig {
    pub window_size: usize,
    pub mode: SmoothingMode,
}

impl SmoothingConfig {
    pub fn centered(window_size: usize) -> Self {
        Self {
            window_size,
            mode: SmoothingMode::Centered,
        }
    }

    pub fn causal(window_size: usize) -> Self {
        Self {
            window_size,
            mode: SmoothingMode::Causal,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    #[default]
    Max,
    None,
}

/// Maps smoothed magnitude to multipliers.
///
/// With `Normalization::Max` a frame at the envelope peak gets `gain` and a
/// silent frame gets `floor`; with `Normalization::None` the magnitude is
/// scaled by `gain` directly and `floor` is unused.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainConfig {
    pub gain: f64,
    pub floor: f64,
    pub normalization: Normalization,
}

impl Default for GainConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            floor: 0.0,
            normalization: Normalization::Max,
        }
    }
}

impl GainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gain.is_finite() || self.gain < 0.0 {
            return Err(Error::Validation(format!("gain {} must be >= 0", self.gain)));
        }
        if !self.floor.is_finite() || self.floor < 0.0 {
            return Err(Error::Validation(format!("floor {} must be >= 0", self.floor)));
        }
        if self.normalization == Normalization::Max && self.floor > self.gain {
            return Err(Error::Validation(format!(
                "floor {} exceeds gain {}",
                self.floor, self.gain
            )));
        }
        Ok(())
    }
}

fn rms(window: &[f32]) -> f64 {
    if window.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = window.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (sum_sq / window.len() as f64).sqrt()
}

fn peak(window: &[f32]) -> f64 {
    window.iter().fold(0.0f64, |acc, &s| acc.max((s as f64).abs()))
}

pub fn compute_envelope(clip: &AudioClip, grid: &FrameGrid, metric: Metric) -> Result<Envelope> {
    if !grid.matches(clip) {
        return Err(Error::GridMismatch(format!(
            "grid covers {} samples at {} Hz, clip has {} samples at {} Hz",
            grid.sample_count(),
            grid.sample_rate(),
            clip.len(),
            clip.sample_rate()
        )));
    }
    let aggregate = match metric {
        Metric::Rms => rms,
        Metric::Peak => peak,
    };
    let values = (0..grid.frame_count())
        .map(|t| grid.frame_range(t).map(|r| aggregate(&clip.samples()[r])))
        .collect::<Result<Vec<_>>>()?;
    Envelope::new(values, grid.fps(), EnvelopeKind::Raw)
}

fn window_mean(window: &[f64]) -> f64 {
    let (lo, hi, sum) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, sum), &v| {
            (lo.min(v), hi.max(v), sum + v)
        });
    // rounding in the sum must not push the mean outside the window's range
    (sum / window.len() as f64).clamp(lo, hi)
}

/// Sliding-window mean over frames.
///
/// Centered windows span `[t - (s-1)/2, t + s/2]`, causal windows `[t - s + 1, t]`;
/// both are truncated at the clip edges.
pub fn smooth(env: &Envelope, cfg: SmoothingConfig) -> Result<Envelope> {
    let s = cfg.window_size;
    if s < 1 {
        return Err(Error::InvalidWindow(s));
    }
    if env.kind == EnvelopeKind::Multiplier {
        return Err(Error::Validation(
            "cannot smooth a multiplier envelope; smooth the magnitude first".into(),
        ));
    }
    if s == 1 {
        return Ok(Envelope {
            kind: EnvelopeKind::Smoothed,
            ..env.clone()
        });
    }
    let n = env.len();
    let (behind, ahead) = match cfg.mode {
        SmoothingMode::Centered => ((s - 1) / 2, s / 2),
        SmoothingMode::Causal => (s - 1, 0),
    };
    let values = (0..n)
        .map(|t| {
            let lo = t.saturating_sub(behind);
            let hi = (t + ahead).min(n - 1);
            window_mean(&env.values[lo..=hi])
        })
        .collect();
    Envelope::new(values, env.fps, EnvelopeKind::Smoothed)
}

pub fn to_multipliers(env: &Envelope, cfg: &GainConfig) -> Result<Envelope> {
    cfg.validate()?;
    match env.kind {
        EnvelopeKind::Smoothed => {}
        EnvelopeKind::Raw => log::warn!("mapping an unsmoothed envelope to multipliers"),
        EnvelopeKind::Multiplier => {
            return Err(Error::Validation(
                "envelope is already a multiplier series".into(),
            ))
        }
    }
    let values = match cfg.normalization {
        Normalization::Max => {
            let max = env.max();
            if max == 0.0 {
                vec![cfg.floor; env.len()]
            } else {
                env.values
                    .iter()
                    .map(|v| cfg.floor + (cfg.gain - cfg.floor) * (v / max))
                    .collect()
            }
        }
        Normalization::None => env.values.iter().map(|v| cfg.gain * v).collect(),
    };
    Envelope::new(values, env.fps, EnvelopeKind::Multiplier)
}

/// Pointwise weighted sum of envelopes sharing fps, length and kind.
pub fn mix_envelopes(envs: &[Envelope], weights: &[f64]) -> Result<Envelope> {
    let first = envs
        .first()
        .ok_or_else(|| Error::Validation("no envelopes to mix".into()))?;
    if weights.len() != envs.len() {
        return Err(Error::GridMismatch(format!(
            "{} envelopes but {} weights",
            envs.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::Validation(format!("mix weight {w} must be >= 0")));
    }
    for env in &envs[1..] {
        if env.len() != first.len() || env.fps != first.fps {
            return Err(Error::GridMismatch(format!(
                "cannot mix {} frames @ {} fps with {} frames @ {} fps",
                first.len(),
                first.fps,
                env.len(),
                env.fps
            )));
        }
        if env.kind != first.kind {
            return Err(Error::Validation("cannot mix envelopes of different kinds".into()));
        }
    }
    let values = (0..first.len())
        .map(|t| envs.iter().zip(weights).map(|(e, w)| w * e.values[t]).sum())
        .collect();
    Envelope::new(values, first.fps, first.kind)
}

/// Sum of absolute successive differences.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

impl Envelope {
    pub fn total_variation(&self) -> f64 {
        total_variation(&self.values)
    }
}
