//! The per-frame edit schedule and its JSON wire format.
//!
//! ```text
//! {"version":1,"fps":30,"frame_count":3,"prompt":"...",
//!  "tokens":[{"index":4,"token":"fire"}],
//!  "frames":[{"4":0.0},{"4":0.5},{"4":1.0}]}
//! ```
//!
//! A token missing from a frame map means its attention is left untouched.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::Fps;
use crate::envelope::{Envelope, EnvelopeKind};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::matching::MatchResult;

pub const SCHEDULE_VERSION: u32 = 1;

/// One audio source driving the tokens it matched.
#[derive(Clone, Debug)]
pub struct EditSource {
    pub audio_label: String,
    pub matched: MatchResult,
    pub multipliers: Envelope,
    pub weight: f64,
}

impl EditSource {
    pub fn new(audio_label: impl Into<String>, matched: MatchResult, multipliers: Envelope) -> Self {
        Self {
            audio_label: audio_label.into(),
            matched,
            multipliers,
            weight: 1.0,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScheduledToken {
    pub index: usize,
    pub token: String,
}

pub type FrameMap = BTreeMap<usize, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct EditSchedule {
    pub fps: Fps,
    pub prompt: String,
    pub tokens: Vec<ScheduledToken>,
    pub frames: Vec<FrameMap>,
}

impl EditSchedule {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Multiplier series of one token; frames without an entry read as `None`.
    pub fn token_series(&self, index: usize) -> Vec<Option<f64>> {
        self.frames.iter().map(|f| f.get(&index).copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Validation("schedule has no frames".into()));
        }
        let mut known = std::collections::BTreeSet::new();
        for t in &self.tokens {
            if !known.insert(t.index) {
                return Err(Error::Validation(format!("token index {} listed twice", t.index)));
            }
        }
        for (t, frame) in self.frames.iter().enumerate() {
            for (index, m) in frame {
                if !m.is_finite() || *m < 0.0 {
                    return Err(Error::Validation(format!(
                        "frame {t}: multiplier {m} for token {index} must be finite and >= 0"
                    )));
                }
                if !known.contains(index) {
                    return Err(Error::Validation(format!(
                        "frame {t}: token {index} is not in the token list"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn build_schedule(
    sources: &[EditSource],
    fps: Fps,
    frame_count: usize,
    prompt: &str,
) -> Result<EditSchedule> {
    if sources.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let mut tokens: BTreeMap<usize, String> = BTreeMap::new();
    for src in sources {
        if src.multipliers.len() != frame_count {
            return Err(Error::GridMismatch(format!(
                "source {:?} has {} multipliers for {frame_count} frames",
                src.audio_label,
                src.multipliers.len()
            )));
        }
        if src.multipliers.kind() != EnvelopeKind::Multiplier {
            return Err(Error::Validation(format!(
                "source {:?}: envelope is not a multiplier series",
                src.audio_label
            )));
        }
        if !src.weight.is_finite() || src.weight < 0.0 {
            return Err(Error::Validation(format!(
                "source {:?}: weight {} must be >= 0",
                src.audio_label, src.weight
            )));
        }
        for r in &src.matched.ranked {
            match tokens.get(&r.index) {
                Some(existing) if *existing != r.token => {
                    return Err(Error::Validation(format!(
                        "token index {} is {:?} in one match and {:?} in another",
                        r.index, existing, r.token
                    )))
                }
                _ => {
                    tokens.insert(r.index, r.token.clone());
                }
            }
        }
    }

    let frames = (0..frame_count)
        .map(|t| {
            let mut frame = FrameMap::new();
            for src in sources {
                let contribution = src.weight * src.multipliers.values()[t];
                for r in &src.matched.ranked {
                    *frame.entry(r.index).or_insert(0.0) += contribution;
                }
            }
            frame
        })
        .collect();

    let schedule = EditSchedule {
        fps,
        prompt: prompt.to_string(),
        tokens: tokens
            .into_iter()
            .map(|(index, token)| ScheduledToken { index, token })
            .collect(),
        frames,
    };
    schedule.validate()?;
    Ok(schedule)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    version: u32,
    fps: serde_json::Number,
    frame_count: usize,
    prompt: String,
    tokens: Vec<ScheduledToken>,
    frames: Vec<BTreeMap<usize, f64>>,
}

fn fps_to_json(fps: Fps) -> serde_json::Number {
    if fps.is_integer() {
        serde_json::Number::from(fps.numerator())
    } else {
        serde_json::Number::from_f64(fps.as_f64()).expect("fps is finite")
    }
}

/// Canonical compact JSON: fixed key order, numerically ordered frame keys,
/// shortest round-trip floats.
pub fn serialize(schedule: &EditSchedule) -> Vec<u8> {
    let wire = Wire {
        version: SCHEDULE_VERSION,
        fps: fps_to_json(schedule.fps),
        frame_count: schedule.frame_count(),
        prompt: schedule.prompt.clone(),
        tokens: schedule.tokens.clone(),
        frames: schedule.frames.clone(),
    };
    serde_json::to_vec(&wire).expect("schedule serializes")
}

pub fn parse(bytes: &[u8]) -> Result<EditSchedule> {
    let wire: Wire = serde_json::from_slice(bytes)
        .map_err(|e| Error::Format(format!("schedule JSON: {e}")))?;
    if wire.version != SCHEDULE_VERSION {
        return Err(Error::Format(format!(
            "unsupported schedule version {}",
            wire.version
        )));
    }
    let fps_value = wire
        .fps
        .as_f64()
        .ok_or_else(|| Error::Format("fps is not a number".into()))?;
    let fps = Fps::from_f64(fps_value).map_err(|e| Error::Validation(e.to_string()))?;
    if wire.frames.len() != wire.frame_count {
        return Err(Error::Validation(format!(
            "frame_count is {} but {} frame maps are present",
            wire.frame_count,
            wire.frames.len()
        )));
    }
    let schedule = EditSchedule {
        fps,
        prompt: wire.prompt,
        tokens: wire.tokens,
        frames: wire.frames,
    };
    schedule.validate()?;
    Ok(schedule)
}

pub fn write_schedule(schedule: &EditSchedule, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &serialize(schedule))
}

pub fn read_schedule(path: &Path) -> Result<EditSchedule> {
    let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
    parse(&bytes)
}
