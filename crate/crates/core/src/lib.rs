//! Audio-synchronized attention edit schedules.
//!
//! The pipeline turns an audio clip into a per-video-frame magnitude envelope,
//! smooths it with a sliding window, maps it to attention multipliers, selects the
//! prompt tokens closest to the audio embedding, and assembles an
//! [`EditSchedule`](schedule::EditSchedule): for every frame, which prompt
//! tokens get their cross-attention scaled and by how much.
//!
//! - [`audio`]: WAV decoding and frame-aligned sample windows
//! - [`envelope`]: RMS/peak envelope, smoothing, multiplier mapping, mixing
//! - [`matching`]: embedding files and cosine top-k token selection
//! - [`schedule`]: schedule assembly and its JSON format
//! - [`attention`]: the row-reweighting kernel applied at each denoising step
//! - [`mocksynth`]: a deterministic toy renderer and sync metrics
//! - [`cli`]: the `avsync` command-line driver

pub mod attention;
pub mod audio;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod fsutil;
pub mod matching;
pub mod mocksynth;
pub mod schedule;

pub use error::{Error, Result};
