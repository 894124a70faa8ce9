//! WAV ingestion and video-frame partitioning of audio.
//!
//! Clips are mono `f32` sample buffers normalized to `[-1, 1]`. A [`FrameGrid`]
//! splits a clip into non-overlapping windows, one per video frame, using exact
//! rational arithmetic so that no resampling is needed and the windows tile the
//! clip with no gaps.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

const RIFF: &[u8; 4] = b"RIFF";
const WAVE: &[u8; 4] = b"WAVE";
const FMT: &[u8; 4] = b"fmt ";
const DATA: &[u8; 4] = b"data";

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Largest denominator tried when turning a decimal frame rate into a ratio.
const MAX_FPS_DENOMINATOR: u64 = 10_000;

/// Video frame rate as an exact ratio `num / den` frames per second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fps {
    num: u64,
    den: u64,
}

impl Fps {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidFps(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(fps: u64) -> Result<Self> {
        Self::new(fps, 1)
    }

    /// Recovers the ratio behind a decimal rate, e.g. `29.97002997...` -> `30000/1001`.
    pub fn from_f64(fps: f64) -> Result<Self> {
        if !fps.is_finite() || fps <= 0.0 {
            return Err(Error::InvalidFps(fps.to_string()));
        }
        for den in 1..=MAX_FPS_DENOMINATOR {
            let num = (fps * den as f64).round();
            if num < 1.0 || num > u32::MAX as f64 {
                continue;
            }
            if ((num / den as f64) - fps).abs() <= 1e-12 * fps {
                return Self::new(num as u64, den);
            }
        }
        Err(Error::InvalidFps(format!(
            "{fps} is not a ratio with denominator <= {MAX_FPS_DENOMINATOR}"
        )))
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }
}

impl Default for Fps {
    fn default() -> Self {
        Self { num: 30, den: 1 }
    }
}

impl fmt::Display for Fps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Decoded mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
    source_label: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyAudio);
        }
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::Validation(format!(
                "sample {bad} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_label: source_label.into(),
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Partition of a clip into one sample window per video frame.
///
/// Frame `i` covers samples `[floor(i * sr / fps), floor((i + 1) * sr / fps))`,
/// clipped to the clip length. The last frame may be short.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameGrid {
    fps: Fps,
    frame_count: usize,
    sample_rate: u32,
    sample_count: usize,
}

impl FrameGrid {
    pub fn fps(&self) -> Fps {
        self.fps
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Samples per frame as the ratio `(numerator, denominator)`.
    pub fn samples_per_frame(&self) -> (u64, u64) {
        let num = self.sample_rate as u64 * self.fps.den;
        let den = self.fps.num;
        let g = gcd(num, den);
        (num / g, den / g)
    }

    fn boundary(&self, frame: usize) -> usize {
        let pos = (frame as u128 * self.sample_rate as u128 * self.fps.den as u128)
            / self.fps.num as u128;
        (pos as usize).min(self.sample_count)
    }

    /// Half-open sample range of `frame_index`.
    pub fn frame_range(&self, frame_index: usize) -> Result<std::ops::Range<usize>> {
        if frame_index >= self.frame_count {
            return Err(Error::Index {
                index: frame_index,
                len: self.frame_count,
            });
        }
        Ok(self.boundary(frame_index)..self.boundary(frame_index + 1))
    }

    pub(crate) fn matches(&self, clip: &AudioClip) -> bool {
        self.sample_count == clip.len() && self.sample_rate == clip.sample_rate()
    }
}

pub fn make_frame_grid(clip: &AudioClip, fps: Fps) -> Result<FrameGrid> {
    if clip.is_empty() {
        return Err(Error::EmptyAudio);
    }
    // ceil(samples * fps / sample_rate), exactly
    let num = clip.len() as u128 * fps.num as u128;
    let den = clip.sample_rate() as u128 * fps.den as u128;
    let frame_count = num.div_ceil(den) as usize;
    Ok(FrameGrid {
        fps,
        frame_count,
        sample_rate: clip.sample_rate(),
        sample_count: clip.len(),
    })
}

/// Like [`make_frame_grid`] but takes a decimal rate, rejecting `fps <= 0`.
pub fn make_frame_grid_f64(clip: &AudioClip, fps: f64) -> Result<FrameGrid> {
    make_frame_grid(clip, Fps::from_f64(fps)?)
}

pub fn frame_samples<'a>(
    clip: &'a AudioClip,
    grid: &FrameGrid,
    frame_index: usize,
) -> Result<&'a [f32]> {
    if !grid.matches(clip) {
        return Err(Error::GridMismatch(
            "frame grid was built from a different clip".into(),
        ));
    }
    Ok(&clip.samples()[grid.frame_range(frame_index)?])
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::Decode(format!("fmt chunk too short ({} bytes)", body.len())));
    }
    let mut format = le_u16(body, 0);
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID,
        // whose first two bytes carry the actual format tag.
        if body.len() < 40 {
            return Err(Error::Decode("extensible fmt chunk too short".into()));
        }
        format = le_u16(body, 24);
    }
    Ok(FmtChunk {
        format,
        channels: le_u16(body, 2),
        sample_rate: le_u32(body, 4),
        block_align: le_u16(body, 12),
        bits_per_sample: le_u16(body, 14),
    })
}

/// Decodes a RIFF/WAVE byte stream into a mono clip.
///
/// Accepts 16-bit integer PCM (rescaled by 1/32768) and 32-bit float PCM, mono
/// or stereo. Stereo is downmixed by channel mean.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    decode_wav_labeled(bytes, "<memory>")
}

pub fn decode_wav_labeled(bytes: &[u8], label: &str) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != RIFF || &bytes[8..12] != WAVE {
        return Err(Error::Decode("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::Decode(format!(
                    "chunk {:?} claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[start..end];
        if id == FMT {
            fmt = Some(parse_fmt(body)?);
        } else if id == DATA {
            data = Some(body);
            break;
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::Decode("no fmt chunk before data".into()))?;
    let data = data.ok_or_else(|| Error::Decode("no data chunk".into()))?;

    if fmt.sample_rate == 0 {
        return Err(Error::Decode("sample rate is zero".into()));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (only mono and stereo)",
            fmt.channels
        )));
    }
    let bytes_per_sample = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_FLOAT, 32) => 4,
        (FORMAT_PCM, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit integer PCM")))
        }
        (FORMAT_FLOAT, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit float PCM")))
        }
        (tag, _) => {
            return Err(Error::UnsupportedFormat(format!("codec tag 0x{tag:04x}")))
        }
    };
    let channels = fmt.channels as usize;
    let block = bytes_per_sample * channels;
    if fmt.block_align as usize != block {
        return Err(Error::Decode(format!(
            "block align {} does not match {channels} x {bytes_per_sample} bytes",
            fmt.block_align
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if data.len() % block != 0 {
        return Err(Error::Decode(format!(
            "data length {} is not a multiple of block size {block}",
            data.len()
        )));
    }

    let read = |off: usize| -> Result<f64> {
        if bytes_per_sample == 2 {
            Ok(i16::from_le_bytes([data[off], data[off + 1]]) as f64 / 32768.0)
        } else {
            let v = f32::from_le_bytes([data[off], data[off + 1], data[off + 2], data[off + 3]]);
            if v.is_nan() {
                return Err(Error::Decode("NaN sample".into()));
            }
            Ok(v.clamp(-1.0, 1.0) as f64)
        }
    };

    let frames = data.len() / block;
    let mut samples = Vec::with_capacity(frames);
    for base in (0..frames).map(|i| i * block) {
        let value = if channels == 1 {
            read(base)?
        } else {
            (read(base)? + read(base + bytes_per_sample)?) / 2.0
        };
        samples.push(value as f32);
    }

    AudioClip::new(samples, fmt.sample_rate, label)
}

pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
    decode_wav_labeled(&bytes, &path.display().to_string())
}

fn wav_bytes(format: u16, channels: u16, sample_rate: u32, bits: u16, payload: &[u8]) -> Vec<u8> {
    let block_align = channels * bits / 8;
    let mut out = Vec::with_capacity(44 + payload.len() + 1);
    out.extend_from_slice(RIFF);
    let riff_len = 4 + 8 + 16 + 8 + payload.len() + (payload.len() & 1);
    out.extend_from_slice(&(riff_len as u32).to_le_bytes());
    out.extend_from_slice(WAVE);
    out.extend_from_slice(FMT);
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(DATA);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    if payload.len() & 1 == 1 {
        out.push(0);
    }
    out
}

/// Encodes interleaved samples as 32-bit float WAV.
pub fn encode_wav_f32(samples: &[f32], channels: u16, sample_rate: u32) -> Vec<u8> {
    let payload: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    wav_bytes(FORMAT_FLOAT, channels, sample_rate, 32, &payload)
}

/// Encodes interleaved raw 16-bit integer samples as PCM WAV.
pub fn encode_wav_i16(samples: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let payload: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    wav_bytes(FORMAT_PCM, channels, sample_rate, 16, &payload)
}

impl AudioClip {
    pub fn to_wav_f32(&self) -> Vec<u8> {
        encode_wav_f32(&self.samples, 1, self.sample_rate)
    }
}
