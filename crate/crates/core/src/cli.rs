//! `avsync` command-line driver.
//!
//! Settings resolve in order: command-line flag, then `--config` JSON file, then
//! built-in default. Errors print one line to stderr and exit with 1 (usage),
//! 2 (unreadable or malformed input) or 3 (validation).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::audio::{make_frame_grid, read_wav, Fps};
use crate::envelope::{
    compute_envelope, mix_envelopes, smooth, to_multipliers, Envelope, GainConfig, Metric,
    Normalization, SmoothingConfig, SmoothingMode,
};
use crate::error::{Error, Result};
use crate::fsutil::{self, write_atomic};
use crate::matching::{read_embedding_file, top_k_tokens, MatchResult, RankedToken};
use crate::mocksynth::{
    emit_plot_data, gaussian_blob, pearson, proxy_score, render_video, EffectSpec, MetricSeries,
    MockImage, Rgb,
};
use crate::schedule::{build_schedule, read_schedule, write_schedule, EditSchedule, EditSource};

pub const DEFAULT_FPS: f64 = 30.0;
pub const DEFAULT_WINDOW: usize = 75;
pub const DEFAULT_K: usize = 1;
pub const DEFAULT_ABLATION_WINDOWS: [usize; 3] = [1, 75, 150];
pub const DEFAULT_BASE_SIZE: usize = 64;
pub const DEFAULT_BASE_GRAY: f64 = 0.2;

const PALETTE: [Rgb; 4] = [
    [1.0, 0.55, 0.1],
    [0.2, 0.45, 1.0],
    [1.0, 1.0, 1.0],
    [0.1, 0.8, 0.3],
];

#[derive(Debug, Parser)]
#[command(name = "avsync", version, about = "Audio-synchronized attention edit schedules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write raw and smoothed per-frame envelopes as CSV.
    Envelope(EnvelopeArgs),
    /// Build the per-frame edit schedule JSON.
    Schedule(ScheduleArgs),
    /// Render mock frames from a schedule and report sync metrics.
    Render(RenderArgs),
    /// Compare temporal variation across smoothing window sizes.
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Centered,
    Causal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Rms,
    Peak,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input WAV file (repeatable).
    #[arg(long)]
    pub audio: Vec<PathBuf>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Smoothing window size in frames.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub gain: Option<f64>,
    #[arg(long)]
    pub floor: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Embedding JSON file (text tokens plus audio embeddings).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Number of prompt tokens each audio source drives.
    #[arg(long)]
    pub k: Option<usize>,
    /// Prompt text recorded in the schedule; defaults to the embedding file's.
    #[arg(long)]
    pub prompt: Option<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Schedule JSON to render.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Base image (binary PPM); defaults to a 64x64 dark gray frame.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Effect for a token: `INDEX=R,G,B` or `INDEX=R,G,B@mask.ppm` (repeatable).
    #[arg(long)]
    pub effect: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated window sizes.
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub audio: Option<Vec<PathBuf>>,
    pub embeddings: Option<PathBuf>,
    pub fps: Option<f64>,
    pub window: Option<usize>,
    pub mode: Option<ModeArg>,
    pub metric: Option<MetricArg>,
    pub k: Option<usize>,
    pub gain: Option<f64>,
    pub floor: Option<f64>,
    pub out: Option<PathBuf>,
    pub prompt: Option<String>,
    pub schedule: Option<PathBuf>,
    pub base: Option<PathBuf>,
    pub effects: Option<Vec<String>>,
    pub windows: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub audio: Vec<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub fps: Fps,
    pub smoothing: SmoothingConfig,
    pub metric: Metric,
    pub k: usize,
    pub gain: GainConfig,
    pub out: PathBuf,
    pub prompt: Option<String>,
    pub schedule: Option<PathBuf>,
    pub base: Option<PathBuf>,
    pub effects: Vec<String>,
    pub windows: Vec<usize>,
}

impl RunConfig {
    fn resolve(common: CommonArgs, extra: FileConfig) -> Result<Self> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let audio = if common.audio.is_empty() {
            file.audio.unwrap_or_default()
        } else {
            common.audio
        };
        let fps = common.fps.or(file.fps).unwrap_or(DEFAULT_FPS);
        let window = common.window.or(file.window).unwrap_or(DEFAULT_WINDOW);
        if window == 0 {
            return Err(Error::InvalidWindow(0));
        }
        let mode = match common.mode.or(file.mode).unwrap_or(ModeArg::Centered) {
            ModeArg::Centered => SmoothingMode::Centered,
            ModeArg::Causal => SmoothingMode::Causal,
        };
        let metric = match common.metric.or(file.metric).unwrap_or(MetricArg::Rms) {
            MetricArg::Rms => Metric::Rms,
            MetricArg::Peak => Metric::Peak,
        };
        let gain = GainConfig {
            gain: common.gain.or(file.gain).unwrap_or(1.0),
            floor: common.floor.or(file.floor).unwrap_or(0.0),
            normalization: Normalization::Max,
        };
        gain.validate()?;
        let k = extra.k.or(file.k).unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(Error::Validation("k must be >= 1".into()));
        }
        let effects = match extra.effects {
            Some(e) if !e.is_empty() => e,
            _ => file.effects.unwrap_or_default(),
        };
        let windows = match extra.windows {
            Some(w) if !w.is_empty() => w,
            _ => file
                .windows
                .unwrap_or_else(|| DEFAULT_ABLATION_WINDOWS.to_vec()),
        };
        Ok(Self {
            audio,
            embeddings: extra.embeddings.or(file.embeddings),
            fps: Fps::from_f64(fps)?,
            smoothing: SmoothingConfig {
                window_size: window,
                mode,
            },
            metric,
            k,
            gain,
            out: common.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            prompt: extra.prompt.or(file.prompt),
            schedule: extra.schedule.or(file.schedule),
            base: extra.base.or(file.base),
            effects,
            windows,
        })
    }

    fn require_audio(&self) -> Result<&[PathBuf]> {
        if self.audio.is_empty() {
            return Err(Error::Config("at least one --audio input is required".into()));
        }
        Ok(&self.audio)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::write(&self.out, e))?;
        Ok(&self.out)
    }
}

fn raw_envelope(path: &Path, cfg: &RunConfig) -> Result<Envelope> {
    let clip = read_wav(path)?;
    let grid = make_frame_grid(&clip, cfg.fps)?;
    compute_envelope(&clip, &grid, cfg.metric)
}

pub fn cmd_envelope(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let inputs = cfg.require_audio()?;
    let dir = cfg.out_dir()?;
    for (i, path) in inputs.iter().enumerate() {
        let raw = raw_envelope(path, cfg)?;
        let smoothed = smooth(&raw, cfg.smoothing)?;
        let csv = fsutil::columns_to_csv(
            "frame_index",
            &[("raw", raw.values()), ("smoothed", smoothed.values())],
        )?;
        let name = if inputs.len() == 1 {
            "envelope.csv".to_string()
        } else {
            format!("envelope_{i}.csv")
        };
        write_atomic(&dir.join(name), &csv)?;
        writeln!(stdout, "{}: {} frames", path.display(), raw.len())
            .map_err(|e| Error::write("<stdout>", e))?;
    }
    Ok(())
}

pub fn cmd_schedule(cfg: &RunConfig) -> Result<EditSchedule> {
    let inputs = cfg.require_audio()?;
    let emb_path = cfg
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::Config("--embeddings is required".into()))?;
    let embeddings = read_embedding_file(emb_path)?;

    let mut sources = Vec::with_capacity(inputs.len());
    for (i, path) in inputs.iter().enumerate() {
        let audio_emb = embeddings.audio_for(path, i, inputs.len()).ok_or_else(|| {
            Error::Config(format!(
                "{} has no audio embedding for {}",
                emb_path.display(),
                path.display()
            ))
        })?;
        let matched = top_k_tokens(audio_emb, &embeddings.tokens, cfg.k)?;
        let raw = raw_envelope(path, cfg)?;
        let multipliers = to_multipliers(&smooth(&raw, cfg.smoothing)?, &cfg.gain)?;
        sources.push(EditSource::new(path.display().to_string(), matched, multipliers));
    }

    let frame_count = sources[0].multipliers.len();
    let prompt = cfg
        .prompt
        .clone()
        .or_else(|| embeddings.prompt.clone())
        .unwrap_or_else(|| {
            let mut entries: Vec<_> = embeddings.tokens.entries().iter().collect();
            entries.sort_by_key(|e| e.index);
            entries.iter().map(|e| e.token.as_str()).collect::<Vec<_>>().join(" ")
        });
    let schedule = build_schedule(&sources, cfg.fps, frame_count, &prompt)?;
    write_schedule(&schedule, &cfg.out_dir()?.join("schedule.json"))?;
    Ok(schedule)
}

struct EffectArg {
    index: usize,
    color: Rgb,
    mask: Option<Vec<f64>>,
}

/// Parses `INDEX=R,G,B[@mask.ppm]`.
fn parse_effect(spec: &str, base: &MockImage) -> Result<EffectArg> {
    let bad = || Error::Config(format!("bad effect {spec:?}; expected INDEX=R,G,B[@mask.ppm]"));
    let (index, rest) = spec.split_once('=').ok_or_else(bad)?;
    let index: usize = index.trim().parse().map_err(|_| bad())?;
    let (color, mask) = match rest.split_once('@') {
        Some((c, m)) => (c, Some(m)),
        None => (rest, None),
    };
    let channels: Vec<f64> = color
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let color: Rgb = channels.try_into().map_err(|_| bad())?;
    if color.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::Config(format!("effect colour in {spec:?} outside [0, 1]")));
    }
    let mask = match mask {
        Some(path) => {
            let mask = MockImage::read_ppm(Path::new(path))?;
            if mask.width() != base.width() || mask.height() != base.height() {
                return Err(Error::Dimension {
                    expected: base.cells(),
                    actual: mask.cells(),
                });
            }
            Some(mask.pixels().iter().map(|p| (p[0] + p[1] + p[2]) / 3.0).collect())
        }
        None => None,
    };
    Ok(EffectArg { index, color, mask })
}

/// Gaussian blob for the `slot`-th of `slots` effects, spread left to right.
fn default_attention(base: &MockImage, slot: usize, slots: usize) -> Vec<f64> {
    let w = base.width() as f64;
    let h = base.height() as f64;
    let cx = w * (slot + 1) as f64 / (slots + 1) as f64 - 0.5;
    let cy = h / 2.0 - 0.5;
    gaussian_blob(base.width(), base.height(), cx, cy, w.min(h) / 5.0)
}

/// One effect per scheduled token. `--effect` overrides the palette colour and,
/// with a mask, the default attention blob.
pub fn resolve_effects(
    schedule: &EditSchedule,
    base: &MockImage,
    explicit: &[String],
) -> Result<Vec<EffectSpec>> {
    let mut args = explicit
        .iter()
        .map(|s| parse_effect(s, base))
        .collect::<Result<Vec<_>>>()?;
    let n = schedule.tokens.len();
    schedule
        .tokens
        .iter()
        .enumerate()
        .map(|(slot, t)| {
            let arg = args.iter_mut().find(|a| a.index == t.index);
            let color = arg.as_ref().map_or(PALETTE[slot % PALETTE.len()], |a| a.color);
            let attention = arg
                .and_then(|a| a.mask.take())
                .unwrap_or_else(|| default_attention(base, slot, n));
            EffectSpec::new(t.index, color, attention)
        })
        .collect()
}

pub struct RenderReport {
    pub multipliers: Vec<MetricSeries>,
    pub scores: Vec<MetricSeries>,
    pub correlations: Vec<Option<f64>>,
}

/// Renders `schedule` and returns per-token multiplier and proxy-score series.
pub fn render_and_score(
    schedule: &EditSchedule,
    base: &MockImage,
    effects: &[EffectSpec],
) -> Result<(Vec<MockImage>, RenderReport)> {
    let frames = render_video(base, effects, schedule)?;
    let mut report = RenderReport {
        multipliers: Vec::new(),
        scores: Vec::new(),
        correlations: Vec::new(),
    };
    for t in &schedule.tokens {
        let effect = effects
            .iter()
            .find(|e| e.token_index == t.index)
            .expect("render_video checked every token has an effect");
        let m = MetricSeries::new(
            format!("multiplier_{}", t.index),
            schedule
                .token_series(t.index)
                .into_iter()
                .map(|m| m.unwrap_or(0.0))
                .collect(),
        );
        let s = MetricSeries::new(
            format!("proxy_{}", t.index),
            frames
                .iter()
                .map(|f| proxy_score(f, effect))
                .collect::<Result<_>>()?,
        );
        report.correlations.push(pearson(&m, &s).ok());
        report.multipliers.push(m);
        report.scores.push(s);
    }
    Ok((frames, report))
}

pub fn cmd_render(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<RenderReport> {
    let schedule_path = cfg
        .schedule
        .as_deref()
        .ok_or_else(|| Error::Config("--schedule is required".into()))?;
    let schedule = read_schedule(schedule_path)?;
    let base = match &cfg.base {
        Some(path) => MockImage::read_ppm(path)?,
        None => MockImage::solid(DEFAULT_BASE_SIZE, DEFAULT_BASE_SIZE, [DEFAULT_BASE_GRAY; 3])?,
    };
    let effects = resolve_effects(&schedule, &base, &cfg.effects)?;
    let (frames, report) = render_and_score(&schedule, &base, &effects)?;

    let dir = cfg.out_dir()?;
    let frame_dir = dir.join("frames");
    std::fs::create_dir_all(&frame_dir).map_err(|e| Error::write(&frame_dir, e))?;
    for (i, frame) in frames.iter().enumerate() {
        frame.write_ppm(&frame_dir.join(format!("frame_{i:05}.ppm")))?;
    }
    let mut columns = Vec::new();
    for (m, s) in report.multipliers.iter().zip(&report.scores) {
        columns.push(m.clone());
        columns.push(s.clone());
    }
    if !columns.is_empty() {
        emit_plot_data(&columns, &dir.join("metrics.csv"))?;
    }
    for (t, r) in schedule.tokens.iter().zip(&report.correlations) {
        let line = match r {
            Some(r) => format!("token {} ({}): pearson r = {r:.4}", t.index, t.token),
            None => format!("token {} ({}): pearson r = n/a (constant series)", t.index, t.token),
        };
        writeln!(stdout, "{line}").map_err(|e| Error::write("<stdout>", e))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub window: usize,
    pub envelope_tv: f64,
    pub proxy_tv: f64,
}

/// TV of the smoothed envelope and of the mock proxy-score series for each
/// window size, rendering the default single-effect scene.
pub fn ablate_envelope(
    raw: &Envelope,
    windows: &[usize],
    mode: SmoothingMode,
    gain: &GainConfig,
) -> Result<Vec<AblationRow>> {
    if windows.is_empty() {
        return Err(Error::Config("no window sizes to ablate".into()));
    }
    let base = MockImage::solid(DEFAULT_BASE_SIZE, DEFAULT_BASE_SIZE, [DEFAULT_BASE_GRAY; 3])?;
    let effect = EffectSpec::new(0, PALETTE[0], default_attention(&base, 0, 1))?;
    let matched = MatchResult {
        ranked: vec![RankedToken {
            token: "effect".into(),
            index: 0,
            similarity: 1.0,
        }],
        k: 1,
    };
    windows
        .iter()
        .map(|&window| {
            let smoothed = smooth(raw, SmoothingConfig { window_size: window, mode })?;
            let multipliers = to_multipliers(&smoothed, gain)?;
            let source = EditSource::new("ablation", matched.clone(), multipliers);
            let schedule = build_schedule(&[source], raw.fps(), raw.len(), "effect")?;
            let (_, report) = render_and_score(&schedule, &base, std::slice::from_ref(&effect))?;
            Ok(AblationRow {
                window,
                envelope_tv: smoothed.total_variation(),
                proxy_tv: report.scores[0].total_variation(),
            })
        })
        .collect()
}

pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    let inputs = cfg.require_audio()?;
    let envs = inputs
        .iter()
        .map(|p| raw_envelope(p, cfg))
        .collect::<Result<Vec<_>>>()?;
    let raw = mix_envelopes(&envs, &vec![1.0; envs.len()])?;
    let rows = ablate_envelope(&raw, &cfg.windows, cfg.smoothing.mode, &cfg.gain)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["window", "envelope_tv", "proxy_tv"]).map_err(csv_err)?;
    for r in &rows {
        w.write_record([r.window.to_string(), r.envelope_tv.to_string(), r.proxy_tv.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    write_atomic(&cfg.out_dir()?.join("ablation.csv"), &bytes)?;
    Ok(rows)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Decode(_)
        | Error::UnsupportedFormat(_)
        | Error::Format(_)
        | Error::Read { .. }
        | Error::Write { .. } => 2,
        Error::EmptyAudio
        | Error::InvalidFps(_)
        | Error::Index { .. }
        | Error::GridMismatch(_)
        | Error::InvalidWindow(_)
        | Error::DegenerateEmbedding(_)
        | Error::Dimension { .. }
        | Error::EmptySchedule
        | Error::Validation(_)
        | Error::DegenerateSeries(_) => 3,
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Envelope(a) => cmd_envelope(&RunConfig::resolve(a.common, FileConfig::default())?, stdout),
        Command::Schedule(a) => {
            let extra = FileConfig {
                embeddings: a.embeddings,
                k: a.k,
                prompt: a.prompt,
                ..Default::default()
            };
            cmd_schedule(&RunConfig::resolve(a.common, extra)?).map(|_| ())
        }
        Command::Render(a) => {
            let extra = FileConfig {
                schedule: a.schedule,
                base: a.base,
                effects: Some(a.effect),
                ..Default::default()
            };
            cmd_render(&RunConfig::resolve(a.common, extra)?, stdout).map(|_| ())
        }
        Command::Ablate(a) => {
            let extra = FileConfig {
                windows: Some(a.windows),
                ..Default::default()
            };
            cmd_ablate(&RunConfig::resolve(a.common, extra)?).map(|_| ())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let line = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid usage")
                .trim_start_matches("error: ");
            eprintln!("avsync: usage: {line}");
            return 1;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("avsync: error: {msg}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"fps": 24, "window": 9, "gain": 2.0, "k": 3}"#).unwrap();
        let common = CommonArgs {
            config: Some(path),
            window: Some(5),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(common, FileConfig::default()).unwrap();
        assert_eq!(cfg.fps, Fps::integer(24).unwrap());
        assert_eq!(cfg.smoothing.window_size, 5);
        assert_eq!(cfg.gain.gain, 2.0);
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.windows, DEFAULT_ABLATION_WINDOWS.to_vec());
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(CommonArgs::default(), FileConfig::default()).unwrap();
        assert_eq!(cfg.fps, Fps::integer(30).unwrap());
        assert_eq!(cfg.smoothing, SmoothingConfig::centered(75));
        assert_eq!(cfg.metric, Metric::Rms);
        assert_eq!(cfg.k, 1);
        assert_eq!(cfg.gain, GainConfig::default());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"windw": 3}"#).unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(
            RunConfig::resolve(common, FileConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn effect_strings() {
        let base = MockImage::solid(4, 2, [0.0; 3]).unwrap();
        let e = parse_effect("7=1,0.5,0", &base).unwrap();
        assert_eq!(e.index, 7);
        assert_eq!(e.color, [1.0, 0.5, 0.0]);
        assert!(e.mask.is_none());
        assert!(parse_effect("7=1,0.5", &base).is_err());
        assert!(parse_effect("x=1,1,1", &base).is_err());
        assert!(parse_effect("1=2,0,0", &base).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::Decode("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidWindow(0)), 3);
        assert_eq!(run(["avsync", "bogus"]), 1);
        assert_eq!(run(["avsync", "envelope", "--window", "0", "--audio", "a.wav"]), 3);
    }
}
