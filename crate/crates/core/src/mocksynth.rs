//! Deterministic stand-in for a diffusion renderer.
//!
//! Each effect paints its colour into the base image, weighted per pixel by the
//! token's reweighted attention (saturating at 1). Frames are rendered
//! independently from the same base, so the output is a pure function of the
//! base image, the effects and the schedule.

use std::path::Path;

use rayon::prelude::*;

use crate::attention::{apply_schedule_step, AttentionMap};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::schedule::EditSchedule;

pub type Rgb = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct MockImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

impl MockImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation("image dimensions must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        if pixels.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::Validation("NaN pixel value".into()));
        }
        let pixels = pixels.into_iter().map(|p| p.map(clamp01)).collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn solid(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    /// Binary PPM (P6), 8 bits per channel, `round_half_up(v * 255)`.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(
            self.pixels
                .iter()
                .flatten()
                .map(|v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8),
        );
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Format("truncated PPM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        if fields[0] != "P6" {
            return Err(Error::Format(format!("unsupported PPM magic {:?}", fields[0])));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Format(format!("bad PPM header field {s:?}")))
        };
        let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!("unsupported PPM maxval {maxval}")));
        }
        let raster = bytes.get(pos..).unwrap_or_default();
        if raster.len() < width * height * 3 {
            return Err(Error::Format("PPM raster is truncated".into()));
        }
        let pixels = raster[..width * height * 3]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]].map(|v| v as f64 / maxval as f64))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, &self.to_ppm())
    }

    pub fn read_ppm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
        Self::from_ppm(&bytes)
    }
}

/// A token's visual effect: what colour it paints and where it attends.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectSpec {
    pub token_index: usize,
    pub color: Rgb,
    pub attention: Vec<f64>,
}

impl EffectSpec {
    pub fn new(token_index: usize, color: Rgb, attention: Vec<f64>) -> Result<Self> {
        if color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Validation(format!("effect colour {color:?} outside [0, 1]")));
        }
        if attention.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::Validation("attention weights must be finite and >= 0".into()));
        }
        Ok(Self {
            token_index,
            color,
            attention,
        })
    }

    fn check(&self, image: &MockImage) -> Result<()> {
        if self.attention.len() != image.cells() {
            return Err(Error::Dimension {
                expected: image.cells(),
                actual: self.attention.len(),
            });
        }
        Ok(())
    }
}

/// Isotropic Gaussian attention row peaking at 1 on `(cx, cy)`.
pub fn gaussian_blob(width: usize, height: usize, cx: f64, cy: f64, sigma: f64) -> Vec<f64> {
    let denom = 2.0 * sigma * sigma;
    (0..height)
        .flat_map(|y| {
            (0..width).map(move |x| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                (-(dx * dx + dy * dy) / denom).exp()
            })
        })
        .collect()
}

fn blend_into(image: &mut MockImage, color: &Rgb, weights: &[f64]) {
    for (px, &w) in image.pixels.iter_mut().zip(weights) {
        let w = w.min(1.0);
        for ch in 0..3 {
            px[ch] = clamp01(px[ch] + w * (color[ch] - px[ch]));
        }
    }
}

pub fn render_frame(base: &MockImage, effect: &EffectSpec, multiplier: f64) -> Result<MockImage> {
    effect.check(base)?;
    if !multiplier.is_finite() || multiplier < 0.0 {
        return Err(Error::Validation(format!("multiplier {multiplier} must be >= 0")));
    }
    let weights: Vec<f64> = effect.attention.iter().map(|a| multiplier * a).collect();
    let mut out = base.clone();
    blend_into(&mut out, &effect.color, &weights);
    Ok(out)
}

/// Renders one frame per schedule entry.
///
/// Effects are painted in ascending token order using the rows of the
/// schedule-reweighted attention map. A token with no entry in a frame map
/// paints nothing in that frame.
pub fn render_video(
    base: &MockImage,
    effects: &[EffectSpec],
    schedule: &EditSchedule,
) -> Result<Vec<MockImage>> {
    for t in &schedule.tokens {
        if !effects.iter().any(|e| e.token_index == t.index) {
            return Err(Error::Config(format!(
                "no effect configured for scheduled token {} ({:?})",
                t.index, t.token
            )));
        }
    }
    for e in effects {
        e.check(base)?;
    }
    let mut ordered: Vec<&EffectSpec> = effects.iter().collect();
    ordered.sort_by_key(|e| e.token_index);
    ordered.dedup_by_key(|e| e.token_index);
    if ordered.len() != effects.len() {
        return Err(Error::Config("two effects share a token index".into()));
    }

    let tokens = ordered.last().map_or(0, |e| e.token_index + 1);
    let mut rows = vec![vec![0.0; base.cells()]; tokens];
    for e in &ordered {
        rows[e.token_index] = e.attention.clone();
    }
    let map = AttentionMap::from_rows(&rows)?;

    (0..schedule.frame_count())
        .into_par_iter()
        .map(|t| {
            let frame_map = &schedule.frames[t];
            let edited = apply_schedule_step(&map, schedule, t)?;
            let mut image = base.clone();
            for e in &ordered {
                if frame_map.contains_key(&e.token_index) {
                    blend_into(&mut image, &e.color, edited.row(e.token_index)?);
                }
            }
            Ok(image)
        })
        .collect()
}

/// Attention-weighted closeness of the frame to the effect colour, in `[0, 1]`.
pub fn proxy_score(frame: &MockImage, effect: &EffectSpec) -> Result<f64> {
    effect.check(frame)?;
    let total: f64 = effect.attention.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = frame
        .pixels
        .iter()
        .zip(&effect.attention)
        .map(|(px, a)| {
            let l1: f64 = px.iter().zip(&effect.color).map(|(p, c)| (p - c).abs()).sum();
            a * (1.0 - l1 / 3.0)
        })
        .sum();
    Ok((weighted / total).clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn total_variation(&self) -> f64 {
        crate::envelope::total_variation(&self.values)
    }
}

pub fn pearson(a: &MetricSeries, b: &MetricSeries) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::GridMismatch(format!(
            "series {:?} has {} values, {:?} has {}",
            a.name,
            a.values.len(),
            b.name,
            b.values.len()
        )));
    }
    if a.values.len() < 2 {
        return Err(Error::DegenerateSeries("need at least two values".into()));
    }
    for s in [a, b] {
        if s.values.iter().all(|&v| v == s.values[0]) {
            return Err(Error::DegenerateSeries(format!("{:?} is constant", s.name)));
        }
    }
    let n = a.values.len() as f64;
    let mean_a = a.values.iter().sum::<f64>() / n;
    let mean_b = b.values.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    Ok((cov / (var_a.sqrt() * var_b.sqrt())).clamp(-1.0, 1.0))
}

pub fn plot_data_csv(series: &[MetricSeries]) -> Result<Vec<u8>> {
    if series.is_empty() {
        return Err(Error::Config("no series to write".into()));
    }
    let columns: Vec<(&str, &[f64])> = series
        .iter()
        .map(|s| (s.name.as_str(), s.values.as_slice()))
        .collect();
    fsutil::columns_to_csv("frame", &columns)
}

/// Writes `frame,<name1>,<name2>,...` with one row per frame.
pub fn emit_plot_data(series: &[MetricSeries], path: &Path) -> Result<()> {
    fsutil::write_atomic(path, &plot_data_csv(series)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::Fps;
    use crate::schedule::{FrameMap, ScheduledToken};

    fn gray(v: f64) -> MockImage {
        MockImage::solid(2, 2, [v; 3]).unwrap()
    }

    fn schedule(index: usize, values: &[f64]) -> EditSchedule {
        EditSchedule {
            fps: Fps::default(),
            prompt: "p".into(),
            tokens: vec![ScheduledToken { index, token: "t".into() }],
            frames: values.iter().map(|&v| FrameMap::from([(index, v)])).collect(),
        }
    }

    #[test]
    fn blend_closed_form() {
        let base = MockImage::solid(1, 1, [0.2; 3]).unwrap();
        let effect = EffectSpec::new(0, [1.0; 3], vec![0.5]).unwrap();
        // 0.2 + min(1 * 0.5, 1) * (1 - 0.2)
        let out = render_frame(&base, &effect, 1.0).unwrap();
        for v in out.pixels()[0] {
            assert!((v - 0.6).abs() < 1e-12);
        }
        // blend weight 0.25 -> 0.2 + 0.25 * 0.8
        let out = render_frame(&base, &effect, 0.5).unwrap();
        for v in out.pixels()[0] {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_saturating_multipliers() {
        let base = gray(0.3);
        let effect = EffectSpec::new(0, [1.0, 0.5, 0.0], vec![0.0, 0.2, 0.6, 1.0]).unwrap();
        assert_eq!(render_frame(&base, &effect, 0.0).unwrap(), base);
        let sat = render_frame(&base, &effect, 1e6).unwrap();
        assert_eq!(sat.pixels()[0], [0.3; 3]);
        for p in &sat.pixels()[1..] {
            assert_eq!(*p, [1.0, 0.5, 0.0]);
        }
    }

    #[test]
    fn dimension_checks() {
        let effect = EffectSpec::new(0, [1.0; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(render_frame(&gray(0.1), &effect, 1.0), Err(Error::Dimension { .. })));
        assert!(matches!(proxy_score(&gray(0.1), &effect), Err(Error::Dimension { .. })));
        assert!(EffectSpec::new(0, [1.5, 0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn video_rendering() {
        let base = gray(0.2);
        let effect = EffectSpec::new(4, [1.0; 3], vec![0.5; 4]).unwrap();
        let frames = render_video(&base, std::slice::from_ref(&effect), &schedule(4, &[0.0, 0.0])).unwrap();
        assert!(frames.iter().all(|f| *f == base));

        let frames = render_video(&base, std::slice::from_ref(&effect), &schedule(4, &[0.0, 1.0, 2.0])).unwrap();
        assert_eq!(frames.len(), 3);
        for (t, m) in [0.0, 1.0, 2.0].into_iter().enumerate() {
            assert_eq!(frames[t], render_frame(&base, &effect, m).unwrap());
        }

        let missing = render_video(&base, &[effect], &schedule(5, &[1.0]));
        assert!(matches!(missing, Err(Error::Config(_))));
    }

    #[test]
    fn disjoint_effects_edit_independently() {
        let base = MockImage::solid(2, 1, [0.2; 3]).unwrap();
        let red = EffectSpec::new(1, [1.0, 0.0, 0.0], vec![0.5, 0.0]).unwrap();
        let blue = EffectSpec::new(3, [0.0, 0.0, 1.0], vec![0.0, 0.25]).unwrap();
        let mut s = schedule(1, &[2.0]);
        s.tokens.push(ScheduledToken { index: 3, token: "b".into() });
        s.frames[0].insert(3, 2.0);
        let out = render_video(&base, &[blue.clone(), red.clone()], &s).unwrap();
        // per-region oracle: pixel 0 is a full red blend, pixel 1 a half blue blend
        assert_eq!(out[0].pixels()[0], [1.0, 0.0, 0.0]);
        let expect = [0.2 + 0.5 * (0.0 - 0.2), 0.2 + 0.5 * (0.0 - 0.2), 0.2 + 0.5 * (1.0 - 0.2)];
        for (a, b) in out[0].pixels()[1].iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn proxy_cases() {
        let effect = EffectSpec::new(0, [0.9, 0.1, 0.4], vec![1.0, 0.5, 0.0, 2.0]).unwrap();
        let same = MockImage::solid(2, 2, [0.9, 0.1, 0.4]).unwrap();
        assert!((proxy_score(&same, &effect).unwrap() - 1.0).abs() < 1e-15);
        let blind = EffectSpec::new(0, [1.0; 3], vec![0.0; 4]).unwrap();
        assert_eq!(proxy_score(&same, &blind).unwrap(), 0.0);

        let white = EffectSpec::new(0, [1.0; 3], vec![0.3; 4]).unwrap();
        let scores: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 3.0]
            .iter()
            .map(|&m| proxy_score(&render_frame(&gray(0.2), &white, m).unwrap(), &white).unwrap())
            .collect();
        assert!(scores.windows(2).all(|w| w[0] < w[1]), "{scores:?}");
    }

    #[test]
    fn pearson_cases() {
        let a = MetricSeries::new("a", vec![1.0, 2.0, 3.0]);
        let neg = MetricSeries::new("b", vec![-1.0, -2.0, -3.0]);
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let b = MetricSeries::new("b", vec![2.0, 4.0, 7.0]);
        assert!((pearson(&a, &b).unwrap() - 0.9934).abs() < 1e-3);
        let flat = MetricSeries::new("c", vec![1.0; 3]);
        assert!(matches!(pearson(&a, &flat), Err(Error::DegenerateSeries(_))));
        let short = MetricSeries::new("d", vec![1.0, 2.0]);
        assert!(matches!(pearson(&a, &short), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn plot_csv() {
        let s = [
            MetricSeries::new("m", vec![0.0, 0.5, 1.0]),
            MetricSeries::new("p", vec![0.25, 0.125, 1.0 / 3.0]),
        ];
        let text = String::from_utf8(plot_data_csv(&s).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next(), Some("frame,m,p"));
        assert!(matches!(plot_data_csv(&[]), Err(Error::Config(_))));
    }

    #[test]
    fn ppm_round_trip() {
        let img = MockImage::new(
            2,
            1,
            vec![[0.0, 0.5, 1.0], [0.2, 0.4, 0.6]],
        )
        .unwrap();
        let bytes = img.to_ppm();
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        // 0.5 * 255 = 127.5 rounds up
        assert_eq!(&bytes[11..14], &[0, 128, 255]);
        let back = MockImage::from_ppm(&bytes).unwrap();
        assert_eq!(back.to_ppm(), bytes);

        let commented = b"P6 # c\n2 1\n255\n\x00\x01\x02\x03\x04\x05";
        assert_eq!(MockImage::from_ppm(commented).unwrap().width(), 2);
        assert!(MockImage::from_ppm(b"P3\n1 1\n255\n0 0 0").is_err());
        assert!(MockImage::from_ppm(b"P6\n4 4\n255\n\x00").is_err());
    }
}
