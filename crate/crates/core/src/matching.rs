//! Embedding ingestion and top-k token selection by cosine similarity.
//!
//! Embedding files are JSON:
//!
//! ```text
//! {"dim": 4,
//!  "entries": [{"token": "flame", "index": 3, "vector": [0.1, 0.2, 0.3, 0.4]}, ...],
//!  "prompt": "a campfire at night",          (optional)
//!  "audio": [{"label": "fire.wav", "vector": [...]}]   (optional)}
//! ```
//!
//! Any `"vector"` may instead be given as `"vector_file"` + `"row"`, pointing at a
//! sidecar of little-endian `f32` rows of length `dim`, resolved relative to the
//! JSON file.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TokenEmbedding {
    pub token: String,
    pub index: usize,
    pub vector: Vec<f64>,
}

/// Text-token embeddings of one prompt.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    entries: Vec<TokenEmbedding>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, entries: Vec<TokenEmbedding>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("embedding dim must be positive".into()));
        }
        if entries.is_empty() {
            return Err(Error::Format("embedding file has no token entries".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &entries {
            check_vector(&e.vector, dim, &format!("token {:?}", e.token))?;
            if !seen.insert(e.index) {
                return Err(Error::Format(format!("duplicate token index {}", e.index)));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[TokenEmbedding] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AudioEmbedding {
    pub vector: Vec<f64>,
    pub source_label: String,
}

impl AudioEmbedding {
    pub fn new(vector: Vec<f64>, source_label: impl Into<String>) -> Result<Self> {
        let source_label = source_label.into();
        check_vector(&vector, vector.len().max(1), &format!("audio {source_label:?}"))?;
        Ok(Self {
            vector,
            source_label,
        })
    }
}

/// Everything an embedding file may carry.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingFile {
    pub tokens: EmbeddingSet,
    pub prompt: Option<String>,
    pub audio: Vec<AudioEmbedding>,
}

impl EmbeddingFile {
    /// Finds the audio embedding for `path`: exact label, then file name, then
    /// position when every input has exactly one embedding.
    pub fn audio_for(&self, path: &Path, position: usize, inputs: usize) -> Option<&AudioEmbedding> {
        let full = path.to_string_lossy();
        let name = path.file_name().map(|n| n.to_string_lossy());
        self.audio
            .iter()
            .find(|a| a.source_label == full)
            .or_else(|| {
                let name = name.as_deref()?;
                self.audio.iter().find(|a| {
                    a.source_label == name
                        || Path::new(&a.source_label).file_name().map(|n| n.to_string_lossy()).as_deref()
                            == Some(name)
                })
            })
            .or_else(|| (self.audio.len() == inputs).then(|| &self.audio[position]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedToken {
    pub token: String,
    pub index: usize,
    pub similarity: f64,
}

/// Tokens ranked by similarity, descending; ties go to the lower prompt index.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub ranked: Vec<RankedToken>,
    pub k: usize,
}

impl MatchResult {
    pub fn indices(&self) -> Vec<usize> {
        self.ranked.iter().map(|r| r.index).collect()
    }
}

fn check_vector(v: &[f64], dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Format(format!(
            "{what}: vector has dimension {}, expected {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Format(format!("{what}: non-finite vector component")));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateEmbedding(format!("{what}: all-zero vector")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawVector {
    vector: Option<Vec<f64>>,
    vector_file: Option<String>,
    row: Option<usize>,
}

#[derive(Deserialize)]
struct RawEntry {
    token: String,
    index: i64,
    #[serde(flatten)]
    data: RawVector,
}

#[derive(Deserialize)]
struct RawAudio {
    label: String,
    #[serde(flatten)]
    data: RawVector,
}

#[derive(Deserialize)]
struct RawFile {
    dim: usize,
    entries: Vec<RawEntry>,
    prompt: Option<String>,
    #[serde(default)]
    audio: Vec<RawAudio>,
}

struct SidecarReader<'a> {
    base: Option<&'a Path>,
    cache: HashMap<String, Vec<u8>>,
}

impl SidecarReader<'_> {
    fn resolve(&mut self, raw: RawVector, dim: usize, what: &str) -> Result<Vec<f64>> {
        match (raw.vector, raw.vector_file, raw.row) {
            (Some(v), None, None) => Ok(v),
            (None, Some(file), Some(row)) => {
                let base = self.base.ok_or_else(|| {
                    Error::Format(format!(
                        "{what}: sidecar vectors need a file path to resolve {file:?}"
                    ))
                })?;
                if !self.cache.contains_key(&file) {
                    let path: PathBuf = base.join(&file);
                    let bytes = std::fs::read(&path).map_err(|e| Error::read(path, e))?;
                    self.cache.insert(file.clone(), bytes);
                }
                let bytes = &self.cache[&file];
                let start = row * dim * 4;
                let end = start + dim * 4;
                if end > bytes.len() {
                    return Err(Error::Format(format!(
                        "{what}: row {row} lies beyond the end of {file:?}"
                    )));
                }
                Ok(bytes[start..end]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect())
            }
            _ => Err(Error::Format(format!(
                "{what}: expected either \"vector\" or \"vector_file\" + \"row\""
            ))),
        }
    }
}

pub fn parse_embedding_file(bytes: &[u8], base_dir: Option<&Path>) -> Result<EmbeddingFile> {
    let raw: RawFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::Format(format!("embedding JSON: {e}")))?;
    let dim = raw.dim;
    if dim == 0 {
        return Err(Error::Format("embedding dim must be positive".into()));
    }
    let mut sidecar = SidecarReader {
        base: base_dir,
        cache: HashMap::new(),
    };
    let entries = raw
        .entries
        .into_iter()
        .map(|e| {
            let what = format!("token {:?}", e.token);
            let index = usize::try_from(e.index)
                .map_err(|_| Error::Format(format!("{what}: negative index {}", e.index)))?;
            Ok(TokenEmbedding {
                vector: sidecar.resolve(e.data, dim, &what)?,
                token: e.token,
                index,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tokens = EmbeddingSet::new(dim, entries)?;
    let audio = raw
        .audio
        .into_iter()
        .map(|a| {
            let what = format!("audio {:?}", a.label);
            let vector = sidecar.resolve(a.data, dim, &what)?;
            check_vector(&vector, dim, &what)?;
            Ok(AudioEmbedding {
                vector,
                source_label: a.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingFile {
        tokens,
        prompt: raw.prompt,
        audio,
    })
}

/// Parses the text-token part of an embedding file held in memory.
pub fn load_embeddings(bytes: &[u8]) -> Result<EmbeddingSet> {
    parse_embedding_file(bytes, None).map(|f| f.tokens)
}

pub fn read_embedding_file(path: &Path) -> Result<EmbeddingFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::read(path, e))?;
    parse_embedding_file(&bytes, Some(path.parent().unwrap_or(Path::new("."))))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateEmbedding("cosine of a zero vector".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn top_k_tokens(audio: &AudioEmbedding, tokens: &EmbeddingSet, k: usize) -> Result<MatchResult> {
    if k == 0 {
        return Err(Error::Validation("k must be >= 1".into()));
    }
    if audio.vector.len() != tokens.dim() {
        return Err(Error::Dimension {
            expected: tokens.dim(),
            actual: audio.vector.len(),
        });
    }
    let mut ranked = tokens
        .entries()
        .iter()
        .map(|e| {
            Ok(RankedToken {
                token: e.token.clone(),
                index: e.index,
                similarity: cosine_similarity(&audio.vector, &e.vector)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.index.cmp(&b.index))
    });
    ranked.truncate(k);
    Ok(MatchResult { ranked, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(token: &str, index: usize, vector: &[f64]) -> TokenEmbedding {
        TokenEmbedding {
            token: token.into(),
            index,
            vector: vector.to_vec(),
        }
    }

    #[test]
    fn parses_inline_file() {
        let json = br#"{"dim":4,"entries":[
            {"token":"flame","index":2,"vector":[1,0,0,0]},
            {"token":"rain","index":5,"vector":[0,1,0,0.5]}]}"#;
        let set = load_embeddings(json).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim(), 4);
        assert_eq!(set.entries()[1].token, "rain");
        assert_eq!(set.entries()[1].vector, vec![0.0, 1.0, 0.0, 0.5]);
    }

    #[test]
    fn load_errors() {
        let dim_mismatch = br#"{"dim":4,"entries":[{"token":"a","index":0,"vector":[1,2,3]}]}"#;
        assert!(matches!(load_embeddings(dim_mismatch), Err(Error::Format(_))));
        let empty = br#"{"dim":4,"entries":[]}"#;
        assert!(matches!(load_embeddings(empty), Err(Error::Format(_))));
        let zero = br#"{"dim":2,"entries":[{"token":"a","index":0,"vector":[0,0]}]}"#;
        assert!(matches!(load_embeddings(zero), Err(Error::DegenerateEmbedding(_))));
        let dup = br#"{"dim":1,"entries":[{"token":"a","index":0,"vector":[1]},{"token":"b","index":0,"vector":[2]}]}"#;
        assert!(matches!(load_embeddings(dup), Err(Error::Format(_))));
        let neg = br#"{"dim":1,"entries":[{"token":"a","index":-1,"vector":[1]}]}"#;
        assert!(matches!(load_embeddings(neg), Err(Error::Format(_))));
        assert!(matches!(load_embeddings(b"[1,2]"), Err(Error::Format(_))));
        let sidecar = br#"{"dim":1,"entries":[{"token":"a","index":0,"vector_file":"v.bin","row":0}]}"#;
        assert!(matches!(load_embeddings(sidecar), Err(Error::Format(_))));
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = cosine_similarity(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap();
        assert!((s - 8.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateEmbedding(_))
        ));
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn top_k_ranks_and_breaks_ties() {
        let set = EmbeddingSet::new(
            2,
            vec![
                entry("c", 7, &[0.0, 1.0]),
                entry("a", 3, &[1.0, 0.0]),
                entry("b", 1, &[1.0, 0.0]),
                entry("d", 0, &[-1.0, 0.0]),
            ],
        )
        .unwrap();
        let audio = AudioEmbedding::new(vec![1.0, 0.1], "x").unwrap();
        assert_eq!(top_k_tokens(&audio, &set, 1).unwrap().indices(), vec![1]);
        assert_eq!(top_k_tokens(&audio, &set, 4).unwrap().indices(), vec![1, 3, 7, 0]);
        assert_eq!(top_k_tokens(&audio, &set, 10).unwrap().ranked.len(), 4);
        assert!(top_k_tokens(&audio, &set, 0).is_err());

        let wrong_dim = AudioEmbedding::new(vec![1.0, 0.0, 0.0], "y").unwrap();
        assert!(matches!(
            top_k_tokens(&wrong_dim, &set, 1),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn audio_lookup_by_label() {
        let json = br#"{"dim":1,"entries":[{"token":"a","index":0,"vector":[1]}],
            "audio":[{"label":"clips/rain.wav","vector":[1]},{"label":"fire.wav","vector":[-1]}]}"#;
        let f = parse_embedding_file(json, None).unwrap();
        let p = |s: &str| PathBuf::from(s);
        assert_eq!(f.audio_for(&p("fire.wav"), 0, 2).unwrap().vector, vec![-1.0]);
        assert_eq!(f.audio_for(&p("other/rain.wav"), 1, 2).unwrap().vector, vec![1.0]);
        assert_eq!(f.audio_for(&p("x.wav"), 1, 2).unwrap().vector, vec![-1.0]);
        assert!(f.audio_for(&p("x.wav"), 0, 3).is_none());
    }
}
