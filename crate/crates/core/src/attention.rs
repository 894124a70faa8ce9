//! Cross-attention reweighting: targeted token rows are scaled by a multiplier,
//! all other rows pass through untouched.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::schedule::EditSchedule;

/// Dense `tokens x cells` grid of non-negative attention weights, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    tokens: usize,
    cells: usize,
    weights: Vec<f64>,
    normalized: bool,
}

impl AttentionMap {
    pub fn new(tokens: usize, cells: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != tokens * cells {
            return Err(Error::Dimension {
                expected: tokens * cells,
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Validation(format!(
                "attention weight {w} must be finite and >= 0"
            )));
        }
        Ok(Self {
            tokens,
            cells,
            weights,
            normalized: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cells = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cells) {
            return Err(Error::Dimension {
                expected: cells,
                actual: r.len(),
            });
        }
        Self::new(rows.len(), cells, rows.concat())
    }

    /// Marks the map as softmax-normalized over tokens; every cell's column
    /// must then sum to 1 within 1e-6.
    pub fn into_normalized(mut self) -> Result<Self> {
        for c in 0..self.cells {
            let sum = self.column_sum(c);
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!(
                    "cell {c} sums to {sum}, not 1"
                )));
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, token: usize) -> Result<&[f64]> {
        self.check_token(token)?;
        Ok(&self.weights[token * self.cells..(token + 1) * self.cells])
    }

    pub fn column_sum(&self, cell: usize) -> f64 {
        (0..self.tokens)
            .map(|t| self.weights[t * self.cells + cell])
            .sum()
    }

    fn check_token(&self, token: usize) -> Result<()> {
        if token >= self.tokens {
            return Err(Error::Index {
                index: token,
                len: self.tokens,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReweightSpec {
    pub targets: BTreeMap<usize, f64>,
    pub renormalize: bool,
}

impl ReweightSpec {
    pub fn single(token: usize, multiplier: f64) -> Self {
        Self {
            targets: BTreeMap::from([(token, multiplier)]),
            renormalize: false,
        }
    }
}

pub fn reweight(map: &AttentionMap, spec: &ReweightSpec) -> Result<AttentionMap> {
    for (&token, &m) in &spec.targets {
        map.check_token(token)?;
        if !m.is_finite() || m < 0.0 {
            return Err(Error::Validation(format!(
                "multiplier {m} for token {token} must be finite and >= 0"
            )));
        }
    }
    let mut out = map.clone();
    for (&token, &m) in &spec.targets {
        let row = &mut out.weights[token * map.cells..(token + 1) * map.cells];
        for w in row {
            *w *= m;
        }
    }
    out.normalized = false;
    if spec.renormalize {
        for c in 0..out.cells {
            let sum = out.column_sum(c);
            if sum > 0.0 {
                for t in 0..out.tokens {
                    out.weights[t * out.cells + c] /= sum;
                }
            }
        }
        out.normalized = map.normalized;
    }
    Ok(out)
}

/// Reweights with the targets of `frame`. Call once per denoising step; the
/// same multipliers apply at every step of a frame.
pub fn apply_schedule_step(
    map: &AttentionMap,
    schedule: &EditSchedule,
    frame: usize,
) -> Result<AttentionMap> {
    let targets = schedule.frames.get(frame).ok_or(Error::Index {
        index: frame,
        len: schedule.frame_count(),
    })?;
    reweight(
        map,
        &ReweightSpec {
            targets: targets.clone(),
            renormalize: false,
        },
    )
}

/// Total attention a token places on the image.
pub fn region_mass(map: &AttentionMap, token: usize) -> Result<f64> {
    Ok(map.row(token)?.iter().sum())
}
