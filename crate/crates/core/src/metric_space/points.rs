use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// Labeled non-negative embeddings of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointSet {
    labels: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl LabeledPointSet {
    pub fn new(labels: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != vectors.len() {
            return Err(Error::LabelMismatch(format!(
                "{} labels for {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        super::check_unique(&labels)?;
        let dim = vectors.first().map_or(0, Vec::len);
        let mut zero = Vec::new();
        for (label, v) in labels.iter().zip(&vectors) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    label: label.clone(),
                    expected: dim,
                    found: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidEmbedding {
                    label: label.clone(),
                    message: format!("component {bad} is not a finite non-negative number"),
                });
            }
            if v.iter().all(|&x| x == 0.0) {
                zero.push(label.clone());
            }
        }
        if !zero.is_empty() {
            return Err(Error::ZeroVector(zero));
        }
        Ok(LabeledPointSet { labels, vectors })
    }

    /// Reads a delimited file with a header row: label column first, then
    /// one column per component. `.tsv`/`.tab` files are tab-separated;
    /// otherwise a tab in the header selects tabs, else commas.
    pub fn read(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        let tab_ext = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("tsv") | Some("tab")
        );
        let header_has_tab = text.lines().next().is_some_and(|l| l.contains('\t'));
        let delimiter = if tab_ext || header_has_tab { b'\t' } else { b',' };
        Self::parse(&text, delimiter)
    }

    pub fn parse(text: &str, delimiter: u8) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut labels = Vec::new();
        let mut vectors = Vec::new();
        for row in reader.records() {
            let row = row?;
            let mut fields = row.iter();
            let label = fields
                .next()
                .filter(|l| !l.is_empty())
                .ok_or_else(|| Error::InvalidEmbedding {
                    label: String::new(),
                    message: format!("row {} has no label", labels.len() + 1),
                })?
                .to_string();
            let v = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::InvalidEmbedding {
                        label: label.clone(),
                        message: format!("cannot parse {f:?} as a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            labels.push(label);
            vectors.push(v);
        }
        if labels.is_empty() {
            return Err(Error::Empty("embedding file has no rows"));
        }
        Self::new(labels, vectors)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `1 - <x, y> / (|x| |y|)` for every pair. Non-negative inputs keep the
/// result in `[0, 1]`; rounding is clamped into that range.
pub fn cosine_dissimilarity_matrix(points: &LabeledPointSet) -> DistanceMatrix {
    let sq_norms: Vec<f64> = points
        .vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum())
        .collect();
    let m = DistanceMatrix::from_fn(points.labels.clone(), |i, j| {
        let dot: f64 = points.vectors[i]
            .iter()
            .zip(&points.vectors[j])
            .map(|(a, b)| a * b)
            .sum();
        // sqrt(s * s) == s exactly, so identical vectors give exactly 0.
        (1.0 - dot / (sq_norms[i] * sq_norms[j]).sqrt()).clamp(0.0, 1.0)
    })
    .expect("cosine values are finite and labels unique");
    m.with_normalized_flag(true)
}
