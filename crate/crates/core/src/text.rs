//! Target-conditioned document vectors.
//!
//! A post is paired with its target as `"[CLS] " + target + " [SEP] " + text`.
//! Vectors come either from an externally produced embedding file or from
//! the built-in signed feature-hashing encoder.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding_io::EmbeddingTable;
use crate::error::{Error, Result};
use crate::seeding::hash_str;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ComposedInput(String);

impl ComposedInput {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for ComposedInput {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ComposedInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn compose_input(target: &str, text: &str) -> Result<ComposedInput> {
    if target.is_empty() {
        return Err(Error::EmptyTarget);
    }
    Ok(ComposedInput(format!("{CLS} {target} {SEP} {text}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HashEncoder {
    pub dim: usize,
    pub min_ngram: usize,
    pub max_ngram: usize,
    /// Buckets each feature is hashed into.
    pub hashes_per_feature: usize,
}

impl Default for HashEncoder {
    fn default() -> Self {
        HashEncoder {
            dim: 768,
            min_ngram: 3,
            max_ngram: 5,
            hashes_per_feature: 1,
        }
    }
}

impl HashEncoder {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.dim < 16 {
            return Err(Error::param(format!("{prefix}dim"), "must be >= 16"));
        }
        if self.min_ngram < 1 || self.min_ngram > self.max_ngram {
            return Err(Error::param(
                format!("{prefix}min_ngram"),
                "must satisfy 1 <= min_ngram <= max_ngram",
            ));
        }
        if self.hashes_per_feature < 1 {
            return Err(Error::param(format!("{prefix}hashes_per_feature"), "must be >= 1"));
        }
        Ok(())
    }

    pub fn encode(&self, input: &str) -> Vec<f64> {
        hash_encode(input, self.dim, self.hashes_per_feature, self.min_ngram..=self.max_ngram)
    }
}

fn add_feature(v: &mut [f64], feature: &str, hashes: usize) {
    let base = hash_str(feature);
    for k in 0..hashes as u64 {
        let h = crate::seeding::derive_seed(base, &[k]);
        let bucket = (h % v.len() as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
}

/// Word unigrams plus character n-grams (of `<word>`) hashed with a sign
/// bit into `dim` buckets, then L2-normalized. Input with no features maps
/// to the zero vector.
pub fn hash_encode(
    input: &str,
    dim: usize,
    hashes_per_feature: usize,
    ngrams: std::ops::RangeInclusive<usize>,
) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    let mut feature = String::new();
    for word in input.split_whitespace() {
        let word = word.to_lowercase();
        feature.clear();
        feature.push_str("w:");
        feature.push_str(&word);
        add_feature(&mut v, &feature, hashes_per_feature);

        let chars: Vec<char> = std::iter::once('<')
            .chain(word.chars())
            .chain(std::iter::once('>'))
            .collect();
        for n in ngrams.clone() {
            if n > chars.len() {
                break;
            }
            for gram in chars.windows(n) {
                feature.clear();
                feature.push_str("c:");
                feature.extend(gram);
                add_feature(&mut v, &feature, hashes_per_feature);
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// One row per post id.
#[derive(Clone, Debug, PartialEq)]
pub struct DocEmbeddings {
    table: EmbeddingTable,
}

impl DocEmbeddings {
    pub fn from_table(table: EmbeddingTable) -> Self {
        DocEmbeddings { table }
    }

    /// Fallback route: encodes every `(post_id, target, text)` with `encoder`.
    pub fn encode<'a, I>(posts: I, encoder: &HashEncoder) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        encoder.validate("text.")?;
        let posts: Vec<_> = posts.into_iter().collect();
        let rows: Vec<Vec<f64>> = posts
            .par_iter()
            .map(|&(_, target, text)| compose_input(target, text).map(|c| encoder.encode(c.as_str())))
            .collect::<Result<_>>()?;
        let ids = posts.iter().map(|(id, _, _)| (*id).to_owned()).collect();
        let data = rows.into_iter().flatten().collect();
        Ok(DocEmbeddings {
            table: EmbeddingTable::new(ids, encoder.dim, data)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, post_id: &str) -> Option<&[f64]> {
        self.table.get(post_id)
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }
}

/// Loads document vectors (text or binary format) and checks that every id
/// in `post_ids` is covered and, if given, that the dimension matches.
pub fn load_doc_embeddings<'a>(
    path: &Path,
    post_ids: impl IntoIterator<Item = &'a str>,
    expected_dim: Option<usize>,
) -> Result<DocEmbeddings> {
    let table = EmbeddingTable::read(path)?;
    if let Some(d) = expected_dim {
        if d != table.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: table.dim(),
            });
        }
    }
    let missing = table.missing(post_ids);
    if !missing.is_empty() {
        const SHOW: usize = 20;
        let mut ids = missing.iter().take(SHOW).cloned().collect::<Vec<_>>().join(", ");
        if missing.len() > SHOW {
            ids.push_str(", ...");
        }
        return Err(Error::MissingIds {
            count: missing.len(),
            ids,
        });
    }
    Ok(DocEmbeddings { table })
}
