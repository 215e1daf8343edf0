//! Linear projection of hashed features onto the unit sphere.

use std::io::{Read, Write};
use std::path::Path;

use super::features::{featurize, FeatureVector};
use crate::scalar::{dot, norm, Scalar};
use crate::seed::SplitMix64;

pub const DEFAULT_HASH_DIM: usize = 32_768;
pub const DEFAULT_EMBED_DIM: usize = 64;

const MAGIC: &[u8; 8] = b"HINSENC\0";
const FORMAT_VERSION: u8 = 1;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("invalid dimensions: hash_dim {hash_dim}, embed_dim {embed_dim}")]
    Dimensions { hash_dim: usize, embed_dim: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

/// Encoder parameters: an `hash_dim × embed_dim` row-major weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<S> {
    pub hash_dim: usize,
    pub embed_dim: usize,
    pub seed: u64,
    /// Optimizer steps applied so far.
    pub step: u64,
    pub weights: Vec<S>,
}

impl<S: Scalar> EncoderParams<S> {
    /// Entries uniform in ±1/√H from the seeded stream, row-major order.
    pub fn new(hash_dim: usize, embed_dim: usize, seed: u64) -> Result<Self, EmbedError> {
        if hash_dim == 0 || embed_dim == 0 {
            return Err(EmbedError::Dimensions { hash_dim, embed_dim });
        }
        let scale = 1.0 / (hash_dim as f64).sqrt();
        let mut rng = SplitMix64::derived(seed, "encoder_init", &[]);
        let weights = (0..hash_dim * embed_dim).map(|_| S::of((2.0 * rng.next_f64() - 1.0) * scale)).collect();
        Ok(Self { hash_dim, embed_dim, seed, step: 0, weights })
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(DEFAULT_HASH_DIM, DEFAULT_EMBED_DIM, seed).expect("default dimensions are valid")
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.weights[r * self.embed_dim..(r + 1) * self.embed_dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [S] {
        &mut self.weights[r * self.embed_dim..(r + 1) * self.embed_dim]
    }

    pub fn featurize(&self, text: &str) -> FeatureVector<S> {
        featurize(text, self.hash_dim)
    }

    /// Unnormalized projection `Wᵀv`.
    pub fn project(&self, v: &FeatureVector<S>) -> Vec<S> {
        let mut u = vec![S::zero(); self.embed_dim];
        for (&i, &x) in v.indices.iter().zip(&v.values) {
            for (acc, &w) in u.iter_mut().zip(self.row(i)) {
                *acc += x * w;
            }
        }
        u
    }

    /// `normalize(Wᵀv)`; an empty input or a zero projection maps to the
    /// first basis vector.
    pub fn encode(&self, v: &FeatureVector<S>) -> Vec<S> {
        let u = self.project(v);
        normalize_or_basis(u)
    }

    pub fn encode_text(&self, text: &str) -> Vec<S> {
        self.encode(&self.featurize(text))
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    /// Header (magic, version, H, d, seed, step) then row-major f64 weights,
    /// all little-endian.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[FORMAT_VERSION])?;
        for x in [self.hash_dim as u64, self.embed_dim as u64, self.seed, self.step] {
            w.write_all(&x.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.weights.len() * 8);
        for x in &self.weights {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &str) -> Result<Self, EmbedError> {
        let bad = |message: String| EmbedError::Format { path: path.to_string(), message };
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header".into()))?;
        if &magic != MAGIC {
            return Err(bad("not an encoder checkpoint".into()));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version).map_err(|_| bad("truncated header".into()))?;
        if version[0] != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", version[0])));
        }
        let mut header = [0u64; 4];
        for h in &mut header {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad("truncated header".into()))?;
            *h = u64::from_le_bytes(b);
        }
        let [hash_dim, embed_dim, seed, step] = header;
        let (hash_dim, embed_dim) = (hash_dim as usize, embed_dim as usize);
        if hash_dim == 0 || embed_dim == 0 {
            return Err(EmbedError::Dimensions { hash_dim, embed_dim });
        }
        let expected = hash_dim.checked_mul(embed_dim).and_then(|n| n.checked_mul(8));
        if expected != Some(r.len()) {
            return Err(bad(format!("expected {} weight bytes, found {}", hash_dim * embed_dim * 8, r.len())));
        }
        let weights: Vec<S> =
            r.chunks_exact(8).map(|c| S::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk")))).collect();
        let params = Self { hash_dim, embed_dim, seed, step, weights };
        if !params.all_finite() {
            return Err(bad("non-finite weight".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_bytes())
            .map_err(|source| EmbedError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let bytes =
            std::fs::read(path).map_err(|source| EmbedError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes, &path.display().to_string())
    }
}

pub fn normalize_or_basis<S: Scalar>(mut u: Vec<S>) -> Vec<S> {
    let n = norm(&u);
    if n > S::zero() && n.is_finite() {
        for x in &mut u {
            *x /= n;
        }
        u
    } else {
        let mut e = vec![S::zero(); u.len()];
        e[0] = S::one();
        e
    }
}

/// Cosine similarity of two unit vectors.
pub fn similarity<S: Scalar>(a: &[S], b: &[S]) -> S {
    dot(a, b)
}
