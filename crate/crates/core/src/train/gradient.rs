//! Analytic InfoNCE gradient with respect to the encoder weights.
//!
//! With eᵢ = uᵢ/‖uᵢ‖, uᵢ = Wᵀvᵢ, scores s_j = e_q·e_j and p = softmax(s/τ):
//!
//! * ∂L/∂s_j = (p_j − [j = positive]) / τ
//! * ∂L/∂e_q = Σ_j ∂L/∂s_j · e_j, ∂L/∂e_j = ∂L/∂s_j · e_q
//! * ∂L/∂u = (I − e eᵀ) ∂L/∂e / ‖u‖
//! * ∂L/∂W[r, :] += v_r · ∂L/∂u
//!
//! Texts that encode to the basis-vector convention are constants and
//! contribute no gradient.

use std::collections::BTreeMap;

use super::loss::{loss_from_logits, softmax};
use super::TrainError;
use crate::embed::{EncoderParams, FeatureVector};
use crate::scalar::{dot, norm, Scalar};

/// Row-sparse gradient: row index → d-vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseGrad<S> {
    pub rows: BTreeMap<usize, Vec<S>>,
}

impl<S: Scalar> SparseGrad<S> {
    pub fn new() -> Self {
        Self { rows: BTreeMap::new() }
    }

    pub fn add_row(&mut self, r: usize, scale: S, v: &[S]) {
        let row = self.rows.entry(r).or_insert_with(|| vec![S::zero(); v.len()]);
        for (a, &b) in row.iter_mut().zip(v) {
            *a += scale * b;
        }
    }

    pub fn accumulate(&mut self, other: &SparseGrad<S>, scale: S) {
        for (&r, v) in &other.rows {
            self.add_row(r, scale, v);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.rows.get(&r).map_or(S::zero(), |row| row[c])
    }

    pub fn norm(&self) -> S {
        self.rows.values().flatten().map(|&x| x * x).sum::<S>().sqrt()
    }
}

/// Encoded text with what backprop needs.
struct Encoded<'a, S> {
    features: &'a FeatureVector<S>,
    e: Vec<S>,
    /// `‖u‖`, or `None` when the basis convention applied.
    scale: Option<S>,
}

fn encode<'a, S: Scalar>(params: &EncoderParams<S>, v: &'a FeatureVector<S>) -> Encoded<'a, S> {
    let u = params.project(v);
    let n = norm(&u);
    if v.is_empty() || !(n > S::zero()) || !n.is_finite() {
        let mut e = vec![S::zero(); params.embed_dim];
        e[0] = S::one();
        Encoded { features: v, e, scale: None }
    } else {
        Encoded { features: v, e: u.into_iter().map(|x| x / n).collect(), scale: Some(n) }
    }
}

fn backprop<S: Scalar>(enc: &Encoded<'_, S>, de: &[S], grad: &mut SparseGrad<S>) {
    let Some(n) = enc.scale else { return };
    let proj = dot(&enc.e, de);
    let du: Vec<S> = de.iter().zip(&enc.e).map(|(&g, &e)| (g - proj * e) / n).collect();
    for (&r, &x) in enc.features.indices.iter().zip(&enc.features.values) {
        grad.add_row(r, x, &du);
    }
}

/// Similarities of the query to the positive (first) and every candidate.
pub fn scores<S: Scalar>(params: &EncoderParams<S>, query: &FeatureVector<S>, candidates: &[&FeatureVector<S>]) -> Vec<S> {
    let q = encode(params, query);
    candidates.iter().map(|c| dot(&q.e, &encode(params, c).e)).collect()
}

/// Loss and its gradient for one query against `candidates`, whose first
/// element is the positive.
pub fn loss_and_gradient<S: Scalar>(
    params: &EncoderParams<S>,
    query: &FeatureVector<S>,
    candidates: &[&FeatureVector<S>],
    temperature: S,
) -> Result<(S, SparseGrad<S>), TrainError> {
    if candidates.len() < 2 {
        return Err(TrainError::NoNegatives);
    }
    let q = encode(params, query);
    let cs: Vec<Encoded<'_, S>> = candidates.iter().map(|c| encode(params, c)).collect();
    let z: Vec<S> = cs.iter().map(|c| dot(&q.e, &c.e) / temperature).collect();
    let loss = loss_from_logits(&z);
    let p = softmax(&z);
    let ds: Vec<S> = p
        .iter()
        .enumerate()
        .map(|(j, &pj)| (if j == 0 { pj - S::one() } else { pj }) / temperature)
        .collect();
    let mut grad = SparseGrad::new();
    let mut de_q = vec![S::zero(); params.embed_dim];
    for (c, &g) in cs.iter().zip(&ds) {
        for (a, &e) in de_q.iter_mut().zip(&c.e) {
            *a += g * e;
        }
        let de_c: Vec<S> = q.e.iter().map(|&e| g * e).collect();
        backprop(c, &de_c, &mut grad);
    }
    backprop(&q, &de_q, &mut grad);
    Ok((loss, grad))
}

/// Loss only, through the same encoding path.
pub fn loss_only<S: Scalar>(
    params: &EncoderParams<S>,
    query: &FeatureVector<S>,
    candidates: &[&FeatureVector<S>],
    temperature: S,
) -> Result<S, TrainError> {
    let s = scores(params, query, candidates);
    super::loss::infonce_loss(s[0], &s[1..], temperature)
}
