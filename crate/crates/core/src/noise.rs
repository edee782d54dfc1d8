//! Randomness consumed by the samplers.
//!
//! Every random quantity flows through [`NoiseSource`], so tests can swap the
//! generator for a [`ScriptedNoise`] that replays fixed values. Within one
//! transition of the outer chain the draw order is fixed: the `d` standard
//! normals of the momentum refresh, then the acceptance uniform `u`, then the
//! single time-step jitter uniform.

use std::collections::VecDeque;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub trait NoiseSource {
    /// Fills `out` with independent `N(0, 1)` draws.
    fn fill_standard_normal(&mut self, out: &mut [f64]);

    /// The acceptance draw `u ~ U[0, 1)`.
    fn acceptance_uniform(&mut self) -> f64;

    /// Draw on `[0, 1)` mapped by the caller onto the jitter interval.
    fn jitter_uniform(&mut self) -> f64;
}

impl<R: RngCore> NoiseSource for R {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.sample(StandardNormal);
        }
    }

    fn acceptance_uniform(&mut self) -> f64 {
        self.random::<f64>()
    }

    fn jitter_uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// The generator behind every chain.
///
/// Stream splitting: the master seed is expanded with
/// `ChaCha20Rng::seed_from_u64` and each chain selects its own ChaCha stream
/// with `set_stream(stream)`, so chains sharing a seed never share draws.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Replays pre-recorded draws. Panics when a queue runs dry.
#[derive(Debug, Clone, Default)]
pub struct ScriptedNoise {
    normals: VecDeque<f64>,
    acceptance: VecDeque<f64>,
    jitter: VecDeque<f64>,
}

impl ScriptedNoise {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_normals(&mut self, values: &[f64]) -> &mut Self {
        self.normals.extend(values);
        self
    }

    pub fn push_acceptance(&mut self, u: f64) -> &mut Self {
        self.acceptance.push_back(u);
        self
    }

    pub fn push_jitter(&mut self, w: f64) -> &mut Self {
        self.jitter.push_back(w);
        self
    }

    /// Number of draws not consumed yet, as `(normals, acceptance, jitter)`.
    pub fn remaining(&self) -> (usize, usize, usize) {
        (self.normals.len(), self.acceptance.len(), self.jitter.len())
    }
}

impl NoiseSource for ScriptedNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self
                .normals
                .pop_front()
                .expect("scripted noise: normal queue exhausted");
        }
    }

    fn acceptance_uniform(&mut self) -> f64 {
        self.acceptance
            .pop_front()
            .expect("scripted noise: acceptance queue exhausted")
    }

    fn jitter_uniform(&mut self) -> f64 {
        // An empty jitter queue means "centre of the interval", i.e. no jitter.
        self.jitter.pop_front().unwrap_or(0.5)
    }
}

/// Passes draws through from an inner source and keeps a copy of each.
#[derive(Debug, Clone)]
pub struct RecordingNoise<N> {
    inner: N,
    /// One entry per `fill_standard_normal` call.
    pub normals: Vec<Vec<f64>>,
    pub acceptance: Vec<f64>,
    pub jitter: Vec<f64>,
}

impl<N: NoiseSource> RecordingNoise<N> {
    pub fn new(inner: N) -> Self {
        Self {
            inner,
            normals: Vec::new(),
            acceptance: Vec::new(),
            jitter: Vec::new(),
        }
    }

    pub fn into_inner(self) -> N {
        self.inner
    }
}

impl<N: NoiseSource> NoiseSource for RecordingNoise<N> {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        self.inner.fill_standard_normal(out);
        self.normals.push(out.to_vec());
    }

    fn acceptance_uniform(&mut self) -> f64 {
        let u = self.inner.acceptance_uniform();
        self.acceptance.push(u);
        u
    }

    fn jitter_uniform(&mut self) -> f64 {
        let w = self.inner.jitter_uniform();
        self.jitter.push(w);
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let mut a = chain_rng(7, 0);
        let mut b = chain_rng(7, 1);
        let mut a2 = chain_rng(7, 0);
        let xa: Vec<f64> = (0..4).map(|_| a.acceptance_uniform()).collect();
        let xb: Vec<f64> = (0..4).map(|_| b.acceptance_uniform()).collect();
        let xa2: Vec<f64> = (0..4).map(|_| a2.acceptance_uniform()).collect();
        assert_eq!(xa, xa2);
        assert_ne!(xa, xb);
    }

    #[test]
    fn scripted_replays_in_order() {
        let mut s = ScriptedNoise::new();
        s.push_normals(&[1.0, 2.0]).push_acceptance(0.25);
        let mut out = [0.0; 2];
        s.fill_standard_normal(&mut out);
        assert_eq!(out, [1.0, 2.0]);
        assert_eq!(s.acceptance_uniform(), 0.25);
        assert_eq!(s.jitter_uniform(), 0.5);
        assert_eq!(s.remaining(), (0, 0, 0));
    }
}
