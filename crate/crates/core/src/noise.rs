//! Detector shot noise.
//!
//! Draws are counter-based: the standard normal `z_k` of stream
//! `(seed, stream_id)` is a pure function of `k`, computed by Box–Muller from
//! ChaCha8 words `4k..4k+4`. Trajectory results therefore do not depend on
//! execution order, and any step can be regenerated in isolation.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Source of standard-normal variates indexed by step.
pub trait NoiseSource {
    fn standard_normal(&self, k: usize) -> f64;
}

/// Seeded white-noise stream for one trajectory.
#[derive(Debug, Clone)]
pub struct NoiseProcess {
    pub seed: u64,
    pub stream_id: u64,
    /// Standard deviation of the per-step noise value, `sqrt(S_0 / (2Δt))`.
    pub sigma_step: f64,
}

impl NoiseProcess {
    pub fn new(seed: u64, stream_id: u64, s0: f64, dt: f64) -> Self {
        Self {
            seed,
            stream_id,
            sigma_step: sigma_step(s0, dt),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Sequential iterator over `z_0, z_1, …`; yields the same values as
    /// [`NoiseSource::standard_normal`].
    pub fn normals(&self) -> impl Iterator<Item = f64> {
        let mut rng = self.rng();
        std::iter::repeat_with(move || box_muller(rng.next_u64(), rng.next_u64()))
    }

    /// A uniform variate in `[0, 1)` from a word range disjoint from the
    /// noise draws (used to pick initial eigenstates).
    pub fn auxiliary_uniform(&self) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5851_f42d_4c95_7f2d);
        rng.set_stream(self.stream_id);
        (rng.next_u64() >> 11) as f64 * f64::powi(2.0, -53)
    }
}

impl NoiseSource for NoiseProcess {
    fn standard_normal(&self, k: usize) -> f64 {
        let mut rng = self.rng();
        rng.set_word_pos(4 * k as u128);
        box_muller(rng.next_u64(), rng.next_u64())
    }
}

/// `sqrt(S_0 / (2Δt))`
pub fn sigma_step(s0: f64, dt: f64) -> f64 {
    (s0 / (2.0 * dt)).sqrt()
}

/// Noise value `ξ_k` of a stream.
pub fn sample_noise(np: &NoiseProcess, k: usize) -> f64 {
    np.sigma_step * np.standard_normal(k)
}

fn box_muller(a: u64, b: u64) -> f64 {
    let scale = f64::powi(2.0, -53);
    let u1 = ((a >> 11) + 1) as f64 * scale; // (0, 1]
    let u2 = (b >> 11) as f64 * scale; // [0, 1)
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

/// Noise on a grid with twice the step of `fine`, built from the same
/// Brownian path: `z_k = (z'_{2k} + z'_{2k+1}) / √2`.
#[derive(Debug, Clone)]
pub struct CoarsenedNoise<S> {
    pub fine: S,
}

impl<S: NoiseSource> NoiseSource for CoarsenedNoise<S> {
    fn standard_normal(&self, k: usize) -> f64 {
        (self.fine.standard_normal(2 * k) + self.fine.standard_normal(2 * k + 1))
            * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// `ξ ≡ 0`
#[derive(Debug, Clone, Copy, Default)]
pub struct Silent;

impl NoiseSource for Silent {
    fn standard_normal(&self, _k: usize) -> f64 {
        0.0
    }
}

/// Replays a fixed list of standard normals (zero past its end).
#[derive(Debug, Clone, Default)]
pub struct Recorded(pub Vec<f64>);

impl NoiseSource for Recorded {
    fn standard_normal(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_random_access() {
        let np = NoiseProcess::new(7, 3, 2500.0, 0.01);
        let seq: Vec<f64> = np.normals().take(50).collect();
        for (k, z) in seq.iter().enumerate() {
            assert_eq!(*z, np.standard_normal(k));
        }
        assert_eq!(sample_noise(&np, 11), sample_noise(&np, 11));
        let other = NoiseProcess::new(7, 4, 2500.0, 0.01);
        assert_ne!(other.standard_normal(0), np.standard_normal(0));
    }

    #[test]
    fn silent_detector() {
        let np = NoiseProcess::new(1, 0, 0.0, 0.01);
        assert!((0..100).all(|k| sample_noise(&np, k) == 0.0));
    }

    #[test]
    fn empirical_moments() {
        let (s0, dt) = (2500.0, 0.01);
        let np = NoiseProcess::new(2015, 0, s0, dt);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for z in np.normals().take(n) {
            let xi = np.sigma_step * z;
            sum += xi;
            sq += xi * xi;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let target = s0 / (2.0 * dt);
        assert!((var / target - 1.0).abs() < 0.01, "var ratio {}", var / target);
        // 5 standard errors of the mean
        assert!(mean.abs() < 5.0 * (target / n as f64).sqrt());
    }

    #[test]
    fn coarsening_preserves_variance_and_path() {
        let fine = NoiseProcess::new(3, 9, 1.0, 0.005);
        let coarse = CoarsenedNoise { fine: fine.clone() };
        let expected =
            (fine.standard_normal(4) + fine.standard_normal(5)) / std::f64::consts::SQRT_2;
        assert_eq!(coarse.standard_normal(2), expected);
        let n = 200_000;
        let var: f64 = (0..n).map(|k| coarse.standard_normal(k).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.02);
    }
}
