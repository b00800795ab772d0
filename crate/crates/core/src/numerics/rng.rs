//! Portable pseudo-random numbers: xoshiro256** seeded through SplitMix64.
//!
//! Streams depend only on the seed, never on the platform, so runs can be
//! replayed bit-for-bit anywhere.

use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::DenseMatrix;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    state: [u64; 4],
    spare_normal: Option<f64>,
}

fn splitmix64(x: &mut u64) -> u64 {
    *x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self {
            seed,
            state,
            spare_normal: None,
        }
    }

    /// Independent generator for sub-stream `stream` of `seed`, e.g. one per epoch.
    pub fn derived(seed: u64, stream: u64) -> Self {
        let mut sm = seed ^ 0xD1B5_4A32_D192_ED03;
        let a = splitmix64(&mut sm);
        let mut sm2 = stream.wrapping_add(0x8CB9_2BA7_2F3D_8DD7);
        let b = splitmix64(&mut sm2);
        Self::new(a ^ b.rotate_left(17))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in `[0, n)`, without modulo bias.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, stddev: f64) -> f64 {
        mean + stddev * self.standard_normal()
    }

    /// Cauchy(0, scale) by inverse CDF.
    pub fn cauchy(&mut self, scale: f64) -> f64 {
        scale * (PI * (self.uniform_open() - 0.5)).tan()
    }

    /// Laplace(0, scale) by inverse CDF.
    pub fn laplace(&mut self, scale: f64) -> f64 {
        let u = self.uniform_open() - 0.5;
        -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// `rows x cols` matrix with i.i.d. `N(mean, stddev²)` entries.
pub fn gaussian_matrix(
    rows: usize,
    cols: usize,
    mean: f64,
    stddev: f64,
    rng: &mut Rng,
) -> Result<DenseMatrix> {
    if !stddev.is_finite() || stddev < 0.0 || !mean.is_finite() {
        return Err(Error::Parameter(format!(
            "gaussian_matrix needs finite mean and stddev >= 0, got mean={mean}, stddev={stddev}"
        )));
    }
    if stddev == 0.0 {
        return Ok(DenseMatrix::filled(rows, cols, mean));
    }
    Ok(DenseMatrix::from_fn(rows, cols, |_, _| {
        rng.normal(mean, stddev)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_is_constant() {
        let mut rng = Rng::new(1);
        let m = gaussian_matrix(3, 3, 0.0, 0.0, &mut rng).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_stddev_rejected() {
        let mut rng = Rng::new(1);
        assert!(matches!(
            gaussian_matrix(2, 2, 0.0, -1.0, &mut rng),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = gaussian_matrix(4, 5, 0.0, 1.0, &mut Rng::new(42)).unwrap();
        let b = gaussian_matrix(4, 5, 0.0, 1.0, &mut Rng::new(42)).unwrap();
        assert_eq!(a, b);
        let c = gaussian_matrix(4, 5, 0.0, 1.0, &mut Rng::new(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_of_a_million_draws() {
        let mut rng = Rng::new(2024);
        let m = gaussian_matrix(1000, 1000, 0.0, 0.1, &mut rng).unwrap();
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-3, "mean {mean}");
        assert!((var - 0.01).abs() < 2e-4, "var {var}");
    }

    #[test]
    fn known_stream_is_stable() {
        // Frozen first outputs guard against accidental generator changes.
        let mut rng = Rng::new(0);
        let first: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        let mut again = Rng::new(0);
        assert_eq!(first, (0..3).map(|_| again.next_u64()).collect::<Vec<_>>());
        assert_eq!(first[0], FROZEN_FIRST_OUTPUT);
    }

    const FROZEN_FIRST_OUTPUT: u64 = 0x99EC_5F36_CB75_F2B4;

    #[test]
    fn derived_streams_differ() {
        let mut a = Rng::derived(7, 0);
        let mut b = Rng::derived(7, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = Rng::new(5);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[rng.below(7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }

    #[test]
    fn laplace_and_cauchy_medians() {
        let mut rng = Rng::new(9);
        let n = 100_000;
        let mut c: Vec<f64> = (0..n).map(|_| rng.cauchy(1.0).abs()).collect();
        c.sort_by(f64::total_cmp);
        assert!((c[n / 2] - 1.0).abs() < 0.03);
        let mut l: Vec<f64> = (0..n).map(|_| rng.laplace(1.0).abs()).collect();
        l.sort_by(f64::total_cmp);
        assert!((l[n / 2] - std::f64::consts::LN_2).abs() < 0.02);
    }
}
