//! Seeded random streams.
//!
//! All stochastic code draws from [`Stream`], a ChaCha8 generator. Independent
//! substreams for sweep cells come from [`substream`], which folds the cell
//! coordinates into the base seed with the SplitMix64 finalizer, so a cell's
//! draws never depend on which other cells ran or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the substream at `coords` under `base`.
pub fn substream_seed(base: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(mix64(base), |acc, &c| mix64(acc ^ mix64(c)))
}

pub fn substream(base: u64, coords: &[u64]) -> Stream {
    Stream::seed_from_u64(substream_seed(base, coords))
}

pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

/// Uniform draw in (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Two independent standard normals by the Box–Muller transform.
pub fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = open_unit(rng);
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Exponential draw with the given mean.
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    -mean * open_unit(rng).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_stable_and_distinct() {
        assert_eq!(substream_seed(42, &[1, 2, 3]), substream_seed(42, &[1, 2, 3]));
        assert_ne!(substream_seed(42, &[1, 2, 3]), substream_seed(42, &[1, 3, 2]));
        assert_ne!(substream_seed(42, &[1]), substream_seed(43, &[1]));
        let a: Vec<u64> = (0..4).map(|_| substream(9, &[7]).gen()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn normal_moments() {
        let mut rng = stream(1);
        let n = 200_000;
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..n / 2 {
            let (a, b) = normal_pair(&mut rng);
            s += a + b;
            ss += a * a + b * b;
        }
        let mean = s / n as f64;
        let var = ss / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.015, "{var}");
    }

    #[test]
    fn exponential_mean() {
        let mut rng = stream(2);
        let n = 100_000;
        let m = (0..n).map(|_| exponential(&mut rng, 10.0)).sum::<f64>() / n as f64;
        assert!((m - 10.0).abs() < 0.15, "{m}");
    }
}
