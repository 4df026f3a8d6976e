use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bits::{concat, BitString};
use super::hash::hash;
use super::random::{random_bits, SimRng};

pub const CHALLENGE_BITS: usize = 160;
pub const PUF_SEED_BITS: usize = 256;

/// Simulated PUF: a keyed PRF over the challenge, optionally noisy.
///
/// The seed models the physical variation of one device. It is never part of
/// the UAV memory image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PufDevice {
    seed: BitString,
    #[serde(default)]
    noise_rate: f64,
}

impl PufDevice {
    pub fn new(seed: BitString, noise_rate: f64) -> PufDevice {
        assert_eq!(seed.width(), PUF_SEED_BITS, "device seed must be 256 bits");
        assert!(
            (0.0..=1.0).contains(&noise_rate),
            "noise rate {noise_rate} outside [0, 1]"
        );
        PufDevice { seed, noise_rate }
    }

    /// Manufactures a device with a fresh random seed.
    pub fn manufacture(rng: &mut SimRng, noise_rate: f64) -> PufDevice {
        PufDevice::new(random_bits(rng, PUF_SEED_BITS), noise_rate)
    }

    pub fn noise_rate(&self) -> f64 {
        self.noise_rate
    }

    pub fn seed(&self) -> &BitString {
        &self.seed
    }
}

/// Response of `dev` to `challenge`. The RNG is consulted only when the device
/// is noisy.
pub fn puf_eval(dev: &PufDevice, challenge: &BitString, rng: &mut SimRng) -> BitString {
    assert_eq!(
        challenge.width(),
        CHALLENGE_BITS,
        "challenge must be 160 bits"
    );
    let mut response = hash(&concat([&dev.seed, challenge])).into_bits();
    if dev.noise_rate > 0.0 {
        for i in 0..response.width() {
            if rng.gen_bool(dev.noise_rate) {
                response.flip(i);
            }
        }
    }
    response
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::rng_from_seed;

    #[test]
    fn noiseless_eval_is_deterministic() {
        let mut rng = rng_from_seed(1);
        let dev = PufDevice::manufacture(&mut rng, 0.0);
        let c = random_bits(&mut rng, 160);
        assert_eq!(puf_eval(&dev, &c, &mut rng), puf_eval(&dev, &c, &mut rng));
    }

    #[test]
    fn inter_device_distance_within_six_sigma() {
        // Binomial(160, 1/2): mean 80, sigma 6.32; 6 sigma gives [42, 118],
        // we hold the tighter [48, 112].
        let mut rng = rng_from_seed(2);
        let c = random_bits(&mut rng, 160);
        for _ in 0..100 {
            let a = PufDevice::manufacture(&mut rng, 0.0);
            let b = PufDevice::manufacture(&mut rng, 0.0);
            let d = puf_eval(&a, &c, &mut rng).hamming_distance(&puf_eval(&b, &c, &mut rng));
            assert!((48..=112).contains(&d), "distance {d}");
        }
    }

    #[test]
    fn noisy_intra_device_distance_matches_expectation() {
        // Two independent noisy reads differ per bit with 2p(1-p); at p = 0.05
        // the mean distance over 160 bits is 15.2.
        let mut rng = rng_from_seed(3);
        let dev = PufDevice::manufacture(&mut rng, 0.05);
        let c = random_bits(&mut rng, 160);
        let trials = 2000;
        let total: usize = (0..trials)
            .map(|_| puf_eval(&dev, &c, &mut rng).hamming_distance(&puf_eval(&dev, &c, &mut rng)))
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 15.2).abs() < 0.6, "mean {mean}");
    }
}
