//! Code-offset fuzzy extractor over a repetition code.
//!
//! Gen draws a k-bit seed `w`, repeats each bit `r` times to form a codeword
//! and publishes `tau = codeword ⊕ bio`. Rep majority-decodes each r-bit block
//! of `tau ⊕ bio'`. Recovery is exact whenever every block of `bio ⊕ bio'`
//! has at most `⌊r/2⌋` set bits. The extracted key is `sigma = h(w)`.

use serde::{Deserialize, Serialize};

use super::bits::BitString;
use super::hash::{hash, Digest};
use super::random::{random_bits, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyExtractorParams {
    pub key_bits: usize,
    pub repetition: usize,
}

impl Default for FuzzyExtractorParams {
    fn default() -> Self {
        FuzzyExtractorParams {
            key_bits: 32,
            repetition: 5,
        }
    }
}

impl FuzzyExtractorParams {
    pub fn new(key_bits: usize, repetition: usize) -> Result<Self, FuzzyError> {
        let params = FuzzyExtractorParams {
            key_bits,
            repetition,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.key_bits == 0 || self.repetition == 0 || self.repetition.is_multiple_of(2) {
            return Err(FuzzyError::Params {
                key_bits: self.key_bits,
                repetition: self.repetition,
            });
        }
        Ok(())
    }

    pub fn bio_bits(&self) -> usize {
        self.key_bits * self.repetition
    }

    /// Per-block error tolerance `t`.
    pub fn tolerance(&self) -> usize {
        self.repetition / 2
    }

    fn check_width(&self, v: &BitString) -> Result<(), FuzzyError> {
        if v.width() != self.bio_bits() {
            return Err(FuzzyError::Width {
                expected: self.bio_bits(),
                found: v.width(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FuzzyError {
    #[error("repetition must be odd and both parameters positive (k={key_bits}, r={repetition})")]
    Params { key_bits: usize, repetition: usize },
    #[error("biometric width {found} does not match k*r = {expected}")]
    Width { expected: usize, found: usize },
}

/// Public helper data `tau`.
pub type HelperData = BitString;

fn encode(seed: &BitString, params: &FuzzyExtractorParams) -> BitString {
    BitString::from_bits(
        seed.bits()
            .flat_map(|b| std::iter::repeat_n(b, params.repetition)),
    )
}

/// Gen with an explicit seed `w`.
pub fn fe_gen_with_seed(
    bio: &BitString,
    seed: &BitString,
    params: &FuzzyExtractorParams,
) -> Result<(Digest, HelperData), FuzzyError> {
    params.validate()?;
    params.check_width(bio)?;
    assert_eq!(seed.width(), params.key_bits, "seed width must equal k");
    let tau = encode(seed, params).xor(bio);
    Ok((hash(seed), tau))
}

pub fn fe_gen(
    bio: &BitString,
    params: &FuzzyExtractorParams,
    rng: &mut SimRng,
) -> Result<(Digest, HelperData), FuzzyError> {
    params.validate()?;
    let seed = random_bits(rng, params.key_bits);
    fe_gen_with_seed(bio, &seed, params)
}

/// Majority-decodes `tau ⊕ bio'` back to the k-bit seed.
pub fn fe_decode(
    bio_prime: &BitString,
    tau: &HelperData,
    params: &FuzzyExtractorParams,
) -> Result<BitString, FuzzyError> {
    params.validate()?;
    params.check_width(bio_prime)?;
    params.check_width(tau)?;
    let noisy = tau.xor(bio_prime);
    let r = params.repetition;
    Ok(BitString::from_bits((0..params.key_bits).map(|block| {
        let ones = (block * r..(block + 1) * r)
            .filter(|&i| noisy.get(i))
            .count();
        ones > r / 2
    })))
}

/// Rep. Beyond tolerance this silently yields a different key.
pub fn fe_rep(
    bio_prime: &BitString,
    tau: &HelperData,
    params: &FuzzyExtractorParams,
) -> Result<Digest, FuzzyError> {
    fe_decode(bio_prime, tau, params).map(|w| hash(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::rng_from_seed;
    use proptest::prelude::*;

    fn flip_in_block(bio: &BitString, block: usize, count: usize, r: usize) -> BitString {
        let mut out = bio.clone();
        for i in 0..count {
            out.flip(block * r + i);
        }
        out
    }

    #[test]
    fn default_params() {
        let p = FuzzyExtractorParams::default();
        assert_eq!(
            (p.key_bits, p.repetition, p.bio_bits(), p.tolerance()),
            (32, 5, 160, 2)
        );
    }

    #[test]
    fn even_repetition_rejected() {
        assert!(FuzzyExtractorParams::new(32, 4).is_err());
        assert!(FuzzyExtractorParams::new(0, 5).is_err());
    }

    #[test]
    fn exact_reading_recovers_sigma() {
        let p = FuzzyExtractorParams::default();
        let mut rng = rng_from_seed(4);
        let bio = random_bits(&mut rng, 160);
        let (sigma, tau) = fe_gen(&bio, &p, &mut rng).unwrap();
        assert_eq!(sigma.bits().width(), 160);
        assert_eq!(fe_rep(&bio, &tau, &p).unwrap(), sigma);
    }

    #[test]
    fn zero_biometric_exposes_codeword() {
        let p = FuzzyExtractorParams::default();
        let seed = random_bits(&mut rng_from_seed(5), 32);
        let (_, tau) = fe_gen_with_seed(&BitString::zeros(160), &seed, &p).unwrap();
        assert_eq!(tau, encode(&seed, &p));
    }

    #[test]
    fn one_block_past_tolerance_changes_sigma() {
        let p = FuzzyExtractorParams::default();
        let mut rng = rng_from_seed(6);
        let bio = random_bits(&mut rng, 160);
        let (sigma, tau) = fe_gen(&bio, &p, &mut rng).unwrap();
        let at_t = flip_in_block(&bio, 7, 2, 5);
        assert_eq!(fe_rep(&at_t, &tau, &p).unwrap(), sigma);
        let past_t = flip_in_block(&bio, 7, 3, 5);
        assert_ne!(fe_rep(&past_t, &tau, &p).unwrap(), sigma);
    }

    #[test]
    fn width_mismatch_rejected() {
        let p = FuzzyExtractorParams::default();
        let mut rng = rng_from_seed(8);
        assert!(matches!(
            fe_gen(&BitString::zeros(159), &p, &mut rng),
            Err(FuzzyError::Width { .. })
        ));
        assert!(fe_rep(&BitString::zeros(160), &BitString::zeros(150), &p).is_err());
    }

    proptest! {
        #[test]
        fn recovers_under_per_block_tolerance(
            seed in any::<u64>(),
            errors in prop::collection::vec(prop::collection::btree_set(0usize..5, 0..=2), 32),
        ) {
            let p = FuzzyExtractorParams::default();
            let mut rng = rng_from_seed(seed);
            let bio = random_bits(&mut rng, 160);
            let (sigma, tau) = fe_gen(&bio, &p, &mut rng).unwrap();
            let mut noisy = bio.clone();
            for (block, positions) in errors.iter().enumerate() {
                for &pos in positions {
                    noisy.flip(block * 5 + pos);
                }
            }
            prop_assert_eq!(fe_rep(&noisy, &tau, &p).unwrap(), sigma);
        }
    }
}
