//! Instrumented primitive calls.
//!
//! Every protocol step goes through a [`Meter`], which tallies hash, PUF,
//! fuzzy-extractor and XOR invocations and can record each hash preimage for
//! the adversary's algebra.

use serde::{Deserialize, Serialize};

use crate::primitives::{
    concat, fe_decode, fe_gen_with_seed, hash, puf_eval, random_bits, BitString, Digest,
    FuzzyError, FuzzyExtractorParams, HashRecord, HelperData, PufDevice, SimRng,
};

/// Primitive-operation tallies for one role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub hash: u32,
    pub puf: u32,
    pub fe: u32,
    pub xor: u32,
}

impl OpCounter {
    pub fn is_zero(&self) -> bool {
        *self == OpCounter::default()
    }
}

impl std::ops::Add for OpCounter {
    type Output = OpCounter;
    fn add(self, o: OpCounter) -> OpCounter {
        OpCounter {
            hash: self.hash + o.hash,
            puf: self.puf + o.puf,
            fe: self.fe + o.fe,
            xor: self.xor + o.xor,
        }
    }
}

impl std::ops::AddAssign for OpCounter {
    fn add_assign(&mut self, o: OpCounter) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Default)]
pub struct Meter {
    counts: OpCounter,
    log: Option<Vec<HashRecord>>,
}

impl Meter {
    pub fn new() -> Meter {
        Meter::default()
    }

    /// A meter that also keeps every hash preimage.
    pub fn recording() -> Meter {
        Meter {
            counts: OpCounter::default(),
            log: Some(Vec::new()),
        }
    }

    pub fn counts(&self) -> OpCounter {
        self.counts
    }

    pub fn reset(&mut self) {
        self.counts = OpCounter::default();
    }

    pub fn take_log(&mut self) -> Vec<HashRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn log(&self) -> &[HashRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    fn record(&mut self, parts: &[&BitString], output: &Digest) {
        if let Some(log) = &mut self.log {
            log.push(HashRecord {
                parts: parts.iter().map(|p| (*p).clone()).collect(),
                output: output.bits().clone(),
            });
        }
    }

    /// Counted `h(p0 ‖ p1 ‖ ...)`.
    pub fn h(&mut self, parts: &[&BitString]) -> Digest {
        self.counts.hash += 1;
        let out = hash(&concat(parts.iter().copied()));
        self.record(parts, &out);
        out
    }

    pub fn xor(&mut self, a: &BitString, b: &BitString) -> BitString {
        self.counts.xor += 1;
        a.xor(b)
    }

    pub fn puf(&mut self, dev: &PufDevice, challenge: &BitString, rng: &mut SimRng) -> BitString {
        self.counts.puf += 1;
        puf_eval(dev, challenge, rng)
    }

    /// Counted as one fuzzy-extractor call; the internal `h(w)` is recorded
    /// but not tallied as a hash.
    pub fn fe_gen(
        &mut self,
        bio: &BitString,
        params: &FuzzyExtractorParams,
        rng: &mut SimRng,
    ) -> Result<(Digest, HelperData), FuzzyError> {
        params.validate()?;
        let seed = random_bits(rng, params.key_bits);
        let out = fe_gen_with_seed(bio, &seed, params)?;
        self.counts.fe += 1;
        self.record(&[&seed], &out.0);
        Ok(out)
    }

    pub fn fe_rep(
        &mut self,
        bio_prime: &BitString,
        tau: &HelperData,
        params: &FuzzyExtractorParams,
    ) -> Result<Digest, FuzzyError> {
        let seed = fe_decode(bio_prime, tau, params)?;
        self.counts.fe += 1;
        let sigma = hash(&seed);
        self.record(&[&seed], &sigma);
        Ok(sigma)
    }
}
