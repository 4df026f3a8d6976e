use std::collections::BTreeMap;

use crate::primitives::BitString;
use crate::wire::Timestamp;

/// Accepted authenticator values, each kept until its timestamp leaves the
/// freshness window.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayCache {
    seen: BTreeMap<BitString, Timestamp>,
}

impl ReplayCache {
    pub fn new() -> ReplayCache {
        ReplayCache::default()
    }

    fn purge(&mut self, now: Timestamp, window: u32) {
        self.seen.retain(|_, ts| ts.is_fresh(now, window));
    }

    pub fn contains(&self, key: &BitString) -> bool {
        self.seen.contains_key(key)
    }

    /// Records `key`; false if it was already present within the window.
    pub fn insert(&mut self, key: &BitString, ts: Timestamp, now: Timestamp, window: u32) -> bool {
        self.purge(now, window);
        if self.seen.contains_key(key) {
            return false;
        }
        self.seen.insert(key.clone(), ts);
        true
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_within_window_rejected_then_expires() {
        let mut c = ReplayCache::new();
        let k = BitString::from_u32(5);
        assert!(c.insert(&k, Timestamp(10), Timestamp(10), 2));
        assert!(!c.insert(&k, Timestamp(10), Timestamp(11), 2));
        assert!(c.insert(&BitString::from_u32(6), Timestamp(12), Timestamp(12), 2));
        assert!(!c.contains(&k));
        assert_eq!(c.len(), 1);
    }
}
