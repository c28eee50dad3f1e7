use std::collections::HashSet;

use rand::Rng as _;

use crate::rng::Rng;

const ONSETS: &[u8] = b"bcdfghklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Pronounceable lowercase names of at least eight letters, unique within
/// one generator.
pub(crate) struct NameGen {
    used: HashSet<String>,
}

impl NameGen {
    pub fn new() -> Self {
        Self { used: HashSet::new() }
    }

    /// Four or five consonant-vowel syllables.
    pub fn fresh(&mut self, rng: &mut Rng) -> String {
        loop {
            let syllables = if rng.random_bool(0.5) { 4 } else { 5 };
            let mut name = String::with_capacity(2 * syllables);
            for _ in 0..syllables {
                name.push(ONSETS[rng.random_range(0..ONSETS.len())] as char);
                name.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            }
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    /// `base` with one vowel replaced.
    pub fn variant(&mut self, base: &str, rng: &mut Rng) -> String {
        let bytes = base.as_bytes();
        let vowels: Vec<usize> = (0..bytes.len()).filter(|&i| VOWELS.contains(&bytes[i])).collect();
        for _ in 0..64 {
            let i = vowels[rng.random_range(0..vowels.len())];
            let v = VOWELS[rng.random_range(0..VOWELS.len())];
            if v == bytes[i] {
                continue;
            }
            let mut out = bytes.to_vec();
            out[i] = v;
            let name = String::from_utf8(out).expect("ascii");
            if self.used.insert(name.clone()) {
                return name;
            }
        }
        self.fresh(rng)
    }
}
