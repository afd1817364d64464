//! Polar code construction from the partial order, encoding and membership.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::MAX_DIM;

/// Upward covering moves of `i` in the polar partial order on `n`-bit
/// LSB-first expansions: set a clear bit, or move a set bit one position
/// toward the MSB when that position is clear.
fn upper_covers(i: usize, n: usize) -> impl Iterator<Item = usize> {
    let flips = (0..n)
        .filter(move |&k| i >> k & 1 == 0)
        .map(move |k| i | 1 << k);
    let shifts = (0..n.saturating_sub(1))
        .filter(move |&k| i >> k & 1 == 1 && i >> (k + 1) & 1 == 0)
        .map(move |k| i ^ (0b11 << k));
    flips.chain(shifts)
}

fn lower_covers(i: usize, n: usize) -> impl Iterator<Item = usize> {
    let clears = (0..n)
        .filter(move |&k| i >> k & 1 == 1)
        .map(move |k| i & !(1 << k));
    let shifts = (0..n.saturating_sub(1))
        .filter(move |&k| i >> k & 1 == 0 && i >> (k + 1) & 1 == 1)
        .map(move |k| i ^ (0b11 << k));
    clears.chain(shifts)
}

/// Upward closure of `generators` under the polar partial order.
pub fn expand_generators(n: usize, generators: &[usize]) -> Result<Vec<usize>> {
    if n > MAX_DIM {
        return Err(Error::TooLarge(n));
    }
    let len = 1usize << n;
    let mut seen = vec![false; len];
    let mut work = Vec::new();
    for &g in generators {
        if g >= len {
            return Err(Error::GeneratorOutOfRange {
                generator: g,
                length: len,
            });
        }
        if !seen[g] {
            seen[g] = true;
            work.push(g);
        }
    }
    while let Some(i) = work.pop() {
        for j in upper_covers(i, n) {
            if !seen[j] {
                seen[j] = true;
                work.push(j);
            }
        }
    }
    Ok((0..len).filter(|&i| seen[i]).collect())
}

/// Polar transform `x G_N` with `G_N = [[1,0],[1,1]]^{(x) n}`, in place.
/// The transform is an involution over GF(2).
pub fn polar_transform(bits: &mut [u8]) {
    let len = bits.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// An `(N, K)` polar code with its information set and block profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    n: usize,
    info: Vec<usize>,
    frozen: Vec<bool>,
    profile: Vec<usize>,
}

impl CodeSpec {
    /// Validates `info_set` (must be upward-closed) and the block profile.
    /// An empty profile defaults to the LTA profile `[1; n]`.
    pub fn new(n: usize, info_set: &[usize], profile: &[usize]) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidCode(format!(
                "length exponent {n} not in 1..=16"
            )));
        }
        let len = 1usize << n;
        let set: BTreeSet<usize> = info_set.iter().copied().collect();
        if set.len() != info_set.len() {
            return Err(Error::InvalidCode("duplicate information indices".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= len) {
            return Err(Error::GeneratorOutOfRange {
                generator: bad,
                length: len,
            });
        }
        let mut frozen = vec![true; len];
        for &i in &set {
            frozen[i] = false;
        }
        for &i in &set {
            if let Some(j) = upper_covers(i, n).find(|&j| frozen[j]) {
                return Err(Error::InvalidCode(format!(
                    "information set is not upward-closed: {i} is included but {j} is frozen"
                )));
            }
        }
        let profile = if profile.is_empty() {
            vec![1; n]
        } else {
            profile.to_vec()
        };
        if profile.contains(&0) || profile.iter().sum::<usize>() != n {
            return Err(Error::InvalidProfile(format!(
                "block sizes {profile:?} must be positive and sum to {n}"
            )));
        }
        Ok(Self {
            n,
            info: set.into_iter().collect(),
            frozen,
            profile,
        })
    }

    pub fn from_generators(n: usize, generators: &[usize], profile: &[usize]) -> Result<Self> {
        let info = expand_generators(n, generators)?;
        Self::new(n, &info, profile)
    }

    /// Length exponent `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Block length `N = 2^n`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dimension `K`.
    pub fn k(&self) -> usize {
        self.info.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn block_profile(&self) -> &[usize] {
        &self.profile
    }

    /// Minimal elements of the information set; their upward closure is the
    /// full set again.
    pub fn minimal_generators(&self) -> Vec<usize> {
        self.info
            .iter()
            .copied()
            .filter(|&i| lower_covers(i, self.n).all(|j| self.frozen[j]))
            .collect()
    }

    /// Scatters `message` into the information positions (ascending) and
    /// applies the polar transform.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                found: message.len(),
            });
        }
        let mut u = vec![0u8; self.len()];
        for (&pos, &bit) in self.info.iter().zip(message) {
            u[pos] = bit & 1;
        }
        polar_transform(&mut u);
        Ok(u)
    }

    pub fn is_codeword(&self, word: &[u8]) -> Result<bool> {
        if word.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: word.len(),
            });
        }
        let mut u = word.to_vec();
        polar_transform(&mut u);
        Ok(u.iter().zip(&self.frozen).all(|(&b, &f)| !f || b == 0))
    }

    /// Message carried by a codeword (the inverse of [`CodeSpec::encode`]).
    pub fn extract_message(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if codeword.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: codeword.len(),
            });
        }
        let mut u = codeword.to_vec();
        polar_transform(&mut u);
        Ok(self.info.iter().map(|&i| u[i]).collect())
    }

    pub fn to_file(&self) -> CodeSpecFile {
        CodeSpecFile {
            n: self.n,
            generators: Some(self.minimal_generators()),
            info_set: None,
            block_profile: self.profile.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CodeSpecFile = toml::from_str(&text)?;
        file.build()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string(&self.to_file())?)?;
        Ok(())
    }
}

/// On-disk form of a code: `n`, either generators or an explicit
/// information set, and the block profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpecFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_set: Option<Vec<usize>>,
    #[serde(default)]
    pub block_profile: Vec<usize>,
}

impl CodeSpecFile {
    pub fn build(&self) -> Result<CodeSpec> {
        match (&self.generators, &self.info_set) {
            (Some(g), None) => CodeSpec::from_generators(self.n, g, &self.block_profile),
            (None, Some(i)) => CodeSpec::new(self.n, i, &self.block_profile),
            _ => Err(Error::InvalidCode(
                "exactly one of `generators` and `info_set` must be given".into(),
            )),
        }
    }
}

/// The `(1024, 78)` code with generators `{255, 505}` and profile `[3, 7]`.
pub fn puf_code_1024() -> CodeSpec {
    CodeSpec::from_generators(10, &[255, 505], &[3, 7]).expect("built-in code is valid")
}
