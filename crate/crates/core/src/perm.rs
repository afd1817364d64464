//! Codeword-index permutations induced by affine maps on index bits, and the
//! ensemble architectures used to enumerate them.
//!
//! A permutation table `p` acts on vectors by `x'[p[i]] = x[i]`, and
//! composition follows `(p ∘ q)(i) = p(q(i))`.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{random_invertible, singer_matrix, BitMatrix, BitVector};
use crate::polar::CodeSpec;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    table: Vec<u32>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self {
            table: (0..len as u32).collect(),
        }
    }

    pub fn from_table(table: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; table.len()];
        for &t in &table {
            let t = t as usize;
            if t >= table.len() || seen[t] {
                return Err(Error::InvalidEnsemble("table is not a bijection".into()));
            }
            seen[t] = true;
        }
        Ok(Self { table })
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &t)| i as u32 == t)
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.table[i] as usize
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Permutation {
            table: other
                .table
                .iter()
                .map(|&j| self.table[j as usize])
                .collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.len()];
        for (i, &t) in self.table.iter().enumerate() {
            inv[t as usize] = i as u32;
        }
        Permutation { table: inv }
    }

    pub fn pow(&self, mut j: u64) -> Permutation {
        let mut base = self.clone();
        let mut acc = Permutation::identity(self.len());
        while j > 0 {
            if j & 1 == 1 {
                acc = acc.compose(&base).expect("equal lengths");
            }
            base = base.compose(&base).expect("equal lengths");
            j >>= 1;
        }
        acc
    }

    /// Smallest `j >= 1` with `p^j = id`: the lcm of the cycle lengths.
    pub fn order(&self) -> u64 {
        let mut seen = vec![false; self.len()];
        let mut order = 1u64;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0u64;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.get(i);
                len += 1;
            }
            order = crate::gf2::lcm(order, len);
        }
        order
    }

    /// `out[p[i]] = x[i]`.
    pub fn apply<T: Copy + Default>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); x.len()];
        for (&t, &v) in self.table.iter().zip(x) {
            out[t as usize] = v;
        }
        out
    }

    /// `out[i] = x[p[i]]`, the inverse action.
    pub fn apply_inverse<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.table.iter().map(|&t| x[t as usize]).collect()
    }
}

/// Index map `x' = A x + b` on LSB-first index bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: BitMatrix,
    pub offset: BitVector,
}

impl AffineMap {
    pub fn linear(matrix: BitMatrix) -> Result<Self> {
        let offset = BitVector::zero(matrix.n_rows())?;
        Ok(Self { matrix, offset })
    }

    /// Permutation of `2^n` indices; `n` must match the matrix dimension.
    pub fn permutation(&self, n: usize) -> Result<Permutation> {
        if self.matrix.n_rows() != n || !self.matrix.is_square() || self.offset.len() != n {
            return Err(Error::Dimension(format!(
                "affine map is not {n}-dimensional"
            )));
        }
        if !self.matrix.is_invertible() {
            return Err(Error::Singular);
        }
        let b = self.offset.bits();
        Ok(Permutation {
            table: (0..1u32 << n).map(|i| self.matrix.apply(i) ^ b).collect(),
        })
    }

    /// Lower-triangular affine maps are absorbed by SC decoding.
    pub fn is_absorbed(&self) -> bool {
        self.matrix.is_lower_triangular()
    }
}

pub fn perm_from_affine(map: &AffineMap, n: usize) -> Result<Permutation> {
    map.permutation(n)
}

/// Permutation of the block-diagonal linear map `diag(blocks)`.
pub fn build_bdl_perm(blocks: &[BitMatrix], profile: &[usize]) -> Result<Permutation> {
    check_blocks(blocks, profile)?;
    let a = BitMatrix::block_diag(blocks)?;
    let n = a.n_rows();
    AffineMap::linear(a)?.permutation(n)
}

fn check_blocks(blocks: &[BitMatrix], profile: &[usize]) -> Result<()> {
    if blocks.len() != profile.len()
        || blocks
            .iter()
            .zip(profile)
            .any(|(b, &s)| b.n_rows() != s || !b.is_square())
    {
        return Err(Error::InvalidProfile(format!(
            "blocks do not match profile {profile:?}"
        )));
    }
    if blocks.iter().any(|b| !b.is_invertible()) {
        return Err(Error::Singular);
    }
    Ok(())
}

/// Repeats `sigma` on groups of `block` neighbouring indices:
/// `pi[k*block + r] = sigma[k]*block + r`.
pub fn blockwise_expand(sigma: &Permutation, block: usize) -> Result<Permutation> {
    if !block.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "block size {block} is not a power of two"
        )));
    }
    let mut table = Vec::with_capacity(sigma.len() * block);
    for &s in sigma.table() {
        for r in 0..block as u32 {
            table.push(s * block as u32 + r);
        }
    }
    Ok(Permutation { table })
}

/// Splits `pi` over `N` into its block pattern over `N / block` if it moves
/// groups of `block` neighbours together.
pub fn blockwise_pattern(pi: &Permutation, block: usize) -> Result<Permutation> {
    if !block.is_power_of_two() || !pi.len().is_multiple_of(block) {
        return Err(Error::InvalidParameter(format!(
            "cannot split {} indices into blocks of {block}",
            pi.len()
        )));
    }
    let sigma: Vec<u32> = pi
        .table
        .chunks(block)
        .map(|c| c[0] / block as u32)
        .collect();
    let sigma = Permutation::from_table(sigma)?;
    if blockwise_expand(&sigma, block)? != *pi {
        return Err(Error::InvalidParameter(
            "permutation does not move whole blocks".into(),
        ));
    }
    Ok(sigma)
}

/// A BDL transform kept in factored form so files stay small.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BdlTransform {
    pub blocks: Vec<BitMatrix>,
}

impl BdlTransform {
    pub fn profile(&self) -> Vec<usize> {
        self.blocks.iter().map(BitMatrix::n_rows).collect()
    }

    pub fn permutation(&self) -> Result<Permutation> {
        build_bdl_perm(&self.blocks, &self.profile())
    }

    pub fn matrix(&self) -> Result<BitMatrix> {
        BitMatrix::block_diag(&self.blocks)
    }
}

/// Where permutations come from when sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPolicy {
    /// Keep the first (least significant) block at identity. Valid without
    /// loss when all constituent codes of size `2^{s_0}` are ML-decoded leaves.
    pub identity_first_block: bool,
}

impl SamplingPolicy {
    /// Identity first block iff every node of size `2^{s_0}` is a special leaf
    /// (or lies inside one).
    pub fn for_code(code: &CodeSpec) -> Self {
        Self {
            identity_first_block: first_block_is_equivariant(code),
        }
    }
}

fn first_block_is_equivariant(code: &CodeSpec) -> bool {
    let s0 = code.block_profile()[0];
    if code.block_profile().len() < 2 {
        return false;
    }
    let tree = crate::sc::DecodeTree::build(code);
    let size = 1usize << s0;
    !tree
        .nodes()
        .iter()
        .any(|node| node.len <= size && !node.kind.is_leaf())
}

pub fn random_bdl<R: Rng + ?Sized>(
    profile: &[usize],
    policy: SamplingPolicy,
    rng: &mut R,
) -> Result<BdlTransform> {
    let blocks = profile
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if i == 0 && policy.identity_first_block {
                BitMatrix::identity(s)
            } else {
                random_invertible(s, rng)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BdlTransform { blocks })
}

/// Draws a random BDL transform that is not absorbed and whose permutation
/// is not in `taken`.
fn fresh_bdl<R: Rng + ?Sized>(
    profile: &[usize],
    policy: SamplingPolicy,
    taken: &HashSet<Permutation>,
    rng: &mut R,
) -> Result<(BdlTransform, Permutation)> {
    for _ in 0..10_000 {
        let t = random_bdl(profile, policy, rng)?;
        if t.matrix()?.is_lower_triangular() {
            continue;
        }
        let p = t.permutation()?;
        if !taken.contains(&p) {
            return Ok((t, p));
        }
    }
    Err(Error::InvalidEnsemble(format!(
        "could not draw a fresh permutation for profile {profile:?}"
    )))
}

/// Default recursive base: identity on the first block (when the policy
/// allows), Singer cycles on all others. With an RNG the Singer blocks are
/// replaced by random conjugates `P S P^-1`, which are Singer cycles too.
pub fn singer_base<R: Rng + ?Sized>(
    profile: &[usize],
    policy: SamplingPolicy,
    rng: Option<&mut R>,
) -> Result<BdlTransform> {
    let mut rng = rng;
    let blocks = profile
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if i == 0 && policy.identity_first_block {
                return BitMatrix::identity(s);
            }
            let singer = singer_matrix(s)?;
            match rng.as_deref_mut() {
                Some(r) => {
                    let p = random_invertible(s, r)?;
                    p.mul(&singer)?.mul(&p.inverse()?)
                }
                None => Ok(singer),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BdlTransform { blocks })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// M hard-wired interleavers behind one M-input multiplexer.
    Independent,
    /// log2(M) interleavers, each switched in or out by one bit of j.
    Cascaded,
    /// One interleaver applied j times.
    Recursive,
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Architecture::Independent => "independent",
            Architecture::Cascaded => "cascaded",
            Architecture::Recursive => "recursive",
        })
    }
}

/// A permutation together with its factored form when known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePerm {
    pub transform: Option<BdlTransform>,
    pub perm: Permutation,
}

impl BasePerm {
    pub fn from_transform(t: BdlTransform) -> Result<Self> {
        let perm = t.permutation()?;
        Ok(Self {
            transform: Some(t),
            perm,
        })
    }

    pub fn from_perm(perm: Permutation) -> Self {
        Self {
            transform: None,
            perm,
        }
    }
}

/// Architecture and base permutations of an ensemble of `size` members;
/// member 0 is always the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub architecture: Architecture,
    pub size: usize,
    /// Independent: members 1..M. Cascaded: log2(M) stages. Recursive: one base.
    pub bases: Vec<BasePerm>,
    pub seed: Option<u64>,
    pub note: Option<String>,
}

impl EnsembleSpec {
    /// The single-member ensemble (plain SC decoding).
    pub fn identity() -> Self {
        Self {
            architecture: Architecture::Independent,
            size: 1,
            bases: Vec::new(),
            seed: None,
            note: None,
        }
    }

    pub fn independent(members: Vec<BasePerm>) -> Result<Self> {
        let spec = Self {
            architecture: Architecture::Independent,
            size: members.len() + 1,
            bases: members,
            seed: None,
            note: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn cascaded(stages: Vec<BasePerm>) -> Result<Self> {
        let spec = Self {
            architecture: Architecture::Cascaded,
            size: 1 << stages.len(),
            bases: stages,
            seed: None,
            note: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn recursive(base: BasePerm, size: usize) -> Result<Self> {
        let spec = Self {
            architecture: Architecture::Recursive,
            size,
            bases: vec![base],
            seed: None,
            note: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidEnsemble("ensemble is empty".into()));
        }
        let lens: HashSet<usize> = self.bases.iter().map(|b| b.perm.len()).collect();
        if lens.len() > 1 {
            return Err(Error::InvalidEnsemble(
                "base permutations differ in length".into(),
            ));
        }
        for b in &self.bases {
            if let Some(t) = &b.transform {
                if t.permutation()? != b.perm {
                    return Err(Error::InvalidEnsemble(
                        "stored table disagrees with its transform".into(),
                    ));
                }
            }
        }
        match self.architecture {
            Architecture::Independent if self.bases.len() + 1 != self.size => {
                Err(Error::InvalidEnsemble(format!(
                    "independent ensemble of size {} needs {} non-identity members, got {}",
                    self.size,
                    self.size - 1,
                    self.bases.len()
                )))
            }
            Architecture::Cascaded if 1usize << self.bases.len() != self.size => {
                Err(Error::InvalidEnsemble(format!(
                    "cascaded ensemble of size {} needs log2(M) stages, got {}",
                    self.size,
                    self.bases.len()
                )))
            }
            Architecture::Recursive => {
                if self.size == 1 && self.bases.is_empty() {
                    return Ok(());
                }
                let [base] = self.bases.as_slice() else {
                    return Err(Error::InvalidEnsemble(
                        "recursive ensemble needs exactly one base".into(),
                    ));
                };
                let order = base.perm.order();
                if self.size as u64 > order {
                    return Err(Error::InvalidEnsemble(format!(
                        "recursive ensemble size {} exceeds the base order {order}",
                        self.size
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Materializes the `size` member permutations in enumeration order.
    pub fn members(&self, len: usize) -> Result<Vec<Permutation>> {
        self.validate()?;
        if let Some(b) = self.bases.first() {
            if b.perm.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    found: b.perm.len(),
                });
            }
        }
        let id = Permutation::identity(len);
        let members = match self.architecture {
            Architecture::Independent => std::iter::once(id)
                .chain(self.bases.iter().map(|b| b.perm.clone()))
                .collect(),
            Architecture::Cascaded => {
                // Stage i is switched in by bit i of j; the vector passes stage
                // 0 first, so pi_j = b_{m-1}^{j_{m-1}} ∘ ... ∘ b_0^{j_0}.
                let mut out = vec![id];
                for stage in &self.bases {
                    let next: Vec<Permutation> = out
                        .iter()
                        .map(|p| stage.perm.compose(p))
                        .collect::<Result<_>>()?;
                    out.extend(next);
                }
                out
            }
            Architecture::Recursive => {
                let mut out = vec![id];
                if let Some(base) = self.bases.first() {
                    for j in 1..self.size {
                        let next = base.perm.compose(&out[j - 1])?;
                        out.push(next);
                    }
                }
                out
            }
        };
        Ok(members)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: EnsembleFile = toml::from_str(&text)?;
        file.build()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, toml::to_string(&self.to_file())?)?;
        Ok(())
    }

    pub fn to_file(&self) -> EnsembleFile {
        EnsembleFile {
            architecture: self.architecture,
            size: self.size,
            seed: self.seed,
            note: self.note.clone(),
            bases: self
                .bases
                .iter()
                .map(|b| match &b.transform {
                    Some(t) => BaseEntry {
                        blocks: Some(t.blocks.iter().map(|m| m.row_bits().to_vec()).collect()),
                        table: None,
                    },
                    None => BaseEntry {
                        blocks: None,
                        table: Some(b.perm.table().to_vec()),
                    },
                })
                .collect(),
        }
    }
}

/// On-disk ensemble. Each base is either a list of BDL blocks (row bitsets,
/// bit `j` = column `j`) or an explicit permutation table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub architecture: Architecture,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default)]
    pub bases: Vec<BaseEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<u32>>,
}

impl EnsembleFile {
    pub fn build(&self) -> Result<EnsembleSpec> {
        let bases = self
            .bases
            .iter()
            .map(|e| match (&e.blocks, &e.table) {
                (Some(blocks), None) => {
                    let blocks = blocks
                        .iter()
                        .map(|rows| BitMatrix::from_row_bits(rows.len(), rows))
                        .collect::<Result<Vec<_>>>()?;
                    BasePerm::from_transform(BdlTransform { blocks })
                }
                (None, Some(table)) => {
                    Ok(BasePerm::from_perm(Permutation::from_table(table.clone())?))
                }
                _ => Err(Error::InvalidEnsemble(
                    "each base needs exactly one of `blocks` and `table`".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = EnsembleSpec {
            architecture: self.architecture,
            size: self.size,
            bases,
            seed: self.seed,
            note: self.note.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Random ensemble for `code` with `size` distinct members.
pub fn sample_ensemble<R: Rng + ?Sized>(
    code: &CodeSpec,
    architecture: Architecture,
    size: usize,
    policy: SamplingPolicy,
    rng: &mut R,
) -> Result<EnsembleSpec> {
    if size == 0 {
        return Err(Error::InvalidEnsemble(
            "ensemble size must be at least 1".into(),
        ));
    }
    let profile = code.block_profile();
    let len = code.len();
    match architecture {
        Architecture::Independent => {
            let mut taken = HashSet::from([Permutation::identity(len)]);
            let mut members = Vec::with_capacity(size - 1);
            for _ in 1..size {
                let (t, p) = fresh_bdl(profile, policy, &taken, rng)?;
                taken.insert(p.clone());
                members.push(BasePerm {
                    transform: Some(t),
                    perm: p,
                });
            }
            EnsembleSpec::independent(members)
        }
        Architecture::Cascaded => {
            if !size.is_power_of_two() {
                return Err(Error::InvalidEnsemble(format!(
                    "cascaded ensemble size {size} is not a power of two"
                )));
            }
            let stages = size.trailing_zeros() as usize;
            let mut members = vec![Permutation::identity(len)];
            let mut bases = Vec::with_capacity(stages);
            'stage: for _ in 0..stages {
                for _ in 0..1000 {
                    let (t, p) = fresh_bdl(profile, policy, &HashSet::new(), rng)?;
                    let extended: Vec<Permutation> = members
                        .iter()
                        .map(|m| p.compose(m))
                        .collect::<Result<_>>()?;
                    let mut all: HashSet<&Permutation> = members.iter().collect();
                    if extended.iter().all(|e| all.insert(e)) {
                        members.extend(extended);
                        bases.push(BasePerm {
                            transform: Some(t),
                            perm: p,
                        });
                        continue 'stage;
                    }
                }
                return Err(Error::InvalidEnsemble(
                    "could not find a stage without collisions".into(),
                ));
            }
            EnsembleSpec::cascaded(bases)
        }
        Architecture::Recursive => {
            if size == 1 {
                return EnsembleSpec::recursive(
                    BasePerm::from_transform(singer_base::<R>(profile, policy, None)?)?,
                    1,
                );
            }
            let base = BasePerm::from_transform(singer_base(profile, policy, Some(rng))?)?;
            EnsembleSpec::recursive(base, size)
        }
    }
}

/// Candidate pool for greedy selection: distinct non-absorbed BDL
/// permutations, or distinct Singer-cycle bases for recursive ensembles.
pub fn sample_pool<R: Rng + ?Sized>(
    code: &CodeSpec,
    architecture: Architecture,
    count: usize,
    policy: SamplingPolicy,
    rng: &mut R,
) -> Result<Vec<BasePerm>> {
    let profile = code.block_profile();
    let mut taken = HashSet::from([Permutation::identity(code.len())]);
    let mut pool = Vec::with_capacity(count);
    while pool.len() < count {
        let base = match architecture {
            Architecture::Recursive => {
                let mut found = None;
                for _ in 0..10_000 {
                    let b =
                        BasePerm::from_transform(singer_base(profile, policy, Some(&mut *rng))?)?;
                    if !taken.contains(&b.perm) {
                        found = Some(b);
                        break;
                    }
                }
                found.ok_or_else(|| {
                    Error::InvalidEnsemble(format!("only {} distinct bases exist", pool.len()))
                })?
            }
            _ => {
                let (t, p) = fresh_bdl(profile, policy, &taken, rng)?;
                BasePerm {
                    transform: Some(t),
                    perm: p,
                }
            }
        };
        taken.insert(base.perm.clone());
        pool.push(base);
    }
    Ok(pool)
}

/// Checks that `perm` maps `trials` random codewords to codewords.
pub fn preserves_code<R: Rng + ?Sized>(
    code: &CodeSpec,
    perm: &Permutation,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    for _ in 0..trials {
        let m: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
        let c = code.encode(&m)?;
        if !code.is_codeword(&perm.apply(&c))? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn a0() -> BitMatrix {
        BitMatrix::from_rows(&[[1, 1], [0, 1]]).unwrap()
    }

    fn swap() -> BitMatrix {
        BitMatrix::from_rows(&[[0, 1], [1, 0]]).unwrap()
    }

    const DIAG_A0_SWAP: [u32; 16] = [0, 1, 3, 2, 8, 9, 11, 10, 4, 5, 7, 6, 12, 13, 15, 14];
    const DIAG_I_SWAP: [u32; 16] = [0, 1, 2, 3, 8, 9, 10, 11, 4, 5, 6, 7, 12, 13, 14, 15];

    #[test]
    fn affine_examples() {
        let id = AffineMap::linear(BitMatrix::identity(4).unwrap()).unwrap();
        assert!(id.permutation(4).unwrap().is_identity());

        let a = BitMatrix::block_diag(&[a0(), swap()]).unwrap();
        let p = AffineMap::linear(a).unwrap().permutation(4).unwrap();
        assert_eq!(p.table(), &DIAG_A0_SWAP);

        let a = BitMatrix::block_diag(&[BitMatrix::identity(2).unwrap(), swap()]).unwrap();
        let p = AffineMap::linear(a).unwrap().permutation(4).unwrap();
        assert_eq!(p.table(), &DIAG_I_SWAP);

        // the two block permutations on their own
        let p0 = build_bdl_perm(&[a0()], &[2]).unwrap();
        assert_eq!(p0.table(), &[0, 1, 3, 2]);
        let p1 = build_bdl_perm(&[swap()], &[2]).unwrap();
        assert_eq!(p1.table(), &[0, 2, 1, 3]);
    }

    #[test]
    fn singular_affine_is_rejected() {
        let s = BitMatrix::from_rows(&[[1, 1], [1, 1]]).unwrap();
        assert!(matches!(
            AffineMap::linear(s).unwrap().permutation(2),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn composition_matches_matrix_square() {
        let a = BitMatrix::block_diag(&[a0(), swap()]).unwrap();
        let p = AffineMap::linear(a.clone())
            .unwrap()
            .permutation(4)
            .unwrap();
        let sq = AffineMap::linear(a.mul(&a).unwrap())
            .unwrap()
            .permutation(4)
            .unwrap();
        assert_eq!(p.compose(&p).unwrap(), sq);
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        assert_eq!(p.compose(&Permutation::identity(16)).unwrap(), p);
        assert!(p.compose(&Permutation::identity(8)).is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(Permutation::identity(8).order(), 1);
        assert_eq!(
            Permutation::from_table(DIAG_I_SWAP.to_vec())
                .unwrap()
                .order(),
            2
        );
        let blocks = vec![singer_matrix(3).unwrap(), singer_matrix(7).unwrap()];
        let p = build_bdl_perm(&blocks, &[3, 7]).unwrap();
        assert_eq!(p.order(), 889);
        // iterated composition agrees
        assert!(p.pow(889).is_identity());
        assert!(!p.pow(127).is_identity());
        assert!(!p.pow(7).is_identity());
    }

    #[test]
    fn bdl_examples() {
        let id = build_bdl_perm(
            &[
                BitMatrix::identity(3).unwrap(),
                BitMatrix::identity(7).unwrap(),
            ],
            &[3, 7],
        )
        .unwrap();
        assert!(id.is_identity());
        assert_eq!(
            build_bdl_perm(&[a0(), swap()], &[2, 2]).unwrap().table(),
            &DIAG_A0_SWAP
        );
        assert_eq!(
            build_bdl_perm(&[BitMatrix::identity(2).unwrap(), swap()], &[2, 2])
                .unwrap()
                .table(),
            &DIAG_I_SWAP
        );
        assert!(matches!(
            build_bdl_perm(&[a0()], &[3]),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn blockwise_examples() {
        let id = Permutation::identity(4);
        assert!(blockwise_expand(&id, 4).unwrap().is_identity());
        let sigma = Permutation::from_table(vec![0, 2, 1, 3]).unwrap();
        assert_eq!(blockwise_expand(&sigma, 4).unwrap().table(), &DIAG_I_SWAP);
        assert_eq!(blockwise_expand(&sigma, 1).unwrap(), sigma);
        assert!(blockwise_expand(&sigma, 3).is_err());
        let back = blockwise_pattern(&Permutation::from_table(DIAG_I_SWAP.to_vec()).unwrap(), 4);
        assert_eq!(back.unwrap(), sigma);
        assert!(
            blockwise_pattern(&Permutation::from_table(DIAG_A0_SWAP.to_vec()).unwrap(), 4).is_err()
        );
    }

    #[test]
    fn absorption_predicate() {
        let id = AffineMap::linear(BitMatrix::identity(4).unwrap()).unwrap();
        assert!(id.is_absorbed());
        let ex1 = AffineMap::linear(BitMatrix::block_diag(&[a0(), swap()]).unwrap()).unwrap();
        assert!(!ex1.is_absorbed());
        let shift = AffineMap {
            matrix: BitMatrix::identity(4).unwrap(),
            offset: BitVector::new(4, 0b1011).unwrap(),
        };
        assert!(shift.is_absorbed());
    }

    #[test]
    fn ensembles_of_size_one_are_identity() {
        let code = crate::polar::puf_code_1024();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for arch in [
            Architecture::Independent,
            Architecture::Cascaded,
            Architecture::Recursive,
        ] {
            let e =
                sample_ensemble(&code, arch, 1, SamplingPolicy::for_code(&code), &mut rng).unwrap();
            let members = e.members(1024).unwrap();
            assert_eq!(members.len(), 1);
            assert!(members[0].is_identity());
        }
    }

    #[test]
    fn cascaded_members_are_distinct() {
        let code = crate::polar::puf_code_1024();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let policy = SamplingPolicy::for_code(&code);
        let e = sample_ensemble(&code, Architecture::Cascaded, 32, policy, &mut rng).unwrap();
        assert_eq!(e.bases.len(), 5);
        let members = e.members(1024).unwrap();
        let distinct: HashSet<_> = members.iter().collect();
        assert_eq!(distinct.len(), 32);
        assert!(members[0].is_identity());
        // member 0b10110 = b4 ∘ b2 ∘ b1
        let b = |i: usize| &e.bases[i].perm;
        let expect = b(4).compose(&b(2).compose(b(1)).unwrap()).unwrap();
        assert_eq!(members[0b10110], expect);
    }

    #[test]
    fn recursive_singer_powers_are_distinct() {
        let code = crate::polar::puf_code_1024();
        let policy = SamplingPolicy::for_code(&code);
        assert!(policy.identity_first_block);
        let base = singer_base::<ChaCha8Rng>(code.block_profile(), policy, None).unwrap();
        assert!(base.blocks[0].is_identity());
        let base = BasePerm::from_transform(base).unwrap();
        assert_eq!(base.perm.order(), 127);
        let e = EnsembleSpec::recursive(base.clone(), 127).unwrap();
        let members = e.members(1024).unwrap();
        let distinct: HashSet<_> = members.iter().collect();
        assert_eq!(distinct.len(), 127);
        assert!(EnsembleSpec::recursive(base, 128).is_err());
    }

    #[test]
    fn ensemble_file_roundtrip() {
        let code = crate::polar::puf_code_1024();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let policy = SamplingPolicy::for_code(&code);
        for arch in [
            Architecture::Independent,
            Architecture::Cascaded,
            Architecture::Recursive,
        ] {
            let mut e = sample_ensemble(&code, arch, 8, policy, &mut rng).unwrap();
            e.seed = Some(4);
            let text = toml::to_string(&e.to_file()).unwrap();
            let back: EnsembleFile = toml::from_str(&text).unwrap();
            assert_eq!(back.build().unwrap(), e);
        }
        let tables = EnsembleSpec::independent(vec![BasePerm::from_perm(
            Permutation::from_table(DIAG_A0_SWAP.to_vec()).unwrap(),
        )])
        .unwrap();
        let text = toml::to_string(&tables.to_file()).unwrap();
        let back: EnsembleFile = toml::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), tables);
    }
}
