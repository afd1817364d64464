//! Serial automorphism ensemble decoding: one SC decoder, `M` permuted
//! attempts, maximum-likelihood-in-list selection.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::perm::{Architecture, BasePerm, EnsembleSpec, Permutation};
use crate::polar::CodeSpec;
use crate::sc::{bit_to_llr, PlanOptions, ScDecoder};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AedResult {
    pub codeword: Vec<u8>,
    /// Index of the winning permutation (smallest among equal metrics).
    pub winner: usize,
    /// Correlation metric of every executed attempt.
    pub metrics: Vec<i64>,
    pub attempts: usize,
}

/// Correlation `sum_i (1 - 2 c_i) l_i`; larger means more likely on any
/// memoryless symmetric channel.
pub fn correlation(codeword: &[u8], llr: &[i32]) -> i64 {
    codeword
        .iter()
        .zip(llr)
        .map(|(&c, &l)| if c == 0 { l as i64 } else { -(l as i64) })
        .sum()
}

/// A single SC decoder reused across the ensemble's permutations.
#[derive(Clone, Debug)]
pub struct AeDecoder {
    decoder: ScDecoder<i32>,
    members: Vec<Permutation>,
    /// `inverse[j][k]` is the channel position feeding decoder input `k`.
    inverse: Vec<Vec<u32>>,
    permuted_estimate: Vec<u8>,
    early_exit: bool,
}

impl AeDecoder {
    pub fn new(code: &CodeSpec, ensemble: &EnsembleSpec, plan: PlanOptions) -> Result<Self> {
        let decoder = ScDecoder::for_code(code, plan)?;
        let members = ensemble.members(code.len())?;
        Self::from_parts(decoder, members)
    }

    pub fn from_parts(decoder: ScDecoder<i32>, members: Vec<Permutation>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidEnsemble("ensemble is empty".into()));
        }
        if let Some(p) = members.iter().find(|p| p.len() != decoder.len()) {
            return Err(Error::LengthMismatch {
                expected: decoder.len(),
                found: p.len(),
            });
        }
        let inverse = members
            .iter()
            .map(|p| p.inverse().table().to_vec())
            .collect();
        let len = decoder.len();
        Ok(Self {
            decoder,
            members,
            inverse,
            permuted_estimate: vec![0; len],
            early_exit: false,
        })
    }

    /// Stop as soon as a candidate reproduces the hard decisions; off by
    /// default.
    pub fn with_early_exit(mut self, on: bool) -> Self {
        self.early_exit = on;
        self
    }

    pub fn len(&self) -> usize {
        self.decoder.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Permutation] {
        &self.members
    }

    pub fn take_saturations(&mut self) -> u64 {
        self.decoder.take_saturations()
    }

    pub fn decode(&mut self, llr: &[i32]) -> Result<AedResult> {
        let mut out = vec![0u8; self.len()];
        let mut metrics = Vec::with_capacity(self.members.len());
        let winner = self.decode_into(llr, &mut out, Some(&mut metrics))?;
        Ok(AedResult {
            codeword: out,
            winner,
            attempts: metrics.len(),
            metrics,
        })
    }

    /// Writes the selected codeword into `out` and returns the winning index.
    pub fn decode_into(
        &mut self,
        llr: &[i32],
        out: &mut [u8],
        mut metrics: Option<&mut Vec<i64>>,
    ) -> Result<usize> {
        let len = self.len();
        if llr.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: llr.len(),
            });
        }
        if out.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                found: out.len(),
            });
        }
        let perfect: i64 = llr.iter().map(|&l| (l as i64).abs()).sum();
        let mut best = i64::MIN;
        let mut winner = 0;
        for j in 0..self.members.len() {
            let gather = &self.inverse[j];
            self.decoder
                .decode_gather(llr, gather, &mut self.permuted_estimate);
            let metric: i64 = self
                .permuted_estimate
                .iter()
                .zip(gather)
                .map(|(&c, &src)| {
                    let l = llr[src as usize] as i64;
                    if c == 0 {
                        l
                    } else {
                        -l
                    }
                })
                .sum();
            if let Some(m) = metrics.as_deref_mut() {
                m.push(metric);
            }
            if metric > best {
                best = metric;
                winner = j;
                // c_j[i] = c'_j[pi_j(i)]
                for (o, &t) in out.iter_mut().zip(self.members[j].table()) {
                    *o = self.permuted_estimate[t as usize];
                }
                if self.early_exit && metric == perfect {
                    break;
                }
            }
        }
        Ok(winner)
    }

    /// Every candidate `pi_j^-1(SC(pi_j(y)))`, in ensemble order.
    pub fn candidates(&mut self, llr: &[i32]) -> Result<Vec<Vec<u8>>> {
        if llr.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: llr.len(),
            });
        }
        let mut out = Vec::with_capacity(self.members.len());
        for j in 0..self.members.len() {
            self.decoder
                .decode_gather(llr, &self.inverse[j], &mut self.permuted_estimate);
            out.push(self.members[j].apply_inverse(&self.permuted_estimate));
        }
        Ok(out)
    }
}

/// One-shot convenience wrapper around [`AeDecoder`].
pub fn ae_decode(
    llr: &[i32],
    ensemble: &EnsembleSpec,
    plan: PlanOptions,
    code: &CodeSpec,
) -> Result<AedResult> {
    AeDecoder::new(code, ensemble, plan)?.decode(llr)
}

/// A noisy frame with its transmitted codeword.
#[derive(Clone, Debug)]
pub struct TrainingFrame {
    pub llr: Vec<i32>,
    pub codeword: Vec<u8>,
}

/// Random codewords sent over BSC(`epsilon`).
pub fn training_frames<R: Rng + ?Sized>(
    code: &CodeSpec,
    epsilon: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<TrainingFrame>> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} not in [0, 0.5]"
        )));
    }
    (0..count)
        .map(|_| {
            let m: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
            let codeword = code.encode(&m)?;
            let llr = codeword
                .iter()
                .map(|&c| bit_to_llr(c ^ rng.random_bool(epsilon) as u8))
                .collect();
            Ok(TrainingFrame { llr, codeword })
        })
        .collect()
}

/// Dense bitset over training frames.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Coverage(Vec<u64>);

impl Coverage {
    fn new(len: usize) -> Self {
        Self(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &Coverage) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn gain_over(&self, covered: &Coverage) -> u32 {
        self.0
            .iter()
            .zip(&covered.0)
            .map(|(a, c)| (a & !c).count_ones())
            .sum()
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
}

/// Frames where the single attempt with `perm` returns the transmitted
/// codeword.
fn coverage_of(
    decoder: &mut ScDecoder<i32>,
    perm: &Permutation,
    frames: &[TrainingFrame],
    scratch: &mut Vec<u8>,
) -> Coverage {
    let inverse = perm.inverse();
    let gather = inverse.table();
    let mut cov = Coverage::new(frames.len());
    scratch.resize(perm.len(), 0);
    for (f, frame) in frames.iter().enumerate() {
        decoder.decode_gather(&frame.llr, gather, scratch);
        // c_j[i] = c'[pi(i)] must equal the codeword everywhere
        if perm
            .table()
            .iter()
            .zip(&frame.codeword)
            .all(|(&t, &c)| scratch[t as usize] == c)
        {
            cov.set(f);
        }
    }
    let _ = decoder.take_saturations();
    cov
}

fn coverages(
    template: &ScDecoder<i32>,
    perms: &[Permutation],
    frames: &[TrainingFrame],
) -> Vec<Coverage> {
    perms
        .par_iter()
        .map_init(
            || (template.clone(), Vec::new()),
            |(dec, scratch), p| coverage_of(dec, p, frames, scratch),
        )
        .collect()
}

/// Outcome of greedy selection, with the covered-frame count after each step.
#[derive(Clone, Debug)]
pub struct Selection {
    pub ensemble: EnsembleSpec,
    pub covered: Vec<u32>,
    pub frames: usize,
}

/// Greedy data-driven selection. Starting from the identity, repeatedly add
/// the candidate that corrects the most training frames not corrected yet
/// (ties go to the smallest pool index).
///
/// * `Independent`: candidates are pool permutations; `size - 1` are chosen.
/// * `Cascaded`: candidates are stage permutations; adding stage `b` adds
///   `b ∘ p` for every current member `p`.
/// * `Recursive`: each candidate base contributes its first `size` powers;
///   the single best base is kept.
pub fn greedy_select(
    code: &CodeSpec,
    architecture: Architecture,
    pool: &[BasePerm],
    frames: &[TrainingFrame],
    size: usize,
    plan: PlanOptions,
) -> Result<Selection> {
    if size == 0 {
        return Err(Error::InvalidEnsemble(
            "ensemble size must be at least 1".into(),
        ));
    }
    let template = ScDecoder::for_code(code, plan)?;
    let len = code.len();
    let identity = Permutation::identity(len);
    let base_cov = coverages(&template, std::slice::from_ref(&identity), frames).remove(0);
    let mut covered = base_cov;
    let mut history = vec![covered.count()];

    let ensemble = match architecture {
        Architecture::Independent => {
            if pool.len() + 1 < size {
                return Err(Error::InsufficientPool {
                    pool: pool.len(),
                    needed: size - 1,
                });
            }
            let perms: Vec<Permutation> = pool.iter().map(|b| b.perm.clone()).collect();
            let covs = coverages(&template, &perms, frames);
            let mut chosen: Vec<usize> = Vec::new();
            let mut members = vec![identity.clone()];
            for _ in 1..size {
                let pick = (0..pool.len())
                    .filter(|&i| !members.contains(&perms[i]))
                    .max_by_key(|&i| (covs[i].gain_over(&covered), std::cmp::Reverse(i)))
                    .ok_or(Error::InsufficientPool {
                        pool: pool.len(),
                        needed: size - 1,
                    })?;
                covered.union_with(&covs[pick]);
                history.push(covered.count());
                members.push(perms[pick].clone());
                chosen.push(pick);
            }
            EnsembleSpec::independent(chosen.into_iter().map(|i| pool[i].clone()).collect())?
        }
        Architecture::Cascaded => {
            if !size.is_power_of_two() {
                return Err(Error::InvalidEnsemble(format!(
                    "cascaded ensemble size {size} is not a power of two"
                )));
            }
            let stages = size.trailing_zeros() as usize;
            if pool.len() < stages {
                return Err(Error::InsufficientPool {
                    pool: pool.len(),
                    needed: stages,
                });
            }
            let mut members = vec![identity.clone()];
            let mut chosen: Vec<usize> = Vec::new();
            for _ in 0..stages {
                let mut best: Option<(u32, usize, Coverage, Vec<Permutation>)> = None;
                for (i, cand) in pool.iter().enumerate() {
                    if chosen.contains(&i) {
                        continue;
                    }
                    let extended: Vec<Permutation> = members
                        .iter()
                        .map(|m| cand.perm.compose(m))
                        .collect::<Result<_>>()?;
                    if extended.iter().any(|e| members.contains(e)) {
                        continue;
                    }
                    let mut cov = covered.clone();
                    for c in coverages(&template, &extended, frames) {
                        cov.union_with(&c);
                    }
                    let gain = cov.count();
                    if best.as_ref().is_none_or(|(g, ..)| gain > *g) {
                        best = Some((gain, i, cov, extended));
                    }
                }
                let (_, pick, cov, extended) = best.ok_or(Error::InsufficientPool {
                    pool: pool.len(),
                    needed: stages,
                })?;
                covered = cov;
                history.push(covered.count());
                members.extend(extended);
                chosen.push(pick);
            }
            EnsembleSpec::cascaded(chosen.into_iter().map(|i| pool[i].clone()).collect())?
        }
        Architecture::Recursive => {
            let mut best: Option<(u32, usize)> = None;
            for (i, cand) in pool.iter().enumerate() {
                if (size as u64) > cand.perm.order() {
                    continue;
                }
                let spec = EnsembleSpec::recursive(cand.clone(), size)?;
                let members = spec.members(len)?;
                let mut cov = covered.clone();
                for c in coverages(&template, &members[1..], frames) {
                    cov.union_with(&c);
                }
                if best.is_none_or(|(g, _)| cov.count() > g) {
                    best = Some((cov.count(), i));
                }
            }
            let (count, pick) = best.ok_or(Error::InsufficientPool {
                pool: pool.len(),
                needed: 1,
            })?;
            history.push(count);
            EnsembleSpec::recursive(pool[pick].clone(), size)?
        }
    };
    Ok(Selection {
        ensemble,
        covered: history,
        frames: frames.len(),
    })
}
