//! Fuzzy-commitment enrollment and activation over a BSC model of SRAM PUF
//! cells, with segmentation and optional von Neumann pair debiasing.

use std::sync::Arc;

use rand::Rng;

use crate::aed::AeDecoder;
use crate::error::{Error, Result};
use crate::polar::CodeSpec;
use crate::sc::bit_to_llr;

/// Cell readout model `x = x* ⊕ e`, `e_i ~ Ber(epsilon)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PufDevice {
    pub golden: Vec<u8>,
    pub epsilon: f64,
    /// Probability of a golden cell being 1, when modelling biased devices.
    pub bias: Option<f64>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "flip probability {epsilon} not in [0, 0.5)"
        )));
    }
    Ok(())
}

impl PufDevice {
    pub fn new(golden: Vec<u8>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            golden,
            epsilon,
            bias: None,
        })
    }

    /// Device with golden cells drawn i.i.d. `Ber(bias)` (0.5 if unbiased).
    pub fn random<R: Rng + ?Sized>(
        cells: usize,
        epsilon: f64,
        bias: Option<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        let p = bias.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bias {p} not in [0, 1]")));
        }
        let golden = (0..cells).map(|_| rng.random_bool(p) as u8).collect();
        Ok(Self {
            golden,
            epsilon,
            bias,
        })
    }

    pub fn cells(&self) -> usize {
        self.golden.len()
    }

    /// Noise vector for one readout.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        sample_noise(self.cells(), self.epsilon, rng)
    }

    /// One noisy readout together with the noise that produced it.
    pub fn read<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<u8>, Vec<u8>) {
        let e = self.sample_noise(rng);
        let x = self.golden.iter().zip(&e).map(|(g, e)| g ^ e).collect();
        (x, e)
    }
}

pub fn sample_noise<R: Rng + ?Sized>(len: usize, epsilon: f64, rng: &mut R) -> Vec<u8> {
    if epsilon == 0.0 {
        return vec![0; len];
    }
    (0..len).map(|_| rng.random_bool(epsilon) as u8).collect()
}

/// `S` segments of the same polar code on disjoint cell ranges.
#[derive(Clone, Debug)]
pub struct SegmentedScheme {
    pub code: Arc<CodeSpec>,
    pub segments: usize,
}

impl SegmentedScheme {
    pub fn new(code: Arc<CodeSpec>, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidParameter(
                "at least one segment is required".into(),
            ));
        }
        Ok(Self { code, segments })
    }

    pub fn payload_bits(&self) -> usize {
        self.segments * self.code.k()
    }

    pub fn cells(&self) -> usize {
        self.segments * self.code.len()
    }
}

/// Data stored in fuses at enrollment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HelperData {
    /// `w = c ⊕ x*`, segments concatenated.
    pub offset: Vec<u8>,
    pub segment_len: usize,
    /// Kept pair flags from debiasing, one per raw cell pair.
    pub debias_mask: Option<Vec<bool>>,
}

fn pack_hex(bits: &[u8]) -> String {
    let bytes: Vec<u8> = bits
        .chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b & 1) << i)
        })
        .collect();
    hex::encode(bytes)
}

fn unpack_hex(s: &str, len: usize) -> Result<Vec<u8>> {
    let bytes = hex::decode(s.trim()).map_err(|e| Error::Parse(e.to_string()))?;
    if bytes.len() != len.div_ceil(8) {
        return Err(Error::LengthMismatch {
            expected: len.div_ceil(8),
            found: bytes.len(),
        });
    }
    Ok((0..len).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

impl HelperData {
    /// Offset bits as hex, eight bits per byte, least significant bit first.
    pub fn offset_hex(&self) -> String {
        pack_hex(&self.offset)
    }

    pub fn mask_hex(&self) -> Option<String> {
        self.debias_mask
            .as_ref()
            .map(|m| pack_hex(&m.iter().map(|&k| k as u8).collect::<Vec<_>>()))
    }

    pub fn from_hex(
        offset: &str,
        bits: usize,
        segment_len: usize,
        mask: Option<(&str, usize)>,
    ) -> Result<Self> {
        let debias_mask = mask
            .map(|(m, pairs)| unpack_hex(m, pairs).map(|v| v.into_iter().map(|b| b == 1).collect()))
            .transpose()?;
        Ok(Self {
            offset: unpack_hex(offset, bits)?,
            segment_len,
            debias_mask,
        })
    }

    pub fn segments(&self) -> impl Iterator<Item = &[u8]> {
        self.offset.chunks(self.segment_len)
    }
}

/// Encodes each segment's share of `message` and offsets it by the golden
/// response.
pub fn enroll(device: &PufDevice, message: &[u8], scheme: &SegmentedScheme) -> Result<HelperData> {
    if message.len() != scheme.payload_bits() {
        return Err(Error::LengthMismatch {
            expected: scheme.payload_bits(),
            found: message.len(),
        });
    }
    if device.cells() != scheme.cells() {
        return Err(Error::LengthMismatch {
            expected: scheme.cells(),
            found: device.cells(),
        });
    }
    let (k, n) = (scheme.code.k(), scheme.code.len());
    let mut offset = Vec::with_capacity(scheme.cells());
    for (s, m) in message.chunks(k).enumerate() {
        let c = scheme.code.encode(m)?;
        offset.extend(
            c.iter()
                .zip(&device.golden[s * n..(s + 1) * n])
                .map(|(c, x)| c ^ x),
        );
    }
    Ok(HelperData {
        offset,
        segment_len: n,
        debias_mask: None,
    })
}

/// Result of one activation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Activation {
    pub message: Vec<u8>,
    pub codewords: Vec<Vec<u8>>,
    /// Noisy word `y = x ⊕ w` seen by the decoder.
    pub received: Vec<u8>,
    pub noise: Vec<u8>,
}

impl Activation {
    /// Per-segment comparison against the enrolled message.
    pub fn segment_ok(&self, message: &[u8]) -> Vec<bool> {
        let k = message.len() / self.codewords.len().max(1);
        self.message
            .chunks(k)
            .zip(message.chunks(k))
            .map(|(a, b)| a == b)
            .collect()
    }

    /// All segments must be recovered.
    pub fn success(&self, message: &[u8]) -> bool {
        self.segment_ok(message).iter().all(|&ok| ok)
    }
}

/// Decodes every segment of `y` and concatenates the recovered messages.
pub fn decode_segments(
    received: &[u8],
    scheme: &SegmentedScheme,
    decoder: &mut AeDecoder,
) -> Result<(Vec<u8>, Vec<Vec<u8>>)> {
    let n = scheme.code.len();
    if received.len() != scheme.cells() {
        return Err(Error::LengthMismatch {
            expected: scheme.cells(),
            found: received.len(),
        });
    }
    let mut message = Vec::with_capacity(scheme.payload_bits());
    let mut codewords = Vec::with_capacity(scheme.segments);
    let mut llr = vec![0i32; n];
    let mut estimate = vec![0u8; n];
    for y in received.chunks(n) {
        for (l, &b) in llr.iter_mut().zip(y) {
            *l = bit_to_llr(b);
        }
        decoder.decode_into(&llr, &mut estimate, None)?;
        message.extend(scheme.code.extract_message(&estimate)?);
        codewords.push(estimate.clone());
    }
    Ok((message, codewords))
}

/// Reads the device once, removes the offset and decodes each segment.
pub fn activate<R: Rng + ?Sized>(
    device: &PufDevice,
    helper: &HelperData,
    scheme: &SegmentedScheme,
    decoder: &mut AeDecoder,
    rng: &mut R,
) -> Result<Activation> {
    if helper.offset.len() != device.cells() {
        return Err(Error::LengthMismatch {
            expected: device.cells(),
            found: helper.offset.len(),
        });
    }
    let (x, noise) = device.read(rng);
    let received: Vec<u8> = x.iter().zip(&helper.offset).map(|(x, w)| x ^ w).collect();
    let (message, codewords) = decode_segments(&received, scheme, decoder)?;
    Ok(Activation {
        message,
        codewords,
        received,
        noise,
    })
}

/// Von Neumann pair debiasing at enrollment: pairs with equal values are
/// dropped, each kept pair contributes its first cell as one logical bit.
pub fn vnpo_enroll(raw: &[u8], needed: usize) -> Result<(Vec<bool>, Vec<u8>)> {
    if !raw.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "debiasing needs an even number of cells".into(),
        ));
    }
    let mask: Vec<bool> = raw.chunks_exact(2).map(|p| p[0] != p[1]).collect();
    let golden: Vec<u8> = raw
        .chunks_exact(2)
        .zip(&mask)
        .filter(|(_, &k)| k)
        .map(|(p, _)| p[0])
        .collect();
    if golden.len() < needed {
        return Err(Error::TooFewPairs {
            kept: golden.len(),
            needed,
        });
    }
    Ok((mask, golden))
}

/// Combined LLR of the logical bit stored in a kept pair: the pair is an
/// implicit two-fold repetition of the first cell (second cell inverted).
pub fn vnpo_activate_llr(first: u8, second: u8) -> i32 {
    bit_to_llr(first) - bit_to_llr(second)
}

/// Logical-bit LLRs for all kept pairs of a raw readout.
pub fn vnpo_llrs(raw: &[u8], mask: &[bool]) -> Result<Vec<i32>> {
    if raw.len() != 2 * mask.len() {
        return Err(Error::LengthMismatch {
            expected: 2 * mask.len(),
            found: raw.len(),
        });
    }
    Ok(raw
        .chunks_exact(2)
        .zip(mask)
        .filter(|(_, &k)| k)
        .map(|(p, _)| vnpo_activate_llr(p[0], p[1]))
        .collect())
}
