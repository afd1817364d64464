//! Dense GF(2) matrices of dimension at most 16.
//!
//! Each row is stored as a `u32` bitset; column `j` of row `i` is bit `j` of
//! `rows[i]`. Vectors over GF(2) are plain integers read LSB-first, which is
//! also how codeword indices are turned into bit vectors.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Low coefficients (`c_0 .. c_{s-1}`) of a primitive polynomial of degree
/// `s`, indexed by `s`. The leading `x^s` term is implicit.
const PRIMITIVE_LOW: [u32; MAX_DIM + 1] = [
    0,
    0b1,                   // x + 1
    0b11,                  // x^2 + x + 1
    0b011,                 // x^3 + x + 1
    0b0011,                // x^4 + x + 1
    0b0_0101,              // x^5 + x^2 + 1
    0b00_0011,             // x^6 + x + 1
    0b000_0011,            // x^7 + x + 1
    0b0001_1101,           // x^8 + x^4 + x^3 + x^2 + 1
    0b0_0001_0001,         // x^9 + x^4 + 1
    0b00_0000_1001,        // x^10 + x^3 + 1
    0b000_0000_0101,       // x^11 + x^2 + 1
    0b0000_0101_0011,      // x^12 + x^6 + x^4 + x + 1
    0b0_0000_0001_1011,    // x^13 + x^4 + x^3 + x + 1
    0b00_0100_0100_0011,   // x^14 + x^10 + x^6 + x + 1
    0b000_0000_0000_0011,  // x^15 + x + 1
    0b0001_0000_0000_1011, // x^16 + x^12 + x^3 + x + 1
];

/// GF(2) vector of length `len` packed LSB-first into an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: u8,
    bits: u32,
}

impl BitVector {
    pub fn new(len: usize, bits: u32) -> Result<Self> {
        if len > MAX_DIM {
            return Err(Error::TooLarge(len));
        }
        let mask = low_mask(len);
        Ok(Self {
            len: len as u8,
            bits: bits & mask,
        })
    }

    pub fn zero(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    /// Binary expansion of a codeword index.
    pub fn from_index(len: usize, index: usize) -> Result<Self> {
        Self::new(len, index as u32)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn get(&self, i: usize) -> u8 {
        ((self.bits >> i) & 1) as u8
    }

    pub fn to_index(&self) -> usize {
        self.bits as usize
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: [u32; MAX_DIM],
}

fn low_mask(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension("matrices must be non-empty".into()));
        }
        if n_rows > MAX_DIM {
            return Err(Error::TooLarge(n_rows));
        }
        if n_cols > MAX_DIM {
            return Err(Error::TooLarge(n_cols));
        }
        Ok(Self {
            n_rows,
            n_cols,
            rows: [0; MAX_DIM],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.rows[i] = 1 << i;
        }
        Ok(m)
    }

    /// Builds a matrix from row bitsets (bit `j` of a row is column `j`).
    pub fn from_row_bits(n_cols: usize, rows: &[u32]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), n_cols)?;
        let mask = low_mask(n_cols);
        for (dst, &src) in m.rows.iter_mut().zip(rows) {
            if src & !mask != 0 {
                return Err(Error::Dimension(format!(
                    "row bitset {src:#b} has bits beyond column {n_cols}"
                )));
            }
            *dst = src;
        }
        Ok(m)
    }

    /// Builds a matrix from nested 0/1 rows, as written by hand.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n_cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), n_cols)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_cols {
                return Err(Error::Dimension("ragged rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.rows[i] |= 1 << j,
                    _ => return Err(Error::Dimension(format!("entry {v} is not binary"))),
                }
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_bits(&self) -> &[u32] {
        &self.rows[..self.n_rows]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        ((self.rows[i] >> j) & 1) as u8
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        if v {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && (0..self.n_rows).all(|i| self.rows[i] == 1 << i)
    }

    /// No non-zero entry above the diagonal.
    pub fn is_lower_triangular(&self) -> bool {
        (0..self.n_rows).all(|i| self.rows[i] >> (i + 1) == 0)
    }

    /// Product over GF(2): entry `(i, j)` is the parity of `a(i, k) b(k, j)`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = BitMatrix::zeros(self.n_rows, other.n_cols)?;
        for i in 0..self.n_rows {
            let mut acc = 0u32;
            let mut r = self.rows[i];
            while r != 0 {
                let k = r.trailing_zeros() as usize;
                acc ^= other.rows[k];
                r &= r - 1;
            }
            out.rows[i] = acc;
        }
        Ok(out)
    }

    /// Matrix-vector product `A x` with `x` packed LSB-first.
    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        let mut out = 0u32;
        for i in 0..self.n_rows {
            out |= ((self.rows[i] & x).count_ones() & 1) << i;
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows;
        let mut rank = 0;
        for col in 0..self.n_cols {
            let bit = 1u32 << col;
            let Some(pivot) = (rank..self.n_rows).find(|&r| rows[r] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            for r in 0..self.n_rows {
                if r != rank && rows[r] & bit != 0 {
                    rows[r] ^= rows[rank];
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.n_rows
    }

    /// Gauss-Jordan inverse; singular input is reported, never approximated.
    pub fn inverse(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::Dimension(
                "only square matrices have inverses".into(),
            ));
        }
        let n = self.n_rows;
        let mut left = self.rows;
        let mut right = BitMatrix::identity(n)?.rows;
        for col in 0..n {
            let bit = 1u32 << col;
            let pivot = (col..n)
                .find(|&r| left[r] & bit != 0)
                .ok_or(Error::Singular)?;
            left.swap(col, pivot);
            right.swap(col, pivot);
            for r in 0..n {
                if r != col && left[r] & bit != 0 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        Ok(BitMatrix {
            n_rows: n,
            n_cols: n,
            rows: right,
        })
    }

    pub fn pow(&self, mut e: u64) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::Dimension("only square matrices have powers".into()));
        }
        let mut base = self.clone();
        let mut acc = BitMatrix::identity(self.n_rows)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Multiplicative order: the smallest `j >= 1` with `A^j = I`.
    pub fn order(&self) -> Result<u64> {
        if !self.is_invertible() {
            return Err(Error::Singular);
        }
        // No element of GL(s, 2) has order above 2^s - 1.
        let cap = (1u64 << self.n_rows) - 1;
        let mut acc = self.clone();
        for j in 1..=cap {
            if acc.is_identity() {
                return Ok(j);
            }
            acc = acc.mul(self)?;
        }
        unreachable!(
            "order of an invertible {0}x{0} matrix exceeded {cap}",
            self.n_rows
        )
    }

    /// Block-diagonal matrix `diag(blocks[0], blocks[1], ...)`. Block 0 sits in
    /// the upper-left corner, i.e. acts on the least significant index bits.
    pub fn block_diag(blocks: &[BitMatrix]) -> Result<BitMatrix> {
        let n: usize = blocks.iter().map(|b| b.n_rows).sum();
        let mut out = BitMatrix::zeros(n, n)?;
        let mut off = 0;
        for b in blocks {
            if !b.is_square() {
                return Err(Error::Dimension("diagonal blocks must be square".into()));
            }
            for i in 0..b.n_rows {
                out.rows[off + i] = b.rows[i] << off;
            }
            off += b.n_rows;
        }
        Ok(out)
    }

    /// Sub-block of rows/columns `off .. off + size`.
    pub fn diagonal_block(&self, off: usize, size: usize) -> Result<BitMatrix> {
        if off + size > self.n_rows || off + size > self.n_cols {
            return Err(Error::Dimension("block exceeds matrix".into()));
        }
        let mut out = BitMatrix::zeros(size, size)?;
        let mask = low_mask(size);
        for i in 0..size {
            out.rows[i] = (self.rows[off + i] >> off) & mask;
        }
        Ok(out)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n_rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.n_cols {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Companion matrix of the tabulated primitive polynomial of degree `s`;
/// its order is `2^s - 1` (a Singer cycle).
pub fn singer_matrix(s: usize) -> Result<BitMatrix> {
    if s == 0 {
        return Err(Error::Dimension("block size must be positive".into()));
    }
    if s > MAX_DIM {
        return Err(Error::TooLarge(s));
    }
    let low = PRIMITIVE_LOW[s];
    let mut m = BitMatrix::zeros(s, s)?;
    for i in 0..s {
        if i > 0 {
            m.set(i, i - 1, true);
        }
        m.set(i, s - 1, (low >> i) & 1 == 1);
    }
    let order = m.order()?;
    assert_eq!(
        order,
        (1u64 << s) - 1,
        "primitive polynomial table entry for degree {s} is wrong"
    );
    Ok(m)
}

/// Uniformly random invertible `s x s` matrix by rejection sampling.
pub fn random_invertible<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Result<BitMatrix> {
    if s == 0 {
        return Err(Error::Dimension("block size must be positive".into()));
    }
    if s > MAX_DIM {
        return Err(Error::TooLarge(s));
    }
    let mask = low_mask(s);
    loop {
        let mut m = BitMatrix::zeros(s, s)?;
        for r in m.rows.iter_mut().take(s) {
            *r = rng.random::<u32>() & mask;
        }
        if m.rank() == s {
            return Ok(m);
        }
    }
}
