//! Closed-form block error rate of an outer BCH code with bounded-distance
//! decoding behind an inner repetition code with majority decoding.

use crate::error::{Error, Result};

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `P[X > t]` for `X ~ Binomial(n, p)`, evaluated term by term in the log
/// domain.
pub fn binomial_upper_tail(n: usize, t: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} not in [0, 1]"
        )));
    }
    if t >= n || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let lf = ln_factorials(n);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let log_terms: Vec<f64> = (t + 1..=n)
        .map(|k| lf[n] - lf[k] - lf[n - k] + k as f64 * lp + (n - k) as f64 * lq)
        .collect();
    let peak = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled = compensated_sum(log_terms.iter().map(|&l| (l - peak).exp()));
    Ok((peak + scaled.ln()).exp().min(1.0))
}

/// Residual bit error rate after majority decoding of an `r`-fold
/// repetition code over BSC(`epsilon`).
pub fn rep_majority_flip(epsilon: f64, r: usize) -> Result<f64> {
    if r.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "repetition factor {r} must be odd"
        )));
    }
    binomial_upper_tail(r, (r - 1) / 2, epsilon)
}

/// Probability that more than `t` of `n` bits are in error.
pub fn bdd_bler(n: usize, t: usize, p: f64) -> Result<f64> {
    binomial_upper_tail(n, t, p)
}

/// BCH outer code with inner repetition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConcatSpec {
    pub n_bch: usize,
    pub k_bch: usize,
    pub t: usize,
    pub repetition: usize,
}

impl ConcatSpec {
    /// The 91-error-correcting BCH(1023, 318) with `repetition`-fold inner code.
    pub fn bch_1023_318(repetition: usize) -> Result<Self> {
        let spec = Self {
            n_bch: 1023,
            k_bch: 318,
            t: 91,
            repetition,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetition.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "repetition factor {} must be odd",
                self.repetition
            )));
        }
        if 2 * self.t >= self.n_bch || self.k_bch > self.n_bch {
            return Err(Error::InvalidParameter(
                "inconsistent BCH parameters".into(),
            ));
        }
        Ok(())
    }

    /// PUF cells (and helper-data bits) consumed per codeword.
    pub fn cells(&self) -> usize {
        self.n_bch * self.repetition
    }
}

pub fn concat_bler(epsilon: f64, spec: &ConcatSpec) -> Result<f64> {
    spec.validate()?;
    bdd_bler(
        spec.n_bch,
        spec.t,
        rep_majority_flip(epsilon, spec.repetition)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rep_examples() {
        for r in [1, 3, 5, 7, 9] {
            assert!((rep_majority_flip(0.5, r).unwrap() - 0.5).abs() < 1e-12);
        }
        assert!((rep_majority_flip(0.13, 1).unwrap() - 0.13).abs() < 1e-15);
        // 3 * 0.01 * 0.9 + 0.001
        assert!((rep_majority_flip(0.1, 3).unwrap() - 0.028).abs() < 1e-14);
        assert!(rep_majority_flip(0.1, 4).is_err());
    }

    #[test]
    fn bdd_edges() {
        assert_eq!(bdd_bler(10, 10, 0.3).unwrap(), 0.0);
        assert_eq!(bdd_bler(10, 2, 0.0).unwrap(), 0.0);
        assert_eq!(bdd_bler(10, 2, 1.0).unwrap(), 1.0);
        assert!(bdd_bler(10, 2, 1.5).is_err());
    }

    #[test]
    fn tabulated_baseline_points() {
        let r7 = ConcatSpec::bch_1023_318(7).unwrap();
        let r5 = ConcatSpec::bch_1023_318(5).unwrap();
        let close = |got: f64, want: f64| (got / want - 1.0).abs() < 1e-3;
        let p = rep_majority_flip(0.23, 7).unwrap();
        assert!(close(bdd_bler(1023, 91, p).unwrap(), 1.357e-6));
        assert!(close(concat_bler(0.22, &r5).unwrap(), 3.648e-2));
        assert!(close(concat_bler(0.21, &r7).unwrap(), 5.552e-13));
        assert!(close(concat_bler(0.26, &r7).unwrap(), 1.376e-1));
        assert_eq!(r7.cells(), 7161);
        assert_eq!(r5.cells(), 5115);
    }

    #[test]
    fn monotone_in_epsilon() {
        let r7 = ConcatSpec::bch_1023_318(7).unwrap();
        let mut prev = 0.0;
        for i in 1..50 {
            let b = concat_bler(i as f64 * 0.01, &r7).unwrap();
            assert!(
                b > prev || (b == prev && (b == 0.0 || b == 1.0)),
                "eps {}",
                i as f64 * 0.01
            );
            prev = b;
        }
    }
}
