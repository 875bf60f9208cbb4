//! Semantic vector quantization codebook.
//!
//! A quantized shape column of `K'` entries in `[-lambda, lambda]` is one
//! of `(2*lambda + 1)^K'` possibilities, so the column maps bijectively to
//! a flat index: shift each entry by `lambda` and read the column as a
//! base-`(2*lambda + 1)` number, lowest frequency bin first (most
//! significant digit). Large codebooks factorize into independent indices
//! over contiguous frequency groups, which keeps the per-group range small
//! enough for a byte-wide stream layout and for external classifiers.

use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CodebookError {
    #[error("code out of range: {value} not in [-{lambda}, {lambda}]")]
    CodeOutOfRange { value: i32, lambda: u32 },
    #[error("index out of codebook")]
    IndexOutOfCodebook,
    #[error("invalid split: {split} does not divide {dims}")]
    InvalidSplit { dims: usize, split: usize },
    #[error("column has {got} entries, expected {expected}")]
    WrongDims { expected: usize, got: usize },
    #[error("lambda must be positive")]
    LambdaZero,
}

/// Codebook parameters: quantization bound, column dimensionality, and the
/// number of factor groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvqParams {
    pub lambda: u32,
    /// Entries per column (K').
    pub dims: usize,
    /// Number of contiguous coordinate groups an index factorizes into.
    pub factor_split: usize,
}

impl Default for SvqParams {
    fn default() -> Self {
        Self {
            lambda: 1,
            dims: 8,
            factor_split: 2,
        }
    }
}

impl SvqParams {
    pub fn new(lambda: u32, dims: usize, factor_split: usize) -> Result<Self, CodebookError> {
        let p = Self {
            lambda,
            dims,
            factor_split,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CodebookError> {
        if self.lambda == 0 {
            return Err(CodebookError::LambdaZero);
        }
        if self.factor_split == 0 || self.dims == 0 || !self.dims.is_multiple_of(self.factor_split)
        {
            return Err(CodebookError::InvalidSplit {
                dims: self.dims,
                split: self.factor_split,
            });
        }
        Ok(())
    }

    /// Number of quantization levels per entry.
    pub fn base(&self) -> u32 {
        2 * self.lambda + 1
    }

    /// Entries per factor group.
    pub fn group_dims(&self) -> usize {
        self.dims / self.factor_split
    }

    /// Size of each factorized classification: `base^(dims / split)`.
    pub fn part_range(&self) -> BigUint {
        BigUint::from(self.base()).pow(self.group_dims() as u32)
    }
}

/// Exact codebook length `(2*lambda + 1)^K'`.
pub fn codebook_size(p: &SvqParams) -> BigUint {
    BigUint::from(p.base()).pow(p.dims as u32)
}

/// Codebook size in bits: `K' * log2(2*lambda + 1)`.
pub fn codebook_bits(p: &SvqParams) -> f64 {
    p.dims as f64 * (p.base() as f64).log2()
}

/// Flat codebook index of a quantized column.
pub fn encode_index(column: &[i32], p: &SvqParams) -> Result<BigUint, CodebookError> {
    p.validate()?;
    if column.len() != p.dims {
        return Err(CodebookError::WrongDims {
            expected: p.dims,
            got: column.len(),
        });
    }
    let base = BigUint::from(p.base());
    let mut acc = BigUint::from(0u32);
    for &value in column {
        if value < -(p.lambda as i32) || value > p.lambda as i32 {
            return Err(CodebookError::CodeOutOfRange {
                value,
                lambda: p.lambda,
            });
        }
        let digit = (value + p.lambda as i32) as u32;
        acc = acc * &base + BigUint::from(digit);
    }
    Ok(acc)
}

/// Inverse of [`encode_index`].
pub fn decode_index(index: &BigUint, p: &SvqParams) -> Result<Vec<i32>, CodebookError> {
    p.validate()?;
    if *index >= codebook_size(p) {
        return Err(CodebookError::IndexOutOfCodebook);
    }
    let base = BigUint::from(p.base());
    let mut rest = index.clone();
    let mut digits = vec![0i32; p.dims];
    for slot in digits.iter_mut().rev() {
        let digit = (&rest % &base)
            .to_u32_digits()
            .first()
            .copied()
            .unwrap_or(0);
        *slot = digit as i32 - p.lambda as i32;
        rest /= &base;
    }
    Ok(digits)
}

/// A flat index split into per-group indices, low-frequency group first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorizedLabel {
    pub parts: Vec<BigUint>,
}

/// Splits a flat index into `factor_split` independent group indices.
///
/// The groups are contiguous in frequency; the low-frequency group is the
/// most significant, so `flat = parts[0] * range^(split-1) + ... + parts[last]`.
pub fn factorize_label(index: &BigUint, p: &SvqParams) -> Result<FactorizedLabel, CodebookError> {
    p.validate()?;
    if *index >= codebook_size(p) {
        return Err(CodebookError::IndexOutOfCodebook);
    }
    let range = p.part_range();
    let mut rest = index.clone();
    let mut parts = vec![BigUint::from(0u32); p.factor_split];
    for slot in parts.iter_mut().rev() {
        *slot = &rest % &range;
        rest /= &range;
    }
    Ok(FactorizedLabel { parts })
}

/// Inverse of [`factorize_label`].
pub fn defactorize_label(label: &FactorizedLabel, p: &SvqParams) -> Result<BigUint, CodebookError> {
    p.validate()?;
    if label.parts.len() != p.factor_split {
        return Err(CodebookError::InvalidSplit {
            dims: p.dims,
            split: label.parts.len(),
        });
    }
    let range = p.part_range();
    let mut acc = BigUint::from(0u32);
    for part in &label.parts {
        if *part >= range {
            return Err(CodebookError::IndexOutOfCodebook);
        }
        acc = acc * &range + part;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(lambda: u32, dims: usize) -> SvqParams {
        SvqParams::new(lambda, dims, 2).unwrap()
    }

    #[test]
    fn all_minus_lambda_is_index_zero() {
        let p = params(1, 8);
        assert_eq!(encode_index(&[-1; 8], &p).unwrap(), BigUint::from(0u32));
    }

    #[test]
    fn all_plus_lambda_is_max_index() {
        let p = params(1, 8);
        assert_eq!(encode_index(&[1; 8], &p).unwrap(), BigUint::from(6560u32));
    }

    #[test]
    fn decode_inverts_extremes() {
        let p = params(1, 8);
        assert_eq!(decode_index(&BigUint::from(0u32), &p).unwrap(), vec![-1; 8]);
        assert_eq!(
            decode_index(&BigUint::from(6560u32), &p).unwrap(),
            vec![1; 8]
        );
    }

    #[test]
    fn random_columns_roundtrip() {
        let p = params(1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10_000 {
            let col: Vec<i32> = (0..8).map(|_| rng.random_range(-1..=1)).collect();
            let idx = encode_index(&col, &p).unwrap();
            assert_eq!(decode_index(&idx, &p).unwrap(), col);
        }
    }

    #[test]
    fn exhaustive_small_codebook_is_bijective() {
        let p = params(1, 4);
        let mut seen = std::collections::HashSet::new();
        for i in 0u32..81 {
            let col = decode_index(&BigUint::from(i), &p).unwrap();
            assert!(seen.insert(col.clone()), "duplicate column for {i}");
            assert_eq!(encode_index(&col, &p).unwrap(), BigUint::from(i));
        }
        assert_eq!(seen.len(), 81);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        let p = params(1, 8);
        let err = encode_index(&[0, 0, 2, 0, 0, 0, 0, 0], &p).unwrap_err();
        assert!(matches!(err, CodebookError::CodeOutOfRange { .. }));
        assert!(err.to_string().contains("code out of range"));
    }

    #[test]
    fn out_of_codebook_index_is_rejected() {
        let p = params(1, 8);
        assert_eq!(
            decode_index(&BigUint::from(6561u32), &p).unwrap_err(),
            CodebookError::IndexOutOfCodebook
        );
    }

    #[test]
    fn factorized_parts_stay_in_group_range() {
        let p = params(1, 8);
        let label = factorize_label(&BigUint::from(6560u32), &p).unwrap();
        assert_eq!(label.parts.len(), 2);
        for part in &label.parts {
            assert!(*part < BigUint::from(81u32));
        }
        assert_eq!(
            label.parts,
            vec![BigUint::from(80u32), BigUint::from(80u32)]
        );
    }

    #[test]
    fn factorize_zero_gives_zero_parts() {
        let p = params(1, 8);
        let label = factorize_label(&BigUint::from(0u32), &p).unwrap();
        assert_eq!(label.parts, vec![BigUint::from(0u32), BigUint::from(0u32)]);
    }

    #[test]
    fn defactorize_inverts_factorize() {
        let p = params(1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let i = BigUint::from(rng.random_range(0u32..6561));
            let label = factorize_label(&i, &p).unwrap();
            assert_eq!(defactorize_label(&label, &p).unwrap(), i);
        }
    }

    #[test]
    fn invalid_split_is_rejected() {
        assert_eq!(
            SvqParams::new(1, 8, 3).unwrap_err(),
            CodebookError::InvalidSplit { dims: 8, split: 3 }
        );
    }

    #[test]
    fn table_of_codebook_lengths() {
        assert_eq!(codebook_size(&params(1, 8)), BigUint::from(6561u32));
        assert_eq!(codebook_size(&params(1, 16)), BigUint::from(6561u32).pow(2));
        assert_eq!(
            codebook_size(&params(2, 16)),
            BigUint::from(390_625u64).pow(2)
        );
        assert_eq!(
            codebook_size(&params(2, 32)),
            BigUint::from(390_625u64).pow(4)
        );
    }

    #[test]
    fn bits_of_default_codebook() {
        let bits = codebook_bits(&params(1, 8));
        assert!((bits - 6561f64.log2()).abs() < 1e-12);
        assert!((bits - 12.68).abs() < 0.01);
    }

    #[test]
    fn size_law_squares_when_dims_double() {
        for (lambda, dims) in [(1u32, 8usize), (2, 16), (3, 4)] {
            let full = codebook_size(&SvqParams::new(lambda, dims, 2).unwrap());
            let half = codebook_size(&SvqParams::new(lambda, dims / 2, 2).unwrap());
            assert_eq!(full, half.pow(2));
        }
    }

    proptest! {
        #[test]
        fn encode_is_monotone_in_lex_order(
            a in proptest::collection::vec(-1i32..=1, 6),
            b in proptest::collection::vec(-1i32..=1, 6),
        ) {
            let p = params(1, 6);
            let ia = encode_index(&a, &p).unwrap();
            let ib = encode_index(&b, &p).unwrap();
            // Lexicographic order of shifted digit strings.
            prop_assert_eq!(a.cmp(&b), ia.cmp(&ib));
        }

        #[test]
        fn factorize_roundtrips_for_lambda2(idx in 0u64..152_587_890_625) {
            let p = SvqParams::new(2, 16, 2).unwrap();
            let i = BigUint::from(idx);
            let label = factorize_label(&i, &p).unwrap();
            prop_assert_eq!(defactorize_label(&label, &p).unwrap(), i);
        }
    }
}
