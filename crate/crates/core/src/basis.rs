//! Symmetry-reduced monomial bases and packed exponent keys.
//!
//! A basis of maximum degree `D` over `n` variables holds every monomial
//! `x^α` with `1 <= |α| <= D`, exactly once. Members are ordered by total
//! degree and, within a degree block, lexicographically from the largest
//! leading exponent down, so the first `n` columns are always `x_1 .. x_n`.
//!
//! Every member is also addressable by a packed 64-bit key that stores each
//! exponent in a fixed-width bit field (see [`pack_key`]).

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CarlemanError, Result};

/// A multi-index `α ∈ ℕⁿ` naming the monomial `x^α`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct ExponentVector {
    powers: Vec<u32>,
    degree: u32,
}

impl ExponentVector {
    pub fn new(powers: Vec<u32>) -> Self {
        let degree = powers.iter().sum();
        Self { powers, degree }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// The unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut powers = vec![0; n];
        powers[i] = 1;
        Self { powers, degree: 1 }
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn max_component(&self) -> u32 {
        self.powers.iter().copied().max().unwrap_or(0)
    }

    /// `self - e_i`, or `None` when `self[i] == 0`.
    pub fn minus_unit(&self, i: usize) -> Option<Self> {
        let p = *self.powers.get(i)?;
        if p == 0 {
            return None;
        }
        let mut powers = self.powers.clone();
        powers[i] -= 1;
        Some(Self {
            powers,
            degree: self.degree - 1,
        })
    }

    pub fn plus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let powers = self
            .powers
            .iter()
            .zip(&other.powers)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            powers,
            degree: self.degree + other.degree,
        }
    }

    /// Componentwise `other <= self`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.powers.iter().zip(&other.powers).all(|(a, b)| b <= a)
    }

    /// Evaluate `x^α`. `0^0` is taken as 1.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers
            .iter()
            .zip(x)
            .filter(|(&p, _)| p > 0)
            .map(|(&p, &xj)| xj.powi(p as i32))
            .product()
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(powers: Vec<u32>) -> Self {
        Self::new(powers)
    }
}

impl From<ExponentVector> for Vec<u32> {
    fn from(e: ExponentVector) -> Self {
        e.powers
    }
}

impl fmt::Debug for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.powers)
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (j, p) in self.powers.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// Bit width per exponent field for truncation order `q`: `⌈log₂(2q+1)⌉`.
///
/// Wide enough for any lift target component, which is at most `2q - 1`.
pub fn bits_required(q: u32) -> u32 {
    // 2q+1 is odd and > 1, so ⌈log₂⌉ equals its bit length, which equals
    // the bit length of 2q.
    let two_q = 2 * u64::from(q.max(1));
    u64::BITS - two_q.leading_zeros()
}

/// Packed key `κ(γ) = Σ_j γ_j 2^{j·b}` (fields from the least significant end).
pub fn pack_key(gamma: &ExponentVector, bits: u32) -> Result<u64> {
    check_word(gamma.len(), bits)?;
    let limit = field_limit(bits);
    if let Some((j, &p)) = gamma
        .powers()
        .iter()
        .enumerate()
        .find(|(_, &p)| u64::from(p) > limit)
    {
        return Err(CarlemanError::packing(format!(
            "component {j} = {p} does not fit in {bits} bits"
        )));
    }
    Ok(pack_unchecked(gamma.powers(), bits))
}

/// Inverse of [`pack_key`] for `n` fields of width `bits`.
pub fn unpack_key(key: u64, n: usize, bits: u32) -> ExponentVector {
    let mask = field_limit(bits);
    let powers = (0..n)
        .map(|j| ((key >> (j as u32 * bits)) & mask) as u32)
        .collect();
    ExponentVector::new(powers)
}

#[inline]
pub(crate) fn pack_unchecked(powers: &[u32], bits: u32) -> u64 {
    powers
        .iter()
        .enumerate()
        .fold(0u64, |key, (j, &p)| key | (u64::from(p) << (j as u32 * bits)))
}

fn field_limit(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn check_word(n: usize, bits: u32) -> Result<()> {
    if (n as u64) * u64::from(bits) > 64 {
        return Err(CarlemanError::packing(format!(
            "{n} variables x {bits} bits exceeds a 64-bit key"
        )));
    }
    Ok(())
}

/// `C(n+q, q) - 1`: number of nonconstant monomials of degree at most `q`.
pub fn count_sym(n: u32, q: u32) -> Result<u64> {
    if n < 1 || q < 1 {
        return Err(CarlemanError::InvalidDimension(format!(
            "count_sym needs n >= 1 and Q >= 1, got n = {n}, Q = {q}"
        )));
    }
    let mut c: u128 = 1;
    for k in 1..=u128::from(q) {
        c = c
            .checked_mul(u128::from(n) + k)
            .ok_or(CarlemanError::Overflow("count_sym"))?
            / k;
    }
    u64::try_from(c - 1).map_err(|_| CarlemanError::Overflow("count_sym"))
}

/// `Σ_{k=1}^{q} n^k`, the tensor-product count, defined for `n > 1`.
pub fn count_tensor(n: u32, q: u32) -> Result<u64> {
    if n <= 1 || q < 1 {
        return Err(CarlemanError::InvalidDimension(format!(
            "count_tensor needs n > 1 and Q >= 1, got n = {n}, Q = {q}"
        )));
    }
    let n = u64::from(n);
    let mut term = 1u64;
    let mut total = 0u64;
    for _ in 0..q {
        term = term
            .checked_mul(n)
            .ok_or(CarlemanError::Overflow("count_tensor"))?;
        total = total
            .checked_add(term)
            .ok_or(CarlemanError::Overflow("count_tensor"))?;
    }
    Ok(total)
}

/// Ordered monomial basis for degrees `1..=max_degree` with a key index.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n: usize,
    max_degree: u32,
    bits: u32,
    members: Vec<ExponentVector>,
    /// `block_start[d]` is the first column of degree `d`; one past the end
    /// sits at `block_start[max_degree + 1]`.
    block_start: Vec<usize>,
    key_map: HashMap<u64, usize>,
}

impl MonomialBasis {
    /// Enumerate all monomials of degree `1..=max_degree` in `n` variables.
    pub fn generate(n: usize, max_degree: u32) -> Result<Self> {
        if n < 1 || max_degree < 1 {
            return Err(CarlemanError::InvalidDimension(format!(
                "basis needs n >= 1 and degree >= 1, got n = {n}, degree = {max_degree}"
            )));
        }
        let bits = bits_required(max_degree);
        check_word(n, bits)?;

        let expected = count_sym(n as u32, max_degree)? as usize;
        let mut members = Vec::with_capacity(expected);
        let mut block_start = vec![0; max_degree as usize + 2];
        let mut scratch = vec![0u32; n];
        for d in 1..=max_degree {
            block_start[d as usize] = members.len();
            compositions(d, 0, &mut scratch, &mut members);
        }
        block_start[max_degree as usize + 1] = members.len();
        debug_assert_eq!(members.len(), expected);

        let key_map = members
            .iter()
            .enumerate()
            .map(|(col, m)| (pack_unchecked(m.powers(), bits), col))
            .collect();

        Ok(Self {
            n,
            max_degree,
            bits,
            members,
            block_start,
            key_map,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Key field width `b` for this basis.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn members(&self) -> &[ExponentVector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, col: usize) -> &ExponentVector {
        &self.members[col]
    }

    /// Column range holding the monomials of total degree `d`.
    pub fn degree_block(&self, d: u32) -> std::ops::Range<usize> {
        if d < 1 || d > self.max_degree {
            return 0..0;
        }
        self.block_start[d as usize]..self.block_start[d as usize + 1]
    }

    pub fn key_of(&self, e: &ExponentVector) -> Result<u64> {
        pack_key(e, self.bits)
    }

    pub fn column_of_key(&self, key: u64) -> Option<usize> {
        self.key_map.get(&key).copied()
    }

    /// Column of `e`, or `None` when `e` is not a member.
    pub fn column_of(&self, e: &ExponentVector) -> Option<usize> {
        if e.len() != self.n || e.degree() < 1 || e.degree() > self.max_degree {
            return None;
        }
        self.column_of_key(pack_unchecked(e.powers(), self.bits))
    }

    /// Column lookup by raw exponents, skipping the degree check. Callers
    /// guarantee each component is below `2^bits`.
    #[inline]
    pub(crate) fn column_of_powers(&self, powers: &[u32]) -> Option<usize> {
        self.column_of_key(pack_unchecked(powers, self.bits))
    }

    /// Stack `x^α` over all members.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.evaluate_into(x, &mut out);
        out
    }

    /// Like [`evaluate`](Self::evaluate) but reusing `out`.
    ///
    /// Each degree-`d` member is `x_j` times an already computed degree-`d-1`
    /// member, with `j` its first nonzero variable.
    pub fn evaluate_into(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.n);
        out.clear();
        let mut scratch = vec![0u32; self.n];
        for (col, m) in self.members.iter().enumerate() {
            if m.degree() == 1 {
                let j = m.powers().iter().position(|&p| p == 1).unwrap_or(0);
                out.push(x[j]);
                continue;
            }
            let j = m.powers().iter().position(|&p| p > 0).unwrap_or(0);
            scratch.copy_from_slice(m.powers());
            scratch[j] -= 1;
            let parent = self
                .column_of_powers(&scratch)
                .expect("lower-degree parent is a basis member");
            debug_assert!(parent < col);
            let v = out[parent] * x[j];
            out.push(v);
        }
    }
}

/// Push every exponent vector of total degree `remaining` whose entries
/// before `pos` are fixed by `scratch`, leading exponent descending.
fn compositions(remaining: u32, pos: usize, scratch: &mut [u32], out: &mut Vec<ExponentVector>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(ExponentVector::new(scratch.to_vec()));
        scratch[pos] = 0;
        return;
    }
    for p in (0..=remaining).rev() {
        scratch[pos] = p;
        compositions(remaining - p, pos + 1, scratch, out);
    }
    scratch[pos] = 0;
}
