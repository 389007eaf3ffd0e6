//! The 4-rank of `K₂(O_F)` for `F = Q(√d)`, `d` odd and squarefree.
//!
//! For `d` with odd prime factors `p₁ < … < p_t` we build the
//! `(t+1)×(t+1)` matrix of local Hilbert symbols
//!
//! ```text
//!            2          p₁         …   p_t
//! p₁      (−d,p₁)₂   (−d,p₁)_p₁    …
//! ⋮
//! p_{t−1} (−d,p_{t−1})₂ …
//! v       (−d,v)₂    (−d,v)_p₁     …
//! −1      (±d,−1)₂   (±d,−1)_p₁    …
//! ```
//!
//! where the last row uses `d` for real fields and `−d` for imaginary ones.
//! If 2 is a norm from `F` then `d = u² − 2w²` and `v = u + w`; otherwise
//! `v = −2` when −2 is a norm from `F` and `v = 2` when it is not. With `rk`
//! the `F₂`-rank of that matrix,
//!
//! * `d < 0`: 4-rank `= t − rk`
//! * `d > 0`: 4-rank `= t − rk + a′ − a`, where `a = 0` if 2 is a norm and
//!   `1` otherwise, and `a′` counts how many of `−1`, `2` are *not* norms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, ArithError, FactorSieve, PellSolution};
use crate::gf2::BitMatrix;
use crate::localsym::{hilbert, hilbert_2, hilbert_inf, hilbert_odd, Place, SymbolValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FourRankError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("2 is a norm from Q(√{0}) but no u² − 2w² representation was found")]
    PellFailure(i64),
    #[error("v = {v} shares a factor with {p} (d = {d})")]
    VNotCoprime { d: i64, v: i64, p: u64 },
    #[error("{primes:?} is not an odd squarefree factorization of {d}")]
    BadFactorization { d: i64, primes: Vec<u64> },
    #[error("4-rank {value} of Q(√{d}) outside 0..={t}")]
    RangeViolation { d: i64, t: usize, value: i64 },
}

/// An odd squarefree `d` with its factorization and norm data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub d: i64,
    pub primes: Vec<u64>,
    pub two_is_norm: bool,
    pub minus_one_is_norm: bool,
    pub minus_two_is_norm: bool,
}

impl FieldSpec {
    pub fn new(d: i64, sieve: &FactorSieve) -> Result<Self, FourRankError> {
        let primes = arith::factor_odd_squarefree(d, sieve)?;
        Ok(Self::from_validated(d, primes))
    }

    /// Builds from a caller-supplied factorization, checked against `d`.
    pub fn from_primes(d: i64, mut primes: Vec<u64>) -> Result<Self, FourRankError> {
        primes.sort_unstable();
        let bad = || FourRankError::BadFactorization {
            d,
            primes: primes.clone(),
        };
        let distinct = primes.windows(2).all(|w| w[0] < w[1]);
        let all_odd_primes = primes.iter().all(|&p| p % 2 == 1 && arith::is_prime(p));
        let product = primes
            .iter()
            .try_fold(1u64, |acc, &p| acc.checked_mul(p));
        if primes.is_empty() || !distinct || !all_odd_primes || product != Some(d.unsigned_abs())
        {
            return Err(bad());
        }
        Ok(Self::from_validated(d, primes))
    }

    fn from_validated(d: i64, primes: Vec<u64>) -> Self {
        let (two_is_norm, minus_one_is_norm) = norms_from_field(d, &primes);
        let minus_two_is_norm = is_norm_locally(-2, d, &primes);
        Self {
            d,
            primes,
            two_is_norm,
            minus_one_is_norm,
            minus_two_is_norm,
        }
    }

    pub fn t(&self) -> usize {
        self.primes.len()
    }
}

/// Whether 2 and −1 are norms from `Q(√d)`.
///
/// 2 is a norm exactly when every `pᵢ ≡ ±1 (mod 8)`. For −1 the local
/// criterion is used: `(−1, d)_v = +1` at `∞`, 2 and every `p | d`.
pub fn norms_from_field(d: i64, primes: &[u64]) -> (bool, bool) {
    let two = primes.iter().all(|p| matches!(p % 8, 1 | 7));
    (two, is_norm_locally(-1, d, primes))
}

/// Local norm test for `n ∈ {±1, ±2}` from `Q(√d)`, `d` odd with odd prime
/// factors `primes`. Only `∞`, 2 and the `pᵢ` can obstruct.
fn is_norm_locally(n: i64, d: i64, primes: &[u64]) -> bool {
    hilbert_inf(n, d) == SymbolValue::Plus
        && hilbert_2(n, d) == SymbolValue::Plus
        && primes.iter().all(|&p| hilbert_odd(n, d, p) == SymbolValue::Plus)
}

/// `n` is a norm from `Q(√d)` iff `(n, d)_v = +1` at every place dividing
/// `2nd·∞`.
pub fn is_local_norm_everywhere(n: i64, d: i64, sieve: &FactorSieve) -> bool {
    let mut places = vec![Place::Infinite, Place::Prime(2)];
    for m in [n, d] {
        for (p, _) in sieve.factorize(m.unsigned_abs()) {
            if p != 2 && !places.contains(&Place::Prime(p)) {
                places.push(Place::Prime(p));
            }
        }
    }
    places
        .into_iter()
        .all(|place| hilbert(n, d, place) == SymbolValue::Plus)
}

/// `u + w` for the canonical `d = u² − 2w²` when 2 is a norm, else `−2` if
/// −2 is a norm and `2` if not. The representation is returned alongside.
///
/// Using `2` for the `−2`-norm case overstates the 4-rank of fields such as
/// `Q(√33)` by one.
pub fn choose_v(spec: &FieldSpec) -> Result<(i64, Option<PellSolution>), FourRankError> {
    if !spec.two_is_norm {
        if spec.minus_two_is_norm {
            return Ok((-2, None));
        }
        return Ok((2, None));
    }
    let sol = arith::solve_x2_minus_2y2(spec.d).map_err(|_| FourRankError::PellFailure(spec.d))?;
    Ok((sol.trace_sum(), Some(sol)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowLabel {
    Prime(u64),
    V(i64),
    MinusOne,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolMatrix {
    pub sign_grid: Vec<Vec<SymbolValue>>,
    pub v: i64,
    pub pell: Option<PellSolution>,
    pub column_labels: Vec<u64>,
    pub row_labels: Vec<RowLabel>,
}

impl SymbolMatrix {
    pub fn to_bits(&self) -> BitMatrix {
        BitMatrix::from_signs(&self.sign_grid).expect("matrix is square and nonempty")
    }
}

fn local(a: i64, b: i64, column: u64) -> SymbolValue {
    if column == 2 {
        hilbert_2(a, b)
    } else {
        hilbert_odd(a, b, column)
    }
}

/// The symbol matrix for `spec` with an explicit `v`.
pub fn build_matrix_with_v(
    spec: &FieldSpec,
    v: i64,
    pell: Option<PellSolution>,
) -> Result<SymbolMatrix, FourRankError> {
    let d = spec.d;
    if let Some(&p) = spec
        .primes
        .iter()
        .find(|&&p| v == 0 || v.unsigned_abs().is_multiple_of(p))
    {
        return Err(FourRankError::VNotCoprime { d, v, p });
    }
    let t = spec.t();
    let mut column_labels = Vec::with_capacity(t + 1);
    column_labels.push(2);
    column_labels.extend_from_slice(&spec.primes);

    let mut rows: Vec<(RowLabel, i64, i64)> = spec.primes[..t - 1]
        .iter()
        .map(|&p| (RowLabel::Prime(p), -d, p as i64))
        .collect();
    rows.push((RowLabel::V(v), -d, v));
    rows.push((RowLabel::MinusOne, d.abs(), -1));

    let sign_grid = rows
        .iter()
        .map(|&(_, a, b)| column_labels.iter().map(|&c| local(a, b, c)).collect())
        .collect();
    Ok(SymbolMatrix {
        sign_grid,
        v,
        pell,
        column_labels,
        row_labels: rows.into_iter().map(|(label, _, _)| label).collect(),
    })
}

pub fn build_matrix(spec: &FieldSpec) -> Result<SymbolMatrix, FourRankError> {
    let (v, pell) = choose_v(spec)?;
    build_matrix_with_v(spec, v, pell)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub d: i64,
    pub t: usize,
    pub primes: Vec<u64>,
    pub two_is_norm: bool,
    pub minus_one_is_norm: bool,
    pub v: i64,
    pub rank: usize,
    pub a: u8,
    pub a_prime: u8,
    pub four_rank: u32,
}

/// Combines a matrix rank with the norm corrections.
pub fn report_from_matrix(spec: &FieldSpec, matrix: &SymbolMatrix) -> Result<RankReport, FourRankError> {
    let t = spec.t();
    let rank = matrix.to_bits().rank();
    let a = u8::from(!spec.two_is_norm);
    let a_prime = u8::from(!spec.two_is_norm) + u8::from(!spec.minus_one_is_norm);
    let value = if spec.d < 0 {
        t as i64 - rank as i64
    } else {
        t as i64 - rank as i64 + a_prime as i64 - a as i64
    };
    if !(0..=t as i64).contains(&value) {
        return Err(FourRankError::RangeViolation { d: spec.d, t, value });
    }
    Ok(RankReport {
        d: spec.d,
        t,
        primes: spec.primes.clone(),
        two_is_norm: spec.two_is_norm,
        minus_one_is_norm: spec.minus_one_is_norm,
        v: matrix.v,
        rank,
        a,
        a_prime,
        four_rank: value as u32,
    })
}

pub fn four_rank_of(spec: &FieldSpec) -> Result<RankReport, FourRankError> {
    let matrix = build_matrix(spec)?;
    report_from_matrix(spec, &matrix)
}

/// 4-rank of `K₂` of the ring of integers of `Q(√d)`.
pub fn four_rank(d: i64, sieve: &FactorSieve) -> Result<RankReport, FourRankError> {
    four_rank_of(&FieldSpec::new(d, sieve)?)
}
