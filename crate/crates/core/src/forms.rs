//! Binary-form criteria for fields `Q(√±pl)` with `p ≡ l ≡ 1 (mod 8)`.
//!
//! A prime `l ≡ 1 (mod 8)` *satisfies ⟨1,32⟩* when `l = x² + 32y²`. For
//! `(l/p) = +1` it satisfies exactly one of ⟨1,−2p⟩ and ⟨p,−2⟩, and which
//! one is read off the quadratic symbol `(π/l)` of an element
//! `π = a + b√2` of norm `p`. These data predict the 4-rank of `Q(√pl)`
//! and `Q(√−pl)` without building any symbol matrix.
//!
//! The module also counts reduced indefinite forms by cycles, which gives
//! the narrow class number `h⁺` of a real quadratic order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, exact_sqrt, gcd, jacobi, PellSolution};
use crate::localsym::{quad_symbol_sqrt2, SymbolError, SymbolValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormsError {
    #[error("{0} is not a prime congruent to 1 mod 8")]
    NotPrimeOneModEight(u64),
    #[error("p and l must be distinct (both {0})")]
    EqualPrimes(u64),
    #[error("({l}/{p}) is not +1")]
    LegendreNotOne { p: u64, l: u64 },
    #[error("the two ⟨1,32⟩ tests disagree at {0}")]
    ConsistencyViolation(u64),
    #[error("no representation {0} = a² − 2b² found")]
    PellFailure(u64),
    #[error("{0} is not a positive non-square discriminant")]
    InvalidDiscriminant(u64),
    #[error("representation search out of range: {0}")]
    RangeExceeded(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

fn require_prime_one_mod_eight(n: u64) -> Result<(), FormsError> {
    if n % 8 == 1 && arith::is_prime(n) {
        Ok(())
    } else {
        Err(FormsError::NotPrimeOneModEight(n))
    }
}

/// Whether `l = x² + 32y²`, checked both by direct search and by the
/// symbol `((1+√2)/l)`.
pub fn satisfies_1_32(l: u64) -> Result<bool, FormsError> {
    require_prime_one_mod_eight(l)?;
    let by_search = arith::solve_x2_plus_32y2(l).is_ok();
    let by_symbol = quad_symbol_sqrt2(1, 1, l)? == SymbolValue::Plus;
    if by_search != by_symbol {
        return Err(FormsError::ConsistencyViolation(l));
    }
    Ok(by_search)
}

/// Canonical `π = a + b√2` with `a² − 2b² = p`.
pub fn pell_pi(p: u64) -> Result<PellSolution, FormsError> {
    require_prime_one_mod_eight(p)?;
    arith::solve_x2_minus_2y2(p as i64).map_err(|_| FormsError::PellFailure(p))
}

fn check_pair(p: u64, l: u64) -> Result<SymbolValue, FormsError> {
    require_prime_one_mod_eight(p)?;
    require_prime_one_mod_eight(l)?;
    if p == l {
        return Err(FormsError::EqualPrimes(p));
    }
    Ok(SymbolValue::from_jacobi(jacobi(l as i64, p)).expect("distinct primes"))
}

/// `(π/l)`: `+1` iff `l` satisfies ⟨1,−2p⟩, `−1` iff it satisfies ⟨p,−2⟩.
pub fn pi_symbol(p: u64, l: u64) -> Result<SymbolValue, FormsError> {
    if check_pair(p, l)? != SymbolValue::Plus {
        return Err(FormsError::LegendreNotOne { p, l });
    }
    let pi = pell_pi(p)?;
    Ok(quad_symbol_sqrt2(pi.u, pi.w, l)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormClassification {
    pub p: u64,
    pub l: u64,
    pub legendre_lp: SymbolValue,
    pub p_sat_1_32: bool,
    pub l_sat_1_32: bool,
    /// Only defined when `(l/p) = +1`.
    pub pi_symbol: Option<SymbolValue>,
    pub predicted_rank_pos: u32,
    pub predicted_rank_neg: u32,
}

/// Predicts the 4-ranks of `Q(√pl)` and `Q(√−pl)` from symbols alone.
///
/// With `(l/p) = +1` the `v`-row of the matrix reduces to the dyadic symbol
/// `(−pl, v)₂` (trivial iff both or neither of `p, l` satisfy ⟨1,32⟩) and
/// `(v/l)`, which equals `(π/l)·((1+√2)/l)` for `pl` and `(π/l)` for `−pl`.
/// With `(l/p) = −1` only the dyadic symbol matters for `pl`, and `−pl`
/// always has 4-rank 1.
pub fn classify_pl(p: u64, l: u64) -> Result<FormClassification, FormsError> {
    let legendre_lp = check_pair(p, l)?;
    let p_sat = satisfies_1_32(p)?;
    let l_sat = satisfies_1_32(l)?;
    let dyadic_trivial = p_sat == l_sat;
    let (pi, pos, neg) = match legendre_lp {
        SymbolValue::Plus => {
            let pi = pi_symbol(p, l)?;
            let unit = SymbolValue::from_sign(!l_sat);
            let v_over_l = pi * unit;
            let pos = if dyadic_trivial && v_over_l == SymbolValue::Plus {
                2
            } else {
                1
            };
            let neg = if pi == SymbolValue::Plus { 2 } else { 1 };
            (Some(pi), pos, neg)
        }
        SymbolValue::Minus => (None, u32::from(dyadic_trivial), 1),
    };
    Ok(FormClassification {
        p,
        l,
        legendre_lp,
        p_sat_1_32: p_sat,
        l_sat_1_32: l_sat,
        pi_symbol: pi,
        predicted_rank_pos: pos,
        predicted_rank_neg: neg,
    })
}

/// A primitive form `ax² + bxy + cy²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassNumberReport {
    pub discriminant: u64,
    pub h_plus: u64,
    pub cycle_count_detail: Vec<usize>,
}

/// `|√D − 2|a|| < b < √D`, in integers.
fn is_reduced(f: Form, disc: i64) -> bool {
    let s = 2 * f.a.abs();
    f.b > 0 && f.b * f.b < disc && disc < (s + f.b).pow(2) && (s <= f.b || (s - f.b).pow(2) < disc)
}

fn reduced_forms(disc: i64) -> Vec<Form> {
    let root = disc.isqrt();
    let mut out = Vec::new();
    let mut b = if disc % 2 == 0 { 2 } else { 1 };
    while b * b < disc {
        let n = (disc - b * b) / 4;
        for a_abs in 1..=root {
            if n % a_abs != 0 {
                continue;
            }
            for a in [a_abs, -a_abs] {
                let f = Form { a, b, c: -n / a };
                let primitive = gcd(gcd(a_abs as u64, b as u64), f.c.unsigned_abs()) == 1;
                if primitive && is_reduced(f, disc) {
                    out.push(f);
                }
            }
        }
        b += 2;
    }
    out
}

/// One reduction step `(a,b,c) ↦ (c, b′, (b′² − D)/4c)` with
/// `b′ ≡ −b (mod 2c)` and `√D − 2|c| < b′ < √D`.
pub fn rho(f: Form, disc: i64) -> Form {
    let root = disc.isqrt();
    let m = 2 * f.c.abs();
    let b = root - (root + f.b).rem_euclid(m);
    Form {
        a: f.c,
        b,
        c: (b * b - disc) / (4 * f.c),
    }
}

/// `h⁺` for discriminant `D` as the number of cycles of reduced forms.
pub fn narrow_class_number(disc: u64) -> Result<ClassNumberReport, FormsError> {
    let is_square = exact_sqrt(disc as i128).is_some();
    if disc == 0 || !matches!(disc % 4, 0 | 1) || is_square || disc > (1 << 40) {
        return Err(FormsError::InvalidDiscriminant(disc));
    }
    let d = disc as i64;
    let forms = reduced_forms(d);
    let mut seen: HashSet<Form> = HashSet::with_capacity(forms.len());
    let mut cycles = Vec::new();
    for &start in &forms {
        if seen.contains(&start) {
            continue;
        }
        let mut len = 0;
        let mut f = start;
        loop {
            debug_assert!(is_reduced(f, d), "{f:?} left the reduced set");
            seen.insert(f);
            len += 1;
            f = rho(f, d);
            if f == start {
                break;
            }
        }
        cycles.push(len);
    }
    Ok(ClassNumberReport {
        discriminant: disc,
        h_plus: cycles.len() as u64,
        cycle_count_detail: cycles,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationCheck {
    /// `l^{h⁺/4} = pn² − 2m²` with `m ≢ 0 (mod l)`.
    pub sat_p_minus2: bool,
    /// `l^{h⁺/4} = n² − 2pm²` with `m ≢ 0 (mod l)`.
    pub sat_1_minus2p: bool,
    /// Exactly one holds and it agrees with `(π/l)`.
    pub consistent: bool,
}

const REPRESENTATION_SEARCH_BUDGET: f64 = 5e7;

/// Least `(x, y)` with `x² − D·y² = 1`, by continued fractions.
fn pell_fundamental(d: u64) -> Option<(u128, u128)> {
    let a0 = d.isqrt() as u128;
    let d = d as u128;
    let (mut m, mut q, mut a) = (0u128, 1u128, a0);
    let (mut h_prev, mut h) = (1u128, a0);
    let (mut k_prev, mut k) = (0u128, 1u128);
    loop {
        let hh = h.checked_mul(h)?;
        let dkk = d.checked_mul(k.checked_mul(k)?)?;
        if hh == dkk + 1 {
            return Some((h, k));
        }
        m = q * a - m;
        q = (d - m * m) / q;
        a = (a0 + m) / q;
        (h_prev, h) = (h, a.checked_mul(h)?.checked_add(h_prev)?);
        (k_prev, k) = (k, a.checked_mul(k)?.checked_add(k_prev)?);
    }
}

/// Whether `target = a·n² − b·m²` for some `n` and `1 ≤ m ≤ bound`
/// (`m = 0` too when no `l` is given), with `l ∤ m` when `l` is given.
fn search_representation(a: u64, b: u64, target: u128, bound: u64, l: Option<u64>) -> bool {
    let (a, b, n) = (a as i128, b as i128, target as i128);
    let start = if l.is_some() { 1 } else { 0 };
    (start..=bound).any(|m| {
        let lhs = n + b * (m as i128).pow(2);
        l.is_none_or(|l| m % l != 0) && lhs % a == 0 && exact_sqrt(lhs / a).is_some()
    })
}

fn nagell_scale(disc: u64) -> Result<f64, FormsError> {
    let (x1, y1) = pell_fundamental(disc).ok_or_else(|| {
        FormsError::RangeExceeded(format!("fundamental unit of Q(√{disc}) exceeds 128 bits"))
    })?;
    Ok(y1 as f64 / (2.0 * (x1 as f64 + 1.0)).sqrt())
}

/// Whether `px² − 2y²` lies in the principal narrow class of
/// discriminant `8p`, i.e. represents 1. When it does, ⟨p,−2⟩ and ⟨1,−2p⟩
/// represent the same integers and cannot separate primes `l`.
pub fn p_form_is_principal(p: u64) -> Result<bool, FormsError> {
    require_prime_one_mod_eight(p)?;
    let bound = nagell_scale(2 * p)? * (p as f64).sqrt() + 2.0;
    if bound > REPRESENTATION_SEARCH_BUDGET {
        return Err(FormsError::RangeExceeded(format!("search bound {bound:.3e}")));
    }
    Ok(search_representation(p, 2, 1, bound as u64, None))
}

/// Searches for the two representations of `l^{h⁺/4}` named in
/// [`RepresentationCheck`], for small instances.
///
/// Solutions of `X² − 2p·Y² = N` fall into classes under the unit group;
/// each class has a member with `|Y| ≤ y₁√N / √(2(x₁+1))`, where `(x₁,y₁)`
/// is the least solution of the Pell equation. Both side conditions
/// (`p | X` and `l ∤ Y`) are constant on classes, so the bounded search is
/// exhaustive.
pub fn form_representation_check(
    p: u64,
    l: u64,
    report: &ClassNumberReport,
) -> Result<RepresentationCheck, FormsError> {
    let pi = pi_symbol(p, l)?;
    if report.discriminant != 8 * p || !report.h_plus.is_multiple_of(4) {
        return Err(FormsError::InvalidDiscriminant(report.discriminant));
    }
    let k = (report.h_plus / 4) as u32;
    let target = (l as u128)
        .checked_pow(k)
        .filter(|&n| n < (1 << 62))
        .ok_or_else(|| FormsError::RangeExceeded(format!("{l}^{k} exceeds 2^62")))?;
    let scale = nagell_scale(2 * p)?;
    let bound_for = |n: f64| -> Result<u64, FormsError> {
        let b = scale * n.sqrt() + 2.0;
        if b > REPRESENTATION_SEARCH_BUDGET {
            return Err(FormsError::RangeExceeded(format!("search bound {b:.3e}")));
        }
        Ok(b as u64)
    };

    let sat_1_minus2p = search_representation(1, 2 * p, target, bound_for(target as f64)?, Some(l));
    let sat_p_minus2 = search_representation(p, 2, target, bound_for(target as f64 * p as f64)?, Some(l));
    let consistent =
        sat_p_minus2 != sat_1_minus2p && sat_1_minus2p == (pi == SymbolValue::Plus);
    Ok(RepresentationCheck {
        sat_p_minus2,
        sat_1_minus2p,
        consistent,
    })
}
