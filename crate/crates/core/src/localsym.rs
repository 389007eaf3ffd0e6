//! Local Hilbert symbols over `Q` and the quadratic residue symbol of an
//! element of `Z[√2]` modulo a prime `l ≡ 1 (mod 8)`.

use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{jacobi, sqrt_mod};

/// A symbol value, `+1` or `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum SymbolValue {
    Plus,
    Minus,
}

impl SymbolValue {
    pub fn from_sign(minus: bool) -> Self {
        if minus {
            Self::Minus
        } else {
            Self::Plus
        }
    }

    /// Converts a Jacobi/Legendre value; `0` has no symbol value.
    pub fn from_jacobi(j: i32) -> Option<Self> {
        match j {
            1 => Some(Self::Plus),
            -1 => Some(Self::Minus),
            _ => None,
        }
    }

    pub fn is_minus(self) -> bool {
        self == Self::Minus
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Self::Plus => 1,
            Self::Minus => -1,
        }
    }
}

impl Mul for SymbolValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_sign(self.is_minus() != rhs.is_minus())
    }
}

impl From<SymbolValue> for i8 {
    fn from(s: SymbolValue) -> i8 {
        s.as_i8()
    }
}

impl TryFrom<i8> for SymbolValue {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        Self::from_jacobi(v as i32).ok_or_else(|| format!("{v} is not a symbol value"))
    }
}

impl fmt::Display for SymbolValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plus => "+1",
            Self::Minus => "-1",
        })
    }
}

/// A place of `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Place {
    Infinite,
    Prime(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("{0} is not congruent to 1 mod 8")]
    NotOneModEight(u64),
    #[error("symbol of {a} + {b}·√2 at {l} is zero")]
    DegenerateSymbol { a: i64, b: i64, l: u64 },
}

/// Splits `x = p^k · unit`.
fn split_power(mut x: i64, p: u64) -> (u32, i64) {
    let p = p as i64;
    let mut k = 0;
    while x % p == 0 {
        x /= p;
        k += 1;
    }
    (k, x)
}

/// `(a, b)_p` for an odd prime `p`.
pub fn hilbert_odd(a: i64, b: i64, p: u64) -> SymbolValue {
    assert!(a != 0 && b != 0, "Hilbert symbol of zero");
    debug_assert!(p % 2 == 1);
    let (alpha, u) = split_power(a, p);
    let (beta, v) = split_power(b, p);
    let mut minus = (alpha as u64 * beta as u64 % 2 == 1) && (p % 4 == 3);
    if beta % 2 == 1 {
        minus ^= jacobi(u, p) == -1;
    }
    if alpha % 2 == 1 {
        minus ^= jacobi(v, p) == -1;
    }
    SymbolValue::from_sign(minus)
}

// ε(x) = (x−1)/2 mod 2 and ω(x) = (x²−1)/8 mod 2 for odd x.
fn eps(x: i64) -> bool {
    x.rem_euclid(4) == 3
}

fn omega(x: i64) -> bool {
    matches!(x.rem_euclid(8), 3 | 5)
}

/// `(a, b)_2`.
pub fn hilbert_2(a: i64, b: i64) -> SymbolValue {
    assert!(a != 0 && b != 0, "Hilbert symbol of zero");
    let (alpha, u) = split_power(a, 2);
    let (beta, v) = split_power(b, 2);
    let minus = (eps(u) && eps(v))
        ^ (alpha % 2 == 1 && omega(v))
        ^ (beta % 2 == 1 && omega(u));
    SymbolValue::from_sign(minus)
}

/// `(a, b)_∞`: `−1` exactly when both are negative.
pub fn hilbert_inf(a: i64, b: i64) -> SymbolValue {
    SymbolValue::from_sign(a < 0 && b < 0)
}

pub fn hilbert(a: i64, b: i64, place: Place) -> SymbolValue {
    match place {
        Place::Infinite => hilbert_inf(a, b),
        Place::Prime(2) => hilbert_2(a, b),
        Place::Prime(p) => hilbert_odd(a, b, p),
    }
}

/// `((a + b√2) / l)` for a prime `l ≡ 1 (mod 8)`, evaluated by sending
/// `√2` to the smaller square root of 2 modulo `l`.
pub fn quad_symbol_sqrt2(a: i64, b: i64, l: u64) -> Result<SymbolValue, SymbolError> {
    if l % 8 != 1 {
        return Err(SymbolError::NotOneModEight(l));
    }
    let norm = (a as i128).pow(2) - 2 * (b as i128).pow(2);
    if norm.rem_euclid(l as i128) == 0 {
        return Err(SymbolError::DegenerateSymbol { a, b, l });
    }
    let alpha = sqrt_mod(2, l).expect("2 is a square modulo l ≡ 1 mod 8") as i128;
    let image = (a as i128 + b as i128 * alpha).rem_euclid(l as i128) as i64;
    Ok(SymbolValue::from_jacobi(jacobi(image, l)).expect("nonzero image"))
}
