//! Integer primitives: primality, a smallest-prime-factor sieve, Jacobi
//! symbols, square roots modulo primes, and the two binary-form solvers
//! (`x² − 2y²` and `x² + 32y²`) used by the rest of the crate.
//!
//! Everything here works on 64-bit machine integers; intermediate products
//! are widened to `i128`/`u128` where they could overflow.

use thiserror::Error;

/// Largest sieve the crate will allocate (one `u32` per entry).
pub const MAX_SIEVE_LIMIT: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is not odd squarefree")]
    NotOddSquarefree(i64),
    #[error("|{d}| exceeds sieve limit {limit}")]
    OutOfSieveRange { d: i64, limit: u64 },
    #[error("sieve limit {0} exceeds the memory budget of {MAX_SIEVE_LIMIT}")]
    SieveTooLarge(u64),
    #[error("sieve limit must be at least 2, got {0}")]
    SieveTooSmall(u64),
    #[error("{a} is not a square modulo {p}")]
    NonResidue { a: i64, p: u64 },
    #[error("{0} is not represented by the form")]
    NotRepresented(i64),
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Exact integer square root of a non-negative value, if it is a square.
pub fn exact_sqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let r = n.isqrt();
    (r * r == n).then_some(r)
}

/// Deterministic Miller–Rabin. The seven bases below are a known witness
/// set for every 64-bit integer.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let odd = (n - 1) >> s;
    'witness: for base in BASES {
        let a = base % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, odd, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest-prime-factor table for `0..=limit`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    limit: u64,
    smallest: Vec<u32>,
}

impl FactorSieve {
    pub fn new(limit: u64) -> Result<Self, ArithError> {
        if limit < 2 {
            return Err(ArithError::SieveTooSmall(limit));
        }
        if limit > MAX_SIEVE_LIMIT {
            return Err(ArithError::SieveTooLarge(limit));
        }
        let n = limit as usize;
        let mut smallest = vec![0u32; n + 1];
        let mut i = 2usize;
        while i <= n {
            if smallest[i] == 0 {
                smallest[i] = i as u32;
                if let Some(start) = i.checked_mul(i) {
                    let mut j = start;
                    while j <= n {
                        if smallest[j] == 0 {
                            smallest[j] = i as u32;
                        }
                        j += i;
                    }
                }
            }
            i += 1;
        }
        Ok(Self { limit, smallest })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Least prime factor of `n` (`2 ≤ n ≤ limit`).
    pub fn smallest_factor(&self, n: u64) -> u64 {
        assert!(
            (2..=self.limit).contains(&n),
            "{n} outside sieve range 2..={}",
            self.limit
        );
        self.smallest[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.smallest[n as usize] as u64 == n
    }

    /// Prime factorization as `(prime, exponent)` pairs in increasing order.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.smallest_factor(n);
            n /= p;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Primes up to `bound` (clamped to the sieve limit).
    pub fn primes(&self, bound: u64) -> impl Iterator<Item = u64> + '_ {
        (2..=bound.min(self.limit)).filter(move |&n| self.smallest[n as usize] as u64 == n)
    }
}

/// Builds the smallest-prime-factor table up to `limit`.
pub fn build_sieve(limit: u64) -> Result<FactorSieve, ArithError> {
    FactorSieve::new(limit)
}

/// Odd prime factors `p₁ < … < p_t` of an odd squarefree `d` with `|d| > 1`.
pub fn factor_odd_squarefree(d: i64, sieve: &FactorSieve) -> Result<Vec<u64>, ArithError> {
    let n = d.unsigned_abs();
    if n > sieve.limit() {
        return Err(ArithError::OutOfSieveRange {
            d,
            limit: sieve.limit(),
        });
    }
    if n <= 1 || n.is_multiple_of(2) {
        return Err(ArithError::NotOddSquarefree(d));
    }
    let mut primes = Vec::new();
    let mut m = n;
    while m > 1 {
        let p = sieve.smallest_factor(m);
        m /= p;
        if m.is_multiple_of(p) {
            return Err(ArithError::NotOddSquarefree(d));
        }
        primes.push(p);
    }
    Ok(primes)
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> i32 {
    assert!(n % 2 == 1, "jacobi: modulus {n} must be odd");
    let mut a = (a as i128).rem_euclid(n as i128) as u64;
    let mut n = n;
    let mut sign = 1;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            sign = -sign;
        }
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        (a, n) = (n % a, a);
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Smallest non-negative square root of `a` modulo the odd prime `p`
/// (Tonelli–Shanks). The result lies in `0..=(p−1)/2`.
pub fn sqrt_mod(a: i64, p: u64) -> Result<u64, ArithError> {
    let r = (a as i128).rem_euclid(p as i128) as u64;
    if r == 0 {
        return Ok(0);
    }
    if jacobi(r as i64, p) != 1 {
        return Err(ArithError::NonResidue { a, p });
    }
    let root = if p % 4 == 3 {
        pow_mod(r, (p + 1) / 4, p)
    } else {
        let s = (p - 1).trailing_zeros();
        let q = (p - 1) >> s;
        let z = (2..p)
            .find(|&z| jacobi(z as i64, p) == -1)
            .expect("odd prime has a non-residue");
        let mut m = s;
        let mut c = pow_mod(z, q, p);
        let mut t = pow_mod(r, q, p);
        let mut x = pow_mod(r, q.div_ceil(2), p);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1 << (m - i - 1), p);
            m = i;
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            x = mul_mod(x, b, p);
        }
        x
    };
    Ok(root.min(p - root))
}

/// A representation `n = u² − 2w²`, the norm of `u + w√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PellSolution {
    pub u: i64,
    pub w: i64,
    pub n_value: i64,
}

impl PellSolution {
    pub fn new(u: i64, w: i64) -> Self {
        let n = (u as i128) * (u as i128) - 2 * (w as i128) * (w as i128);
        Self {
            u,
            w,
            n_value: i64::try_from(n).expect("u² − 2w² overflows i64"),
        }
    }

    /// `u + w`, the value used for the `v`-row of the symbol matrix.
    pub fn trace_sum(&self) -> i64 {
        self.u + self.w
    }
}

/// Search bound on `w` for `u² − 2w² = n`.
///
/// Every solution class contains a member with `w ≤ √|n|`, so this bound
/// is generous.
pub fn pell_search_bound(n: i64) -> i64 {
    let half = (n.unsigned_abs() as f64 / 2.0).sqrt();
    ((1.0 + std::f64::consts::SQRT_2) * half).ceil() as i64 + 2
}

/// Minimal-`w` solution of `u² − 2w² = n` with `u ≥ 0`.
pub fn solve_x2_minus_2y2(n: i64) -> Result<PellSolution, ArithError> {
    if n == 0 {
        return Err(ArithError::NotRepresented(n));
    }
    let bound = pell_search_bound(n);
    for w in 0..=bound {
        let target = n as i128 + 2 * (w as i128) * (w as i128);
        if let Some(u) = exact_sqrt(target) {
            return Ok(PellSolution::new(u as i64, w));
        }
    }
    Err(ArithError::NotRepresented(n))
}

/// Some `(x, y)` with `l = x² + 32y²`, smallest `y` first.
pub fn solve_x2_plus_32y2(l: u64) -> Result<(u64, u64), ArithError> {
    let mut y = 0u64;
    while 32 * y * y <= l {
        if let Some(x) = exact_sqrt((l - 32 * y * y) as i128) {
            return Ok((x as u64, y));
        }
        y += 1;
    }
    Err(ArithError::NotRepresented(l as i64))
}

/// Multiplies `u + w√2` by `(1 + √2)² = 3 + 2√2`, preserving the norm.
pub fn pell_unit_apply(s: PellSolution) -> PellSolution {
    let u = 3 * s.u + 4 * s.w;
    let w = 2 * s.u + 3 * s.w;
    PellSolution { u, w, n_value: s.n_value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
    }

    #[test]
    fn primality_examples() {
        assert!(is_prime(2));
        assert!(!is_prime(1));
        assert!(trial_division_prime(999_983));
        assert!(is_prime(999_983));
        assert!(!is_prime(999_981));
        // strong pseudoprimes to small bases
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(is_prime((1 << 61) - 1));
    }

    #[test]
    fn primality_matches_trial_division() {
        for n in 0..20_000 {
            assert_eq!(is_prime(n), trial_division_prime(n), "n = {n}");
        }
    }

    #[test]
    fn sieve_examples() {
        let s = build_sieve(10).unwrap();
        assert_eq!(s.smallest_factor(9), 3);
        assert_eq!(s.smallest_factor(7), 7);
        assert_eq!(s.smallest_factor(10), 2);
        assert!(matches!(build_sieve(1), Err(ArithError::SieveTooSmall(1))));
        assert!(matches!(
            build_sieve(MAX_SIEVE_LIMIT + 1),
            Err(ArithError::SieveTooLarge(_))
        ));
    }

    #[test]
    fn sieve_invariants_up_to_ten_thousand() {
        let s = build_sieve(10_000).unwrap();
        for n in 2..=10_000u64 {
            let f = s.smallest_factor(n);
            assert_eq!(n % f, 0);
            assert!(trial_division_prime(f));
            assert_eq!(f == n, trial_division_prime(n));
        }
    }

    #[test]
    fn factoring() {
        let s = build_sieve(1000).unwrap();
        assert_eq!(factor_odd_squarefree(15, &s), Ok(vec![3, 5]));
        assert_eq!(factor_odd_squarefree(-105, &s), Ok(vec![3, 5, 7]));
        assert_eq!(
            factor_odd_squarefree(45, &s),
            Err(ArithError::NotOddSquarefree(45))
        );
        assert_eq!(
            factor_odd_squarefree(30, &s),
            Err(ArithError::NotOddSquarefree(30))
        );
        assert_eq!(
            factor_odd_squarefree(-1, &s),
            Err(ArithError::NotOddSquarefree(-1))
        );
        assert!(matches!(
            factor_odd_squarefree(1001, &s),
            Err(ArithError::OutOfSieveRange { .. })
        ));
        assert_eq!(s.factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(1, 15), 1);
        assert_eq!(jacobi(3, 7), -1);
        assert_eq!(pow_mod(3, 3, 7), 6);
        assert_eq!(jacobi(2, 17), 1);
        assert_eq!(jacobi(6, 15), 0);
        assert_eq!(jacobi(-1, 7), -1);
        assert_eq!(jacobi(-1, 5), 1);
    }

    #[test]
    fn jacobi_matches_euler_criterion() {
        for p in (3..400u64).filter(|&p| trial_division_prime(p)) {
            for a in -50i64..50 {
                let r = a.rem_euclid(p as i64) as u64;
                let euler = match pow_mod(r, (p - 1) / 2, p) {
                    0 => 0,
                    1 => 1,
                    _ => -1,
                };
                assert_eq!(jacobi(a, p), euler, "({a}/{p})");
            }
        }
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_mod(0, 13), Ok(0));
        assert_eq!(sqrt_mod(2, 17), Ok(6));
        assert_eq!(sqrt_mod(3, 7), Err(ArithError::NonResidue { a: 3, p: 7 }));
        assert_eq!(sqrt_mod(2, 97), Ok(14));
        assert_eq!(sqrt_mod(2, 89), Ok(25));
    }

    #[test]
    fn sqrt_matches_exhaustive_search() {
        for p in (3..600u64).filter(|&p| trial_division_prime(p)) {
            for a in 0..p {
                let brute = (0..=(p - 1) / 2).find(|r| r * r % p == a);
                match sqrt_mod(a as i64, p) {
                    Ok(r) => assert_eq!(Some(r), brute, "sqrt({a}) mod {p}"),
                    Err(_) => assert_eq!(brute, None, "sqrt({a}) mod {p}"),
                }
            }
        }
    }

    #[test]
    fn pell_examples() {
        let s = solve_x2_minus_2y2(7).unwrap();
        assert_eq!((s.u, s.w), (3, 1));
        let s = solve_x2_minus_2y2(17).unwrap();
        assert_eq!((s.u, s.w), (5, 2));
        let s = solve_x2_minus_2y2(-7).unwrap();
        assert_eq!((s.u, s.w), (1, 2));
        assert_eq!(solve_x2_minus_2y2(3), Err(ArithError::NotRepresented(3)));
        assert_eq!(solve_x2_minus_2y2(0), Err(ArithError::NotRepresented(0)));
    }

    #[test]
    fn pell_search_agrees_with_wide_brute_force() {
        // brute force over a window ten times wider than the solver's bound
        for n in -400i64..=400 {
            if n == 0 {
                continue;
            }
            let wide = 10 * pell_search_bound(n);
            let brute = (0..=wide).find_map(|w| {
                exact_sqrt(n as i128 + 2 * (w as i128).pow(2)).map(|u| (u as i64, w))
            });
            let got = solve_x2_minus_2y2(n).ok().map(|s| (s.u, s.w));
            assert_eq!(got, brute, "n = {n}");
        }
    }

    #[test]
    fn x2_plus_32y2_examples() {
        assert_eq!(solve_x2_plus_32y2(113), Ok((9, 1)));
        assert_eq!(solve_x2_plus_32y2(41), Ok((3, 1)));
        assert_eq!(
            solve_x2_plus_32y2(17),
            Err(ArithError::NotRepresented(17))
        );
    }

    #[test]
    fn unit_apply_examples() {
        let s = pell_unit_apply(PellSolution::new(3, 1));
        assert_eq!((s.u, s.w, s.n_value), (13, 9, 7));
        let s = pell_unit_apply(PellSolution::new(1, 0));
        assert_eq!((s.u, s.w), (3, 2));
        let s = pell_unit_apply(PellSolution::new(5, 2));
        assert_eq!((s.u, s.w), (23, 16));
        assert_eq!(PellSolution::new(23, 16).n_value, 17);
    }
}
