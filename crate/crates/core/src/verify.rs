//! Cross-module consistency suites, each reporting counterexamples rather
//! than stopping at the first failure.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{exact_sqrt, jacobi, pell_search_bound, pell_unit_apply, FactorSieve, PellSolution};
use crate::forms::{
    classify_pl, form_representation_check, narrow_class_number, p_form_is_principal,
    satisfies_1_32, FormsError,
};
use crate::fourrank::{
    build_matrix, build_matrix_with_v, four_rank_of, report_from_matrix, FieldSpec, FourRankError,
};
use crate::localsym::{hilbert, Place, SymbolValue};
use crate::survey::{congruence_table_check, SurveyError};

/// Fixed seed for sampled suites.
pub const SEED: u64 = 0x6b32_7261_6e6b;
pub const SYMBOL_SAMPLES: usize = 10_000;
const MAX_LISTED: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Symbols,
    Prop34,
    Prop44,
    Tables,
    Rankinv,
    Forms,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Symbols,
        Suite::Prop34,
        Suite::Prop44,
        Suite::Tables,
        Suite::Rankinv,
        Suite::Forms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Symbols => "symbols",
            Self::Prop34 => "prop34",
            Self::Prop44 => "prop44",
            Self::Tables => "tables",
            Self::Rankinv => "rankinv",
            Self::Forms => "forms",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub suite: Suite,
    pub max: u64,
    pub checked: u64,
    pub failures: u64,
    /// Cases outside the suite's hypotheses.
    pub skipped: u64,
    /// First few counterexamples.
    pub counterexamples: Vec<String>,
}

impl Outcome {
    fn new(suite: Suite, max: u64) -> Self {
        Self {
            suite,
            max,
            checked: 0,
            failures: 0,
            skipped: 0,
            counterexamples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.fail(describe());
        }
    }

    fn fail(&mut self, what: String) {
        self.failures += 1;
        if self.counterexamples.len() < MAX_LISTED {
            self.counterexamples.push(what);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `suite` with size parameter `max`, which must not exceed the sieve.
pub fn run(suite: Suite, max: u64, sieve: &FactorSieve) -> Result<Outcome, SurveyError> {
    if max > sieve.limit() {
        return Err(SurveyError::BeyondSieve {
            bound: max,
            limit: sieve.limit(),
        });
    }
    Ok(match suite {
        Suite::Symbols => symbols(max, SYMBOL_SAMPLES, sieve),
        Suite::Prop34 => prop34(max),
        Suite::Prop44 => prop44(max, sieve),
        Suite::Tables => tables(max, sieve)?,
        Suite::Rankinv => rank_invariance(max, sieve),
        Suite::Forms => forms(max, sieve),
    })
}

fn places_of(values: &[i64], sieve: &FactorSieve) -> Vec<Place> {
    let mut primes: Vec<u64> = vec![2];
    for &x in values {
        primes.extend(sieve.factorize(x.unsigned_abs()).into_iter().map(|(p, _)| p));
    }
    primes.sort_unstable();
    primes.dedup();
    std::iter::once(Place::Infinite)
        .chain(primes.into_iter().map(Place::Prime))
        .collect()
}

/// Product formula, symmetry and bilinearity of Hilbert symbols on
/// `samples` random triples with `1 ≤ |a|, |a′|, |b| ≤ max`.
pub fn symbols(max: u64, samples: usize, sieve: &FactorSieve) -> Outcome {
    let mut out = Outcome::new(Suite::Symbols, max);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let m = max.max(2) as i64;
    let draw = |rng: &mut ChaCha8Rng| {
        let x = rng.gen_range(1..=m);
        if rng.gen() {
            -x
        } else {
            x
        }
    };
    for _ in 0..samples {
        let (a, a2, b) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let places = places_of(&[a, a2, b], sieve);
        let product = places
            .iter()
            .fold(SymbolValue::Plus, |acc, &v| acc * hilbert(a, b, v));
        out.check(product == SymbolValue::Plus, || {
            format!("product formula fails for ({a}, {b})")
        });
        for &v in &places {
            out.check(hilbert(a, b, v) == hilbert(b, a, v), || {
                format!("({a}, {b}) not symmetric at {v:?}")
            });
            out.check(
                hilbert(a * a2, b, v) == hilbert(a, b, v) * hilbert(a2, b, v),
                || format!("bilinearity fails for {a}·{a2}, {b} at {v:?}"),
            );
        }
    }
    out
}

fn one_mod_eight_primes(max: u64) -> Vec<u64> {
    (17..=max)
        .step_by(8)
        .filter(|&n| crate::arith::is_prime(n))
        .collect()
}

/// Pairs `p < l`, both `≡ 1 (mod 8)`, `pl ≤ max`.
fn pairs(max: u64) -> Vec<(u64, u64)> {
    let primes = one_mod_eight_primes(max / 17);
    let mut out = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        for &l in &primes[i + 1..] {
            if p * l > max {
                break;
            }
            out.push((p, l));
        }
    }
    out
}

/// Exclusivity of ⟨p,−2⟩ and ⟨1,−2p⟩ and agreement with `(π/l)`, by direct
/// search for the representations where the numbers are small. Primes `p`
/// for which `px² − 2y²` is narrowly principal are skipped: there the two
/// forms are equivalent.
pub fn prop34(max: u64) -> Outcome {
    let mut out = Outcome::new(Suite::Prop34, max);
    for (p, l) in pairs(max) {
        for (p, l) in [(p, l), (l, p)] {
            if jacobi(l as i64, p) != 1 {
                continue;
            }
            match p_form_is_principal(p) {
                Ok(false) => {}
                Ok(true) | Err(FormsError::RangeExceeded(_)) => {
                    out.skipped += 1;
                    continue;
                }
                Err(e) => {
                    out.fail(format!("p = {p}: {e}"));
                    continue;
                }
            }
            let report = match narrow_class_number(8 * p) {
                Ok(r) => r,
                Err(e) => {
                    out.fail(format!("h⁺(8·{p}): {e}"));
                    continue;
                }
            };
            match form_representation_check(p, l, &report) {
                Ok(r) => out.check(r.consistent, || format!("({p}, {l}): {r:?}")),
                Err(FormsError::RangeExceeded(_)) => out.skipped += 1,
                Err(e) => out.fail(format!("({p}, {l}): {e}")),
            }
        }
    }
    out
}

/// `(v/l)` from the matrix side against `(π/l)·((1+√2)/l)` for `pl` and
/// `(π/l)` for `−pl`.
pub fn prop44(max: u64, sieve: &FactorSieve) -> Outcome {
    let mut out = Outcome::new(Suite::Prop44, max);
    for (p, l) in pairs(max) {
        for (p, l) in [(p, l), (l, p)] {
            if jacobi(l as i64, p) != 1 {
                continue;
            }
            let Ok(c) = classify_pl(p, l) else {
                out.fail(format!("classify ({p}, {l})"));
                continue;
            };
            let pi = c.pi_symbol.expect("(l/p) = +1");
            let unit = SymbolValue::from_sign(!c.l_sat_1_32);
            for (d, expected) in [((p * l) as i64, pi * unit), (-((p * l) as i64), pi)] {
                let v = FieldSpec::new(d, sieve)
                    .and_then(|s| build_matrix(&s))
                    .map(|m| m.v);
                match v {
                    Ok(v) => out.check(
                        SymbolValue::from_jacobi(jacobi(v, l)) == Some(expected),
                        || format!("d = {d}, l = {l}: (v/l) with v = {v}, expected {expected}"),
                    ),
                    Err(e) => out.fail(format!("d = {d}: {e}")),
                }
            }
        }
    }
    out
}

pub fn tables(max: u64, sieve: &FactorSieve) -> Result<Outcome, SurveyError> {
    let mut out = Outcome::new(Suite::Tables, max);
    match congruence_table_check(max, sieve) {
        Ok(r) => out.checked = r.checked,
        Err(e @ SurveyError::TableViolation { .. }) => out.fail(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Alternatives to the canonical `(u, w)` for `d = u² − 2w²`: its image
/// under the unit `3 + 2√2`, the sign change `(−u, w)`, and every other
/// solution with `u > 0` and `|w|` within the search bound.
pub fn pell_variants(d: i64) -> Vec<PellSolution> {
    let mut out: Vec<PellSolution> = Vec::new();
    let mut push = |s: PellSolution| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    if let Ok(c) = crate::arith::solve_x2_minus_2y2(d) {
        push(pell_unit_apply(c));
        push(PellSolution::new(-c.u, c.w));
    }
    for w in 0..=pell_search_bound(d) {
        if let Some(u) = exact_sqrt(d as i128 + 2 * (w as i128).pow(2)) {
            if u > 0 {
                push(PellSolution::new(u as i64, w));
                push(PellSolution::new(u as i64, -w));
            }
        }
    }
    out
}

/// The 4-rank should not depend on which representation `d = u² − 2w²`
/// supplies `v = u + w`. Checks every `d` with `|d| < max` in which 2 is a
/// norm, both signs, against [`pell_variants`]; variants with `v` not
/// coprime to `d` are skipped.
pub fn rank_invariance(max: u64, sieve: &FactorSieve) -> Outcome {
    rank_invariance_where(max, sieve, |_, _| true)
}

/// [`rank_invariance`] restricted to `u > 0` when `d > 0`. Changing the sign
/// of `v` multiplies its row by `(−d, −1)`, which lies in the row space
/// only for `d < 0`.
pub fn rank_invariance_positive_u(max: u64, sieve: &FactorSieve) -> Outcome {
    rank_invariance_where(max, sieve, |d, s| d < 0 || s.u > 0)
}

fn rank_invariance_where(
    max: u64,
    sieve: &FactorSieve,
    keep: impl Fn(i64, &PellSolution) -> bool,
) -> Outcome {
    let mut out = Outcome::new(Suite::Rankinv, max);
    for n in (3..max).step_by(2) {
        let Ok(primes) = crate::arith::factor_odd_squarefree(n as i64, sieve) else {
            continue;
        };
        if !primes.iter().all(|p| p % 8 == 1 || p % 8 == 7) {
            continue;
        }
        for d in [n as i64, -(n as i64)] {
            let reference = FieldSpec::from_primes(d, primes.clone())
                .and_then(|spec| Ok((four_rank_of(&spec)?.four_rank, spec)));
            let (reference, spec) = match reference {
                Ok(r) => r,
                Err(e) => {
                    out.fail(format!("d = {d}: {e}"));
                    continue;
                }
            };
            for s in pell_variants(d).into_iter().filter(|s| keep(d, s)) {
                let got = build_matrix_with_v(&spec, s.trace_sum(), Some(s))
                    .and_then(|m| report_from_matrix(&spec, &m))
                    .map(|r| r.four_rank);
                match got {
                    Err(FourRankError::VNotCoprime { .. }) => out.skipped += 1,
                    got => out.check(got.as_ref() == Ok(&reference), || {
                        format!(
                            "d = {d}: (u, w) = ({}, {}) gives {got:?}, canonical {reference}",
                            s.u, s.w
                        )
                    }),
                }
            }
        }
    }
    out
}

/// Classifier against the matrix for all pairs `pl ≤ max`, both ⟨1,32⟩
/// tests for primes `l ≤ max`, and `4 | h⁺(8p)` for `p ≤ max`.
pub fn forms(max: u64, sieve: &FactorSieve) -> Outcome {
    let mut out = Outcome::new(Suite::Forms, max);
    out.checked += classifier_vs_matrix(max, sieve, &mut out);
    for l in one_mod_eight_primes(max) {
        out.check(satisfies_1_32(l).is_ok(), || format!("⟨1,32⟩ routes disagree at {l}"));
    }
    for p in one_mod_eight_primes(max) {
        let h = narrow_class_number(8 * p).map(|r| r.h_plus);
        out.check(matches!(h, Ok(h) if h % 4 == 0), || format!("h⁺(8·{p}) = {h:?}"));
    }
    out
}

fn classifier_vs_matrix(max: u64, sieve: &FactorSieve, out: &mut Outcome) -> u64 {
    let mut checked = 0;
    for (p, l) in pairs(max) {
        let c = match classify_pl(p, l) {
            Ok(c) => c,
            Err(e) => {
                out.fail(format!("classify ({p}, {l}): {e}"));
                continue;
            }
        };
        let d = (p * l) as i64;
        for (d, predicted) in [(d, c.predicted_rank_pos), (-d, c.predicted_rank_neg)] {
            checked += 1;
            let actual = FieldSpec::new(d, sieve)
                .and_then(|s| four_rank_of(&s))
                .map(|r| r.four_rank);
            if actual.as_ref() != Ok(&predicted) {
                out.fail(format!("d = {d}: classifier {predicted}, matrix {actual:?}"));
            }
        }
    }
    checked
}

/// Classifier mismatches over all pairs `pl ≤ max`, as `(checked, list)`.
pub fn classifier_mismatches(max: u64, sieve: &FactorSieve) -> (u64, Vec<String>) {
    let mut out = Outcome::new(Suite::Forms, max);
    let checked = classifier_vs_matrix(max, sieve, &mut out);
    (checked, out.counterexamples)
}
