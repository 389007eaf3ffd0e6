//! Exhaustive surveys of 4-ranks over families of quadratic fields, density
//! experiments for prime pairs, and congruence-class consistency checks.
//!
//! Families are indexed by `|d|` in an inclusive range. For the two-prime
//! families `X` (`d = pl`) and `Y` (`d = −pl`), `p` always denotes the
//! smaller prime, so the classes `X_{i,j}` (`p ≡ i`, `l ≡ j mod 8`)
//! partition `X`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::arith::{factor_odd_squarefree, is_prime, jacobi, FactorSieve};
use crate::forms::{classify_pl, FormsError};
use crate::fourrank::{four_rank_of, FieldSpec, FourRankError, RankReport};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurveyError {
    #[error("invalid family bounds {min}..={max} (need 3 ≤ min ≤ max)")]
    InvalidBounds { min: u64, max: u64 },
    #[error("bound {bound} exceeds sieve limit {limit}")]
    BeyondSieve { bound: u64, limit: u64 },
    #[error("congruence filters apply only to X and Y")]
    FilterNotAllowed,
    #[error("invalid residue class ({0}, {1}) mod 8")]
    InvalidClass(u8, u8),
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("{0} is not a prime congruent to 1 mod 8")]
    NotPrimeOneModEight(u64),
    #[error("tallies cannot be merged: {0}")]
    Incompatible(String),
    #[error("d = {d}: 4-rank {found}, table predicts {expected:?}")]
    TableViolation { d: i64, found: u32, expected: Vec<u32> },
    #[error("d = {d}: {source}")]
    Rank { d: i64, source: FourRankError },
    #[error("pair ({p}, {l}): {source}")]
    Forms { p: u64, l: u64, source: FormsError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyKind {
    X,
    Y,
    #[serde(rename = "PLR")]
    Plr,
    #[serde(rename = "NPLR")]
    Nplr,
    #[serde(rename = "ODD")]
    Odd,
    #[serde(rename = "NODD")]
    Nodd,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 6] = [
        FamilyKind::X,
        FamilyKind::Y,
        FamilyKind::Plr,
        FamilyKind::Nplr,
        FamilyKind::Odd,
        FamilyKind::Nodd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::X => "X",
            Self::Y => "Y",
            Self::Plr => "PLR",
            Self::Nplr => "NPLR",
            Self::Odd => "ODD",
            Self::Nodd => "NODD",
        }
    }

    pub fn is_negative(self) -> bool {
        matches!(self, Self::Y | Self::Nplr | Self::Nodd)
    }

    /// Required number of prime factors, if fixed.
    pub fn prime_count(self) -> Option<usize> {
        match self {
            Self::X | Self::Y => Some(2),
            Self::Plr | Self::Nplr => Some(3),
            Self::Odd | Self::Nodd => None,
        }
    }

    fn signed(self, n: u64) -> i64 {
        if self.is_negative() {
            -(n as i64)
        } else {
            n as i64
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self, SurveyError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SurveyError::UnknownFamily(s.to_string()))
    }
}

/// A family of fields `Q(√d)` with `min_abs ≤ |d| ≤ max_abs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub min_abs: u64,
    pub max_abs: u64,
    /// `(i, j)`: keep only `p ≡ i`, `l ≡ j (mod 8)`, `p < l`.
    pub congruence_filter: Option<(u8, u8)>,
}

impl Family {
    pub fn new(kind: FamilyKind, min_abs: u64, max_abs: u64) -> Result<Self, SurveyError> {
        if min_abs < 3 || min_abs > max_abs || max_abs > i64::MAX as u64 {
            return Err(SurveyError::InvalidBounds {
                min: min_abs,
                max: max_abs,
            });
        }
        Ok(Self {
            kind,
            min_abs,
            max_abs,
            congruence_filter: None,
        })
    }

    pub fn with_filter(mut self, i: u8, j: u8) -> Result<Self, SurveyError> {
        if self.kind.prime_count() != Some(2) {
            return Err(SurveyError::FilterNotAllowed);
        }
        if i.is_multiple_of(2) || j.is_multiple_of(2) || i >= 8 || j >= 8 {
            return Err(SurveyError::InvalidClass(i, j));
        }
        self.congruence_filter = Some((i, j));
        Ok(self)
    }

    /// Odd prime factors of `n` when `±n` belongs to the family.
    pub fn admit(&self, n: u64, sieve: &FactorSieve) -> Option<Vec<u64>> {
        if n.is_multiple_of(2) || n < self.min_abs || n > self.max_abs {
            return None;
        }
        let primes = factor_odd_squarefree(n as i64, sieve).ok()?;
        if let Some(k) = self.kind.prime_count() {
            if primes.len() != k {
                return None;
            }
        }
        if let Some((i, j)) = self.congruence_filter {
            if residue_pair(&primes) != (i, j) {
                return None;
            }
        }
        Some(primes)
    }

    fn check_sieve(&self, sieve: &FactorSieve) -> Result<(), SurveyError> {
        if self.max_abs > sieve.limit() {
            return Err(SurveyError::BeyondSieve {
                bound: self.max_abs,
                limit: sieve.limit(),
            });
        }
        Ok(())
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut lo = self.min_abs;
        while lo <= self.max_abs {
            let hi = self.max_abs.min(lo.saturating_add(CHUNK - 1));
            out.push((lo, hi));
            if hi == u64::MAX {
                break;
            }
            lo = hi + 1;
        }
        out
    }
}

fn residue_pair(primes: &[u64]) -> (u8, u8) {
    ((primes[0] % 8) as u8, (primes[1] % 8) as u8)
}

/// Counts of 4-rank values over a family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyTally {
    pub family: Family,
    pub total: u64,
    pub counts: BTreeMap<u32, u64>,
}

impl SurveyTally {
    pub fn empty(family: Family) -> Self {
        Self {
            family,
            total: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, four_rank: u32) {
        self.total += 1;
        *self.counts.entry(four_rank).or_insert(0) += 1;
    }

    pub fn count(&self, four_rank: u32) -> u64 {
        self.counts.get(&four_rank).copied().unwrap_or(0)
    }

    pub fn proportion(&self, four_rank: u32) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(four_rank) as f64 / self.total as f64
        }
    }

    /// Combines tallies over adjacent ranges `[a, b]` and `[b+1, c]`.
    pub fn merge(&self, next: &SurveyTally) -> Result<SurveyTally, SurveyError> {
        let (f, g) = (&self.family, &next.family);
        if f.kind != g.kind || f.congruence_filter != g.congruence_filter {
            return Err(SurveyError::Incompatible("different families".into()));
        }
        if f.max_abs.checked_add(1) != Some(g.min_abs) {
            return Err(SurveyError::Incompatible(format!(
                "ranges {}..={} and {}..={} are not adjacent",
                f.min_abs, f.max_abs, g.min_abs, g.max_abs
            )));
        }
        let mut out = self.clone();
        out.family.max_abs = g.max_abs;
        out.absorb(next);
        Ok(out)
    }

    fn absorb(&mut self, other: &SurveyTally) {
        self.total += other.total;
        for (&k, &c) in &other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
    }

    /// Sum of disjoint tallies of one kind, e.g. the classes `X_{i,j}`.
    pub fn combine<'a>(
        family: Family,
        parts: impl IntoIterator<Item = &'a SurveyTally>,
    ) -> SurveyTally {
        let mut out = SurveyTally::empty(family);
        for t in parts {
            out.absorb(t);
        }
        out
    }
}

fn rank_of(kind: FamilyKind, n: u64, primes: Vec<u64>) -> Result<u32, SurveyError> {
    let d = kind.signed(n);
    let spec = FieldSpec::from_primes(d, primes).map_err(|source| SurveyError::Rank { d, source })?;
    four_rank_of(&spec)
        .map(|r| r.four_rank)
        .map_err(|source| SurveyError::Rank { d, source })
}

/// Tallies the 4-ranks of every member of `family`.
///
/// Work is split into contiguous chunks evaluated on the current rayon
/// pool; the result does not depend on the number of threads.
pub fn tally(family: &Family, sieve: &FactorSieve) -> Result<SurveyTally, SurveyError> {
    family.check_sieve(sieve)?;
    let parts: Vec<SurveyTally> = family
        .chunks()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut t = SurveyTally::empty(Family {
                min_abs: lo,
                max_abs: hi,
                ..*family
            });
            for n in lo..=hi {
                if let Some(primes) = family.admit(n, sieve) {
                    t.record(rank_of(family.kind, n, primes)?);
                }
            }
            Ok(t)
        })
        .collect::<Result<_, SurveyError>>()?;
    Ok(SurveyTally::combine(*family, &parts))
}

/// Full reports for every member of `family`, in increasing `|d|`.
pub fn reports(family: &Family, sieve: &FactorSieve) -> Result<Vec<RankReport>, SurveyError> {
    family.check_sieve(sieve)?;
    let parts: Vec<Vec<RankReport>> = family
        .chunks()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut v = Vec::new();
            for n in lo..=hi {
                if let Some(primes) = family.admit(n, sieve) {
                    let d = family.kind.signed(n);
                    let report = FieldSpec::from_primes(d, primes)
                        .and_then(|spec| four_rank_of(&spec))
                        .map_err(|source| SurveyError::Rank { d, source })?;
                    v.push(report);
                }
            }
            Ok(v)
        })
        .collect::<Result<_, SurveyError>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Tallies of the sixteen classes `X_{i,j}` (or `Y_{i,j}`) in one pass,
/// keyed by `(i, j)`.
pub fn class_tallies(
    family: &Family,
    sieve: &FactorSieve,
) -> Result<BTreeMap<(u8, u8), SurveyTally>, SurveyError> {
    if family.kind.prime_count() != Some(2) {
        return Err(SurveyError::FilterNotAllowed);
    }
    family.check_sieve(sieve)?;
    let base = Family {
        congruence_filter: None,
        ..*family
    };
    let hits: Vec<Vec<((u8, u8), u32)>> = base
        .chunks()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut v = Vec::new();
            for n in lo..=hi {
                if let Some(primes) = base.admit(n, sieve) {
                    let class = residue_pair(&primes);
                    v.push((class, rank_of(base.kind, n, primes)?));
                }
            }
            Ok(v)
        })
        .collect::<Result<_, SurveyError>>()?;
    let mut out = BTreeMap::new();
    for i in [1u8, 3, 5, 7] {
        for j in [1u8, 3, 5, 7] {
            out.insert((i, j), SurveyTally::empty(base.with_filter(i, j)?));
        }
    }
    for (class, r) in hits.into_iter().flatten() {
        out.get_mut(&class).expect("odd residues").record(r);
    }
    Ok(out)
}

fn serialize_ratios<S: Serializer>(
    m: &Densities,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, r)| (k, r.to_string())))
}

/// Exact density of each 4-rank value.
pub type Densities = BTreeMap<u32, Ratio<u64>>;

/// Observed proportions of 4-rank values against predicted densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityComparison {
    pub samples: u64,
    pub observed: BTreeMap<u32, f64>,
    #[serde(serialize_with = "serialize_ratios")]
    pub theoretical: Densities,
    /// `(observed − θ) / √(θ(1−θ)/n)` for every rank seen or predicted.
    pub z_scores: BTreeMap<u32, f64>,
}

impl DensityComparison {
    pub fn new(counts: &BTreeMap<u32, u64>, theoretical: Densities) -> Self {
        let samples: u64 = counts.values().sum();
        let n = samples.max(1) as f64;
        let observed: BTreeMap<u32, f64> =
            counts.iter().map(|(&k, &c)| (k, c as f64 / n)).collect();
        let mut z_scores = BTreeMap::new();
        for &k in observed.keys().chain(theoretical.keys()) {
            let obs = observed.get(&k).copied().unwrap_or(0.0);
            let theta = theoretical
                .get(&k)
                .map(|r| *r.numer() as f64 / *r.denom() as f64)
                .unwrap_or(0.0);
            let var = theta * (1.0 - theta) / n;
            let z = if var > 0.0 {
                (obs - theta) / var.sqrt()
            } else if obs == theta {
                0.0
            } else {
                f64::INFINITY
            };
            z_scores.insert(k, z);
        }
        Self {
            samples,
            observed,
            theoretical,
            z_scores,
        }
    }

    pub fn from_tally(t: &SurveyTally, theoretical: Densities) -> Self {
        Self::new(&t.counts, theoretical)
    }

    /// Largest `|z|` over all ranks.
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.values().fold(0.0, |m, z| m.max(z.abs()))
    }
}

fn ratios(pairs: &[(u32, u64, u64)]) -> Densities {
    pairs
        .iter()
        .map(|&(k, n, d)| (k, Ratio::new(n, d)))
        .collect()
}

/// Primes `l ≡ 1 (mod 8)` with `(l/p) = +1` (A) or `−1` (B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrimeSet {
    A,
    B,
}

impl FromStr for PrimeSet {
    type Err = SurveyError;
    fn from_str(s: &str) -> Result<Self, SurveyError> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            _ => Err(SurveyError::UnknownFamily(s.to_string())),
        }
    }
}

impl PrimeSet {
    /// Limiting densities for `Q(√pl)` and, for A, `Q(√−pl)`.
    pub fn theory(self) -> (Densities, Option<Densities>) {
        match self {
            Self::A => (
                ratios(&[(1, 3, 4), (2, 1, 4)]),
                Some(ratios(&[(1, 1, 2), (2, 1, 2)])),
            ),
            Self::B => (ratios(&[(0, 1, 2), (1, 1, 2)]), None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub p: u64,
    pub family: PrimeSet,
    pub l_max: u64,
    /// `Q(√pl)`.
    pub positive: DensityComparison,
    /// `Q(√−pl)`; only predicted for A.
    pub negative: Option<DensityComparison>,
}

/// Classifies `Q(√±pl)` for every prime `l ≤ l_max` of the chosen set.
pub fn density_experiment(
    p: u64,
    set: PrimeSet,
    l_max: u64,
    sieve: &FactorSieve,
) -> Result<DensityReport, SurveyError> {
    if p % 8 != 1 || !is_prime(p) {
        return Err(SurveyError::NotPrimeOneModEight(p));
    }
    if l_max > sieve.limit() {
        return Err(SurveyError::BeyondSieve {
            bound: l_max,
            limit: sieve.limit(),
        });
    }
    let want = match set {
        PrimeSet::A => 1,
        PrimeSet::B => -1,
    };
    let mut pos = BTreeMap::new();
    let mut neg = BTreeMap::new();
    for l in sieve.primes(l_max) {
        if l % 8 != 1 || l == p || jacobi(l as i64, p) != want {
            continue;
        }
        let c = classify_pl(p, l).map_err(|source| SurveyError::Forms { p, l, source })?;
        *pos.entry(c.predicted_rank_pos).or_insert(0u64) += 1;
        *neg.entry(c.predicted_rank_neg).or_insert(0u64) += 1;
    }
    let (theory_pos, theory_neg) = set.theory();
    Ok(DensityReport {
        p,
        family: set,
        l_max,
        positive: DensityComparison::new(&pos, theory_pos),
        negative: theory_neg.map(|t| DensityComparison::new(&neg, t)),
    })
}

/// A cell of the congruence tables: sign of `d`, residues of `p ≤ l`
/// classes mod 8, and `(l/p)` when it matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TableCell {
    pub negative: bool,
    pub p_class: u8,
    pub l_class: u8,
    pub legendre: Option<i8>,
}

impl TableCell {
    /// Orders the pair by residue class; in a row `1, j` the prime `≡ 1` is
    /// `p` and the Legendre symbol is `(l/p)`.
    pub fn of(negative: bool, p: u64, l: u64) -> Self {
        let (p, l) = if (p % 8) <= (l % 8) { (p, l) } else { (l, p) };
        let legendre = (p % 8 == 1).then(|| jacobi(l as i64, p) as i8);
        Self {
            negative,
            p_class: (p % 8) as u8,
            l_class: (l % 8) as u8,
            legendre,
        }
    }

    /// Admissible 4-ranks.
    pub fn predicted(&self) -> &'static [u32] {
        let pos = !self.negative;
        match (self.p_class, self.l_class, self.legendre) {
            (3, 3, _) => if pos { &[0] } else { &[1] },
            (5, 5, _) | (7, 7, _) => &[1],
            (3, 5, _) | (3, 7, _) | (5, 7, _) => if pos { &[1] } else { &[0] },
            (1, 3 | 5, Some(-1)) => &[0],
            (1, 3 | 5, _) => &[1],
            (1, 7, Some(-1)) => if pos { &[1] } else { &[0] },
            (1, 7, _) => if pos { &[1, 2] } else { &[0, 1] },
            (1, 1, Some(-1)) => if pos { &[0, 1] } else { &[1] },
            (1, 1, _) => &[1, 2],
            _ => unreachable!("odd residue classes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCheckReport {
    pub bound: u64,
    pub checked: u64,
    /// Per-cell 4-rank counts, including the split cells.
    pub cells: Vec<(TableCell, BTreeMap<u32, u64>)>,
}

/// Checks every `d = ±pl` with `pl < bound` against its congruence cell.
pub fn congruence_table_check(
    bound: u64,
    sieve: &FactorSieve,
) -> Result<TableCheckReport, SurveyError> {
    let mut cells: BTreeMap<TableCell, BTreeMap<u32, u64>> = BTreeMap::new();
    let mut checked = 0;
    if bound > 15 {
        for kind in [FamilyKind::X, FamilyKind::Y] {
            let family = Family::new(kind, 15, bound - 1)?;
            family.check_sieve(sieve)?;
            for n in family.min_abs..=family.max_abs {
                let Some(primes) = family.admit(n, sieve) else {
                    continue;
                };
                let cell = TableCell::of(kind.is_negative(), primes[0], primes[1]);
                let r = rank_of(kind, n, primes)?;
                let expected = cell.predicted();
                if !expected.contains(&r) {
                    return Err(SurveyError::TableViolation {
                        d: kind.signed(n),
                        found: r,
                        expected: expected.to_vec(),
                    });
                }
                *cells.entry(cell).or_default().entry(r).or_insert(0) += 1;
                checked += 1;
            }
        }
    }
    Ok(TableCheckReport {
        bound,
        checked,
        cells: cells.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBreakdown {
    pub kind: FamilyKind,
    pub overall: DensityComparison,
    /// Per class `i` of the smaller prime.
    pub by_class: BTreeMap<u8, DensityComparison>,
}

/// Limiting densities over all of `X` or `Y`, then per class `X_i`/`Y_i`.
pub fn class_breakdown_theory(kind: FamilyKind) -> (Densities, BTreeMap<u8, Densities>) {
    match kind {
        FamilyKind::X => (
            ratios(&[(0, 13, 64), (1, 97, 128), (2, 5, 128)]),
            BTreeMap::from([
                (1, ratios(&[(0, 5, 16), (1, 19, 32), (2, 3, 32)])),
                (3, ratios(&[(0, 3, 8), (1, 5, 8)])),
                (5, ratios(&[(0, 1, 8), (1, 7, 8)])),
                (7, ratios(&[(1, 15, 16), (2, 1, 16)])),
            ]),
        ),
        FamilyKind::Y => (
            ratios(&[(0, 37, 64), (1, 13, 32), (2, 1, 64)]),
            BTreeMap::from([
                (1, ratios(&[(0, 3, 8), (1, 9, 16), (2, 1, 16)])),
                (3, ratios(&[(0, 5, 8), (1, 3, 8)])),
                (5, ratios(&[(0, 5, 8), (1, 3, 8)])),
                (7, ratios(&[(0, 11, 16), (1, 5, 16)])),
            ]),
        ),
        _ => (BTreeMap::new(), BTreeMap::new()),
    }
}

/// Compares class tallies of `X` or `Y` with their limiting densities.
/// Convergence is slow, so nothing is asserted here.
pub fn class_breakdown_check(
    classes: &BTreeMap<(u8, u8), SurveyTally>,
) -> Result<ClassBreakdown, SurveyError> {
    let first = classes
        .values()
        .next()
        .ok_or_else(|| SurveyError::Incompatible("no tallies".into()))?;
    let kind = first.family.kind;
    let bounds = (first.family.min_abs, first.family.max_abs);
    if kind.prime_count() != Some(2)
        || classes
            .values()
            .any(|t| t.family.kind != kind || (t.family.min_abs, t.family.max_abs) != bounds)
    {
        return Err(SurveyError::Incompatible(
            "class tallies must share kind and bounds".into(),
        ));
    }
    let (overall_theory, class_theory) = class_breakdown_theory(kind);
    let all = Family::new(kind, bounds.0, bounds.1)?;
    let overall = SurveyTally::combine(all, classes.values());
    let mut by_class = BTreeMap::new();
    for (i, theory) in class_theory {
        let sub = SurveyTally::combine(
            all,
            classes
                .iter()
                .filter(|((ci, _), _)| *ci == i)
                .map(|(_, t)| t),
        );
        by_class.insert(i, DensityComparison::from_tally(&sub, theory));
    }
    Ok(ClassBreakdown {
        kind,
        overall: DensityComparison::from_tally(&overall, overall_theory),
        by_class,
    })
}
