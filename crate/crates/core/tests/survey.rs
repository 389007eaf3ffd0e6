use std::collections::BTreeMap;

use num_rational::Ratio;

use k2rank::arith::build_sieve;
use k2rank::survey::{
    class_tallies, class_breakdown_check, class_breakdown_theory, tally, Family, FamilyKind, TableCell,
};

type Dist = BTreeMap<u32, Ratio<u64>>;

fn dist(pairs: &[(u32, u64, u64)]) -> Dist {
    pairs.iter().map(|&(k, n, d)| (k, Ratio::new(n, d))).collect()
}

fn add_scaled(acc: &mut Dist, d: &Dist, w: Ratio<u64>) {
    for (&k, &v) in d {
        *acc.entry(k).or_insert(Ratio::new(0, 1)) += v * w;
    }
}

/// Rank distribution inside one congruence cell: single-valued cells from
/// the tables, the `1,7` split evenly, and the `1,1` cells from the two
/// limiting densities for `±pl` with `p, l ≡ 1 (mod 8)`.
fn cell_dist(negative: bool, i: u8, j: u8, legendre: Option<i8>) -> Dist {
    let cell = TableCell {
        negative,
        p_class: i.min(j),
        l_class: i.max(j),
        legendre,
    };
    match (cell.p_class, cell.l_class, legendre, negative) {
        (1, 1, Some(1), false) => dist(&[(1, 3, 4), (2, 1, 4)]),
        (1, 1, Some(1), true) => dist(&[(1, 1, 2), (2, 1, 2)]),
        (1, 1, Some(-1), false) => dist(&[(0, 1, 2), (1, 1, 2)]),
        _ => {
            let ranks = cell.predicted();
            ranks
                .iter()
                .map(|&k| (k, Ratio::new(1, ranks.len() as u64)))
                .collect()
        }
    }
}

fn class_dist(negative: bool, i: u8) -> Dist {
    let mut out = Dist::new();
    for j in [1u8, 3, 5, 7] {
        let legendres: &[Option<i8>] = if i == 1 || j == 1 {
            &[Some(1), Some(-1)]
        } else {
            &[None]
        };
        let w = Ratio::new(1, 4 * legendres.len() as u64);
        for &l in legendres {
            add_scaled(&mut out, &cell_dist(negative, i, j, l), w);
        }
    }
    out.retain(|_, v| *v.numer() != 0);
    out
}

#[test]
fn x_breakdown_follows_from_the_tables() {
    let (overall, by_class) = class_breakdown_theory(FamilyKind::X);
    let mut total = Dist::new();
    for i in [1u8, 3, 5, 7] {
        let d = class_dist(false, i);
        assert_eq!(d, by_class[&i], "X_{i}");
        add_scaled(&mut total, &d, Ratio::new(1, 4));
    }
    assert_eq!(total, overall);
}

#[test]
fn y_breakdown_differs_from_the_tables_only_in_y1() {
    let (overall, by_class) = class_breakdown_theory(FamilyKind::Y);
    let mut total = Dist::new();
    for i in [1u8, 3, 5, 7] {
        let d = class_dist(true, i);
        if i == 1 {
            // The Y_{1,7} cell with (l/p) = −1 is rank 0 only, giving 7/16.
            assert_eq!(d, dist(&[(0, 7, 16), (1, 1, 2), (2, 1, 16)]));
            assert_ne!(d, by_class[&1]);
        } else {
            assert_eq!(d, by_class[&i], "Y_{i}");
        }
        add_scaled(&mut total, &d, Ratio::new(1, 4));
    }
    assert_eq!(total, dist(&[(0, 19, 32), (1, 25, 64), (2, 1, 64)]));
    assert_ne!(total, overall);
}

#[test]
fn class_proportions_at_one_million() {
    let sieve = build_sieve(1_000_000).unwrap();
    for kind in [FamilyKind::X, FamilyKind::Y] {
        let f = Family::new(kind, 15, 999_999).unwrap();
        let classes = class_tallies(&f, &sieve).unwrap();
        let report = class_breakdown_check(&classes).unwrap();
        assert_eq!(report.overall.samples, 168_330);
        for (i, cmp) in &report.by_class {
            let derived = class_dist(kind == FamilyKind::Y, *i);
            for (k, theta) in derived {
                let theta = *theta.numer() as f64 / *theta.denom() as f64;
                let obs = cmp.observed.get(&k).copied().unwrap_or(0.0);
                assert!((obs - theta).abs() < 0.02, "{kind}_{i} rank {k}: {obs} vs {theta}");
            }
        }
        let partition: u64 = classes.values().map(|t| t.total).sum();
        assert_eq!(partition, tally(&f, &sieve).unwrap().total);
    }
}

mod partition {
    use std::sync::OnceLock;

    use proptest::prelude::*;

    use k2rank::arith::{build_sieve, FactorSieve};
    use k2rank::survey::{tally, Family, FamilyKind, SurveyTally};

    fn sieve() -> &'static FactorSieve {
        static S: OnceLock<FactorSieve> = OnceLock::new();
        S.get_or_init(|| build_sieve(40_000).unwrap())
    }

    fn kind() -> impl Strategy<Value = FamilyKind> {
        prop::sample::select(FamilyKind::ALL.to_vec())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn merging_adjacent_ranges_equals_whole(kind in kind(), a in 3u64..40_000, b in 3u64..40_000, c in 3u64..40_000) {
            let mut v = [a, b, c];
            v.sort_unstable();
            let [lo, mid, hi] = v;
            prop_assume!(mid < hi);
            let t = |x, y| tally(&Family::new(kind, x, y).unwrap(), sieve()).unwrap();
            let whole = t(lo, hi);
            let merged = t(lo, mid).merge(&t(mid + 1, hi)).unwrap();
            prop_assert_eq!(&merged, &whole);
            prop_assert_eq!(whole.counts.values().sum::<u64>(), whole.total);
        }

        #[test]
        fn tally_ignores_thread_count(kind in kind(), threads in 1usize..6) {
            let f = Family::new(kind, 3, 40_000).unwrap();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let t = pool.install(|| tally(&f, sieve()).unwrap());
            prop_assert_eq!(serde_json::to_string(&t).unwrap(), serde_json::to_string(&tally(&f, sieve()).unwrap()).unwrap());
        }
    }

    #[test]
    fn x_is_the_union_of_its_classes() {
        for kind in [FamilyKind::X, FamilyKind::Y] {
            let f = Family::new(kind, 15, 40_000).unwrap();
            let mut parts = Vec::new();
            for i in [1u8, 3, 5, 7] {
                let row: Vec<SurveyTally> = [1u8, 3, 5, 7]
                    .iter()
                    .map(|&j| tally(&f.with_filter(i, j).unwrap(), sieve()).unwrap())
                    .collect();
                parts.push(SurveyTally::combine(f, &row));
            }
            assert_eq!(SurveyTally::combine(f, &parts), tally(&f, sieve()).unwrap());
        }
    }
}
