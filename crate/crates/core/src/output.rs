//! Flat per-field records and tally documents for CSV and JSON output.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::fourrank::RankReport;
use crate::survey::SurveyTally;

pub const CSV_HEADER: &str = "d,t,primes,two_is_norm,minus_one_is_norm,v,rank,a,a_prime,four_rank";

mod semicolon {
    use super::*;

    pub fn serialize<S: Serializer>(primes: &[u64], s: S) -> Result<S::Ok, S::Error> {
        let joined: Vec<String> = primes.iter().map(u64::to_string).collect();
        s.serialize_str(&joined.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';')
            .map(|p| p.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// One field's result; `primes` is written semicolon-joined in both formats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub d: i64,
    pub t: usize,
    #[serde(with = "semicolon")]
    pub primes: Vec<u64>,
    pub two_is_norm: bool,
    pub minus_one_is_norm: bool,
    pub v: i64,
    pub rank: usize,
    pub a: u8,
    pub a_prime: u8,
    pub four_rank: u32,
}

impl From<&RankReport> for OutputRecord {
    fn from(r: &RankReport) -> Self {
        Self {
            d: r.d,
            t: r.t,
            primes: r.primes.clone(),
            two_is_norm: r.two_is_norm,
            minus_one_is_norm: r.minus_one_is_norm,
            v: r.v,
            rank: r.rank,
            a: r.a,
            a_prime: r.a_prime,
            four_rank: r.four_rank,
        }
    }
}

pub fn write_csv<W: io::Write>(records: &[OutputRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<OutputRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn to_csv_string(records: &[OutputRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

/// Tally as written to JSON; counts for ranks 0 to 3 are always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyDocument {
    pub family: String,
    pub min: u64,
    pub max: u64,
    pub total: u64,
    pub counts: BTreeMap<String, u64>,
}

impl From<&SurveyTally> for TallyDocument {
    fn from(t: &SurveyTally) -> Self {
        let mut counts: BTreeMap<String, u64> = (0..=3).map(|k| (k.to_string(), 0)).collect();
        for (k, c) in &t.counts {
            counts.insert(k.to_string(), *c);
        }
        Self {
            family: t.family.kind.name().to_string(),
            min: t.family.min_abs,
            max: t.family.max_abs,
            total: t.total,
            counts,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::build_sieve;
    use crate::fourrank::four_rank;
    use crate::survey::{tally, Family, FamilyKind};
    use proptest::prelude::*;

    fn record() -> impl Strategy<Value = OutputRecord> {
        (
            any::<i64>(),
            prop::collection::vec(3u64..1_000_000, 1..6),
            any::<bool>(),
            any::<bool>(),
            any::<i64>(),
            0usize..9,
            0u8..2,
            0u8..3,
            0u32..8,
        )
            .prop_map(|(d, primes, two, minus_one, v, rank, a, a_prime, four_rank)| {
                OutputRecord {
                    d,
                    t: primes.len(),
                    primes,
                    two_is_norm: two,
                    minus_one_is_norm: minus_one,
                    v,
                    rank,
                    a,
                    a_prime,
                    four_rank,
                }
            })
    }

    proptest! {
        #[test]
        fn csv_json_round_trip(records in prop::collection::vec(record(), 0..20)) {
            let csv = to_csv_string(&records);
            let back = read_csv(csv.as_bytes()).unwrap();
            prop_assert_eq!(&back, &records);
            let json = serde_json::to_string(&back).unwrap();
            let again: Vec<OutputRecord> = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&again, &records);
            prop_assert_eq!(to_csv_string(&again), csv);
        }
    }

    #[test]
    fn csv_layout() {
        let s = build_sieve(1000).unwrap();
        let r = OutputRecord::from(&four_rank(-15, &s).unwrap());
        let text = to_csv_string(&[r]);
        let mut lines = text.split('\n');
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert!(row.starts_with("-15,2,3;5,"), "{row}");
        assert!(row.ends_with(",0"), "{row}");
        assert!(!text.contains('\r'));
        assert_eq!(lines.next(), Some(""));
    }

    #[test]
    fn tally_document_is_zero_filled() {
        let s = build_sieve(100).unwrap();
        let t = tally(&Family::new(FamilyKind::Odd, 3, 9).unwrap(), &s).unwrap();
        let doc = TallyDocument::from(&t);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.starts_with(r#"{"family":"ODD","min":3,"max":9,"total":3,"counts":{"0":"#), "{json}");
        assert_eq!(doc.counts.len(), 4);
        assert_eq!(doc.counts.values().sum::<u64>(), 3);
    }
}
