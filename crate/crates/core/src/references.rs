//! Column-attribute references in cell source.
//!
//! An attribute is referenced when its name occurs with no identifier
//! character (`[A-Za-z0-9_]`) immediately before or after it. String literals
//! and comments count, so `df["DepDel15"]` references `DepDel15` while
//! `OriginCityName` does not reference `Origin`.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ExecutionLog, Schema};
use crate::percent::percent;

pub(crate) fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// True when `needle` occurs in `haystack` with non-identifier characters (or
/// the text edge) on both sides.
pub(crate) fn occurs_bounded(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let bytes = haystack.as_bytes();
    haystack.match_indices(needle).any(|(start, m)| {
        let end = start + m.len();
        let left_ok = start == 0 || !is_ident_byte(bytes[start - 1]);
        let right_ok = end == bytes.len() || !is_ident_byte(bytes[end]);
        left_ok && right_ok
    })
}

/// Precomputed matcher for one schema.
#[derive(Debug, Clone)]
pub struct ReferenceMatcher<'s> {
    schema: &'s Schema,
    /// Attributes made only of identifier characters, by name: matched by
    /// splitting source into maximal identifier tokens.
    token_attrs: HashMap<&'s str, usize>,
    /// Everything else, matched by bounded substring search.
    other_attrs: Vec<usize>,
}

impl<'s> ReferenceMatcher<'s> {
    pub fn new(schema: &'s Schema) -> Self {
        let mut token_attrs = HashMap::new();
        let mut other_attrs = Vec::new();
        for (i, attr) in schema.attributes().iter().enumerate() {
            if attr.bytes().all(is_ident_byte) {
                token_attrs.insert(attr.as_str(), i);
            } else {
                other_attrs.push(i);
            }
        }
        ReferenceMatcher {
            schema,
            token_attrs,
            other_attrs,
        }
    }

    /// Schema positions of the referenced attributes, ascending.
    pub fn positions(&self, source: &str) -> BTreeSet<usize> {
        let mut found = BTreeSet::new();
        if !self.token_attrs.is_empty() {
            for token in source.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
                if let Some(&i) = self.token_attrs.get(token) {
                    found.insert(i);
                }
            }
        }
        for &i in &self.other_attrs {
            if occurs_bounded(source, &self.schema.attributes()[i]) {
                found.insert(i);
            }
        }
        found
    }

    pub fn extract(&self, source: &str) -> BTreeSet<String> {
        self.positions(source)
            .into_iter()
            .map(|i| self.schema.attributes()[i].clone())
            .collect()
    }
}

/// Attributes of `schema` referenced by `source`.
pub fn extract_references(source: &str, schema: &Schema) -> BTreeSet<String> {
    ReferenceMatcher::new(schema).extract(source)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeShare {
    pub attribute: String,
    pub runs_referencing: u64,
    pub total_runs: u64,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserReferences {
    pub user_id: String,
    /// Schema positions referenced by each run, in log order.
    pub per_run: Vec<BTreeSet<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceIndex {
    pub total_runs: u64,
    pub per_user: Vec<UserReferences>,
    /// Every schema attribute, by share descending then schema order.
    pub shares: Vec<AttributeShare>,
}

/// Per-user reference sets without the pooled shares.
pub fn user_references(log: &ExecutionLog, matcher: &ReferenceMatcher<'_>) -> UserReferences {
    UserReferences {
        user_id: log.user_id().to_string(),
        per_run: log.runs().iter().map(|r| matcher.positions(&r.source)).collect(),
    }
}

/// Share of all runs, pooled over users, that reference each attribute.
pub fn reference_distribution(logs: &[ExecutionLog], schema: &Schema) -> Result<ReferenceIndex> {
    let matcher = ReferenceMatcher::new(schema);
    let per_user: Vec<UserReferences> = logs.iter().map(|l| user_references(l, &matcher)).collect();
    let total_runs: u64 = per_user.iter().map(|u| u.per_run.len() as u64).sum();
    if total_runs == 0 {
        return Err(Error::NoRuns);
    }
    let mut counts = vec![0u64; schema.attributes().len()];
    for set in per_user.iter().flat_map(|u| &u.per_run) {
        for &i in set {
            counts[i] += 1;
        }
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let shares = order
        .into_iter()
        .map(|i| AttributeShare {
            attribute: schema.attributes()[i].clone(),
            runs_referencing: counts[i],
            total_runs,
            pct: percent(counts[i], total_runs).unwrap_or(0.0),
        })
        .collect();
    Ok(ReferenceIndex {
        total_runs,
        per_user,
        shares,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CellRun;
    use chrono::{TimeDelta, TimeZone, Utc};
    use proptest::prelude::*;

    fn schema(attrs: &[&str]) -> Schema {
        Schema::new(attrs.iter().copied()).unwrap()
    }

    fn log(sources: &[&str]) -> ExecutionLog {
        let t0 = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
        ExecutionLog::new(
            "u",
            sources
                .iter()
                .enumerate()
                .map(|(i, s)| CellRun::ok(i as u64, t0 + TimeDelta::seconds(i as i64), *s))
                .collect(),
        )
        .unwrap()
    }

    // Character-by-character scan at every position.
    fn naive(source: &str, attrs: &[&str]) -> BTreeSet<String> {
        let s: Vec<char> = source.chars().collect();
        let word = |c: char| c.is_ascii_alphanumeric() || c == '_';
        let mut out = BTreeSet::new();
        for a in attrs {
            let a: Vec<char> = a.chars().collect();
            if a.is_empty() || a.len() > s.len() {
                continue;
            }
            for start in 0..=s.len() - a.len() {
                if s[start..start + a.len()] != a[..] {
                    continue;
                }
                let left = start == 0 || !word(s[start - 1]);
                let right = start + a.len() == s.len() || !word(s[start + a.len()]);
                if left && right {
                    out.insert(a.iter().collect());
                    break;
                }
            }
        }
        out
    }

    #[test]
    fn quoted_reference() {
        let s = schema(&["DepDel15", "Origin"]);
        assert_eq!(extract_references(r#"df["DepDel15"]"#, &s), BTreeSet::from(["DepDel15".to_string()]));
    }

    #[test]
    fn right_boundary_violation() {
        let s = schema(&["DepDel15"]);
        assert!(extract_references("DepDel15x = 1", &s).is_empty());
        assert!(extract_references("xDepDel15 = 1", &s).is_empty());
        assert!(extract_references("depdel15", &s).is_empty());
    }

    #[test]
    fn prefix_nested_names() {
        let s = schema(&["Origin", "OriginCityName"]);
        assert_eq!(
            extract_references("df.OriginCityName", &s),
            BTreeSet::from(["OriginCityName".to_string()])
        );
        assert_eq!(extract_references("df.Origin + df.OriginCityName", &s).len(), 2);
    }

    #[test]
    fn non_identifier_attribute_names() {
        let s = schema(&["Dep Delay", "A-B"]);
        assert_eq!(extract_references("df['Dep Delay']", &s).len(), 1);
        assert!(extract_references("df['Dep Delays']", &s).is_empty());
        assert_eq!(extract_references("x=A-B", &s).len(), 1);
    }

    #[test]
    fn distribution_examples() {
        let s = schema(&["Origin", "Distance"]);
        let idx = reference_distribution(&[log(&["df.Origin", "x", "y", "z"])], &s).unwrap();
        assert_eq!(idx.shares[0].attribute, "Origin");
        assert_eq!(idx.shares[0].pct, 25.0);
        assert_eq!(idx.shares[1].attribute, "Distance");
        assert_eq!(idx.shares[1].pct, 0.0);
    }

    #[test]
    fn repeated_occurrences_count_once_per_run() {
        let s = schema(&["A"]);
        let idx = reference_distribution(&[log(&["A A A", "b"])], &s).unwrap();
        assert_eq!(idx.shares[0].runs_referencing, 1);
    }

    #[test]
    fn ties_follow_schema_order() {
        let s = schema(&["B", "A", "C"]);
        let idx = reference_distribution(&[log(&["A B", "C"])], &s).unwrap();
        let names: Vec<&str> = idx.shares.iter().map(|a| a.attribute.as_str()).collect();
        assert_eq!(names, ["B", "A", "C"]);
    }

    #[test]
    fn target_attribute_tops_the_ranking() {
        let s = schema(&["DayOfWeek", "Distance", "Origin", "DepDel15"]);
        let idx = reference_distribution(
            &[log(&[
                "y = df['DepDel15']",
                "df.groupby('Origin')['DepDel15'].mean()",
                "df['DepDel15'].value_counts()",
                "X = df[['DayOfWeek', 'Distance']]",
                "model.fit(X, y)",
            ])],
            &s,
        )
        .unwrap();
        assert_eq!(idx.shares[0].attribute, "DepDel15");
        assert_eq!(idx.shares[0].pct, 60.0);
    }

    #[test]
    fn zero_runs_is_an_error() {
        assert!(matches!(reference_distribution(&[log(&[])], &schema(&["A"])), Err(Error::NoRuns)));
    }

    const ATTRS: [&str; 6] = ["Origin", "OriginCityName", "Dest", "DestState", "DepDel15", "Distance"];

    fn fragment() -> impl Strategy<Value = String> {
        prop_oneof![
            proptest::sample::select(ATTRS.to_vec()).prop_map(str::to_string),
            "[ \"'\\[\\]._()=#\\n]{1,3}",
            "[a-zA-Z0-9_]{1,3}",
            Just("é".to_string()),
        ]
    }

    proptest! {
        #[test]
        fn matcher_equals_naive_scan(parts in proptest::collection::vec(fragment(), 0..12)) {
            let source = parts.concat();
            let s = schema(&ATTRS);
            prop_assert_eq!(extract_references(&source, &s), naive(&source, &ATTRS));
        }

        #[test]
        fn shares_ignore_run_order(mut parts in proptest::collection::vec(fragment(), 1..20)) {
            let s = schema(&ATTRS);
            let a = reference_distribution(&[log(&parts.iter().map(String::as_str).collect::<Vec<_>>())], &s).unwrap();
            parts.reverse();
            let b = reference_distribution(&[log(&parts.iter().map(String::as_str).collect::<Vec<_>>())], &s).unwrap();
            prop_assert_eq!(a.shares, b.shares);
        }
    }
}
