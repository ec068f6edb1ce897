//! Equivalence of a generated API against its human-written counterpart, and
//! the corpus metrics built on it.
//!
//! Three relations are checked per pair: parameters (P), return statements
//! (R) and implementation (M). Parameters and implementation are tri-state:
//! when the automatic check cannot decide, the verdict is
//! [`Verdict::NeedsManual`] and a manual resolution file settles it.

mod params;

use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::code_model::{parse_method_signature, ApiSignature, ParseError};
use crate::Language;

pub use params::params_equivalent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    NeedsManual,
}

/// Return-statement equivalence: both return nothing, or the return types
/// agree and the normalized return statements are identical.
pub fn returns_equivalent(left: &ApiSignature, right: &ApiSignature) -> bool {
    if left.returns_nothing() && right.returns_nothing() {
        return true;
    }
    params::types_compatible(&left.return_type, &right.return_type) && left.return_statements == right.return_statements
}

/// Decides whether two APIs implement the same functionality.
pub trait FunctionalityOracle {
    /// `None` when the oracle has no opinion on this pair.
    fn same_functionality(&self, pair: &EquivalencePair) -> Option<bool>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalencePair {
    pub answer_id: u64,
    /// Human ground truth.
    pub left: ApiSignature,
    /// Tool output.
    pub right: ApiSignature,
    pub param_verdict: Verdict,
    pub return_verdict: bool,
    pub impl_verdict: Verdict,
    #[serde(default)]
    pub manual_notes: String,
}

/// Implementation equivalence: fails when either sub-relation fails, waits on
/// a manual call while parameters do, and otherwise asks the oracle.
pub fn impl_equivalent(pair: &EquivalencePair, oracle: Option<&dyn FunctionalityOracle>) -> Verdict {
    if !pair.return_verdict || pair.param_verdict == Verdict::NotEquivalent {
        return Verdict::NotEquivalent;
    }
    if pair.param_verdict == Verdict::NeedsManual {
        return Verdict::NeedsManual;
    }
    match oracle.and_then(|o| o.same_functionality(pair)) {
        Some(true) => Verdict::Equivalent,
        Some(false) => Verdict::NotEquivalent,
        None => Verdict::NeedsManual,
    }
}

/// Replaces open verdicts with the matching manual resolutions, then
/// re-derives the implementation verdict.
pub fn apply_resolutions(pair: &mut EquivalencePair, resolutions: &ManualResolutions) {
    if pair.param_verdict == Verdict::NeedsManual {
        if let Some(r) = resolutions.get(pair.answer_id, Field::Params) {
            pair.param_verdict = r.verdict;
            pair.manual_notes = r.note.clone();
        }
    }
    pair.impl_verdict = impl_equivalent(pair, Some(resolutions));
}

/// Computes all three verdicts for one pair.
pub fn compare(
    answer_id: u64,
    left: ApiSignature,
    right: ApiSignature,
    oracle: Option<&dyn FunctionalityOracle>,
) -> EquivalencePair {
    let mut pair = EquivalencePair {
        answer_id,
        param_verdict: params_equivalent(&left, &right),
        return_verdict: returns_equivalent(&left, &right),
        impl_verdict: Verdict::NeedsManual,
        left,
        right,
        manual_notes: String::new(),
    };
    pair.impl_verdict = impl_equivalent(&pair, oracle);
    pair
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Params,
    Returns,
    Impl,
}

/// One line of a manual resolution file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub answer_id: u64,
    pub field: Field,
    pub verdict: Verdict,
    #[serde(default)]
    pub note: String,
}

/// Human decisions for verdicts the automatic checks left open.
#[derive(Debug, Clone, Default)]
pub struct ManualResolutions {
    entries: HashMap<(u64, Field), Resolution>,
}

#[derive(Debug, thiserror::Error)]
pub enum ResolutionError {
    #[error("cannot read resolution file: {0}")]
    Io(#[from] std::io::Error),
    #[error("resolution line {line}: {message}")]
    Line { line: usize, message: String },
}

impl ManualResolutions {
    pub fn new(entries: impl IntoIterator<Item = Resolution>) -> Self {
        Self {
            entries: entries.into_iter().map(|r| ((r.answer_id, r.field), r)).collect(),
        }
    }

    /// Reads one JSON resolution per line; later lines override earlier ones.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, ResolutionError> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: Resolution = serde_json::from_str(&line).map_err(|e| ResolutionError::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            if r.verdict == Verdict::NeedsManual {
                return Err(ResolutionError::Line {
                    line: i + 1,
                    message: "a resolution must be equivalent or not_equivalent".into(),
                });
            }
            entries.push(r);
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, ResolutionError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn get(&self, answer_id: u64, field: Field) -> Option<&Resolution> {
        self.entries.get(&(answer_id, field))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FunctionalityOracle for ManualResolutions {
    fn same_functionality(&self, pair: &EquivalencePair) -> Option<bool> {
        self.get(pair.answer_id, Field::Impl)
            .map(|r| r.verdict == Verdict::Equivalent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Unresolved manual verdicts count as not equivalent, with a warning.
    #[default]
    Lenient,
    /// Unresolved manual verdicts are an error.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} manual verdicts are unresolved (first: answer {} {:?})", .unresolved.len(), .unresolved[0].0, .unresolved[0].1)]
pub struct UnresolvedVerdicts {
    pub unresolved: Vec<(u64, Field)>,
}

/// Corpus-level counts and accuracies. Ratios are `None` for an empty corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub total: usize,
    pub p_count: usize,
    pub r_count: usize,
    pub m_count: usize,
    pub pr_count: usize,
    pub p_acc: Option<f64>,
    pub r_acc: Option<f64>,
    pub m_acc: Option<f64>,
    pub pr_acc: Option<f64>,
}

impl MetricsSummary {
    pub fn from_counts(total: usize, p_count: usize, r_count: usize, m_count: usize, pr_count: usize) -> Self {
        let ratio = |c: usize| (total > 0).then(|| c as f64 / total as f64);
        Self {
            total,
            p_count,
            r_count,
            m_count,
            pr_count,
            p_acc: ratio(p_count),
            r_acc: ratio(r_count),
            m_acc: ratio(m_count),
            pr_acc: ratio(pr_count),
        }
    }
}

/// Settled booleans for one pair after applying resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settled {
    pub params: bool,
    pub returns: bool,
    pub implementation: bool,
}

/// Settles one pair's verdicts, recording unresolved ones in `open`.
pub fn settle(pair: &EquivalencePair, resolutions: &ManualResolutions, open: &mut Vec<(u64, Field)>) -> Settled {
    let mut decide = |verdict: Verdict, field: Field| match verdict {
        Verdict::Equivalent => true,
        Verdict::NotEquivalent => false,
        Verdict::NeedsManual => match resolutions.get(pair.answer_id, field) {
            Some(r) => r.verdict == Verdict::Equivalent,
            None => {
                open.push((pair.answer_id, field));
                false
            }
        },
    };
    let params = decide(pair.param_verdict, Field::Params);
    let returns = pair.return_verdict;
    let implementation = decide(pair.impl_verdict, Field::Impl) && params && returns;
    Settled {
        params,
        returns,
        implementation,
    }
}

/// Aggregates verdicts into P-Acc, R-Acc, M-Acc and PR-Acc.
pub fn aggregate(
    pairs: &[EquivalencePair],
    resolutions: &ManualResolutions,
    mode: AggregateMode,
) -> Result<MetricsSummary, UnresolvedVerdicts> {
    let mut open = Vec::new();
    let settled: Vec<Settled> = pairs.iter().map(|p| settle(p, resolutions, &mut open)).collect();
    if !open.is_empty() {
        if mode == AggregateMode::Strict {
            return Err(UnresolvedVerdicts { unresolved: open });
        }
        log::warn!(
            "{} manual verdicts unresolved; counting them as not equivalent",
            open.len()
        );
    }
    Ok(summarize(&settled))
}

pub fn summarize(settled: &[Settled]) -> MetricsSummary {
    let count = |f: fn(&Settled) -> bool| settled.iter().filter(|s| f(s)).count();
    MetricsSummary::from_counts(
        settled.len(),
        count(|s| s.params),
        count(|s| s.returns),
        count(|s| s.implementation),
        count(|s| s.params || s.returns),
    )
}

/// `count / total` as a percentage with one decimal, e.g. `43.5%`; `n/a` when
/// `total` is zero. Rounds half up on exact integer arithmetic.
pub fn format_percent(count: usize, total: usize) -> String {
    if total == 0 {
        return "n/a".into();
    }
    let tenths = (count as u128 * 2000 + total as u128) / (2 * total as u128);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

/// One line of a pairs file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub answer_id: u64,
    pub left_source_path: PathBuf,
    pub right_source_path: PathBuf,
    pub language: Language,
}

#[derive(Debug, thiserror::Error)]
pub enum PairError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("pairs line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("answer {answer_id}: {side} source does not parse: {source}")]
    Parse {
        answer_id: u64,
        side: &'static str,
        source: ParseError,
    },
}

/// Reads a pairs file and compares every pair. Relative source paths are
/// resolved against the pairs file's directory.
pub fn compare_pairs_file(
    path: &Path,
    oracle: Option<&dyn FunctionalityOracle>,
) -> Result<Vec<EquivalencePair>, PairError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| PairError::Io { path: p, source }
    };
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let spec: PairSpec = serde_json::from_str(line).map_err(|e| PairError::Line {
            line: i + 1,
            message: e.to_string(),
        })?;
        let read = |p: &Path| {
            let full = base.join(p);
            std::fs::read_to_string(&full).map_err(io_err(&full))
        };
        let parse = |src: String, side| {
            parse_method_signature(&src, spec.language).map_err(|source| PairError::Parse {
                answer_id: spec.answer_id,
                side,
                source,
            })
        };
        let left = parse(read(&spec.left_source_path)?, "left")?;
        let right = parse(read(&spec.right_source_path)?, "right")?;
        out.push(compare(spec.answer_id, left, right, oracle));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_model::parse_method_signature;
    use proptest::prelude::*;

    fn java(src: &str) -> ApiSignature {
        parse_method_signature(src, Language::Java).unwrap()
    }

    struct Yes;
    impl FunctionalityOracle for Yes {
        fn same_functionality(&self, _: &EquivalencePair) -> Option<bool> {
            Some(true)
        }
    }

    #[test]
    fn percent_rendering() {
        assert_eq!(format_percent(130, 200), "65.0%");
        assert_eq!(format_percent(87, 200), "43.5%");
        assert_eq!(format_percent(173, 200), "86.5%");
        assert_eq!(format_percent(1, 3), "33.3%");
        assert_eq!(format_percent(2, 3), "66.7%");
        assert_eq!(format_percent(0, 0), "n/a");
    }

    #[test]
    fn impl_rules() {
        let a = java("public static void f(int a) { g(a); }");
        let with = compare(1, a.clone(), a.clone(), Some(&Yes));
        assert_eq!(with.impl_verdict, Verdict::Equivalent);
        let without = compare(1, a.clone(), a.clone(), None);
        assert_eq!(without.impl_verdict, Verdict::NeedsManual);
        let b = java("public static void f(int a, int b) { g(a); }");
        let short = compare(1, a, b, Some(&Yes));
        assert_eq!(short.param_verdict, Verdict::NotEquivalent);
        assert_eq!(short.impl_verdict, Verdict::NotEquivalent);
    }

    #[test]
    fn strict_mode_reports_unresolved() {
        let a = java("public static void f() {}");
        let pair = compare(5, a.clone(), a, None);
        let err = aggregate(
            std::slice::from_ref(&pair),
            &ManualResolutions::default(),
            AggregateMode::Strict,
        )
        .unwrap_err();
        assert_eq!(err.unresolved, vec![(5, Field::Impl)]);
        let lenient = aggregate(
            std::slice::from_ref(&pair),
            &ManualResolutions::default(),
            AggregateMode::Lenient,
        )
        .unwrap();
        assert_eq!(lenient.m_count, 0);
        let resolved = ManualResolutions::read(
            &br#"{"answer_id": 5, "field": "impl", "verdict": "equivalent", "note": "same loop"}"#[..],
        )
        .unwrap();
        let m = aggregate(&[pair], &resolved, AggregateMode::Strict).unwrap();
        assert_eq!((m.p_count, m.r_count, m.m_count, m.pr_count), (1, 1, 1, 1));
        assert_eq!(m.m_acc, Some(1.0));
    }

    #[test]
    fn manual_resolution_cannot_be_needs_manual() {
        let line = br#"{"answer_id": 1, "field": "params", "verdict": "needs_manual"}"#;
        assert!(ManualResolutions::read(&line[..]).is_err());
    }

    #[test]
    fn empty_corpus_has_no_ratios() {
        let m = aggregate(&[], &ManualResolutions::default(), AggregateMode::Strict).unwrap();
        assert_eq!(m.total, 0);
        assert_eq!(m.p_acc, None);
    }

    fn settled_strategy() -> impl Strategy<Value = Vec<Settled>> {
        proptest::collection::vec(
            (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(p, r, m)| Settled {
                params: p,
                returns: r,
                implementation: m && p && r,
            }),
            0..=50,
        )
    }

    proptest! {
        #[test]
        fn metric_algebra(settled in settled_strategy()) {
            let m = summarize(&settled);
            let both = settled.iter().filter(|s| s.params && s.returns).count();
            prop_assert_eq!(m.pr_count, m.p_count + m.r_count - both);
            prop_assert!(m.m_count <= m.p_count.min(m.r_count));
        }
    }
}
