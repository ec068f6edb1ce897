//! Few-shot example bank: loading, validation and selection.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::CotPlan;
use crate::corpus::SnippetContext;
use crate::Language;

/// Shortest and longest snippet (in lines) an example may carry.
pub const SNIPPET_LINES: std::ops::RangeInclusive<usize> = 3..=10;

/// A worked example: a context plus the answer to every step but the last,
/// and the complete code the last step produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    #[serde(flatten)]
    pub context: SnippetContext,
    pub worked_steps: Vec<String>,
    pub complete_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad few-shot example on line {line}: field `{field}` {message}")]
pub struct BankError {
    pub line: usize,
    pub field: &'static str,
    pub message: String,
}

/// Whether a worked step answer means "nothing here" (`// None`, `# None`,
/// `None` or blank).
pub fn is_none_answer(answer: &str) -> bool {
    let t = answer.trim();
    let t = t.strip_prefix("//").or_else(|| t.strip_prefix('#')).unwrap_or(t).trim();
    t.is_empty() || t.eq_ignore_ascii_case("none")
}

impl FewShotExample {
    /// Bit `i` is set when step `i + 1` has a real (non-None) answer.
    pub fn coverage_mask(&self) -> u64 {
        self.worked_steps
            .iter()
            .take(64)
            .enumerate()
            .filter(|(_, s)| !is_none_answer(s))
            .fold(0, |mask, (i, _)| mask | 1 << i)
    }

    pub fn snippet_lines(&self) -> usize {
        self.context.snippet_lines()
    }

    /// Checks the example against `cot`; the error names the offending field.
    pub fn validate(&self, cot: &CotPlan) -> Result<(), (&'static str, String)> {
        self.context.validate().map_err(|m| ("context", m))?;
        if self.context.language != cot.language {
            return Err((
                "language",
                format!("is {} but the plan is for {}", self.context.language, cot.language),
            ));
        }
        let wanted = cot.steps.len().saturating_sub(1);
        if self.worked_steps.len() != wanted {
            return Err((
                "worked_steps",
                format!("has {} answers, expected {wanted}", self.worked_steps.len()),
            ));
        }
        if !SNIPPET_LINES.contains(&self.snippet_lines()) {
            return Err((
                "code_snippet",
                format!(
                    "has {} lines, expected {} to {}",
                    self.snippet_lines(),
                    SNIPPET_LINES.start(),
                    SNIPPET_LINES.end()
                ),
            ));
        }
        if self.complete_code.trim().is_empty() {
            return Err(("complete_code", "is empty".into()));
        }
        Ok(())
    }
}

/// Reads a bank (one JSON example per line) and validates every entry.
pub fn load_bank<R: BufRead>(reader: R, cot: &CotPlan) -> Result<Vec<FewShotExample>, BankError> {
    let mut bank = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| BankError {
            line: line_no,
            field: "line",
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let example: FewShotExample = serde_json::from_str(&line).map_err(|e| BankError {
            line: line_no,
            field: "line",
            message: format!("is not a valid record: {e}"),
        })?;
        example.validate(cot).map_err(|(field, message)| BankError {
            line: line_no,
            field,
            message,
        })?;
        if !ids.insert(example.context.answer_id) {
            return Err(BankError {
                line: line_no,
                field: "answer_id",
                message: format!("{} appears twice", example.context.answer_id),
            });
        }
        bank.push(example);
    }
    Ok(bank)
}

/// The bundled five-example bank for `language`.
pub fn default_bank(language: Language) -> Vec<FewShotExample> {
    let text = match language {
        Language::Java => include_str!("../../data/fewshot_java.jsonl"),
        Language::Python => include_str!("../../data/fewshot_python.jsonl"),
    };
    load_bank(text.as_bytes(), &super::default_cot(language)).expect("bundled bank is valid")
}

/// Score of a candidate subset; larger is better (answer ids compare reversed).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Quality {
    covered_steps: u32,
    length_spread: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Partial {
    mask: u64,
    shortest: usize,
    longest: usize,
    count: usize,
}

impl Partial {
    const EMPTY: Partial = Partial {
        mask: 0,
        shortest: usize::MAX,
        longest: 0,
        count: 0,
    };

    fn with(self, example: &FewShotExample) -> Partial {
        let lines = example.snippet_lines();
        Partial {
            mask: self.mask | example.coverage_mask(),
            shortest: self.shortest.min(lines),
            longest: self.longest.max(lines),
            count: self.count + 1,
        }
    }

    fn merge(self, other: Partial) -> Partial {
        Partial {
            mask: self.mask | other.mask,
            shortest: self.shortest.min(other.shortest),
            longest: self.longest.max(other.longest),
            count: self.count + other.count,
        }
    }

    fn quality(self) -> Quality {
        Quality {
            covered_steps: self.mask.count_ones(),
            length_spread: self.longest.saturating_sub(self.shortest),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("asked for {requested} few-shot examples but the bank holds {available}")]
pub struct NotEnoughExamples {
    pub requested: usize,
    pub available: usize,
}

/// Picks `k` examples from `bank`.
///
/// Subsets are ranked by the number of distinct steps answered with something
/// other than None, then by the spread between the shortest and longest
/// snippet, then by their sorted answer ids (smaller first). The winners are
/// returned in bank order.
pub fn select_few_shot(bank: &[FewShotExample], k: usize) -> Result<Vec<FewShotExample>, NotEnoughExamples> {
    if k > bank.len() {
        return Err(NotEnoughExamples {
            requested: k,
            available: bank.len(),
        });
    }
    if k == bank.len() {
        return Ok(bank.to_vec());
    }
    let mut order: Vec<usize> = (0..bank.len()).collect();
    order.sort_by_key(|&i| (bank[i].context.answer_id, i));

    // reachable[i]: every partial state buildable from order[i..] with at
    // most k picks.
    let mut reachable: Vec<HashSet<Partial>> = vec![HashSet::new(); order.len() + 1];
    reachable[order.len()].insert(Partial::EMPTY);
    for i in (0..order.len()).rev() {
        let example = &bank[order[i]];
        let mut here = reachable[i + 1].clone();
        for state in &reachable[i + 1] {
            if state.count < k {
                here.insert(state.with(example));
            }
        }
        reachable[i] = here;
    }
    let target = reachable[0]
        .iter()
        .filter(|s| s.count == k)
        .map(|s| s.quality())
        .max()
        .expect("k <= bank size");

    let feasible = |prefix: Partial, from: usize| {
        reachable[from]
            .iter()
            .any(|s| prefix.count + s.count == k && prefix.merge(*s).quality() == target)
    };
    let mut picked = Vec::with_capacity(k);
    let mut prefix = Partial::EMPTY;
    for (pos, &idx) in order.iter().enumerate() {
        if prefix.count == k {
            break;
        }
        let taken = prefix.with(&bank[idx]);
        if feasible(taken, pos + 1) {
            prefix = taken;
            picked.push(idx);
        }
    }
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| bank[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::default_cot;

    #[test]
    fn none_answers() {
        for s in ["// None", "# None", "None", "  ", "//none"] {
            assert!(is_none_answer(s), "{s}");
        }
        assert!(!is_none_answer("throws IOException"));
    }

    #[test]
    fn bundled_banks_load() {
        assert_eq!(default_bank(Language::Java).len(), 5);
        assert_eq!(default_bank(Language::Python).len(), 5);
    }

    #[test]
    fn violations_name_the_field() {
        let cot = default_cot(Language::Java);
        let mut ex = default_bank(Language::Java).remove(0);
        ex.worked_steps.pop();
        let line = serde_json::to_string(&ex).unwrap();
        let err = load_bank(line.as_bytes(), &cot).unwrap_err();
        assert_eq!(err.field, "worked_steps");

        let mut ex = default_bank(Language::Java).remove(0);
        ex.context.code_snippet = "a();\nb();".into();
        let line = serde_json::to_string(&ex).unwrap();
        assert_eq!(load_bank(line.as_bytes(), &cot).unwrap_err().field, "code_snippet");
    }

    #[test]
    fn identity_and_empty_selection() {
        let bank = default_bank(Language::Java);
        assert_eq!(select_few_shot(&bank, 5).unwrap(), bank);
        assert!(select_few_shot(&bank, 0).unwrap().is_empty());
        assert_eq!(
            select_few_shot(&bank, 6).unwrap_err(),
            NotEnoughExamples {
                requested: 6,
                available: 5
            }
        );
    }
}
