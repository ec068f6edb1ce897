use std::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::SnippetContext;

/// Which contexts count as APIzation candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub require_how_to_title: bool,
    pub require_accepted: bool,
    pub min_answer_score: i64,
    pub require_single_code_block: bool,
    pub max_view_rank: usize,
    pub language_tag: String,
}

impl FilterCriteria {
    pub fn for_tag(language_tag: impl Into<String>) -> Self {
        Self {
            require_how_to_title: true,
            require_accepted: true,
            min_answer_score: 2,
            require_single_code_block: true,
            max_view_rank: 20_000,
            language_tag: language_tag.into(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_answer_score < 0 {
            return Err("min_answer_score must be >= 0".into());
        }
        if self.max_view_rank == 0 {
            return Err("max_view_rank must be >= 1".into());
        }
        Ok(())
    }
}

/// Position cutoff of the `max_view_rank`-th most viewed question.
///
/// Questions are ordered by view count descending, then by lower question id,
/// so every question has a distinct rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewRank {
    // None when the population is no larger than the cutoff rank.
    cutoff: Option<(Reverse<u64>, u64)>,
}

impl ViewRank {
    pub fn compute(questions: impl IntoIterator<Item = (u64, u64)>, max_rank: usize) -> Self {
        let mut keys: Vec<(Reverse<u64>, u64)> =
            questions.into_iter().map(|(id, views)| (Reverse(views), id)).collect();
        if keys.len() <= max_rank {
            return Self { cutoff: None };
        }
        let (_, nth, _) = keys.select_nth_unstable(max_rank - 1);
        Self { cutoff: Some(*nth) }
    }

    /// Every question is within the cutoff.
    pub fn unbounded() -> Self {
        Self { cutoff: None }
    }

    pub fn admits(&self, question_id: u64, view_count: u64) -> bool {
        match self.cutoff {
            None => true,
            Some(cutoff) => (Reverse(view_count), question_id) <= cutoff,
        }
    }
}

/// True when the title asks a "how to" style question.
pub fn is_how_to_title(title: &str) -> bool {
    let lower = title.to_lowercase();
    ["how to", "how do i", "how can i"]
        .iter()
        .any(|phrase| lower.contains(phrase))
}

/// Applies every enabled criterion to one context.
pub fn filter_candidates(
    ctx: &SnippetContext,
    criteria: &FilterCriteria,
    all_answer_code_block_count: usize,
    rank: &ViewRank,
) -> bool {
    if criteria.require_how_to_title && !is_how_to_title(&ctx.question_title) {
        return false;
    }
    if criteria.require_accepted && !ctx.is_accepted {
        return false;
    }
    if ctx.answer_score < criteria.min_answer_score {
        return false;
    }
    if criteria.require_single_code_block && all_answer_code_block_count != 1 {
        return false;
    }
    if !ctx.tags.iter().any(|t| t == &criteria.language_tag) {
        return false;
    }
    rank.admits(ctx.question_id, ctx.view_count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Language;
    use proptest::prelude::*;

    fn int_list_context(score: i64) -> SnippetContext {
        SnippetContext {
            question_id: 1073919,
            answer_id: 1,
            question_title: "How to convert int[] into List<Integer> in Java?".into(),
            question_body: "How do I convert int[] into List<Integer> in Java?".into(),
            answer_body: "There is no shortcut.".into(),
            code_snippet: "int[] ints = {1, 2, 3};".into(),
            language: Language::Java,
            answer_score: score,
            view_count: 900_000,
            tags: vec!["java".into(), "arrays".into()],
            is_accepted: true,
        }
    }

    #[test]
    fn int_list_context_passes() {
        let criteria = FilterCriteria::for_tag("java");
        let rank = ViewRank::compute([(1073919, 900_000), (5, 10)], 1);
        assert!(filter_candidates(&int_list_context(5), &criteria, 1, &rank));
    }

    #[test]
    fn score_below_threshold_fails() {
        let criteria = FilterCriteria::for_tag("java");
        assert!(!filter_candidates(
            &int_list_context(1),
            &criteria,
            1,
            &ViewRank::unbounded()
        ));
        assert!(filter_candidates(
            &int_list_context(2),
            &criteria,
            1,
            &ViewRank::unbounded()
        ));
    }

    #[test]
    fn multiple_blocks_fail_only_when_required() {
        let mut criteria = FilterCriteria::for_tag("java");
        assert!(!filter_candidates(
            &int_list_context(5),
            &criteria,
            2,
            &ViewRank::unbounded()
        ));
        criteria.require_single_code_block = false;
        assert!(filter_candidates(
            &int_list_context(5),
            &criteria,
            2,
            &ViewRank::unbounded()
        ));
    }

    #[test]
    fn how_to_detection() {
        assert!(is_how_to_title("HOW TO sort a map"));
        assert!(is_how_to_title("Sorting: how do I keep order?"));
        assert!(is_how_to_title("How can I parse JSON"));
        assert!(!is_how_to_title("Why is my loop slow?"));
    }

    #[test]
    fn view_rank_ties_prefer_lower_id() {
        let rank = ViewRank::compute([(9, 100), (3, 100), (7, 50)], 1);
        assert!(rank.admits(3, 100));
        assert!(!rank.admits(9, 100));
        assert!(!rank.admits(7, 50));
        let rank = ViewRank::compute([(9, 100), (3, 100), (7, 50)], 2);
        assert!(rank.admits(9, 100));
        assert!(!rank.admits(7, 50));
    }

    proptest! {
        #[test]
        fn relaxing_min_score_never_removes(score in -5i64..20, strict in 0i64..10, relax in 0i64..10) {
            let ctx = int_list_context(score);
            let mut criteria = FilterCriteria::for_tag("java");
            criteria.min_answer_score = strict;
            let before = filter_candidates(&ctx, &criteria, 1, &ViewRank::unbounded());
            criteria.min_answer_score = strict.saturating_sub(relax);
            let after = filter_candidates(&ctx, &criteria, 1, &ViewRank::unbounded());
            prop_assert!(!before || after);
        }
    }
}
