//! Six-part prompt assembly: role designation, chain-of-thought, example
//! input, example output, test input and format constraints.

mod bank;

use serde::{Deserialize, Serialize};

use crate::corpus::SnippetContext;
use crate::Language;

pub use bank::{
    default_bank, is_none_answer, load_bank, select_few_shot, BankError, FewShotExample, NotEnoughExamples,
    SNIPPET_LINES,
};

/// Input limit of the default model.
pub const MODEL_TOKEN_LIMIT: usize = 4096;
/// Tokens kept free for the completion.
pub const COMPLETION_RESERVE: usize = 700;
/// Default prompt budget: the model limit minus the completion reserve.
pub const DEFAULT_BUDGET: usize = MODEL_TOKEN_LIMIT - COMPLETION_RESERVE;
/// Wrapper class the Java plan asks for unless configured otherwise.
pub const DEFAULT_WRAPPER_CLASS: &str = "Chatgpt";

const PART_SEPARATOR: &str = "\n\n";

/// Ordered step directives shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotPlan {
    pub language: Language,
    pub steps: Vec<String>,
}

/// The default plan: eight steps for Java; for Python the wrapper-class and
/// modifier steps collapse into one module-level `def` step, leaving seven.
pub fn default_cot(language: Language) -> CotPlan {
    match language {
        Language::Java => java_cot(DEFAULT_WRAPPER_CLASS),
        Language::Python => CotPlan {
            language,
            steps: vec![
                "Recover import statements based on the code snippet. If necessary, it can be none.".into(),
                "Use the \"def\" keyword to define the function at module level.".into(),
                "Create the function name based on the context or the code snippet itself.".into(),
                "Infer parameter list based on the code snippet. If necessary, it can be none.".into(),
                "Infer return statements based on the code snippet. If necessary, it can be none.".into(),
                "Infer raise statements based on the code snippet. If necessary, it can be none.".into(),
                "Output the complete code based on the above results.".into(),
            ],
        },
    }
}

/// The Java plan with a custom wrapper class name.
pub fn java_cot(wrapper_class: &str) -> CotPlan {
    CotPlan {
        language: Language::Java,
        steps: vec![
            "Recover import statements based on the code snippet. If necessary, it can be none.".into(),
            format!("Define a public class {wrapper_class} that will be used to wrap the method."),
            "Create \"public static\" modifier for the method.".into(),
            "Create the method name based on the context or the code snippet itself.".into(),
            "Infer parameter list based on the code snippet. If necessary, it can be none.".into(),
            "Infer return statements based on the code snippet. If necessary, it can be none.".into(),
            "Infer throws statements based on the code snippet. If necessary, it can be none.".into(),
            "Output the complete code based on the above results.".into(),
        ],
    }
}

impl CotPlan {
    pub fn render(&self) -> String {
        let mut out = String::from("To solve the problem, do the following:");
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("\nStep {} - {step}", i + 1));
        }
        out
    }

    /// Number of steps whose answers go under "Specific steps".
    pub fn worked_step_count(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }
}

/// Which optional parts of the prompt are included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub use_cot: bool,
    pub use_few_shot: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self {
            use_cot: true,
            use_few_shot: true,
        }
    }
}

/// A rendered prompt and its parts. Disabled parts are empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_directive: String,
    pub cot_text: String,
    pub examples_text: String,
    pub test_input_text: String,
    pub format_constraints_text: String,
    pub rendered: String,
    pub token_estimate: usize,
    pub ablation: Ablation,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt needs about {estimate} tokens, over the budget of {budget}")]
    OverBudget { estimate: usize, budget: usize },
    #[error("context is invalid: {0}")]
    InvalidContext(String),
    #[error("plan is for {plan} but the context is {context}")]
    LanguageMismatch { plan: Language, context: Language },
}

/// Token estimate: one token per four characters, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn role_directive(language: Language) -> String {
    let lang = language.display_name();
    format!(
        "Give you a context including a question title, a question post and an answer post, \
         your task is to transform the {lang} code snippet within the answer post into {lang} {} \
         based on the context.",
        language.callable_noun()
    )
}

pub fn format_constraints(cot: &CotPlan) -> String {
    let worked = cot.worked_step_count();
    format!(
        "Please output the results in the following format:\n\
         Specific steps: <the results of step 1-{worked}>\n\
         Complete code: <the result of step {}>",
        worked + 1
    )
}

pub fn test_input(ctx: &SnippetContext) -> String {
    format!(
        "Now, give you the following context:\n\
         Question title: <{}>;\n\
         Question post: <{}>;\n\
         Answer post: <{}>;\n\
         Code snippet in the answer post: <{}>",
        ctx.question_title, ctx.question_body, ctx.answer_body, ctx.code_snippet
    )
}

const ORDINALS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

fn ordinal(n: usize) -> String {
    ORDINALS
        .get(n.wrapping_sub(1))
        .map(|s| s.to_string())
        .unwrap_or_else(|| n.to_string())
}

/// Example input block followed, after a blank line, by the example output.
pub fn render_example(example: &FewShotExample) -> String {
    let ctx = &example.context;
    let mut out = format!(
        "Question title:\n{}\nQuestion post:\n{}\nAnswer post:\n{}\nCode snippet in the answer post:\n{}",
        ctx.question_title, ctx.question_body, ctx.answer_body, ctx.code_snippet
    );
    out.push_str(PART_SEPARATOR);
    out.push_str("Specific steps:");
    for (i, step) in example.worked_steps.iter().enumerate() {
        out.push_str(&format!("\nStep {}: {step}", i + 1));
    }
    out.push_str("\nComplete code:\n");
    out.push_str(&example.complete_code);
    out
}

pub fn render_examples(examples: &[FewShotExample]) -> String {
    let mut out = String::from("Here are some examples:");
    for (i, example) in examples.iter().enumerate() {
        if i > 0 {
            out.push_str(PART_SEPARATOR);
        } else {
            out.push('\n');
        }
        out.push_str(&format!("Example {}:\n", ordinal(i + 1)));
        out.push_str(&render_example(example));
    }
    out
}

/// Renders the prompt for `ctx`.
///
/// Parts are joined by a single blank line in the order role, chain of
/// thought, examples, test input, format constraints; parts switched off by
/// `ablation` (or an empty example list) are left out entirely.
pub fn render_prompt(
    ctx: &SnippetContext,
    cot: &CotPlan,
    examples: &[FewShotExample],
    ablation: Ablation,
    budget: usize,
) -> Result<PromptBundle, PromptError> {
    ctx.validate().map_err(PromptError::InvalidContext)?;
    if ctx.language != cot.language {
        return Err(PromptError::LanguageMismatch {
            plan: cot.language,
            context: ctx.language,
        });
    }
    let role_directive = role_directive(cot.language);
    let cot_text = if ablation.use_cot { cot.render() } else { String::new() };
    let examples_text = if ablation.use_few_shot && !examples.is_empty() {
        render_examples(examples)
    } else {
        String::new()
    };
    let test_input_text = test_input(ctx);
    let format_constraints_text = format_constraints(cot);

    let rendered = [
        &role_directive,
        &cot_text,
        &examples_text,
        &test_input_text,
        &format_constraints_text,
    ]
    .into_iter()
    .filter(|p| !p.is_empty())
    .map(String::as_str)
    .collect::<Vec<_>>()
    .join(PART_SEPARATOR);

    let token_estimate = estimate_tokens(&rendered);
    if token_estimate > budget {
        return Err(PromptError::OverBudget {
            estimate: token_estimate,
            budget,
        });
    }
    Ok(PromptBundle {
        role_directive,
        cot_text,
        examples_text,
        test_input_text,
        format_constraints_text,
        rendered,
        token_estimate,
        ablation,
    })
}
