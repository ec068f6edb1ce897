//! Renders the prompt for the int[] to List<Integer> context, with and
//! without the chain of thought.

use code2api::corpus::SnippetContext;
use code2api::prompt::{default_bank, default_cot, render_prompt, select_few_shot, Ablation, DEFAULT_BUDGET};

const CONTEXT: &str = include_str!("../tests/fixtures/int_list_context.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx: SnippetContext = serde_json::from_str(CONTEXT)?;
    let cot = default_cot(ctx.language);
    let examples = select_few_shot(&default_bank(ctx.language), 2)?;

    let full = render_prompt(&ctx, &cot, &examples, Ablation::default(), DEFAULT_BUDGET)?;
    let bare = Ablation {
        use_cot: false,
        use_few_shot: true,
    };
    let without_cot = render_prompt(&ctx, &cot, &examples, bare, DEFAULT_BUDGET)?;

    println!("{}", full.rendered);
    println!(
        "\n-- about {} tokens, {} without the steps --",
        full.token_estimate, without_cot.token_estimate
    );
    Ok(())
}
