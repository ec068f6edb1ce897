//! Compares generated APIs with reference ones and reports the accuracies.

use code2api::code_model::parse_method_signature;
use code2api::equivalence::{aggregate, compare, format_percent, AggregateMode, ManualResolutions};
use code2api::Language;

const PAIRS: [(u64, &str, &str); 3] = [
    (
        1,
        "class A { public static List<Integer> toList(int[] arr) { return out; } }",
        "class B { public static List<Integer> convert(int[] values) { return out; } }",
    ),
    (
        2,
        "class A { public static String rev(String s) { return r; } }",
        "class B { public static String rev(String s, int n) { return r; } }",
    ),
    (
        3,
        "class A { public static int year() { return y; } }",
        "class B { public static int year() { return y; } }",
    ),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut pairs = Vec::new();
    for (id, left, right) in PAIRS {
        let pair = compare(
            id,
            parse_method_signature(left, Language::Java)?,
            parse_method_signature(right, Language::Java)?,
            None,
        );
        println!(
            "{id}: params {:?}, returns {}, implementation {:?}",
            pair.param_verdict, pair.return_verdict, pair.impl_verdict
        );
        pairs.push(pair);
    }
    let m = aggregate(&pairs, &ManualResolutions::new([]), AggregateMode::Lenient)?;
    println!(
        "P-Acc {}  R-Acc {}  PR-Acc {}",
        format_percent(m.p_count, m.total),
        format_percent(m.r_count, m.total),
        format_percent(m.pr_count, m.total)
    );
    Ok(())
}
