//! Reads method signatures out of Java and Python sources.

use code2api::code_model::parse_method_signature;
use code2api::Language;

const JAVA: &str = "import java.util.*;
public class Chatgpt {
    public static List<Integer> convertIntArrayToList(int[] arr) {
        List<Integer> intList = new ArrayList<Integer>(arr.length);
        for (int i : arr) {
            intList.add(i);
        }
        return intList;
    }
}";

const PYTHON: &str = "def remove_all(items: list[str], value: str) -> list[str]:
    return [x for x in items if x != value]
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (source, language) in [(JAVA, Language::Java), (PYTHON, Language::Python)] {
        let sig = parse_method_signature(source, language)?;
        let params: Vec<String> = sig
            .params
            .iter()
            .map(|p| format!("{} {}", p.type_text, p.name))
            .collect();
        println!(
            "{language}: {} {}({})",
            sig.return_type,
            sig.method_name,
            params.join(", ")
        );
        println!("  imports {:?}, returns {:?}", sig.imports, sig.return_statements);
    }
    Ok(())
}
