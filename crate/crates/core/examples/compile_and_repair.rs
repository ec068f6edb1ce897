//! Compiles a generated API with a missing import and lets a scripted model
//! fix it. Needs a Java toolchain (javac, or Janino under /opt/javatool).

use code2api::backend::ScriptedBackend;
use code2api::compile::{repair_loop, Checker, ToolchainConfig};
use code2api::extract::extract_api;
use code2api::Language;

const BROKEN: &str = "public class Chatgpt {
    public static List<Integer> convertIntArrayToList(int[] arr) {
        List<Integer> intList = new ArrayList<Integer>(arr.length);
        for (int i : arr) {
            intList.add(i);
        }
        return intList;
    }
}";

fn response(code: &str) -> String {
    format!("Specific steps:\nStep 4: convertIntArrayToList\nComplete code:\n{code}")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let toolchain = match ToolchainConfig::detect(Language::Java) {
        Ok(tc) => tc,
        Err(e) => {
            println!("no Java toolchain: {e}");
            return Ok(());
        }
    };
    let api = extract_api(&response(BROKEN), Language::Java, 1)?;
    let fixed = format!("import java.util.ArrayList;\nimport java.util.List;\n{BROKEN}");
    let backend = ScriptedBackend::new(vec![Ok(response(&fixed))]);

    let outcome = repair_loop(&api, &backend, &Checker::new(toolchain), 3)?;
    println!(
        "compiled: {} after {} repair round(s) with {}",
        outcome.success, outcome.rounds_used, outcome.toolchain_id
    );
    println!("\n{}", outcome.final_source);
    Ok(())
}
