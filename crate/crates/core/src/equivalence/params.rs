//! Parameter-list equivalence: a type-compatible pairing of parameters whose
//! referents can be shown to agree.

use std::collections::BTreeMap;

use super::Verdict;
use crate::code_model::lexer::{lex, TokenKind};
use crate::code_model::{ApiSignature, Param, UNANNOTATED};
use crate::Language;

const BOXES: &[(&str, &str)] = &[
    ("int", "Integer"),
    ("long", "Long"),
    ("double", "Double"),
    ("float", "Float"),
    ("boolean", "Boolean"),
    ("char", "Character"),
    ("byte", "Byte"),
    ("short", "Short"),
];

fn split_stars(t: &str) -> (&str, &str) {
    let n = t.len() - t.trim_start_matches('*').len();
    t.split_at(n)
}

/// Same canonical type, with Python's `unannotated` matching anything of the
/// same star-arity.
pub(super) fn types_compatible(a: &str, b: &str) -> bool {
    let (sa, ta) = split_stars(a);
    let (sb, tb) = split_stars(b);
    sa == sb && (ta == tb || ta == UNANNOTATED || tb == UNANNOTATED)
}

/// Compatible once boxed and primitive Java types are identified.
fn types_compatible_boxing(a: &str, b: &str) -> bool {
    let unbox = |t: &str| -> String {
        let mut out = t.to_string();
        for (prim, boxed) in BOXES {
            if let Some(rest) = out.strip_prefix(boxed) {
                if rest.is_empty() || rest.starts_with('[') || rest.starts_with('.') {
                    out = format!("{prim}{rest}");
                    break;
                }
            }
        }
        out
    };
    types_compatible(&unbox(a), &unbox(b))
}

/// Whether a perfect matching exists in the bipartite graph `adj`.
fn has_perfect_matching(adj: &[Vec<usize>], n_right: usize) -> bool {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; n_right];
    (0..adj.len()).all(|u| {
        let mut seen = vec![false; n_right];
        augment(u, adj, &mut seen, &mut owner)
    })
}

/// Neighbouring tokens around each use of a parameter in `body`.
///
/// Names of the method's own parameters are replaced by a placeholder so that
/// renaming parameters does not change the fingerprint.
struct Uses {
    by_param: BTreeMap<String, Vec<(String, String)>>,
}

impl Uses {
    fn collect(sig: &ApiSignature) -> Self {
        let names: Vec<&str> = sig.params.iter().map(|p| p.name.as_str()).collect();
        let mut by_param: BTreeMap<String, Vec<(String, String)>> =
            names.iter().map(|n| (n.to_string(), Vec::new())).collect();
        let tokens = match lex(&sig.body, sig.language) {
            Ok(t) => t,
            Err(_) => return Self { by_param },
        };
        let tokens: Vec<_> = tokens.into_iter().filter(|t| t.kind != TokenKind::Newline).collect();
        let show = |i: Option<usize>| -> String {
            match i.and_then(|i| tokens.get(i)) {
                Some(t) if t.is_word() && names.contains(&t.text) => "$param".into(),
                Some(t) => t.text.to_string(),
                None => String::new(),
            }
        };
        for (i, tok) in tokens.iter().enumerate() {
            if !tok.is_word() || !names.contains(&tok.text) {
                continue;
            }
            if i > 0 && tokens[i - 1].is(".") {
                continue;
            }
            let entry = (show(i.checked_sub(1)), show(Some(i + 1)));
            by_param.get_mut(tok.text).expect("known param").push(entry);
        }
        for uses in by_param.values_mut() {
            uses.sort();
        }
        Self { by_param }
    }

    fn used(&self, name: &str) -> bool {
        self.by_param.get(name).is_some_and(|u| !u.is_empty())
    }

    fn fingerprint(&self, name: &str) -> &[(String, String)] {
        self.by_param.get(name).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Pairs parameters by name, then by being each other's only candidate, then
/// by identical use fingerprints. Returns `None` if some stay unpaired.
fn pair_params(left: &[Param], right: &[Param], lu: &Uses, ru: &Uses) -> Option<Vec<(usize, usize)>> {
    let n = left.len();
    let mut l_free: Vec<bool> = vec![true; n];
    let mut r_free: Vec<bool> = vec![true; n];
    let mut pairs = Vec::new();
    let compatible = |i: usize, j: usize| types_compatible(&left[i].type_text, &right[j].type_text);

    for i in 0..n {
        if let Some(j) = (0..n).find(|&j| r_free[j] && right[j].name == left[i].name && compatible(i, j)) {
            l_free[i] = false;
            r_free[j] = false;
            pairs.push((i, j));
        }
    }

    loop {
        let mut progressed = false;
        for i in 0..n {
            if !l_free[i] {
                continue;
            }
            let cands: Vec<usize> = (0..n).filter(|&j| r_free[j] && compatible(i, j)).collect();
            if let [j] = cands[..] {
                let back = (0..n).filter(|&k| l_free[k] && compatible(k, j)).count();
                if back == 1 {
                    l_free[i] = false;
                    r_free[j] = false;
                    pairs.push((i, j));
                    progressed = true;
                }
            }
        }
        for i in 0..n {
            if !l_free[i] {
                continue;
            }
            let fp = lu.fingerprint(&left[i].name);
            if fp.is_empty() {
                continue;
            }
            let cands: Vec<usize> = (0..n)
                .filter(|&j| r_free[j] && compatible(i, j) && ru.fingerprint(&right[j].name) == fp)
                .collect();
            if let [j] = cands[..] {
                let back = (0..n)
                    .filter(|&k| l_free[k] && compatible(k, j) && lu.fingerprint(&left[k].name) == fp)
                    .count();
                if back == 1 {
                    l_free[i] = false;
                    r_free[j] = false;
                    pairs.push((i, j));
                    progressed = true;
                }
            }
        }
        if !progressed {
            break;
        }
    }
    if l_free.iter().any(|f| *f) {
        return None;
    }
    pairs.sort_unstable();
    Some(pairs)
}

pub fn params_equivalent(left: &ApiSignature, right: &ApiSignature) -> Verdict {
    let (lp, rp) = (&left.params, &right.params);
    if lp.len() != rp.len() {
        return Verdict::NotEquivalent;
    }
    if lp.is_empty() {
        return Verdict::Equivalent;
    }
    let graph = |compat: fn(&str, &str) -> bool| -> Vec<Vec<usize>> {
        lp.iter()
            .map(|l| {
                (0..rp.len())
                    .filter(|&j| compat(&l.type_text, &rp[j].type_text))
                    .collect()
            })
            .collect()
    };
    if !has_perfect_matching(&graph(types_compatible), rp.len()) {
        let boxing = left.language == Language::Java && right.language == Language::Java;
        if boxing && has_perfect_matching(&graph(types_compatible_boxing), rp.len()) {
            return Verdict::NeedsManual;
        }
        return Verdict::NotEquivalent;
    }

    let lu = Uses::collect(left);
    let ru = Uses::collect(right);
    let Some(pairs) = pair_params(lp, rp, &lu, &ru) else {
        return Verdict::NeedsManual;
    };
    for (i, j) in pairs {
        if lp[i].name != rp[j].name && lu.used(&lp[i].name) != ru.used(&rp[j].name) {
            return Verdict::NeedsManual;
        }
    }
    Verdict::Equivalent
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility() {
        assert!(types_compatible("int[]", "int[]"));
        assert!(types_compatible("unannotated", "str"));
        assert!(types_compatible("*unannotated", "*int"));
        assert!(!types_compatible("*unannotated", "int"));
        assert!(!types_compatible("int", "Integer"));
        assert!(types_compatible_boxing("int", "Integer"));
        assert!(types_compatible_boxing("Integer[]", "int[]"));
        assert!(!types_compatible_boxing("Integers", "ints"));
    }

    #[test]
    fn matching() {
        assert!(has_perfect_matching(&[vec![0, 1], vec![0]], 2));
        assert!(!has_perfect_matching(&[vec![0], vec![0]], 2));
    }
}
