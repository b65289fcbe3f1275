use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

fn fold_pass(s: &str) -> String {
    s.nfkd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_uppercase)
        .flat_map(char::to_lowercase)
        .collect::<String>()
        .nfkd()
        .filter(|c| !is_combining_mark(*c) && (c.is_alphanumeric() || c.is_whitespace()))
        .collect()
}

/// Case-, diacritic- and whitespace-insensitive key for author, organization
/// and venue names. Punctuation is removed.
pub fn normalize_name(raw: &str) -> Result<String> {
    if raw.trim().is_empty() {
        return Err(Error::Empty("name"));
    }
    // Lowercasing can reintroduce decomposable characters; iterate to a fixpoint.
    let mut folded = fold_pass(raw);
    for _ in 0..4 {
        let next = fold_pass(&folded);
        if next == folded {
            break;
        }
        folded = next;
    }
    let key = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    if key.is_empty() {
        return Err(Error::invalid(format!("name {raw:?} has no letters or digits")));
    }
    Ok(key)
}

/// Title key used by deduplication. Unlike [`normalize_name`] this never fails;
/// an unusable title folds to the empty string.
pub fn normalize_title(raw: &str) -> String {
    normalize_name(raw).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn folds_case_diacritics_space() {
        assert_eq!(normalize_name("  José  SILVA ").unwrap(), "jose silva");
        assert_eq!(normalize_name("abc").unwrap(), "abc");
        assert_eq!(normalize_name("O'Brien, T.").unwrap(), "obrien t");
        assert_eq!(normalize_name("Universität\tZürich").unwrap(), "universitat zurich");
    }

    #[test]
    fn empty_is_error() {
        assert!(normalize_name("").is_err());
        assert!(normalize_name("   ").is_err());
        assert!(normalize_name("..,").is_err());
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{1,24}") {
            if let Ok(once) = normalize_name(&s) {
                prop_assert_eq!(normalize_name(&once).unwrap(), once);
            }
        }

        #[test]
        fn case_insensitive(s in "[a-zA-Z\u{00C0}-\u{024F}\u{0370}-\u{03FF} ]{1,24}") {
            let lower = normalize_name(&s.to_lowercase()).ok();
            let upper = normalize_name(&s.to_uppercase()).ok();
            prop_assert_eq!(lower, upper);
        }
    }
}
