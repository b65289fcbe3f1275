//! Tokenization and string helpers shared by the text-processing modules.

use std::ops::Range;

use sha2::{Digest, Sha256};

/// Lowercased alphanumeric word tokens. Any non-alphanumeric character is a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    word_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}

/// Byte ranges of the alphanumeric runs in `text`.
pub fn word_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push(s..i);
        }
    }
    if let Some(s) = start {
        spans.push(s..text.len());
    }
    spans
}

/// Lowercase and collapse runs of whitespace into single spaces.
pub fn fold_whitespace_lower(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// First case-insensitive occurrence of `needle` in `haystack` that sits on word
/// boundaries. Returns the byte range in `haystack`.
pub fn find_word_ci(haystack: &str, needle: &str) -> Option<Range<usize>> {
    let needle: Vec<char> = needle.chars().flat_map(char::to_lowercase).collect();
    if needle.is_empty() {
        return None;
    }
    let chars: Vec<(usize, char)> = haystack.char_indices().collect();
    'outer: for start in 0..chars.len() {
        if start > 0 && chars[start - 1].1.is_alphanumeric() {
            continue;
        }
        let mut ni = 0;
        let mut hi = start;
        while ni < needle.len() {
            let Some(&(_, hc)) = chars.get(hi) else {
                continue 'outer;
            };
            for lc in hc.to_lowercase() {
                if ni >= needle.len() || lc != needle[ni] {
                    continue 'outer;
                }
                ni += 1;
            }
            hi += 1;
        }
        if hi < chars.len() && chars[hi].1.is_alphanumeric() {
            continue;
        }
        let end = chars.get(hi).map_or(haystack.len(), |&(b, _)| b);
        return Some(chars[start].0..end);
    }
    None
}

/// 128-bit content hash rendered as 32 lowercase hex characters.
pub fn stable_id(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(p.as_bytes());
    }
    let digest = hasher.finalize();
    hex::encode(&digest[..16])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_on_punctuation() {
        assert_eq!(tokenize("SARS-CoV-2, in Wuhan!"), ["sars", "cov", "2", "in", "wuhan"]);
        assert!(tokenize("  -- ").is_empty());
    }

    #[test]
    fn find_word_respects_boundaries() {
        let text = "Yorkshire and New York City";
        assert_eq!(find_word_ci(text, "york"), Some(18..22));
        assert_eq!(find_word_ci(text, "NEW YORK CITY"), Some(14..27));
        assert_eq!(find_word_ci(text, "shire"), None);
    }

    #[test]
    fn stable_id_is_deterministic_and_separated() {
        assert_eq!(stable_id(&["a", "b"]), stable_id(&["a", "b"]));
        assert_ne!(stable_id(&["ab", ""]), stable_id(&["a", "b"]));
        assert_eq!(stable_id(&["x"]).len(), 32);
    }
}
