//! Tokenization shared by the feature hasher and keyword bucketing.

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// First whitespace-separated token of a name.
pub fn first_name(name: &str) -> &str {
    name.split_whitespace().next().unwrap_or(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_non_alphanumeric_runs() {
        assert_eq!(tokenize("Hello, hello world"), ["hello", "hello", "world"]);
        assert_eq!(tokenize("  --a_b--C3 "), ["a", "b", "c3"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize("?!, ").is_empty());
        assert_eq!(tokenize("ÉCOLE café"), ["école", "café"]);
    }
}
