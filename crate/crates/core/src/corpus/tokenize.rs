//! Language-independent "13a"-style tokenization.
//!
//! Rules, applied in a single left-to-right pass:
//!
//! 1. runs of whitespace separate tokens and are otherwise dropped;
//! 2. every non-alphanumeric character becomes a token of its own, except
//! 3. `.` and `,` with an ASCII digit on both sides stay attached, and
//! 4. `-` directly after an ASCII digit stays attached.
//!
//! Alphanumeric means Unicode alphanumeric, so Cyrillic or Greek words are
//! kept whole. Tokenizing `tokens.join(" ")` again yields the same tokens.

/// Tokenize raw text. Empty or all-whitespace input yields no tokens.
pub fn tokenize_13a(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();

    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if c.is_alphanumeric() || stays_attached(&chars, i) {
            current.push(c);
        } else {
            flush(&mut current, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_whitespace(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn stays_attached(chars: &[char], i: usize) -> bool {
    let digit_before = i > 0 && chars[i - 1].is_ascii_digit();
    match chars[i] {
        '.' | ',' => digit_before && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()),
        '-' => digit_before,
        _ => false,
    }
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}
