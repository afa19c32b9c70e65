use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Lowercased surface form.
    pub surface: String,
    pub lemma: String,
    /// Offset among non-punctuation tokens. Punctuation carries the offset
    /// of the next non-punctuation token.
    pub position: usize,
    pub kind: TokenKind,
    /// Byte range of the token in the source text.
    pub start: usize,
    pub end: usize,
}

fn is_joiner(c: char) -> bool {
    matches!(c, '-' | '\'' | '’' | 'ʼ')
}

/// Split normalized text into word, number and punctuation tokens.
///
/// A word is a run of alphanumeric characters; a hyphen or apostrophe stays
/// inside the word when it sits between two alphanumerics. Every other
/// non-whitespace character is its own punctuation token. Lemmas are left
/// equal to the lowercased surface; see [`super::Analyzer::analyze`].
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut position = 0;
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                if cj.is_alphanumeric() {
                    j += 1;
                } else if is_joiner(cj) && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphanumeric()) {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let raw = &text[start..end];
            let kind = if raw.chars().any(char::is_alphabetic) {
                TokenKind::Word
            } else {
                TokenKind::Number
            };
            let surface = raw.to_lowercase();
            tokens.push(Token {
                lemma: surface.clone(),
                surface,
                position,
                kind,
                start,
                end,
            });
            position += 1;
            i = j;
        } else {
            let end = start + c.len_utf8();
            tokens.push(Token {
                surface: c.to_string(),
                lemma: c.to_string(),
                position,
                kind: TokenKind::Punct,
                start,
                end,
            });
            i += 1;
        }
    }
    tokens
}

/// Byte spans of sentences: a sentence ends at `.`, `!` or `?` followed by
/// whitespace and an uppercase letter, at a blank line, or at the end of
/// the text.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' {
            let mut k = i + 1;
            while k < bytes.len() && matches!(bytes[k], b' ' | b'\t' | b'\r') {
                k += 1;
            }
            if k < bytes.len() && bytes[k] == b'\n' {
                split_paragraph(text, start, i, &mut spans);
                start = k + 1;
                i = k + 1;
                continue;
            }
        }
        i += 1;
    }
    split_paragraph(text, start, text.len(), &mut spans);
    spans
}

fn split_paragraph(full: &str, offset: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let text = &full[..end];
    let chars: Vec<(usize, char)> = text[offset..].char_indices().map(|(b, c)| (b + offset, c)).collect();
    let mut start = offset;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if matches!(c, '.' | '!' | '?') {
            // absorb runs like "?!" or "..."
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k == chars.len() || (k > j && chars[k].1.is_uppercase());
            if boundary {
                push_trimmed(text, start, end, spans);
                start = chars.get(k).map_or(text.len(), |&(b, _)| b);
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    push_trimmed(text, start, text.len(), spans);
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    if start >= end {
        return;
    }
    let s = &text[start..end];
    let lead = s.len() - s.trim_start().len();
    let trail = s.len() - s.trim_end().len();
    if lead + trail < s.len() {
        out.push((start + lead, end - trail));
    }
}
