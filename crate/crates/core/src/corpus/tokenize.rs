use super::vocab::Vocabulary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Word,
    /// `,` or `;`
    SubSep,
    /// `.`, `!` or `?`
    SentEnd,
}

impl TokenKind {
    pub fn of(surface: &str) -> Self {
        match surface {
            "," | ";" => TokenKind::SubSep,
            "." | "!" | "?" => TokenKind::SentEnd,
            _ => TokenKind::Word,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub id: usize,
    pub kind: TokenKind,
}

fn is_structural(c: char) -> bool {
    matches!(c, ',' | ';' | '.' | '!' | '?')
}

/// Splits on whitespace and detaches trailing structural punctuation, one
/// token per mark. Punctuation inside a word ("3.5", "e.g") stays attached.
pub fn split_surfaces(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let word_end = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_structural(c))
            .map_or(0, |(i, c)| i + c.len_utf8());
        if word_end > 0 {
            out.push(&chunk[..word_end]);
        }
        let tail = &chunk[word_end..];
        // structural marks are all single-byte ASCII
        out.extend((0..tail.len()).map(|i| &tail[i..i + 1]));
    }
    out
}

pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<Token> {
    split_surfaces(text)
        .into_iter()
        .map(|s| Token {
            surface: s.to_string(),
            id: vocab.id(&s.to_lowercase()),
            kind: TokenKind::of(s),
        })
        .collect()
}
