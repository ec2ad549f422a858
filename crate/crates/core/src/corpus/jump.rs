use super::tokenize::{Token, TokenKind};
use crate::agents::JumpAction;

/// Resume positions for every jump action at every token position.
/// The terminal sentinel is `len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpTable {
    next_sub: Vec<usize>,
    next_sent: Vec<usize>,
}

impl JumpTable {
    pub fn len(&self) -> usize {
        self.next_sub.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next_sub.is_empty()
    }

    pub fn terminal(&self) -> usize {
        self.len()
    }

    /// Position at which reading resumes after taking `action` at `pos`.
    pub fn target(&self, pos: usize, action: JumpAction) -> usize {
        let t = self.terminal();
        match action {
            JumpAction::NextWord => (pos + 1).min(t),
            JumpAction::NextSubSep => self.next_sub[pos],
            JumpAction::NextSentEnd => self.next_sent[pos],
            JumpAction::EndOfText => t,
        }
    }
}

/// A sentence end also closes the current sub-sentence, so it counts as a
/// sub-sentence boundary.
pub fn build_jump_table(tokens: &[Token]) -> JumpTable {
    let t = tokens.len();
    let mut next_sub = vec![t; t];
    let mut next_sent = vec![t; t];
    let (mut sub, mut sent) = (t, t);
    for i in (0..t).rev() {
        next_sub[i] = sub;
        next_sent[i] = sent;
        match tokens[i].kind {
            TokenKind::SentEnd => {
                sub = i + 1;
                sent = i + 1;
            }
            TokenKind::SubSep => sub = i + 1,
            TokenKind::Word => {}
        }
    }
    JumpTable { next_sub, next_sent }
}
