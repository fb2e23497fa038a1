//! Line-oriented C lexing: comment and literal masking.

/// Lexer state carried from one line to the next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexState {
    in_block_comment: bool,
}

/// Replaces comments with spaces. When `blank_literals` is set, the bodies
/// of string and character literals are blanked too, so the result only
/// holds code tokens.
pub fn mask_line(line: &str, state: &mut LexState, blank_literals: bool) -> String {
    let chars: Vec<char> = line.chars().collect();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if state.in_block_comment {
            if c == '*' && next == Some('/') {
                state.in_block_comment = false;
                out.push_str("  ");
                i += 2;
            } else {
                out.push(' ');
                i += 1;
            }
            continue;
        }
        match (c, next) {
            ('/', Some('*')) => {
                state.in_block_comment = true;
                out.push_str("  ");
                i += 2;
            }
            ('/', Some('/')) => break,
            ('"', _) | ('\'', _) => {
                let quote = c;
                out.push(quote);
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    if d == '\\' && i + 1 < chars.len() {
                        if blank_literals {
                            out.push_str("  ");
                        } else {
                            out.push(d);
                            out.push(chars[i + 1]);
                        }
                        i += 2;
                        continue;
                    }
                    i += 1;
                    if d == quote {
                        out.push(d);
                        break;
                    }
                    out.push(if blank_literals { ' ' } else { d });
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

/// Masks every line of `text`, keeping line structure.
pub fn mask_text<'a>(lines: impl IntoIterator<Item = &'a str>, blank_literals: bool) -> Vec<String> {
    let mut state = LexState::default();
    lines
        .into_iter()
        .map(|l| mask_line(l, &mut state, blank_literals))
        .collect()
}

/// True for lines that hold nothing but a comment.
pub fn is_comment_only(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("//") || t.starts_with("/*") || t.starts_with('*')
}
