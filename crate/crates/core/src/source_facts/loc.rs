#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Str,
    Char,
    TextBlock,
}

/// Per-line flag: `true` when the line carries anything outside comments.
///
/// Line `i` of the result is the `i`-th line of `text` (0-based). A trailing
/// newline does not open a new line.
pub(crate) fn code_lines(text: &str) -> Vec<bool> {
    let chars: Vec<char> = text.chars().collect();
    let mut lines = Vec::new();
    let mut has_code = false;
    let mut state = State::Code;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '\n' {
            lines.push(has_code);
            has_code = false;
            // string and char literals cannot span lines
            if matches!(state, State::LineComment | State::Str | State::Char) {
                state = State::Code;
            }
            i += 1;
            continue;
        }
        match state {
            State::Code => {
                if c == '/' && next == Some('/') {
                    state = State::LineComment;
                    i += 2;
                    continue;
                }
                if c == '/' && next == Some('*') {
                    state = State::BlockComment;
                    i += 2;
                    continue;
                }
                if !c.is_whitespace() {
                    has_code = true;
                }
                if c == '"' {
                    if next == Some('"') && chars.get(i + 2) == Some(&'"') {
                        state = State::TextBlock;
                        i += 3;
                        continue;
                    }
                    state = State::Str;
                } else if c == '\'' {
                    state = State::Char;
                }
            }
            State::LineComment => {}
            State::BlockComment => {
                if c == '*' && next == Some('/') {
                    state = State::Code;
                    i += 2;
                    continue;
                }
            }
            State::Str | State::Char => {
                has_code = true;
                let close = if state == State::Str { '"' } else { '\'' };
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == close {
                    state = State::Code;
                }
            }
            State::TextBlock => {
                if !c.is_whitespace() {
                    has_code = true;
                }
                if c == '\\' {
                    i += 2;
                    continue;
                }
                if c == '"' && next == Some('"') && chars.get(i + 2) == Some(&'"') {
                    state = State::Code;
                    i += 3;
                    continue;
                }
            }
        }
        i += 1;
    }
    if !chars.is_empty() && chars[chars.len() - 1] != '\n' {
        lines.push(has_code);
    }
    lines
}

/// Counts lines that are neither blank nor entirely comment.
pub fn count_loc(source_text: &str) -> u32 {
    code_lines(source_text).iter().filter(|&&code| code).count() as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_zero() {
        assert_eq!(count_loc(""), 0);
    }

    #[test]
    fn one_code_one_blank_one_comment() {
        assert_eq!(count_loc("int x;\n\n// note\n"), 1);
    }

    #[test]
    fn code_with_trailing_comment_counts() {
        assert_eq!(count_loc("int x; // trailing\n/* a */ int y;\n"), 2);
    }

    #[test]
    fn comment_markers_inside_strings_are_code() {
        let src = "String s = \"// not a comment\";\nString t = \"/* nor this\";\nint z;\n";
        assert_eq!(count_loc(src), 3);
    }

    #[test]
    fn block_comment_spanning_lines() {
        let src = "int a;\n/*\n * doc\n */\nint b; /* x\n y */ int c;\n";
        // `int b; /* x` and ` y */ int c;` both carry code
        assert_eq!(count_loc(src), 3);
    }

    #[test]
    fn no_trailing_newline() {
        assert_eq!(count_loc("a;\nb;"), 2);
    }

    proptest! {
        #[test]
        fn bounded_by_line_count(s in "[a-z/*\" \n;{}]{0,200}") {
            let total = if s.is_empty() { 0 } else { s.trim_end_matches('\n').split('\n').count() };
            prop_assert!(count_loc(&s) as usize <= total.max(s.lines().count()));
        }

        #[test]
        fn invariant_under_appended_blank_lines(s in "[a-z/*\" \n;{}]{0,200}", k in 0usize..5) {
            let mut padded = s.clone();
            if !padded.is_empty() && !padded.ends_with('\n') {
                padded.push('\n');
            }
            let base = count_loc(&padded);
            padded.push_str(&"\n   \n".repeat(k));
            prop_assert_eq!(count_loc(&padded), base);
        }
    }
}
