//! Tolerant HTML markup removal. Not a real HTML parser: tags become
//! block separators, entities are decoded afterwards, and anything
//! malformed degrades to keeping the visible text.

/// Removes markup from `raw`. Tag-delimited blocks of text end up
/// separated by single newlines with surrounding whitespace trimmed;
/// character entities are decoded after tags are gone so that escaped
/// angle brackets survive as text.
pub fn strip_html(raw: &str) -> String {
    let mut text = String::with_capacity(raw.len());
    let bytes = raw.as_bytes();
    let mut i = 0;
    while i < raw.len() {
        if bytes[i] == b'<' {
            if raw[i..].starts_with("<!--") {
                match raw[i + 4..].find("-->") {
                    Some(end) => {
                        text.push('\n');
                        i += 4 + end + 3;
                    }
                    None => break,
                }
                continue;
            }
            let tag_like = matches!(
                raw[i + 1..].chars().next(),
                Some(c) if c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?'
            );
            if tag_like {
                text.push('\n');
                match raw[i + 1..].find('>') {
                    Some(end) => i += 1 + end + 1,
                    // Unterminated tag: drop the rest as markup.
                    None => break,
                }
                continue;
            }
            // A bare '<' (comparison sign, stray bracket) is text.
            text.push('<');
            i += 1;
            continue;
        }
        let ch = raw[i..].chars().next().unwrap();
        text.push(ch);
        i += ch.len_utf8();
    }
    collapse_blocks(&decode_entities(&text))
}

fn collapse_blocks(text: &str) -> String {
    text.split('\n')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        // Entities are short; look for the ';' nearby.
        let semi = rest[1..].find(';').map(|j| j + 1);
        match semi {
            Some(j) if j <= 32 => match decode_entity(&rest[1..j]) {
                Some(ch) => {
                    out.push(ch);
                    rest = &rest[j + 1..];
                }
                None => {
                    out.push('&');
                    rest = &rest[1..];
                }
            },
            _ => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn decode_entity(body: &str) -> Option<char> {
    match body {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let num = body.strip_prefix('#')?;
            let (digits, radix) = match num.strip_prefix(['x', 'X']) {
                Some(hex) => (hex, 16),
                None => (num, 10),
            };
            let code = u32::from_str_radix(digits, radix).ok()?;
            char::from_u32(code)
        }
    }
}
