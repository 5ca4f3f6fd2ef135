use serde_json::Value;

/// Renders a raw JSON property value as the text stored in a recognized
/// field. Lists of scalars become comma-separated text (the tags idiom),
/// `null` becomes empty text, objects keep their compact JSON form.
pub(crate) fn value_to_text(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => items
            .iter()
            .map(value_to_text)
            .collect::<Vec<_>>()
            .join(", "),
        other => other.to_string(),
    }
}

/// Comma-separated tag tokens, trimmed, empties dropped.
pub(crate) fn tag_tokens(tags: &str) -> impl Iterator<Item = &str> {
    tags.split(',').map(str::trim).filter(|t| !t.is_empty())
}

/// Byte offset of a 1-based line/column position reported by serde_json.
pub(crate) fn byte_offset(source: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, chunk) in source.split(|b| *b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column).min(source.len());
        }
        offset += chunk.len() + 1;
    }
    source.len()
}
