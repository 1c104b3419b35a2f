const JAVA_LANG: &str = "java.lang.";

/// Drops the `java.lang.` package from standard class names
/// (`java.lang.String` becomes `String`). Only a leading prefix followed by
/// a simple class name is stripped, which keeps the function idempotent.
pub fn simplify_type_name(fully_qualified: &str) -> &str {
    match fully_qualified.strip_prefix(JAVA_LANG) {
        Some(rest) if !rest.is_empty() && !rest.contains('.') => rest,
        _ => fully_qualified,
    }
}
