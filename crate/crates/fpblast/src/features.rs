//! The supported-feature matrix for this floating-point API.

/// Feature rows in a fixed order, each with its support status.
pub fn feature_matrix() -> Vec<(&'static str, bool)> {
    vec![
        ("Create floating point sort", true),
        ("Create rounding mode sort", true),
        ("Create floating point literal", true),
        ("Create plus and minus infinity", true),
        ("Create plus and minus zeroes", true),
        ("Create NaN", true),
        ("Absolute value operator", true),
        ("Negation operator", true),
        ("Addition operator", true),
        ("Subtraction operator", true),
        ("Multiplication operator", true),
        ("Division operator", true),
        ("Fused multiply-add operator", true),
        ("Square root operator", true),
        ("Remainder operator", false),
        ("Rounding to integral operator", true),
        ("Minimum operator", false),
        ("Maximum operator", false),
        ("Less than or equal to operator", true),
        ("Less than operator", true),
        ("Greater than or equal to operator", true),
        ("Greater than operator", true),
        ("Equality operator", true),
        ("IsNormal check", true),
        ("IsSubnormal check", true),
        ("IsZero check", true),
        ("IsInfinite check", true),
        ("IsNaN check", true),
        ("IsNegative check", true),
        ("IsPositive check", true),
        ("Convert to FP from real", false),
        ("Convert to FP from signed BV", true),
        ("Convert to FP from unsigned BV", true),
        ("Convert to FP from another FP", true),
        ("Convert to unsigned BV from FP", true),
        ("Convert to signed BV from FP", true),
        ("Convert to real from FP", false),
        ("Convert to IEEE BV from FP", true),
        ("Convert to floating-point from IEEE BV", true),
    ]
}

/// Plain-text table.
pub fn render_text() -> String {
    let rows = feature_matrix();
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, supported) in rows {
        out.push_str(&format!(
            "{:<w$}  {}\n",
            name,
            if supported {
                "supported"
            } else {
                "unsupported"
            },
            w = width
        ));
    }
    out
}

/// Deterministic JSON rendering: an array of feature objects.
pub fn render_json() -> String {
    let mut out = String::from("[\n");
    let rows = feature_matrix();
    for (i, (name, supported)) in rows.iter().enumerate() {
        out.push_str(&format!(
            "  {{\"feature\": \"{}\", \"supported\": {}}}{}\n",
            name,
            supported,
            if i + 1 < rows.len() { "," } else { "" }
        ));
    }
    out.push_str("]\n");
    out
}
