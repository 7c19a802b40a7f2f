//! Value parsers for flags whose syntax clap cannot express directly.

use voi_core::{ParamRef, ProbabilityInterval};

/// A comma-separated list of parameter references. Commas inside a
/// reference's parentheses belong to its conditioning clause.
#[derive(Clone, Debug, PartialEq)]
pub struct RefList(pub Vec<ParamRef>);

pub fn ref_list(text: &str) -> Result<RefList, String> {
    let mut refs = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                refs.push(param_ref(&text[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
    }
    refs.push(param_ref(&text[start..])?);
    Ok(RefList(refs))
}

pub fn param_ref(text: &str) -> Result<ParamRef, String> {
    text.trim().parse().map_err(|e: voi_core::Error| e.to_string())
}

/// `<ref>=lo:hi`, e.g. `p(Field=dry)=0.6:0.8`.
pub fn interval_override(text: &str) -> Result<(ParamRef, ProbabilityInterval), String> {
    let (reference, bounds) = text
        .rsplit_once('=')
        .filter(|(r, _)| r.trim_end().ends_with(')'))
        .ok_or_else(|| format!("`{text}` is not of the form <ref>=lo:hi"))?;
    let interval = bounds.parse().map_err(|e: voi_core::Error| e.to_string())?;
    Ok((param_ref(reference)?, interval))
}

/// `lo:hi` with `lo < hi`.
pub fn range(text: &str) -> Result<(f64, f64), String> {
    let parsed = text
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse::<f64>().ok()?, hi.trim().parse::<f64>().ok()?)));
    match parsed {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo < hi => Ok((lo, hi)),
        _ => Err(format!("`{text}` is not a range lo:hi with lo < hi")),
    }
}

/// `Var=outcome`.
pub fn target(text: &str) -> Result<(String, String), String> {
    voi_protocol::parse_target(text).ok_or_else(|| format!("`{text}` is not of the form Var=outcome"))
}
