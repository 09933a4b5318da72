//! `lo:hi:n` grids whose bounds are small linear expressions in l, b, c1, c2.

use std::collections::HashMap;

/// Values the symbols of a bound expression resolve to.
#[derive(Debug, Clone, Default)]
pub struct Symbols(HashMap<&'static str, f64>);

impl Symbols {
    pub fn new(l: f64, b: f64) -> Self {
        Symbols(HashMap::from([("l", l), ("b", b)]))
    }

    pub fn with_policy(mut self, c1: f64, c2: f64) -> Self {
        self.0.insert("c1", c1);
        self.0.insert("c2", c2);
        self
    }
}

/// Evaluates sums of terms such as `-l`, `3.5`, `b+3l`, `c2-0.5`, `0.5l`.
pub fn eval(expr: &str, sym: &Symbols) -> Result<f64, String> {
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty bound".into());
    }
    let mut total = 0.0;
    let mut rest = s.as_str();
    while !rest.is_empty() {
        let (sign, body) = match rest.as_bytes()[0] {
            b'+' => (1.0, &rest[1..]),
            b'-' => (-1.0, &rest[1..]),
            _ if rest.len() == s.len() => (1.0, rest),
            _ => return Err(format!("cannot parse `{expr}`")),
        };
        // a numeric coefficient may carry its own exponent sign, e.g. 1e-3
        let mut end = 0;
        let bytes = body.as_bytes();
        while end < bytes.len() {
            let c = bytes[end];
            let exp_sign = (c == b'+' || c == b'-') && end > 0 && matches!(bytes[end - 1], b'e' | b'E');
            if (c == b'+' || c == b'-')
                && !exp_sign {
                    break;
                }
            end += 1;
        }
        total += sign * term(&body[..end], sym).ok_or_else(|| format!("cannot parse `{expr}`"))?;
        rest = &body[end..];
    }
    Ok(total)
}

fn term(t: &str, sym: &Symbols) -> Option<f64> {
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    for (name, value) in &sym.0 {
        if let Some(coef) = t.strip_suffix(name) {
            let c = if coef.is_empty() { 1.0 } else { coef.strip_suffix('*').unwrap_or(coef).parse::<f64>().ok()? };
            return Some(c * value);
        }
    }
    None
}

/// Parses `lo:hi:n` into n evenly spaced points.
pub fn parse(grid: &str, sym: &Symbols) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = grid.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("grid `{grid}` must look like lo:hi:n"));
    };
    let (lo, hi) = (eval(lo, sym)?, eval(hi, sym)?);
    let n: usize = n.trim().parse().map_err(|_| format!("grid `{grid}`: n must be a positive integer"))?;
    if n == 0 || !(lo.is_finite() && hi.is_finite()) {
        return Err(format!("grid `{grid}` needs finite bounds and n >= 1"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    if hi < lo {
        return Err(format!("grid `{grid}` has hi < lo"));
    }
    Ok(impulse_core::quad::linspace(lo, hi, n))
}

/// `c1,c2` pair.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => match (a.parse(), b.parse()) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            _ => Err(format!("policy `{s}` must be two numbers c1,c2")),
        },
        _ => Err(format!("policy `{s}` must be `c1,c2` or `optimal`")),
    }
}
