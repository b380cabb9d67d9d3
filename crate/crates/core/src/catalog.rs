//! Named test functions, each defined by an expression string.

use crate::error::{invalid, Result};
use crate::funcexpr::FuncExpr;

/// Default shift used by `shifted-inv` when no parameter is given.
pub const DEFAULT_SHIFT: f64 = 1e-3;

/// A catalog function: its canonical name and defining expression.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub expr: String,
}

impl CatalogEntry {
    pub fn parse(&self) -> Result<FuncExpr> {
        FuncExpr::parse(&self.expr)
    }
}

const FIXED: &[(&str, &str)] = &[
    ("runge3", "1/(1+25*sqrt(x^2+y^2+z^2))"),
    ("expdist", "exp(-sqrt((x-1)^2+(y-1)^2+(z-1)^2))"),
    ("coshinv", "cosh(3*(x+y+z))^(-2)"),
    ("spike", "10^5/(1+10^5*(x^2+y^2+z^2))"),
    ("logmix", "log(x+y*z+exp(x*y*z)+cos(sin(exp(x*y*z))))"),
    ("separable-demo", "exp(x)*cos(y)*(z^2+1)"),
    ("degenerate-tanh", "tanh(5*(x+z))*exp(y)"),
];

/// Names accepted by [`lookup`]; `shifted-inv` also takes `shifted-inv(EPS)`.
pub fn names() -> Vec<&'static str> {
    let mut v: Vec<&str> = FIXED.iter().map(|(n, _)| *n).collect();
    v.push("shifted-inv");
    v
}

/// Expression for `1/(x+y+z+3+eps)`.
pub fn shifted_inverse(eps: f64) -> String {
    format!("1/(x+y+z+3+{eps:?})")
}

/// Resolves a catalog name such as `runge3` or `shifted-inv(1e-3)`.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    let name = name.trim();
    if let Some(&(n, e)) = FIXED.iter().find(|(n, _)| *n == name) {
        return Ok(CatalogEntry {
            name: n.to_string(),
            expr: e.to_string(),
        });
    }
    if let Some(rest) = name.strip_prefix("shifted-inv") {
        let eps = if rest.is_empty() {
            DEFAULT_SHIFT
        } else {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .or_else(|| rest.strip_prefix(':'));
            match inner.map(|s| s.trim().parse::<f64>()) {
                Some(Ok(v)) if v > 0.0 => v,
                _ => return invalid(format!("bad shift in '{name}', expected shifted-inv(EPS) with EPS > 0")),
            }
        };
        return Ok(CatalogEntry {
            name: format!("shifted-inv({eps:?})"),
            expr: shifted_inverse(eps),
        });
    }
    invalid(format!(
        "unknown catalog function '{name}' (known: {})",
        names().join(", ")
    ))
}
