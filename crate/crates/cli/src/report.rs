use serde::Serialize;

use crate::tol::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Residual compared against a tolerance.
    Float,
    /// Integer or structural equality; passes iff the mismatch count is zero.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub kind: Kind,
    /// `None` when the residual was not finite.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Passes iff value < tolerance. The comparison is strict so a zero tolerance fails every residual.
    pub fn float(id: &str, value: f64, tol: f64) -> Self {
        let finite = value.is_finite();
        Check {
            id: id.into(),
            kind: Kind::Float,
            value: finite.then_some(value),
            tolerance: Some(tol),
            pass: finite && value < tol,
        }
    }

    /// Float check whose tolerance is looked up under the same id.
    pub fn keyed(tols: &Tolerances, id: &str, value: f64) -> Self {
        Check::float(id, value, tols.get(id))
    }

    pub fn exact(id: &str, mismatches: usize) -> Self {
        Check { id: id.into(), kind: Kind::Exact, value: Some(mismatches as f64), tolerance: None, pass: mismatches == 0 }
    }

    pub fn line(&self) -> String {
        let v = self.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "non-finite".into());
        let t = self.tolerance.map(|t| format!(" < {t:.1e}")).unwrap_or_default();
        format!("{} {:<36} {v}{t}", if self.pass { "PASS" } else { "FAIL" }, self.id)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Environment {
    pub fn current() -> Self {
        Environment { version: env!("CARGO_PKG_VERSION"), os: std::env::consts::OS, arch: std::env::consts::ARCH }
    }
}
