//! Closed-form regret bounds.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `3 C n^{5/6} (dR/r)^{1/3}`.
    General,
    /// `2 n^{3/4} sqrt(3 R d C (L + C/r))`.
    Lipschitz,
    /// `6 n^{5/6} d C`, for bodies in near-isotropic position.
    CorollaryGeneral,
    /// `6 n^{3/4} d (sqrt(C L R) + C)`, for bodies in near-isotropic position.
    CorollaryLipschitz,
    /// `R G sqrt(n)` for projected descent with gradients of norm at most `G`.
    /// `R` is the extent argument and `G` is passed as `L`.
    FullInformation,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] = [
        BoundKind::General,
        BoundKind::Lipschitz,
        BoundKind::CorollaryGeneral,
        BoundKind::CorollaryLipschitz,
        BoundKind::FullInformation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::General => "general",
            BoundKind::Lipschitz => "lipschitz",
            BoundKind::CorollaryGeneral => "corollary-general",
            BoundKind::CorollaryLipschitz => "corollary-lipschitz",
            BoundKind::FullInformation => "full-info",
        }
    }

    pub fn needs_lipschitz(self) -> bool {
        matches!(
            self,
            BoundKind::Lipschitz | BoundKind::CorollaryLipschitz | BoundKind::FullInformation
        )
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown bound kind `{s}`")))
    }
}

/// Evaluates the closed form selected by `kind`. `l` is required for the
/// Lipschitz kinds and holds `G` for [`BoundKind::FullInformation`].
pub fn bound_value(
    kind: BoundKind,
    n: u64,
    d: usize,
    r: f64,
    big_r: f64,
    c: f64,
    l: Option<f64>,
) -> Result<f64> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(HarnessError::Config(format!(
                "bound input {name} must be positive, got {v}"
            )))
        }
    };
    if n == 0 || d == 0 {
        return Err(HarnessError::Config(
            "bound inputs n and d must be positive".into(),
        ));
    }
    let nf = n as f64;
    let df = d as f64;
    let l = match (kind.needs_lipschitz(), l) {
        (true, None) => {
            return Err(HarnessError::Config(format!("bound kind `{kind}` needs L")));
        }
        (true, Some(l)) if !(l >= 0.0 && l.is_finite()) => {
            return Err(HarnessError::Config(format!(
                "L must be non-negative, got {l}"
            )));
        }
        (_, l) => l.unwrap_or(0.0),
    };
    let value = match kind {
        BoundKind::General => {
            let (r, big_r, c) = (positive("r", r)?, positive("R", big_r)?, positive("C", c)?);
            3.0 * c * nf.powf(5.0 / 6.0) * (df * big_r / r).cbrt()
        }
        BoundKind::Lipschitz => {
            let (r, big_r, c) = (positive("r", r)?, positive("R", big_r)?, positive("C", c)?);
            2.0 * nf.powf(0.75) * (3.0 * big_r * df * c * (l + c / r)).sqrt()
        }
        BoundKind::CorollaryGeneral => 6.0 * nf.powf(5.0 / 6.0) * df * positive("C", c)?,
        BoundKind::CorollaryLipschitz => {
            let (big_r, c) = (positive("R", big_r)?, positive("C", c)?);
            6.0 * nf.powf(0.75) * df * ((c * l * big_r).sqrt() + c)
        }
        BoundKind::FullInformation => positive("R", big_r)? * l * nf.sqrt(),
    };
    Ok(value)
}
