/// Numerical tolerances used by the checks in this crate.
///
/// `operator` and `generator` are relative to the magnitude of the quantities
/// being compared; `sign` is absolute and applies to entries of functions or
/// matrices whose exact value is known to be nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Operator identities: semigroup cross-checks, reconstruction of an
    /// order isomorphism on a basis, constancy of the per-component norm ratio.
    pub operator: f64,
    /// Generator-level residuals: intertwining, excessiveness, coefficient
    /// agreement of forms.
    pub generator: f64,
    /// Sign checks (positivity, sub-Markov bound).
    pub sign: f64,
    /// Pointwise measure identities (unitarity, measure preservation).
    pub measure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            operator: 1e-9,
            generator: 1e-9,
            sign: 1e-12,
            measure: 1e-12,
        }
    }
}

impl Tolerances {
    /// Defaults with `operator` and `generator` replaced by `relative`.
    pub fn with_relative(relative: f64) -> Self {
        Tolerances {
            operator: relative,
            generator: relative,
            ..Tolerances::default()
        }
    }
}

/// `|a - b| <= rel * max(|a|, |b|)`.
pub(crate) fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
