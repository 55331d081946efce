use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

type Guard = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Open box `lower < x < upper` (bounds may be infinite), optionally cut
/// further by a guard predicate such as `3x − 1 > 0`.
#[derive(Clone)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    guard: Option<(String, Guard)>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidConfig("domain dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidConfig("domain bounds need lower < upper".into()));
        }
        Ok(Self { lower, upper, guard: None })
    }

    /// All of ℝⁿ.
    pub fn unbounded(n: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; n], upper: vec![f64::INFINITY; n], guard: None }
    }

    /// The open positive orthant ℝⁿ₍>0₎.
    pub fn positive(n: usize) -> Self {
        Self { lower: vec![0.0; n], upper: vec![f64::INFINITY; n], guard: None }
    }

    pub fn with_guard<G>(mut self, label: impl Into<String>, guard: G) -> Self
    where
        G: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.guard = Some((label.into(), Arc::new(guard)));
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn guard_label(&self) -> Option<&str> {
        self.guard.as_ref().map(|(label, _)| label.as_str())
    }

    /// True iff `x` has the right length, is finite, lies strictly inside the
    /// box and passes the guard.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().all(|v| v.is_finite())
            && x.iter().zip(&self.lower).all(|(v, l)| v > l)
            && x.iter().zip(&self.upper).all(|(v, u)| v < u)
            && self.guard.as_ref().is_none_or(|(_, g)| g(x))
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainViolation { point: x.to_vec() })
        }
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("guard", &self.guard_label())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_bounds_exclude_boundary() {
        let d = Domain::positive(1);
        assert!(d.contains(&[1e-300]));
        assert!(!d.contains(&[0.0]));
        assert!(!d.contains(&[f64::NAN]));
        assert!(!d.contains(&[1.0, 1.0]));
    }

    #[test]
    fn guard_applies() {
        let d = Domain::positive(1).with_guard("3x-1>0", |x| 3.0 * x[0] - 1.0 > 0.0);
        assert!(!d.contains(&[1.0 / 3.0]));
        assert!(d.contains(&[0.34]));
        assert_eq!(d.check(&[0.2]), Err(Error::DomainViolation { point: vec![0.2] }));
    }

    #[test]
    fn rejects_inverted_bounds() {
        assert!(Domain::new(vec![1.0], vec![1.0]).is_err());
        assert!(Domain::new(vec![], vec![]).is_err());
    }
}
