//! Finite measured state spaces and subsets of them.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::tolerance::rel_close;

/// Largest state count accepted by [`StateSpace::new`]. Semigroups are
/// computed from a dense eigendecomposition, which is cubic in the state count.
pub const DEFAULT_STATE_CAP: usize = 10_000;

/// A finite set of labeled states with a strictly positive weight on each.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    measure: Vec<f64>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>, measure: Vec<f64>) -> Result<Self> {
        Self::with_cap(labels, measure, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(labels: Vec<String>, measure: Vec<f64>, cap: usize) -> Result<Self> {
        check_len(labels.len(), measure.len())?;
        if labels.is_empty() {
            return Err(Error::EmptySpace);
        }
        if labels.len() > cap {
            return Err(Error::TooManyStates {
                count: labels.len(),
                cap,
            });
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for (index, &value) in measure.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidMeasure { index, value });
            }
        }
        Ok(StateSpace { labels, measure })
    }

    /// States labeled `{prefix}0`, `{prefix}1`, ...
    pub fn indexed(prefix: &str, measure: Vec<f64>) -> Result<Self> {
        let labels = (0..measure.len()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(labels, measure)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::indexed("s", vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.iter().sum()
    }

    /// Same labels, new weights.
    pub fn with_measure(&self, measure: Vec<f64>) -> Result<Self> {
        Self::new(self.labels.clone(), measure)
    }

    /// The states at `indices`, in the given order, with their weights.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let measure = indices.iter().map(|&i| self.measure[i]).collect();
        Self::new(labels, measure)
    }

    /// `(f, g)_m = Σ f(x) g(x) m(x)`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        check_len(self.len(), f.len())?;
        check_len(self.len(), g.len())?;
        Ok(f.iter()
            .zip(g)
            .zip(&self.measure)
            .map(|((a, b), m)| a * b * m)
            .sum())
    }

    pub fn norm(&self, f: &[f64]) -> Result<f64> {
        Ok(libm::sqrt(self.inner(f, f)?))
    }

    /// Labels identical and weights equal up to relative tolerance `rel`.
    pub fn approx_eq(&self, other: &StateSpace, rel: f64) -> bool {
        self.labels == other.labels
            && self
                .measure
                .iter()
                .zip(&other.measure)
                .all(|(&a, &b)| rel_close(a, b, rel))
    }
}

/// A subset of the states of some [`StateSpace`], as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSubset {
    mask: Vec<bool>,
}

impl StateSubset {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        StateSubset { mask }
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in indices {
            if i >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: i + 1,
                });
            }
            mask[i] = true;
        }
        Ok(StateSubset { mask })
    }

    pub fn full(n: usize) -> Self {
        StateSubset {
            mask: vec![true; n],
        }
    }

    pub fn empty(n: usize) -> Self {
        StateSubset {
            mask: vec![false; n],
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Size of the ambient state space.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.mask[index]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Member indices in increasing order.
    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        StateSubset {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &StateSubset) -> Self {
        StateSubset {
            mask: self
                .mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    /// Image under a map of state indices into a space of size `target_len`.
    pub fn image(&self, map: &[usize], target_len: usize) -> Result<Self> {
        check_len(self.universe(), map.len())?;
        let mut mask = vec![false; target_len];
        for i in self.indices() {
            let y = map[i];
            if y >= target_len {
                return Err(Error::NotBijective(i));
            }
            mask[y] = true;
        }
        Ok(StateSubset { mask })
    }

    /// `1_A · f`.
    pub fn indicator_times(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.mask)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect()
    }
}

/// Inverse of a bijection on `0..map.len()`.
pub(crate) fn invert_bijection(map: &[usize]) -> Result<Vec<usize>> {
    let n = map.len();
    let mut inverse = vec![usize::MAX; n];
    for (x, &y) in map.iter().enumerate() {
        if y >= n || inverse[y] != usize::MAX {
            return Err(Error::NotBijective(x));
        }
        inverse[y] = x;
    }
    Ok(inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn rejects_duplicates_and_bad_weights() {
        let dup = StateSpace::new(vec!["a".to_string(), "a".to_string()], vec![1.0, 1.0]);
        assert_eq!(dup, Err(Error::DuplicateLabel("a".to_string())));
        let zero = StateSpace::indexed("x", vec![1.0, 0.0]);
        assert!(matches!(zero, Err(Error::InvalidMeasure { index: 1, .. })));
        let nan = StateSpace::indexed("x", vec![f64::NAN]);
        assert!(matches!(nan, Err(Error::InvalidMeasure { index: 0, .. })));
        assert_eq!(StateSpace::indexed("x", vec![]), Err(Error::EmptySpace));
        let mismatch = StateSpace::new(vec!["a".to_string()], vec![1.0, 2.0]);
        assert!(matches!(mismatch, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn state_cap() {
        let err = StateSpace::with_cap((0..5).map(|i| i.to_string()).collect(), vec![1.0; 5], 4);
        assert_eq!(err, Err(Error::TooManyStates { count: 5, cap: 4 }));
    }

    #[test]
    fn weighted_inner_product() {
        let space = StateSpace::indexed("x", vec![1.0, 2.0, 0.5]).unwrap();
        let ip = space.inner(&[1.0, 1.0, 2.0], &[3.0, -1.0, 4.0]).unwrap();
        assert_eq!(ip, 3.0 - 2.0 + 4.0);
    }

    #[test]
    fn subset_ops() {
        let a = StateSubset::from_indices(5, &[0, 3]).unwrap();
        assert_eq!(a.indices(), vec![0, 3]);
        assert_eq!(a.complement().indices(), vec![1, 2, 4]);
        assert_eq!(a.image(&[4, 3, 2, 1, 0], 5).unwrap().indices(), vec![1, 4]);
        assert_eq!(
            a.indicator_times(&[1.0, 2.0, 3.0, 4.0, 5.0]),
            vec![1.0, 0.0, 0.0, 4.0, 0.0]
        );
        assert!(StateSubset::from_indices(2, &[2]).is_err());
    }

    #[test]
    fn bijection_inverse() {
        assert_eq!(invert_bijection(&[2, 0, 1]).unwrap(), vec![1, 2, 0]);
        assert_eq!(invert_bijection(&[0, 0]), Err(Error::NotBijective(1)));
        assert_eq!(invert_bijection(&[0, 5]), Err(Error::NotBijective(1)));
    }
}
