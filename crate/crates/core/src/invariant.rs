//! Invariant sets, restrictions to them, and the irreducible decomposition.
//!
//! A set `A` is invariant when `1_A · T_t f = T_t(1_A f)` for all `t` and `f`.
//! On a finite state space this holds exactly when no conductance crosses the
//! boundary of `A`, so invariant sets are the unions of connected components
//! of the conductance graph. Killing rates play no role.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::form::DirichletForm;
use crate::space::StateSubset;
use crate::tolerance::Tolerances;

/// First pair `(x, y)` with `x ∈ A`, `y ∉ A` and `c(x, y) > 0`.
pub fn cut_edge(form: &DirichletForm, subset: &StateSubset) -> Option<(usize, usize)> {
    let n = form.len();
    (0..n)
        .filter(|&x| subset.contains(x))
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .find(|&(x, y)| !subset.contains(y) && form.conductance(x, y) != 0.0)
}

/// Largest violation of `1_A T_t = T_t 1_A` over the grid, measured on the
/// entries of `exp(−tL)` that connect `A` with its complement.
pub fn invariance_residual(
    form: &DirichletForm,
    subset: &StateSubset,
    t_grid: &[f64],
) -> Result<f64> {
    check_len(form.len(), subset.universe())?;
    let semigroup = form.semigroup();
    let n = form.len();
    let mut worst = 0.0_f64;
    for &t in t_grid {
        let p = semigroup.matrix(t)?;
        for x in 0..n {
            for y in 0..n {
                if subset.contains(x) != subset.contains(y) {
                    worst = worst.max(p[(x, y)].abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Invariance decided by the cut criterion, cross-checked against the
/// semigroup identity on `t_grid`.
pub fn is_invariant(
    form: &DirichletForm,
    subset: &StateSubset,
    t_grid: &[f64],
    tol: &Tolerances,
) -> bool {
    if subset.universe() != form.len() || cut_edge(form, subset).is_some() {
        return false;
    }
    match invariance_residual(form, subset, t_grid) {
        Ok(r) => r <= tol.operator,
        Err(_) => false,
    }
}

fn require_invariant(form: &DirichletForm, subset: &StateSubset) -> Result<()> {
    check_len(form.len(), subset.universe())?;
    match cut_edge(form, subset) {
        Some((inside, outside)) => Err(Error::NotInvariant { inside, outside }),
        None => Ok(()),
    }
}

/// Partition of the states into minimal invariant sets.
///
/// Components are numbered by their smallest state index and each
/// component's members are listed in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrreducibleDecomposition {
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

impl IrreducibleDecomposition {
    /// Builds a decomposition from a per-state component id, renumbering the
    /// ids into canonical order.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut renumber: Vec<Option<usize>> = Vec::new();
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut component_of = Vec::with_capacity(labels.len());
        for (x, &label) in labels.iter().enumerate() {
            if label >= renumber.len() {
                renumber.resize(label + 1, None);
            }
            let id = *renumber[label].get_or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            components[id].push(x);
            component_of.push(id);
        }
        IrreducibleDecomposition {
            components,
            component_of,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn states(&self) -> usize {
        self.component_of.len()
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component(&self, id: usize) -> &[usize] {
        &self.components[id]
    }

    pub fn component_of(&self, state: usize) -> usize {
        self.component_of[state]
    }

    pub fn component_ids(&self) -> &[usize] {
        &self.component_of
    }

    pub fn subset(&self, id: usize) -> StateSubset {
        let mut mask = vec![false; self.states()];
        for &x in &self.components[id] {
            mask[x] = true;
        }
        StateSubset::from_mask(mask)
    }
}

/// Connected components of the graph with edges `{c(x, y) > 0}`.
pub fn irreducible_decomposition(form: &DirichletForm) -> IrreducibleDecomposition {
    let n = form.len();
    let c = form.conductances();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = next;
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if label[y] == usize::MAX && c[(x, y)] > 0.0 {
                    label[y] = next;
                    queue.push_back(y);
                }
            }
        }
        next += 1;
    }
    IrreducibleDecomposition::from_labels(&label)
}

/// The form `E^A(f|_A, g|_A) = E(1_A f, 1_A g)` on the states of `A`, in
/// increasing index order.
pub fn restrict_form(form: &DirichletForm, subset: &StateSubset) -> Result<DirichletForm> {
    require_invariant(form, subset)?;
    let idx = subset.indices();
    let space = form.space().subspace(&idx)?;
    let c = form.conductances();
    let conductances = DMatrix::from_fn(idx.len(), idx.len(), |a, b| c[(idx[a], idx[b])]);
    let killing = idx.iter().map(|&x| form.killing()[x]).collect();
    DirichletForm::new(space, conductances, killing)
}

/// `T^A_t (f|_A) = T_t(f 1_A)|_A`, evaluated through the parent semigroup.
pub fn restrict_semigroup(
    form: &DirichletForm,
    subset: &StateSubset,
    t: f64,
    f_on_subset: &[f64],
) -> Result<Vec<f64>> {
    require_invariant(form, subset)?;
    let idx = subset.indices();
    check_len(idx.len(), f_on_subset.len())?;
    let mut extended = vec![0.0; form.len()];
    for (&x, &v) in idx.iter().zip(f_on_subset) {
        extended[x] = v;
    }
    let full = form.semigroup().apply(t, &extended)?;
    Ok(idx.iter().map(|&x| full[x]).collect())
}
