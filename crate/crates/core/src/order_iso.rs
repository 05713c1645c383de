//! Order isomorphisms between function spaces on finite measured sets.
//!
//! With fully supported measures every order isomorphism has the form
//! `U f = (f/s)∘τ⁻¹` for a positive scaling `s` on the source and a
//! bijection `τ` of states, i.e. `(Uf)(τ(x)) = f(x)/s(x)`. The inverse is
//! `U⁻¹ g = s·(g∘τ)`.
//!
//! The three elementary maps are
//!
//! | map   | scaling          | transformation |
//! |-------|------------------|----------------|
//! | `U_h` | `h`              | identity       |
//! | `U_j` | `1`              | `j`            |
//! | `U_φ` | `1/φ`            | identity       |
//!
//! and composition follows `(U₂U₁)f = (f / (s₁·(s₂∘τ₁)))∘(τ₂τ₁)⁻¹`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::form::DirichletForm;
use crate::invariant::{
    cut_edge, irreducible_decomposition, restrict_form, IrreducibleDecomposition,
};
use crate::space::{invert_bijection, StateSpace, StateSubset};
use crate::tolerance::Tolerances;
use crate::transform::{ExcessiveFunction, Relabeling};

#[derive(Debug, Clone, PartialEq)]
pub struct OrderIsomorphism {
    source: StateSpace,
    target: StateSpace,
    scaling: Vec<f64>,
    tau: Vec<usize>,
    tau_inv: Vec<usize>,
}

impl OrderIsomorphism {
    pub fn new(
        source: StateSpace,
        target: StateSpace,
        scaling: Vec<f64>,
        tau: Vec<usize>,
    ) -> Result<Self> {
        check_len(source.len(), target.len())?;
        check_len(source.len(), scaling.len())?;
        check_len(source.len(), tau.len())?;
        if let Some(index) = scaling.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::NonPositive {
                index,
                value: scaling[index],
            });
        }
        let tau_inv = invert_bijection(&tau)?;
        Ok(OrderIsomorphism {
            source,
            target,
            scaling,
            tau,
            tau_inv,
        })
    }

    pub fn identity(space: StateSpace) -> Self {
        let n = space.len();
        let tau: Vec<usize> = (0..n).collect();
        OrderIsomorphism {
            target: space.clone(),
            source: space,
            scaling: vec![1.0; n],
            tau_inv: tau.clone(),
            tau,
        }
    }

    /// `U_h : L²(m) → L²(h²m)`.
    pub fn from_uh(space: &StateSpace, h: &ExcessiveFunction) -> Result<Self> {
        check_len(space.len(), h.len())?;
        let measure = h
            .values()
            .iter()
            .zip(space.measure())
            .map(|(hx, mx)| hx * hx * mx)
            .collect();
        let target = space.with_measure(measure)?;
        Self::new(
            space.clone(),
            target,
            h.values().to_vec(),
            (0..space.len()).collect(),
        )
    }

    /// `U_j f = f∘j⁻¹`.
    pub fn from_uj(j: &Relabeling) -> Self {
        OrderIsomorphism {
            source: j.source().clone(),
            target: j.target().clone(),
            scaling: vec![1.0; j.len()],
            tau: j.map().to_vec(),
            tau_inv: j.inverse_map().to_vec(),
        }
    }

    /// `U_φ f = φ·f` on the space carrying `φ`.
    pub fn from_uphi(space: &StateSpace, phi: &StepScaling) -> Result<Self> {
        check_len(space.len(), phi.decomposition().states())?;
        let scaling = phi.values().iter().map(|v| 1.0 / v).collect();
        Self::new(
            space.clone(),
            space.clone(),
            scaling,
            (0..space.len()).collect(),
        )
    }

    pub fn source(&self) -> &StateSpace {
        &self.source
    }

    pub fn target(&self) -> &StateSpace {
        &self.target
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn tau_inverse(&self) -> &[usize] {
        &self.tau_inv
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), f.len())?;
        Ok(self
            .tau_inv
            .iter()
            .map(|&x| f[x] / self.scaling[x])
            .collect())
    }

    pub fn apply_inverse(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), g.len())?;
        Ok(self
            .tau
            .iter()
            .zip(&self.scaling)
            .map(|(&y, s)| s * g[y])
            .collect())
    }

    pub fn inverse(&self) -> Self {
        let scaling = self
            .tau_inv
            .iter()
            .map(|&x| 1.0 / self.scaling[x])
            .collect();
        OrderIsomorphism {
            source: self.target.clone(),
            target: self.source.clone(),
            scaling,
            tau: self.tau_inv.clone(),
            tau_inv: self.tau.clone(),
        }
    }

    /// `c·U`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let scaling = self.scaling.iter().map(|s| s / c).collect();
        Self::new(
            self.source.clone(),
            self.target.clone(),
            scaling,
            self.tau.clone(),
        )
    }

    /// The `n × n` matrix with `U[τ(x), x] = 1/s(x)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut u = DMatrix::zeros(n, n);
        for x in 0..n {
            u[(self.tau[x], x)] = 1.0 / self.scaling[x];
        }
        u
    }

    /// `max_x ‖U e_x − V e_x‖∞`, relative to `max_x ‖U e_x‖∞ ∨ ‖V e_x‖∞`.
    pub fn basis_residual(&self, other: &OrderIsomorphism) -> Result<f64> {
        check_len(self.len(), other.len())?;
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for x in 0..self.len() {
            let a = 1.0 / self.scaling[x];
            let b = 1.0 / other.scaling[x];
            scale = scale.max(a).max(b);
            let diff = if self.tau[x] == other.tau[x] {
                (a - b).abs()
            } else {
                a.max(b)
            };
            worst = worst.max(diff);
        }
        Ok(if scale > 0.0 { worst / scale } else { 0.0 })
    }

    /// Largest `|m₂(τx) − s(x)² m₁(x)| / (s(x)² m₁(x))`.
    pub fn unitary_defect(&self) -> f64 {
        (0..self.len())
            .map(|x| {
                let pulled = self.scaling[x] * self.scaling[x] * self.source.measure()[x];
                (self.target.measure()[self.tau[x]] - pulled).abs() / pulled
            })
            .fold(0.0, f64::max)
    }

    /// `(Uf, Ug)_{m₂} = (f, g)_{m₁}` for all `f, g`, checked pointwise as
    /// `m₂(τ(x)) = s(x)² m₁(x)`.
    pub fn is_unitary(&self, tol: &Tolerances) -> bool {
        self.unitary_defect() <= tol.measure
    }

    /// `m₂(τx) / (s(x)² m₁(x))`; for an intertwining `U` this is constant on
    /// every irreducible component and equals the squared operator norm of
    /// the restriction of `U` to it.
    pub fn norm_ratio(&self, x: usize) -> f64 {
        self.target.measure()[self.tau[x]]
            / (self.scaling[x] * self.scaling[x] * self.source.measure()[x])
    }
}

/// `U₂ ∘ U₁`.
pub fn compose(
    second: &OrderIsomorphism,
    first: &OrderIsomorphism,
    tol: &Tolerances,
) -> Result<OrderIsomorphism> {
    check_len(first.len(), second.len())?;
    if !first.target.approx_eq(&second.source, tol.measure) {
        return Err(Error::SpaceMismatch(
            "target of the first map is not the source of the second",
        ));
    }
    let scaling = (0..first.len())
        .map(|x| first.scaling[x] * second.scaling[first.tau[x]])
        .collect();
    let tau = first.tau.iter().map(|&y| second.tau[y]).collect();
    OrderIsomorphism::new(first.source.clone(), second.target.clone(), scaling, tau)
}

fn check_forms(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<()> {
    check_len(u.len(), form1.len())?;
    check_len(u.len(), form2.len())?;
    if !u.source.approx_eq(form1.space(), tol.measure) {
        return Err(Error::SpaceMismatch(
            "source of the order isomorphism is not the space of the first form",
        ));
    }
    if !u.target.approx_eq(form2.space(), tol.measure) {
        return Err(Error::SpaceMismatch(
            "target of the order isomorphism is not the space of the second form",
        ));
    }
    Ok(())
}

/// Relative max-entry norm of `U A − B U` for matrices `A` on the source
/// and `B` on the target.
fn conjugation_residual(u: &OrderIsomorphism, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = u.len();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for x in 0..n {
        for y in 0..n {
            // (U A)[τx, y] and (B U)[τx, y]
            let left = a[(x, y)] / u.scaling[x];
            let right = b[(u.tau[x], u.tau[y])] / u.scaling[y];
            worst = worst.max((left - right).abs());
            scale = scale.max(left.abs()).max(right.abs());
        }
    }
    if scale > 0.0 {
        worst / scale
    } else {
        0.0
    }
}

/// `‖U L₁ − L₂ U‖`, relative to the larger of the two products.
pub fn generator_residual(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
) -> Result<f64> {
    check_len(u.len(), form1.len())?;
    check_len(u.len(), form2.len())?;
    Ok(conjugation_residual(
        u,
        form1.generator().matrix(),
        form2.generator().matrix(),
    ))
}

/// `max_t ‖U T¹_t − T²_t U‖` over the grid, each relative as in
/// [`generator_residual`].
pub fn semigroup_residual(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    t_grid: &[f64],
) -> Result<f64> {
    check_len(u.len(), form1.len())?;
    check_len(u.len(), form2.len())?;
    let (s1, s2) = (form1.semigroup(), form2.semigroup());
    let mut worst = 0.0_f64;
    for &t in t_grid {
        worst = worst.max(conjugation_residual(u, &s1.matrix(t)?, &s2.matrix(t)?));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwiningReport {
    pub intertwines: bool,
    /// Relative generator residual `‖U L₁ − L₂ U‖`.
    pub residual: f64,
}

/// `U T¹_t = T²_t U` for all `t`, decided on generators.
pub fn intertwines(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<IntertwiningReport> {
    check_forms(u, form1, form2, tol)?;
    let residual = generator_residual(u, form1, form2)?;
    Ok(IntertwiningReport {
        intertwines: residual <= tol.generator,
        residual,
    })
}

/// [`OrderIsomorphism::is_unitary`] after checking that `U` maps the space
/// of `form1` to that of `form2`.
pub fn is_unitary(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> bool {
    check_forms(u, form1, form2, tol).is_ok() && u.is_unitary(tol)
}

/// The restriction `U^A : L²(A, m₁) → L²(τ(A), m₂)` to an invariant set of
/// `form1`. Both sides list their states in increasing index order.
pub fn restrict(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    subset: &StateSubset,
) -> Result<OrderIsomorphism> {
    check_len(u.len(), subset.universe())?;
    check_len(u.len(), form1.len())?;
    if let Some((inside, outside)) = cut_edge(form1, subset) {
        return Err(Error::NotInvariant { inside, outside });
    }
    let idx = subset.indices();
    let image = subset.image(&u.tau, u.len())?.indices();
    let mut local = vec![usize::MAX; u.len()];
    for (i, &y) in image.iter().enumerate() {
        local[y] = i;
    }
    let tau = idx.iter().map(|&x| local[u.tau[x]]).collect();
    let scaling = idx.iter().map(|&x| u.scaling[x]).collect();
    OrderIsomorphism::new(
        u.source.subspace(&idx)?,
        u.target.subspace(&image)?,
        scaling,
        tau,
    )
}

/// Mean of the norm ratio over `states` and its largest relative deviation.
pub(crate) fn ratio_on(u: &OrderIsomorphism, states: &[usize]) -> (f64, f64) {
    let mean = states.iter().map(|&x| u.norm_ratio(x)).sum::<f64>() / states.len() as f64;
    let spread = states
        .iter()
        .map(|&x| (u.norm_ratio(x) / mean - 1.0).abs())
        .fold(0.0, f64::max);
    (mean, spread)
}

/// Operator norm of the restriction of `U` to an irreducible invariant set
/// of `form1`. Fails when the norm ratio is not constant on the set, which
/// means `U` does not intertwine.
pub fn operator_norm_on_component(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    subset: &StateSubset,
    tol: &Tolerances,
) -> Result<f64> {
    let restricted = restrict_form(form1, subset)?;
    let components = irreducible_decomposition(&restricted).len();
    if components != 1 {
        return Err(Error::Reducible(components));
    }
    let states = subset.indices();
    let (mean, spread) = ratio_on(u, &states);
    if spread > tol.operator {
        return Err(Error::NonConstantRatio {
            state: states[0],
            spread,
        });
    }
    Ok(libm::sqrt(mean))
}

/// A positive function that is constant on each irreducible component:
/// `φ = Σ c_n 1_{A_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScaling {
    decomposition: IrreducibleDecomposition,
    constants: Vec<f64>,
}

impl StepScaling {
    pub fn new(decomposition: IrreducibleDecomposition, constants: Vec<f64>) -> Result<Self> {
        check_len(decomposition.len(), constants.len())?;
        if let Some(index) = constants.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidStepConstant {
                index,
                value: constants[index],
            });
        }
        Ok(StepScaling {
            decomposition,
            constants,
        })
    }

    pub fn ones(decomposition: IrreducibleDecomposition) -> Self {
        let constants = vec![1.0; decomposition.len()];
        StepScaling {
            decomposition,
            constants,
        }
    }

    pub fn decomposition(&self) -> &IrreducibleDecomposition {
        &self.decomposition
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    pub fn constant(&self, component: usize) -> f64 {
        self.constants[component]
    }

    /// `φ(y)` for every state `y`.
    pub fn values(&self) -> Vec<f64> {
        self.decomposition
            .component_ids()
            .iter()
            .map(|&n| self.constants[n])
            .collect()
    }

    /// Smallest `c ≥ 1` with `1/c ≤ c_n ≤ c` for all `n`.
    pub fn bound(&self) -> f64 {
        self.constants
            .iter()
            .map(|&v| v.max(1.0 / v))
            .fold(1.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        self.constants.iter().all(|&v| v == 1.0)
    }
}
