//! Factorization of intertwining order isomorphisms into
//! `U = U_φ ∘ U_j ∘ U_h`.
//!
//! The unitary case: if `U` intertwines and is unitary, then `h = s` (the
//! scaling of `U`, equivalently `U⁻¹1`) is excessive because
//! `T¹_t h = U⁻¹ T²_t 1 ≤ U⁻¹ 1 = h`, and `j = τ` is a measure-preserving
//! relabeling from `h²·m₁` to `m₂` that carries the h-transform of the first
//! form onto the second.
//!
//! The general case: `τ` maps the irreducible components `A¹_n` of the first
//! form onto those of the second, and on each component the ratio
//! `m₂(τx) / (s(x)² m₁(x))` is a constant `c_n²`, where `c_n` is the operator
//! norm of `U` restricted to `A¹_n`. With `φ = Σ c_n 1_{τ(A¹_n)}` the map
//! `U_φ⁻¹ U` is unitary and the unitary case applies. The resulting
//! `h = s·(φ∘τ)` is canonical. Scaling `h` and `φ` by the same `λ > 0` leaves
//! the scaling `s = h/(φ∘τ)` and the target generator unchanged (only the
//! target measure is multiplied by `λ²`), and `factorize` always returns the
//! representative whose `U_j U_h` part is unitary.

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::form::DirichletForm;
use crate::invariant::{irreducible_decomposition, restrict_form, IrreducibleDecomposition};
use crate::order_iso::{
    compose, intertwines, operator_norm_on_component, ratio_on, restrict, OrderIsomorphism,
    StepScaling,
};
use crate::space::{StateSpace, StateSubset};
use crate::tolerance::Tolerances;
use crate::transform::{
    h_transform, min_relative_lh, pushforward_form, ExcessiveFunction, Relabeling,
};

/// Residuals of every identity checked while factorizing. All are relative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `‖U L₁ − L₂ U‖` of the input.
    pub intertwining_residual: f64,
    /// Largest deviation from `m₂(τx) = s̃(x)² m₁(x)` for the normalized map.
    pub unitary_defect: f64,
    /// Largest deviation of the norm ratio from its component mean.
    pub ratio_spread: f64,
    /// Smallest relative `(L₁h)(x)`; nonnegative up to rounding.
    pub excessive_margin: f64,
    /// Coefficient mismatch between `j_*(E₁^h)` and `E₂`.
    pub pushforward_residual: f64,
    /// `U_φ U_j U_h` against `U` on the standard basis.
    pub reconstruction_residual: f64,
    /// `h` against `s·(φ∘τ)`.
    pub scaling_identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// The space `(E₁, m₁)` of the source form.
    pub source: StateSpace,
    pub h: ExcessiveFunction,
    /// From `(E₁, h²m₁)` onto `(E₂, m₂)`.
    pub j: Relabeling,
    pub phi: StepScaling,
    pub diagnostics: Diagnostics,
}

impl Factorization {
    /// `U_φ ∘ U_j ∘ U_h`.
    pub fn reconstruct(&self, tol: &Tolerances) -> Result<OrderIsomorphism> {
        let uh = OrderIsomorphism::from_uh(&self.source, &self.h)?;
        let uj = OrderIsomorphism::from_uj(&self.j);
        let uphi = OrderIsomorphism::from_uphi(self.j.target(), &self.phi)?;
        compose(&uphi, &compose(&uj, &uh, tol)?, tol)
    }

    /// Basis residual of `U_φ U_j U_h` against `u`, computed from the
    /// scaling `h/(φ∘j)` and transformation `j` without checking that the
    /// intermediate spaces line up.
    pub fn residual_against(&self, u: &OrderIsomorphism) -> Result<f64> {
        check_len(u.len(), self.h.len())?;
        let phi = self.phi.values();
        check_len(u.len(), phi.len())?;
        let scaling = self
            .h
            .values()
            .iter()
            .zip(self.j.map())
            .map(|(h, &y)| h / phi[y])
            .collect();
        let candidate = OrderIsomorphism::new(
            u.source().clone(),
            u.target().clone(),
            scaling,
            self.j.map().to_vec(),
        )?;
        candidate.basis_residual(u)
    }
}

/// Largest coefficient difference, relative to the largest `Σ_y c(x,y) + k(x)`.
fn form_residual(a: &DirichletForm, b: &DirichletForm) -> f64 {
    let scale = a
        .diagonal_mass()
        .into_iter()
        .chain(b.diagonal_mass())
        .fold(0.0, f64::max);
    let dc = (a.conductances() - b.conductances()).amax();
    let dk = a
        .killing()
        .iter()
        .zip(b.killing())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let worst = dc.max(dk);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

fn require_intertwining(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<f64> {
    let report = intertwines(u, form1, form2, tol)?;
    if report.intertwines {
        Ok(report.residual)
    } else {
        Err(Error::NotIntertwining {
            residual: report.residual,
            tolerance: tol.generator,
        })
    }
}

fn factorize_unitary_with(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
    unitary_tol: f64,
) -> Result<Factorization> {
    let intertwining_residual = require_intertwining(u, form1, form2, tol)?;
    let unitary_defect = u.unitary_defect();
    if unitary_defect > unitary_tol {
        return Err(Error::NotUnitary {
            defect: unitary_defect,
        });
    }
    let h = ExcessiveFunction::certify(form1, u.scaling().to_vec(), tol)?;
    let excessive_margin = min_relative_lh(form1, h.values()).1;
    let transformed = h_transform(form1, &h, tol)?;
    let j = Relabeling::new(
        transformed.space().clone(),
        form2.space().clone(),
        u.tau().to_vec(),
        unitary_tol,
    )?;
    let pushed = pushforward_form(&transformed, &j, tol)?;
    let pushforward_residual = form_residual(&pushed, form2);
    if pushforward_residual > tol.generator {
        return Err(Error::PushforwardMismatch {
            residual: pushforward_residual,
        });
    }
    let fact = Factorization {
        source: form1.space().clone(),
        h,
        j,
        phi: StepScaling::ones(irreducible_decomposition(form2)),
        diagnostics: Diagnostics {
            intertwining_residual,
            unitary_defect,
            excessive_margin,
            pushforward_residual,
            ..Diagnostics::default()
        },
    };
    finish(fact, u, tol)
}

fn finish(
    mut fact: Factorization,
    u: &OrderIsomorphism,
    tol: &Tolerances,
) -> Result<Factorization> {
    let residual = fact.reconstruct(tol)?.basis_residual(u)?;
    if residual > tol.operator {
        return Err(Error::ReconstructionFailed { residual });
    }
    fact.diagnostics.reconstruction_residual = residual;
    Ok(fact)
}

/// Factors a unitary intertwining `U` as `U_j U_h` with `h = s`, `j = τ`.
pub fn factorize_unitary(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<Factorization> {
    factorize_unitary_with(u, form1, form2, tol, tol.measure)
}

/// For an irreducible first form, `U = c·U_j U_h`. Returns `c` and the
/// factorization of `U/c`.
pub fn factorize_irreducible(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<(f64, Factorization)> {
    let components = irreducible_decomposition(form1).len();
    if components != 1 {
        return Err(Error::Reducible(components));
    }
    require_intertwining(u, form1, form2, tol)?;
    let c = operator_norm_on_component(u, form1, &StateSubset::full(form1.len()), tol)?;
    let normalized = u.scaled(1.0 / c)?;
    let fact = factorize_unitary_with(
        &normalized,
        form1,
        form2,
        tol,
        tol.measure.max(tol.operator),
    )?;
    Ok((c, fact))
}

/// Factors an intertwining order isomorphism as `U = U_φ U_j U_h`.
pub fn factorize(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<Factorization> {
    let intertwining_residual = require_intertwining(u, form1, form2, tol)?;
    let dec1 = irreducible_decomposition(form1);
    let dec2 = irreducible_decomposition(form2);
    let tau = u.tau();
    let mut constants = alloc::vec![0.0; dec2.len()];
    let mut ratio_spread = 0.0_f64;
    for (n, states) in dec1.components().iter().enumerate() {
        let image = dec2.component_of(tau[states[0]]);
        let onto = dec2.component(image).len() == states.len()
            && states.iter().all(|&x| dec2.component_of(tau[x]) == image);
        if !onto {
            return Err(Error::ComponentMismatch(n));
        }
        let (mean, spread) = ratio_on(u, states);
        if spread > tol.operator {
            return Err(Error::NonConstantRatio {
                state: states[0],
                spread,
            });
        }
        ratio_spread = ratio_spread.max(spread);
        constants[image] = libm::sqrt(mean);
    }
    let phi = StepScaling::new(dec2, constants)?;
    let phi_values = phi.values();
    let normalized_scaling: Vec<f64> = u
        .scaling()
        .iter()
        .zip(tau)
        .map(|(s, &y)| s * phi_values[y])
        .collect();
    let normalized = OrderIsomorphism::new(
        u.source().clone(),
        u.target().clone(),
        normalized_scaling.clone(),
        tau.to_vec(),
    )?;
    let mut fact = factorize_unitary_with(
        &normalized,
        form1,
        form2,
        tol,
        tol.measure.max(tol.operator),
    )?;
    fact.phi = phi;
    fact.diagnostics.intertwining_residual = intertwining_residual;
    fact.diagnostics.ratio_spread = ratio_spread;
    fact.diagnostics.scaling_identity_residual = fact
        .h
        .values()
        .iter()
        .zip(&normalized_scaling)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    finish(fact, u, tol)
}

/// The factorization of `U` restricted to one irreducible component `A¹_n`:
/// `U_n = c_n · U_{j_n} U_{h_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFactorization {
    /// States of `A¹_n` in the source, increasing.
    pub source_states: Vec<usize>,
    /// States of `τ(A¹_n)` in the target, increasing.
    pub target_states: Vec<usize>,
    /// `c_n = ‖U_n‖`.
    pub norm: f64,
    /// `h|_{A¹_n}`.
    pub h: ExcessiveFunction,
    /// `j|_{A¹_n}` in local indices.
    pub j: Relabeling,
    /// Intertwining residual of `U_n` between the restricted forms.
    pub intertwining_residual: f64,
    /// `c_n U_{j_n} U_{h_n}` against `U_n` on the standard basis.
    pub reconstruction_residual: f64,
    /// Relative gap between `c_n` from the global factorization and the
    /// norm computed directly from `U_n`.
    pub norm_discrepancy: f64,
}

/// Restricts the global factorization to every irreducible component and
/// checks each piece on its own.
pub fn factorize_componentwise(
    u: &OrderIsomorphism,
    form1: &DirichletForm,
    form2: &DirichletForm,
    tol: &Tolerances,
) -> Result<Vec<ComponentFactorization>> {
    let global = factorize(u, form1, form2, tol)?;
    let dec1 = irreducible_decomposition(form1);
    let mut out = Vec::with_capacity(dec1.len());
    for n in 0..dec1.len() {
        let subset = dec1.subset(n);
        let source_states = subset.indices();
        let image = subset.image(u.tau(), u.len())?;
        let target_states = image.indices();

        let un = restrict(u, form1, &subset)?;
        let form1n = restrict_form(form1, &subset)?;
        let form2n = restrict_form(form2, &image)?;
        let intertwining_residual = require_intertwining(&un, &form1n, &form2n, tol)?;

        let norm = global
            .phi
            .constant(global.phi.decomposition().component_of(target_states[0]));
        let h = ExcessiveFunction::certify(
            &form1n,
            source_states
                .iter()
                .map(|&x| global.h.values()[x])
                .collect(),
            tol,
        )?;
        let j = Relabeling::new(
            global.j.source().subspace(&source_states)?,
            global.j.target().subspace(&target_states)?,
            un.tau().to_vec(),
            tol.measure.max(tol.operator),
        )?;
        let rebuilt = compose(
            &OrderIsomorphism::from_uj(&j),
            &OrderIsomorphism::from_uh(form1n.space(), &h)?,
            tol,
        )?
        .scaled(norm)?;
        let reconstruction_residual = rebuilt.basis_residual(&un)?;
        if reconstruction_residual > tol.operator {
            return Err(Error::ReconstructionFailed {
                residual: reconstruction_residual,
            });
        }
        let (direct, _) = factorize_irreducible(&un, &form1n, &form2n, tol)?;
        out.push(ComponentFactorization {
            source_states,
            target_states,
            norm,
            h,
            j,
            intertwining_residual,
            reconstruction_residual,
            norm_discrepancy: (direct - norm).abs() / norm,
        });
    }
    Ok(out)
}

/// Builds the target form `j_*(E₁^h)` and `U = U_φ U_j U_h`. `j` must start
/// from the h-transformed space and `φ` must be defined on the irreducible
/// decomposition of the target form.
pub fn synthesize(
    form1: &DirichletForm,
    h: &ExcessiveFunction,
    j: &Relabeling,
    phi: &StepScaling,
    tol: &Tolerances,
) -> Result<(OrderIsomorphism, DirichletForm)> {
    check_len(form1.len(), h.len())?;
    let h = if h.is_certified() {
        h.clone()
    } else {
        ExcessiveFunction::certify(form1, h.values().to_vec(), tol)?
    };
    let transformed = h_transform(form1, &h, tol)?;
    let form2 = pushforward_form(&transformed, j, tol)?;
    if phi.decomposition() != &irreducible_decomposition(&form2) {
        return Err(Error::SpaceMismatch(
            "step scaling is not defined on the decomposition of the target form",
        ));
    }
    let uh = OrderIsomorphism::from_uh(form1.space(), &h)?;
    let uj = OrderIsomorphism::from_uj(j);
    let uphi = OrderIsomorphism::from_uphi(form2.space(), phi)?;
    let u = compose(&uphi, &compose(&uj, &uh, tol)?, tol)?;
    Ok((u, form2))
}

/// Step scaling on the decomposition of `form` from per-state values that
/// are assumed constant on components; the value at the smallest state of
/// each component is used.
pub fn step_scaling_from_values(form: &DirichletForm, values: &[f64]) -> Result<StepScaling> {
    check_len(form.len(), values.len())?;
    let dec: IrreducibleDecomposition = irreducible_decomposition(form);
    let constants = dec.components().iter().map(|c| values[c[0]]).collect();
    StepScaling::new(dec, constants)
}

/// Whether two factorizations of `U` are the same triple. Both must
/// reproduce `U`; otherwise the comparison is meaningless and an error is
/// returned.
pub fn check_uniqueness(
    u: &OrderIsomorphism,
    first: &Factorization,
    second: &Factorization,
    tol: &Tolerances,
) -> Result<bool> {
    for fact in [first, second] {
        let residual = fact.residual_against(u)?;
        if residual > tol.operator {
            return Err(Error::ReconstructionFailed { residual });
        }
    }
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(p, q)| (p - q).abs() <= tol.operator * p.abs().max(q.abs()))
    };
    Ok(close(&first.phi.values(), &second.phi.values())
        && first.j.map() == second.j.map()
        && close(first.h.values(), second.h.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Two components {0, 2, 3} and {1, 4} with killing.
    fn base() -> DirichletForm {
        let space = StateSpace::indexed("x", vec![1.0, 2.0, 0.5, 1.5, 1.0]).unwrap();
        DirichletForm::from_triplets(
            space,
            &[(0, 2, 1.0), (2, 3, 0.5), (0, 3, 2.0), (1, 4, 1.5)],
            vec![0.2, 0.2, 0.7, 0.3, 0.4],
        )
        .unwrap()
    }

    fn excessive_h(form: &DirichletForm) -> ExcessiveFunction {
        ExcessiveFunction::certify(form, vec![1.0, 1.1, 0.9, 1.05, 1.2], &tol()).unwrap()
    }

    fn triple(phi: [f64; 2]) -> (DirichletForm, ExcessiveFunction, Relabeling, StepScaling) {
        let form = base();
        let h = excessive_h(&form);
        let transformed = h_transform(&form, &h, &tol()).unwrap();
        let labels = (0..5).map(|i| format!("y{i}")).collect();
        let j =
            Relabeling::induced(transformed.space().clone(), vec![3, 0, 4, 1, 2], labels).unwrap();
        let form2 = pushforward_form(&transformed, &j, &tol()).unwrap();
        let dec2 = irreducible_decomposition(&form2);
        // Component of y0 is the image of {1, 4}.
        let phi = StepScaling::new(dec2, vec![phi[1], phi[0]]).unwrap();
        (form, h, j, phi)
    }

    #[test]
    fn identity_factorization() {
        let form = base();
        let u = OrderIsomorphism::identity(form.space().clone());
        let fact = factorize_unitary(&u, &form, &form, &tol()).unwrap();
        assert_eq!(fact.h.values(), &[1.0; 5]);
        assert_eq!(fact.j.map(), &[0, 1, 2, 3, 4]);
        assert!(fact.phi.is_identity());
        let general = factorize(&u, &form, &form, &tol()).unwrap();
        assert!(check_uniqueness(&u, &fact, &general, &tol()).unwrap());
    }

    #[test]
    fn recovers_pure_h_transform() {
        let form = base();
        let h = excessive_h(&form);
        let target = h_transform(&form, &h, &tol()).unwrap();
        let u = OrderIsomorphism::from_uh(form.space(), &h).unwrap();
        let fact = factorize_unitary(&u, &form, &target, &tol()).unwrap();
        assert_eq!(fact.h.values(), h.values());
        assert_eq!(fact.j.map(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn recovers_pure_relabeling() {
        let form = base();
        let labels = (0..5).map(|i| format!("y{i}")).collect();
        let j = Relabeling::induced(form.space().clone(), vec![4, 2, 0, 1, 3], labels).unwrap();
        let target = pushforward_form(&form, &j, &tol()).unwrap();
        let u = OrderIsomorphism::from_uj(&j);
        let fact = factorize_unitary(&u, &form, &target, &tol()).unwrap();
        assert_eq!(fact.h.values(), &[1.0; 5]);
        assert_eq!(fact.j.map(), j.map());
    }

    #[test]
    fn two_component_round_trip() {
        let (form, h, j, phi) = triple([2.0, 0.5]);
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        assert!(intertwines(&u, &form, &form2, &tol()).unwrap().residual < 1e-10);
        let fact = factorize(&u, &form, &form2, &tol()).unwrap();
        for (a, b) in fact.h.values().iter().zip(h.values()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        assert_eq!(fact.j.map(), j.map());
        for (a, b) in fact.phi.constants().iter().zip(phi.constants()) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        assert!(fact.diagnostics.reconstruction_residual <= 1e-12);
        assert!(fact.diagnostics.scaling_identity_residual <= 1e-15);

        let again = factorize(&u, &form, &form2, &tol()).unwrap();
        assert!(check_uniqueness(&u, &fact, &again, &tol()).unwrap());
    }

    #[test]
    fn unitary_input_has_trivial_phi() {
        let (form, h, j, phi) = triple([1.0, 1.0]);
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        assert!(u.is_unitary(&tol()));
        let fact = factorize(&u, &form, &form2, &tol()).unwrap();
        assert!(fact.phi.constants().iter().all(|c| (c - 1.0).abs() < 1e-14));
        let unitary = factorize_unitary(&u, &form, &form2, &tol()).unwrap();
        assert_eq!(unitary.j.map(), fact.j.map());
    }

    #[test]
    fn non_unitary_rejected_by_unitary_factorization() {
        let (form, h, j, phi) = triple([2.0, 0.5]);
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        assert!(matches!(
            factorize_unitary(&u, &form, &form2, &tol()),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn irreducible_homogeneity() {
        let space = StateSpace::indexed("x", vec![1.0, 2.0, 0.5]).unwrap();
        let form =
            DirichletForm::from_triplets(space, &[(0, 1, 1.0), (1, 2, 0.5)], vec![0.3, 0.2, 0.1])
                .unwrap();
        let u = OrderIsomorphism::identity(form.space().clone());
        let (c, fact) = factorize_irreducible(&u, &form, &form, &tol()).unwrap();
        assert_eq!(c, 1.0);
        let (c3, fact3) =
            factorize_irreducible(&u.scaled(3.0).unwrap(), &form, &form, &tol()).unwrap();
        assert!((c3 - 3.0).abs() < 1e-14);
        assert_eq!(fact.j.map(), fact3.j.map());
        for (a, b) in fact.h.values().iter().zip(fact3.h.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(matches!(
            factorize_irreducible(&u, &base(), &base(), &tol()),
            Err(Error::Reducible(_))
        ));
    }

    #[test]
    fn componentwise_matches_phi() {
        let (form, h, j, phi) = triple([2.0, 0.5]);
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        let parts = factorize_componentwise(&u, &form, &form2, &tol()).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].source_states, vec![0, 2, 3]);
        assert!((parts[0].norm - 2.0).abs() < 1e-12);
        assert!((parts[1].norm - 0.5).abs() < 1e-12);
        for p in &parts {
            assert!(p.reconstruction_residual < 1e-12);
            assert!(p.norm_discrepancy < 1e-12);
        }
    }

    #[test]
    fn phi_only_componentwise() {
        let form = base();
        let dec = irreducible_decomposition(&form);
        let phi = StepScaling::new(dec, vec![3.0, 0.25]).unwrap();
        let h = ExcessiveFunction::certify(&form, vec![1.0; 5], &tol()).unwrap();
        let j = Relabeling::identity(form.space().clone());
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        assert_eq!(form2, form);
        let parts = factorize_componentwise(&u, &form, &form2, &tol()).unwrap();
        assert!((parts[0].norm - 3.0).abs() < 1e-14);
        assert!((parts[1].norm - 0.25).abs() < 1e-14);
    }

    #[test]
    fn trivial_synthesis_is_identity() {
        let form = base();
        let h = ExcessiveFunction::certify(&form, vec![1.0; 5], &tol()).unwrap();
        let j = Relabeling::identity(form.space().clone());
        let phi = StepScaling::ones(irreducible_decomposition(&form));
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        assert_eq!(u, OrderIsomorphism::identity(form.space().clone()));
        assert_eq!(form2, form);
    }

    #[test]
    fn perturbed_h_fails_precondition() {
        let (form, h, j, phi) = triple([2.0, 0.5]);
        let (u, form2) = synthesize(&form, &h, &j, &phi, &tol()).unwrap();
        let fact = factorize(&u, &form, &form2, &tol()).unwrap();
        let mut bad = fact.clone();
        let mut values = fact.h.values().to_vec();
        values[0] *= 1.0 + 1e-3;
        bad.h = ExcessiveFunction::uncertified(values).unwrap();
        assert!(matches!(
            check_uniqueness(&u, &fact, &bad, &tol()),
            Err(Error::ReconstructionFailed { .. })
        ));
    }

    #[test]
    fn zero_form_with_diagonal_iso() {
        let space = StateSpace::indexed("x", vec![1.0, 2.0, 3.0]).unwrap();
        let form = DirichletForm::zero(space.clone());
        let target = DirichletForm::zero(StateSpace::indexed("y", vec![0.5, 4.0, 1.0]).unwrap());
        let u = OrderIsomorphism::new(
            space,
            target.space().clone(),
            vec![2.0, 0.1, 7.0],
            vec![2, 0, 1],
        )
        .unwrap();
        let fact = factorize(&u, &form, &target, &tol()).unwrap();
        assert_eq!(fact.phi.decomposition().len(), 3);
        assert_eq!(fact.j.map(), &[2, 0, 1]);
        assert!(fact.diagnostics.reconstruction_residual < 1e-15);
        // Unitary normalization: h² m₁ = m₂ ∘ τ.
        for x in 0..3 {
            let hx = fact.h.values()[x];
            let lhs = hx * hx * form.space().measure()[x];
            let rhs = target.space().measure()[u.tau()[x]];
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn step_scaling_from_values_uses_components() {
        let form = base();
        let phi = step_scaling_from_values(&form, &[2.0, 3.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(phi.constants(), &[2.0, 3.0]);
    }

    #[test]
    fn rejects_non_intertwining() {
        let form = base();
        let u = OrderIsomorphism::new(
            form.space().clone(),
            form.space().clone(),
            vec![1.0; 5],
            vec![1, 0, 2, 3, 4],
        )
        .unwrap();
        assert!(matches!(
            factorize(&u, &form, &form, &tol()),
            Err(Error::NotIntertwining { .. })
        ));
    }
}
