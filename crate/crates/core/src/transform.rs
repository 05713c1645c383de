//! Doob h-transforms and measure-preserving relabelings.
//!
//! For an excessive `h` the h-transform lives on the measure `h²·m` and is
//! defined by `E^h(f, g) = E(fh, gh)`. Expanding the right-hand side gives the
//! coefficients
//!
//! ```text
//! c^h(x, y) = c(x, y) h(x) h(y)
//! k^h(x)    = h(x) m(x) (Lh)(x) = k(x) h(x)² + h(x) Σ_y c(x, y) (h(x) − h(y))
//! ```
//!
//! so `k^h ≥ 0` is exactly `Lh ≥ 0`. Since `d/dt T_t h = −T_t L h` and `T_t`
//! preserves positivity, `Lh ≥ 0` is also equivalent to `T_t h ≤ h` for all
//! `t ≥ 0`; excessiveness is therefore certified on the generator and the
//! time grid is only used as a cross-check.
//!
//! A relabeling is a bijection `j` between two state spaces of equal size
//! with `m_target(j(x)) = m_source(x)`. It pushes a form forward by
//! `ĉ(j(x), j(y)) = c(x, y)` and `k̂(j(x)) = k(x)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::form::DirichletForm;
use crate::space::{invert_bijection, StateSpace};
use crate::tolerance::{rel_close, Tolerances};

/// A strictly positive, finite function; `certified` once checked excessive
/// against some form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessiveFunction {
    values: Vec<f64>,
    certified: bool,
}

impl ExcessiveFunction {
    /// Checks positivity and `Lh ≥ 0` against `form`.
    pub fn certify(form: &DirichletForm, values: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        check_positive(&values)?;
        check_len(form.len(), values.len())?;
        let (index, value) = min_relative_lh(form, &values);
        if value < -tol.generator {
            return Err(Error::NotExcessive { index, value });
        }
        Ok(ExcessiveFunction {
            values,
            certified: true,
        })
    }

    /// Checks positivity only.
    pub fn uncertified(values: Vec<f64>) -> Result<Self> {
        check_positive(&values)?;
        Ok(ExcessiveFunction {
            values,
            certified: false,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_positive(values: &[f64]) -> Result<()> {
    match values.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
        Some(index) => Err(Error::NonPositive {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// `(Lh)(x)` divided by `Σ_y |L[x,y]| h(y)`, minimized over `x`.
pub(crate) fn min_relative_lh(form: &DirichletForm, h: &[f64]) -> (usize, f64) {
    let l = form.generator();
    let l = l.matrix();
    let n = form.len();
    let mut worst = (0, f64::INFINITY);
    for x in 0..n {
        let mut value = 0.0;
        let mut scale = 0.0;
        for y in 0..n {
            let term = l[(x, y)] * h[y];
            value += term;
            scale += term.abs();
        }
        let rel = if scale > 0.0 { value / scale } else { 0.0 };
        if rel < worst.1 {
            worst = (x, rel);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessiveReport {
    pub excessive: bool,
    /// Smallest `(Lh)(x)` relative to the magnitude of its terms.
    pub min_generator: f64,
    pub worst_state: usize,
    /// Largest `max_x (T_t h − h)(x) / max h` over the time grid.
    pub max_grid_excess: f64,
}

/// Generator criterion `Lh ≥ 0` plus the sampled check `T_t h ≤ h`.
pub fn is_excessive(
    form: &DirichletForm,
    h: &[f64],
    t_grid: &[f64],
    tol: &Tolerances,
) -> Result<ExcessiveReport> {
    check_positive(h)?;
    check_len(form.len(), h.len())?;
    let (worst_state, min_generator) = min_relative_lh(form, h);
    let semigroup = form.semigroup();
    let h_max = h.iter().copied().fold(0.0, f64::max);
    let mut max_grid_excess = f64::NEG_INFINITY;
    for &t in t_grid {
        let th = semigroup.apply(t, h)?;
        for (a, b) in th.iter().zip(h) {
            max_grid_excess = max_grid_excess.max((a - b) / h_max);
        }
    }
    Ok(ExcessiveReport {
        excessive: min_generator >= -tol.generator,
        min_generator,
        worst_state,
        max_grid_excess,
    })
}

/// The h-transformed form on `h²·m`.
pub fn h_transform(
    form: &DirichletForm,
    h: &ExcessiveFunction,
    tol: &Tolerances,
) -> Result<DirichletForm> {
    let n = form.len();
    check_len(n, h.len())?;
    let h = h.values();
    let c = form.conductances();
    let m = form.space().measure();
    let measure = h.iter().zip(m).map(|(hx, mx)| hx * hx * mx).collect();
    let space = form.space().with_measure(measure)?;
    // Same operand order on both sides keeps the result exactly symmetric.
    let conductances = DMatrix::from_fn(n, n, |x, y| c[(x, y)] * (h[x.min(y)] * h[x.max(y)]));
    let mut killing = vec![0.0; n];
    for x in 0..n {
        let mut drift = 0.0;
        let mut scale = form.killing()[x] * h[x];
        for y in 0..n {
            let cxy = c[(x, y)];
            if cxy != 0.0 {
                drift += cxy * (h[x] - h[y]);
                scale += cxy * (h[x] + h[y]);
            }
        }
        let kh = h[x] * (form.killing()[x] * h[x] + drift);
        if kh < 0.0 {
            let bound = tol.generator * h[x] * scale;
            if -kh > bound {
                return Err(Error::NotExcessive {
                    index: x,
                    value: kh / (h[x] * scale),
                });
            }
        }
        killing[x] = kh.max(0.0);
    }
    DirichletForm::new(space, conductances, killing)
}

/// `T^h_t f = (1/h) T_t(h f)`.
pub fn h_semigroup(
    form: &DirichletForm,
    h: &ExcessiveFunction,
    t: f64,
    f: &[f64],
) -> Result<Vec<f64>> {
    check_len(form.len(), h.len())?;
    check_len(form.len(), f.len())?;
    let hf: Vec<f64> = h.values().iter().zip(f).map(|(a, b)| a * b).collect();
    let out = form.semigroup().apply(t, &hf)?;
    Ok(out.iter().zip(h.values()).map(|(a, b)| a / b).collect())
}

/// `U_h f = f / h`, an isometry `L²(m) → L²(h²m)`.
pub fn apply_uh(h: &ExcessiveFunction, f: &[f64]) -> Result<Vec<f64>> {
    check_len(h.len(), f.len())?;
    Ok(f.iter().zip(h.values()).map(|(a, b)| a / b).collect())
}

pub fn apply_uh_inverse(h: &ExcessiveFunction, g: &[f64]) -> Result<Vec<f64>> {
    check_len(h.len(), g.len())?;
    Ok(g.iter().zip(h.values()).map(|(a, b)| a * b).collect())
}

/// A measure-preserving bijection between two state spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Relabeling {
    source: StateSpace,
    target: StateSpace,
    map: Vec<usize>,
    inverse: Vec<usize>,
}

impl Relabeling {
    /// `map[x]` is the target index of source state `x`. Weights must agree
    /// to relative tolerance `rel`.
    pub fn new(source: StateSpace, target: StateSpace, map: Vec<usize>, rel: f64) -> Result<Self> {
        check_len(source.len(), target.len())?;
        check_len(source.len(), map.len())?;
        let inverse = invert_bijection(&map)?;
        for (x, &y) in map.iter().enumerate() {
            let (a, b) = (source.measure()[x], target.measure()[y]);
            if !rel_close(a, b, rel) {
                return Err(Error::NotMeasurePreserving {
                    index: x,
                    source_weight: a,
                    target_weight: b,
                });
            }
        }
        Ok(Relabeling {
            source,
            target,
            map,
            inverse,
        })
    }

    /// Target space built by pushing the source weights forward; target
    /// state `i` gets `target_labels[i]`.
    pub fn induced(
        source: StateSpace,
        map: Vec<usize>,
        target_labels: Vec<String>,
    ) -> Result<Self> {
        check_len(source.len(), map.len())?;
        let inverse = invert_bijection(&map)?;
        let measure = inverse.iter().map(|&x| source.measure()[x]).collect();
        let target = StateSpace::new(target_labels, measure)?;
        Ok(Relabeling {
            source,
            target,
            map,
            inverse,
        })
    }

    pub fn identity(space: StateSpace) -> Self {
        let map: Vec<usize> = (0..space.len()).collect();
        Relabeling {
            source: space.clone(),
            target: space,
            inverse: map.clone(),
            map,
        }
    }

    pub fn source(&self) -> &StateSpace {
        &self.source
    }

    pub fn target(&self) -> &StateSpace {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// The image form `Ê(f̂, ĝ) = E(f̂∘j, ĝ∘j)` on the target of `j`.
pub fn pushforward_form(
    form: &DirichletForm,
    j: &Relabeling,
    tol: &Tolerances,
) -> Result<DirichletForm> {
    check_len(j.len(), form.len())?;
    if !form.space().approx_eq(j.source(), tol.measure) {
        return Err(Error::SpaceMismatch(
            "form does not live on the source of the relabeling",
        ));
    }
    let n = form.len();
    let c = form.conductances();
    let inv = j.inverse_map();
    let conductances = DMatrix::from_fn(n, n, |a, b| c[(inv[a], inv[b])]);
    let killing = inv.iter().map(|&x| form.killing()[x]).collect();
    DirichletForm::new(j.target().clone(), conductances, killing)
}

/// `U_j f = f ∘ j⁻¹`.
pub fn apply_uj(j: &Relabeling, f: &[f64]) -> Result<Vec<f64>> {
    check_len(j.len(), f.len())?;
    Ok(j.inverse_map().iter().map(|&x| f[x]).collect())
}

/// `U_j⁻¹ g = g ∘ j`.
pub fn apply_uj_inverse(j: &Relabeling, g: &[f64]) -> Result<Vec<f64>> {
    check_len(j.len(), g.len())?;
    Ok(j.map().iter().map(|&y| g[y]).collect())
}
