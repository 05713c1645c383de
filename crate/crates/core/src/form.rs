//! Dirichlet forms on a finite state space and their generators.
//!
//! A form is given by symmetric conductances `c(x, y) ≥ 0` and a killing
//! rate `k(x) ≥ 0`:
//!
//! ```text
//! E(f, g) = ½ Σ_{x≠y} c(x,y) (f(x) − f(y)) (g(x) − g(y)) + Σ_x k(x) f(x) g(x)
//! ```
//!
//! Every real function on the state set is in the domain. The generator `L`
//! is the operator with `(Lf, g)_m = E(f, g)`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::semigroup::Semigroup;
use crate::space::StateSpace;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletForm {
    space: StateSpace,
    conductances: DMatrix<f64>,
    killing: Vec<f64>,
}

impl DirichletForm {
    pub fn new(space: StateSpace, conductances: DMatrix<f64>, killing: Vec<f64>) -> Result<Self> {
        let n = space.len();
        check_len(n, conductances.nrows())?;
        check_len(n, conductances.ncols())?;
        check_len(n, killing.len())?;
        for x in 0..n {
            let diag = conductances[(x, x)];
            if diag != 0.0 {
                return Err(Error::InvalidConductance {
                    x,
                    y: x,
                    value: diag,
                    reason: "diagonal must be zero",
                });
            }
            for y in (x + 1)..n {
                let value = conductances[(x, y)];
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidConductance {
                        x,
                        y,
                        value,
                        reason: "must be finite and nonnegative",
                    });
                }
                if conductances[(y, x)] != value {
                    return Err(Error::InvalidConductance {
                        x,
                        y,
                        value,
                        reason: "matrix is not symmetric",
                    });
                }
            }
        }
        for (index, &value) in killing.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidKilling { index, value });
            }
        }
        Ok(DirichletForm {
            space,
            conductances,
            killing,
        })
    }

    /// Builds a form from an edge list. Each unordered pair may appear once.
    pub fn from_triplets(
        space: StateSpace,
        edges: &[(usize, usize, f64)],
        killing: Vec<f64>,
    ) -> Result<Self> {
        let n = space.len();
        let mut c = DMatrix::zeros(n, n);
        for &(x, y, value) in edges {
            if x >= n || y >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.max(y) + 1,
                });
            }
            if x == y {
                return Err(Error::InvalidConductance {
                    x,
                    y,
                    value,
                    reason: "self loops are not allowed",
                });
            }
            if c[(x, y)] != 0.0 {
                return Err(Error::InvalidConductance {
                    x,
                    y,
                    value,
                    reason: "edge listed twice",
                });
            }
            c[(x, y)] = value;
            c[(y, x)] = value;
        }
        Self::new(space, c, killing)
    }

    /// Skips every coefficient check. Only meant for feeding deliberately
    /// broken forms to the numerical sanity checks.
    #[doc(hidden)]
    pub fn new_unchecked(space: StateSpace, conductances: DMatrix<f64>, killing: Vec<f64>) -> Self {
        DirichletForm {
            space,
            conductances,
            killing,
        }
    }

    /// The form with no edges and no killing.
    pub fn zero(space: StateSpace) -> Self {
        let n = space.len();
        DirichletForm {
            space,
            conductances: DMatrix::zeros(n, n),
            killing: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn conductances(&self) -> &DMatrix<f64> {
        &self.conductances
    }

    pub fn conductance(&self, x: usize, y: usize) -> f64 {
        self.conductances[(x, y)]
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    pub fn is_conservative(&self) -> bool {
        self.killing.iter().all(|&k| k == 0.0)
    }

    /// Edges `(x, y, c(x,y))` with `x < y` and positive conductance.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            for y in (x + 1)..n {
                let c = self.conductances[(x, y)];
                if c != 0.0 {
                    out.push((x, y, c));
                }
            }
        }
        out
    }

    pub fn generator(&self) -> Generator {
        build_generator(self)
    }

    pub fn semigroup(&self) -> Semigroup {
        Semigroup::new(self)
    }

    /// `E(f, g)` evaluated from the coefficients.
    pub fn energy(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        let n = self.len();
        check_len(n, f.len())?;
        check_len(n, g.len())?;
        let mut edge_part = 0.0;
        for x in 0..n {
            for y in (x + 1)..n {
                let c = self.conductances[(x, y)];
                if c != 0.0 {
                    edge_part += c * (f[x] - f[y]) * (g[x] - g[y]);
                }
            }
        }
        let killing_part: f64 = self
            .killing
            .iter()
            .zip(f.iter().zip(g))
            .map(|(k, (a, b))| k * a * b)
            .sum();
        Ok(edge_part + killing_part)
    }

    /// `E₁(f, g) = E(f, g) + (f, g)_m`.
    pub fn energy1(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        Ok(self.energy(f, g)? + self.space.inner(f, g)?)
    }

    /// Per-state scale of the generator: `Σ_y c(x,y) + k(x)`, i.e. the
    /// diagonal of `M·L`.
    pub(crate) fn diagonal_mass(&self) -> Vec<f64> {
        (0..self.len())
            .map(|x| self.conductances.row(x).sum() + self.killing[x])
            .collect()
    }
}

/// The generator `L` of a [`DirichletForm`] as a dense matrix:
///
/// ```text
/// L f(x) = (1/m(x)) [ Σ_y c(x,y) (f(x) − f(y)) + k(x) f(x) ]
/// ```
///
/// `M·L` is symmetric with nonpositive off-diagonal entries and row sums
/// equal to the killing rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    matrix: DMatrix<f64>,
}

impl Generator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        check_len(n, f.len())?;
        Ok((0..n)
            .map(|x| (0..n).map(|y| self.matrix[(x, y)] * f[y]).sum())
            .collect())
    }
}

pub fn build_generator(form: &DirichletForm) -> Generator {
    let n = form.len();
    let m = form.space.measure();
    let c = &form.conductances;
    let mut matrix = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut diag = form.killing[x];
        for y in 0..n {
            if y != x {
                let cxy = c[(x, y)];
                diag += cxy;
                matrix[(x, y)] = -cxy / m[x];
            }
        }
        matrix[(x, x)] = diag / m[x];
    }
    Generator { matrix }
}
