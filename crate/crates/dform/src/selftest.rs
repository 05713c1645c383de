//! Seeded property suites over random instances.
//!
//! Each `measure_*` function draws one random case from the given generator
//! and returns the raw residuals; [`run`] compares them against the
//! thresholds in [`Thresholds`] and fans the cases out over threads. Case
//! `i` of a suite always uses the same seed, so reports are reproducible and
//! independent of the thread count.

use dform_core::invariant::cut_edge;
use dform_core::{
    factorize, factorize_unitary, generator_residual, h_transform, irreducible_decomposition,
    pushforward_form, semigroup_residual, DMatrix, DirichletForm, ErrorKind, ExcessiveFunction,
    OrderIsomorphism, Relabeling, StateSpace, Tolerances,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::generate::{
    excessive_pair, labels, log_uniform, random_form, random_iso, random_partition,
    random_permutation, random_triple, rng,
};

/// Pass thresholds for every suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub energy: f64,
    pub semigroup: f64,
    pub symmetry: f64,
    pub sign: f64,
    pub elementary_generator: f64,
    pub elementary_grid: f64,
    pub recovery: f64,
    pub reconstruction: f64,
    pub ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            energy: 1e-10,
            semigroup: 1e-9,
            symmetry: 1e-10,
            sign: 1e-12,
            elementary_generator: 1e-10,
            elementary_grid: 1e-9,
            recovery: 1e-8,
            reconstruction: 1e-9,
            ratio: 1e-9,
        }
    }
}

pub const GRID: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Semigroup,
    Decomposition,
    HEnergy,
    Elementary,
    UnitaryRoundTrip,
    RoundTrip,
    Rejection,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Semigroup,
        Suite::Decomposition,
        Suite::HEnergy,
        Suite::Elementary,
        Suite::UnitaryRoundTrip,
        Suite::RoundTrip,
        Suite::Rejection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Semigroup => "semigroup",
            Suite::Decomposition => "decomposition",
            Suite::HEnergy => "h_energy",
            Suite::Elementary => "elementary",
            Suite::UnitaryRoundTrip => "unitary_round_trip",
            Suite::RoundTrip => "round_trip",
            Suite::Rejection => "rejection",
        }
    }

    fn salt(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 1
    }
}

/// Seed of case `index` of `suite` under the run seed `seed`.
pub fn case_seed(seed: u64, suite: Suite, index: usize) -> u64 {
    // splitmix64 finalizer over the combined input.
    let mut z = seed
        .wrapping_add(suite.salt().wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn inner(m: &[f64], f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).zip(m).map(|((a, b), w)| a * b * w).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// A random form on at most `max_n` states with a random number of
/// components and killing on a random half of the cases.
fn any_form(rng: &mut ChaCha8Rng, max_n: usize) -> DirichletForm {
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(1..=n.min(4));
    let killing = rng.random_bool(0.5);
    let component = random_partition(rng, n, k);
    random_form(rng, "s", &component, killing).expect("generated forms are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupMetrics {
    pub states: usize,
    /// `|E(f,g) − (Lf, g)_m|` over `max(1, ‖L‖·m(E))`.
    pub energy: f64,
    /// `max |T_{t+s} f − T_t T_s f|` for `|f| ≤ 1`.
    pub semigroup: f64,
    /// `|(T_t f, g)_m − (f, T_t g)_m|` over `max(1, (|f|, |g|)_m)`.
    pub symmetry: f64,
    /// Smallest entry of `T_t f` for random `f ≥ 0`.
    pub min_positive: f64,
    /// Largest entry of `T_t 1`.
    pub max_mass: f64,
    /// `max |T_t 1 − 1|`.
    pub mass_defect: f64,
    pub conservative: bool,
}

pub fn measure_semigroup(rng: &mut ChaCha8Rng, max_n: usize) -> SemigroupMetrics {
    let form = any_form(rng, max_n);
    let n = form.len();
    let m = form.space().measure();
    let sg = form.semigroup();
    let (f, g) = (random_vec(rng, n), random_vec(rng, n));

    let lf = form.generator().apply(&f).unwrap();
    let scale = (form.generator().matrix().amax() * form.space().total_mass()).max(1.0);
    let energy = (form.energy(&f, &g).unwrap() - inner(m, &lf, &g)).abs() / scale;

    let mut semigroup = 0.0_f64;
    for (t, s) in [(0.1, 0.3), (1.0, 1.0), (0.5, 5.0)] {
        let lhs = sg.apply(t + s, &f).unwrap();
        let rhs = sg.apply(t, &sg.apply(s, &f).unwrap()).unwrap();
        semigroup = semigroup.max(max_abs_diff(&lhs, &rhs));
    }

    let abs_scale = inner(
        m,
        &f.iter().map(|v| v.abs()).collect::<Vec<_>>(),
        &g.iter().map(|v| v.abs()).collect::<Vec<_>>(),
    )
    .max(1.0);
    let positive: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    let ones = vec![1.0; n];
    let mut symmetry = 0.0_f64;
    let mut min_positive = f64::INFINITY;
    let mut max_mass = f64::NEG_INFINITY;
    let mut mass_defect = 0.0_f64;
    for t in [0.01, 0.1, 1.0, 10.0] {
        let a = inner(m, &sg.apply(t, &f).unwrap(), &g);
        let b = inner(m, &f, &sg.apply(t, &g).unwrap());
        symmetry = symmetry.max((a - b).abs() / abs_scale);
        min_positive = min_positive.min(
            sg.apply(t, &positive)
                .unwrap()
                .into_iter()
                .fold(f64::INFINITY, f64::min),
        );
        let t1 = sg.apply(t, &ones).unwrap();
        max_mass = max_mass.max(t1.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        mass_defect = mass_defect.max(max_abs_diff(&t1, &ones));
    }
    SemigroupMetrics {
        states: n,
        energy,
        semigroup,
        symmetry,
        min_positive,
        max_mass,
        mass_defect,
        conservative: form.is_conservative(),
    }
}

impl SemigroupMetrics {
    pub fn passes(&self, th: &Thresholds) -> bool {
        // Killing is strictly lossy; without it mass is conserved.
        let mass_ok = if self.conservative {
            self.mass_defect <= th.sign
        } else {
            self.mass_defect > th.sign
        };
        self.energy <= th.energy
            && self.semigroup <= th.semigroup
            && self.symmetry <= th.symmetry
            && self.min_positive >= -th.sign
            && self.max_mass <= 1.0 + th.sign
            && mass_ok
    }
}

/// Components of the graph with an edge wherever `c > 0`, as a canonical
/// label per state (the smallest state of its component).
pub fn union_find_components(c: &DMatrix<f64>) -> Vec<usize> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let n = c.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for x in 0..n {
        for y in (x + 1)..n {
            if c[(x, y)] > 0.0 {
                let (a, b) = (find(&mut parent, x), find(&mut parent, y));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphShape {
    Random,
    Planted,
    Edgeless,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionMetrics {
    pub shape: GraphShape,
    pub states: usize,
    pub components: usize,
    pub agrees: bool,
}

/// Random graph of the given shape; `Random` is Erdős–Rényi with a random
/// edge probability, `Planted` has a prescribed number of components.
pub fn random_graph(rng: &mut ChaCha8Rng, shape: GraphShape, max_n: usize) -> DirichletForm {
    let n = rng.random_range(1..=max_n);
    let measure = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let space = StateSpace::new(labels("s", n), measure).unwrap();
    let p = match shape {
        GraphShape::Random => rng.random_range(0.0..0.3),
        GraphShape::Edgeless => 0.0,
        GraphShape::Complete => 1.0,
        GraphShape::Planted => {
            let k = rng.random_range(1..=n);
            let component = random_partition(rng, n, k);
            return random_form(rng, "s", &component, false).unwrap();
        }
    };
    let mut edges = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            if p > 0.0 && rng.random_bool(p) {
                edges.push((x, y, log_uniform(rng, 0.1, 10.0)));
            }
        }
    }
    DirichletForm::from_triplets(space, &edges, vec![0.0; n]).unwrap()
}

pub fn measure_decomposition(
    rng: &mut ChaCha8Rng,
    shape: GraphShape,
    max_n: usize,
) -> DecompositionMetrics {
    let form = random_graph(rng, shape, max_n);
    let dec = irreducible_decomposition(&form);
    let oracle = union_find_components(form.conductances());
    let n = form.len();
    let same = (0..n).all(|x| {
        (0..n).all(|y| (dec.component_of(x) == dec.component_of(y)) == (oracle[x] == oracle[y]))
    });
    // Components are numbered by their smallest state.
    let canonical = dec.components().iter().enumerate().all(|(id, states)| {
        states.windows(2).all(|w| w[0] < w[1]) && states.iter().all(|&x| dec.component_of(x) == id)
    }) && dec.components().windows(2).all(|w| w[0][0] < w[1][0]);
    DecompositionMetrics {
        shape,
        states: n,
        components: dec.len(),
        agrees: same && canonical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HEnergyMetrics {
    pub states: usize,
    /// `|E^h(f,g) − E(fh, gh)|`.
    pub difference: f64,
    /// `max(1, sqrt(E(fh,fh) E(gh,gh)))`, which bounds `|E(fh, gh)|`.
    pub scale: f64,
}

pub fn measure_h_energy(rng: &mut ChaCha8Rng, max_n: usize) -> HEnergyMetrics {
    let tol = Tolerances::default();
    let base = any_form(rng, max_n);
    let (form, h) = excessive_pair(rng, &base, true).unwrap();
    let n = form.len();
    let h = ExcessiveFunction::certify(&form, h, &tol).unwrap();
    let transformed = h_transform(&form, &h, &tol).unwrap();
    let (f, g) = (random_vec(rng, n), random_vec(rng, n));
    let fh: Vec<f64> = f.iter().zip(h.values()).map(|(a, b)| a * b).collect();
    let gh: Vec<f64> = g.iter().zip(h.values()).map(|(a, b)| a * b).collect();
    let lhs = transformed.energy(&f, &g).unwrap();
    let rhs = form.energy(&fh, &gh).unwrap();
    let scale = (form.energy(&fh, &fh).unwrap() * form.energy(&gh, &gh).unwrap())
        .sqrt()
        .max(1.0);
    HEnergyMetrics {
        states: n,
        difference: (lhs - rhs).abs(),
        scale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementaryMetrics {
    pub states: usize,
    /// Generator residuals of `U_h`, `U_j` and `U_j U_h`.
    pub generator: f64,
    /// Semigroup residuals on `{0.1, 1, 10}` of the same maps.
    pub grid: f64,
}

pub fn measure_elementary(rng: &mut ChaCha8Rng, max_n: usize) -> ElementaryMetrics {
    let tol = Tolerances::default();
    let base = any_form(rng, max_n);
    let (form, h) = excessive_pair(rng, &base, true).unwrap();
    let n = form.len();
    let h = ExcessiveFunction::certify(&form, h, &tol).unwrap();
    let transformed = h_transform(&form, &h, &tol).unwrap();
    let j = Relabeling::induced(
        transformed.space().clone(),
        random_permutation(rng, n),
        labels("t", n),
    )
    .unwrap();
    let pushed = pushforward_form(&transformed, &j, &tol).unwrap();
    let uh = OrderIsomorphism::from_uh(form.space(), &h).unwrap();
    let uj = OrderIsomorphism::from_uj(&j);
    let both = dform_core::compose(&uj, &uh, &tol).unwrap();
    let cases = [
        (&uh, &form, &transformed),
        (&uj, &transformed, &pushed),
        (&both, &form, &pushed),
    ];
    let mut generator = 0.0_f64;
    let mut grid = 0.0_f64;
    for (u, f1, f2) in cases {
        generator = generator.max(generator_residual(u, f1, f2).unwrap());
        grid = grid.max(semigroup_residual(u, f1, f2, &GRID).unwrap());
    }
    ElementaryMetrics {
        states: n,
        generator,
        grid,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripMetrics {
    pub states: usize,
    pub components: usize,
    /// Relative error of the recovered `h` and `φ`.
    pub recovery: f64,
    pub j_exact: bool,
    /// Basis residual of the reconstructed map against the input.
    pub reconstruction: f64,
    /// Every component image is a union of components with no cut edge.
    pub images_invariant: bool,
    /// Largest relative spread of `m₂(τx)/(s(x)² m₁(x))` on a component.
    pub ratio_spread: f64,
    pub error: Option<String>,
}

impl RoundTripMetrics {
    pub fn passes(&self, th: &Thresholds) -> bool {
        self.error.is_none()
            && self.recovery <= th.recovery
            && self.j_exact
            && self.reconstruction <= th.reconstruction
            && self.images_invariant
            && self.ratio_spread <= th.ratio
    }
}

/// Synthesizes a random instance and factors it back. With `unitary`, `φ ≡ 1`
/// and the unitary factorization is used.
pub fn measure_round_trip(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    unitary: bool,
) -> RoundTripMetrics {
    let tol = Tolerances::default();
    let killing = rng.random_bool(0.75);
    let t = random_triple(rng, n, k, killing, unitary).unwrap();
    let mut out = RoundTripMetrics {
        states: n,
        components: k,
        recovery: f64::INFINITY,
        j_exact: false,
        reconstruction: f64::INFINITY,
        images_invariant: false,
        ratio_spread: f64::INFINITY,
        error: None,
    };
    let fact = if unitary {
        factorize_unitary(&t.iso, &t.form1, &t.form2, &tol)
    } else {
        factorize(&t.iso, &t.form1, &t.form2, &tol)
    };
    let fact = match fact {
        Ok(f) => f,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.recovery = max_rel_diff(fact.h.values(), t.h.values())
        .max(max_rel_diff(&fact.phi.values(), &t.phi.values()));
    out.j_exact = fact.j.map() == t.j.map();
    out.reconstruction = match fact
        .reconstruct(&tol)
        .and_then(|r| r.basis_residual(&t.iso))
    {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };

    let dec1 = irreducible_decomposition(&t.form1);
    let dec2 = irreducible_decomposition(&t.form2);
    let tau = t.iso.tau();
    out.images_invariant = (0..dec1.len()).all(|id| {
        let image = dec1.subset(id).image(tau, n).unwrap();
        let target = dec2.component_of(tau[dec1.component(id)[0]]);
        cut_edge(&t.form2, &image).is_none() && image == dec2.subset(target)
    });
    out.ratio_spread = dec1
        .components()
        .iter()
        .map(|states| {
            let ratios: Vec<f64> = states.iter().map(|&x| t.iso.norm_ratio(x)).collect();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            ratios
                .iter()
                .map(|r| (r / mean - 1.0).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    out
}

/// `‖U L₁ − L₂ U‖_max / max(‖U L₁‖_max, ‖L₂ U‖_max)` with `U` as a dense
/// matrix. Independent of the structured residual used by the library.
pub fn dense_residual(u: &OrderIsomorphism, form1: &DirichletForm, form2: &DirichletForm) -> f64 {
    let mu = u.matrix();
    let a = &mu * form1.generator().matrix();
    let b = form2.generator().matrix() * &mu;
    let scale = a.amax().max(b.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionMetrics {
    pub states: usize,
    pub rejected: bool,
    /// Dense residual from [`dense_residual`].
    pub oracle_residual: f64,
    pub error: Option<String>,
}

pub fn measure_rejection(rng: &mut ChaCha8Rng, max_n: usize) -> RejectionMetrics {
    let tol = Tolerances::default();
    let n = rng.random_range(2..=max_n);
    // At least one edge, as two zero generators intertwine under any map.
    let k = rng.random_range(1..=(n - 1).min(4));
    let killing = rng.random_bool(0.5);
    let (form1, form2, iso) = random_iso(rng, n, k, killing).unwrap();
    let oracle_residual = dense_residual(&iso, &form1, &form2);
    let (rejected, error) = match factorize(&iso, &form1, &form2, &tol) {
        Ok(_) => (false, None),
        Err(e) => (e.kind() == ErrorKind::Rejected, Some(e.to_string())),
    };
    RejectionMetrics {
        states: n,
        rejected,
        oracle_residual,
        error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub index: usize,
    pub seed: u64,
    pub passed: bool,
    /// The residual that decides the case, or 0/1 for boolean checks.
    pub metric: f64,
    pub detail: String,
}

pub fn run_case(suite: Suite, seed: u64, index: usize, th: &Thresholds) -> CaseResult {
    let seed = case_seed(seed, suite, index);
    let mut rng = rng(seed);
    let (passed, metric, detail) = match suite {
        Suite::Semigroup => {
            let m = measure_semigroup(&mut rng, 30);
            let worst = m.energy.max(m.semigroup).max(m.symmetry);
            (m.passes(th), worst, format!("{m:?}"))
        }
        Suite::Decomposition => {
            let shape = [
                GraphShape::Random,
                GraphShape::Planted,
                GraphShape::Edgeless,
                GraphShape::Complete,
            ][index % 4];
            let m = measure_decomposition(&mut rng, shape, 40);
            (m.agrees, if m.agrees { 0.0 } else { 1.0 }, format!("{m:?}"))
        }
        Suite::HEnergy => {
            let m = measure_h_energy(&mut rng, 30);
            let rel = m.difference / m.scale;
            (rel <= th.energy, rel, format!("{m:?}"))
        }
        Suite::Elementary => {
            let m = measure_elementary(&mut rng, 30);
            let ok = m.generator <= th.elementary_generator && m.grid <= th.elementary_grid;
            (ok, m.generator.max(m.grid), format!("{m:?}"))
        }
        Suite::UnitaryRoundTrip | Suite::RoundTrip => {
            let unitary = suite == Suite::UnitaryRoundTrip;
            let (lo_k, hi_k, max_n) = if unitary { (1, 5, 30) } else { (2, 5, 50) };
            let k = rng.random_range(lo_k..=hi_k);
            let n = rng.random_range(k..=max_n);
            let m = measure_round_trip(&mut rng, n, k, unitary);
            (
                m.passes(th),
                m.recovery.max(m.reconstruction),
                format!("{m:?}"),
            )
        }
        Suite::Rejection => {
            let m = measure_rejection(&mut rng, 30);
            // A map the factorization accepts must genuinely intertwine.
            let ok = m.rejected || m.oracle_residual <= Tolerances::default().generator;
            let accepted_residual = if m.rejected { 0.0 } else { m.oracle_residual };
            (ok, accepted_residual, format!("{m:?}"))
        }
    };
    CaseResult {
        index,
        seed,
        passed,
        metric,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: usize,
    /// Largest deciding residual over all cases.
    pub worst_metric: f64,
    pub first_failure: Option<CaseResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `cases` cases of each suite in parallel. Results are merged in case
/// order, so the report does not depend on scheduling.
pub fn run(suites: &[Suite], cases: usize, seed: u64, th: &Thresholds) -> Vec<SuiteReport> {
    suites
        .iter()
        .map(|&suite| {
            let results: Vec<CaseResult> = (0..cases)
                .into_par_iter()
                .map(|i| run_case(suite, seed, i, th))
                .collect();
            SuiteReport {
                suite,
                cases,
                failures: results.iter().filter(|r| !r.passed).count(),
                worst_metric: results.iter().map(|r| r.metric).fold(0.0, f64::max),
                first_failure: results.into_iter().find(|r| !r.passed),
            }
        })
        .collect()
}
