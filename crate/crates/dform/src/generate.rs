//! Seeded random instances.
//!
//! Conductances and weights are log-uniform so that every instance mixes
//! scales over about two decades. All randomness comes from one ChaCha8
//! stream seeded by the caller, so the output is identical across runs and
//! platforms.

use dform_core::{
    irreducible_decomposition, synthesize, DirichletForm, ExcessiveFunction, OrderIsomorphism,
    Relabeling, StateSpace, StepScaling, Tolerances, DEFAULT_STATE_CAP,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Context, Result};
use crate::instance::{Expected, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    /// A single form.
    Form,
    /// A source form, an order isomorphism built from a random triple
    /// `(h, j, φ)`, the target form it intertwines with, and the triple.
    Triple,
    /// Two unrelated forms and a random order isomorphism between them.
    Iso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateParams {
    pub seed: u64,
    pub n_states: usize,
    pub n_components: usize,
    pub with_killing: bool,
    pub kind: Kind,
    /// For triples: use `φ ≡ 1`, so the isomorphism is unitary.
    pub unitary: bool,
}

impl GenerateParams {
    pub fn new(seed: u64, n_states: usize, n_components: usize, kind: Kind) -> Self {
        GenerateParams {
            seed,
            n_states,
            n_components,
            with_killing: true,
            kind,
            unitary: false,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Component label of every state, each of the `k` components nonempty.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut label = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        label[x] = if i < k { i } else { rng.random_range(0..k) };
    }
    label
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// A form whose conductance graph has exactly the components given by
/// `component`: a random spanning tree on each plus extra edges with
/// probability 1/4. Half of the states get a killing rate when `killing`.
pub fn random_form(
    rng: &mut ChaCha8Rng,
    prefix: &str,
    component: &[usize],
    killing: bool,
) -> dform_core::Result<DirichletForm> {
    let n = component.len();
    let k = component.iter().max().map_or(0, |m| m + 1);
    let measure = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let space = StateSpace::new(labels(prefix, n), measure)?;
    let mut edges = Vec::new();
    for comp in 0..k {
        let mut members: Vec<usize> = (0..n).filter(|&x| component[x] == comp).collect();
        members.shuffle(rng);
        let mut linked = vec![vec![false; members.len()]; members.len()];
        for i in 1..members.len() {
            let p = rng.random_range(0..i);
            edges.push((members[i], members[p], log_uniform(rng, 0.1, 10.0)));
            linked[i][p] = true;
            linked[p][i] = true;
        }
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                if !linked[a][b] && rng.random_bool(0.25) {
                    edges.push((members[a], members[b], log_uniform(rng, 0.1, 10.0)));
                }
            }
        }
    }
    let kill = (0..n)
        .map(|_| {
            if killing && rng.random_bool(0.5) {
                rng.random_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    DirichletForm::from_triplets(space, &edges, kill)
}

/// A positive `h` together with a copy of `form` for which it is excessive.
///
/// With `killing`, `h` is log-uniform on `[1/2, 2]` and the killing rate at
/// each state is raised to `max(k, -Σ c(h_x - h_y)/h_x)` plus a random
/// margin on half of the states. Without killing the only excessive
/// functions are constant on components, so one random constant per
/// component is used and the form is returned unchanged.
pub fn excessive_pair(
    rng: &mut ChaCha8Rng,
    form: &DirichletForm,
    killing: bool,
) -> dform_core::Result<(DirichletForm, Vec<f64>)> {
    let n = form.len();
    if !killing {
        let dec = irreducible_decomposition(form);
        let constants: Vec<f64> = (0..dec.len()).map(|_| log_uniform(rng, 0.5, 2.0)).collect();
        let h = dec.component_ids().iter().map(|&c| constants[c]).collect();
        return Ok((form.clone(), h));
    }
    let h: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.5, 2.0)).collect();
    let c = form.conductances();
    let kill = (0..n)
        .map(|x| {
            let drift: f64 = (0..n).map(|y| c[(x, y)] * (h[x] - h[y])).sum();
            let needed = (-drift / h[x]).max(0.0);
            let margin = if rng.random_bool(0.5) {
                rng.random_range(0.0..0.5)
            } else {
                0.0
            };
            form.killing()[x].max(needed) + margin
        })
        .collect();
    Ok((
        DirichletForm::new(form.space().clone(), c.clone(), kill)?,
        h,
    ))
}

/// A ground-truth triple, the order isomorphism it synthesizes and the
/// target form.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub form1: DirichletForm,
    pub form2: DirichletForm,
    pub h: ExcessiveFunction,
    pub j: Relabeling,
    pub phi: StepScaling,
    pub iso: OrderIsomorphism,
}

pub fn random_triple(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    killing: bool,
    unitary: bool,
) -> dform_core::Result<Synthesized> {
    let tol = Tolerances::default();
    let component = random_partition(rng, n, k);
    let base = random_form(rng, "s", &component, killing)?;
    let (form1, h) = excessive_pair(rng, &base, killing)?;
    let h = ExcessiveFunction::certify(&form1, h, &tol)?;
    let weights: Vec<f64> = h
        .values()
        .iter()
        .zip(form1.space().measure())
        .map(|(hx, mx)| hx * hx * mx)
        .collect();
    let transformed = form1.space().with_measure(weights)?;
    let j = Relabeling::induced(transformed, random_permutation(rng, n), labels("t", n))?;
    // The target decomposition is the image of the source one under j.
    let dec1 = irreducible_decomposition(&form1);
    let image: Vec<usize> = {
        let mut ids = vec![0; n];
        for x in 0..n {
            ids[j.map()[x]] = dec1.component_of(x);
        }
        ids
    };
    let dec2 = dform_core::IrreducibleDecomposition::from_labels(&image);
    let constants = (0..dec2.len())
        .map(|_| {
            if unitary {
                1.0
            } else {
                log_uniform(rng, 0.25, 4.0)
            }
        })
        .collect();
    let phi = StepScaling::new(dec2, constants)?;
    let (iso, form2) = synthesize(&form1, &h, &j, &phi, &tol)?;
    Ok(Synthesized {
        form1,
        form2,
        h,
        j,
        phi,
        iso,
    })
}

/// Two independent forms on `n` states with `k` components each and a
/// random order isomorphism between them.
pub fn random_iso(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    killing: bool,
) -> dform_core::Result<(DirichletForm, DirichletForm, OrderIsomorphism)> {
    let c1 = random_partition(rng, n, k);
    let form1 = random_form(rng, "s", &c1, killing)?;
    let c2 = random_partition(rng, n, k);
    let form2 = random_form(rng, "t", &c2, killing)?;
    let scaling = (0..n).map(|_| log_uniform(rng, 0.25, 4.0)).collect();
    let tau = random_permutation(rng, n);
    let iso = OrderIsomorphism::new(form1.space().clone(), form2.space().clone(), scaling, tau)?;
    Ok((form1, form2, iso))
}

fn check_params(p: &GenerateParams) -> Result<()> {
    if p.n_states == 0 || p.n_components == 0 || p.n_components > p.n_states {
        return Err(CliError::Usage(format!(
            "infeasible parameters: need states ≥ components ≥ 1, got {} states and {} components",
            p.n_states, p.n_components
        )));
    }
    if p.n_states > DEFAULT_STATE_CAP {
        return Err(CliError::Usage(format!(
            "infeasible parameters: {} states exceeds the cap of {DEFAULT_STATE_CAP}",
            p.n_states
        )));
    }
    Ok(())
}

pub fn generate(p: &GenerateParams) -> Result<Instance> {
    check_params(p)?;
    let mut rng = rng(p.seed);
    let (n, k) = (p.n_states, p.n_components);
    match p.kind {
        Kind::Form => {
            let component = random_partition(&mut rng, n, k);
            let form =
                random_form(&mut rng, "s", &component, p.with_killing).context("generate")?;
            Ok(Instance::single(form))
        }
        Kind::Triple => {
            let t = random_triple(&mut rng, n, k, p.with_killing, p.unitary).context("generate")?;
            let expected = Expected {
                h: t.h.values().to_vec(),
                j: t.j.map().to_vec(),
                phi: t.phi.values(),
            };
            Ok(Instance {
                forms: vec![t.form1, t.form2],
                iso: Some(t.iso),
                expected: Some(expected),
            })
        }
        Kind::Iso => {
            let (form1, form2, iso) =
                random_iso(&mut rng, n, k, p.with_killing).context("generate")?;
            Ok(Instance {
                forms: vec![form1, form2],
                iso: Some(iso),
                expected: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dform_core::{factorize, intertwines};

    #[test]
    fn same_seed_same_bytes() {
        for kind in [Kind::Form, Kind::Triple, Kind::Iso] {
            let p = GenerateParams::new(42, 12, 3, kind);
            assert_eq!(
                generate(&p).unwrap().to_json(),
                generate(&p).unwrap().to_json()
            );
            let q = GenerateParams { seed: 43, ..p };
            assert_ne!(
                generate(&p).unwrap().to_json(),
                generate(&q).unwrap().to_json()
            );
        }
    }

    #[test]
    fn singleton_components_have_no_edges() {
        let inst = generate(&GenerateParams::new(7, 6, 6, Kind::Form)).unwrap();
        assert!(inst.source().edges().is_empty());
        assert_eq!(irreducible_decomposition(inst.source()).len(), 6);
    }

    #[test]
    fn components_are_connected() {
        for seed in 0..20 {
            let inst = generate(&GenerateParams::new(seed, 15, 4, Kind::Form)).unwrap();
            assert_eq!(irreducible_decomposition(inst.source()).len(), 4);
        }
    }

    #[test]
    fn triples_round_trip() {
        let tol = Tolerances::default();
        for seed in 0..20 {
            for with_killing in [true, false] {
                let p = GenerateParams {
                    with_killing,
                    ..GenerateParams::new(seed, 10, 3, Kind::Triple)
                };
                let inst = generate(&p).unwrap();
                let u = inst.iso.as_ref().unwrap();
                let fact = factorize(u, inst.source(), inst.target(), &tol).unwrap();
                let e = inst.expected.as_ref().unwrap();
                assert_eq!(fact.j.map(), &e.j[..]);
                for (a, b) in fact.h.values().iter().zip(&e.h) {
                    assert!((a - b).abs() <= 1e-8 * b);
                }
                for (a, b) in fact.phi.values().iter().zip(&e.phi) {
                    assert!((a - b).abs() <= 1e-8 * b);
                }
                if !with_killing {
                    assert!(inst.source().is_conservative());
                }
            }
        }
    }

    #[test]
    fn unitary_triples_have_unit_phi() {
        let p = GenerateParams {
            unitary: true,
            ..GenerateParams::new(3, 8, 2, Kind::Triple)
        };
        let inst = generate(&p).unwrap();
        assert!(inst.expected.unwrap().phi.iter().all(|&v| v == 1.0));
        assert!(inst.iso.unwrap().is_unitary(&Tolerances::default()));
    }

    #[test]
    fn random_isos_rarely_intertwine() {
        let tol = Tolerances::default();
        let mut rejected = 0;
        for seed in 0..20 {
            let inst = generate(&GenerateParams::new(seed, 8, 2, Kind::Iso)).unwrap();
            let report = intertwines(
                inst.iso.as_ref().unwrap(),
                inst.source(),
                inst.target(),
                &tol,
            )
            .unwrap();
            if !report.intertwines {
                rejected += 1;
            }
        }
        assert_eq!(rejected, 20);
    }

    #[test]
    fn infeasible_parameters_fail() {
        assert!(generate(&GenerateParams::new(1, 3, 4, Kind::Form)).is_err());
        assert!(generate(&GenerateParams::new(1, 0, 0, Kind::Form)).is_err());
        assert!(generate(&GenerateParams::new(
            1,
            DEFAULT_STATE_CAP + 1,
            1,
            Kind::Form
        ))
        .is_err());
    }
}
