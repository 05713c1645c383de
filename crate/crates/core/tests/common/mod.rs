#![allow(dead_code)]

use dform_core::{
    h_transform, irreducible_decomposition, pushforward_form, DirichletForm, ExcessiveFunction,
    Relabeling, StateSpace, StepScaling, Tolerances,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random component labels with every component nonempty.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut label = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        label[x] = if i < k { i } else { rng.random_range(0..k) };
    }
    label
}

/// Random form whose conductance graph has exactly the components in `label`.
pub fn random_form_with(rng: &mut ChaCha8Rng, label: &[usize], killing: bool) -> DirichletForm {
    let n = label.len();
    let k = label.iter().max().map_or(0, |m| m + 1);
    let measure = (0..n).map(|_| log_uniform(rng, 0.2, 5.0)).collect();
    let space = StateSpace::indexed("x", measure).unwrap();
    let mut c = DMatrix::zeros(n, n);
    for comp in 0..k {
        let mut members: Vec<usize> = (0..n).filter(|&x| label[x] == comp).collect();
        members.shuffle(rng);
        for i in 1..members.len() {
            let parent = members[rng.random_range(0..i)];
            let w = log_uniform(rng, 0.1, 10.0);
            c[(members[i], parent)] = w;
            c[(parent, members[i])] = w;
        }
        for a in 0..members.len() {
            for b in (a + 1)..members.len() {
                let (x, y) = (members[a], members[b]);
                if c[(x, y)] == 0.0 && rng.random_bool(0.25) {
                    let w = log_uniform(rng, 0.1, 10.0);
                    c[(x, y)] = w;
                    c[(y, x)] = w;
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
    DirichletForm::new(space, c, kill).unwrap()
}

pub fn random_form(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_k: usize,
    killing: bool,
) -> DirichletForm {
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(1..=max_k.min(n));
    let label = random_partition(rng, n, k);
    random_form_with(rng, &label, killing)
}

/// Random positive `h` together with a copy of `form` whose killing has been
/// raised just enough (plus a random margin on some states) to make `h`
/// excessive.
pub fn make_excessive(rng: &mut ChaCha8Rng, form: &DirichletForm) -> (DirichletForm, Vec<f64>) {
    let n = form.len();
    let h: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.5, 2.0)).collect();
    let c = form.conductances();
    let killing = (0..n)
        .map(|x| {
            let drift: f64 = (0..n).map(|y| c[(x, y)] * (h[x] - h[y])).sum();
            let needed = (-drift / h[x]).max(0.0);
            let extra = if rng.random_bool(0.5) {
                rng.random_range(0.0..0.5)
            } else {
                0.0
            };
            form.killing()[x].max(needed) + extra
        })
        .collect();
    let adjusted = DirichletForm::new(form.space().clone(), c.clone(), killing).unwrap();
    (adjusted, h)
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub struct Triple {
    pub form1: DirichletForm,
    pub h: ExcessiveFunction,
    pub j: Relabeling,
    pub phi: StepScaling,
}

pub fn random_triple(rng: &mut ChaCha8Rng, n: usize, k: usize, unitary: bool) -> Triple {
    let tol = Tolerances::default();
    let label = random_partition(rng, n, k);
    let base = random_form_with(rng, &label, true);
    let (form1, h) = make_excessive(rng, &base);
    let h = ExcessiveFunction::certify(&form1, h, &tol).unwrap();
    let transformed = h_transform(&form1, &h, &tol).unwrap();
    let labels = (0..n).map(|i| format!("y{i}")).collect();
    let j = Relabeling::induced(
        transformed.space().clone(),
        random_permutation(rng, n),
        labels,
    )
    .unwrap();
    let form2 = pushforward_form(&transformed, &j, &tol).unwrap();
    let dec2 = irreducible_decomposition(&form2);
    let constants = (0..dec2.len())
        .map(|_| {
            if unitary {
                1.0
            } else {
                log_uniform(rng, 0.25, 4.0)
            }
        })
        .collect();
    let phi = StepScaling::new(dec2, constants).unwrap();
    Triple { form1, h, j, phi }
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
