//! The subcommands as library functions returning serializable reports.

use std::path::Path;

use dform_core::{
    factorize as factorize_iso, generator_residual, h_transform, intertwines,
    irreducible_decomposition, is_markovian, DirichletForm, ExcessiveFunction, OrderIsomorphism,
    StateSpace, Tolerances,
};
use serde::Serialize;

use crate::error::{CliError, Context, Result};
use crate::instance::{reals, Instance, Real};
use crate::selftest::GRID;

/// Name of the environment variable that overrides the default relative
/// tolerance.
pub const TOL_ENV: &str = "DFORM_TOL";

/// `--tol` if given, else `DFORM_TOL`, else the library defaults.
pub fn tolerances(flag: Option<f64>) -> Result<Tolerances> {
    let value = match flag {
        Some(v) => Some(v),
        None => match std::env::var(TOL_ENV) {
            Ok(text) => Some(
                text.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("{TOL_ENV}={text:?} is not a number")))?,
            ),
            Err(_) => None,
        },
    };
    match value {
        None => Ok(Tolerances::default()),
        Some(v) if v.is_finite() && v > 0.0 => Ok(Tolerances::with_relative(v)),
        Some(v) => Err(CliError::Usage(format!(
            "tolerance must be finite and positive, got {v}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormSummary {
    pub states: usize,
    pub edges: usize,
    pub components: usize,
    pub conservative: bool,
    pub markovian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoSummary {
    pub unitary: bool,
    pub generator_residual: Real,
    pub intertwines: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub forms: Vec<FormSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iso: Option<IsoSummary>,
    pub has_expected: bool,
}

fn summarize(form: &DirichletForm, tol: &Tolerances) -> FormSummary {
    FormSummary {
        states: form.len(),
        edges: form.edges().len(),
        components: irreducible_decomposition(form).len(),
        conservative: form.is_conservative(),
        markovian: is_markovian(form, &GRID, tol).markovian,
    }
}

/// Schema and coefficient checks happen while parsing; this adds the
/// semigroup sanity checks and, when present, the intertwining status of the
/// isomorphism, which is reported but does not make the file invalid.
pub fn validate(inst: &Instance, tol: &Tolerances) -> Result<ValidationReport> {
    let forms: Vec<FormSummary> = inst.forms.iter().map(|f| summarize(f, tol)).collect();
    let iso = match &inst.iso {
        Some(u) => {
            let report = intertwines(u, inst.source(), inst.target(), tol).context("iso")?;
            Some(IsoSummary {
                unitary: u.is_unitary(tol),
                generator_residual: Real(report.residual),
                intertwines: report.intertwines,
            })
        }
        None => None,
    };
    Ok(ValidationReport {
        valid: forms.iter().all(|f| f.markovian),
        forms,
        iso,
        has_expected: inst.expected.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// Labels of each irreducible component, ordered by smallest state.
    pub components: Vec<Vec<String>>,
}

pub fn decompose(form: &DirichletForm) -> DecompositionReport {
    let space = form.space();
    DecompositionReport {
        components: irreducible_decomposition(form)
            .components()
            .iter()
            .map(|c| c.iter().map(|&x| space.label(x).to_owned()).collect())
            .collect(),
    }
}

/// Reads `h` from a path if one exists, else from the text itself. Accepted
/// shapes: a JSON array in state order, a JSON object keyed by label, or
/// numbers separated by commas or whitespace.
pub fn read_function(arg: &str, space: &StateSpace) -> Result<Vec<f64>> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?
    } else {
        arg.to_owned()
    };
    parse_function(&text, space)
}

pub fn parse_function(text: &str, space: &StateSpace) -> Result<Vec<f64>> {
    let text = text.trim();
    let values: Vec<f64> = if text.starts_with('[') {
        serde_json::from_str(text).map_err(|e| CliError::schema("h", e.to_string()))?
    } else if text.starts_with('{') {
        let map: std::collections::BTreeMap<String, f64> =
            serde_json::from_str(text).map_err(|e| CliError::schema("h", e.to_string()))?;
        let mut values = vec![f64::NAN; space.len()];
        for (label, v) in map {
            let x = space
                .index_of(&label)
                .ok_or_else(|| CliError::schema("h", format!("unknown label `{label}`")))?;
            values[x] = v;
        }
        if let Some(x) = values.iter().position(|v| v.is_nan()) {
            return Err(CliError::schema(
                "h",
                format!("no value for label `{}`", space.label(x)),
            ));
        }
        values
    } else {
        text.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::schema("h", format!("`{s}` is not a number")))
            })
            .collect::<Result<_>>()?
    };
    if values.len() != space.len() {
        return Err(CliError::schema(
            "h",
            format!("expected {} values, found {}", space.len(), values.len()),
        ));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::schema("h", format!("value {v} is not finite")));
    }
    Ok(values)
}

/// The h-transform of `form` as a single-form instance. Fails with a
/// rejection when `h` is not excessive.
pub fn htransform(form: &DirichletForm, h: Vec<f64>, tol: &Tolerances) -> Result<Instance> {
    let h = ExcessiveFunction::certify(form, h, tol).context("h")?;
    let transformed = h_transform(form, &h, tol).context("h-transform")?;
    Ok(Instance::single(transformed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntertwiningSummary {
    pub residual: Real,
    pub tolerance: Real,
    pub intertwines: bool,
}

/// The isomorphism of the instance, or the identity when the instance has a
/// single form and no isomorphism.
pub fn instance_iso(inst: &Instance) -> Result<OrderIsomorphism> {
    match (&inst.iso, inst.forms.len()) {
        (Some(u), _) => Ok(u.clone()),
        (None, 1) => Ok(OrderIsomorphism::identity(inst.source().space().clone())),
        (None, _) => Err(CliError::schema(
            "iso",
            "two forms given but no order isomorphism",
        )),
    }
}

pub fn check_intertwine(inst: &Instance, tol: &Tolerances) -> Result<IntertwiningSummary> {
    let u = instance_iso(inst)?;
    let residual = generator_residual(&u, inst.source(), inst.target()).context("iso")?;
    Ok(IntertwiningSummary {
        residual: Real(residual),
        tolerance: Real(tol.generator),
        intertwines: residual <= tol.generator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Operator norm of `U` on this component.
    pub norm: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub intertwining_residual: Real,
    pub unitary_defect: Real,
    pub ratio_spread: Real,
    pub excessive_margin: Real,
    pub pushforward_residual: Real,
    pub reconstruction_residual: Real,
    pub scaling_identity_residual: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedComparison {
    pub matches: bool,
    pub h_error: Real,
    pub phi_error: Real,
    pub j_equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    /// In source order.
    pub h: Vec<Real>,
    /// `[source, target]` label pairs in source order.
    pub j: Vec<(String, String)>,
    /// In target order.
    pub phi: Vec<Real>,
    pub components: Vec<ComponentSummary>,
    pub diagnostics: DiagnosticsSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<ExpectedComparison>,
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Recovery tolerance for comparing against an embedded ground truth.
pub const EXPECTED_TOL: f64 = 1e-8;

pub fn factorize(inst: &Instance, tol: &Tolerances) -> Result<FactorizationReport> {
    let u = instance_iso(inst)?;
    let (form1, form2) = (inst.source(), inst.target());
    let fact = factorize_iso(&u, form1, form2, tol).context("factorize")?;
    let (s1, s2) = (form1.space(), form2.space());
    let phi = fact.phi.values();
    let components = irreducible_decomposition(form1)
        .components()
        .iter()
        .map(|states| {
            let mut image: Vec<usize> = states.iter().map(|&x| u.tau()[x]).collect();
            image.sort_unstable();
            ComponentSummary {
                source: states.iter().map(|&x| s1.label(x).to_owned()).collect(),
                target: image.iter().map(|&y| s2.label(y).to_owned()).collect(),
                norm: Real(phi[image[0]]),
            }
        })
        .collect();
    let d = fact.diagnostics;
    let expected = inst.expected.as_ref().map(|e| {
        let h_error = max_rel_diff(fact.h.values(), &e.h);
        let phi_error = max_rel_diff(&phi, &e.phi);
        let j_equal = fact.j.map() == &e.j[..];
        ExpectedComparison {
            matches: j_equal && h_error <= EXPECTED_TOL && phi_error <= EXPECTED_TOL,
            h_error: Real(h_error),
            phi_error: Real(phi_error),
            j_equal,
        }
    });
    Ok(FactorizationReport {
        h: reals(fact.h.values()),
        j: fact
            .j
            .map()
            .iter()
            .enumerate()
            .map(|(x, &y)| (s1.label(x).to_owned(), s2.label(y).to_owned()))
            .collect(),
        phi: reals(&phi),
        components,
        diagnostics: DiagnosticsSummary {
            intertwining_residual: Real(d.intertwining_residual),
            unitary_defect: Real(d.unitary_defect),
            ratio_spread: Real(d.ratio_spread),
            excessive_margin: Real(d.excessive_margin),
            pushforward_residual: Real(d.pushforward_residual),
            reconstruction_residual: Real(d.reconstruction_residual),
            scaling_identity_residual: Real(d.scaling_identity_residual),
        },
        expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GenerateParams, Kind};

    const TRIANGLES: &str = r#"{
  "version": "dform/1",
  "forms": [{
    "labels": ["a", "b", "c", "d", "e", "f"],
    "measure": [1, 1, 1, 1, 1, 1],
    "conductances": [
      {"x": "a", "y": "c", "value": 1}, {"x": "c", "y": "e", "value": 1}, {"x": "a", "y": "e", "value": 1},
      {"x": "b", "y": "d", "value": 2}, {"x": "d", "y": "f", "value": 2}, {"x": "b", "y": "f", "value": 2}
    ]
  }]
}"#;

    #[test]
    fn two_triangles_decompose_into_two() {
        let inst = Instance::parse(TRIANGLES).unwrap();
        let report = decompose(inst.source());
        assert_eq!(
            report.components,
            vec![vec!["a", "c", "e"], vec!["b", "d", "f"]]
        );
    }

    #[test]
    fn identity_instance_has_zero_residual() {
        let inst = Instance::parse(TRIANGLES).unwrap();
        let report = check_intertwine(&inst, &Tolerances::default()).unwrap();
        assert_eq!(report.residual.0, 0.0);
        assert!(report.intertwines);
    }

    #[test]
    fn factorize_recovers_embedded_triple() {
        for seed in 0..10 {
            let inst = generate(&GenerateParams::new(seed, 12, 3, Kind::Triple)).unwrap();
            let report = factorize(&inst, &Tolerances::default()).unwrap();
            assert!(report.expected.unwrap().matches);
            assert_eq!(report.components.len(), 3);
        }
    }

    #[test]
    fn function_shapes() {
        let space = StateSpace::indexed("x", vec![1.0, 1.0, 1.0]).unwrap();
        let want = vec![1.0, 2.0, 3.0];
        assert_eq!(parse_function("[1, 2, 3]", &space).unwrap(), want);
        assert_eq!(parse_function("1,2 3", &space).unwrap(), want);
        assert_eq!(
            parse_function(r#"{"x2": 3, "x0": 1, "x1": 2}"#, &space).unwrap(),
            want
        );
        assert!(parse_function("1,2", &space).is_err());
        assert!(parse_function(r#"{"x0": 1, "x1": 2}"#, &space).is_err());
        assert!(parse_function("1,two,3", &space).is_err());
    }

    #[test]
    fn non_excessive_h_is_rejected() {
        let inst = Instance::parse(TRIANGLES).unwrap();
        let err = htransform(
            inst.source(),
            vec![1.0, 1.0, 2.0, 1.0, 1.0, 1.0],
            &Tolerances::default(),
        )
        .unwrap_err();
        assert_eq!(err.status(), crate::ExitStatus::Rejected);
    }

    #[test]
    fn tolerance_flag_wins() {
        assert_eq!(tolerances(Some(1e-6)).unwrap().generator, 1e-6);
        assert!(tolerances(Some(-1.0)).is_err());
    }
}
