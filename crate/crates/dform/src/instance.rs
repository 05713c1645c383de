//! The JSON instance file.
//!
//! ```json
//! {
//!   "version": "dform/1",
//!   "forms": [
//!     {
//!       "labels": ["a", "b"],
//!       "measure": [1.0, 2.0],
//!       "conductances": [{ "x": "a", "y": "b", "value": 0.5 }],
//!       "killing": [0.0, 0.1]
//!     }
//!   ],
//!   "iso": { "scaling": [1.0, 1.0], "tau": [["a", "a"], ["b", "b"]] },
//!   "expected": { "h": [1.0, 1.0], "j": [["a", "a"], ["b", "b"]], "phi": [1.0, 1.0] }
//! }
//! ```
//!
//! `forms` holds the source form and optionally a target form; when only one
//! is given it plays both roles. `iso` maps the source to the target:
//! `scaling` is listed in source order and `tau` pairs source labels with
//! target labels. `expected` is a ground-truth factorization: `h` in source
//! order, `j` as label pairs and `phi` in target order.
//!
//! Every float is written with 17 significant digits so that parsing the
//! output gives back the same bits.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dform_core::{DirichletForm, OrderIsomorphism, StateSpace};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, Context, Result};

pub const FORMAT_VERSION: &str = "dform/1";

/// A float that serializes with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom("non-finite number"));
        }
        let text = format!("{:.16e}", self.0);
        let number = serde_json::Number::from_str(&text).map_err(serde::ser::Error::custom)?;
        number.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Real)
    }
}

pub fn reals(values: &[f64]) -> Vec<Real> {
    values.iter().copied().map(Real).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEdge {
    pub x: String,
    pub y: String,
    pub value: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawForm {
    pub labels: Vec<String>,
    pub measure: Vec<Real>,
    #[serde(default)]
    pub conductances: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub killing: Option<Vec<Real>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIso {
    pub scaling: Vec<Real>,
    pub tau: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExpected {
    pub h: Vec<Real>,
    pub j: Vec<(String, String)>,
    pub phi: Vec<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub version: String,
    pub forms: Vec<RawForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso: Option<RawIso>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<RawExpected>,
}

/// Ground-truth factorization carried by an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    /// Indexed by source state.
    pub h: Vec<f64>,
    /// Source index to target index.
    pub j: Vec<usize>,
    /// Indexed by target state.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub forms: Vec<DirichletForm>,
    pub iso: Option<OrderIsomorphism>,
    pub expected: Option<Expected>,
}

impl Instance {
    pub fn single(form: DirichletForm) -> Self {
        Instance {
            forms: vec![form],
            iso: None,
            expected: None,
        }
    }

    pub fn source(&self) -> &DirichletForm {
        &self.forms[0]
    }

    /// The second form, or the first when there is only one.
    pub fn target(&self) -> &DirichletForm {
        self.forms.last().unwrap_or(&self.forms[0])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(json_error)?;
        Self::from_raw(&raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn from_raw(raw: &RawInstance) -> Result<Self> {
        if raw.version != FORMAT_VERSION {
            return Err(CliError::schema(
                "version",
                format!(
                    "unsupported version `{}`, expected `{FORMAT_VERSION}`",
                    raw.version
                ),
            ));
        }
        if raw.forms.is_empty() || raw.forms.len() > 2 {
            return Err(CliError::schema(
                "forms",
                format!("expected one or two forms, found {}", raw.forms.len()),
            ));
        }
        let forms = raw
            .forms
            .iter()
            .enumerate()
            .map(|(i, f)| form_from_raw(f, &format!("forms[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let source = forms[0].space();
        let target = forms.last().unwrap_or(&forms[0]).space();
        let iso = raw
            .iso
            .as_ref()
            .map(|iso| {
                let scaling = finite(&iso.scaling, "iso.scaling")?;
                expect_len(scaling.len(), source.len(), "iso.scaling")?;
                let tau = label_map(&iso.tau, source, target, "iso.tau")?;
                OrderIsomorphism::new(source.clone(), target.clone(), scaling, tau).context("iso")
            })
            .transpose()?;
        let expected = raw
            .expected
            .as_ref()
            .map(|e| {
                let h = finite(&e.h, "expected.h")?;
                expect_len(h.len(), source.len(), "expected.h")?;
                let phi = finite(&e.phi, "expected.phi")?;
                expect_len(phi.len(), target.len(), "expected.phi")?;
                let j = label_map(&e.j, source, target, "expected.j")?;
                Ok(Expected { h, j, phi })
            })
            .transpose()?;
        Ok(Instance {
            forms,
            iso,
            expected,
        })
    }

    pub fn to_raw(&self) -> RawInstance {
        let source = self.source().space();
        let target = self.target().space();
        let pairs = |map: &[usize]| {
            map.iter()
                .enumerate()
                .map(|(x, &y)| (source.label(x).to_owned(), target.label(y).to_owned()))
                .collect()
        };
        RawInstance {
            version: FORMAT_VERSION.to_owned(),
            forms: self.forms.iter().map(form_to_raw).collect(),
            iso: self.iso.as_ref().map(|u| RawIso {
                scaling: reals(u.scaling()),
                tau: pairs(u.tau()),
            }),
            expected: self.expected.as_ref().map(|e| RawExpected {
                h: reals(&e.h),
                j: pairs(&e.j),
                phi: reals(&e.phi),
            }),
        }
    }

    /// Canonical text: edges in increasing `(x, y)` order with `x < y`,
    /// zero edges dropped, killing always present.
    pub fn to_json(&self) -> String {
        to_json_pretty(&self.to_raw())
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("finite values serialize");
    text.push('\n');
    text
}

pub fn form_to_raw(form: &DirichletForm) -> RawForm {
    let space = form.space();
    RawForm {
        labels: space.labels().to_vec(),
        measure: reals(space.measure()),
        conductances: form
            .edges()
            .into_iter()
            .map(|(x, y, value)| RawEdge {
                x: space.label(x).to_owned(),
                y: space.label(y).to_owned(),
                value: Real(value),
            })
            .collect(),
        killing: Some(reals(form.killing())),
    }
}

pub fn form_from_raw(raw: &RawForm, field: &str) -> Result<DirichletForm> {
    let measure = finite(&raw.measure, &format!("{field}.measure"))?;
    expect_len(measure.len(), raw.labels.len(), &format!("{field}.measure"))?;
    let space = StateSpace::new(raw.labels.clone(), measure).context(field)?;
    let index = label_index(&space);
    let mut edges = Vec::with_capacity(raw.conductances.len());
    for (i, edge) in raw.conductances.iter().enumerate() {
        let here = format!("{field}.conductances[{i}]");
        let x = lookup(&index, &edge.x, &format!("{here}.x"))?;
        let y = lookup(&index, &edge.y, &format!("{here}.y"))?;
        let value = finite(&[edge.value], &format!("{here}.value"))?[0];
        edges.push((x, y, value));
    }
    let killing = match &raw.killing {
        Some(k) => {
            let k = finite(k, &format!("{field}.killing"))?;
            expect_len(k.len(), space.len(), &format!("{field}.killing"))?;
            k
        }
        None => vec![0.0; space.len()],
    };
    DirichletForm::from_triplets(space, &edges, killing).context(field)
}

fn json_error(err: serde_json::Error) -> CliError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => CliError::schema(
            format!("line {}, column {}", err.line(), err.column()),
            strip_position(&err.to_string()),
        ),
        Category::Io => CliError::Syntax {
            line: 0,
            column: 0,
            message: err.to_string(),
        },
        Category::Syntax | Category::Eof => CliError::Syntax {
            line: err.line(),
            column: err.column(),
            message: strip_position(&err.to_string()),
        },
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_owned(),
        None => message.to_owned(),
    }
}

fn finite(values: &[Real], field: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.0.is_finite() {
                Ok(r.0)
            } else {
                Err(CliError::schema(
                    format!("{field}[{i}]"),
                    "number is not finite",
                ))
            }
        })
        .collect()
}

fn expect_len(found: usize, expected: usize, field: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(CliError::schema(
            field,
            format!("expected {expected} entries, found {found}"),
        ))
    }
}

fn label_index(space: &StateSpace) -> HashMap<&str, usize> {
    space
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect()
}

fn lookup(index: &HashMap<&str, usize>, label: &str, field: &str) -> Result<usize> {
    index
        .get(label)
        .copied()
        .ok_or_else(|| CliError::schema(field, format!("unknown label `{label}`")))
}

/// Reads `[source, target]` label pairs into a source-indexed map. Every
/// source label must appear exactly once.
fn label_map(
    pairs: &[(String, String)],
    source: &StateSpace,
    target: &StateSpace,
    field: &str,
) -> Result<Vec<usize>> {
    expect_len(pairs.len(), source.len(), field)?;
    let (src, tgt) = (label_index(source), label_index(target));
    let mut map = vec![usize::MAX; source.len()];
    for (i, (a, b)) in pairs.iter().enumerate() {
        let x = lookup(&src, a, &format!("{field}[{i}][0]"))?;
        let y = lookup(&tgt, b, &format!("{field}[{i}][1]"))?;
        if map[x] != usize::MAX {
            return Err(CliError::schema(
                format!("{field}[{i}][0]"),
                format!("label `{a}` is mapped twice"),
            ));
        }
        map[x] = y;
    }
    Ok(map)
}
