//! Command-line surface.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::commands::{self, tolerances};
use crate::error::{CliError, ExitStatus, Result};
use crate::generate::{generate, GenerateParams, Kind};
use crate::instance::{to_json_pretty, Instance, Real};
use crate::selftest::{self, Suite, SuiteReport, Thresholds};

#[derive(Debug, Parser)]
#[command(
    name = "dform",
    version,
    about = "Finite-state Dirichlet forms and intertwining order isomorphisms"
)]
pub struct Cli {
    /// Emit compact JSON, including error objects.
    #[arg(long, global = true)]
    pub json: bool,
    /// Emit indented JSON.
    #[arg(long, global = true, conflicts_with = "json")]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the schema and coefficients of an instance file.
    Validate { file: PathBuf },
    /// Print the irreducible components of a form.
    Decompose {
        file: PathBuf,
        /// Which form of the file to use.
        #[arg(long, default_value_t = 0)]
        form: usize,
    },
    /// Emit the h-transformed form.
    Htransform {
        file: PathBuf,
        /// A file, or inline values: `[1, 2]`, `{"a": 1}` or `1,2`.
        #[arg(long)]
        h: String,
        #[arg(long, default_value_t = 0)]
        form: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Generator residual of the order isomorphism; exits 2 above `--tol`.
    CheckIntertwine {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Factor the order isomorphism as `U_φ U_j U_h`.
    Factorize {
        file: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Emit a random instance with its ground-truth triple.
    Synthesize {
        #[command(flatten)]
        gen: GenArgs,
        /// Use φ ≡ 1.
        #[arg(long)]
        unitary: bool,
    },
    /// Emit a random instance of the given kind.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, value_enum, default_value = "form")]
        kind: Kind,
        #[arg(long)]
        unitary: bool,
    },
    /// Run the property suites.
    Selftest {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to these suites.
        #[arg(long, value_enum)]
        suite: Vec<Suite>,
    },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub states: usize,
    #[arg(long, default_value_t = 1)]
    pub components: usize,
    /// Generate killing-free forms.
    #[arg(long)]
    pub no_killing: bool,
}

impl GenArgs {
    fn params(&self, kind: Kind, unitary: bool) -> GenerateParams {
        GenerateParams {
            seed: self.seed,
            n_states: self.states,
            n_components: self.components,
            with_killing: !self.no_killing,
            kind,
            unitary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Pretty,
}

struct Output {
    format: Format,
    out: Vec<u8>,
}

impl Output {
    fn report<T: Serialize>(&mut self, value: &T, text: impl FnOnce() -> String) {
        let rendered = match self.format {
            Format::Text => text(),
            Format::Json => {
                let mut s = serde_json::to_string(value).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Pretty => to_json_pretty(value),
        };
        self.out.extend_from_slice(rendered.as_bytes());
    }

    /// Instance files are always canonical pretty JSON.
    fn instance(&mut self, inst: &Instance) {
        self.out.extend_from_slice(inst.to_json().as_bytes());
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|source| CliError::Io {
                path: path.to_owned(),
                source,
            })?;
        Instance::parse(&text)
    } else {
        Instance::read(path)
    }
}

fn pick_form(inst: &Instance, index: usize) -> Result<&dform_core::DirichletForm> {
    inst.forms.get(index).ok_or_else(|| {
        CliError::Usage(format!(
            "form {index} requested but the file has {}",
            inst.forms.len()
        ))
    })
}

fn fmt_real(v: Real) -> String {
    format!("{:.3e}", v.0)
}

fn execute(cli: &Cli, out: &mut Output) -> Result<()> {
    match &cli.command {
        Command::Validate { file } => {
            let inst = read_instance(file)?;
            let report = commands::validate(&inst, &tolerances(None)?)?;
            out.report(&report, || {
                let mut s = String::new();
                for (i, f) in report.forms.iter().enumerate() {
                    s += &format!(
                        "form {i}: {} states, {} edges, {} components, {}, markovian: {}\n",
                        f.states,
                        f.edges,
                        f.components,
                        if f.conservative {
                            "conservative"
                        } else {
                            "with killing"
                        },
                        f.markovian
                    );
                }
                if let Some(iso) = &report.iso {
                    s += &format!(
                        "iso: unitary {}, intertwines {} (residual {})\n",
                        iso.unitary,
                        iso.intertwines,
                        fmt_real(iso.generator_residual)
                    );
                }
                s += if report.valid { "valid\n" } else { "invalid\n" };
                s
            });
            if !report.valid {
                return Err(CliError::schema("forms", "semigroup is not sub-Markovian"));
            }
        }
        Command::Decompose { file, form } => {
            let inst = read_instance(file)?;
            let report = commands::decompose(pick_form(&inst, *form)?);
            out.report(&report, || {
                let mut s = format!("{} components\n", report.components.len());
                for (i, c) in report.components.iter().enumerate() {
                    s += &format!("{i}: {}\n", c.join(" "));
                }
                s
            });
        }
        Command::Htransform { file, h, form, tol } => {
            let inst = read_instance(file)?;
            let form = pick_form(&inst, *form)?;
            let values = commands::read_function(h, form.space())?;
            out.instance(&commands::htransform(form, values, &tolerances(*tol)?)?);
        }
        Command::CheckIntertwine { file, tol } => {
            let inst = read_instance(file)?;
            let report = commands::check_intertwine(&inst, &tolerances(*tol)?)?;
            out.report(&report, || {
                format!(
                    "residual {} (tolerance {}): {}\n",
                    fmt_real(report.residual),
                    fmt_real(report.tolerance),
                    if report.intertwines {
                        "intertwines"
                    } else {
                        "does not intertwine"
                    }
                )
            });
            if !report.intertwines {
                return Err(CliError::Check(format!(
                    "residual {:e} exceeds tolerance {:e}",
                    report.residual.0, report.tolerance.0
                )));
            }
        }
        Command::Factorize { file, tol } => {
            let inst = read_instance(file)?;
            let report = commands::factorize(&inst, &tolerances(*tol)?)?;
            out.report(&report, || {
                let mut s = String::new();
                for (i, c) in report.components.iter().enumerate() {
                    s += &format!(
                        "component {i}: [{}] -> [{}], norm {}\n",
                        c.source.join(" "),
                        c.target.join(" "),
                        fmt_real(c.norm)
                    );
                }
                s += "h:";
                for ((x, _), v) in report.j.iter().zip(&report.h) {
                    s += &format!(" {x}={}", fmt_real(*v));
                }
                s += "\nj:";
                for (x, y) in &report.j {
                    s += &format!(" {x}->{y}");
                }
                s += &format!(
                    "\nreconstruction residual {}\n",
                    fmt_real(report.diagnostics.reconstruction_residual)
                );
                if let Some(e) = &report.expected {
                    s += &format!("matches expected: {}\n", e.matches);
                }
                s
            });
        }
        Command::Synthesize { gen, unitary } => {
            out.instance(&generate(&gen.params(Kind::Triple, *unitary))?);
        }
        Command::Generate { gen, kind, unitary } => {
            out.instance(&generate(&gen.params(*kind, *unitary))?);
        }
        Command::Selftest { cases, seed, suite } => {
            let suites = if suite.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suite.clone()
            };
            let reports = selftest::run(&suites, *cases, *seed, &Thresholds::default());
            out.report(&reports, || render_selftest(&reports));
            let failed = reports.iter().filter(|r| !r.passed()).count();
            if failed > 0 {
                return Err(CliError::SelftestFailed(failed));
            }
        }
    }
    Ok(())
}

fn render_selftest(reports: &[SuiteReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s += &format!(
            "{:<20} {:>6} cases {:>6} failed  worst {:.3e}  {}\n",
            r.suite.name(),
            r.cases,
            r.failures,
            r.worst_metric,
            if r.passed() { "ok" } else { "FAIL" }
        );
        if let Some(f) = &r.first_failure {
            s += &format!(
                "  first failure: case {} seed {}: {}\n",
                f.index, f.seed, f.detail
            );
        }
    }
    s
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: u8,
    message: String,
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: ErrorBody<'a>,
}

/// Runs the parsed command line and returns the process status. Output that
/// was produced before a failure (for example the residual report of a
/// failed intertwining check) is still written.
pub fn run(cli: Cli) -> ExitCode {
    let format = if cli.pretty {
        Format::Pretty
    } else if cli.json {
        Format::Json
    } else {
        Format::Text
    };
    let mut out = Output {
        format,
        out: Vec::new(),
    };
    let result = execute(&cli, &mut out);
    let mut stdout = std::io::stdout().lock();
    let written = stdout.write_all(&out.out).and_then(|_| stdout.flush());
    let status = match (result, written) {
        (Ok(()), Ok(())) => ExitStatus::Success,
        (Ok(()), Err(e)) => report_error(&CliError::Output(e), format),
        (Err(e), _) => report_error(&e, format),
    };
    ExitCode::from(status.code())
}

fn report_error(err: &CliError, format: Format) -> ExitStatus {
    let status = err.status();
    if format == Format::Text {
        eprintln!("error: {err}");
    } else {
        let body = ErrorObject {
            error: ErrorBody {
                kind: err.tag(),
                exit_code: status.code(),
                message: err.to_string(),
            },
        };
        let text = serde_json::to_string(&body).expect("error objects serialize");
        // Keep stdout parseable even if a report was already written.
        println!("{text}");
    }
    status
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}
