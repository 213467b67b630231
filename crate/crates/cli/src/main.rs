use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrf_cli::emit::JsonOnly;
use qrf_cli::{emit, exit, parse_inputs, run_suite, CliError, Format, Input, SuiteConfig, SuiteName, VerifyReport};
use qrf_core::framechange::{frame_change, frame_change_inverse_check, FrameChangeScenario};
use qrf_core::frames::{canonical_frame, Convention, FrameCertificate, QuantumFrame};
use qrf_core::groups::{make_preset, FiniteGroup, GroupPreset};
use qrf_core::operators::{tensor, Operator, OperatorJson};
use qrf_core::phaselab::{dirac_convergence_experiment, standard_test_sets};
use qrf_core::relativization::{relative_orientation, relativize, restrict, swap_relation_residual, RelativePair};
use qrf_core::representations::{regular_rep, Direction};
use qrf_core::sampling::Sampler;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qrf", version)]
#[command(about = "Operational quantum reference frames: constructions and verification suites")]
struct Cli {
    /// Seed for the single random generator shared by every command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Residual threshold for pass/fail checks.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (phase-lab defaults to csv, everything else to json).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GroupArg {
    /// Group preset: Z<n>, D<n>, S3 or Q8.
    #[arg(long, short, default_value = "Z3")]
    group: String,
}

impl GroupArg {
    fn build(&self) -> Result<(GroupPreset, FiniteGroup), CliError> {
        let preset: GroupPreset =
            self.group.parse().map_err(|e: qrf_core::Error| CliError::config("group", e.to_string()))?;
        let group = make_preset(preset).map_err(|e| CliError::config("group", e.to_string()))?;
        Ok((preset, group))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a verified Cayley table
    Group {
        #[command(flatten)]
        group: GroupArg,
        /// Read the group from a JSON file instead of a preset.
        #[arg(long)]
        input: Option<PathBuf>,
    },

    /// Certify a frame: covariance, norm-1, completeness, flags
    Frame {
        #[command(flatten)]
        group: GroupArg,
        #[arg(long, value_enum, default_value = "left-regular")]
        convention: ConventionArg,
        /// Frame JSON to certify instead of the canonical frame.
        #[arg(long)]
        input: Option<PathBuf>,
    },

    /// Relativize a system operator against the canonical frame
    Relativize {
        #[command(flatten)]
        group: GroupArg,
        /// Operator JSON on the regular representation space; random if absent.
        #[arg(long)]
        operator: Option<PathBuf>,
    },

    /// Relative orientation of two canonical frames
    Orientation {
        #[command(flatten)]
        group: GroupArg,
    },

    /// Localized frame change of a state on H₂ ⊗ H_S
    Framechange {
        #[command(flatten)]
        group: GroupArg,
        /// Scenario JSON instead of two canonical frames.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// State JSON on H₂ ⊗ H_S; random if absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },

    /// Localization curves for the truncated phase frame
    PhaseLab {
        /// Truncation dimensions.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
        dims: Vec<usize>,
        /// Number of angular cells.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Localization centre in radians.
        #[arg(long, default_value_t = 0.0)]
        center: f64,
    },

    /// Run verification suites
    Verify {
        /// Suites to run; all when empty.
        suites: Vec<String>,
        /// JSON config; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        group: Option<String>,
        /// Random instances per check.
        #[arg(long)]
        batch: Option<usize>,
        /// Record per-check runtimes (output is then no longer byte-stable).
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum ConventionArg {
    LeftRegular,
    Inverse,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::LeftRegular => Convention::LeftRegular,
            ConventionArg::Inverse => Convention::Inverse,
        }
    }
}

/// Outcome of a command that produced output.
enum Verdict {
    Pass,
    Fail,
}

#[derive(Serialize)]
struct GroupSummary {
    order: usize,
    abelian: bool,
    cayley: Vec<Vec<usize>>,
    inverses: Vec<usize>,
}

#[derive(Serialize)]
struct FrameSummary {
    order: usize,
    dim: usize,
    ideal: bool,
    certificate: FrameCertificate,
}

#[derive(Serialize)]
struct RelativizeSummary {
    system_dim: usize,
    recovery_residual: f64,
    invariance_residual: f64,
    isometry_residual: f64,
    threshold: f64,
    pass: bool,
    image: OperatorJson,
}

#[derive(Serialize)]
struct OrientationSummary {
    /// Row `h`: the orientation distribution for frames localized at `e` and `h`.
    distributions: Vec<Vec<f64>>,
    dirac_residual: f64,
    swap_residual: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct FrameChangeSummary {
    inverse_residual: f64,
    threshold: f64,
    pass: bool,
    signature_dim: usize,
    representative: OperatorJson,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::from(exit::PASS),
        Ok(Verdict::Fail) => ExitCode::from(exit::CHECK_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::CONFIG_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let defaults = SuiteConfig::default();
    let tol = cli.tol.unwrap_or(defaults.tol);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::config("tol", format!("must be a positive number, got {tol}")));
    }
    let mut rng = Sampler::new(cli.seed.unwrap_or(defaults.seed));
    let format = cli.format.unwrap_or(match cli.command {
        Command::PhaseLab { .. } => Format::Csv,
        _ => Format::Json,
    });
    let out = cli.out.as_deref();
    let verdict = |pass: bool| if pass { Verdict::Pass } else { Verdict::Fail };

    match cli.command {
        Command::Group { group, input } => {
            let g = match input {
                Some(path) => match single_input(path)? {
                    Input::Group(g) => g,
                    other => return Err(wrong_kind("group", &other)),
                },
                None => group.build()?.1,
            };
            let summary = GroupSummary {
                order: g.order(),
                abelian: g.is_abelian(),
                cayley: g.cayley().to_vec(),
                inverses: g.elements().map(|x| g.inv(x)).collect(),
            };
            emit(&JsonOnly(summary), format, out)?;
            Ok(Verdict::Pass)
        }

        Command::Frame { group, convention, input } => {
            let frame = match input {
                Some(path) => match single_input(path)? {
                    Input::Frame(f) => *f,
                    other => return Err(wrong_kind("frame", &other)),
                },
                None => canonical_frame(&group.build()?.1, convention.into()),
            };
            let summary = FrameSummary {
                order: frame.group().order(),
                dim: frame.dim(),
                ideal: frame.is_ideal(),
                certificate: frame.certificate().clone(),
            };
            let pass = summary.certificate.covariance.pass;
            emit(&JsonOnly(summary), format, out)?;
            Ok(verdict(pass))
        }

        Command::Relativize { group, operator } => {
            let (_, g) = group.build()?;
            let pair = RelativePair::new(canonical_frame(&g, Convention::LeftRegular), regular_rep(&g))?;
            let a = match operator {
                Some(path) => match single_input(path)? {
                    Input::Operator(a) => a,
                    Input::State(s) => s.into_op(),
                    other => return Err(wrong_kind("operator", &other)),
                },
                None => rng.operator(pair.system_dim()),
            };
            if a.dim() != pair.system_dim() {
                return Err(CliError::config(
                    "operator",
                    format!("expected dimension {}, got {}", pair.system_dim(), a.dim()),
                ));
            }
            let image = relativize(&pair, &a)?;
            let e = pair.frame().localized_state(g.identity())?;
            let recovery = (&restrict(&e, &image)? - &a).op_norm();
            let joint = pair.joint_rep();
            let mut invariance = 0.0f64;
            for h in g.elements() {
                invariance = invariance.max((&joint.conjugate(h, &image, Direction::Observable)? - &image).op_norm());
            }
            let isometry = (image.op_norm() - a.op_norm()).abs();
            let pass = recovery < tol && invariance < tol && isometry < tol;
            let summary = RelativizeSummary {
                system_dim: pair.system_dim(),
                recovery_residual: recovery,
                invariance_residual: invariance,
                isometry_residual: isometry,
                threshold: tol,
                pass,
                image: (&image).into(),
            };
            emit(&JsonOnly(summary), format, out)?;
            Ok(verdict(pass))
        }

        Command::Orientation { group } => {
            let (_, g) = group.build()?;
            let f = canonical_frame(&g, Convention::LeftRegular);
            let o = relative_orientation(&f, &f)?;
            let n = g.order();
            let mut distributions = Vec::with_capacity(n);
            let mut dirac = 0.0f64;
            for h in g.elements() {
                let joint = tensor(&Operator::basis_projector(n, g.identity()), &Operator::basis_projector(n, h));
                let p = o.born(&joint)?;
                for (x, px) in p.iter().enumerate() {
                    dirac = dirac.max((px - if x == h { 1.0 } else { 0.0 }).abs());
                }
                distributions.push(p);
            }
            let swap = swap_relation_residual(&f, &f)?;
            let pass = dirac < tol && swap < tol;
            let summary =
                OrientationSummary { distributions, dirac_residual: dirac, swap_residual: swap, threshold: tol, pass };
            emit(&JsonOnly(summary), format, out)?;
            Ok(verdict(pass))
        }

        Command::Framechange { group, scenario, input } => {
            let sc = match scenario {
                Some(path) => match single_input(path)? {
                    Input::Scenario(sc) => *sc,
                    other => return Err(wrong_kind("scenario", &other)),
                },
                None => {
                    let (_, g) = group.build()?;
                    let f: QuantumFrame = canonical_frame(&g, Convention::LeftRegular);
                    FrameChangeScenario::new(f.clone(), f, regular_rep(&g))?
                }
            };
            let d = sc.frame2().dim() * sc.system_dim();
            let x = match input {
                Some(path) => match single_input(path)? {
                    Input::State(s) => s.into_op(),
                    other => return Err(wrong_kind("state", &other)),
                },
                None => rng.state(d).into_op(),
            };
            if x.dim() != d {
                return Err(CliError::config("input", format!("expected a state on dimension {d}, got {}", x.dim())));
            }
            let result = frame_change(&sc, &x)?;
            let inverse = frame_change_inverse_check(&sc, std::slice::from_ref(&x))?.max_residual;
            let pass = inverse < tol;
            let summary = FrameChangeSummary {
                inverse_residual: inverse,
                threshold: tol,
                pass,
                signature_dim: result.signature.span_dim,
                representative: (&result.representative).into(),
            };
            emit(&JsonOnly(summary), format, out)?;
            Ok(verdict(pass))
        }

        Command::PhaseLab { dims, grid, center } => {
            let config = SuiteConfig { dims: dims.clone(), grid, ..SuiteConfig::default() };
            config.validate()?;
            let curve = dirac_convergence_experiment(&dims, grid, center, &standard_test_sets(grid, center))?;
            emit(&curve, format, out)?;
            Ok(Verdict::Pass)
        }

        Command::Verify { suites, config, group, batch, timings } => {
            let mut cfg = match config {
                Some(path) => SuiteConfig::load(&path)?,
                None => SuiteConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            if let Some(g) = group {
                cfg.group = g;
            }
            if let Some(b) = batch {
                cfg.batch = b;
            }
            cfg.timings |= timings;
            let names = if suites.is_empty() || suites.iter().any(|s| s == "all") {
                SuiteName::ALL.to_vec()
            } else {
                suites.iter().map(|s| s.parse()).collect::<Result<Vec<SuiteName>, _>>()?
            };
            let reports = names.into_iter().map(|n| run_suite(n, &cfg)).collect::<Result<Vec<_>, _>>()?;
            let report = VerifyReport::new(reports);
            for s in &report.suites {
                for c in s.failures() {
                    eprintln!("FAIL {}/{}: residual {:e} vs threshold {:e}", s.suite, c.id, c.residual, c.threshold);
                }
            }
            emit(&report, format, out)?;
            Ok(verdict(report.pass))
        }
    }
}

fn single_input(path: PathBuf) -> Result<Input, CliError> {
    Ok(parse_inputs(&[path])?.remove(0))
}

fn wrong_kind(expected: &str, got: &Input) -> CliError {
    CliError::config("input", format!("expected a {expected} document, got a {}", got.kind()))
}
