//! carnot: exact computation with graded nilpotent Lie algebras, tangent
//! cones of polynomial distributions, Lyapunov spectra, and nilmanifold
//! Anosov systems.
//!
//! Exit codes: 0 = verified/holds, 1 = refuted/fails, 2 = error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use carnot::autgroup::{asymmetry_verdict, graded_derivations, AsymmetryVerdict};
use carnot::io::{
    self, AlgebraFile, DistributionFile, FieldSpec, SystemFile,
};
use carnot::lie::{GradingVerdict, JacobiVerdict};
use carnot::linalg::SMat;
use carnot::metivier::{default_samples, genericity_check, tangent_cone, GenericityVerdict};
use carnot::nilmanifold::{
    build_product_anosov, build_smale_system, make_periodic_perturbation, qr_lyapunov_estimate,
    NilError,
};
use carnot::report::{digest_file, RunReport};
use carnot::scalar::Scalar;
use carnot::spectra::{
    layer_exponents, lyapunov_spectrum, verify_arithmeticity, verify_heisenberg_additivity,
    verify_subadditivity, HeisenbergAdditivity, SpectrumReport, SpectrumSource,
    SubadditivityVerdict, EXACT_TOL,
};

#[derive(Parser)]
#[command(name = "carnot", version, about)]
struct Cli {
    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on algebra files.
    Algebra {
        #[command(subcommand)]
        cmd: AlgebraCmd,
    },
    /// Tangent cones of polynomial distributions.
    Cone {
        #[command(subcommand)]
        cmd: ConeCmd,
    },
    /// Spectral theorem verifiers.
    Spectrum {
        #[command(subcommand)]
        cmd: SpectrumCmd,
    },
    /// Product Anosov systems on nilmanifolds.
    Anosov {
        #[command(subcommand)]
        cmd: AnosovCmd,
    },
    /// Numerical Lyapunov estimation.
    Lyapunov {
        #[command(subcommand)]
        cmd: LyapunovCmd,
    },
}

#[derive(Subcommand)]
enum AlgebraCmd {
    /// Jacobi identity, nilpotency and grading checks.
    Check { file: PathBuf },
    /// Basis of the graded derivation algebra.
    Autos { file: PathBuf },
    /// Asymmetry verdict with an exact certificate.
    Asymmetry { file: PathBuf },
}

#[derive(Subcommand)]
enum ConeCmd {
    /// Tangent cone of a distribution at a point.
    Compute {
        file: PathBuf,
        /// Comma-separated exact coordinates, e.g. "0,0,0" or "1/2,0,0".
        #[arg(long, default_value = "")]
        point: String,
    },
}

#[derive(Subcommand)]
enum SpectrumCmd {
    /// Verify a spectral statement for a matrix over a declared field.
    Verify {
        map: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long, value_enum)]
        theorem: Theorem,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Theorem {
    /// Arithmetic progression of unstable exponents.
    Arith,
    /// Level-wise subadditivity bounds.
    Subadd,
    /// Heisenberg additivity of the center exponent.
    Heis,
}

#[derive(Subcommand)]
enum AnosovCmd {
    /// Build a certified product Anosov system.
    Build {
        /// Bundled example name (currently: smale).
        #[arg(long, conflicts_with_all = ["algebra", "lambda"])]
        example: Option<String>,
        /// Factor algebra file for a custom system.
        #[arg(long, requires = "lambda", requires = "sqrt")]
        algebra: Option<PathBuf>,
        /// λ as an exact scalar string, e.g. "2+1*r".
        #[arg(long)]
        lambda: Option<String>,
        /// Radicand d of the quadratic field Q(√d) for λ.
        #[arg(long)]
        sqrt: Option<u64>,
    },
}

#[derive(Subcommand)]
enum LyapunovCmd {
    /// QR/Benettin Lyapunov spectrum estimate on a system file.
    Estimate {
        #[arg(long)]
        system: PathBuf,
        /// Perturbation amplitude (0 = exact automorphism).
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        iters: usize,
    },
}

struct Outcome {
    verified: bool,
    inputs: Vec<PathBuf>,
    verdicts: serde_json::Value,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Io(#[from] io::IoError),
    #[error("{0}")]
    File(#[from] std::io::Error),
    #[error("{0}")]
    Message(String),
}

fn msg(e: impl std::fmt::Display) -> CliError {
    CliError::Message(e.to_string())
}

fn matrix_json(m: &SMat) -> serde_json::Value {
    json!((0..m.rows)
        .map(|i| (0..m.cols)
            .map(|j| m[(i, j)].to_string())
            .collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn scalars_json(v: &[Scalar]) -> serde_json::Value {
    json!(v.iter().map(|s| s.to_string()).collect::<Vec<_>>())
}

fn spectrum_json(r: &SpectrumReport) -> serde_json::Value {
    let source = match &r.source {
        SpectrumSource::ExactEigenvalues => json!("exact_eigenvalues"),
        SpectrumSource::NumericEigenvalues => json!("numeric_eigenvalues"),
        SpectrumSource::QrEstimate { iterations, seed } => {
            json!({"qr_estimate": {"iterations": iterations, "seed": seed}})
        }
    };
    json!({
        "exponents": r.exponents,
        "source": source,
        "error_bound": r.error_bound,
    })
}

fn algebra_check(file: &Path) -> Result<Outcome, CliError> {
    let g = io::read_algebra(file)?;
    let jacobi = g.algebra.check_jacobi();
    let nilpotent = g.algebra.is_nilpotent();
    let grading = g.verify_grading();
    let jacobi_json = match &jacobi {
        JacobiVerdict::Ok => json!("ok"),
        JacobiVerdict::Counterexample { i, j, k, residual } => json!({
            "counterexample": {"i": i, "j": j, "k": k, "residual": scalars_json(residual)}
        }),
    };
    let grading_json = match &grading {
        GradingVerdict::GradedCarnot => json!("graded_carnot"),
        GradingVerdict::Graded => json!("graded"),
        GradingVerdict::Violation { description, .. } => json!({"violation": description}),
    };
    let verified = matches!(jacobi, JacobiVerdict::Ok)
        && nilpotent
        && !matches!(grading, GradingVerdict::Violation { .. });
    Ok(Outcome {
        verified,
        inputs: vec![file.to_path_buf()],
        verdicts: json!({
            "jacobi": jacobi_json,
            "nilpotent": nilpotent,
            "grading": grading_json,
            "lower_central_series": g.algebra.lower_central_series(),
        }),
    })
}

fn algebra_autos(file: &Path) -> Result<Outcome, CliError> {
    let g = io::read_algebra(file)?;
    let space = graded_derivations(&g).map_err(msg)?;
    Ok(Outcome {
        verified: true,
        inputs: vec![file.to_path_buf()],
        verdicts: json!({
            "derivation_dimension": space.dim(),
            "basis": space.basis.iter().map(matrix_json).collect::<Vec<_>>(),
        }),
    })
}

fn algebra_asymmetry(file: &Path, seed: u64) -> Result<Outcome, CliError> {
    let g = io::read_algebra(file)?;
    let verdict = asymmetry_verdict(&g, seed).map_err(msg)?;
    let (verified, verdicts) = match &verdict {
        AsymmetryVerdict::Asymmetric { p0 } => (
            true,
            json!({"verdict": "asymmetric", "p0": matrix_json(p0)}),
        ),
        AsymmetryVerdict::NotAsymmetric {
            derivation,
            eigen_interval,
        } => (
            false,
            json!({
                "verdict": "not_asymmetric",
                "derivation": matrix_json(derivation),
                "eigen_interval": [eigen_interval.0.to_string(), eigen_interval.1.to_string()],
            }),
        ),
        AsymmetryVerdict::Undetermined => (false, json!({"verdict": "undetermined"})),
    };
    Ok(Outcome {
        verified,
        inputs: vec![file.to_path_buf()],
        verdicts,
    })
}

fn cone_compute(file: &Path, point: &str) -> Result<Outcome, CliError> {
    let dist: DistributionFile = io::read_json(file)?;
    let field = dist.field.to_field()?;
    let fields = dist.to_fields()?;
    let n = dist.n;
    let p: Vec<Scalar> = if point.is_empty() {
        vec![Scalar::zero(); n]
    } else {
        point
            .split(',')
            .map(|t| Scalar::parse(t.trim(), field))
            .collect::<Result<_, _>>()
            .map_err(msg)?
    };
    if p.len() != n {
        return Err(CliError::Message(format!("--point needs {n} coordinates")));
    }
    let samples = default_samples(n);
    match genericity_check(&fields, &p, &samples).map_err(msg)? {
        GenericityVerdict::NonGeneric { witness, dims } => {
            return Ok(Outcome {
                verified: false,
                inputs: vec![file.to_path_buf()],
                verdicts: json!({
                    "verdict": "non_generic",
                    "witness": scalars_json(&witness),
                    "witness_dims": dims,
                }),
            })
        }
        GenericityVerdict::Generic { order, vacuous } => {
            let tc = tangent_cone(&fields, &p, &samples).map_err(msg)?;
            let cone_file = AlgebraFile::from_algebra(&tc.cone);
            Ok(Outcome {
                verified: true,
                inputs: vec![file.to_path_buf()],
                verdicts: json!({
                    "verdict": "generic",
                    "order": order,
                    "vacuous": vacuous,
                    "dims": tc.filtration.dims,
                    "floor": tc.filtration.floor,
                    "frame_words": tc.frame.words,
                    "cone": serde_json::to_value(cone_file).map_err(io::IoError::from)?,
                }),
            })
        }
    }
}

fn spectrum_verify(
    map: &Path,
    algebra: Option<&Path>,
    theorem: Theorem,
) -> Result<Outcome, CliError> {
    let (m, map_field) = io::read_matrix(map)?;
    let g = algebra.map(io::read_algebra).transpose()?;
    if let Some(g) = &g {
        // Reject Q(√d) / Q(√d') mismatches up front.
        g.algebra.field().join(map_field).map_err(msg)?;
        if g.dim() != m.rows {
            return Err(CliError::Message(format!(
                "algebra dimension {} does not match map dimension {}",
                g.dim(),
                m.rows
            )));
        }
    }
    let mut inputs = vec![map.to_path_buf()];
    if let Some(a) = algebra {
        inputs.push(a.to_path_buf());
    }
    let need_algebra = || {
        g.as_ref()
            .ok_or_else(|| CliError::Message("this theorem needs --algebra".into()))
    };
    let (verified, verdicts) = match theorem {
        Theorem::Arith => {
            let v = verify_arithmeticity(&m, need_algebra()?, EXACT_TOL).map_err(msg)?;
            (
                v.holds,
                json!({
                    "theorem": "arith",
                    "holds": v.holds,
                    "lambda": v.lambda,
                    "expected": v.expected,
                    "max_deviation": v.max_deviation,
                }),
            )
        }
        Theorem::Subadd => {
            let levels = layer_exponents(&m, need_algebra()?).map_err(msg)?;
            match verify_subadditivity(&levels, EXACT_TOL) {
                SubadditivityVerdict::Holds => (
                    true,
                    json!({"theorem": "subadd", "holds": true, "levels": levels}),
                ),
                SubadditivityVerdict::Violation { level, index } => (
                    false,
                    json!({
                        "theorem": "subadd", "holds": false,
                        "violation": {"level": level, "index": index},
                        "levels": levels,
                    }),
                ),
            }
        }
        Theorem::Heis => {
            let exponents = lyapunov_spectrum(&m).map_err(msg)?.expanded();
            match verify_heisenberg_additivity(&exponents, 1e-10).map_err(msg)? {
                HeisenbergAdditivity::Holds { n } => (
                    true,
                    json!({"theorem": "heis", "holds": true, "n": n, "exponents": exponents}),
                ),
                HeisenbergAdditivity::Fails { deviation } => (
                    false,
                    json!({
                        "theorem": "heis", "holds": false,
                        "deviation": deviation, "exponents": exponents,
                    }),
                ),
            }
        }
    };
    Ok(Outcome {
        verified,
        inputs,
        verdicts,
    })
}

fn anosov_build(
    example: Option<&str>,
    algebra: Option<&Path>,
    lambda: Option<&str>,
    sqrt: Option<u64>,
) -> Result<Outcome, CliError> {
    let mut inputs = Vec::new();
    let built = match (example, algebra) {
        (Some("smale"), None) => Ok(build_smale_system()),
        (Some(other), None) => {
            return Err(CliError::Message(format!("unknown example {other:?}")))
        }
        (None, Some(path)) => {
            let factor = io::read_algebra(path)?;
            inputs.push(path.to_path_buf());
            let d = sqrt.ok_or_else(|| CliError::Message("--sqrt is required".into()))?;
            let field = FieldSpec::Sqrt { sqrt: d }.to_field()?;
            let lam = Scalar::parse(lambda.unwrap(), field).map_err(msg)?;
            build_product_anosov(&factor, &lam)
        }
        _ => {
            return Err(CliError::Message(
                "use either --example or --algebra/--lambda/--sqrt".into(),
            ))
        }
    };
    match built {
        Ok(sys) => {
            let unstable: Vec<f64> = lyapunov_spectrum(&sys.map)
                .map_err(msg)?
                .expanded()
                .into_iter()
                .filter(|v| *v > 0.0)
                .collect();
            let file = SystemFile::from_system(&sys);
            Ok(Outcome {
                verified: true,
                inputs,
                verdicts: json!({
                    "certificates": {
                        "graded_automorphism": true,
                        "integral_lattice": true,
                        "no_unit_modulus_eigenvalue": true,
                    },
                    "unstable_exponents": unstable,
                    "system": serde_json::to_value(file).map_err(io::IoError::from)?,
                }),
            })
        }
        // Certificate failures are mathematical refutations (exit 1).
        Err(e @ (NilError::NonIntegral { .. } | NilError::Certificate(_))) => Ok(Outcome {
            verified: false,
            inputs,
            verdicts: json!({"rejected": e.to_string()}),
        }),
        Err(e) => Err(msg(e)),
    }
}

fn lyapunov_estimate(
    system: &Path,
    eps: f64,
    iters: usize,
    seed: u64,
) -> Result<Outcome, CliError> {
    use rand::{Rng, SeedableRng};
    let sys = io::read_system(system)?;
    let dim = sys.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
    let estimate = if eps == 0.0 {
        let a = sys.map_f64().clone();
        let map = move |x: &[f64]| {
            (0..x.len())
                .map(|i| (0..x.len()).map(|j| a[(i, j)] * x[j]).sum())
                .collect::<Vec<f64>>()
        };
        let a2 = sys.map_f64().clone();
        let dmap = move |_: &[f64]| a2.clone();
        qr_lyapunov_estimate(&sys, &map, &dmap, &x0, iters, seed)
    } else {
        let p = make_periodic_perturbation(&sys, eps, seed).map_err(msg)?;
        let p2 = p.clone();
        let map = move |x: &[f64]| p.map(x);
        let dmap = move |x: &[f64]| p2.dmap(x);
        qr_lyapunov_estimate(&sys, &map, &dmap, &x0, iters, seed)
    }
    .map_err(msg)?;
    // Deviation table against the exact spectrum of the automorphism.
    let exact = lyapunov_spectrum(&sys.map).map_err(msg)?.expanded();
    let estimated = estimate.expanded();
    let deviations: Vec<f64> = estimated
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let max_deviation = deviations.iter().cloned().fold(0.0f64, f64::max);
    Ok(Outcome {
        verified: true,
        inputs: vec![system.to_path_buf()],
        verdicts: json!({
            "estimate": spectrum_json(&estimate),
            "exact_exponents": exact,
            "deviation": deviations,
            "max_deviation": max_deviation,
            "eps": eps,
        }),
    })
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Algebra { cmd } => match cmd {
            AlgebraCmd::Check { file } => algebra_check(file),
            AlgebraCmd::Autos { file } => algebra_autos(file),
            AlgebraCmd::Asymmetry { file } => algebra_asymmetry(file, cli.seed),
        },
        Command::Cone { cmd } => match cmd {
            ConeCmd::Compute { file, point } => cone_compute(file, point),
        },
        Command::Spectrum { cmd } => match cmd {
            SpectrumCmd::Verify {
                map,
                algebra,
                theorem,
            } => spectrum_verify(map, algebra.as_deref(), *theorem),
        },
        Command::Anosov { cmd } => match cmd {
            AnosovCmd::Build {
                example,
                algebra,
                lambda,
                sqrt,
            } => anosov_build(
                example.as_deref(),
                algebra.as_deref(),
                lambda.as_deref(),
                *sqrt,
            ),
        },
        Command::Lyapunov { cmd } => match cmd {
            LyapunovCmd::Estimate {
                system,
                eps,
                iters,
            } => lyapunov_estimate(system, *eps, *iters, cli.seed),
        },
    }
}

fn main() {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match execute(&cli) {
        Ok(outcome) => {
            let mut inputs = BTreeMap::new();
            for path in &outcome.inputs {
                match digest_file(path) {
                    Ok(d) => {
                        inputs.insert(path.display().to_string(), d);
                    }
                    Err(e) => {
                        eprintln!("error: cannot digest {}: {e}", path.display());
                        std::process::exit(2);
                    }
                }
            }
            let wall = start.elapsed().as_secs_f64() * 1e3;
            let report = RunReport::new(command, inputs, outcome.verdicts, wall);
            let rendered = match cli.format {
                Format::Json => report.to_json(),
                Format::Table => report.render_table(),
            };
            let written = match &cli.out {
                Some(path) => std::fs::write(path, rendered),
                None => {
                    print!("{rendered}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                std::process::exit(2);
            }
            std::process::exit(if outcome.verified { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
