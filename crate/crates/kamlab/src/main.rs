//! Command-line front end.
//!
//! Exit codes: 0 success; 2 expected negative (hypothesis not satisfied or
//! boundary case); 3 verification / numerical failure; 4 usage or config
//! error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use kamlab::aubry::{aubry_estimate, classify_aubry, AubryMode};
use kamlab::critical::{alpha, alpha_branch, alpha_lo};
use kamlab::hyper::{analyze_fixed_point, analyze_monodromy, find_fixed_points};
use kamlab::io::{read_csv_column, write_grid_csv, write_json, RunConfig};
use kamlab::smooth::{smooth_subsolution, SmoothOptions};
use kamlab::subsol::{strict_subsolution, verify_subsolution};
use kamlab::weakkam::{backward_curve, weak_kam_solve, SolveOptions};
use kamlab::{GridField, HamiltonianModel, KamError, Tolerances};

#[derive(Parser)]
#[command(
    name = "kamlab",
    version,
    about = "Weak KAM laboratory on the circle: critical values, viscosity \
             solutions, Aubry sets, and certified smooth sub-solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Model description file (key=value format, see README)
    #[arg(long, conflicts_with = "family")]
    model: Option<PathBuf>,
    /// Built-in family: `pendulum` or `mechanical` (V = cos 2 pi x)
    #[arg(long)]
    family: Option<String>,
    /// Momentum shift P (pendulum family)
    #[arg(long = "P", default_value_t = 0.0, allow_hyphen_values = true)]
    shift: f64,
}

impl ModelArgs {
    fn resolve(&self) -> Result<(HamiltonianModel, String), KamError> {
        if let Some(path) = &self.model {
            return Ok((HamiltonianModel::load(path)?, path.display().to_string()));
        }
        match self.family.as_deref() {
            Some("pendulum") => Ok((
                HamiltonianModel::pendulum(self.shift),
                format!("pendulum P={}", self.shift),
            )),
            Some("mechanical") => {
                let v = kamlab::series::TrigSeries::from_terms(&[(1, 1.0)], &[]);
                Ok((HamiltonianModel::mechanical(v), "mechanical V=cos(2 pi x)".into()))
            }
            Some(other) => Err(KamError::Config(format!("unknown family `{other}`"))),
            None => Err(KamError::Config(
                "provide --model <file> or --family <name>".into(),
            )),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Prefix for CSV/JSON artifacts; nothing is written when absent
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical value alpha(H)
    Alpha {
        #[command(flatten)]
        model: ModelArgs,
        /// branch | lo | both
        #[arg(long, default_value = "branch")]
        method: String,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
    },
    /// Weak KAM (viscosity) solution by Lax-Oleinik iteration
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Level c; defaults to the computed critical value
        #[arg(long, allow_hyphen_values = true)]
        level: Option<f64>,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Max-margin strict sub-solution certificate
    Subsolution {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        level: Option<f64>,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Projected Aubry set estimate with classification
    Aubry {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fixed-point spectra, or a monodromy matrix verdict from a file
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        /// Monodromy input: whitespace-separated text, first token the
        /// dimension 2n, then the matrix row-major, then Y, then dH
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Backward calibrated curve from a point
    Curve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Certified smooth critical sub-solution (full pipeline)
    Smooth {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify a sub-solution candidate from a CSV field (columns x,u)
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        field: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        level: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful exits.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(4);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src: &dyn std::error::Error = &e;
            while let Some(next) = src.source() {
                eprintln!("  caused by: {next}");
                src = next;
            }
            match e.root() {
                KamError::HypothesisNotSatisfied { .. } | KamError::BoundaryCase => {
                    ExitCode::from(2)
                }
                KamError::Config(_) | KamError::Io(_) => ExitCode::from(4),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn config(command: &str, model: &str, n: usize, h: f64, out: &Option<String>) -> RunConfig {
    RunConfig {
        command: command.to_string(),
        model: model.to_string(),
        n,
        h,
        tolerances: Tolerances::default(),
        output_prefix: out.clone(),
    }
}

fn run(command: Command) -> Result<(), KamError> {
    let tol = Tolerances::default();
    match command {
        Command::Alpha { model, method, n, h } => {
            let (m, _) = model.resolve()?;
            let opts = SolveOptions {
                n,
                h,
                ..SolveOptions::default()
            };
            let est = match method.as_str() {
                "branch" => alpha_branch(&m)?,
                "lo" => alpha_lo(&m, &opts)?,
                "both" => alpha(&m, &opts)?,
                other => return Err(KamError::Config(format!("unknown method `{other}`"))),
            };
            println!(
                "alpha={:.10} method={} err={:.3e}",
                est.value, est.method, est.error_bound
            );
            Ok(())
        }
        Command::Solve {
            model,
            level,
            n,
            h,
            output,
        } => {
            let (m, name) = model.resolve()?;
            let c = match level {
                Some(c) => c,
                None => alpha_branch(&m)?.value,
            };
            let opts = SolveOptions {
                n,
                h,
                ..SolveOptions::default()
            };
            let sol = weak_kam_solve(&m, c, &opts)?;
            println!(
                "solved c={:.10} residual={:.3e} drift={:.3e} sweeps={}",
                c, sol.residual, sol.drift, sol.iterations
            );
            if let Some(prefix) = &output.out {
                let du = sol.u.gradient_central();
                write_grid_csv(
                    Path::new(&format!("{prefix}.csv")),
                    &["u", "du"],
                    &[&sol.u, &du],
                )?;
                #[derive(serde::Serialize)]
                struct Summary {
                    c: f64,
                    residual: f64,
                    drift: f64,
                    drift_err: f64,
                    iterations: usize,
                    converged: bool,
                }
                write_json(
                    Path::new(&format!("{prefix}.json")),
                    &config("solve", &name, n, h, &output.out),
                    &Summary {
                        c,
                        residual: sol.residual,
                        drift: sol.drift,
                        drift_err: sol.drift_err,
                        iterations: sol.iterations,
                        converged: sol.converged,
                    },
                )?;
            }
            Ok(())
        }
        Command::Subsolution {
            model,
            level,
            n,
            output,
        } => {
            let (m, name) = model.resolve()?;
            let c = match level {
                Some(c) => c,
                None => alpha_branch(&m)?.value,
            };
            let cert = strict_subsolution(&m, c, n, &tol)?;
            println!(
                "subsolution level={:.10} min_margin={:.3e} boundary={}",
                c,
                cert.min_margin,
                cert.boundary.is_some()
            );
            if let Some(prefix) = &output.out {
                write_grid_csv(
                    Path::new(&format!("{prefix}.csv")),
                    &["u", "q", "delta"],
                    &[&cert.u, &cert.q, &cert.delta],
                )?;
                #[derive(serde::Serialize)]
                struct Summary {
                    level: f64,
                    min_margin: f64,
                    boundary: bool,
                    lambda: Option<f64>,
                    degenerate_nodes: usize,
                }
                write_json(
                    Path::new(&format!("{prefix}.json")),
                    &config("subsolution", &name, n, 0.0, &output.out),
                    &Summary {
                        level: c,
                        min_margin: cert.min_margin,
                        boundary: cert.boundary.is_some(),
                        lambda: cert.lambda,
                        degenerate_nodes: cert.degenerate_nodes.len(),
                    },
                )?;
            }
            Ok(())
        }
        Command::Aubry { model, n, output } => {
            let (m, name) = model.resolve()?;
            let a = alpha_branch(&m)?.value;
            let report = classify_aubry(&m, aubry_estimate(&m, a, n, &tol)?, &tol);
            #[derive(serde::Serialize)]
            struct PointOut {
                x: f64,
                p: f64,
                class: String,
                eigenvalues: Option<Vec<(f64, f64)>>,
            }
            #[derive(serde::Serialize)]
            struct ReportOut {
                mode: String,
                level: f64,
                points: Vec<PointOut>,
                hypothesis_satisfied: Option<bool>,
                note: Option<String>,
            }
            let out = ReportOut {
                mode: match report.mode {
                    AubryMode::FinitePoints => "finite-points".into(),
                    AubryMode::FullCircle => "full-circle".into(),
                },
                level: report.level,
                points: report
                    .points
                    .iter()
                    .map(|p| PointOut {
                        x: p.x,
                        p: p.p,
                        class: format!("{:?}", p.class),
                        eigenvalues: p.analysis.as_ref().map(|a| {
                            a.eigenvalues.iter().map(|l| (l.re, l.im)).collect()
                        }),
                    })
                    .collect(),
                hypothesis_satisfied: report.hypothesis_satisfied,
                note: report.note.clone(),
            };
            println!(
                "aubry mode={} points={} hypothesis_satisfied={:?}",
                out.mode,
                out.points.len(),
                out.hypothesis_satisfied
            );
            if let Some(prefix) = &output.out {
                write_json(
                    Path::new(&format!("{prefix}.json")),
                    &config("aubry", &name, n, 0.0, &output.out),
                    &out,
                )?;
            }
            Ok(())
        }
        Command::Analyze {
            model,
            matrix,
            output,
        } => {
            if let Some(path) = matrix {
                let (mat, y, dh) = read_monodromy_file(&path)?;
                let a = analyze_monodromy(&mat, &y, &dh, &tol)?;
                println!(
                    "monodromy dim={} unit_multiplicity={} hyperbolic={}",
                    a.dim, a.unit_multiplicity, a.hyperbolic
                );
                if let Some(prefix) = &output.out {
                    #[derive(serde::Serialize)]
                    struct Summary {
                        dim: usize,
                        eigenvalues: Vec<(f64, f64)>,
                        unit_multiplicity: usize,
                        hyperbolic: bool,
                        symplectic_residual: f64,
                        y_residual: f64,
                        dh_residual: f64,
                        ker_residual: f64,
                        second_principal_cosine: f64,
                    }
                    write_json(
                        Path::new(&format!("{prefix}.json")),
                        &config("analyze", &path.display().to_string(), 0, 0.0, &output.out),
                        &Summary {
                            dim: a.dim,
                            eigenvalues: a.eigenvalues.iter().map(|l| (l.re, l.im)).collect(),
                            unit_multiplicity: a.unit_multiplicity,
                            hyperbolic: a.hyperbolic,
                            symplectic_residual: a.symplectic_residual,
                            y_residual: a.y_residual,
                            dh_residual: a.dh_residual,
                            ker_residual: a.ker_residual,
                            second_principal_cosine: a.second_principal_cosine,
                        },
                    )?;
                }
                return Ok(());
            }
            let (m, _) = model.resolve()?;
            let fps = find_fixed_points(&m);
            if fps.is_empty() {
                println!("fixed-points none (degenerate continuum or none found)");
                return Ok(());
            }
            for fp in fps {
                let a = analyze_fixed_point(&m, fp, &tol);
                let eig: Vec<String> = a
                    .eigenvalues
                    .iter()
                    .map(|l| format!("{:+.6}{:+.6}i", l.re, l.im))
                    .collect();
                println!(
                    "fixed-point x={:.10} p={:.10} hyperbolic={} eigenvalues=[{}]",
                    fp.x,
                    fp.p,
                    a.hyperbolic,
                    eig.join(", ")
                );
            }
            Ok(())
        }
        Command::Curve {
            model,
            x,
            duration,
            n,
            h,
            output,
        } => {
            let (m, name) = model.resolve()?;
            let c = alpha_branch(&m)?.value;
            let opts = SolveOptions {
                n,
                h,
                ..SolveOptions::default()
            };
            let sol = weak_kam_solve(&m, c, &opts)?;
            let curve = backward_curve(&m, &sol, x, duration)?;
            println!(
                "curve from x={:.6} duration={:.3} end={:.10}",
                x,
                curve.duration(),
                curve.xs[0]
            );
            if let Some(prefix) = &output.out {
                let ts: Vec<f64> = (0..curve.xs.len())
                    .map(|i| curve.t0 + i as f64 * curve.h)
                    .collect();
                kamlab::io::write_csv(
                    Path::new(&format!("{prefix}.csv")),
                    "t,x",
                    &[&ts, &curve.xs],
                )?;
                let _ = name;
            }
            Ok(())
        }
        Command::Smooth { model, n, output } => {
            let (m, name) = model.resolve()?;
            let opts = SmoothOptions {
                n,
                ..SmoothOptions::default()
            };
            let r = smooth_subsolution(&m, &opts, &tol)?;
            println!(
                "smooth level={:.10} eta_min={:.3e} strictness_floor={:.3e} shrinks={}",
                r.level, r.eta_min, r.strictness_floor, r.trace.shrink_count
            );
            if let Some(prefix) = &output.out {
                write_grid_csv(
                    Path::new(&format!("{prefix}.csv")),
                    &["w", "dw", "eta"],
                    &[&r.w, &r.dw, &r.eta],
                )?;
                #[derive(serde::Serialize)]
                struct Summary<'a> {
                    level: f64,
                    eta_min: f64,
                    strictness_floor: f64,
                    eta_at_aubry: f64,
                    aubry_points: &'a [f64],
                    smoothness: &'a [f64],
                    trace: &'a kamlab::smooth::PipelineTrace,
                }
                write_json(
                    Path::new(&format!("{prefix}.json")),
                    &config("smooth", &name, n, 0.0, &output.out),
                    &Summary {
                        level: r.level,
                        eta_min: r.eta_min,
                        strictness_floor: r.strictness_floor,
                        eta_at_aubry: r.eta_at_aubry,
                        aubry_points: &r.aubry_points,
                        smoothness: &r.smoothness,
                        trace: &r.trace,
                    },
                )?;
            }
            Ok(())
        }
        Command::Verify {
            model,
            field,
            level,
        } => {
            let (m, _) = model.resolve()?;
            let values = read_csv_column(&field, 1)?;
            if values.is_empty() || !values.len().is_power_of_two() {
                return Err(KamError::Config(format!(
                    "field column must have a power-of-two length, got {}",
                    values.len()
                )));
            }
            let u = GridField::new(values);
            let cert = verify_subsolution(&m, &u, level, &tol)?;
            println!(
                "verified level={:.10} min_margin={:.3e}",
                level, cert.min_margin
            );
            Ok(())
        }
    }
}

type MonodromyInput = (DMatrix<f64>, DVector<f64>, DVector<f64>);

fn read_monodromy_file(path: &Path) -> Result<MonodromyInput, KamError> {
    let text = std::fs::read_to_string(path)?;
    let mut nums = Vec::new();
    for tok in text.split_whitespace() {
        nums.push(tok.parse::<f64>().map_err(|e| {
            KamError::Config(format!("{}: bad number `{tok}`: {e}", path.display()))
        })?);
    }
    let dim = nums.first().copied().unwrap_or(0.0) as usize;
    let need = 1 + dim * dim + 2 * dim;
    if dim == 0 || nums.len() != need {
        return Err(KamError::Config(format!(
            "{}: expected dimension then {} values, got {}",
            path.display(),
            need - 1,
            nums.len().saturating_sub(1)
        )));
    }
    let m = DMatrix::from_row_slice(dim, dim, &nums[1..1 + dim * dim]);
    let y = DVector::from_row_slice(&nums[1 + dim * dim..1 + dim * dim + dim]);
    let dh = DVector::from_row_slice(&nums[1 + dim * dim + dim..]);
    Ok((m, y, dh))
}
