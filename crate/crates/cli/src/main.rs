use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symmcal::io::{
    field_to_json, manifold_field_from_json, manifold_field_to_json, mask_to_json, read_field, read_mask, read_polygon,
    read_radial_grid,
};
use symmcal::manifold::{
    check_hardy_littlewood_m, check_level_sets_m, check_lp_contraction_m, check_lp_m, check_polya_szego_m,
    rearrange_field_m, rearrange_set_m, ManifoldField,
};
use symmcal::pde::{smallest_dirichlet_eigenvalue, solve_poisson};
use symmcal::perimeter::{check_planar_polygon, estimate_perimeter, PerimeterMethod};
use symmcal::rearrange::{rearrange_field, rearrange_mask};
use symmcal::report::write_csv;
use symmcal::samples::rng;
use symmcal::{run_suite, CheckResult, Error, Suite, SuiteConfig, VerificationReport};

#[derive(Parser)]
#[command(name = "symmcal", version, about = "Symmetric decreasing rearrangements and their inequalities on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rearrange a field (or, with --mask, a set) into its centered decreasing form.
    Rearrange {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat the input as a mask file.
        #[arg(long)]
        mask: bool,
    },
    /// Estimate the perimeter of a mask, or check a polygon file.
    Perimeter {
        #[arg(long = "in", required_unless_present = "polygon")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "minkowski")]
        method: PerimeterMethod,
        /// Radius or smoothing width: a length, or a cell count such as `4h`.
        #[arg(long)]
        delta: Option<Delta>,
        #[arg(long, conflicts_with = "input")]
        polygon: Option<PathBuf>,
    },
    /// Solve -Δu = f with zero Dirichlet data outside the domain.
    Poisson {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest Dirichlet eigenvalue of a domain.
    Eigen {
        #[arg(long)]
        omega: PathBuf,
        /// Where to write the normalized eigenfield.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rearrangement on a weighted radial manifold.
    Manifold {
        #[command(subcommand)]
        command: ManifoldCommand,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long)]
        suite: String,
        /// Dimension of the rearrangement suite.
        #[arg(long, alias = "n")]
        dim: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Subcommand)]
enum ManifoldCommand {
    /// Rearrange a field, or find the radius enclosing a volume.
    Rearrange {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long = "in", required_unless_present = "volume")]
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "input")]
        volume: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the rearrangement inequalities for a field (or random fields) on a grid.
    Verify {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        report: ReportArgs,
    },
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Multiplies every default tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug)]
enum Delta {
    Cells(f64),
    Length(f64),
}

impl FromStr for Delta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (num, cells) = match s.strip_suffix('h') {
            Some(n) => (n, true),
            None => (s, false),
        };
        let v: f64 = num.trim().parse().map_err(|_| format!("expected a length or a cell count like 4h, got '{s}'"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("delta must be positive, got '{s}'"));
        }
        Ok(if cells { Delta::Cells(v) } else { Delta::Length(v) })
    }
}

fn emit(text: &str, out: Option<&Path>) -> symmcal::Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n"))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_report(report: &VerificationReport, args: &ReportArgs) -> symmcal::Result<()> {
    match (args.format, &args.out) {
        (Format::Json, Some(p)) => report.write_json(p)?,
        (Format::Json, None) => println!("{}", report.to_json()?),
        (Format::Csv, Some(p)) => symmcal::report::emit_csv(report, p)?,
        (Format::Csv, None) => write_csv(report, std::io::stdout().lock())?,
    }
    let s = &report.summary;
    eprintln!(
        "{} checks: {} passed, {} failed ({} unjudged) in {:.1} s",
        s.total, s.passed, s.failed, s.unjudged, report.wall_time_seconds
    );
    for f in report.failures().take(20) {
        eprintln!("FAIL {} lhs={:e} rhs={:e} slack={:e} tol={:e}", f.name, f.lhs, f.rhs, f.slack, f.tol);
    }
    Ok(())
}

fn verdict(report: &VerificationReport) -> ExitCode {
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn manifold_checks(f: &ManifoldField, g: &ManifoldField) -> symmcal::Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for p in [1.0, 2.0, f64::INFINITY] {
        out.push(check_lp_m(f, p)?);
    }
    for k in 1..=5 {
        out.push(check_level_sets_m(f, f.max() * k as f64 / 6.0)?.with_name(format!("level_sets_m[{k}]")));
    }
    out.push(check_hardy_littlewood_m(f, g)?);
    for p in [1.0, 2.0] {
        out.push(check_lp_contraction_m(f, g, p)?);
    }
    out.push(check_polya_szego_m(f, 2.0)?);
    Ok(out)
}

fn run(cli: Cli) -> symmcal::Result<ExitCode> {
    match cli.command {
        Command::Rearrange { input, out, mask } => {
            let text = if mask {
                mask_to_json(&rearrange_mask(&read_mask(&input)?))?
            } else {
                field_to_json(&rearrange_field(&read_field(&input)?)?)?
            };
            emit(&text, out.as_deref())?;
        }
        Command::Perimeter { input, method, delta, polygon } => {
            if let Some(p) = polygon {
                let poly = read_polygon(&p)?;
                let c = check_planar_polygon(&poly);
                println!(
                    "{{\"length\":{},\"area\":{},\"deficit\":{},\"pass\":{}}}",
                    poly.perimeter(),
                    poly.signed_area(),
                    c.slack,
                    c.pass
                );
                return Ok(if c.pass { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
            let mask = read_mask(input.as_deref().expect("clap enforces --in"))?;
            let parameter = delta.map(|d| match d {
                Delta::Cells(k) => k * mask.grid().max_spacing(),
                Delta::Length(l) => l,
            });
            let e = estimate_perimeter(&mask, method, parameter)?;
            println!("{{\"method\":\"{}\",\"value\":{},\"parameter\":{}}}", e.method, e.value, e.parameter);
        }
        Command::Poisson { f, omega, out } => {
            let sol = solve_poisson(&read_field(&f)?, &read_mask(&omega)?)?;
            eprintln!("converged in {} iterations, residual {:e}", sol.iterations, sol.residual_norm);
            emit(&field_to_json(&sol.u)?, out.as_deref())?;
        }
        Command::Eigen { omega, out } => {
            let e = smallest_dirichlet_eigenvalue(&read_mask(&omega)?)?;
            println!("{{\"lambda1\":{},\"residual\":{}}}", e.lambda1, e.residual);
            if let Some(p) = out {
                emit(&field_to_json(&e.eigenfield)?, Some(&p))?;
            }
        }
        Command::Manifold { command: ManifoldCommand::Rearrange { grid, input, volume, out } } => {
            let grid = read_radial_grid(&grid)?;
            if let Some(v) = volume {
                let r = rearrange_set_m(v, &grid)?;
                emit(&format!("{{\"volume\":{v},\"r_star\":{r}}}"), out.as_deref())?;
            } else {
                let path = input.expect("clap enforces --in");
                let f = manifold_field_from_json(&std::fs::read_to_string(path)?, grid)?;
                emit(&manifold_field_to_json(&rearrange_field_m(&f)?)?, out.as_deref())?;
            }
        }
        Command::Manifold { command: ManifoldCommand::Verify { grid, input, trials, report } } => {
            if trials == 0 {
                return Err(Error::InvalidArgument("trial count must be at least 1".into()));
            }
            let start = Instant::now();
            let grid = read_radial_grid(&grid)?;
            let random = |seed: u64| {
                use rand::Rng;
                let mut r = rng(seed);
                let values = (0..grid.len()).map(|_| r.gen_range(0.0..1.0)).collect();
                ManifoldField::new(grid.clone(), values)
            };
            let mut results = Vec::new();
            let fields: Vec<(String, ManifoldField)> = match input {
                Some(p) => {
                    vec![("input".into(), manifold_field_from_json(&std::fs::read_to_string(p)?, grid.clone())?)]
                }
                None => (0..trials)
                    .map(|t| Ok((format!("random#{t:03}"), random(report.seed + t as u64)?)))
                    .collect::<symmcal::Result<_>>()?,
            };
            for (k, (label, f)) in fields.iter().enumerate() {
                let g = random(report.seed ^ 0xA5A5 ^ k as u64)?;
                for c in manifold_checks(f, &g)? {
                    let name = format!("manifold_file/{label}/{}", c.name);
                    results.push(c.with_name(name).with_seed(report.seed).with_tol_scale(report.tol_scale));
                }
            }
            let mut cfg = SuiteConfig::new(Suite::Manifold, report.seed);
            cfg.trials = Some(fields.len());
            cfg.tol_scale = report.tol_scale;
            cfg.validate()?;
            let r = VerificationReport::assemble(cfg, results, start.elapsed().as_secs_f64());
            emit_report(&r, &report)?;
            return Ok(verdict(&r));
        }
        Command::Verify { suite, dim, size, trials, report } => {
            let mut cfg = SuiteConfig::new(suite.parse()?, report.seed);
            cfg.dim = dim;
            cfg.size = size;
            cfg.trials = trials;
            cfg.tol_scale = report.tol_scale;
            cfg.out = report.out.as_ref().map(|p| p.display().to_string());
            let r = run_suite(&cfg)?;
            emit_report(&r, &report)?;
            return Ok(verdict(&r));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => {
            let _ = std::io::stdout().flush();
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
