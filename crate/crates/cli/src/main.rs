mod args;
mod sweep;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ltlab::bloch::{lowest_bands, riesz_mean, PotentialField};
use ltlab::constants::{crossing_exponent, one_bound_state_constant, semiclassical_constant};
use ltlab::elliptic::{lame_report, LameModel};
use ltlab::format::sci;
use ltlab::scf::{critical_gamma, optimize_point, ScfConfig, CSV_HEADER};
use ltlab::{Lattice, LatticeKind};

use args::{expand_config, grid_arg, Grid, ProblemArgs};
use sweep::{run_sweep, write_atomic, SweepOptions, SweepPlan, SweepStatus};

const LAME_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "lt-lab", version, about = "Periodic Lieb-Thirring optimization laboratory", args_override_self = true)]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Semiclassical and one-bound-state constants as CSV
    Constants {
        /// One or more exponents (list or start:stop:step)
        #[arg(long, value_parser = grid_arg)]
        gamma: Option<Grid>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Also report the exponent where the two constants cross
        #[arg(long)]
        crossing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lamé potential report rows; fails if the ratio drifts from 3/16
    Lame {
        /// Elliptic modulus (list or start:stop:step)
        #[arg(long, value_parser = grid_arg)]
        k: Option<Grid>,
        /// Elliptic parameter m = k² instead of the modulus
        #[arg(long, value_parser = grid_arg, conflicts_with = "k")]
        m: Option<Grid>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bloch bands of a potential
    Bands {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Potential JSON (a bare field or an optimize result)
        #[arg(long, conflicts_with_all = ["lame_k", "constant"])]
        potential: Option<PathBuf>,
        /// Rescaled Lamé potential of this modulus on the line lattice
        #[arg(long, conflicts_with = "constant")]
        lame_k: Option<f64>,
        /// Constant potential value
        #[arg(long, allow_hyphen_values = true)]
        constant: Option<f64>,
        /// Exponent of the reported Riesz mean
        #[arg(long, default_value_t = 1.5)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One self-consistent optimization
    Optimize {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        gamma: f64,
        /// Constraint level I
        #[arg(long)]
        norm: f64,
        #[arg(long, env = "LT_LAB_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Resumable parallel sweep over a (gamma, I) grid
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_parser = grid_arg)]
        gamma: Grid,
        /// Constraint levels I
        #[arg(long, value_parser = grid_arg)]
        norm: Grid,
        /// Start each I from the previous optimizer at the same gamma
        #[arg(long)]
        warm_start: bool,
        /// Skip points already recorded in the output directory
        #[arg(long)]
        resume: bool,
        /// Stop after this many new points
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
        #[arg(long)]
        quiet: bool,
        #[arg(long, env = "LT_LAB_OUT", default_value = ".")]
        out: PathBuf,
    },
    /// Exponent where the best periodic ratio meets the semiclassical constant
    CriticalGamma {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1.1650)]
        gamma_lo: f64,
        #[arg(long, default_value_t = 1.1660)]
        gamma_hi: f64,
        /// Search window for I (default: around the known maximizer of the lattice)
        #[arg(long)]
        norm_lo: Option<f64>,
        #[arg(long)]
        norm_hi: Option<f64>,
        #[arg(long, default_value_t = 2e-6)]
        gamma_tol: f64,
        #[arg(long, default_value_t = 0.5)]
        norm_tol: f64,
        #[arg(long, env = "LT_LAB_OUT", default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad input or a domain error.
    Usage(String),
    /// The computation ran but a check failed.
    Check(String),
}

impl From<ltlab::LtError> for Failure {
    fn from(e: ltlab::LtError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("{}: {e}", path.display()))
}

fn emit(text: &str, dir: Option<&Path>, name: &str) -> Result<(), Failure> {
    print!("{text}");
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(name);
        write_atomic(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

fn cmd_constants(gammas: Option<Grid>, dim: usize, crossing: bool, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = String::new();
    if let Some(Grid(gammas)) = gammas {
        text.push_str("gamma,d,L_sc,L_1,ratio\n");
        for g in gammas {
            let sc = semiclassical_constant(g, dim)?;
            let one = one_bound_state_constant(g, dim)?;
            let _ = writeln!(text, "{},{dim},{},{},{}", sci(g), sci(sc), sci(one), sci(one / sc));
        }
    }
    if crossing {
        text.push_str("d,gamma_crossing\n");
        let _ = writeln!(text, "{dim},{}", sci(crossing_exponent(dim)?));
    }
    if text.is_empty() {
        return Err(Failure::Usage("nothing to do: pass --gamma and/or --crossing".into()));
    }
    emit(&text, out, "constants.csv")
}

fn cmd_lame(k: Option<Grid>, m: Option<Grid>, out: Option<&Path>) -> Result<(), Failure> {
    let moduli: Vec<f64> = match (k, m) {
        (Some(Grid(k)), _) => k,
        (None, Some(Grid(m))) => m.into_iter().map(|m| if m >= 0.0 { m.sqrt() } else { f64::NAN }).collect(),
        (None, None) => return Err(Failure::Usage("pass --k or --m".into())),
    };
    let mut text = String::from("k,period,c,edge0,edge1,edge2,riesz_mean,potential_mean,ratio,deviation\n");
    let mut worst = 0.0f64;
    for k in moduli {
        let r = lame_report(k)?;
        worst = worst.max(r.deviation.abs());
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{},{},{}",
            sci(r.k),
            sci(r.period),
            sci(r.c),
            sci(r.band_edges[0]),
            sci(r.band_edges[1]),
            sci(r.band_edges[2]),
            sci(r.riesz_mean),
            sci(r.potential_mean),
            sci(r.ratio),
            sci(r.deviation)
        );
    }
    emit(&text, out, "lame.csv")?;
    if worst > LAME_TOLERANCE {
        return Err(Failure::Check(format!("ratio deviates from 3/16 by {worst:e}")));
    }
    Ok(())
}

fn load_potential(path: &Path) -> Result<PotentialField, Failure> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let field = if v.get("potential").is_some() { v["potential"].to_string() } else { text };
    Ok(PotentialField::from_json(&field)?)
}

fn cmd_bands(
    problem: &ProblemArgs,
    potential: Option<&Path>,
    lame_k: Option<f64>,
    constant: Option<f64>,
    gamma: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let v = if let Some(path) = potential {
        load_potential(path)?
    } else if let Some(k) = lame_k {
        let model = LameModel::new(k)?;
        let n_c = problem.nc.unwrap_or(64);
        PotentialField::from_fn(&Lattice::new(LatticeKind::Line), n_c, |y| model.rescaled_potential(y[0]))?
    } else if let Some(c) = constant {
        let kind = problem.lattice.ok_or(Failure::Usage("--lattice is required with --constant".into()))?;
        PotentialField::constant(&Lattice::new(kind), problem.nc.unwrap_or(16), c)?
    } else {
        return Err(Failure::Usage("pass --potential, --lame-k or --constant".into()));
    };
    let count = problem.bands.unwrap_or(v.lattice().kind().default_bands() + 1);
    let n_b = problem.nb.unwrap_or(if v.lattice().dim() == 1 { 64 } else { 12 });
    let bands = lowest_bands(&v, count, n_b, problem.ecut, false)?;
    emit(&bands.to_csv(), out, "bands.csv")?;
    eprint!("riesz_mean(gamma={gamma}) = {}; ranges:", sci(riesz_mean(&bands, gamma)));
    for n in 0..bands.band_count() {
        let (lo, hi) = bands.band_range(n);
        eprint!(" [{}, {}]", sci(lo), sci(hi));
    }
    eprintln!();
    Ok(())
}

fn cmd_optimize(cfg: &ScfConfig, out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let r = optimize_point(cfg)?;
    let json = out.join("result.json");
    write_atomic(&json, &r.to_json()).map_err(io_err(&json))?;
    let csv = out.join("result.csv");
    write_atomic(&csv, &format!("{CSV_HEADER}\n{}\n", r.csv_row())).map_err(io_err(&csv))?;
    let abs: Vec<f64> = r.potential.values().iter().map(|x| x.abs()).collect();
    let grid = out.join("potential_abs.csv");
    write_atomic(&grid, &r.potential.with_values(abs)?.to_csv()).map_err(io_err(&grid))?;
    println!("{CSV_HEADER}\n{}", r.csv_row());
    eprintln!(
        "residual {} after {} iterations; {} negative bands; gap {}",
        sci(r.residual),
        r.iterations,
        r.negative_bands,
        r.gap.map_or("none".into(), sci)
    );
    if !r.converged {
        return Err(Failure::Check(format!("not converged (residual {})", sci(r.residual))));
    }
    if r.constraint_defect >= 1e-10 {
        return Err(Failure::Check(format!("constraint defect {}", sci(r.constraint_defect))));
    }
    Ok(())
}

/// Maximizing `I` reported for each lattice at coarse resolution, used to seed windows.
fn default_window(kind: LatticeKind) -> (f64, f64) {
    let center: f64 = match kind {
        LatticeKind::Triangular => 28.7,
        LatticeKind::Square => 33.1,
        LatticeKind::Honeycomb => 77.2,
        LatticeKind::Line => 10.0,
    };
    (0.8 * center, 1.2 * center)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Constants { gamma, dim, crossing, out } => cmd_constants(gamma, dim, crossing, out.as_deref()),
        Command::Lame { k, m, out } => cmd_lame(k, m, out.as_deref()),
        Command::Bands { problem, potential, lame_k, constant, gamma, out } => {
            cmd_bands(&problem, potential.as_deref(), lame_k, constant, gamma, out.as_deref())
        }
        Command::Optimize { problem, gamma, norm, out } => {
            let cfg = problem.config(gamma, norm).map_err(Failure::Usage)?;
            cmd_optimize(&cfg, &out)
        }
        Command::Sweep { problem, gamma: Grid(gamma), norm: Grid(norm), warm_start, resume, stop_after, quiet, out } => {
            let base = problem.config(gamma[0], norm[0]).map_err(Failure::Usage)?;
            for &g in &gamma {
                ScfConfig { gamma: g, ..base.clone() }.validate()?;
            }
            for &i in &norm {
                ScfConfig { norm: i, ..base.clone() }.validate()?;
            }
            let plan = SweepPlan { base, gammas: gamma, norms: norm, warm_start };
            let opts = SweepOptions { out: out.clone(), resume, stop_after, quiet };
            match run_sweep(&plan, &opts).map_err(Failure::Usage)? {
                SweepStatus::Clean => {
                    eprintln!("wrote {}", out.join(sweep::SWEEP_CSV).display());
                    Ok(())
                }
                SweepStatus::Degraded => Err(Failure::Check("some points failed or did not converge".into())),
                SweepStatus::Interrupted => Err(Failure::Check("stopped early; rerun with --resume".into())),
            }
        }
        Command::CriticalGamma { problem, gamma_lo, gamma_hi, norm_lo, norm_hi, gamma_tol, norm_tol, out } => {
            let cfg = problem.config(0.5 * (gamma_lo + gamma_hi), 1.0).map_err(Failure::Usage)?;
            let (lo, hi) = default_window(cfg.lattice);
            let window = (norm_lo.unwrap_or(lo), norm_hi.unwrap_or(hi));
            let c = critical_gamma(&cfg, (gamma_lo, gamma_hi), window, gamma_tol, norm_tol)?;
            fs::create_dir_all(&out).map_err(io_err(&out))?;
            let mut probes = String::from("gamma,I,ratio_sc\n");
            for (g, i, r) in &c.probes {
                let _ = writeln!(probes, "{},{},{}", sci(*g), sci(*i), sci(*r));
            }
            let path = out.join("critical_gamma_probes.csv");
            write_atomic(&path, &probes).map_err(io_err(&path))?;
            println!("lattice,K,gamma_star,I_star,ratio_sc");
            println!("{},{},{},{},{}", cfg.lattice, cfg.bands, sci(c.gamma), sci(c.norm), sci(c.ratio));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
