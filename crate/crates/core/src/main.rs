use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heis_triod::experiments::builtin_experiment;
use heis_triod::geodesics::geodesic_between;
use heis_triod::heis::{horizontal_lift, HPoint, LiftAnchor};
use heis_triod::output::{read_planar_csv, write_curve_csv};
use heis_triod::runner::{exit_code, load_config, run_experiment, Overrides};
use heis_triod::verify::{all_pass, verify_experiment};
use heis_triod::Error;

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 6;

#[derive(Parser)]
#[command(
    name = "heis-triod",
    version,
    about = "Curve shortening flow of horizontal triods in the Heisenberg group"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in experiment or a config file.
    Run(RunArgs),
    /// Sample the length minimiser between two points.
    Geodesic {
        #[arg(long, value_parser = parse_point)]
        from: HPoint,
        #[arg(long, value_parser = parse_point)]
        to: HPoint,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Lift a planar polyline (CSV with x,y columns) to a horizontal curve.
    Lift {
        #[arg(long = "in")]
        input: PathBuf,
        /// `start:z` or `end:z`
        #[arg(long, value_parser = parse_anchor)]
        anchor: LiftAnchor,
    },
    /// Run the reference checks for one experiment.
    Verify {
        #[arg(long)]
        experiment: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    experiment: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "J")]
    segments: Option<usize>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    eps_sing: Option<f64>,
    #[arg(long)]
    eps_steady: Option<f64>,
    /// Output directory; defaults to `$HEIS_TRIOD_OUT/<name>` or `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: bool,
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
}

fn parse_point(s: &str) -> Result<HPoint, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(HPoint::new(*x, *y, *z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn parse_anchor(s: &str) -> Result<LiftAnchor, String> {
    let (side, z) = s
        .split_once(':')
        .ok_or_else(|| format!("expected start:z or end:z, got {s:?}"))?;
    let z: f64 = z.trim().parse().map_err(|e| format!("{z:?}: {e}"))?;
    match side {
        "start" => Ok(LiftAnchor::AtStart(z)),
        "end" => Ok(LiftAnchor::AtEnd(z)),
        _ => Err(format!("anchor side must be start or end, got {side:?}")),
    }
}

fn default_out(name: &str) -> PathBuf {
    let root = std::env::var_os("HEIS_TRIOD_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));
    root.join(name)
}

fn run(args: RunArgs) -> Result<u8, Error> {
    let mut cfg = match (&args.experiment, &args.config) {
        (Some(id), None) => builtin_experiment(*id)?,
        (None, Some(path)) => load_config(path)?,
        _ => return Err(Error::Invalid("give exactly one of --experiment and --config".into())),
    };
    Overrides {
        segments: args.segments,
        dt: args.dt,
        t_end: args.t_end,
        eps_sing: args.eps_sing,
        eps_steady: args.eps_steady,
        svg: args.svg,
        snapshots: args.snapshots,
    }
    .apply(&mut cfg)?;
    let dir = args.out.unwrap_or_else(|| default_out(&cfg.name));
    let r = run_experiment(&cfg, Some(&dir))?;
    let o = &r.outcome;
    let l = o.final_state.lengths();
    println!("{}: {:?} at t = {}", cfg.name, o.status, o.final_state.time);
    println!(
        "lengths {:.6} {:.6} {:.6} (total {:.6})",
        l[0],
        l[1],
        l[2],
        l.iter().sum::<f64>()
    );
    if let Some(a) = o.vanished_curve {
        println!("curve {a} shrank below {:.3e}", o.eps_sing);
    }
    if let Some((t, e)) = &o.failure {
        println!("stopped at t = {t}: {e}");
    }
    for f in &r.files {
        println!("wrote {}", f.display());
    }
    Ok(exit_code(o.status) as u8)
}

fn geodesic(from: HPoint, to: HPoint, samples: usize) -> Result<u8, Error> {
    let (curve, spec) = geodesic_between(from, to, samples)?;
    eprintln!(
        "{:?}: lambda = {}, length = {}, alpha0 = {}",
        spec.kind, spec.lambda, spec.s_f, spec.alpha0
    );
    write_curve_csv(&curve, std::io::stdout().lock())?;
    Ok(0)
}

fn lift(input: &Path, anchor: LiftAnchor) -> Result<u8, Error> {
    let file = std::fs::File::open(input).map_err(|e| Error::Io(format!("{}: {e}", input.display())))?;
    let curve = read_planar_csv(file)?;
    write_curve_csv(&horizontal_lift(&curve, anchor), std::io::stdout().lock())?;
    Ok(0)
}

fn verify(id: usize) -> Result<u8, Error> {
    let checks = verify_experiment(id)?;
    for c in &checks {
        println!("{c}");
    }
    Ok(if all_pass(&checks) { 0 } else { EXIT_VERIFY_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Geodesic { from, to, samples } => geodesic(from, to, samples),
        Command::Lift { input, anchor } => lift(&input, anchor),
        Command::Verify { experiment } => verify(experiment),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Invalid(_) => EXIT_USAGE,
                _ => EXIT_OTHER,
            })
        }
    }
}
