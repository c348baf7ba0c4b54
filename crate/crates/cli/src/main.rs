//! `rankone`: exact landscape analysis of `‖x yᵀ − M‖₁` from the command line.

mod error;
mod input;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankone_core::classify::{classify_point, descent_direction, spurious_witness, theorem1_predicate, verify_descent};
use rankone_core::criticality::{is_critical_closed_form, is_critical_directional, is_critical_lp, CriticalityVerdict};
use rankone_core::landscape::{
    default_pool, fuzz_equivalence, grid_sample, run_descent, Axis, Coord, FloatPoint, FuzzConfig, GridFormat,
    GridSpec, StepSchedule, ZeroProfile,
};
use rankone_core::subdiff::{roots, step_alpha, step_beta, Interval, IntervalSet, StepFunction};
use rankone_core::{Instance, Point, Rational};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, EXIT_INTERNAL, EXIT_USAGE};
use crate::input::{load, parse_float_point, parse_ranges, resolve_point};

#[derive(Parser)]
#[command(name = "rankone", version, about = "Exact landscape analysis for rank-one l1 matrix factorization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lp,
    Dir,
    Closed,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Diminishing,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    NoZeros,
    Mixed,
    AllZeros,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a point is critical (exit 0 critical, 1 not, 2 deciders disagree).
    Critical {
        #[arg(long)]
        instance: String,
        /// `x=1,-1;y=1/2` or a JSON file with `x` and `y`; defaults to the point in the instance file.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
    },
    /// Classify a point as global minimum, spurious local minimum, saddle or not critical.
    Classify {
        #[arg(long)]
        instance: String,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Build and verify the descent direction at a saddle.
    Descend {
        #[arg(long)]
        instance: String,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Step to verify; defaults to the certified bound.
        #[arg(long)]
        t: Option<Rational>,
    },
    /// Print the step functions of both one-dimensional sections.
    Steps {
        #[arg(long)]
        instance: String,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Sample f on a grid over two or three coordinates.
    Sample {
        #[arg(long)]
        instance: String,
        /// Comma-separated coordinates such as `x1,x2` or `x1,x2,y1`.
        #[arg(long)]
        axes: String,
        /// `lo:hi` per axis, comma-separated; a single range applies to all axes.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long)]
        res: usize,
        /// Values of the fixed coordinates as `x=...;y=...`; defaults to zero.
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Run subgradient descent and classify the snapped endpoint.
    Simulate {
        #[arg(long)]
        instance: String,
        /// Start as `x=...;y=...`; drawn uniformly from [-5, 5] with the seed when absent.
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "diminishing")]
        schedule: ScheduleArg,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
    },
    /// Cross-check all deciders on random instances (exit 0 iff clean).
    Fuzz {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        mmax: usize,
        #[arg(long, default_value_t = 4)]
        nmax: usize,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, value_enum)]
        profile: Option<ProfileArg>,
    },
    /// Whether f has spurious local minima for the instance, with a witness.
    Theorem {
        #[arg(long)]
        instance: String,
    },
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json<T: Serialize>(value: &T) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("output serializes")));
}

fn critical(inst: &Instance, p: &Point, method: MethodArg) -> Result<i32, CliError> {
    let deciders: Vec<fn(&Instance, &Point) -> Result<CriticalityVerdict, rankone_core::AnalysisError>> = match method {
        MethodArg::Lp => vec![is_critical_lp],
        MethodArg::Dir => vec![is_critical_directional],
        MethodArg::Closed => vec![is_critical_closed_form],
        MethodArg::All => vec![is_critical_lp, is_critical_directional, is_critical_closed_form],
    };
    let verdicts = deciders.iter().map(|d| d(inst, p)).collect::<Result<Vec<_>, _>>()?;
    let first = verdicts[0].is_critical;
    let agree = verdicts.iter().all(|v| v.is_critical == first);
    if verdicts.len() == 1 {
        print_json(&verdicts[0]);
    } else {
        print_json(&json!({ "is_critical": agree.then_some(first), "agree": agree, "verdicts": verdicts }));
    }
    Ok(match (agree, first) {
        (false, _) => 2,
        (true, true) => 0,
        (true, false) => 1,
    })
}

fn interval_json(iv: &Interval) -> serde_json::Value {
    json!({ "lo": iv.lo, "hi": iv.hi })
}

fn step_json(sf: &StepFunction) -> serde_json::Value {
    let roots: IntervalSet = roots(sf);
    json!({
        "breakpoints": sf.breakpoints,
        "plateaus": sf.plateaus,
        "jumps": sf.jumps().iter().map(|(at, iv)| json!({ "at": at, "lo": iv.lo, "hi": iv.hi })).collect::<Vec<_>>(),
        "roots": roots.intervals().iter().map(interval_json).collect::<Vec<_>>(),
    })
}

fn sample(
    inst: &Instance,
    axes: &str,
    range: &str,
    res: usize,
    base: Option<&str>,
    format: FormatArg,
) -> Result<i32, CliError> {
    let coords = axes
        .split(',')
        .map(|a| a.trim().parse::<Coord>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ranges = parse_ranges(range)?;
    if ranges.len() == 1 {
        ranges = vec![ranges[0]; coords.len()];
    }
    if ranges.len() != coords.len() {
        return Err(CliError::Usage(format!("{} ranges for {} axes", ranges.len(), coords.len())));
    }
    let base = match base {
        Some(spec) => parse_float_point(spec)?,
        None => FloatPoint::new(vec![0.0; inst.m()], vec![0.0; inst.n()]),
    };
    let spec = GridSpec {
        axes: coords.into_iter().zip(ranges).map(|(coord, (lo, hi))| Axis { coord, lo, hi }).collect(),
        base,
        resolution: res,
    };
    let grid = grid_sample(inst, &spec)?;
    let format = match format {
        FormatArg::Csv => GridFormat::Csv,
        FormatArg::Json => GridFormat::Json,
    };
    let mut text = grid.render(format);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    emit(&text);
    Ok(0)
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Critical { instance, point, method } => {
            let (inst, stored) = load(&instance)?;
            let p = resolve_point(point.as_deref(), stored)?;
            critical(&inst, &p, method)
        }
        Command::Classify { instance, point } => {
            let (inst, stored) = load(&instance)?;
            let p = resolve_point(point.as_deref(), stored)?;
            print_json(&classify_point(&inst, &p)?);
            Ok(0)
        }
        Command::Descend { instance, point, t } => {
            let (inst, stored) = load(&instance)?;
            let p = resolve_point(point.as_deref(), stored)?;
            let plan = descent_direction(&inst, &p)?;
            let t = t.unwrap_or_else(|| plan.valid_step_bound.clone());
            let verified = verify_descent(&inst, &p, &plan, &t)?;
            print_json(&json!({ "plan": plan, "t": t, "verified": verified }));
            Ok(if verified { 0 } else { EXIT_INTERNAL })
        }
        Command::Steps { instance, point } => {
            let (inst, stored) = load(&instance)?;
            let p = resolve_point(point.as_deref(), stored)?;
            let alpha = step_alpha(&inst, &p)?;
            let beta = step_beta(&inst, &p)?;
            print_json(&json!({ "alpha": step_json(&alpha), "beta": step_json(&beta) }));
            Ok(0)
        }
        Command::Sample { instance, axes, range, res, base, format } => {
            let (inst, _) = load(&instance)?;
            sample(&inst, &axes, &range, res, base.as_deref(), format)
        }
        Command::Simulate { instance, init, iters, seed, schedule, c } => {
            let (inst, _) = load(&instance)?;
            let init = match init {
                Some(spec) => parse_float_point(&spec)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut draw = |len: usize| (0..len).map(|_| rng.gen_range(-5.0..=5.0)).collect::<Vec<f64>>();
                    let x = draw(inst.m());
                    FloatPoint::new(x, draw(inst.n()))
                }
            };
            let schedule = match schedule {
                ScheduleArg::Diminishing => StepSchedule::Diminishing { c },
                ScheduleArg::Constant => StepSchedule::Constant { c },
            };
            print_json(&run_descent(&inst, &init, schedule, iters)?);
            Ok(0)
        }
        Command::Fuzz { count, seed, mmax, nmax, points, profile } => {
            if mmax > 4 || nmax > 4 {
                return Err(CliError::Usage("dimension bounds above 4 are outside the supported range".into()));
            }
            let config = FuzzConfig {
                num_instances: count,
                m_max: mmax,
                n_max: nmax,
                value_pool: default_pool(),
                points_per_instance: points,
                seed,
                profile: profile.map(|p| match p {
                    ProfileArg::NoZeros => ZeroProfile::NoZeros,
                    ProfileArg::Mixed => ZeroProfile::MixedZeros,
                    ProfileArg::AllZeros => ZeroProfile::AllZeros,
                }),
                ..FuzzConfig::default()
            };
            let report = fuzz_equivalence(&config)?;
            print_json(&report);
            Ok(if report.is_clean() { 0 } else { EXIT_INTERNAL })
        }
        Command::Theorem { instance } => {
            let (inst, _) = load(&instance)?;
            let no_spurious = theorem1_predicate(inst.matrix())?;
            let witness = spurious_witness(&inst);
            if no_spurious == witness.is_some() {
                return Err(CliError::Internal("predicate and witness disagree".into()));
            }
            let mut out = json!({ "no_spurious": no_spurious });
            if let Some(w) = witness {
                out["witness"] = serde_json::to_value(w).expect("point serializes");
            }
            print_json(&out);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
