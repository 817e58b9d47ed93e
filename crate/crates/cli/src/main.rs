mod server;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use timewindow::analysis::{ratio_report, write_csv, InstanceStats};
use timewindow::generators::{self, RandomSpec, ShapeFamily};
use timewindow::io::{self, InstanceRef};
use timewindow::{solve_greedy, solve_optimal, Instance, OracleConfig, TimeWindowQuery};

const EXIT_IO: u8 = 1;
const EXIT_UNPROVEN: u8 = 2;
const EXIT_BOUND: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Bad flag values detected after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Activity diagrams for time-window labeling.
#[derive(Parser)]
#[command(name = "twl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark instance.
    Generate {
        #[command(subcommand)]
        family: Family,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Compute an activity diagram for an instance.
    Solve {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Time budget in seconds for the optimal search.
        #[arg(long, default_value_t = 60.0)]
        budget: f64,
    },
    /// Check a diagram for invalid or overlapping regions.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the events shown for a time window.
    Query {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
    },
    /// Compare greedy against the optimum and check the ratio bounds.
    Ratio {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        oracle_budget: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Serve an instance and diagram over HTTP.
    Serve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        diagram: PathBuf,
        /// Port to listen on; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with a UI bundle to serve instead of the built-in page.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Family {
    /// The fifteen-label grid where greedy loses a factor above four.
    Table1 {
        #[arg(long, default_value_t = generators::TABLE1_EPS)]
        eps: f64,
    },
    /// One shared location with timestamps 2^j.
    Powers {
        #[arg(long)]
        b: u64,
    },
    /// `a` groups of powers chains around one wide label.
    Refined {
        #[arg(long)]
        a: u32,
        #[arg(long)]
        m: u32,
    },
    /// Pseudo-random labels with uniform timestamps.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Shapes::Squares)]
        shapes: Shapes,
        #[arg(long, default_value_t = 1.0)]
        w_min: f64,
        #[arg(long, default_value_t = 1.0)]
        w_max: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t_max: f64,
        /// Side of the square that label centers are drawn from.
        #[arg(long, default_value_t = 3.0)]
        extent: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
    Optimal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shapes {
    Squares,
    Disks,
    Rects,
    Mixed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { EXIT_USAGE } else { EXIT_IO })
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Generate { family, out } => {
            let out = out.ok_or_else(|| usage("--out is required"))?;
            generate(family, &out)
        }
        Command::Solve { algo, input, out, budget } => solve(algo, &input, &out, budget),
        Command::Verify { input } => verify(&input),
        Command::Query { input, from, to } => query(&input, from, to),
        Command::Ratio { input, oracle_budget, csv } => ratio(&input, oracle_budget, csv.as_deref()),
        Command::Serve { instance, diagram, port, host, static_dir } => {
            let app = server::App::load(&instance, &diagram)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(app, &host, port, static_dir))?;
            Ok(0)
        }
    }
}

fn budget(seconds: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(seconds).map_err(|_| usage(format!("invalid budget {seconds}")))
}

fn generate(family: Family, out: &Path) -> Result<u8> {
    let generated = match family {
        Family::Table1 { eps } => generators::gen_table1(eps),
        Family::Powers { b } => generators::gen_powers(b),
        Family::Refined { a, m } => generators::gen_refined(a, m),
        Family::Random { seed, n, shapes, w_min, w_max, t_min, t_max, extent } => {
            let shapes = match shapes {
                Shapes::Squares => ShapeFamily::UnitSquares,
                Shapes::Disks => ShapeFamily::UnitDisks,
                Shapes::Rects => ShapeFamily::Rectangles { min_side: 0.5, max_side: 2.0 },
                Shapes::Mixed => ShapeFamily::Mixed,
            };
            let spec = RandomSpec::new(seed, n)
                .shapes(shapes)
                .weights(w_min, w_max)
                .window(t_min, t_max)
                .extent(extent);
            generators::gen_random(&spec)
        }
    };
    let instance = generated.map_err(|e| usage(e.to_string()))?;
    io::save_instance(&instance, out).with_context(|| format!("writing {}", out.display()))?;
    let stats = InstanceStats::of(&instance);
    let b = stats.unbalance.map_or_else(|| "n/a".to_owned(), |b| b.to_string());
    println!(
        "n={} pairs={} a={} b={b}",
        stats.n, stats.conflict_pairs, stats.interference
    );
    Ok(0)
}

fn load_instance(path: &Path) -> Result<Arc<Instance>> {
    let instance = io::load_instance(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(Arc::new(instance))
}

/// How a diagram written to `out` should point back at `instance`.
fn instance_ref(instance: &Path, out: &Path) -> Result<InstanceRef> {
    let instance = instance.canonicalize()?;
    let out_dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.canonicalize()?,
        _ => std::env::current_dir()?,
    };
    let text = match instance.strip_prefix(&out_dir) {
        Ok(rel) => rel.to_string_lossy().into_owned(),
        Err(_) => instance.to_string_lossy().into_owned(),
    };
    Ok(InstanceRef::Path(text))
}

fn solve(algo: Algo, input: &Path, out: &Path, seconds: f64) -> Result<u8> {
    let time_budget = budget(seconds)?;
    let instance = load_instance(input)?;
    let (diagram, proven) = match algo {
        Algo::Greedy => (solve_greedy(&instance).0, None),
        Algo::Optimal => {
            let sol = solve_optimal(&instance, &OracleConfig::branch_and_bound(time_budget))?;
            (sol.diagram, Some(sol.proven_optimal))
        }
    };
    let reference = instance_ref(input, out)?;
    io::save_diagram(&diagram, &reference, out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("volume {}", diagram.volume());
    match proven {
        Some(p) => {
            println!("proven {p}");
            Ok(if p { 0 } else { EXIT_UNPROVEN })
        }
        None => Ok(0),
    }
}

fn verify(input: &Path) -> Result<u8> {
    let diagram = io::load_diagram(input).with_context(|| format!("loading {}", input.display()))?;
    let report = diagram.validate();
    for v in &report.violations {
        println!("{v}");
    }
    if report.is_valid() {
        println!("valid: {} regions, volume {}", diagram.regions().len(), diagram.volume());
        Ok(0)
    } else {
        Ok(EXIT_IO)
    }
}

fn query(input: &Path, from: f64, to: f64) -> Result<u8> {
    let diagram = io::load_diagram(input).with_context(|| format!("loading {}", input.display()))?;
    let window = TimeWindowQuery::new(from, to).map_err(|e| usage(e.to_string()))?;
    let active = diagram.query(window).map_err(|e| usage(e.to_string()))?;
    let ids: Vec<String> = active.iter().map(ToString::to_string).collect();
    println!("{}", ids.join(" "));
    Ok(0)
}

fn ratio(input: &Path, seconds: f64, csv: Option<&Path>) -> Result<u8> {
    let oracle = OracleConfig::branch_and_bound(budget(seconds)?);
    let instance = load_instance(input)?;
    let report = ratio_report(&instance, &oracle)?;
    println!("{report}");
    if let Some(path) = csv {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        write_csv(file, [&report])?;
    } else {
        let mut stdout = std::io::stdout().lock();
        write_csv(&mut stdout, [&report])?;
        stdout.flush()?;
    }
    Ok(if !report.violations.is_empty() {
        EXIT_BOUND
    } else if !report.proven_optimal {
        EXIT_UNPROVEN
    } else {
        0
    })
}
