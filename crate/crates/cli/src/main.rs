//! Command-line front end: sampling runs, conditional-magnetization tables,
//! percolation scans, chain trajectories, and the verification suite.

mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use treegibbs::chain::{is_alternating, ratio_trajectories, ChainEnvironment};
use treegibbs::perco::{expected_paths_model, monte_carlo_paths, p_zero};
use treegibbs::renorm::{conditional_image_magnetization, majority_image};
use treegibbs::rng::derive_seed;
use treegibbs::{BoundaryCondition, Error, ImageField, ModelParams, Sampler};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Parser)]
#[command(name = "treegibbs", version, about = "Ising measures on the rooted binary tree and their majority-rule images")]
struct Cli {
    /// JSON file with default values for flags (explicit flags win)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw spin fields and their images, one CSV pair per replica
    Sample(SampleArgs),
    /// Conditional root-image magnetization table for a conditioning file
    Magnetization(MagnetizationArgs),
    /// Monte Carlo zero-percolation scan over temperatures
    Percolation(PercolationArgs),
    /// Transfer-matrix ratio trajectories along a zero path
    Chain(ChainArgs),
    /// Run the numeric verification suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum)]
    boundary: Option<Boundary>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for spin_NNNN.csv / image_NNNN.csv pairs
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MagnetizationArgs {
    /// CSV file with the conditioning image values (address,value rows)
    #[arg(long)]
    eta: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Levels of unconditioned spins between the conditioning and the
    /// boundary: each row uses D = R + margin
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PercolationArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Temperature sweep start:end:step (inclusive of both ends)
    #[arg(long, value_name = "A:B:STEP")]
    beta_grid: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, value_enum)]
    boundary: Option<Boundary>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// MGF evaluation point; repeatable
    #[arg(long)]
    theta: Vec<f64>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    /// Sign string, first character is the path-top sign, e.g. ++-+
    #[arg(long)]
    env: String,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Chain length; the environment is cycled to reach it
    #[arg(long = "R")]
    r: Option<usize>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only the fast enumeration cross-checks
    #[arg(long)]
    quick: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Boundary {
    Plus,
    Minus,
    Free,
}

impl Boundary {
    fn to_core(self) -> BoundaryCondition {
        match self {
            Boundary::Plus => BoundaryCondition::Plus,
            Boundary::Minus => BoundaryCondition::Minus,
            Boundary::Free => BoundaryCondition::Free,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum OutputFormat {
    Csv,
    Json,
}

fn fail(code: u8, msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code as i32)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InfeasibleConditioning => EXIT_INFEASIBLE,
        _ => EXIT_CONFIG,
    }
}

/// Config-file defaults: a flat JSON object keyed by flag name. Explicit
/// flags always win.
struct Defaults(serde_json::Map<String, serde_json::Value>);

impl Defaults {
    fn load(path: Option<&Path>) -> Defaults {
        let Some(path) = path else {
            return Defaults(Default::default());
        };
        let text = std::fs::read_to_string(path)
            .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot read config {path:?}: {e}")));
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Object(map)) => Defaults(map),
            Ok(_) => fail(EXIT_CONFIG, "config file must hold a JSON object"),
            Err(e) => fail(EXIT_CONFIG, &format!("config file is not valid JSON: {e}")),
        }
    }

    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).map(|v| {
            v.as_f64()
                .unwrap_or_else(|| fail(EXIT_CONFIG, &format!("config key {key} must be a number")))
        })
    }

    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).map(|v| {
            v.as_u64()
                .unwrap_or_else(|| fail(EXIT_CONFIG, &format!("config key {key} must be a nonnegative integer")))
        })
    }

    fn str(&self, key: &str) -> Option<String> {
        self.0.get(key).map(|v| {
            v.as_str()
                .unwrap_or_else(|| fail(EXIT_CONFIG, &format!("config key {key} must be a string")))
                .to_string()
        })
    }
}

fn require_beta(flag: Option<f64>, defaults: &Defaults) -> f64 {
    let beta = flag
        .or_else(|| defaults.f64("beta"))
        .unwrap_or_else(|| fail(EXIT_CONFIG, "--beta is required"));
    if !(beta >= 0.0) {
        fail(EXIT_CONFIG, &format!("--beta must be nonnegative, got {beta}"));
    }
    beta
}

fn resolve_boundary(flag: Option<Boundary>, defaults: &Defaults) -> BoundaryCondition {
    if let Some(b) = flag {
        return b.to_core();
    }
    match defaults.str("boundary").as_deref() {
        None => BoundaryCondition::Free,
        Some("plus") => BoundaryCondition::Plus,
        Some("minus") => BoundaryCondition::Minus,
        Some("free") => BoundaryCondition::Free,
        Some(other) => fail(EXIT_CONFIG, &format!("--boundary must be plus, minus or free, got {other}")),
    }
}

fn write_text(out: Option<&Path>, text: &str) {
    match out {
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
        }
        Some(path) => {
            std::fs::write(path, text)
                .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot write {path:?}: {e}")));
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("TREEGIBBS_THREADS") {
        let n: usize = threads
            .parse()
            .unwrap_or_else(|_| fail(EXIT_CONFIG, "TREEGIBBS_THREADS must be a positive integer"));
        if n == 0 {
            fail(EXIT_CONFIG, "TREEGIBBS_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    let defaults = Defaults::load(cli.config.as_deref());
    match cli.command {
        Command::Sample(args) => cmd_sample(args, &defaults),
        Command::Magnetization(args) => cmd_magnetization(args, &defaults),
        Command::Percolation(args) => cmd_percolation(args, &defaults),
        Command::Chain(args) => cmd_chain(args, &defaults),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_sample(args: SampleArgs, defaults: &Defaults) -> ExitCode {
    let beta = require_beta(args.beta, defaults);
    let depth = args
        .depth
        .or_else(|| defaults.u64("depth").map(|d| d as usize))
        .unwrap_or_else(|| fail(EXIT_CONFIG, "--depth is required"));
    if depth < 1 {
        fail(EXIT_CONFIG, "--depth must be at least 1");
    }
    let replicas = args.replicas.or_else(|| defaults.u64("replicas")).unwrap_or(1);
    if replicas < 1 {
        fail(EXIT_CONFIG, "--replicas must be at least 1");
    }
    let seed = args.seed.or_else(|| defaults.u64("seed")).unwrap_or(0);
    let bc = resolve_boundary(args.boundary, defaults);
    let out_dir = args
        .out
        .or_else(|| defaults.str("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let params = ModelParams::new(beta)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, &format!("invalid --beta: {e}")));
    let sampler = Sampler::new(depth, &bc, &params)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, &e.to_string()));
    std::fs::create_dir_all(&out_dir)
        .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot create {out_dir:?}: {e}")));
    for i in 0..replicas {
        let sigma = sampler.sample(derive_seed(seed, i));
        let image = majority_image(&sigma).unwrap_or_else(|e| fail(EXIT_CONFIG, &e.to_string()));
        let spin_path = out_dir.join(format!("spin_{i:04}.csv"));
        let image_path = out_dir.join(format!("image_{i:04}.csv"));
        std::fs::write(&spin_path, sigma.to_csv())
            .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot write {spin_path:?}: {e}")));
        std::fs::write(&image_path, image.to_csv())
            .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot write {image_path:?}: {e}")));
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct MagnetizationRow {
    #[serde(rename = "R")]
    r: usize,
    #[serde(rename = "D")]
    d: usize,
    m_plus: f64,
    m_minus: f64,
    gap: f64,
}

fn cmd_magnetization(args: MagnetizationArgs, defaults: &Defaults) -> ExitCode {
    let beta = require_beta(args.beta, defaults);
    let margin = args
        .margin
        .or_else(|| defaults.u64("margin").map(|m| m as usize))
        .unwrap_or(4)
        .max(1);
    let text = std::fs::read_to_string(&args.eta)
        .unwrap_or_else(|e| fail(EXIT_IO, &format!("cannot read {:?}: {e}", args.eta)));
    let eta = ImageField::from_csv(&text)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, &format!("malformed conditioning file: {e}")));
    let params = ModelParams::new(beta).unwrap_or_else(|e| fail(EXIT_CONFIG, &e.to_string()));

    // the whole table is computed before a single byte is written
    let mut rows = Vec::new();
    for r in 1..=eta.depth() {
        let eta_r = eta
            .restricted(r)
            .unwrap_or_else(|e| fail(EXIT_CONFIG, &e.to_string()));
        let big_d = r + margin;
        let run = |tail: BoundaryCondition| {
            conditional_image_magnetization(&eta_r, &tail, big_d, &params)
                .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()))
        };
        let m_plus = run(BoundaryCondition::Plus);
        let m_minus = run(BoundaryCondition::Minus);
        rows.push(MagnetizationRow {
            r,
            d: big_d,
            m_plus,
            m_minus,
            gap: (m_plus - m_minus).abs(),
        });
    }
    let format = args.output.unwrap_or(OutputFormat::Csv);
    let text = match format {
        OutputFormat::Csv => {
            let mut s = String::from("R,D,m_plus,m_minus,gap\n");
            for row in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.r, row.d, row.m_plus, row.m_minus, row.gap
                ));
            }
            s
        }
        OutputFormat::Json => serde_json::to_string_pretty(&rows).unwrap() + "\n",
    };
    write_text(args.out.as_deref(), &text);
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct PercolationRow {
    beta: f64,
    #[serde(rename = "R")]
    r: usize,
    p_zero: f64,
    survival_freq: f64,
    #[serde(rename = "mean_NR")]
    mean_nr: f64,
    model_mean: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mgf_empirical: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mgf_model: Vec<f64>,
}

fn parse_beta_grid(grid: &str) -> Vec<f64> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        fail(EXIT_CONFIG, "--beta-grid must look like start:end:step");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse()
                .unwrap_or_else(|_| fail(EXIT_CONFIG, &format!("bad number {p:?} in --beta-grid")))
        })
        .collect();
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(start >= 0.0) || !(step > 0.0) || end < start {
        fail(EXIT_CONFIG, "--beta-grid needs start >= 0, step > 0, end >= start");
    }
    let mut betas = Vec::new();
    let mut k = 0;
    loop {
        let b = start + k as f64 * step;
        if b > end + 1e-9 {
            break;
        }
        betas.push(b);
        k += 1;
    }
    betas
}

fn cmd_percolation(args: PercolationArgs, defaults: &Defaults) -> ExitCode {
    let betas = match (&args.beta_grid, args.beta) {
        (Some(grid), _) => parse_beta_grid(grid),
        (None, flag) => vec![require_beta(flag, defaults)],
    };
    let depth = args
        .depth
        .or_else(|| defaults.u64("depth").map(|d| d as usize))
        .unwrap_or_else(|| fail(EXIT_CONFIG, "--depth is required"));
    let replicas = args
        .replicas
        .or_else(|| defaults.u64("replicas"))
        .unwrap_or(1000);
    if depth < 1 || replicas < 1 {
        fail(EXIT_CONFIG, "--depth and --replicas must be at least 1");
    }
    let seed = args.seed.or_else(|| defaults.u64("seed")).unwrap_or(0);
    let bc = resolve_boundary(args.boundary, defaults);

    let mut rows = Vec::new();
    for (bi, &beta) in betas.iter().enumerate() {
        let summary = monte_carlo_paths(
            beta,
            depth,
            &bc,
            replicas,
            derive_seed(seed, bi as u64),
            &args.theta,
        )
        .unwrap_or_else(|e| fail(exit_code_for(&e), &e.to_string()));
        rows.push(PercolationRow {
            beta,
            r: depth,
            p_zero: p_zero(beta).unwrap(),
            survival_freq: summary.survival_freq,
            mean_nr: summary.mean_nr,
            model_mean: expected_paths_model(depth, p_zero(beta).unwrap()).unwrap(),
            mgf_empirical: summary.mgf_empirical,
            mgf_model: summary.mgf_model,
        });
    }
    let format = args.output.unwrap_or(OutputFormat::Csv);
    let text = match format {
        OutputFormat::Csv => {
            let mut header = String::from("beta,R,p_zero,survival_freq,mean_NR,model_mean");
            for theta in &args.theta {
                header.push_str(&format!(",mgf_emp_{theta},mgf_model_{theta}"));
            }
            header.push('\n');
            let mut s = header;
            for row in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}",
                    row.beta, row.r, row.p_zero, row.survival_freq, row.mean_nr, row.model_mean
                ));
                for k in 0..args.theta.len() {
                    s.push_str(&format!(",{},{}", row.mgf_empirical[k], row.mgf_model[k]));
                }
                s.push('\n');
            }
            s
        }
        OutputFormat::Json => serde_json::to_string_pretty(&rows).unwrap() + "\n",
    };
    write_text(args.out.as_deref(), &text);
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct ChainRow {
    n: usize,
    x_n: Option<f64>,
    y_n: Option<f64>,
    abs_diff_n: Option<f64>,
    bound_n: Option<f64>,
}

fn cmd_chain(args: ChainArgs, defaults: &Defaults) -> ExitCode {
    let beta = require_beta(args.beta, defaults);
    let base = ChainEnvironment::parse(&args.env)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, &format!("invalid --env: {e}")));
    let r = args
        .r
        .or_else(|| defaults.u64("R").map(|v| v as usize))
        .unwrap_or_else(|| base.len());
    if r < 1 {
        fail(EXIT_CONFIG, "--R must be at least 1");
    }
    // cycle the flank pattern out to length R
    let fields: Vec<i8> = (0..r).map(|i| base.fields()[i % base.len()]).collect();
    let env = ChainEnvironment::new(base.eta0_sign(), fields).unwrap();
    if is_alternating(&env) {
        fail(
            EXIT_CONFIG,
            "alternating flank pattern: the product keeps a zero entry and the ratio trajectories never start",
        );
    }
    let traj = ratio_trajectories(&env, beta, r)
        .unwrap_or_else(|e| fail(EXIT_CONFIG, &e.to_string()));
    let mut rows = Vec::new();
    for n in 1..=r {
        let row = match traj.n0 {
            Some(n0) if n >= n0 => {
                let k = n - n0;
                let bound = (-beta * (n - n0) as f64).exp() * traj.diff(0);
                ChainRow {
                    n,
                    x_n: Some(traj.x[k]),
                    y_n: Some(traj.y[k]),
                    abs_diff_n: Some(traj.diff(k)),
                    bound_n: Some(bound),
                }
            }
            _ => ChainRow {
                n,
                x_n: None,
                y_n: None,
                abs_diff_n: None,
                bound_n: None,
            },
        };
        rows.push(row);
    }
    let format = args.output.unwrap_or(OutputFormat::Csv);
    let text = match format {
        OutputFormat::Csv => {
            let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let mut s = String::from("n,x_n,y_n,abs_diff_n,bound_n\n");
            for row in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.n,
                    cell(row.x_n),
                    cell(row.y_n),
                    cell(row.abs_diff_n),
                    cell(row.bound_n)
                ));
            }
            s
        }
        OutputFormat::Json => serde_json::to_string_pretty(&rows).unwrap() + "\n",
    };
    write_text(args.out.as_deref(), &text);
    ExitCode::SUCCESS
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let results = if args.quick {
        verify::run_quick()
    } else {
        verify::run_full()
    };
    let mut all_pass = true;
    println!("check                                        result");
    println!("---------------------------------------------------");
    for r in &results {
        println!(
            "{:<44} {} ({})",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        all_pass = all_pass && r.pass;
    }
    if all_pass {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("some checks failed");
        ExitCode::FAILURE
    }
}
