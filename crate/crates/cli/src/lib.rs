//! `steep`: steepness checks, degeneracy scans, system generation and
//! index tables from the command line.

pub mod cases;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;
use serde_json::json;
use steep_core::conditions::{
    check_steepness, index_table, r_jet_degeneracy, DegeneracyStatus, Verdict, SEMANTICS_NOTE,
};
use steep_core::generator::build_xi;
use steep_core::polyjet::{jet_at, parse_point, parse_polynomial, Jet};
use steep_core::search::{Mode, SearchConfig};
use steep_core::Error;

pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "steep", version, about = "Sufficient algebraic steepness conditions on 5-jets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the steepness conditions at a point.
    Check(CheckArgs),
    /// Search for unit v with h^k[v,...,v] = 0 for k up to --order.
    Degeneracy(DegeneracyArgs),
    /// Emit the formal defining system for (n, m, r).
    Generate(GenerateArgs),
    /// Print the steepness-index table for (n, r).
    Table(TableArgs),
    /// Run the worked examples and golden systems.
    Examples(ExamplesArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Number of variables.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated coordinates, decimal or rational (e.g. 0,1/2,0).
    #[arg(long)]
    point: Option<String>,
    /// Polynomial in I1..In.
    #[arg(long, conflicts_with_all = ["poly_file", "jet_file"])]
    poly: Option<String>,
    #[arg(long, conflicts_with = "jet_file")]
    poly_file: Option<PathBuf>,
    /// Jet JSON: {"n":..,"order":..,"point":[..],"terms":[{"mu":[..],"value":..}]}.
    #[arg(long)]
    jet_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Certify)]
    mode: ModeArg,
    /// Witness residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Number of random starts per search.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    Heuristic,
    Certify,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct DegeneracyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Jet order r of the degeneracy test, 1..=5.
    #[arg(long)]
    order: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExamplesArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Run a single case: example1, example2, example3 or golden.
    #[arg(long)]
    only: Option<String>,
}

/// Failure that maps to the usage exit code.
#[derive(Debug)]
struct Usage(String);

impl From<Error> for Usage {
    fn from(e: Error) -> Self {
        Usage(e.to_string())
    }
}

type Outcome = Result<i32, Usage>;

fn config(s: &SearchArgs) -> SearchConfig {
    let mut cfg = SearchConfig {
        mode: match s.mode {
            ModeArg::Heuristic => Mode::Heuristic,
            ModeArg::Certify => Mode::Certify,
        },
        ..SearchConfig::default()
    };
    if let Some(t) = s.tol {
        cfg.witness_tol = t;
    }
    if let Some(k) = s.seeds {
        cfg.starts = k;
    }
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    cfg
}

fn load_jet(input: &InputArgs, order: usize) -> Result<Jet, Usage> {
    if let Some(path) = &input.jet_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
        let jet = Jet::from_json(&text)?;
        if let Some(n) = input.n {
            if n != jet.n() {
                return Err(Usage(format!("--n {n} but the jet file has n = {}", jet.n())));
            }
        }
        gate_dimension(jet.n())?;
        return Ok(jet);
    }
    let text = match (&input.poly, &input.poly_file) {
        (Some(p), None) => p.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?,
        _ => return Err(Usage("give exactly one of --poly, --poly-file, --jet-file".into())),
    };
    let point: Option<Vec<BigRational>> = input.point.as_deref().map(parse_point).transpose()?;
    let n = match (input.n, &point) {
        (Some(n), Some(p)) if p.len() != n => {
            return Err(Usage(format!("--point has {} coordinates but --n is {n}", p.len())))
        }
        (Some(n), _) => n,
        (None, Some(p)) => p.len(),
        (None, None) => return Err(Usage("--n or --point is required".into())),
    };
    gate_dimension(n)?;
    let point = point.unwrap_or_else(|| vec![BigRational::from_integer(0.into()); n]);
    let poly = parse_polynomial(text.trim(), n)?;
    Ok(jet_at(&poly, &point, order)?)
}

fn gate_dimension(n: usize) -> Result<(), Usage> {
    if n >= 6 {
        return Err(Error::UnsupportedDimension(n).into());
    }
    if n < 2 {
        return Err(Usage(format!("n = {n}: at least two variables are needed")));
    }
    Ok(())
}

fn write_json(path: &Option<PathBuf>, value: &serde_json::Value) -> Result<(), Usage> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
        std::fs::write(p, text).map_err(|e| Usage(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::SteepCertified => 0,
        Verdict::NotCertified => 1,
        Verdict::DegenerateGradient => 2,
        Verdict::Inconclusive => 3,
    }
}

fn cmd_check(a: &CheckArgs) -> Outcome {
    let jet = load_jet(&a.input, 5)?;
    let cfg = config(&a.search);
    let rep = check_steepness(&jet, &cfg)?;
    println!("verdict: {:?}", rep.verdict);
    if let Some(r) = &rep.reason {
        println!("reason: {r}");
    }
    println!("gradient norm: {:.6e}", rep.gradient_norm);
    for c in &rep.conditions {
        println!(
            "  {} [{}] {:?}: best residual {:.3e}, certified lower bound {}{}",
            c.id,
            c.set,
            c.status,
            c.best_residual,
            c.certified_lower_bound.map_or("-".into(), |b| format!("{b:.3e}")),
            c.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))
        );
        if let Some(w) = &c.witness {
            for v in w {
                println!("      {} = {:?}", v.name, v.vector);
            }
        }
    }
    if !cfg.is_default_tolerances() {
        println!("note: non-default tolerances in use");
    }
    println!("{SEMANTICS_NOTE}");
    write_json(&a.search.json, &serde_json::to_value(&rep).expect("serializable"))?;
    Ok(verdict_code(rep.verdict))
}

fn cmd_degeneracy(a: &DegeneracyArgs) -> Outcome {
    if a.order == 0 || a.order > 5 {
        return Err(Usage(format!("--order {} outside 1..=5", a.order)));
    }
    let jet = load_jet(&a.input, 5)?;
    let cfg = config(&a.search);
    let res = r_jet_degeneracy(&jet, a.order, &cfg)?;
    println!("order {}: {:?}", res.order, res.status);
    println!("best residual {:.3e}", res.best_residual);
    if let Some(b) = res.certified_lower_bound {
        println!("certified lower bound {b:.3e}");
    }
    for w in &res.witnesses {
        println!("  witness {w:?}");
    }
    write_json(&a.search.json, &serde_json::to_value(&res).expect("serializable"))?;
    Ok(match res.status {
        DegeneracyStatus::NonDegenerate => 0,
        DegeneracyStatus::Degenerate => 1,
        DegeneracyStatus::Unknown => 3,
    })
}

fn cmd_generate(a: &GenerateArgs) -> Outcome {
    let sys = build_xi(a.n, a.r, a.m)?;
    match a.format {
        Format::Text => print!("{}", sys.to_text()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&sys.to_json()).expect("json")),
    }
    write_json(&a.json, &sys.to_json())?;
    Ok(0)
}

fn cmd_table(a: &TableArgs) -> Outcome {
    let t = index_table(a.n, a.r)?;
    println!("n = {}, r = {}", t.n, t.r);
    println!("{:>3} {:>9} {:>6}", "m", "alpha_bar", "beta");
    for row in &t.rows {
        let flag = if row.uninformative {
            "  conditions uninformative: beta <= 3 puts every three-jet degenerate point in the bad set"
        } else {
            ""
        };
        println!("{:>3} {:>9} {:>6}{flag}", row.m, row.alpha_bar, row.beta);
    }
    println!("codimension lower bound: {}", t.codim_bound);
    write_json(&a.json, &serde_json::to_value(&t).expect("serializable"))?;
    Ok(0)
}

fn cmd_examples(a: &ExamplesArgs) -> Outcome {
    let cfg = config(&a.search);
    let selected: Vec<&str> = match &a.only {
        Some(c) if cases::CASES.contains(&c.as_str()) => vec![c.as_str()],
        Some(c) => {
            return Err(Usage(format!(
                "unknown case {c:?}; choose from {}",
                cases::CASES.join(", ")
            )))
        }
        None => cases::CASES.to_vec(),
    };
    if !cfg.is_default_tolerances() {
        println!("note: non-default tolerances in use; witnesses may be spurious");
    }
    let mut results = Vec::new();
    for c in selected {
        let r = cases::run_case(c, &cfg).expect("known case");
        println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.case);
        for l in &r.lines {
            println!("    {l}");
        }
        results.push(r);
    }
    let all = results.iter().all(|r| r.pass);
    write_json(
        &a.search.json,
        &json!({
            "cases": results,
            "all_pass": all,
            "default_tolerances": cfg.is_default_tolerances(),
            "config": cfg,
        }),
    )?;
    Ok(if all { 0 } else { 1 })
}

fn configure_threads() {
    if let Some(n) = std::env::var("STEEP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second call only fails when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let out = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Degeneracy(a) => cmd_degeneracy(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Table(a) => cmd_table(a),
        Command::Examples(a) => cmd_examples(a),
    };
    match out {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}
