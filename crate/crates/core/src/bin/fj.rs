//! Command-line front end: analyze system-definition files, print brackets
//! and equations of motion, and run verification integrations.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fj_analysis::dynamics::{constraint_drift, derive_eom, integrate_rk4, write_csv};
use fj_analysis::fj_core::{run_analysis, AnalysisReport, Constraint, Status};
use fj_analysis::parser::{parse_system, print_expression, ParsedSystem};
use fj_analysis::report::{build_document, to_json_string, to_markdown};

#[derive(Parser)]
#[command(
    name = "fj",
    about = "Symplectic constraint analysis for first-order Lagrangians",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// System-definition file
    input: PathBuf,
    /// Write the markdown report here (otherwise printed to stdout)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the structured JSON report here
    #[arg(long)]
    json: Option<PathBuf>,
    /// Cap on constraint-extension rounds
    #[arg(long)]
    max_iter: Option<u32>,
    /// Include multiplier rows in the bracket table
    #[arg(long)]
    verbose_multipliers: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis and emit a report
    Analyze(AnalyzeArgs),
    /// Print the generalized bracket table
    Brackets(AnalyzeArgs),
    /// Print the equations of motion
    Eom(AnalyzeArgs),
    /// Integrate the equations of motion and write a CSV trajectory
    Integrate {
        /// System-definition file
        input: PathBuf,
        /// Numeric bindings, repeatable: --bind m=1 --bind x1=1.6
        #[arg(long = "bind", value_name = "NAME=VALUE")]
        bind: Vec<String>,
        /// Integration horizon
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// Step size (must be positive)
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Output CSV path
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
}

fn load(input: &PathBuf) -> Result<ParsedSystem, String> {
    let text =
        fs::read_to_string(input).map_err(|e| format!("cannot read {}: {e}", input.display()))?;
    parse_system(&text).map_err(|e| format!("{}: {e}", input.display()))
}

fn analyze(args: &AnalyzeArgs) -> Result<(ParsedSystem, AnalysisReport), String> {
    let mut parsed = load(&args.input)?;
    if let Some(n) = args.max_iter {
        parsed.options.max_iterations = n;
    }
    if args.verbose_multipliers {
        parsed.options.verbose_multipliers = true;
    }
    let report = run_analysis(&parsed.system, &parsed.options).map_err(|e| e.to_string())?;
    Ok((parsed, report))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8, String> {
    let (_, report) = analyze(args)?;
    let eom = report
        .brackets
        .as_ref()
        .map(|b| derive_eom(b, &report.system.potential, &report.system));
    let doc = build_document(&report, eom.as_ref());
    let markdown = to_markdown(&doc);
    if let Some(path) = &args.json {
        fs::write(path, to_json_string(&doc))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    match &args.report {
        Some(path) => fs::write(path, &markdown)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{markdown}"),
    }
    if report.status == Status::Gauge {
        eprintln!(
            "gauge symmetry detected and no gauge conditions were supplied; \
             the report lists {} generator(s)",
            report.gauge_generators.len()
        );
        return Ok(2);
    }
    Ok(0)
}

fn cmd_brackets(args: &AnalyzeArgs) -> Result<u8, String> {
    let (_, report) = analyze(args)?;
    let ctx = &report.system.ctx;
    match &report.brackets {
        Some(table) => {
            for e in &table.entries {
                println!(
                    "{{{}, {}}} = {}",
                    ctx.table.name(e.left),
                    ctx.table.name(e.right),
                    print_expression(&e.value, ctx)
                );
            }
            Ok(0)
        }
        None => {
            eprintln!("no brackets: the final matrix is gauge-singular; supply gauge conditions");
            Ok(2)
        }
    }
}

fn cmd_eom(args: &AnalyzeArgs) -> Result<u8, String> {
    let (_, report) = analyze(args)?;
    let ctx = &report.system.ctx;
    match &report.brackets {
        Some(table) => {
            let eom = derive_eom(table, &report.system.potential, &report.system);
            for (&v, rhs) in eom.variables.iter().zip(&eom.rhs) {
                println!("d{}/dt = {}", ctx.table.name(v), print_expression(rhs, ctx));
            }
            Ok(0)
        }
        None => {
            eprintln!("no equations of motion: the final matrix is gauge-singular; supply gauge conditions");
            Ok(2)
        }
    }
}

fn cmd_integrate(
    input: &PathBuf,
    bind: &[String],
    t_end: f64,
    dt: f64,
    out: &PathBuf,
) -> Result<u8, String> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(format!("--dt must be positive, got {dt}"));
    }
    let parsed = load(input)?;
    let report = run_analysis(&parsed.system, &parsed.options).map_err(|e| e.to_string())?;
    let Some(brackets) = &report.brackets else {
        return Err("analysis did not reach an invertible matrix; supply gauge conditions".into());
    };
    let sys = &report.system;
    let eom = derive_eom(brackets, &sys.potential, sys);

    let mut bindings: BTreeMap<String, f64> = BTreeMap::new();
    for item in bind {
        let Some((name, value)) = item.split_once('=') else {
            return Err(format!("--bind expects NAME=VALUE, got `{item}`"));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("--bind {item}: `{}` is not a number", value.trim()))?;
        bindings.insert(name.trim().to_string(), value);
    }
    let mut initial = BTreeMap::new();
    let mut params = BTreeMap::new();
    for (name, value) in &bindings {
        let Some(id) = sys.ctx.table.lookup(name) else {
            return Err(format!("--bind {name}: unknown symbol"));
        };
        if eom.variables.contains(&id) {
            initial.insert(id, *value);
        } else {
            params.insert(id, *value);
        }
    }
    // every non-auxiliary symbol appearing in the equations must be bound
    for rhs in &eom.rhs {
        for v in rhs.variables() {
            if sys.ctx.is_auxiliary(v) {
                continue;
            }
            if !initial.contains_key(&v) && !params.contains_key(&v) {
                return Err(format!(
                    "unbound symbol `{}`: add --bind {}=<value>",
                    sys.ctx.table.name(v),
                    sys.ctx.table.name(v)
                ));
            }
        }
    }

    let constraints: Vec<Constraint> = report
        .constraints
        .iter()
        .chain(report.gauge_condition_constraints.iter())
        .cloned()
        .collect();
    let traj = integrate_rk4(&eom, &constraints, &initial, &params, t_end, dt, &sys.ctx)
        .map_err(|e| e.to_string())?;
    let drift = constraint_drift(&traj, &constraints, &eom, &sys.ctx).map_err(|e| e.to_string())?;

    let mut file =
        fs::File::create(out).map_err(|e| format!("cannot write {}: {e}", out.display()))?;
    write_csv(&mut file, &traj, &eom, &sys.ctx)
        .map_err(|e| format!("cannot write {}: {e}", out.display()))?;

    println!("wrote {} rows to {}", traj.times.len(), out.display());
    for (c, d) in constraints.iter().zip(&drift) {
        println!("max |{}| along trajectory = {:.3e}", c.label, d);
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Brackets(args) => cmd_brackets(args),
        Command::Eom(args) => cmd_eom(args),
        Command::Integrate {
            input,
            bind,
            t_end,
            dt,
            out,
        } => cmd_integrate(input, bind, *t_end, *dt, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
