use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use adt_polite_core::frontend::{parse_script, run_script, Procedure, RunOptions};
use adt_polite_core::oracle::{brute_force_sat, OracleConfig, OracleError, OracleResult};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Decides SMT-LIB 2 scripts over algebraic datatypes.
#[derive(Debug, Parser)]
#[command(name = "adt-polite", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Checks the script's assertions by bounded enumeration.
    DevOracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Proc {
    Reduce,
    Unify,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Decision procedure to run on each cube.
    #[arg(long = "proc", value_enum, default_value = "reduce")]
    procedure: Proc,
    /// Print the witness of every cube as a comment.
    #[arg(long)]
    dump_witness: bool,
    /// Print the reduced cubes of every cube and arrangement as comments.
    #[arg(long)]
    dump_reduction: bool,
    /// Shrink models to the values of their element variables.
    #[arg(long)]
    minimize_model: bool,
    /// Combine with a bounded-cardinality theory, e.g. `card:elem=2`.
    #[arg(long, value_name = "card:SORT=N", value_parser = parse_card)]
    combine: Vec<(String, usize)>,
    #[arg(long, value_name = "N", default_value_t = RunOptions::default().max_cubes)]
    max_cubes: usize,
    #[arg(long, value_name = "N", default_value_t = RunOptions::default().max_guesses)]
    max_guesses: usize,
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Element domain size for every uninterpreted sort.
    #[arg(long, default_value_t = 2)]
    elem: u32,
    /// Maximum depth of structure values.
    #[arg(long, default_value_t = 4)]
    depth: usize,
    file: PathBuf,
}

fn parse_card(s: &str) -> Result<(String, usize), String> {
    let rest = s
        .strip_prefix("card:")
        .ok_or("expected `card:<sort>=<n>`")?;
    let (sort, n) = rest.split_once('=').ok_or("expected `card:<sort>=<n>`")?;
    let n: usize = n.parse().map_err(|e| format!("bad bound `{n}`: {e}"))?;
    if n == 0 {
        return Err("cardinality bounds must be at least 1".into());
    }
    Ok((sort.to_owned(), n))
}

fn error_line(msg: impl std::fmt::Display) -> String {
    format!("(error \"{}\")", msg.to_string().replace('"', "\"\""))
}

fn read(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        println!("{}", error_line(format!("{}: {e}", path.display())));
        ExitCode::from(1)
    })
}

fn solve(args: SolveArgs) -> ExitCode {
    let Some(path) = &args.file else {
        println!("{}", error_line("no input file"));
        return ExitCode::from(1);
    };
    let text = match read(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let script = match parse_script(&text) {
        Ok(s) => s,
        Err(e) => {
            println!("{}", error_line(e));
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        procedure: match args.procedure {
            Proc::Reduce => Procedure::Reduce,
            Proc::Unify => Procedure::Unify,
        },
        dump_witness: args.dump_witness,
        dump_reduction: args.dump_reduction,
        minimize_model: args.minimize_model,
        combine: (!args.combine.is_empty())
            .then(|| args.combine.into_iter().collect::<BTreeMap<_, _>>()),
        max_cubes: args.max_cubes,
        max_guesses: args.max_guesses,
    };
    let run = run_script(&script, &opts);
    print!("{}", run.output);
    if let Some(e) = &run.error {
        println!("{}", error_line(e));
    }
    ExitCode::from(run.exit_code() as u8)
}

fn oracle(args: OracleArgs) -> ExitCode {
    let text = match read(&args.file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let script = match parse_script(&text) {
        Ok(s) => s,
        Err(e) => {
            println!("{}", error_line(e));
            return ExitCode::from(1);
        }
    };
    let sig = &script.signature;
    let cfg = OracleConfig::uniform(sig, args.elem, args.depth);
    match brute_force_sat(sig, &script.context, &script.assertions(), &cfg) {
        Ok(OracleResult::Sat(m)) => {
            println!("sat");
            println!("(model");
            for v in script.context.vars() {
                if let Some(t) = m.values.get(&v) {
                    println!(
                        "  (define-fun {} () {} {})",
                        script.context.var_name(v),
                        sig.sort_name(v.sort),
                        t.display(sig)
                    );
                }
            }
            println!(")");
            ExitCode::SUCCESS
        }
        Ok(OracleResult::UnsatWithinBounds) => {
            println!("unsat-within-bounds");
            ExitCode::SUCCESS
        }
        Err(e @ OracleError::ResourceOut(_)) => {
            println!("{}", error_line(e));
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Some(Command::DevOracle(args)) => oracle(args),
        None => solve(cli.solve),
    }
}
