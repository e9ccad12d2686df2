//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::{EngineError, VarId};
use crate::matcher::{self, RuleTable};
use crate::model::parse_model;
use crate::solver::{SolveError, Solver};

#[derive(Debug, Parser)]
#[command(name = "fdsolve", version, about = "Finite-domain constraint solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model file and print its answers.
    Solve {
        file: PathBuf,
        /// Print every solution of the labeling.
        #[arg(long, conflicts_with = "max_solutions")]
        all_solutions: bool,
        /// Print at most N solutions of the labeling.
        #[arg(long, value_name = "N")]
        max_solutions: Option<usize>,
        /// Report fired rules and counters on stderr.
        #[arg(long)]
        trace_dispatch: bool,
    },
    /// Report rules that can never fire because an earlier rule shadows them.
    CheckRules {
        #[arg(long, value_enum, default_value_t = Table::Shipped)]
        table: Table,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Shipped,
    GenericFirst,
    Empty,
}

impl Table {
    pub fn rules(self) -> RuleTable {
        match self {
            Table::Shipped => matcher::default_rule_table(),
            Table::GenericFirst => matcher::generic_first_rule_table(),
            Table::Empty => RuleTable::empty(),
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match cli.command {
        Command::Solve { file, all_solutions, max_solutions, trace_dispatch } => {
            let limit = if all_solutions { None } else { Some(max_solutions.unwrap_or(1)) };
            match std::fs::read_to_string(&file) {
                Ok(text) => solve(&text, &file.display().to_string(), limit, trace_dispatch, out, err),
                Err(e) => writeln!(err, "{}: {e}", file.display()).map(|_| EXIT_ERROR),
            }
        }
        Command::CheckRules { table } => check_rules(&table.rules(), out, err),
    };
    r.unwrap_or(EXIT_ERROR)
}

fn print_block(out: &mut dyn Write, s: &crate::engine::Store, names: &[(String, VarId)]) -> std::io::Result<()> {
    if names.is_empty() {
        return writeln!(out, "true.");
    }
    for (n, v) in names {
        let d = s.domain(*v);
        match d.as_singleton() {
            Some(x) => writeln!(out, "{n} = {x}")?,
            None => writeln!(out, "{n} in {d}")?,
        }
    }
    Ok(())
}

/// Solves the model in `text`. `limit` bounds the number of labeling
/// solutions printed (`None` for all).
pub fn solve(
    text: &str,
    origin: &str,
    limit: Option<usize>,
    trace: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::io::Result<i32> {
    let statements = match parse_model(text) {
        Ok(st) => st,
        Err(e) => {
            writeln!(err, "{origin}:{e}")?;
            return Ok(EXIT_ERROR);
        }
    };
    let mut solver = Solver::new();
    if trace {
        solver.enable_trace();
    }
    for st in &statements {
        for n in st.vars() {
            solver.var(n);
        }
    }
    let mut to_label: Vec<VarId> = Vec::new();
    let mut labeled = false;
    let mut status = Ok(());
    for st in &statements {
        match solver.post_statement(st) {
            Ok(Some(vs)) => {
                labeled = true;
                to_label.extend(vs);
            }
            Ok(None) => {}
            Err(e) => {
                status = Err(e);
                break;
            }
        }
    }
    let names: Vec<(String, VarId)> = solver.names().map(|(n, v)| (n.to_string(), v)).collect();
    let code = match status {
        Err(SolveError::Inconsistent) => {
            writeln!(out, "false.")?;
            EXIT_UNSAT
        }
        Err(e) => {
            writeln!(err, "{origin}: {e}")?;
            EXIT_ERROR
        }
        Ok(()) if !labeled => {
            print_block(out, &solver.store, &names)?;
            EXIT_OK
        }
        Ok(()) => match solver.store.label(&to_label, limit) {
            Err(EngineError::UnboundedLabeling(v)) => {
                let name = names.iter().find(|(_, w)| *w == v).map_or("_", |(n, _)| n.as_str());
                writeln!(err, "{origin}: cannot label {name}: its domain is infinite")?;
                EXIT_ERROR
            }
            Err(e) => {
                writeln!(err, "{origin}: {e}")?;
                EXIT_ERROR
            }
            Ok(mut sols) => {
                let mut count = 0;
                while sols.next().is_some() {
                    if count > 0 {
                        writeln!(out)?;
                    }
                    print_block(out, sols.store(), &names)?;
                    count += 1;
                }
                if count == 0 {
                    writeln!(out, "false.")?;
                    EXIT_UNSAT
                } else {
                    EXIT_OK
                }
            }
        },
    };
    if trace {
        for line in solver.take_trace() {
            writeln!(err, "{line}")?;
        }
        let st = solver.store.stats();
        writeln!(
            err,
            "STATS propagator_runs={} posts={} dispatches={}",
            st.propagator_runs,
            st.posts,
            solver.dispatches()
        )?;
    }
    Ok(code)
}

pub fn check_rules(table: &RuleTable, out: &mut dyn Write, err: &mut dyn Write) -> std::io::Result<i32> {
    if let Err(e) = matcher::validate(table) {
        writeln!(err, "invalid rule table: {e}")?;
        return Ok(EXIT_ERROR);
    }
    let warnings = matcher::check_subsumption(table);
    for w in &warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(if warnings.is_empty() {
        writeln!(out, "{} rules, no shadowed rules", table.rules.len())?;
        EXIT_OK
    } else {
        EXIT_UNSAT
    })
}
