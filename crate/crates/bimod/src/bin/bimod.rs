//! Command-line front end: gadget generation, exact modularity evaluation,
//! solvers, reduction facts, canonical-restricted verification, and bound
//! fuzzing.
//!
//! Exit codes: 0 on success, 1 when a check fails (a NO answer or a bound
//! violation), 2 on usage or parse errors. Seeded invocations print
//! byte-identical output on every run; `BIMOD_THREADS` caps worker threads.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bimod::graph::{BipartiteGraph, Division};
use bimod::io::{
    parse_assignment, parse_division, parse_graph, parse_instance, render_assignment,
    render_division, render_dot, render_graph,
};
use bimod::lemmas::fuzz_lemmas;
use bimod::modularity::{
    bipartite_modularity, render_decimal, render_exact, standard_modularity, Rational,
};
use bimod::reduction::{
    assignment_value, build_gadget, structured_search, Role, ThreePartitionInstance,
};
use bimod::solvers::{
    alternating_optimize, brute_force_max, greedy_agglomerative, label_propagation, SolveResult,
    ALTERNATING_DEFAULT_ROUNDS,
};

#[derive(Parser)]
#[command(name = "bimod", version, about = "Exact bipartite modularity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Brute,
    Greedy,
    Lp,
    Alt,
}

#[derive(Subcommand)]
enum Command {
    /// Build the gadget graph for an instance and write it as a graph file.
    GenGadget {
        #[arg(long)]
        instance: PathBuf,
        /// Scale the elements by 7 first when 7 does not divide their sum.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write a DOT rendering (red/blue nodes, role clusters).
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the exact and decimal modularity of a division.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        division: PathBuf,
        /// Evaluate the standard modularity Q instead of Q_b.
        #[arg(long)]
        standard: bool,
    },
    /// Maximize Q_b with the chosen method.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Seed for the seeded methods (lp).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the resulting division to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the gadget size and decision threshold of an instance.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        normalize: bool,
        /// Also write the gadget graph file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide the instance over canonical divisions, or verify one
    /// assignment. Exit code 1 on a NO answer.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// Assignment file (JSON array of 1-based biclique indices).
        #[arg(long)]
        assignment: Option<PathBuf>,
    },
    /// Fuzz the structural bound checks on random damaged divisions.
    /// Exit code 1 when any violation is found.
    CheckLemmas {
        #[arg(long)]
        instance: PathBuf,
        /// A single lemma number 1..7, or "all".
        #[arg(long, default_value = "all")]
        lemma: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for counterexample division files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage_failure(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage_failure(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| usage_failure(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<ThreePartitionInstance, Failure> {
    parse_instance(&read_file(path)?).map_err(|e| usage_failure(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<(BipartiteGraph, Option<Vec<Role>>), Failure> {
    parse_graph(&read_file(path)?).map_err(|e| usage_failure(format!("{}: {e}", path.display())))
}

/// Apply or demand normalization depending on the flag.
fn normalize_gated(
    inst: ThreePartitionInstance,
    flag: bool,
    path: &Path,
) -> Result<(ThreePartitionInstance, bool), Failure> {
    if inst.is_normalized() {
        Ok((inst, false))
    } else if flag {
        Ok((inst.normalize(), true))
    } else {
        Err(usage_failure(format!(
            "{}: 7 does not divide a = {}; pass --normalize to scale the elements by 7",
            path.display(),
            inst.total()
        )))
    }
}

/// Normalize unconditionally (the decision is invariant under scaling) and
/// report whether scaling happened.
fn normalize_auto(inst: ThreePartitionInstance) -> (ThreePartitionInstance, bool) {
    if inst.is_normalized() {
        (inst, false)
    } else {
        let scaled = inst.normalize();
        (scaled, true)
    }
}

fn print_rational(label: &str, value: &Rational) {
    println!("{label} = {} ({})", render_exact(value), render_decimal(value));
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::GenGadget { instance, normalize, out, dot } => {
            let inst = load_instance(&instance)?;
            let (inst, scaled) = normalize_gated(inst, normalize, &instance)?;
            if scaled {
                println!("normalized: elements scaled by 7 (a = {})", inst.total());
            }
            let gadget = build_gadget(&inst).map_err(|e| usage_failure(e.to_string()))?;
            println!("n = {}", gadget.graph().vertex_count());
            println!("m = {}", gadget.graph().edge_count());
            write_file(&out, &render_graph(gadget.graph(), Some(gadget.roles())))?;
            println!("wrote {}", out.display());
            if let Some(dot_path) = dot {
                write_file(&dot_path, &render_dot(&gadget))?;
                println!("wrote {}", dot_path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { graph, division, standard } => {
            let (g, roles) = load_graph(&graph)?;
            let d = parse_division(&read_file(&division)?, &g, roles.as_deref())
                .map_err(|e| usage_failure(format!("{}: {e}", division.display())))?;
            if standard {
                let q = standard_modularity(&g, &d).map_err(|e| usage_failure(e.to_string()))?;
                print_rational("Q", &q);
            } else {
                let q = bipartite_modularity(&g, &d).map_err(|e| usage_failure(e.to_string()))?;
                print_rational("Q_b", &q);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve { graph, method, seed, out } => {
            let (g, roles) = load_graph(&graph)?;
            let result: SolveResult = match method {
                MethodArg::Brute => brute_force_max(&g),
                MethodArg::Greedy => greedy_agglomerative(&g),
                MethodArg::Lp => label_propagation(&g, seed),
                MethodArg::Alt => alternating_optimize(
                    &g,
                    &Division::singletons(g.vertex_count()),
                    ALTERNATING_DEFAULT_ROUNDS,
                ),
            }
            .map_err(|e| usage_failure(e.to_string()))?;
            println!("method = {}", result.method);
            if let Some(seed) = result.seed {
                println!("seed = {seed}");
            }
            print_rational("value", &result.value);
            println!("communities = {}", result.division.community_count());
            println!("iterations = {}", result.iterations);
            if let Some(out) = out {
                write_file(&out, &render_division(&g, &result.division, roles.as_deref()))?;
                println!("wrote {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Reduce { instance, normalize, out } => {
            let inst = load_instance(&instance)?;
            let (inst, scaled) = normalize_gated(inst, normalize, &instance)?;
            if scaled {
                println!("normalized: elements scaled by 7 (a = {})", inst.total());
            }
            let threshold = inst.threshold().map_err(|e| usage_failure(e.to_string()))?;
            let n = inst.vertex_count().map_err(|e| usage_failure(e.to_string()))?;
            let m = inst.edge_count().map_err(|e| usage_failure(e.to_string()))?;
            println!("n = {n}");
            println!("m = {m}");
            print_rational("K(A)", &threshold);
            if let Some(out) = out {
                let gadget = build_gadget(&inst).map_err(|e| usage_failure(e.to_string()))?;
                write_file(&out, &render_graph(gadget.graph(), Some(gadget.roles())))?;
                println!("wrote {}", out.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { instance, assignment } => {
            let inst = load_instance(&instance)?;
            let (inst, scaled) = normalize_auto(inst);
            if scaled {
                println!("normalized: elements scaled by 7 (a = {})", inst.total());
            }
            let threshold = inst.threshold().map_err(|e| usage_failure(e.to_string()))?;
            let (decision, value) = match assignment {
                Some(path) => {
                    let t = parse_assignment(&read_file(&path)?, &inst)
                        .map_err(|e| usage_failure(format!("{}: {e}", path.display())))?;
                    let value =
                        assignment_value(&inst, &t).map_err(|e| usage_failure(e.to_string()))?;
                    (value == threshold, value)
                }
                None => {
                    let outcome =
                        structured_search(&inst).map_err(|e| usage_failure(e.to_string()))?;
                    println!("assignments = {}", outcome.evaluated);
                    print!("best = {}", render_assignment(&outcome.best));
                    (outcome.decision, outcome.value)
                }
            };
            println!("{} (canonical-restricted)", if decision { "YES" } else { "NO" });
            print_rational("value", &value);
            print_rational("K(A)", &threshold);
            Ok(if decision { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::CheckLemmas { instance, lemma, trials, seed, out_dir } => {
            let inst = load_instance(&instance)?;
            let (inst, scaled) = normalize_auto(inst);
            if scaled {
                println!("normalized: elements scaled by 7 (a = {})", inst.total());
            }
            let lemmas: Vec<usize> = if lemma == "all" {
                (1..=7).collect()
            } else {
                match lemma.parse::<usize>() {
                    Ok(l) if (1..=7).contains(&l) => vec![l],
                    _ => {
                        return Err(usage_failure(format!(
                            "--lemma must be 1..7 or \"all\", got {lemma:?}"
                        )))
                    }
                }
            };
            let summary = fuzz_lemmas(&inst, &lemmas, trials, seed)
                .map_err(|e| usage_failure(e.to_string()))?;
            let gadget = build_gadget(&inst).map_err(|e| usage_failure(e.to_string()))?;
            for stats in &summary.per_lemma {
                if stats.skipped {
                    println!("lemma {}: skipped (needs k >= 2)", stats.lemma);
                    continue;
                }
                println!(
                    "lemma {}: trials={} violations={}",
                    stats.lemma,
                    stats.trials,
                    stats.violations.len()
                );
                for v in &stats.violations {
                    let name = format!(
                        "counterexample-lemma{}-trial{}.division.json",
                        v.lemma, v.trial
                    );
                    let path = out_dir.join(name);
                    write_file(
                        &path,
                        &render_division(gadget.graph(), &v.division, Some(gadget.roles())),
                    )?;
                    println!("wrote {}", path.display());
                }
            }
            if summary.total_violations() > 0 {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a pipe reader closes early (e.g. `bimod ... | head`)
    // instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
