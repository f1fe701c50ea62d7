//! `fmsat`: command-line front end for fmsat-core.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fmsat_core::backdoor::{
    max_strong_s_backdoor_brute, min_weak_with, BackdoorRegistry, FptSearch, WeakBackdoorSearch,
};
use fmsat_core::cnf::{write_dimacs, Formula, StatsReport};
use fmsat_core::feature_model::{encode_fm, parse_fm};
use fmsat_core::generate::{GenOptions, GenSpec, GeneratorRegistry, Instance};
use fmsat_core::profile::snapshot_profile;
use fmsat_core::report::{
    self, collect_inputs, display_name, read_formula, ExperimentReport, FileError, RunOptions,
};
use fmsat_core::simplify::{simplify_fixed_point, CoreVerdict};
use fmsat_core::solver::{solve, OracleRegistry, SolveReport, SolverConfig, Verdict};

#[derive(Parser)]
#[command(name = "fmsat", version, about = "Feature-model SAT laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Global {
    /// Emit JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Emit CSV where a table is produced.
    #[arg(long, global = true, conflicts_with = "json")]
    csv: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Clause-class statistics per DIMACS file (directories are expanded).
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Tabulate the simplified cores instead.
        #[arg(long)]
        simplify: bool,
        #[arg(long, default_value_t = 5)]
        max_passes: usize,
    },
    /// Simplify to a fixed point and write the core.
    Simplify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trail: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        max_passes: usize,
    },
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        no_learning: bool,
        #[arg(long)]
        no_restarts: bool,
        #[arg(long)]
        no_vsids: bool,
        #[arg(long)]
        conflict_limit: Option<u64>,
    },
    /// Restricted/unrestricted counts along the solver's trail.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        every: u64,
        #[arg(long, default_value = "auto")]
        oracle: String,
    },
    Backdoor {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: BackdoorMode,
        /// Decide size ≤ k instead of searching for the minimum.
        #[arg(long)]
        k: Option<usize>,
        /// Clause length bound for the branching search.
        #[arg(long)]
        d: Option<usize>,
    },
    /// Generate a random instance.
    Gen(GenArgs),
    /// Encode a feature model (JSON) as DIMACS.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the feature-to-variable map as JSON.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    #[command(subcommand)]
    Exp(Exp),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackdoorMode {
    Fpt,
    Brute,
    Strong,
    Audit,
}

#[derive(Args)]
struct GenArgs {
    /// ksat, hornmix or hardfm.
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, conflicts_with = "density")]
    m: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    horn_fraction: Option<f64>,
    #[arg(long, default_value_t = 4)]
    arity: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ExpOut {
    /// Also write per-instance rows as CSV.
    #[arg(long)]
    rows: Option<PathBuf>,
    #[arg(long)]
    wall_time: bool,
}

#[derive(Subcommand)]
enum Exp {
    /// Random 3-SAT density sweep.
    Phase {
        #[arg(long, default_value_t = 75)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        from: f64,
        #[arg(long, default_value_t = 5.5)]
        to: f64,
        #[arg(long, default_value_t = 0.25)]
        step: f64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[command(flatten)]
        out: ExpOut,
    },
    /// Horn-fraction sweep at fixed size.
    Horn {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 850)]
        m: usize,
        /// Comma-separated fractions; defaults to 0.0, 0.1, ..., 1.0.
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[command(flatten)]
        out: ExpOut,
    },
    /// All eight learning/restarts/VSIDS combinations per input and seed.
    Ablation {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        seeds: Vec<u64>,
        #[arg(long)]
        conflict_limit: Option<u64>,
        #[command(flatten)]
        out: ExpOut,
    },
    /// Restricted count and backdoor sizes per input, as JSON lines.
    Audit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

/// A failure caused by the command line rather than the inputs.
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

/// Whether every input was processed.
type Outcome = Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let g = cli.global;
    match cli.command {
        Command::Stats {
            inputs,
            simplify,
            max_passes,
        } => stats(g, &inputs, simplify, max_passes),
        Command::Simplify {
            input,
            out,
            trail,
            max_passes,
        } => simplify(g, &input, out.as_deref(), trail.as_deref(), max_passes),
        Command::Solve {
            input,
            no_learning,
            no_restarts,
            no_vsids,
            conflict_limit,
        } => {
            let cfg = SolverConfig {
                clause_learning: !no_learning,
                restarts: !no_restarts,
                vsids: !no_vsids,
                seed: g.seed,
                conflict_limit,
                ..SolverConfig::default()
            };
            solve_cmd(g, &input, cfg)
        }
        Command::Profile {
            input,
            out,
            every,
            oracle,
        } => profile(g, &input, out.as_deref(), every, &oracle),
        Command::Backdoor { input, mode, k, d } => backdoor(g, &input, mode, k, d),
        Command::Gen(args) => gen(g, &args),
        Command::Encode { input, out, map } => encode(&input, out.as_deref(), map.as_deref()),
        Command::Exp(e) => exp(g, e),
    }
}

fn load(path: &Path) -> Result<Formula> {
    read_formula(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn report_errors(errors: &[FileError]) {
    for e in errors {
        eprintln!("{}: {}", e.name, e.error);
    }
}

fn stats_cells(s: &StatsReport) -> Vec<String> {
    let mut v = vec![s.num_vars.to_string(), s.num_clauses.to_string()];
    v.extend(s.pct_cells());
    v
}

/// Left-aligned first column, right-aligned rest.
fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        for (i, (c, w)) in cells.zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}");
            } else {
                let _ = write!(out, "  {c:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &mut header.iter().copied());
    for r in rows {
        line(&mut out, &mut r.iter().map(String::as_str));
    }
    out
}

fn stats(g: Global, inputs: &[PathBuf], simplify: bool, max_passes: usize) -> Outcome {
    let files = collect_inputs(inputs)?;
    let mut out = Vec::new();
    let ok;
    if simplify {
        let t = report::run_simplify_table(&files, max_passes, run_options(g, false));
        report_errors(&t.errors);
        ok = t.errors.is_empty();
        if g.json {
            serde_json::to_writer_pretty(&mut out, &t)?;
            out.push(b'\n');
        } else if g.csv {
            t.write_csv(&mut out)?;
        } else {
            let rows: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![
                        r.name.clone(),
                        r.input_vars.to_string(),
                        r.input_clauses.to_string(),
                        r.passes_used.to_string(),
                        verdict_name(r.verdict).to_string(),
                    ];
                    v.extend(stats_cells(&r.core));
                    v
                })
                .collect();
            out.extend(text_table(&report::SIMPLIFY_HEADER, &rows).into_bytes());
        }
    } else {
        let t = report::run_stats_table(&files);
        report_errors(&t.errors);
        ok = t.errors.is_empty();
        if g.json {
            serde_json::to_writer_pretty(&mut out, &t)?;
            out.push(b'\n');
        } else if g.csv {
            t.write_csv(&mut out)?;
        } else {
            let rows: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![r.name.clone()];
                    v.extend(stats_cells(&r.stats));
                    v
                })
                .collect();
            out.extend(text_table(&report::STATS_HEADER, &rows).into_bytes());
        }
    }
    io::stdout().write_all(&out)?;
    Ok(ok)
}

fn verdict_name(v: Option<CoreVerdict>) -> &'static str {
    match v {
        Some(CoreVerdict::Sat) => "SAT",
        Some(CoreVerdict::Unsat) => "UNSAT",
        None => "-",
    }
}

fn simplify(
    g: Global,
    input: &Path,
    out: Option<&Path>,
    trail: Option<&Path>,
    max_passes: usize,
) -> Outcome {
    let f = load(input)?;
    let r = simplify_fixed_point(&f, max_passes);
    if let Some(p) = trail {
        let text = serde_json::to_string_pretty(&r.trail)?;
        fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let core = write_dimacs(&r.core);
    if out.is_some() || !g.json {
        emit(out, &core)?;
    }
    let summary = json!({
        "input_vars": f.num_vars(),
        "input_clauses": f.num_clauses(),
        "core_vars": r.core.num_vars(),
        "core_clauses": r.core.num_clauses(),
        "passes_used": r.passes_used,
        "verdict": r.verdict,
    });
    if g.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else if out.is_some() {
        println!(
            "{} vars {} clauses -> {} vars {} clauses in {} passes ({})",
            f.num_vars(),
            f.num_clauses(),
            r.core.num_vars(),
            r.core.num_clauses(),
            r.passes_used,
            verdict_name(r.verdict)
        );
    }
    Ok(true)
}

fn solve_cmd(g: Global, input: &Path, cfg: SolverConfig) -> Outcome {
    let f = load(input)?;
    let r = solve(&f, cfg);
    if g.json {
        println!("{}", serde_json::to_string_pretty(&SolveReport::from(&r))?);
    } else {
        let mut out = String::new();
        match &r.verdict {
            Verdict::Sat(m) => {
                out.push_str("s SATISFIABLE\nv");
                for l in m.to_lits() {
                    let _ = write!(out, " {}", l.to_dimacs());
                }
                out.push_str(" 0\n");
            }
            Verdict::Unsat => out.push_str("s UNSATISFIABLE\n"),
            _ => out.push_str("s UNKNOWN\n"),
        }
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "c decisions {} conflicts {} propagations {} restarts {}",
            m.decisions, m.conflicts, m.propagations, m.restarts_done
        );
        print!("{out}");
    }
    Ok(!matches!(r.verdict, Verdict::Limit))
}

fn profile(g: Global, input: &Path, out: Option<&Path>, every: u64, oracle: &str) -> Outcome {
    if every == 0 {
        return Err(usage("--every must be at least 1"));
    }
    let registry = OracleRegistry::default();
    let Some(o) = registry.get(oracle) else {
        let names: Vec<&str> = registry.names().collect();
        return Err(usage(format!(
            "unknown oracle {oracle}; choose one of {}",
            names.join(", ")
        )));
    };
    let f = load(input)?;
    let cfg = SolverConfig {
        seed: g.seed,
        ..SolverConfig::default()
    };
    let trace = snapshot_profile(&f, cfg, o.as_ref(), every);
    let text = if g.json {
        serde_json::to_string_pretty(&trace)? + "\n"
    } else {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        String::from_utf8(buf)?
    };
    emit(out, &text)?;
    Ok(true)
}

fn backdoor(
    g: Global,
    input: &Path,
    mode: BackdoorMode,
    k: Option<usize>,
    d: Option<usize>,
) -> Outcome {
    if let BackdoorMode::Audit = mode {
        return audit_batch(g, &[input.to_path_buf()]);
    }
    if input.is_dir() {
        return Err(usage("only --mode audit accepts a directory"));
    }
    let f = load(input)?;
    let search: Arc<dyn WeakBackdoorSearch> = match mode {
        BackdoorMode::Fpt => Arc::new(FptSearch { d }),
        BackdoorMode::Brute => BackdoorRegistry::default()
            .get("brute")
            .expect("brute search registered"),
        BackdoorMode::Strong => {
            let s = max_strong_s_backdoor_brute(&f)?;
            if g.json {
                println!(
                    "{}",
                    serde_json::to_string(
                        &json!({"mode": "strong", "size": s.size, "vars": s.vars})
                    )?
                );
            } else if s.size < 0 {
                println!("no strong backdoor (unsatisfiable)");
            } else {
                println!("max strong backdoor size {}: {:?}", s.size, s.vars);
            }
            return Ok(true);
        }
        BackdoorMode::Audit => unreachable!(),
    };
    let lits = |w: &[fmsat_core::Lit]| w.iter().map(|l| l.to_dimacs()).collect::<Vec<_>>();
    match k {
        Some(k) => {
            let out = search.search(&f, k)?;
            let witness = out.witness.as_ref().map(|w| lits(&w.lits));
            if g.json {
                let v = json!({
                    "mode": search.name(), "k": k, "found": witness.is_some(),
                    "witness": witness, "branches": out.branches,
                });
                println!("{}", serde_json::to_string(&v)?);
            } else {
                match &witness {
                    Some(w) => println!("backdoor of size {} within k = {k}: {w:?}", w.len()),
                    None => println!("no backdoor within k = {k}"),
                }
                println!("branches {}", out.branches);
            }
        }
        None => {
            let m = min_weak_with(&f, search.as_ref())?;
            let w = lits(&m.witness.lits);
            if g.json {
                let v = json!({"mode": search.name(), "size": m.size, "witness": w, "branches": m.branches});
                println!("{}", serde_json::to_string(&v)?);
            } else {
                println!("min weak backdoor size {}: {w:?}", m.size);
                println!("branches {}", m.branches);
            }
        }
    }
    Ok(true)
}

/// JSON lines, one per file; unreadable or unauditable files become error
/// lines.
fn audit_batch(g: Global, inputs: &[PathBuf]) -> Outcome {
    let files = collect_inputs(inputs)?;
    let mut loaded = Vec::new();
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut ok = true;
    for (i, p) in files.iter().enumerate() {
        match read_formula(p) {
            Ok(f) => loaded.push((i, display_name(p), f)),
            Err(error) => {
                ok = false;
                lines.push((
                    i,
                    serde_json::to_string(&json!({"source": display_name(p), "error": error}))?,
                ));
            }
        }
    }
    let named: Vec<(String, Formula)> = loaded
        .iter()
        .map(|(_, n, f)| (n.clone(), f.clone()))
        .collect();
    let results = report::run_audit(&named, run_options(g, false));
    for ((i, _, _), r) in loaded.iter().zip(results) {
        let line = match r {
            Ok(rec) => serde_json::to_string(&rec)?,
            Err(e) => {
                ok = false;
                serde_json::to_string(&json!({"source": e.name, "error": e.error}))?
            }
        };
        lines.push((*i, line));
    }
    lines.sort_by_key(|(i, _)| *i);
    let mut out = String::new();
    for (_, l) in lines {
        out.push_str(&l);
        out.push('\n');
    }
    print!("{out}");
    Ok(ok)
}

fn gen(g: Global, a: &GenArgs) -> Outcome {
    let registry = GeneratorRegistry::default();
    let Some(generator) = registry.get(&a.kind) else {
        let names: Vec<&str> = registry.names().collect();
        return Err(usage(format!(
            "unknown generator {}; choose one of {}",
            a.kind,
            names.join(", ")
        )));
    };
    let mut spec = match (a.m, a.density) {
        (Some(m), None) => GenSpec::with_clauses(a.n, m, a.k, g.seed),
        (None, Some(d)) => GenSpec::with_density(a.n, d, a.k, g.seed),
        (None, None) => return Err(usage("give --m or --density")),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    spec.horn_fraction = a.horn_fraction;
    let inst = generator
        .generate(
            &spec,
            &GenOptions {
                tree_arity: a.arity,
            },
        )
        .map_err(|e| usage(e.to_string()))?;
    let text = match inst {
        Instance::Cnf(f) => write_dimacs(&f),
        Instance::FeatureModel(fm) => fm.to_json() + "\n",
    };
    emit(a.out.as_deref(), &text)?;
    Ok(true)
}

fn encode(input: &Path, out: Option<&Path>, map: Option<&Path>) -> Outcome {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let fm = parse_fm(&text).with_context(|| input.display().to_string())?;
    let (f, vars) = encode_fm(&fm);
    let mut dimacs = String::new();
    for (name, fv) in vars.iter() {
        let _ = writeln!(dimacs, "c {} {name}", fv.presence);
        if let Some(s) = fv.static_var {
            let _ = writeln!(dimacs, "c {s} {name}'");
        }
    }
    dimacs.push_str(&write_dimacs(&f));
    emit(out, &dimacs)?;
    if let Some(p) = map {
        let entries: serde_json::Map<String, serde_json::Value> = vars
            .iter()
            .map(|(name, fv)| {
                (
                    name.to_string(),
                    json!({"presence": fv.presence.get(), "static": fv.static_var.map(|s| s.get())}),
                )
            })
            .collect();
        let doc = json!({"features": entries, "aux": vars.num_aux()});
        fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    Ok(true)
}

fn run_options(g: Global, wall: bool) -> RunOptions {
    RunOptions {
        jobs: g.jobs,
        record_wall_time: wall,
    }
}

fn exp(g: Global, e: Exp) -> Outcome {
    let (report, out) = match e {
        Exp::Phase {
            n,
            from,
            to,
            step,
            instances,
            out,
        } => {
            if step <= 0.0 || to < from {
                return Err(usage("need step > 0 and to >= from"));
            }
            let xs = report::grid(from, to, step);
            (
                report::run_phase_transition(
                    n,
                    &xs,
                    instances,
                    g.seed,
                    run_options(g, out.wall_time),
                ),
                out,
            )
        }
        Exp::Horn {
            n,
            m,
            fractions,
            instances,
            out,
        } => {
            let xs = if fractions.is_empty() {
                report::grid(0.0, 1.0, 0.1)
            } else {
                fractions
            };
            if xs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(usage("fractions must lie in [0, 1]"));
            }
            (
                report::run_horn_sweep(n, m, &xs, instances, g.seed, run_options(g, out.wall_time)),
                out,
            )
        }
        Exp::Ablation {
            inputs,
            seeds,
            conflict_limit,
            out,
        } => {
            let files = collect_inputs(&inputs)?;
            let formulas = files
                .iter()
                .map(|p| load(p).map(|f| (display_name(p), f)))
                .collect::<Result<Vec<_>>>()?;
            let base = SolverConfig {
                conflict_limit,
                ..SolverConfig::default()
            };
            (
                report::run_toggle_ablation(&formulas, &seeds, base, run_options(g, out.wall_time)),
                out,
            )
        }
        Exp::Audit { inputs } => return audit_batch(g, &inputs),
    };
    print_report(g, &report, &out)?;
    Ok(true)
}

fn print_report(g: Global, r: &ExperimentReport, out: &ExpOut) -> Result<()> {
    if let Some(p) = &out.rows {
        let file = fs::File::create(p).with_context(|| format!("writing {}", p.display()))?;
        r.write_rows_csv(file)?;
    }
    let mut buf = Vec::new();
    if g.json {
        buf.extend(r.to_json().into_bytes());
        buf.push(b'\n');
    } else if g.csv {
        r.write_cells_csv(&mut buf)?;
    } else {
        let mut header = vec![
            "cell",
            "instances",
            "sat",
            "limits",
            "mean_conf",
            "median_conf",
            "mean_dec",
        ];
        if out.wall_time {
            header.push("mean_ms");
        }
        let rows: Vec<Vec<String>> = r
            .cells
            .iter()
            .map(|c| {
                let mut v = vec![
                    c.key.clone(),
                    c.instances.to_string(),
                    c.sat.to_string(),
                    c.limits.to_string(),
                    format!("{:.1}", c.mean_conflicts),
                    format!("{:.1}", c.median_conflicts),
                    format!("{:.1}", c.mean_decisions),
                ];
                if let Some(w) = c.mean_wall_ms {
                    v.push(format!("{w:.2}"));
                }
                v
            })
            .collect();
        buf.extend(text_table(&header, &rows).into_bytes());
        let limits: usize = r.cells.iter().map(|c| c.limits).sum();
        if limits > 0 {
            buf.extend(format!("{limits} runs hit the conflict limit\n").into_bytes());
        }
    }
    io::stdout().write_all(&buf)?;
    if r.cells.is_empty() {
        bail!("empty experiment");
    }
    Ok(())
}
