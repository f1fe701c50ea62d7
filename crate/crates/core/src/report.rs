//! Experiment drivers and tabular reports.
//!
//! Every report is a function of its inputs, parameters and seeds. Wall time
//! is left out unless asked for, so two runs print the same bytes. Instance
//! seeds for cell `c` come from a ChaCha8 stream: the experiment seed picks
//! the key and `c` picks the stream.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backdoor::{theorem_audit, AuditRecord};
use crate::cnf::{formula_stats, parse_dimacs, Formula, StatsReport};
use crate::generate::{random_ksat, random_ksat_horn_mix, GenSpec};
use crate::simplify::{simplify_fixed_point, CoreVerdict};
use crate::solver::{solve, SolveResult, SolverConfig};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `0` lets rayon decide.
    pub jobs: usize,
    pub record_wall_time: bool,
}

impl RunOptions {
    fn run<T: Send>(&self, work: impl FnOnce() -> T + Send) -> T {
        if self.jobs == 0 {
            return work();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
        {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub cell: String,
    pub instance: String,
    pub seed: u64,
    pub verdict: String,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub key: String,
    /// The swept parameter, when numeric.
    pub x: Option<f64>,
    pub instances: usize,
    pub sat: usize,
    pub limits: usize,
    pub mean_conflicts: f64,
    pub median_conflicts: f64,
    pub mean_decisions: f64,
    pub median_decisions: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Vec<(String, String)>,
    pub seed: u64,
    pub cells: Vec<Cell>,
    pub rows: Vec<InstanceRow>,
}

fn mean(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
    }
}

pub fn median(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    }
}

impl Cell {
    /// Aggregates the rows belonging to `key`.
    pub fn from_rows(key: &str, x: Option<f64>, rows: &[InstanceRow]) -> Cell {
        let mine: Vec<&InstanceRow> = rows.iter().filter(|r| r.cell == key).collect();
        let conflicts: Vec<u64> = mine.iter().map(|r| r.conflicts).collect();
        let decisions: Vec<u64> = mine.iter().map(|r| r.decisions).collect();
        let walls: Option<Vec<f64>> = mine.iter().map(|r| r.wall_ms).collect();
        Cell {
            key: key.to_string(),
            x,
            instances: mine.len(),
            sat: mine.iter().filter(|r| r.verdict == "SAT").count(),
            limits: mine.iter().filter(|r| r.verdict == "LIMIT").count(),
            mean_conflicts: mean(&conflicts),
            median_conflicts: median(&conflicts),
            mean_decisions: mean(&decisions),
            median_decisions: median(&decisions),
            mean_wall_ms: walls
                .filter(|w| !w.is_empty())
                .map(|w| w.iter().sum::<f64>() / w.len() as f64),
        }
    }
}

impl ExperimentReport {
    pub fn cell(&self, key: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.key == key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_cells_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.cells {
            out.serialize(c)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_rows_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The `count` instance seeds of cell `cell`.
pub fn cell_seeds(seed: u64, cell: usize, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    (0..count).map(|_| rng.next_u64()).collect()
}

fn row(cell: &str, instance: String, seed: u64, r: &SolveResult, wall: Option<f64>) -> InstanceRow {
    InstanceRow {
        cell: cell.to_string(),
        instance,
        seed,
        verdict: r.verdict.name().to_string(),
        conflicts: r.metrics.conflicts,
        decisions: r.metrics.decisions,
        propagations: r.metrics.propagations,
        restarts: r.metrics.restarts_done,
        wall_ms: wall,
    }
}

fn timed(record: bool, work: impl FnOnce() -> SolveResult) -> (SolveResult, Option<f64>) {
    let start = Instant::now();
    let r = work();
    (r, record.then(|| start.elapsed().as_secs_f64() * 1e3))
}

/// Runs a one-parameter random sweep. `make` builds the instance of a cell
/// value and seed.
fn sweep(
    experiment: &str,
    name: &str,
    xs: &[f64],
    instances: usize,
    seed: u64,
    cfg: SolverConfig,
    opts: RunOptions,
    parameters: Vec<(String, String)>,
    make: impl Fn(f64, u64) -> Formula + Sync,
) -> ExperimentReport {
    let keys: Vec<String> = xs.iter().map(|x| format!("{name}={x}")).collect();
    let jobs: Vec<(usize, usize, u64)> = xs
        .iter()
        .enumerate()
        .flat_map(|(c, _)| {
            cell_seeds(seed, c, instances)
                .into_iter()
                .enumerate()
                .map(move |(i, s)| (c, i, s))
        })
        .collect();
    let rows: Vec<InstanceRow> = opts.run(|| {
        jobs.par_iter()
            .map(|&(c, i, s)| {
                let f = make(xs[c], s);
                let (r, wall) = timed(opts.record_wall_time, || solve(&f, cfg));
                row(&keys[c], i.to_string(), s, &r, wall)
            })
            .collect()
    });
    let cells = keys
        .iter()
        .zip(xs)
        .map(|(k, &x)| Cell::from_rows(k, Some(x), &rows))
        .collect();
    ExperimentReport {
        experiment: experiment.to_string(),
        parameters,
        seed,
        cells,
        rows,
    }
}

/// Densities `from, from + step, ...` up to `to` inclusive, rounded to
/// avoid accumulation drift.
pub fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| ((from + i as f64 * step) * 1e6).round() / 1e6)
        .collect()
}

/// Random 3-SAT over `n` variables at each density, solved with the default
/// configuration.
pub fn run_phase_transition(
    n: usize,
    densities: &[f64],
    instances: usize,
    seed: u64,
    opts: RunOptions,
) -> ExperimentReport {
    sweep(
        "phase",
        "density",
        densities,
        instances,
        seed,
        SolverConfig::default(),
        opts,
        vec![
            ("n".into(), n.to_string()),
            ("k".into(), "3".into()),
            ("instances".into(), instances.to_string()),
        ],
        |d, s| {
            random_ksat(&GenSpec::with_density(n, d, 3, s)).expect("valid phase-transition spec")
        },
    )
}

/// Random 3-SAT with `n` variables and `m` clauses at each Horn fraction.
pub fn run_horn_sweep(
    n: usize,
    m: usize,
    fractions: &[f64],
    instances: usize,
    seed: u64,
    opts: RunOptions,
) -> ExperimentReport {
    sweep(
        "horn",
        "horn_fraction",
        fractions,
        instances,
        seed,
        SolverConfig::default(),
        opts,
        vec![
            ("n".into(), n.to_string()),
            ("m".into(), m.to_string()),
            ("k".into(), "3".into()),
            ("instances".into(), instances.to_string()),
        ],
        |p, s| {
            let spec = GenSpec {
                horn_fraction: Some(p),
                ..GenSpec::with_clauses(n, m, 3, s)
            };
            random_ksat_horn_mix(&spec).expect("valid Horn-mix spec")
        },
    )
}

/// Solves each input under all eight on/off combinations of learning,
/// restarts and VSIDS, once per seed. One cell per configuration.
pub fn run_toggle_ablation(
    inputs: &[(String, Formula)],
    seeds: &[u64],
    base: SolverConfig,
    opts: RunOptions,
) -> ExperimentReport {
    let grid = SolverConfig::toggle_grid(base);
    let jobs: Vec<(usize, usize, u64)> = (0..grid.len())
        .flat_map(|g| (0..inputs.len()).flat_map(move |i| seeds.iter().map(move |&s| (g, i, s))))
        .collect();
    let rows: Vec<InstanceRow> = opts.run(|| {
        jobs.par_iter()
            .map(|&(g, i, s)| {
                let cfg = SolverConfig { seed: s, ..grid[g] };
                let (r, wall) = timed(opts.record_wall_time, || solve(&inputs[i].1, cfg));
                row(&grid[g].label(), inputs[i].0.clone(), s, &r, wall)
            })
            .collect()
    });
    let cells = grid
        .iter()
        .map(|c| Cell::from_rows(&c.label(), None, &rows))
        .collect();
    ExperimentReport {
        experiment: "ablation".into(),
        parameters: vec![
            ("inputs".into(), inputs.len().to_string()),
            (
                "seeds".into(),
                seeds
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
            (
                "conflict_limit".into(),
                base.conflict_limit.map_or("none".into(), |l| l.to_string()),
            ),
        ],
        seed: seeds.first().copied().unwrap_or(0),
        cells,
        rows,
    }
}

/// Files named by `paths`, with directories expanded to their files in
/// name order.
pub fn collect_inputs(paths: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn read_formula(path: &Path) -> Result<Formula, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    parse_dimacs(&text).map_err(|e| e.to_string())
}

pub fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub name: String,
    #[serde(flatten)]
    pub stats: StatsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileError {
    pub name: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
    pub errors: Vec<FileError>,
}

pub const STATS_HEADER: [&str; 8] = [
    "name",
    "vars",
    "clauses",
    "horn",
    "anti_horn",
    "binary",
    "other",
    "pure_vars",
];

impl StatsTable {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(STATS_HEADER)?;
        for r in &self.rows {
            let mut rec = vec![
                r.name.clone(),
                r.stats.num_vars.to_string(),
                r.stats.num_clauses.to_string(),
            ];
            rec.extend(r.stats.pct_cells());
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Clause-class statistics per file; unreadable files are listed as errors.
pub fn run_stats_table(inputs: &[PathBuf]) -> StatsTable {
    let mut table = StatsTable::default();
    for p in inputs {
        match read_formula(p) {
            Ok(f) => table.rows.push(StatsRow {
                name: display_name(p),
                stats: formula_stats(&f),
            }),
            Err(error) => table.errors.push(FileError {
                name: display_name(p),
                error,
            }),
        }
    }
    table
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplifyRow {
    pub name: String,
    pub input_vars: usize,
    pub input_clauses: usize,
    pub passes_used: usize,
    pub verdict: Option<CoreVerdict>,
    /// Statistics of the core.
    pub core: StatsReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimplifyTable {
    pub rows: Vec<SimplifyRow>,
    pub errors: Vec<FileError>,
}

pub const SIMPLIFY_HEADER: [&str; 12] = [
    "name",
    "input_vars",
    "input_clauses",
    "passes",
    "verdict",
    "vars",
    "clauses",
    "horn",
    "anti_horn",
    "binary",
    "other",
    "pure_vars",
];

impl SimplifyTable {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SIMPLIFY_HEADER)?;
        for r in &self.rows {
            let verdict = match r.verdict {
                Some(CoreVerdict::Sat) => "SAT",
                Some(CoreVerdict::Unsat) => "UNSAT",
                None => "",
            };
            let mut rec = vec![
                r.name.clone(),
                r.input_vars.to_string(),
                r.input_clauses.to_string(),
                r.passes_used.to_string(),
                verdict.to_string(),
                r.core.num_vars.to_string(),
                r.core.num_clauses.to_string(),
            ];
            rec.extend(r.core.pct_cells());
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn simplify_row(name: &str, f: &Formula, max_passes: usize) -> SimplifyRow {
    let r = simplify_fixed_point(f, max_passes);
    SimplifyRow {
        name: name.to_string(),
        input_vars: f.num_vars(),
        input_clauses: f.num_clauses(),
        passes_used: r.passes_used,
        verdict: r.verdict,
        core: formula_stats(&r.core),
    }
}

/// Simplifies each file to a fixed point and tabulates its core.
pub fn run_simplify_table(
    inputs: &[PathBuf],
    max_passes: usize,
    opts: RunOptions,
) -> SimplifyTable {
    let results: Vec<(String, Result<SimplifyRow, String>)> = opts.run(|| {
        inputs
            .par_iter()
            .map(|p| {
                let name = display_name(p);
                let row = read_formula(p).map(|f| simplify_row(&name, &f, max_passes));
                (name, row)
            })
            .collect()
    });
    let mut table = SimplifyTable::default();
    for (name, r) in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(error) => table.errors.push(FileError { name, error }),
        }
    }
    table
}

/// One audit record (or error) per input, in input order.
pub fn run_audit(
    inputs: &[(String, Formula)],
    opts: RunOptions,
) -> Vec<Result<AuditRecord, FileError>> {
    opts.run(|| {
        inputs
            .par_iter()
            .map(|(name, f)| {
                theorem_audit(f)
                    .map(|mut a| {
                        a.source = Some(name.clone());
                        a
                    })
                    .map_err(|e| FileError {
                        name: name.clone(),
                        error: e.to_string(),
                    })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians_and_grids() {
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 2, 3]), 2.5);
        assert_eq!(median(&[]), 0.0);
        let g = grid(3.0, 5.5, 0.25);
        assert_eq!(g.len(), 11);
        assert_eq!(g[4], 4.0);
        assert_eq!(*g.last().unwrap(), 5.5);
    }

    #[test]
    fn seeds_differ_across_cells_and_repeat_across_runs() {
        assert_eq!(cell_seeds(1, 0, 5), cell_seeds(1, 0, 5));
        assert_ne!(cell_seeds(1, 0, 5), cell_seeds(1, 1, 5));
        assert_ne!(cell_seeds(1, 0, 5), cell_seeds(2, 0, 5));
    }

    #[test]
    fn tiny_phase_run_is_well_formed_and_repeatable() {
        let opts = RunOptions::default();
        let a = run_phase_transition(10, &[3.0, 4.0], 4, 7, opts);
        assert_eq!(a.cells.len(), 2);
        assert!(a.cells.iter().all(|c| c.instances == 4));
        assert_eq!(a.rows.len(), 8);
        let b = run_phase_transition(10, &[3.0, 4.0], 4, 7, RunOptions { jobs: 1, ..opts });
        assert_eq!(a.to_json(), b.to_json());
        // aggregates can be recomputed from the rows
        for c in &a.cells {
            assert_eq!(Cell::from_rows(&c.key, c.x, &a.rows), *c);
        }
        let back: ExperimentReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn horn_fraction_one_needs_no_conflicts() {
        let r = run_horn_sweep(30, 120, &[1.0], 5, 3, RunOptions::default());
        assert_eq!(r.cells[0].mean_conflicts, 0.0);
    }

    #[test]
    fn ablation_has_eight_cells() {
        let f = random_ksat(&GenSpec::with_density(20, 3.0, 3, 1)).unwrap();
        let r = run_toggle_ablation(
            &[("a".into(), f)],
            &[1, 2],
            SolverConfig::default(),
            RunOptions::default(),
        );
        assert_eq!(r.cells.len(), 8);
        assert!(r.cells.iter().all(|c| c.instances == 2 && c.sat == 2));
        let mut buf = Vec::new();
        r.write_cells_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("key,x,instances,sat,limits,mean_conflicts,"));
        assert_eq!(text.lines().count(), 9);
    }

    #[test]
    fn stats_row_for_two_units() {
        let dir = std::env::temp_dir().join(format!("fmsat-stats-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("a.cnf"), "p cnf 2 2\n1 0\n2 0\n").unwrap();
        std::fs::write(dir.join("b.cnf"), "garbage").unwrap();
        let files = collect_inputs(&[dir.clone()]).unwrap();
        let t = run_stats_table(&files);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.errors.len(), 1);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "a.cnf,2,2,100.00,100.00,0.00,0.00,100.00"
        );

        let s = run_simplify_table(&files, 5, RunOptions::default());
        assert_eq!(s.rows[0].verdict, Some(CoreVerdict::Sat));
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "a.cnf,2,2,2,SAT,0,0,NA,NA,NA,NA,NA"
        );
        std::fs::remove_dir_all(&dir).unwrap();

        let empty = std::env::temp_dir().join(format!("fmsat-empty-{}", std::process::id()));
        std::fs::create_dir_all(&empty).unwrap();
        assert!(run_stats_table(&collect_inputs(&[empty.clone()]).unwrap())
            .rows
            .is_empty());
        std::fs::remove_dir_all(&empty).unwrap();
    }
}
