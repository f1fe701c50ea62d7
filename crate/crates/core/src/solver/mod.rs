//! A small instrumented CDCL solver and a linear-time Horn decider.
//!
//! The solver's main features (clause learning with backjumping, Luby
//! restarts, VSIDS branching) can each be switched off through
//! [`SolverConfig`]. Nothing here preprocesses the input; simplification
//! lives in [`crate::simplify`].

mod cdcl;
mod heap;
mod horn;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::cnf::{Assignment, Formula, Lit};

pub use cdcl::{luby, Solver};
pub use horn::{solve_horn, HornError, HornVerdict};
pub use oracle::{OracleAnswer, OracleRegistry, SatOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub clause_learning: bool,
    pub restarts: bool,
    pub vsids: bool,
    /// Polarity tried first on every decision.
    pub phase_default: bool,
    /// Seeds the initial VSIDS activity noise.
    pub seed: u64,
    pub conflict_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            clause_learning: true,
            restarts: true,
            vsids: true,
            phase_default: false,
            seed: 0,
            conflict_limit: None,
        }
    }
}

impl SolverConfig {
    /// All eight on/off combinations of learning, restarts and VSIDS, in the
    /// order of their bit pattern (`learning = bit 2`).
    pub fn toggle_grid(base: SolverConfig) -> Vec<SolverConfig> {
        (0..8u8)
            .rev()
            .map(|bits| SolverConfig {
                clause_learning: bits & 4 != 0,
                restarts: bits & 2 != 0,
                vsids: bits & 1 != 0,
                ..base
            })
            .collect()
    }

    /// Short label such as `learn+restart-vsids`.
    pub fn label(&self) -> String {
        let flag = |on: bool| if on { '+' } else { '-' };
        format!(
            "{}learn{}restart{}vsids",
            flag(self.clause_learning),
            flag(self.restarts),
            flag(self.vsids)
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts_done: u64,
    pub max_decision_level: u64,
}

impl Metrics {
    /// The search clock used by the profiler: decisions plus conflicts.
    pub fn tick(&self) -> u64 {
        self.decisions + self.conflicts
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Sat(Assignment),
    Unsat,
    /// The conflict limit was reached before a verdict.
    Limit,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "SAT",
            Verdict::Unsat => "UNSAT",
            Verdict::Limit => "LIMIT",
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub metrics: Metrics,
}

/// JSON shape of a solve result: the model is a list of DIMACS literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub verdict: String,
    pub model: Option<Vec<i64>>,
    pub metrics: Metrics,
}

impl From<&SolveResult> for SolveReport {
    fn from(r: &SolveResult) -> Self {
        SolveReport {
            verdict: r.verdict.name().to_string(),
            model: match &r.verdict {
                Verdict::Sat(m) => Some(m.to_lits().iter().map(|l| l.to_dimacs()).collect()),
                _ => None,
            },
            metrics: r.metrics.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchEvent {
    Start,
    Decision,
    Backtrack,
}

/// Called after propagation settles following the initial propagation, a
/// decision, or a conflict-driven backtrack.
pub trait SearchObserver {
    fn on_assignment_change(
        &mut self,
        event: SearchEvent,
        metrics: &Metrics,
        assignment: &Assignment,
    );
}

pub fn solve(f: &Formula, cfg: SolverConfig) -> SolveResult {
    Solver::new(f, cfg).solve()
}

pub fn solve_with_assumptions(f: &Formula, cfg: SolverConfig, assumptions: &[Lit]) -> SolveResult {
    Solver::new(f, cfg).solve_under(assumptions, None)
}

/// Unit propagation of `a` over `f` to a fixpoint.
///
/// Returns the extended assignment, or `Err(Some(i))` with the index of a
/// clause falsified by propagation. `Err(None)` means `a` itself is
/// inconsistent, which cannot happen for a well-formed [`Assignment`].
pub fn propagate(f: &Formula, a: &Assignment) -> Result<Assignment, Option<usize>> {
    Solver::new(f, SolverConfig::default()).propagate_facts(&a.to_lits())
}
