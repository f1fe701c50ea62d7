//! Satisfiability-preserving simplification to a fixed point.
//!
//! A [`Session`] owns a working copy of the clauses. Each pass mutates it and
//! reports whether anything changed; the default pipeline runs equivalent
//! variable substitution, subsumption, self-subsuming resolution, variable
//! elimination, asymmetric branching, redundancy checking and BCP, in that
//! order, for at most `max_passes` rounds. Steps that lose information about
//! models (substitutions, eliminations, forced literals) go on a trail so a
//! model of the core can be extended to the input.

mod passes;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Assignment, Clause, Formula, Lit, Var};

pub use passes::{
    AsymmetricBranching, Bcp, EquivSubstitution, RCheck, SelfSubsumption, Subsumption,
    VariableElimination,
};

/// One model-relevant step, replayed in reverse by [`reconstruct_model`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReconstructionStep {
    /// `var` takes the value of `equals`.
    Substitution {
        var: Lit,
        equals: Lit,
    },
    /// `var` was resolved away; `pos` and `neg` are the clauses that held it
    /// positively and negatively.
    EliminatedVar {
        var: Lit,
        pos: Vec<Vec<Lit>>,
        neg: Vec<Vec<Lit>>,
    },
    ForcedLiteral {
        lit: Lit,
    },
}

/// Everything needed to map a core model back to the input variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    pub original_vars: usize,
    /// `core_vars[i]` is the input variable behind core variable `i + 1`.
    pub core_vars: Vec<u32>,
    pub steps: Vec<ReconstructionStep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoreVerdict {
    Sat,
    Unsat,
}

#[derive(Clone, Debug)]
pub struct CoreResult {
    /// Remaining clauses over compacted variables `1..=k`.
    pub core: Formula,
    pub trail: Trail,
    pub passes_used: usize,
    /// `Sat` when no clauses remain, `Unsat` when the empty clause was derived.
    pub verdict: Option<CoreVerdict>,
}

/// Working state of one simplification run.
pub struct Session {
    num_vars: usize,
    clauses: Vec<Option<Vec<Lit>>>,
    steps: Vec<ReconstructionStep>,
    unsat: bool,
}

impl Session {
    /// Tautologies are dropped on load.
    pub fn new(f: &Formula) -> Session {
        let clauses: Vec<Option<Vec<Lit>>> = f
            .clauses()
            .iter()
            .filter(|c| !c.is_tautology())
            .map(|c| Some(c.lits().to_vec()))
            .collect();
        let unsat = clauses
            .iter()
            .any(|c| c.as_ref().is_some_and(|c| c.is_empty()));
        Session {
            num_vars: f.num_vars(),
            clauses,
            steps: Vec::new(),
            unsat,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_unsat(&self) -> bool {
        self.unsat
    }

    /// Live clauses with their slot index.
    pub fn live(&self) -> impl Iterator<Item = (usize, &[Lit])> {
        self.clauses
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.as_deref().map(|c| (i, c)))
    }

    pub fn num_live(&self) -> usize {
        self.live().count()
    }

    pub fn steps(&self) -> &[ReconstructionStep] {
        &self.steps
    }

    pub fn push_step(&mut self, step: ReconstructionStep) {
        self.steps.push(step);
    }

    pub fn remove(&mut self, i: usize) -> Option<Vec<Lit>> {
        self.clauses[i].take()
    }

    /// Replaces slot `i`; an empty clause marks the session unsatisfiable.
    pub fn replace(&mut self, i: usize, lits: Vec<Lit>) {
        if lits.is_empty() {
            self.unsat = true;
        }
        self.clauses[i] = Some(lits);
    }

    pub fn add(&mut self, lits: Vec<Lit>) -> usize {
        self.clauses.push(None);
        let i = self.clauses.len() - 1;
        self.replace(i, lits);
        i
    }

    pub fn clause(&self, i: usize) -> Option<&[Lit]> {
        self.clauses.get(i).and_then(|c| c.as_deref())
    }

    pub fn num_slots(&self) -> usize {
        self.clauses.len()
    }

    pub fn set_unsat(&mut self) {
        self.unsat = true;
    }

    /// The live clauses over the original variables.
    pub fn to_formula(&self) -> Formula {
        let mut clauses: Vec<Clause> = self
            .live()
            .map(|(_, c)| Clause::new(c.iter().copied()))
            .collect();
        if self.unsat && !clauses.iter().any(|c| c.is_empty()) {
            clauses.push(Clause::new([]));
        }
        Formula::new(self.num_vars, clauses).expect("simplification introduces no variables")
    }

    /// Live clauses renumbered onto the variables that still occur.
    fn compact(&self) -> (Formula, Vec<u32>) {
        if self.unsat {
            return (Formula::new(0, vec![Clause::new([])]).unwrap(), Vec::new());
        }
        let mut used = vec![false; self.num_vars];
        for (_, c) in self.live() {
            for l in c {
                used[l.var().index()] = true;
            }
        }
        let core_vars: Vec<u32> = (0..self.num_vars)
            .filter(|&v| used[v])
            .map(|v| v as u32 + 1)
            .collect();
        let mut renumber = vec![0u32; self.num_vars];
        for (i, &v) in core_vars.iter().enumerate() {
            renumber[v as usize - 1] = i as u32 + 1;
        }
        let clauses = self
            .live()
            .map(|(_, c)| {
                Clause::new(
                    c.iter()
                        .map(|l| Lit::new(Var::new(renumber[l.var().index()]), l.is_positive())),
                )
            })
            .collect();
        (Formula::new(core_vars.len(), clauses).unwrap(), core_vars)
    }
}

/// A simplification technique.
pub trait Simplification: Send + Sync {
    fn name(&self) -> &'static str;

    /// Applies the technique once; returns whether the clauses changed.
    fn apply(&self, s: &mut Session) -> bool;
}

pub struct PassRegistry {
    passes: BTreeMap<&'static str, Arc<dyn Simplification>>,
}

impl PassRegistry {
    pub fn empty() -> PassRegistry {
        PassRegistry {
            passes: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, p: Arc<dyn Simplification>) {
        self.passes.insert(p.name(), p);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Simplification>> {
        self.passes.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.passes.keys().copied()
    }

    /// Looks up a pipeline by names; `None` if any name is unknown.
    pub fn pipeline(&self, names: &[&str]) -> Option<Vec<Arc<dyn Simplification>>> {
        names.iter().map(|n| self.get(n)).collect()
    }
}

impl Default for PassRegistry {
    fn default() -> Self {
        let mut r = PassRegistry::empty();
        for p in default_pipeline() {
            r.register(p);
        }
        r
    }
}

pub const DEFAULT_MAX_PASSES: usize = 5;

/// The seven techniques in pipeline order.
pub fn default_pipeline() -> Vec<Arc<dyn Simplification>> {
    vec![
        Arc::new(EquivSubstitution),
        Arc::new(Subsumption),
        Arc::new(SelfSubsumption),
        Arc::new(VariableElimination),
        Arc::new(AsymmetricBranching),
        Arc::new(RCheck),
        Arc::new(Bcp),
    ]
}

pub fn simplify_fixed_point(f: &Formula, max_passes: usize) -> CoreResult {
    simplify_with(f, &default_pipeline(), max_passes)
}

/// Runs `pipeline` repeatedly until a round changes nothing, the formula is
/// found unsatisfiable, or `max_passes` rounds have run.
pub fn simplify_with(
    f: &Formula,
    pipeline: &[Arc<dyn Simplification>],
    max_passes: usize,
) -> CoreResult {
    let mut s = Session::new(f);
    let mut passes_used = 0;
    while passes_used < max_passes && !s.unsat {
        passes_used += 1;
        let mut changed = false;
        for p in pipeline {
            changed |= p.apply(&mut s);
            if s.unsat {
                break;
            }
        }
        if !changed {
            break;
        }
    }
    let (core, core_vars) = s.compact();
    let verdict = if s.unsat {
        Some(CoreVerdict::Unsat)
    } else if core.num_clauses() == 0 {
        Some(CoreVerdict::Sat)
    } else {
        None
    };
    CoreResult {
        core,
        trail: Trail {
            original_vars: f.num_vars(),
            core_vars,
            steps: s.steps,
        },
        passes_used,
        verdict,
    }
}

/// Runs one technique once on `f`, keeping the variable numbering.
pub fn apply_once(f: &Formula, pass: &dyn Simplification) -> (Formula, Vec<ReconstructionStep>) {
    let mut s = Session::new(f);
    pass.apply(&mut s);
    (s.to_formula(), s.steps)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("core model has {found} variables, trail expects {expected}")]
    CoreSize { expected: usize, found: usize },
    #[error("core model leaves variable {0} unassigned")]
    Incomplete(usize),
    #[error("step refers to variable {var} beyond the {num_vars} input variables")]
    OutOfRange { var: u32, num_vars: usize },
}

/// Extends a model of the core to a complete model of the input formula.
///
/// Variables that neither the core nor any step mentions are set false.
pub fn reconstruct_model(
    core_model: &Assignment,
    trail: &Trail,
) -> Result<Assignment, ReconstructError> {
    if core_model.num_vars() != trail.core_vars.len() {
        return Err(ReconstructError::CoreSize {
            expected: trail.core_vars.len(),
            found: core_model.num_vars(),
        });
    }
    let n = trail.original_vars;
    let mut values = vec![false; n];
    let check = |v: Var| {
        if v.index() < n {
            Ok(v.index())
        } else {
            Err(ReconstructError::OutOfRange {
                var: v.get(),
                num_vars: n,
            })
        }
    };
    for (i, &orig) in trail.core_vars.iter().enumerate() {
        let value = core_model
            .get(Var::from_index(i))
            .ok_or(ReconstructError::Incomplete(i + 1))?;
        values[check(Var::new(orig))?] = value;
    }
    let lit_true = |values: &[bool], l: Lit| values[l.var().index()] == l.is_positive();
    for step in trail.steps.iter().rev() {
        match step {
            ReconstructionStep::ForcedLiteral { lit } => {
                values[check(lit.var())?] = lit.is_positive();
            }
            ReconstructionStep::Substitution { var, equals } => {
                check(var.var())?;
                let v = lit_true(&values, *equals);
                values[var.var().index()] = v == var.is_positive();
            }
            ReconstructionStep::EliminatedVar { var, pos, .. } => {
                let x = check(var.var())?;
                values[x] = false;
                let needs_true = pos.iter().any(|c| {
                    !c.iter()
                        .any(|&l| l.var().index() != x && lit_true(&values, l))
                });
                values[x] = needs_true;
            }
        }
    }
    Ok(Assignment::from_bools(&values))
}
