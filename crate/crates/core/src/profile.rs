//! Restricted and unrestricted variables, and a profiler that classifies the
//! unassigned variables at every step of a solver run.
//!
//! Relative to a partial assignment `S`, a variable is unrestricted when `S`
//! extends to models with either value for it, positively (negatively)
//! restricted when only the true (false) branch extends, and `S` is
//! context-unsatisfiable when neither does.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Assignment, Formula, Lit, Var};
use crate::solver::{
    Metrics, OracleAnswer, SatOracle, SearchEvent, SearchObserver, Solver, SolverConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarStatus {
    Unrestricted,
    PosRestricted,
    NegRestricted,
    ContextUnsat,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("variable {0} is already assigned by the context")]
    Assigned(u32),
    #[error("the oracle could not decide a query about variable {0}")]
    OracleLimit(u32),
    #[error("the formula is unsatisfiable")]
    Unsat,
}

fn context_lits(ctx: &Assignment) -> Vec<Lit> {
    ctx.to_lits()
}

/// Two oracle calls: `f & ctx & v` and `f & ctx & !v`.
pub fn classify_variable(
    f: &Formula,
    ctx: &Assignment,
    v: Var,
    oracle: &dyn SatOracle,
) -> Result<VarStatus, ProfileError> {
    if ctx.get(v).is_some() {
        return Err(ProfileError::Assigned(v.get()));
    }
    let mut assumptions = context_lits(ctx);
    let mut branch = |lit: Lit| -> Result<bool, ProfileError> {
        assumptions.push(lit);
        let answer = oracle.solve_under(f, &assumptions);
        assumptions.pop();
        match answer {
            OracleAnswer::Sat(_) => Ok(true),
            OracleAnswer::Unsat => Ok(false),
            OracleAnswer::Unknown => Err(ProfileError::OracleLimit(v.get())),
        }
    };
    let t = branch(v.pos())?;
    let e = branch(v.neg())?;
    Ok(match (t, e) {
        (true, true) => VarStatus::Unrestricted,
        (true, false) => VarStatus::PosRestricted,
        (false, true) => VarStatus::NegRestricted,
        (false, false) => VarStatus::ContextUnsat,
    })
}

/// Classification of all unassigned variables under one context.
///
/// One call decides the context; its model settles one branch of every
/// variable, and each further model settles more, so only the open branches
/// are queried. `None` entries could not be decided.
pub fn classify_unassigned(
    f: &Formula,
    ctx: &Assignment,
    oracle: &dyn SatOracle,
) -> Vec<(Var, Option<VarStatus>)> {
    let base = context_lits(ctx);
    let open: Vec<Var> = ctx.unassigned().collect();
    let first = match oracle.solve_under(f, &base) {
        OracleAnswer::Sat(m) => m,
        OracleAnswer::Unsat => {
            return open
                .into_iter()
                .map(|v| (v, Some(VarStatus::ContextUnsat)))
                .collect()
        }
        OracleAnswer::Unknown => return open.into_iter().map(|v| (v, None)).collect(),
    };
    let n = f.num_vars();
    // seen[v] = (true branch witnessed, false branch witnessed)
    let mut seen = vec![(false, false); n];
    let note = |m: &Assignment, seen: &mut Vec<(bool, bool)>| {
        for (i, val) in m.values().iter().enumerate().take(n) {
            match val {
                Some(true) => seen[i].0 = true,
                Some(false) => seen[i].1 = true,
                None => {}
            }
        }
    };
    note(&first, &mut seen);
    let mut out = Vec::with_capacity(open.len());
    let mut assumptions = base.clone();
    for v in open {
        let (t, e) = seen[v.index()];
        if t && e {
            out.push((v, Some(VarStatus::Unrestricted)));
            continue;
        }
        // exactly one side is witnessed; query the other
        let missing = Lit::new(v, !t);
        assumptions.push(missing);
        let answer = oracle.solve_under(f, &assumptions);
        assumptions.pop();
        let status = match answer {
            OracleAnswer::Sat(m) => {
                note(&m, &mut seen);
                Some(VarStatus::Unrestricted)
            }
            OracleAnswer::Unsat if t => Some(VarStatus::PosRestricted),
            OracleAnswer::Unsat => Some(VarStatus::NegRestricted),
            OracleAnswer::Unknown => None,
        };
        out.push((v, status));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedReport {
    pub count: usize,
    /// Restricted variables with the only value they take in models.
    pub restricted: Vec<(u32, bool)>,
}

/// Variables restricted with respect to the empty assignment, which are the
/// variables restricted with respect to some partial assignment.
pub fn restricted_count(
    f: &Formula,
    oracle: &dyn SatOracle,
) -> Result<RestrictedReport, ProfileError> {
    let statuses = classify_unassigned(f, &Assignment::new(f.num_vars()), oracle);
    let mut restricted = Vec::new();
    for (v, s) in statuses {
        match s {
            Some(VarStatus::ContextUnsat) => return Err(ProfileError::Unsat),
            Some(VarStatus::PosRestricted) => restricted.push((v.get(), true)),
            Some(VarStatus::NegRestricted) => restricted.push((v.get(), false)),
            Some(VarStatus::Unrestricted) => {}
            None => return Err(ProfileError::OracleLimit(v.get())),
        }
    }
    Ok(RestrictedReport {
        count: restricted.len(),
        restricted,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub unassigned: usize,
    pub unrestricted: usize,
    pub pos_restricted: usize,
    pub neg_restricted: usize,
    pub unknown: usize,
    pub context_unsat: usize,
}

impl StatusCounts {
    fn tally(statuses: &[(Var, Option<VarStatus>)]) -> StatusCounts {
        let mut c = StatusCounts {
            unassigned: statuses.len(),
            ..StatusCounts::default()
        };
        for (_, s) in statuses {
            match s {
                Some(VarStatus::Unrestricted) => c.unrestricted += 1,
                Some(VarStatus::PosRestricted) => c.pos_restricted += 1,
                Some(VarStatus::NegRestricted) => c.neg_restricted += 1,
                Some(VarStatus::ContextUnsat) => c.context_unsat += 1,
                None => c.unknown += 1,
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub decisions: u64,
    pub conflicts: u64,
    #[serde(skip)]
    pub event: Option<SearchEvent>,
    /// Assigned literals in DIMACS form.
    pub assignment: Vec<i64>,
    pub counts: StatusCounts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileTrace {
    /// `v<vars>c<clauses>#<hash>` of the clause list.
    pub formula: String,
    pub config: SolverConfig,
    pub oracle: String,
    pub every: u64,
    pub snapshots: Vec<Snapshot>,
}

pub const CSV_HEADER: [&str; 9] = [
    "tick",
    "decisions",
    "conflicts",
    "unassigned",
    "unrestricted",
    "pos_restricted",
    "neg_restricted",
    "unknown",
    "context_unsat",
];

impl ProfileTrace {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for s in &self.snapshots {
            let c = &s.counts;
            out.write_record(
                [s.tick, s.decisions, s.conflicts]
                    .iter()
                    .map(|x| x.to_string())
                    .chain(
                        [
                            c.unassigned,
                            c.unrestricted,
                            c.pos_restricted,
                            c.neg_restricted,
                            c.unknown,
                            c.context_unsat,
                        ]
                        .iter()
                        .map(|x| x.to_string()),
                    ),
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn formula_id(f: &Formula) -> String {
    let mut h = DefaultHasher::new();
    f.num_vars().hash(&mut h);
    for c in f.clauses() {
        c.lits().hash(&mut h);
        0u8.hash(&mut h);
    }
    format!("v{}c{}#{:016x}", f.num_vars(), f.num_clauses(), h.finish())
}

struct Recorder {
    every: u64,
    last: Option<u64>,
    taken: Vec<(u64, Metrics, SearchEvent, Assignment)>,
}

impl SearchObserver for Recorder {
    fn on_assignment_change(
        &mut self,
        event: SearchEvent,
        metrics: &Metrics,
        assignment: &Assignment,
    ) {
        let tick = metrics.tick();
        let due = match self.last {
            None => true,
            Some(last) => tick > last && tick - last >= self.every,
        };
        if due {
            self.last = Some(tick);
            self.taken
                .push((tick, metrics.clone(), event, assignment.clone()));
        }
    }
}

/// Solves `f` with `cfg`, snapshotting the partial assignment after each
/// decision and backtrack (at least `every` ticks apart), then classifies
/// every unassigned variable of every snapshot with `oracle`.
pub fn snapshot_profile(
    f: &Formula,
    cfg: SolverConfig,
    oracle: &dyn SatOracle,
    every: u64,
) -> ProfileTrace {
    let mut rec = Recorder {
        every: every.max(1),
        last: None,
        taken: Vec::new(),
    };
    Solver::new(f, cfg).solve_observed(&mut rec);
    let snapshots = rec
        .taken
        .into_par_iter()
        .map(|(tick, m, event, a)| {
            let statuses = classify_unassigned(f, &a, oracle);
            Snapshot {
                tick,
                decisions: m.decisions,
                conflicts: m.conflicts,
                event: Some(event),
                assignment: a.to_lits().iter().map(|l| l.to_dimacs()).collect(),
                counts: StatusCounts::tally(&statuses),
            }
        })
        .collect();
    ProfileTrace {
        formula: formula_id(f),
        config: cfg,
        oracle: oracle.name().to_string(),
        every: every.max(1),
        snapshots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::oracle::{backbone_brute, Backbone, BruteLimits, VarForce};
    use crate::solver::oracle::{BruteOracle, CdclOracle};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(n: usize, clauses: &[&[i64]]) -> Formula {
        Formula::from_dimacs_clauses(n, clauses)
    }

    fn ctx(n: usize, lits: &[i64]) -> Assignment {
        let mut a = Assignment::new(n);
        for &l in lits {
            a.assign(Lit::from_dimacs(l).unwrap());
        }
        a
    }

    #[test]
    fn classify_examples() {
        let o = BruteOracle::default();
        let a = Var::new(1);
        let b = Var::new(2);
        assert_eq!(
            classify_variable(&f(2, &[&[1, 2]]), &ctx(2, &[]), a, &o),
            Ok(VarStatus::Unrestricted)
        );
        assert_eq!(
            classify_variable(&f(2, &[&[1], &[1, 2]]), &ctx(2, &[]), a, &o),
            Ok(VarStatus::PosRestricted)
        );
        assert_eq!(
            classify_variable(&f(2, &[&[1, 2]]), &ctx(2, &[-1]), b, &o),
            Ok(VarStatus::PosRestricted)
        );
        assert_eq!(
            classify_variable(&f(1, &[&[1], &[-1]]), &ctx(1, &[]), a, &o),
            Ok(VarStatus::ContextUnsat)
        );
        assert_eq!(
            classify_variable(&f(2, &[&[1, 2]]), &ctx(2, &[-1]), a, &o),
            Err(ProfileError::Assigned(1))
        );
    }

    #[test]
    fn restricted_count_examples() {
        let o = CdclOracle::default();
        assert_eq!(restricted_count(&f(2, &[&[1, 2]]), &o).unwrap().count, 0);
        let r = restricted_count(&f(2, &[&[1], &[1, 2]]), &o).unwrap();
        assert_eq!(r.restricted, vec![(1, true)]);
        let r = restricted_count(&f(2, &[&[1, 2], &[1, -2], &[-1, 2]]), &o).unwrap();
        assert_eq!(r.restricted, vec![(1, true), (2, true)]);
        assert_eq!(
            restricted_count(&f(1, &[&[1], &[-1]]), &o),
            Err(ProfileError::Unsat)
        );
    }

    #[test]
    fn fast_classification_matches_two_call_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = BruteOracle::default();
        for _ in 0..100 {
            let n = rng.gen_range(1..=6usize);
            let clauses: Vec<Vec<i64>> = (0..rng.gen_range(0..=3 * n))
                .map(|_| {
                    (0..rng.gen_range(1..=3))
                        .map(|_| rng.gen_range(1..=n as i64) * if rng.gen() { 1 } else { -1 })
                        .collect()
                })
                .collect();
            let refs: Vec<&[i64]> = clauses.iter().map(|c| c.as_slice()).collect();
            let g = f(n, &refs);
            let mut c = Assignment::new(n);
            for v in 1..=n as u32 {
                if rng.gen_bool(0.3) {
                    c.set(Var::new(v), rng.gen());
                }
            }
            for (v, s) in classify_unassigned(&g, &c, &o) {
                assert_eq!(Some(classify_variable(&g, &c, v, &o).unwrap()), s);
            }
        }
    }

    #[test]
    fn restricted_equals_backbone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.gen_range(1..=8usize);
            let clauses: Vec<Vec<i64>> = (0..rng.gen_range(0..=3 * n))
                .map(|_| {
                    (0..rng.gen_range(1..=3))
                        .map(|_| rng.gen_range(1..=n as i64) * if rng.gen() { 1 } else { -1 })
                        .collect()
                })
                .collect();
            let refs: Vec<&[i64]> = clauses.iter().map(|c| c.as_slice()).collect();
            let g = f(n, &refs);
            match backbone_brute(&g, &BruteLimits::default()).unwrap() {
                Backbone::Unsat => assert!(restricted_count(&g, &CdclOracle::default()).is_err()),
                Backbone::Vars(forces) => {
                    let expected: Vec<(u32, bool)> = forces
                        .iter()
                        .enumerate()
                        .filter_map(|(i, f)| match f {
                            VarForce::ForcedTrue => Some((i as u32 + 1, true)),
                            VarForce::ForcedFalse => Some((i as u32 + 1, false)),
                            VarForce::Free => None,
                        })
                        .collect();
                    assert_eq!(
                        restricted_count(&g, &CdclOracle::default())
                            .unwrap()
                            .restricted,
                        expected
                    );
                }
            }
        }
    }

    #[test]
    fn profile_of_trivial_formulas() {
        let o = BruteOracle::default();
        let t = snapshot_profile(&f(3, &[]), SolverConfig::default(), &o, 1);
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].counts.unrestricted, 3);

        let t = snapshot_profile(&f(2, &[&[1], &[-1, 2]]), SolverConfig::default(), &o, 1);
        assert_eq!(t.snapshots.len(), 1);
        assert_eq!(t.snapshots[0].counts.unassigned, 0);
    }

    #[test]
    fn profile_counts_are_consistent() {
        let spec = crate::generate::GenSpec::with_density(20, 3.0, 3, 4);
        let g = crate::generate::random_ksat(&spec).unwrap();
        let o = BruteOracle::default();
        let t = snapshot_profile(&g, SolverConfig::default(), &o, 1);
        assert!(t.snapshots.windows(2).all(|w| w[0].tick < w[1].tick));
        let first = &t.snapshots[0].counts;
        assert!(2 * first.unrestricted > first.unassigned);
        for s in &t.snapshots {
            let c = &s.counts;
            assert_eq!(
                c.unrestricted + c.pos_restricted + c.neg_restricted + c.unknown + c.context_unsat,
                c.unassigned
            );
            assert!(c.context_unsat == 0 || c.context_unsat == c.unassigned);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tick,decisions,conflicts,unassigned,unrestricted,"));
        assert_eq!(text.lines().count(), t.snapshots.len() + 1);
    }

    #[test]
    fn stride_thins_snapshots() {
        let g =
            crate::generate::random_ksat(&crate::generate::GenSpec::with_density(30, 4.2, 3, 1))
                .unwrap();
        let o = CdclOracle::default();
        let all = snapshot_profile(&g, SolverConfig::default(), &o, 1);
        let some = snapshot_profile(&g, SolverConfig::default(), &o, 5);
        assert!(some.snapshots.len() <= all.snapshots.len());
        assert!(some
            .snapshots
            .windows(2)
            .all(|w| w[1].tick - w[0].tick >= 5));
    }
}
