//! Named satisfiability procedures behind one trait.
//!
//! The profiler, the restricted-variable counter and the CLI pick an oracle
//! by name from an [`OracleRegistry`]. An oracle that cannot conclude (a
//! conflict limit, a brute-force cap, a non-Horn input to the Horn decider)
//! answers [`OracleAnswer::Unknown`] instead of guessing.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{solve_horn, HornVerdict, Solver, SolverConfig, Verdict};
use crate::cnf::oracle::{brute_force_solve_under, BruteLimits, BruteVerdict};
use crate::cnf::{Assignment, Clause, Formula, Lit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    Sat(Assignment),
    Unsat,
    Unknown,
}

pub trait SatOracle: Send + Sync {
    fn name(&self) -> &'static str;

    /// Decides `f` with every literal of `assumptions` forced true.
    fn solve_under(&self, f: &Formula, assumptions: &[Lit]) -> OracleAnswer;

    fn solve(&self, f: &Formula) -> OracleAnswer {
        self.solve_under(f, &[])
    }
}

/// The CDCL solver, optionally bounded by a conflict limit.
#[derive(Clone, Debug, Default)]
pub struct CdclOracle {
    pub config: SolverConfig,
}

impl SatOracle for CdclOracle {
    fn name(&self) -> &'static str {
        "cdcl"
    }

    fn solve_under(&self, f: &Formula, assumptions: &[Lit]) -> OracleAnswer {
        match Solver::new(f, self.config)
            .solve_under(assumptions, None)
            .verdict
        {
            Verdict::Sat(m) => OracleAnswer::Sat(m),
            Verdict::Unsat => OracleAnswer::Unsat,
            Verdict::Limit => OracleAnswer::Unknown,
        }
    }
}

/// Truth-table enumeration over the variables left free by the assumptions.
#[derive(Clone, Debug, Default)]
pub struct BruteOracle {
    pub limits: BruteLimits,
}

impl SatOracle for BruteOracle {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn solve_under(&self, f: &Formula, assumptions: &[Lit]) -> OracleAnswer {
        let mut fixed = Assignment::new(f.num_vars());
        for &l in assumptions {
            if fixed.lit_value(l) == Some(false) {
                return OracleAnswer::Unsat;
            }
            fixed.assign(l);
        }
        match brute_force_solve_under(f, &fixed, &self.limits) {
            Ok(BruteVerdict::Sat(m)) => OracleAnswer::Sat(m),
            Ok(BruteVerdict::Unsat) => OracleAnswer::Unsat,
            Err(_) => OracleAnswer::Unknown,
        }
    }
}

/// Linear-time Horn decider; assumptions are added as unit clauses.
#[derive(Clone, Debug, Default)]
pub struct HornOracle;

impl SatOracle for HornOracle {
    fn name(&self) -> &'static str {
        "horn"
    }

    fn solve_under(&self, f: &Formula, assumptions: &[Lit]) -> OracleAnswer {
        let Ok(g) = f.with_clauses(assumptions.iter().map(|&l| Clause::new([l]))) else {
            return OracleAnswer::Unknown;
        };
        match solve_horn(&g) {
            Ok(HornVerdict::Sat(m)) => OracleAnswer::Sat(m),
            Ok(HornVerdict::Unsat) => OracleAnswer::Unsat,
            Err(_) => OracleAnswer::Unknown,
        }
    }
}

/// Brute force below `threshold` variables, CDCL otherwise.
#[derive(Clone, Debug)]
pub struct AutoOracle {
    pub threshold: usize,
    pub cdcl: CdclOracle,
    pub brute: BruteOracle,
}

impl SatOracle for AutoOracle {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve_under(&self, f: &Formula, assumptions: &[Lit]) -> OracleAnswer {
        if f.num_vars() < self.threshold {
            self.brute.solve_under(f, assumptions)
        } else {
            self.cdcl.solve_under(f, assumptions)
        }
    }
}

pub struct OracleRegistry {
    oracles: BTreeMap<&'static str, Arc<dyn SatOracle>>,
}

impl OracleRegistry {
    pub fn empty() -> OracleRegistry {
        OracleRegistry {
            oracles: BTreeMap::new(),
        }
    }

    /// Registers `cdcl`, `brute`, `horn` and `auto`. `conflict_limit` bounds
    /// the CDCL-backed oracles.
    pub fn with_defaults(conflict_limit: Option<u64>) -> OracleRegistry {
        let cdcl = CdclOracle {
            config: SolverConfig {
                conflict_limit,
                ..SolverConfig::default()
            },
        };
        let mut reg = OracleRegistry::empty();
        reg.register(Arc::new(cdcl.clone()));
        reg.register(Arc::new(BruteOracle::default()));
        reg.register(Arc::new(HornOracle));
        reg.register(Arc::new(AutoOracle {
            threshold: 20,
            cdcl,
            brute: BruteOracle::default(),
        }));
        reg
    }

    pub fn register(&mut self, oracle: Arc<dyn SatOracle>) {
        self.oracles.insert(oracle.name(), oracle);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn SatOracle>> {
        self.oracles.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.oracles.keys().copied()
    }
}

impl Default for OracleRegistry {
    fn default() -> Self {
        OracleRegistry::with_defaults(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Var;

    #[test]
    fn registry_lookup() {
        let reg = OracleRegistry::default();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            vec!["auto", "brute", "cdcl", "horn"]
        );
        assert!(reg.get("minisat").is_none());
    }

    #[test]
    fn oracles_agree_under_assumptions() {
        let reg = OracleRegistry::default();
        let f = Formula::from_dimacs_clauses(3, &[&[-1, 2], &[-2, 3]]);
        for name in reg.names() {
            let o = reg.get(name).unwrap();
            assert!(matches!(o.solve(&f), OracleAnswer::Sat(_)), "{name}");
            let ans = o.solve_under(&f, &[Var::new(1).pos(), Var::new(3).neg()]);
            assert_eq!(ans, OracleAnswer::Unsat, "{name}");
            match o.solve_under(&f, &[Var::new(1).pos()]) {
                OracleAnswer::Sat(m) => {
                    assert!(f.is_satisfied_by(&m) && m.get(Var::new(3)) == Some(true))
                }
                other => panic!("{name}: {other:?}"),
            }
        }
    }

    #[test]
    fn horn_oracle_declines_non_horn() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2]]);
        assert_eq!(HornOracle.solve(&f), OracleAnswer::Unknown);
    }

    #[test]
    fn contradictory_assumptions() {
        let f = Formula::from_dimacs_clauses(1, &[]);
        let a = [Var::new(1).pos(), Var::new(1).neg()];
        assert_eq!(
            BruteOracle::default().solve_under(&f, &a),
            OracleAnswer::Unsat
        );
        assert_eq!(
            CdclOracle::default().solve_under(&f, &a),
            OracleAnswer::Unsat
        );
    }
}
