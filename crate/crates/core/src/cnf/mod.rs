//! CNF formulas over 1-based variables.
//!
//! A [`Formula`] is immutable once built; every other module in the crate
//! consumes it by reference. Clauses are normalized on construction: duplicate
//! literals are dropped and clauses mentioning a variable in both polarities
//! are flagged as tautologies (but kept).

mod classify;
mod dimacs;
pub mod oracle;

use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify_clause, formula_stats, ClauseClass, StatsReport};
pub use dimacs::{parse_dimacs, write_dimacs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: malformed problem line: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("missing `p cnf` problem line")]
    MissingHeader,
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange { lit: i64, num_vars: usize },
    #[error("last clause is not terminated by 0")]
    MissingTerminator,
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCountMismatch { declared: usize, found: usize },
}

/// A propositional variable. Indices start at 1, as in DIMACS.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(u32);

impl Var {
    /// Panics if `v` is zero.
    pub fn new(v: u32) -> Var {
        assert!(v >= 1, "variables are 1-based");
        Var(v)
    }

    pub fn from_index(idx: usize) -> Var {
        Var(idx as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position, for indexing per-variable containers.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal, packed as `2 * var_index + negated`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(((var.0 - 1) << 1) | (!positive as u32))
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    /// Returns `None` for 0.
    pub fn from_dimacs(v: i64) -> Option<Lit> {
        if v == 0 || v.unsigned_abs() > u32::MAX as u64 {
            return None;
        }
        Some(Lit::new(Var(v.unsigned_abs() as u32), v > 0))
    }

    pub fn var(self) -> Var {
        Var((self.0 >> 1) + 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn is_negative(self) -> bool {
        !self.is_positive()
    }

    /// Dense code in `0..2 * num_vars`, used for watch and occurrence lists.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl Serialize for Lit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i64(self.to_dimacs())
    }
}

impl<'de> Deserialize<'de> for Lit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Lit::from_dimacs(v).ok_or_else(|| serde::de::Error::custom("literal 0 is not valid"))
    }
}

/// A normalized clause: no repeated literals, first-occurrence order kept.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Clause {
    lits: Vec<Lit>,
    tautology: bool,
}

impl Clause {
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Clause {
        let mut out: Vec<Lit> = Vec::new();
        let mut tautology = false;
        for l in lits {
            if out.contains(&l) {
                continue;
            }
            if out.contains(&!l) {
                tautology = true;
            }
            out.push(l);
        }
        Clause {
            lits: out,
            tautology,
        }
    }

    /// Panics on a 0 entry; meant for literals written inline.
    pub fn from_dimacs(lits: &[i64]) -> Clause {
        Clause::new(
            lits.iter()
                .map(|&v| Lit::from_dimacs(v).expect("nonzero literal")),
        )
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn is_tautology(&self) -> bool {
        self.tautology
    }

    pub fn max_var(&self) -> Option<Var> {
        self.lits.iter().map(|l| l.var()).max()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.contains(&lit)
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.lits.iter().any(|&l| a.lit_value(l) == Some(true))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lits {
            write!(f, "{} ", l)?;
        }
        write!(f, "0")
    }
}

/// An immutable CNF formula.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Formula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Formula, CnfError> {
        for c in &clauses {
            if let Some(v) = c.max_var() {
                if v.index() >= num_vars {
                    return Err(CnfError::LiteralOutOfRange {
                        lit: v.get() as i64,
                        num_vars,
                    });
                }
            }
        }
        Ok(Formula { num_vars, clauses })
    }

    /// Builds a formula from DIMACS-style integer clauses. Panics on invalid
    /// input, so it is meant for tests and literals in code.
    pub fn from_dimacs_clauses(num_vars: usize, clauses: &[&[i64]]) -> Formula {
        Formula::new(
            num_vars,
            clauses.iter().map(|c| Clause::from_dimacs(c)).collect(),
        )
        .expect("literal out of range")
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (0..self.num_vars).map(Var::from_index)
    }

    pub fn max_clause_len(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    pub fn num_literals(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.is_satisfied_by(a))
    }

    /// The same formula with extra clauses appended.
    pub fn with_clauses(
        &self,
        extra: impl IntoIterator<Item = Clause>,
    ) -> Result<Formula, CnfError> {
        let mut clauses = self.clauses.clone();
        clauses.extend(extra);
        Formula::new(self.num_vars, clauses)
    }

    /// Per-variable occurrence flags `(positive, negative)`.
    pub fn polarity_occurrences(&self) -> Vec<(bool, bool)> {
        let mut occ = vec![(false, false); self.num_vars];
        for c in &self.clauses {
            for l in c.lits() {
                let e = &mut occ[l.var().index()];
                if l.is_positive() {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
        }
        occ
    }
}

/// A partial assignment over `1..=num_vars`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(num_vars: usize) -> Assignment {
        Assignment {
            values: vec![None; num_vars],
        }
    }

    pub fn from_values(values: Vec<Option<bool>>) -> Assignment {
        Assignment { values }
    }

    pub fn from_bools(values: &[bool]) -> Assignment {
        Assignment {
            values: values.iter().map(|&b| Some(b)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.values.get(v.index()).copied().flatten()
    }

    pub fn set(&mut self, v: Var, value: bool) {
        self.values[v.index()] = Some(value);
    }

    pub fn unset(&mut self, v: Var) {
        self.values[v.index()] = None;
    }

    /// Makes `lit` true.
    pub fn assign(&mut self, lit: Lit) {
        self.set(lit.var(), lit.is_positive());
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.get(lit.var()).map(|b| b == lit.is_positive())
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn num_assigned(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.values
    }

    /// The assigned variables as true literals, in variable order.
    pub fn to_lits(&self) -> Vec<Lit> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|b| Lit::new(Var::from_index(i), b)))
            .collect()
    }

    pub fn unassigned(&self) -> impl Iterator<Item = Var> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| Var::from_index(i))
    }
}
