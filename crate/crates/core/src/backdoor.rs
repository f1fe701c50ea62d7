//! Weak backdoors into the empty formula, strong backdoors into the
//! satisfiable formulas, and an audit relating both to restricted variables.
//!
//! The reduct of a formula under a partial assignment deletes satisfied
//! clauses and false literals, with no propagation. A weak E backdoor is then
//! a variable set with an assignment that satisfies every clause by itself;
//! a strong S backdoor is a set all of whose assignments leave a satisfiable
//! reduct. Tautologies are satisfied by every assignment and are ignored.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::oracle::{
    backbone_brute, brute_force_solve, enumerate_models, Backbone, BruteLimits, OracleError,
};
use crate::cnf::{Assignment, Formula, Lit, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackdoorError {
    #[error("clause {index} has {len} literals, more than d = {d}")]
    ClauseTooLong { index: usize, len: usize, d: usize },
    #[error("{what} needs at most {max} variables, the formula has {n}")]
    TooManyVars {
        what: &'static str,
        max: usize,
        n: usize,
    },
    #[error("budget k = {k} is above the brute-force maximum {max}")]
    BudgetTooLarge { k: usize, max: usize },
    #[error("the formula is unsatisfiable")]
    Unsat,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakBackdoorWitness {
    /// One literal per backdoor variable, ascending by variable.
    pub lits: Vec<Lit>,
}

impl WeakBackdoorWitness {
    fn from_lits(mut lits: Vec<Lit>) -> WeakBackdoorWitness {
        lits.sort();
        WeakBackdoorWitness { lits }
    }

    pub fn size(&self) -> usize {
        self.lits.len()
    }

    pub fn vars(&self) -> Vec<Var> {
        self.lits.iter().map(|l| l.var()).collect()
    }

    /// Whether the assignment satisfies every non-tautological clause alone.
    pub fn satisfies(&self, f: &Formula) -> bool {
        f.clauses()
            .iter()
            .all(|c| c.is_tautology() || c.lits().iter().any(|l| self.lits.contains(l)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub witness: Option<WeakBackdoorWitness>,
    /// Leaves of the search tree for the branching search; candidate
    /// assignments tried for brute force.
    pub branches: u64,
}

/// A procedure deciding whether a weak E backdoor of size at most `k` exists.
pub trait WeakBackdoorSearch: Send + Sync {
    fn name(&self) -> &'static str;

    fn search(&self, f: &Formula, k: usize) -> Result<SearchOutcome, BackdoorError>;
}

/// Branching on the literals of the first clause not yet satisfied; at most
/// `d^k` leaves.
#[derive(Clone, Copy, Debug, Default)]
pub struct FptSearch {
    /// Maximum clause length; the formula's own maximum when `None`.
    pub d: Option<usize>,
}

struct Branching<'a> {
    clauses: Vec<&'a [Lit]>,
    value: Vec<Option<bool>>,
    chosen: Vec<Lit>,
    leaves: u64,
}

impl Branching<'_> {
    fn lit_true(&self, l: Lit) -> bool {
        self.value[l.var().index()] == Some(l.is_positive())
    }

    fn go(&mut self, k: usize) -> bool {
        let Some(ci) = self
            .clauses
            .iter()
            .position(|c| !c.iter().any(|&l| self.lit_true(l)))
        else {
            self.leaves += 1;
            return true;
        };
        if k == 0 {
            self.leaves += 1;
            return false;
        }
        let mut branched = false;
        for i in 0..self.clauses[ci].len() {
            let l = self.clauses[ci][i];
            if self.value[l.var().index()].is_some() {
                // already false: setting it true would assign the variable both ways
                continue;
            }
            branched = true;
            self.value[l.var().index()] = Some(l.is_positive());
            self.chosen.push(l);
            if self.go(k - 1) {
                return true;
            }
            self.chosen.pop();
            self.value[l.var().index()] = None;
        }
        if !branched {
            self.leaves += 1;
        }
        false
    }
}

impl WeakBackdoorSearch for FptSearch {
    fn name(&self) -> &'static str {
        "fpt"
    }

    fn search(&self, f: &Formula, k: usize) -> Result<SearchOutcome, BackdoorError> {
        let d = self.d.unwrap_or_else(|| f.max_clause_len());
        for (index, c) in f.clauses().iter().enumerate() {
            if c.len() > d {
                return Err(BackdoorError::ClauseTooLong {
                    index,
                    len: c.len(),
                    d,
                });
            }
        }
        let mut b = Branching {
            clauses: f
                .clauses()
                .iter()
                .filter(|c| !c.is_tautology())
                .map(|c| c.lits())
                .collect(),
            value: vec![None; f.num_vars()],
            chosen: Vec::new(),
            leaves: 0,
        };
        let found = b.go(k);
        Ok(SearchOutcome {
            witness: found.then(|| WeakBackdoorWitness::from_lits(b.chosen)),
            branches: b.leaves,
        })
    }
}

pub const BRUTE_MAX_VARS: usize = 20;
pub const BRUTE_MAX_K: usize = 6;
pub const STRONG_MAX_VARS: usize = 14;

/// Every subset of at most `k` variables with every assignment, smallest
/// subsets first.
#[derive(Clone, Copy, Debug, Default)]
pub struct BruteSearch;

/// Calls `visit` on each `size`-subset of `0..n` as a bitmask, in
/// lexicographic order of the sorted index lists; stops when it returns true.
fn for_each_subset(n: usize, size: usize, mut visit: impl FnMut(u64) -> bool) -> bool {
    if size > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if visit(idx.iter().fold(0u64, |m, &i| m | 1 << i)) {
            return true;
        }
        let Some(i) = (0..size).rev().find(|&i| idx[i] < n - size + i) else {
            return false;
        };
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn clause_masks(f: &Formula) -> Vec<(u64, u64)> {
    f.clauses()
        .iter()
        .filter(|c| !c.is_tautology())
        .map(|c| {
            c.lits().iter().fold((0u64, 0u64), |(p, n), l| {
                let bit = 1u64 << l.var().index();
                if l.is_positive() {
                    (p | bit, n)
                } else {
                    (p, n | bit)
                }
            })
        })
        .collect()
}

/// Spreads the low bits of `pattern` over the set bits of `mask`.
fn deposit(pattern: u64, mask: u64) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    let mut i = 0;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        if pattern >> i & 1 == 1 {
            out |= bit;
        }
        m ^= bit;
        i += 1;
    }
    out
}

impl WeakBackdoorSearch for BruteSearch {
    fn name(&self) -> &'static str {
        "brute"
    }

    fn search(&self, f: &Formula, k: usize) -> Result<SearchOutcome, BackdoorError> {
        let n = f.num_vars();
        if n > BRUTE_MAX_VARS {
            return Err(BackdoorError::TooManyVars {
                what: "brute-force weak backdoor search",
                max: BRUTE_MAX_VARS,
                n,
            });
        }
        if k > BRUTE_MAX_K {
            return Err(BackdoorError::BudgetTooLarge {
                k,
                max: BRUTE_MAX_K,
            });
        }
        let masks = clause_masks(f);
        let mut tried = 0u64;
        for size in 0..=k.min(n) {
            let mut hit = None;
            for_each_subset(n, size, |set| {
                for pattern in 0..1u64 << size {
                    tried += 1;
                    let bits = deposit(pattern, set);
                    if masks
                        .iter()
                        .all(|&(p, q)| p & set & bits != 0 || q & set & !bits != 0)
                    {
                        hit = Some((set, bits));
                        return true;
                    }
                }
                false
            });
            if let Some((set, bits)) = hit {
                let lits = (0..n)
                    .filter(|&i| set >> i & 1 == 1)
                    .map(|i| Lit::new(Var::from_index(i), bits >> i & 1 == 1))
                    .collect();
                return Ok(SearchOutcome {
                    witness: Some(WeakBackdoorWitness::from_lits(lits)),
                    branches: tried,
                });
            }
        }
        Ok(SearchOutcome {
            witness: None,
            branches: tried,
        })
    }
}

pub struct BackdoorRegistry {
    searches: BTreeMap<&'static str, Arc<dyn WeakBackdoorSearch>>,
}

impl BackdoorRegistry {
    pub fn empty() -> BackdoorRegistry {
        BackdoorRegistry {
            searches: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, s: Arc<dyn WeakBackdoorSearch>) {
        self.searches.insert(s.name(), s);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn WeakBackdoorSearch>> {
        self.searches.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.searches.keys().copied()
    }
}

impl Default for BackdoorRegistry {
    fn default() -> Self {
        let mut r = BackdoorRegistry::empty();
        r.register(Arc::new(FptSearch::default()));
        r.register(Arc::new(BruteSearch));
        r
    }
}

pub fn weak_e_backdoor_fpt(
    f: &Formula,
    k: usize,
    d: usize,
) -> Result<SearchOutcome, BackdoorError> {
    FptSearch { d: Some(d) }.search(f, k)
}

pub fn weak_e_backdoor_brute(f: &Formula, k: usize) -> Result<SearchOutcome, BackdoorError> {
    BruteSearch.search(f, k)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinBackdoor {
    pub size: usize,
    pub witness: WeakBackdoorWitness,
    /// Leaves summed over all budgets tried.
    pub branches: u64,
}

/// Smallest weak E backdoor by trying `k = 0, 1, 2, ...`.
pub fn min_weak_e_backdoor(f: &Formula, d: usize) -> Result<MinBackdoor, BackdoorError> {
    min_weak_with(f, &FptSearch { d: Some(d) })
}

pub fn min_weak_with(
    f: &Formula,
    search: &dyn WeakBackdoorSearch,
) -> Result<MinBackdoor, BackdoorError> {
    let mut branches = 0;
    for k in 0..=f.num_vars() {
        let out = search.search(f, k)?;
        branches += out.branches;
        if let Some(w) = out.witness {
            return Ok(MinBackdoor {
                size: w.size(),
                witness: w,
                branches,
            });
        }
    }
    Err(BackdoorError::Unsat)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongBackdoor {
    /// `-1` when the formula is unsatisfiable and no set qualifies.
    pub size: i64,
    pub vars: Vec<u32>,
}

/// Largest strong S backdoor. A set qualifies exactly when the models of the
/// formula, projected on it, cover every assignment of it; that property is
/// closed under subsets, so sizes are tried from `n` down and the first
/// (lexicographically smallest) qualifying set is returned.
pub fn max_strong_s_backdoor_brute(f: &Formula) -> Result<StrongBackdoor, BackdoorError> {
    let n = f.num_vars();
    if n > STRONG_MAX_VARS {
        return Err(BackdoorError::TooManyVars {
            what: "strong backdoor search",
            max: STRONG_MAX_VARS,
            n,
        });
    }
    let models = enumerate_models(f, &BruteLimits::default())?;
    if models.is_empty() {
        return Ok(StrongBackdoor {
            size: -1,
            vars: Vec::new(),
        });
    }
    let mut seen = vec![false; 1 << n];
    for size in (0..=n).rev() {
        let mut found = None;
        for_each_subset(n, size, |set| {
            let patterns = &mut seen[..1 << size];
            patterns.iter_mut().for_each(|x| *x = false);
            let mut covered = 0usize;
            for &m in &models {
                let p = extract(m, set) as usize;
                if !patterns[p] {
                    patterns[p] = true;
                    covered += 1;
                    if covered == patterns.len() {
                        found = Some(set);
                        return true;
                    }
                }
            }
            false
        });
        if let Some(set) = found {
            return Ok(StrongBackdoor {
                size: size as i64,
                vars: (0..n)
                    .filter(|&i| set >> i & 1 == 1)
                    .map(|i| i as u32 + 1)
                    .collect(),
            });
        }
    }
    unreachable!("the empty set qualifies for a satisfiable formula")
}

/// Gathers the bits of `x` at the set bits of `mask` into the low bits.
fn extract(x: u64, mask: u64) -> u64 {
    let mut out = 0u64;
    let mut m = mask;
    let mut i = 0;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        if x & bit != 0 {
            out |= 1 << i;
        }
        m ^= bit;
        i += 1;
    }
    out
}

/// Whether every assignment to `vars` leaves a satisfiable reduct.
pub fn is_strong_s_backdoor(f: &Formula, vars: &[Var]) -> Result<bool, BackdoorError> {
    let mut fixed = Assignment::new(f.num_vars());
    for pattern in 0..1u64 << vars.len() {
        for (i, &v) in vars.iter().enumerate() {
            fixed.set(v, pattern >> i & 1 == 1);
        }
        let ok = crate::cnf::oracle::brute_force_solve_under(f, &fixed, &BruteLimits::default())?
            .is_sat();
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub n: usize,
    pub restricted: usize,
    pub weak_min: usize,
    pub strong_max: i64,
    pub holds_leq: bool,
    pub holds_complement: bool,
    pub holds_iff: bool,
}

/// Computes the restricted count, the minimum weak E backdoor and the
/// maximum strong S backdoor, and evaluates how they relate.
pub fn theorem_audit(f: &Formula) -> Result<AuditRecord, BackdoorError> {
    let n = f.num_vars();
    if n > STRONG_MAX_VARS {
        return Err(BackdoorError::TooManyVars {
            what: "audit",
            max: STRONG_MAX_VARS,
            n,
        });
    }
    if !brute_force_solve(f, &BruteLimits::default())?.is_sat() {
        return Err(BackdoorError::Unsat);
    }
    let restricted = match backbone_brute(f, &BruteLimits::default())? {
        Backbone::Unsat => return Err(BackdoorError::Unsat),
        Backbone::Vars(v) => v
            .iter()
            .filter(|x| !matches!(x, crate::cnf::oracle::VarForce::Free))
            .count(),
    };
    let weak_min = min_weak_e_backdoor(f, f.max_clause_len())?.size;
    let strong_max = max_strong_s_backdoor_brute(f)?.size;
    let complement = n as i64 - weak_min as i64;
    Ok(AuditRecord {
        source: None,
        n,
        restricted,
        weak_min,
        strong_max,
        holds_leq: restricted <= weak_min,
        holds_complement: strong_max >= complement,
        holds_iff: restricted == weak_min && strong_max == n as i64 - restricted as i64,
    })
}
