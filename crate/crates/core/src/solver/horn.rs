use thiserror::Error;

use crate::cnf::{classify_clause, Assignment, Formula, Lit};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HornError {
    #[error("clause {index} has more than one positive literal")]
    NotHorn { index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HornVerdict {
    /// The minimal model: propagated variables true, everything else false.
    Sat(Assignment),
    Unsat,
}

/// Decides a Horn formula by forward chaining from the all-false assignment.
///
/// Each clause keeps a counter of negative literals whose variable is not yet
/// forced true; when it reaches zero the clause's positive literal is forced,
/// or, if it has none, the formula is unsatisfiable. Every literal occurrence
/// is visited at most once, so the work is linear in the formula size.
pub fn solve_horn(f: &Formula) -> Result<HornVerdict, HornError> {
    let n = f.num_vars();
    let mut pending = Vec::with_capacity(f.num_clauses());
    let mut head: Vec<Option<Lit>> = Vec::with_capacity(f.num_clauses());
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut queue = Vec::new();
    let mut value = vec![false; n];

    for (i, c) in f.clauses().iter().enumerate() {
        if !classify_clause(c).horn {
            return Err(HornError::NotHorn { index: i });
        }
        if c.is_tautology() {
            pending.push(usize::MAX);
            head.push(None);
            continue;
        }
        let pos = c.lits().iter().copied().find(|l| l.is_positive());
        let negs = c.lits().iter().filter(|l| l.is_negative()).count();
        for l in c.lits().iter().filter(|l| l.is_negative()) {
            watchers[l.var().index()].push(i);
        }
        pending.push(negs);
        head.push(pos);
        if negs == 0 {
            match pos {
                Some(p) => queue.push(p),
                None => return Ok(HornVerdict::Unsat),
            }
        }
    }

    while let Some(p) = queue.pop() {
        let v = p.var().index();
        if value[v] {
            continue;
        }
        value[v] = true;
        for &ci in &watchers[v] {
            pending[ci] -= 1;
            if pending[ci] == 0 {
                match head[ci] {
                    Some(h) => queue.push(h),
                    None => return Ok(HornVerdict::Unsat),
                }
            }
        }
    }
    Ok(HornVerdict::Sat(Assignment::from_bools(&value)))
}
