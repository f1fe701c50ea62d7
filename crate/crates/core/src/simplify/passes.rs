use std::collections::HashSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{ReconstructionStep, Session, Simplification};
use crate::cnf::Lit;

/// Occurrence lists by literal code. Entries may go stale when clauses shrink
/// or disappear; users re-check the clause.
pub(super) fn occurrences(s: &Session) -> Vec<Vec<usize>> {
    let mut occ = vec![Vec::new(); 2 * s.num_vars()];
    for (i, c) in s.live() {
        for l in c {
            occ[l.code()].push(i);
        }
    }
    occ
}

fn is_subset(small: &[Lit], big: &[Lit]) -> bool {
    small.iter().all(|l| big.contains(l))
}

/// Unit propagation over the live clauses of a session.
struct Propagator {
    vals: Vec<i8>,
    trail: Vec<Lit>,
}

impl Propagator {
    fn new(num_vars: usize) -> Propagator {
        Propagator {
            vals: vec![0; num_vars],
            trail: Vec::new(),
        }
    }

    fn value(&self, l: Lit) -> i8 {
        let v = self.vals[l.var().index()];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    fn assign(&mut self, l: Lit) -> bool {
        match self.value(l) {
            1 => true,
            -1 => false,
            _ => {
                self.vals[l.var().index()] = if l.is_positive() { 1 } else { -1 };
                self.trail.push(l);
                true
            }
        }
    }

    /// Asserts `assumptions` and the unit clauses, then propagates over every
    /// live clause except `skip`. Returns `true` on conflict.
    fn run(
        &mut self,
        s: &Session,
        occ: &[Vec<usize>],
        skip: Option<usize>,
        assumptions: &[Lit],
    ) -> bool {
        for l in self.trail.drain(..) {
            self.vals[l.var().index()] = 0;
        }
        for &a in assumptions {
            if !self.assign(a) {
                return true;
            }
        }
        for (i, c) in s.live() {
            if c.len() == 1 && Some(i) != skip && !self.assign(c[0]) {
                return true;
            }
        }
        let mut head = 0;
        while head < self.trail.len() {
            let falsified = !self.trail[head];
            head += 1;
            for &ci in &occ[falsified.code()] {
                if Some(ci) == skip {
                    continue;
                }
                let Some(c) = s.clause(ci) else { continue };
                let mut open = None;
                let mut n_open = 0;
                let mut sat = false;
                for &x in c {
                    match self.value(x) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            n_open += 1;
                            open = Some(x);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match (n_open, open) {
                    (0, _) => return true,
                    (1, Some(x)) => {
                        self.assign(x);
                    }
                    _ => {}
                }
            }
        }
        false
    }
}

/// Collapses strongly connected components of the binary implication graph
/// onto their lowest-index variable.
pub struct EquivSubstitution;

impl Simplification for EquivSubstitution {
    fn name(&self) -> &'static str {
        "equiv"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let n = s.num_vars();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(2 * n, 0);
        for _ in 0..2 * n {
            g.add_node(());
        }
        let mut any = false;
        for (_, c) in s.live() {
            if let [a, b] = *c {
                g.add_edge(NodeIndex::new((!a).code()), NodeIndex::new(b.code()), ());
                g.add_edge(NodeIndex::new((!b).code()), NodeIndex::new(a.code()), ());
                any = true;
            }
        }
        if !any {
            return false;
        }
        let mut subst: Vec<Option<Lit>> = vec![None; n];
        for scc in tarjan_scc(&g) {
            if scc.len() < 2 {
                continue;
            }
            let mut lits: Vec<Lit> = scc.iter().map(|ix| Lit::from_code(ix.index())).collect();
            lits.sort();
            if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
                s.set_unsat();
                return true;
            }
            let rep = lits[0];
            for &l in &lits[1..] {
                let slot = &mut subst[l.var().index()];
                if slot.is_none() {
                    *slot = Some(if l.is_positive() { rep } else { !rep });
                }
            }
        }
        if subst.iter().all(|x| x.is_none()) {
            return false;
        }
        for (v, target) in subst.iter().enumerate() {
            if let Some(t) = target {
                s.push_step(ReconstructionStep::Substitution {
                    var: Lit::from_code(2 * v),
                    equals: *t,
                });
            }
        }
        let map = |l: Lit| match subst[l.var().index()] {
            Some(t) if l.is_positive() => t,
            Some(t) => !t,
            None => l,
        };
        for i in 0..s.num_slots() {
            let Some(c) = s.clause(i) else { continue };
            if !c.iter().any(|l| subst[l.var().index()].is_some()) {
                continue;
            }
            let mut out: Vec<Lit> = Vec::with_capacity(c.len());
            let mut taut = false;
            for &l in c {
                let m = map(l);
                if out.contains(&!m) {
                    taut = true;
                    break;
                }
                if !out.contains(&m) {
                    out.push(m);
                }
            }
            if taut {
                s.remove(i);
            } else {
                s.replace(i, out);
            }
        }
        true
    }
}

/// Removes every clause that contains another; of two equal clauses the
/// earlier one stays.
pub struct Subsumption;

impl Simplification for Subsumption {
    fn name(&self) -> &'static str {
        "subsume"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let occ = occurrences(s);
        let mut changed = false;
        for i in 0..s.num_slots() {
            let Some(ci) = s.clause(i) else { continue };
            let Some(&pivot) = ci.iter().min_by_key(|l| occ[l.code()].len()) else {
                continue;
            };
            let doomed: Vec<usize> = occ[pivot.code()]
                .iter()
                .copied()
                .filter(|&j| j != i)
                .filter(|&j| match s.clause(j) {
                    Some(cj) => {
                        cj.len() >= ci.len() && (cj.len() > ci.len() || j > i) && is_subset(ci, cj)
                    }
                    None => false,
                })
                .collect();
            for j in doomed {
                s.remove(j);
                changed = true;
            }
        }
        changed
    }
}

/// Strengthens `C | !x | D` to `C | D` whenever `C | x` is present, until no
/// such pair is left.
pub struct SelfSubsumption;

impl Simplification for SelfSubsumption {
    fn name(&self) -> &'static str {
        "ssr"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let occ = occurrences(s);
        let mut changed = false;
        loop {
            let mut round = false;
            for i in 0..s.num_slots() {
                let Some(a) = s.clause(i).map(|c| c.to_vec()) else {
                    continue;
                };
                for &x in &a {
                    for &j in &occ[(!x).code()] {
                        if j == i {
                            continue;
                        }
                        let Some(b) = s.clause(j) else { continue };
                        if b.len() < a.len() || !b.contains(&!x) {
                            continue;
                        }
                        if a.iter().all(|&l| l == x || b.contains(&l)) {
                            let shorter: Vec<Lit> =
                                b.iter().copied().filter(|&l| l != !x).collect();
                            s.replace(j, shorter);
                            round = true;
                            if s.is_unsat() {
                                return true;
                            }
                        }
                    }
                }
            }
            changed |= round;
            if !round {
                return changed;
            }
        }
    }
}

/// Bounded variable elimination by clause distribution: a variable is
/// resolved away when that does not increase the number of clauses.
pub struct VariableElimination;

impl Simplification for VariableElimination {
    fn name(&self) -> &'static str {
        "elim"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let mut occ = occurrences(s);
        let mut changed = false;
        for v in 0..s.num_vars() {
            changed |= eliminate(s, &mut occ, Lit::from_code(2 * v));
            if s.is_unsat() {
                return true;
            }
        }
        changed
    }
}

/// Resolves away the variable of `x` if the non-tautological resolvents are
/// no more than the clauses they replace.
pub(super) fn eliminate(s: &mut Session, occ: &mut [Vec<usize>], x: Lit) -> bool {
    let holding = |l: Lit| -> Vec<usize> {
        occ[l.code()]
            .iter()
            .copied()
            .filter(|&i| s.clause(i).is_some_and(|c| c.contains(&l)))
            .collect()
    };
    let pos = holding(x);
    let neg = holding(!x);
    if pos.is_empty() && neg.is_empty() {
        return false;
    }
    let budget = pos.len() + neg.len();
    let mut resolvents: Vec<Vec<Lit>> = Vec::new();
    let mut seen: HashSet<Vec<Lit>> = HashSet::new();
    for &p in &pos {
        for &q in &neg {
            let mut r: Vec<Lit> = s
                .clause(p)
                .unwrap()
                .iter()
                .copied()
                .filter(|&l| l != x)
                .collect();
            let mut taut = false;
            for &l in s.clause(q).unwrap() {
                if l == !x || r.contains(&l) {
                    continue;
                }
                if r.contains(&!l) {
                    taut = true;
                    break;
                }
                r.push(l);
            }
            if taut {
                continue;
            }
            let mut key = r.clone();
            key.sort();
            if seen.insert(key) {
                resolvents.push(r);
                if resolvents.len() > budget {
                    return false;
                }
            }
        }
    }
    let pos_clauses: Vec<Vec<Lit>> = pos.iter().map(|&i| s.remove(i).unwrap()).collect();
    let neg_clauses: Vec<Vec<Lit>> = neg.iter().map(|&i| s.remove(i).unwrap()).collect();
    s.push_step(ReconstructionStep::EliminatedVar {
        var: x,
        pos: pos_clauses,
        neg: neg_clauses,
    });
    for r in resolvents {
        let lits = r.clone();
        let i = s.add(r);
        for l in lits {
            occ[l.code()].push(i);
        }
    }
    true
}

/// For each clause and each of its literals `x`, assumes the negation of the
/// rest `C`; when propagation over the other clauses fails, `C` replaces the
/// clause.
pub struct AsymmetricBranching;

impl Simplification for AsymmetricBranching {
    fn name(&self) -> &'static str {
        "asym"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let occ = occurrences(s);
        let mut prop = Propagator::new(s.num_vars());
        let mut changed = false;
        let mut assumptions = Vec::new();
        for i in 0..s.num_slots() {
            let Some(mut c) = s.clause(i).map(|c| c.to_vec()) else {
                continue;
            };
            let mut shortened = false;
            let mut k = 0;
            while k < c.len() && c.len() >= 2 {
                assumptions.clear();
                assumptions.extend(
                    c.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != k)
                        .map(|(_, &l)| !l),
                );
                if prop.run(s, &occ, Some(i), &assumptions) {
                    c.remove(k);
                    shortened = true;
                } else {
                    k += 1;
                }
            }
            if shortened {
                s.replace(i, c);
                changed = true;
            }
        }
        changed
    }
}

/// Deletes clauses implied by the others under unit propagation. Unit
/// clauses are left alone.
pub struct RCheck;

impl Simplification for RCheck {
    fn name(&self) -> &'static str {
        "rcheck"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let occ = occurrences(s);
        let mut prop = Propagator::new(s.num_vars());
        let mut changed = false;
        for i in 0..s.num_slots() {
            let Some(c) = s.clause(i) else { continue };
            if c.len() < 2 {
                continue;
            }
            let negated: Vec<Lit> = c.iter().map(|&l| !l).collect();
            if prop.run(s, &occ, Some(i), &negated) {
                s.remove(i);
                changed = true;
            }
        }
        changed
    }
}

/// Unit propagation to a fixpoint; forced literals are recorded, satisfied
/// clauses dropped and false literals stripped.
pub struct Bcp;

impl Simplification for Bcp {
    fn name(&self) -> &'static str {
        "bcp"
    }

    fn apply(&self, s: &mut Session) -> bool {
        let occ = occurrences(s);
        let mut prop = Propagator::new(s.num_vars());
        if prop.run(s, &occ, None, &[]) {
            s.set_unsat();
            return true;
        }
        if prop.trail.is_empty() {
            return false;
        }
        for &lit in &prop.trail {
            s.push_step(ReconstructionStep::ForcedLiteral { lit });
        }
        for i in 0..s.num_slots() {
            let Some(c) = s.clause(i) else { continue };
            if c.iter().any(|&l| prop.value(l) == 1) {
                s.remove(i);
            } else if c.iter().any(|&l| prop.value(l) == -1) {
                let rest: Vec<Lit> = c.iter().copied().filter(|&l| prop.value(l) == 0).collect();
                s.replace(i, rest);
            }
        }
        true
    }
}
