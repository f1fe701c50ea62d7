use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heap::VarHeap;
use super::{Metrics, SearchEvent, SearchObserver, SolveResult, SolverConfig, Verdict};
use crate::cnf::{Assignment, Formula, Lit, Var};

const LUBY_UNIT: u64 = 64;
const DECAY_INTERVAL: u64 = 256;
const DECAY_FACTOR: f64 = 0.95;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Value {
    True,
    False,
    Undef,
}

#[derive(Clone, Debug)]
struct StoredClause {
    lits: Vec<Lit>,
    /// Index in the input formula; `None` for learnt clauses.
    origin: Option<usize>,
}

/// The `x`-th element (0-based) of the Luby restart sequence 1,1,2,1,1,2,4,...
pub fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

/// A CDCL solver over one formula.
///
/// With clause learning off it backtracks chronologically, flipping the most
/// recent unflipped decision, which makes it plain DPLL with two-watched
/// literal propagation. With VSIDS off it branches on the lowest-index
/// unassigned variable.
pub struct Solver {
    cfg: SolverConfig,
    num_vars: usize,
    clauses: Vec<StoredClause>,
    watches: Vec<Vec<usize>>,
    units: Vec<(Lit, usize)>,
    empty_clause: Option<usize>,

    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    level_decision: Vec<Lit>,
    level_flipped: Vec<bool>,
    qhead: usize,

    occurs: Vec<bool>,
    activity: Vec<f64>,
    order: VarHeap,
    static_cursor: usize,
    seen: Vec<bool>,

    metrics: Metrics,
    conflicts_since_restart: u64,
    started: bool,
    ok: bool,
}

impl Solver {
    pub fn new(f: &Formula, cfg: SolverConfig) -> Solver {
        let n = f.num_vars();
        let mut s = Solver {
            cfg,
            num_vars: n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            units: Vec::new(),
            empty_clause: None,
            assigns: vec![Value::Undef; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            level_decision: Vec::new(),
            level_flipped: Vec::new(),
            qhead: 0,
            occurs: vec![false; n],
            activity: vec![0.0; n],
            order: VarHeap::new(n),
            static_cursor: 0,
            seen: vec![false; n],
            metrics: Metrics::default(),
            conflicts_since_restart: 0,
            started: false,
            ok: true,
        };
        for (idx, c) in f.clauses().iter().enumerate() {
            if c.is_tautology() {
                continue;
            }
            for l in c.lits() {
                s.occurs[l.var().index()] = true;
            }
            match c.len() {
                0 => {
                    s.empty_clause.get_or_insert(idx);
                }
                1 => s.units.push((c.lits()[0], idx)),
                _ => {
                    s.attach(StoredClause {
                        lits: c.lits().to_vec(),
                        origin: Some(idx),
                    });
                }
            }
        }
        if cfg.vsids {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for a in s.activity.iter_mut() {
                *a = rng.gen::<f64>() * 1e-3;
            }
        }
        for v in 0..n {
            if s.occurs[v] {
                s.order.insert(v, &s.activity);
            }
        }
        s
    }

    fn attach(&mut self, c: StoredClause) -> usize {
        let cr = self.clauses.len();
        self.watches[c.lits[0].code()].push(cr);
        self.watches[c.lits[1].code()].push(cr);
        self.clauses.push(c);
        cr
    }

    fn value(&self, l: Lit) -> Value {
        match self.assigns[l.var().index()] {
            Value::Undef => Value::Undef,
            Value::True if l.is_positive() => Value::True,
            Value::False if l.is_negative() => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().index();
        self.assigns[v] = if l.is_positive() {
            Value::True
        } else {
            Value::False
        };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Asserts level-0 facts followed by the input's unit clauses.
    ///
    /// On failure returns the input index of the clause found conflicting, or
    /// `None` when two facts contradict each other.
    fn start(&mut self, facts: &[Lit]) -> Result<(), Option<usize>> {
        if self.started {
            return if self.ok { Ok(()) } else { Err(None) };
        }
        self.started = true;
        if let Some(idx) = self.empty_clause {
            self.ok = false;
            return Err(Some(idx));
        }
        for &l in facts {
            match self.value(l) {
                Value::True => {}
                Value::False => {
                    self.ok = false;
                    return Err(None);
                }
                Value::Undef => self.enqueue(l, None),
            }
        }
        for i in 0..self.units.len() {
            let (l, idx) = self.units[i];
            match self.value(l) {
                Value::True => {}
                Value::False => {
                    self.ok = false;
                    return Err(Some(idx));
                }
                Value::Undef => {
                    self.metrics.propagations += 1;
                    self.enqueue(l, None);
                }
            }
        }
        Ok(())
    }

    /// Unit propagation over the two-watched-literal lists. Returns the
    /// conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let cr = ws[i];
                i += 1;
                {
                    let lits = &mut self.clauses[cr].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cr].lits[0];
                if self.value(first) == Value::True {
                    ws[j] = cr;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cr].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let cand = self.clauses[cr].lits[k];
                    if self.value(cand) != Value::False {
                        self.clauses[cr].lits.swap(1, k);
                        self.watches[cand.code()].push(cr);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = cr;
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(cr);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.metrics.propagations += 1;
                    self.enqueue(first, Some(cr));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var().index();
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            if self.cfg.vsids {
                self.order.insert(v, &self.activity);
            } else if v < self.static_cursor {
                self.static_cursor = v;
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.level_decision.truncate(lvl as usize);
        self.level_flipped.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn new_level(&mut self, lit: Lit, flipped: bool) {
        self.trail_lim.push(self.trail.len());
        self.level_decision.push(lit);
        self.level_flipped.push(flipped);
        self.metrics.max_decision_level = self
            .metrics
            .max_decision_level
            .max(self.decision_level() as u64);
        self.enqueue(lit, None);
    }

    fn bump(&mut self, v: usize) {
        if !self.cfg.vsids {
            return;
        }
        self.activity[v] += 1.0;
        self.order.increased(v, &self.activity);
    }

    fn decay(&mut self) {
        if self.cfg.vsids && self.metrics.conflicts % DECAY_INTERVAL == 0 {
            for a in self.activity.iter_mut() {
                *a *= DECAY_FACTOR;
            }
        }
    }

    /// First-UIP analysis. Returns the learnt clause (asserting literal first,
    /// highest remaining level second) and the backjump level.
    fn analyze(&mut self, confl: usize) -> (Vec<Lit>, u32) {
        let current = self.decision_level();
        let mut learnt = vec![Lit::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut cr = confl;
        loop {
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..self.clauses[cr].lits.len() {
                let q = self.clauses[cr].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v);
                    if self.level[v] == current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            let v = lit.var().index();
            self.seen[v] = false;
            path -= 1;
            p = Some(lit);
            if path == 0 {
                break;
            }
            cr = self.reason[v].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    fn pick_branch(&mut self) -> Option<Var> {
        if self.cfg.vsids {
            while let Some(v) = self.order.pop(&self.activity) {
                if self.assigns[v] == Value::Undef {
                    return Some(Var::from_index(v));
                }
            }
            None
        } else {
            while self.static_cursor < self.num_vars {
                let v = self.static_cursor;
                if self.occurs[v] && self.assigns[v] == Value::Undef {
                    return Some(Var::from_index(v));
                }
                self.static_cursor += 1;
            }
            None
        }
    }

    fn partial_assignment(&self) -> Assignment {
        Assignment::from_values(
            self.assigns
                .iter()
                .map(|v| match v {
                    Value::True => Some(true),
                    Value::False => Some(false),
                    Value::Undef => None,
                })
                .collect(),
        )
    }

    fn model(&self) -> Assignment {
        Assignment::from_values(
            self.assigns
                .iter()
                .map(|v| {
                    Some(match v {
                        Value::True => true,
                        Value::False => false,
                        Value::Undef => self.cfg.phase_default,
                    })
                })
                .collect(),
        )
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    /// Clauses learnt so far, in learning order.
    pub fn learnt_clauses(&self) -> impl Iterator<Item = &[Lit]> {
        self.clauses
            .iter()
            .filter(|c| c.origin.is_none())
            .map(|c| c.lits.as_slice())
    }

    /// Runs unit propagation over the facts and the input clauses without
    /// searching. Returns the extended assignment, or the input index of a
    /// falsified clause (`None` if the facts contradict each other).
    pub fn propagate_facts(mut self, facts: &[Lit]) -> Result<Assignment, Option<usize>> {
        self.start(facts)?;
        match self.propagate() {
            Some(cr) => Err(self.clauses[cr].origin),
            None => Ok(self.partial_assignment()),
        }
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_under(&[], None)
    }

    pub fn solve_observed(&mut self, observer: &mut dyn SearchObserver) -> SolveResult {
        self.solve_under(&[], Some(observer))
    }

    /// Solves with `assumptions` asserted as level-0 facts.
    pub fn solve_under(
        &mut self,
        assumptions: &[Lit],
        mut observer: Option<&mut dyn SearchObserver>,
    ) -> SolveResult {
        let verdict = self.search(assumptions, &mut observer);
        SolveResult {
            verdict,
            metrics: self.metrics.clone(),
        }
    }

    fn search(
        &mut self,
        assumptions: &[Lit],
        observer: &mut Option<&mut dyn SearchObserver>,
    ) -> Verdict {
        if self.start(assumptions).is_err() || !self.ok {
            return Verdict::Unsat;
        }
        let mut pending = Some(SearchEvent::Start);
        let mut restart_index = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.metrics.conflicts += 1;
                self.conflicts_since_restart += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Verdict::Unsat;
                }
                if self.cfg.clause_learning {
                    let (learnt, bt) = self.analyze(confl);
                    self.cancel_until(bt);
                    if learnt.len() == 1 {
                        self.metrics.propagations += 1;
                        self.enqueue(learnt[0], None);
                    } else {
                        let asserting = learnt[0];
                        let cr = self.attach(StoredClause {
                            lits: learnt,
                            origin: None,
                        });
                        self.metrics.propagations += 1;
                        self.enqueue(asserting, Some(cr));
                    }
                } else {
                    let vars: Vec<usize> = self.clauses[confl]
                        .lits
                        .iter()
                        .map(|l| l.var().index())
                        .collect();
                    for v in vars {
                        self.bump(v);
                    }
                    let Some(flip_level) = (1..=self.decision_level())
                        .rev()
                        .find(|&l| !self.level_flipped[l as usize - 1])
                    else {
                        self.ok = false;
                        return Verdict::Unsat;
                    };
                    let decision = self.level_decision[flip_level as usize - 1];
                    self.cancel_until(flip_level - 1);
                    self.new_level(!decision, true);
                }
                self.decay();
                if let Some(limit) = self.cfg.conflict_limit {
                    if self.metrics.conflicts >= limit {
                        self.cancel_until(0);
                        return Verdict::Limit;
                    }
                }
                pending = Some(SearchEvent::Backtrack);
                continue;
            }

            if let Some(event) = pending.take() {
                if let Some(obs) = observer.as_mut() {
                    let a = self.partial_assignment();
                    obs.on_assignment_change(event, &self.metrics, &a);
                }
            }

            if self.cfg.restarts && self.conflicts_since_restart >= LUBY_UNIT * luby(restart_index)
            {
                restart_index += 1;
                self.conflicts_since_restart = 0;
                if self.decision_level() > 0 {
                    self.metrics.restarts_done += 1;
                    self.cancel_until(0);
                    continue;
                }
            }

            let Some(var) = self.pick_branch() else {
                let model = self.model();
                return Verdict::Sat(model);
            };
            self.metrics.decisions += 1;
            self.new_level(Lit::new(var, self.cfg.phase_default), false);
            pending = Some(SearchEvent::Decision);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luby_prefix() {
        let seq: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(seq, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }
}
