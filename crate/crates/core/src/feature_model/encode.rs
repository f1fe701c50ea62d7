//! Feature model to CNF.
//!
//! Variables: presence variables for every feature in preorder, then the
//! static variable of each tristate feature (same order), then Tseitin
//! auxiliaries. Constraints that are already a clause, or an implication from
//! a conjunction of literals to a disjunction of literals, are emitted
//! directly; anything else goes through Tseitin.

use std::collections::HashMap;
use std::ops::Range;

use super::expr::{Expr, FeatureRef};
use super::{Feature, FeatureKind, FeatureModel, GroupKind, Relation};
use crate::cnf::{Clause, Formula, Lit, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureVars {
    pub presence: Var,
    /// The `a'` variable of a tristate feature.
    pub static_var: Option<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMap {
    names: Vec<String>,
    vars: Vec<FeatureVars>,
    index: HashMap<String, usize>,
    aux: Range<usize>,
}

impl VarMap {
    pub fn get(&self, name: &str) -> Option<FeatureVars> {
        self.index.get(name).map(|&i| self.vars[i])
    }

    pub fn presence(&self, name: &str) -> Option<Var> {
        self.get(name).map(|fv| fv.presence)
    }

    /// Feature names with their variables, in preorder.
    pub fn iter(&self) -> impl Iterator<Item = (&str, FeatureVars)> + '_ {
        self.names
            .iter()
            .map(|s| s.as_str())
            .zip(self.vars.iter().copied())
    }

    /// Presence and static variables, ascending.
    pub fn feature_vars(&self) -> Vec<Var> {
        (1..self.aux.start).map(|v| Var::new(v as u32)).collect()
    }

    pub fn aux_vars(&self) -> impl Iterator<Item = Var> {
        self.aux.clone().map(|v| Var::new(v as u32))
    }

    pub fn num_aux(&self) -> usize {
        self.aux.len()
    }

    pub fn is_aux(&self, v: Var) -> bool {
        self.aux.contains(&(v.get() as usize))
    }

    /// The feature owning `v` and whether `v` is its static variable.
    pub fn describe(&self, v: Var) -> Option<(&str, bool)> {
        self.iter().find_map(|(name, fv)| {
            if fv.presence == v {
                Some((name, false))
            } else if fv.static_var == Some(v) {
                Some((name, true))
            } else {
                None
            }
        })
    }

    pub fn lit(&self, r: &FeatureRef) -> Lit {
        let fv = self.get(&r.name).expect("validated reference");
        if r.static_part {
            fv.static_var.expect("validated tristate").pos()
        } else {
            fv.presence.pos()
        }
    }
}

fn build_var_map(fm: &FeatureModel) -> VarMap {
    let features: Vec<&Feature> = fm.features().collect();
    let mut next = features.len() as u32 + 1;
    let mut names = Vec::with_capacity(features.len());
    let mut vars = Vec::with_capacity(features.len());
    let mut index = HashMap::new();
    for (i, f) in features.iter().enumerate() {
        let static_var = (f.kind == FeatureKind::Tristate).then(|| {
            next += 1;
            Var::new(next - 1)
        });
        names.push(f.name.clone());
        vars.push(FeatureVars {
            presence: Var::new(i as u32 + 1),
            static_var,
        });
        index.insert(f.name.clone(), i);
    }
    VarMap {
        names,
        vars,
        index,
        aux: next as usize..next as usize,
    }
}

struct Encoder<'a> {
    map: &'a VarMap,
    clauses: Vec<Clause>,
    next_aux: u32,
}

impl Encoder<'_> {
    fn fresh(&mut self) -> Lit {
        self.next_aux += 1;
        Var::new(self.next_aux - 1).pos()
    }

    fn literal(&self, e: &Expr) -> Option<Lit> {
        match e {
            Expr::Feature(r) => Some(self.map.lit(r)),
            Expr::Not(inner) => self.literal(inner).map(|l| !l),
            Expr::And(es) | Expr::Or(es) if es.len() == 1 => self.literal(&es[0]),
            _ => None,
        }
    }

    /// Literals of `e` when it is a disjunction of literals.
    fn as_clause(&self, e: &Expr) -> Option<Vec<Lit>> {
        if let Some(l) = self.literal(e) {
            return Some(vec![l]);
        }
        match e {
            Expr::Or(es) => {
                let mut out = Vec::new();
                for x in es {
                    out.extend(self.as_clause(x)?);
                }
                Some(out)
            }
            Expr::Not(inner) => match inner.as_ref() {
                Expr::And(es) => es.iter().map(|x| self.literal(x).map(|l| !l)).collect(),
                _ => None,
            },
            Expr::Implies(a, b) => {
                let mut out: Vec<Lit> = match self.literal(a) {
                    Some(l) => vec![!l],
                    None => match a.as_ref() {
                        Expr::And(es) => es
                            .iter()
                            .map(|x| self.literal(x).map(|l| !l))
                            .collect::<Option<_>>()?,
                        _ => return None,
                    },
                };
                out.extend(self.as_clause(b)?);
                Some(out)
            }
            _ => None,
        }
    }

    /// A literal equivalent to `e` under the definitions added for it.
    fn tseitin(&mut self, e: &Expr) -> Lit {
        if let Some(l) = self.literal(e) {
            return l;
        }
        match e {
            Expr::Feature(_) => unreachable!(),
            Expr::Not(inner) => !self.tseitin(inner),
            Expr::And(es) => {
                let ls: Vec<Lit> = es.iter().map(|x| self.tseitin(x)).collect();
                let g = self.fresh();
                for &l in &ls {
                    self.clauses.push(Clause::new([!g, l]));
                }
                self.clauses.push(Clause::new(
                    std::iter::once(g).chain(ls.iter().map(|&l| !l)),
                ));
                g
            }
            Expr::Or(es) => {
                let ls: Vec<Lit> = es.iter().map(|x| self.tseitin(x)).collect();
                let g = self.fresh();
                self.clauses
                    .push(Clause::new(std::iter::once(!g).chain(ls.iter().copied())));
                for &l in &ls {
                    self.clauses.push(Clause::new([g, !l]));
                }
                g
            }
            Expr::Implies(a, b) => {
                let (la, lb) = (self.tseitin(a), self.tseitin(b));
                let g = self.fresh();
                self.clauses.push(Clause::new([!g, !la, lb]));
                self.clauses.push(Clause::new([g, la]));
                self.clauses.push(Clause::new([g, !lb]));
                g
            }
            Expr::Iff(a, b) => {
                let (la, lb) = (self.tseitin(a), self.tseitin(b));
                let g = self.fresh();
                self.clauses.push(Clause::new([!g, !la, lb]));
                self.clauses.push(Clause::new([!g, la, !lb]));
                self.clauses.push(Clause::new([g, la, lb]));
                self.clauses.push(Clause::new([g, !la, !lb]));
                g
            }
        }
    }

    fn constraint(&mut self, e: &Expr) {
        if let Expr::And(es) = e {
            for x in es {
                self.constraint(x);
            }
            return;
        }
        match self.as_clause(e) {
            Some(lits) => self.clauses.push(Clause::new(lits)),
            None => {
                let g = self.tseitin(e);
                self.clauses.push(Clause::new([g]));
            }
        }
    }
}

/// Encodes `fm`; the models of the result projected on the feature variables
/// are exactly the valid configurations.
pub fn encode_fm(fm: &FeatureModel) -> (Formula, VarMap) {
    let mut map = build_var_map(fm);
    let presence = |f: &Feature| map.presence(&f.name).unwrap();
    let mut clauses = vec![Clause::new([presence(fm.root()).pos()])];

    for p in fm.features() {
        let pv = presence(p);
        for c in &p.children {
            let cv = presence(c);
            clauses.push(Clause::new([cv.neg(), pv.pos()]));
            if c.relation == Some(Relation::Mandatory) {
                clauses.push(Clause::new([pv.neg(), cv.pos()]));
            }
        }
        if let Some(g) = p.group {
            let kids: Vec<Var> = p.children.iter().map(presence).collect();
            clauses.push(Clause::new(
                std::iter::once(pv.neg()).chain(kids.iter().map(|v| v.pos())),
            ));
            if g == GroupKind::Alternative {
                for (i, a) in kids.iter().enumerate() {
                    for b in &kids[i + 1..] {
                        clauses.push(Clause::new([a.neg(), b.neg()]));
                    }
                }
            }
        }
    }
    for (_, fv) in map.iter() {
        if let Some(s) = fv.static_var {
            clauses.push(Clause::new([fv.presence.pos(), s.neg()]));
        }
    }

    let first_aux = map.aux.start as u32;
    let mut enc = Encoder {
        map: &map,
        clauses,
        next_aux: first_aux,
    };
    for c in fm.constraints() {
        enc.constraint(c);
    }
    let Encoder {
        clauses, next_aux, ..
    } = enc;
    map.aux = first_aux as usize..next_aux as usize;
    let f =
        Formula::new(next_aux as usize - 1, clauses).expect("encoder stays within its variables");
    (f, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::oracle::{brute_force_count, enumerate_models, BruteLimits};
    use crate::feature_model::parse_fm;

    fn dimacs(f: &Formula) -> Vec<Vec<i64>> {
        f.clauses()
            .iter()
            .map(|c| c.lits().iter().map(|l| l.to_dimacs()).collect())
            .collect()
    }

    #[test]
    fn optional_child() {
        let fm =
            parse_fm(r#"{"name":"R","children":[{"name":"C","relation":"optional"}]}"#).unwrap();
        let (f, map) = encode_fm(&fm);
        assert_eq!(map.presence("R"), Some(Var::new(1)));
        assert_eq!(dimacs(&f), vec![vec![1], vec![-2, 1]]);
        assert_eq!(map.num_aux(), 0);
    }

    #[test]
    fn alternative_group() {
        let fm = parse_fm(
            r#"{"name":"R","group":"alternative","children":[{"name":"A"},{"name":"B"}]}"#,
        )
        .unwrap();
        let (f, map) = encode_fm(&fm);
        assert_eq!(
            dimacs(&f),
            vec![
                vec![1],
                vec![-2, 1],
                vec![-3, 1],
                vec![-1, 2, 3],
                vec![-2, -3]
            ]
        );
        assert_eq!(
            brute_force_count(&f, &map.feature_vars(), &BruteLimits::default()).unwrap(),
            2
        );
    }

    #[test]
    fn tristate_clause() {
        let fm =
            parse_fm(r#"{"name":"R","children":[{"name":"A","kind":"tristate"},{"name":"B"}]}"#)
                .unwrap();
        let (f, map) = encode_fm(&fm);
        let a = map.get("A").unwrap();
        assert_eq!(a.presence, Var::new(2));
        assert_eq!(a.static_var, Some(Var::new(4)));
        assert!(dimacs(&f).contains(&vec![2, -4]));
        assert_eq!(map.describe(Var::new(4)), Some(("A", true)));
        // absent, module, static for A times two for B
        assert_eq!(
            brute_force_count(&f, &map.feature_vars(), &BruteLimits::default()).unwrap(),
            6
        );
    }

    #[test]
    fn clause_shaped_constraints_need_no_aux() {
        let fm = parse_fm(
            r#"{"name":"R","children":[{"name":"A"},{"name":"B"},{"name":"C"}],
                "constraints":["A => B","!A | !C","A & B => C","!(B & C)","A & !C"]}"#,
        )
        .unwrap();
        let (f, map) = encode_fm(&fm);
        assert_eq!(map.num_aux(), 0);
        let tail: Vec<_> = dimacs(&f).into_iter().skip(4).collect();
        assert_eq!(
            tail,
            vec![
                vec![-2, 3],
                vec![-2, -4],
                vec![-2, -3, 4],
                vec![-3, -4],
                vec![2],
                vec![-4]
            ]
        );
    }

    #[test]
    fn tseitin_preserves_projected_count() {
        let fm = parse_fm(
            r#"{"name":"R","children":[{"name":"A"},{"name":"B"},{"name":"C"},{"name":"D"}],
                "constraints":["(A & B) | (C & D)","A <=> !D"]}"#,
        )
        .unwrap();
        let (f, map) = encode_fm(&fm);
        assert!(map.num_aux() > 0);
        let projected =
            brute_force_count(&f, &map.feature_vars(), &BruteLimits::default()).unwrap();
        // direct count over A..D
        let mut direct = 0;
        for bits in 0..16u32 {
            let (a, b, c, d) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0);
            if ((a && b) || (c && d)) && (a == !d) {
                direct += 1;
            }
        }
        assert_eq!(projected, direct);
        // every aux variable is functionally determined
        let models = enumerate_models(&f, &BruteLimits::default()).unwrap();
        assert_eq!(models.len() as u64, projected);
    }
}
