//! Shared fixtures: random formulas, random easy feature models and a direct
//! enumerator of feature-model configurations.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fmsat_core::feature_model::{
    Expr, Feature, FeatureKind, FeatureModel, FeatureRef, GroupKind, Relation,
};
use fmsat_core::{Clause, Formula, Lit, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `m` clauses over `n` variables with widths drawn from `widths` (capped at
/// `n`), distinct variables per clause.
pub fn random_formula(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    widths: std::ops::RangeInclusive<usize>,
) -> Formula {
    let vars: Vec<u32> = (1..=n as u32).collect();
    let clauses = (0..m)
        .map(|_| {
            let w = rng.gen_range(widths.clone()).min(n);
            let picked: Vec<&u32> = vars.choose_multiple(rng, w).collect();
            Clause::new(
                picked
                    .into_iter()
                    .map(|&v| Lit::new(Var::new(v), rng.gen_bool(0.5))),
            )
        })
        .collect();
    Formula::new(n, clauses).unwrap()
}

/// A random tree of `size` features: about a third mandatory, a fifth of the
/// parents with two or more children grouped, a few tristate features, and
/// roughly one requires/excludes constraint per ten features.
pub fn random_easy_fm(rng: &mut ChaCha8Rng, size: usize) -> FeatureModel {
    assert!(size >= 1);
    let mut parent = vec![usize::MAX; size];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); size];
    for i in 1..size {
        // favour recent nodes so the tree gets some depth
        let lo = i.saturating_sub(8);
        let p = rng.gen_range(lo..i);
        parent[i] = p;
        children[p].push(i);
    }
    let name = |i: usize| format!("f{i}");
    let kinds: Vec<FeatureKind> = (0..size)
        .map(|_| {
            if rng.gen_bool(0.1) {
                FeatureKind::Tristate
            } else {
                FeatureKind::Boolean
            }
        })
        .collect();
    let relations: Vec<Relation> = (0..size)
        .map(|_| {
            if rng.gen_bool(0.3) {
                Relation::Mandatory
            } else {
                Relation::Optional
            }
        })
        .collect();
    let groups: Vec<Option<GroupKind>> = (0..size)
        .map(|i| {
            (children[i].len() >= 2 && rng.gen_bool(0.2)).then(|| {
                if rng.gen_bool(0.5) {
                    GroupKind::Or
                } else {
                    GroupKind::Alternative
                }
            })
        })
        .collect();

    fn build(
        i: usize,
        children: &[Vec<usize>],
        kinds: &[FeatureKind],
        relations: &[Relation],
        groups: &[Option<GroupKind>],
        name: &dyn Fn(usize) -> String,
    ) -> Feature {
        let relation = (i != 0).then_some(relations[i]);
        let mut f = Feature::new(name(i), kinds[i], relation);
        if let Some(g) = groups[i] {
            f = f.with_group(g);
        }
        f.with_children(
            children[i]
                .iter()
                .map(|&c| build(c, children, kinds, relations, groups, name))
                .collect(),
        )
    }
    let root = build(0, &children, &kinds, &relations, &groups, &name);

    let mut constraints = Vec::new();
    for _ in 0..size / 10 {
        let a = rng.gen_range(1..size.max(2)).min(size - 1);
        let b = rng.gen_range(1..size.max(2)).min(size - 1);
        if a == b {
            continue;
        }
        let text = if rng.gen_bool(0.8) {
            format!("{} => {}", name(a), name(b))
        } else {
            format!("!({} & {})", name(a), name(b))
        };
        constraints.push(Expr::parse(&text).unwrap());
    }
    FeatureModel::new(root, constraints).unwrap()
}

/// A configuration: selected features, each with its static flag (always
/// false for Boolean features).
pub type Config = BTreeMap<String, bool>;

/// All valid configurations, built from the tree rules directly and filtered
/// by the constraints.
pub fn enumerate_configs(fm: &FeatureModel) -> Vec<Config> {
    fn selected(f: &Feature) -> Vec<Config> {
        let own: Vec<bool> = match f.kind {
            FeatureKind::Boolean => vec![false],
            FeatureKind::Tristate => vec![false, true],
        };
        let mut acc: Vec<(Config, usize)> = own
            .into_iter()
            .map(|s| (Config::from([(f.name.clone(), s)]), 0))
            .collect();
        for c in &f.children {
            let sub = selected(c);
            let mut next = Vec::new();
            for (cfg, on) in &acc {
                if c.relation != Some(Relation::Mandatory) {
                    next.push((cfg.clone(), *on));
                }
                for s in &sub {
                    let mut merged = cfg.clone();
                    merged.extend(s.iter().map(|(k, v)| (k.clone(), *v)));
                    next.push((merged, on + 1));
                }
            }
            acc = next;
        }
        acc.into_iter()
            .filter(|(_, on)| match f.group {
                None => true,
                Some(GroupKind::Or) => *on >= 1,
                Some(GroupKind::Alternative) => *on == 1,
            })
            .map(|(c, _)| c)
            .collect()
    }
    selected(fm.root())
        .into_iter()
        .filter(|cfg| {
            let look = |r: &FeatureRef| match cfg.get(&r.name) {
                None => false,
                Some(&s) => !r.static_part || s,
            };
            fm.constraints().iter().all(|e| e.eval(&look))
        })
        .collect()
}
