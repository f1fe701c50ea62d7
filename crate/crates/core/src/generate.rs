//! Seeded random instance generators.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(spec.seed)`, so a [`GenSpec`] fully determines its output.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{classify_clause, Clause, Formula, Lit, Var};
use crate::feature_model::{Expr, Feature, FeatureKind, FeatureModel, Relation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("clause width {k} exceeds {n} variables")]
    WidthTooLarge { k: usize, n: usize },
    #[error("clause width must be at least 1")]
    ZeroWidth,
    #[error("Horn fraction {fraction} is unreachable with clause width {k}")]
    UnreachableFraction { fraction: f64, k: usize },
    #[error("tree arity must be at least 2")]
    BadArity,
}

/// Parameters of a random instance. When `density` is set it overrides `m`
/// with `round(density * n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub density: Option<f64>,
    pub horn_fraction: Option<f64>,
    pub seed: u64,
}

impl GenSpec {
    pub fn with_density(n: usize, density: f64, k: usize, seed: u64) -> GenSpec {
        GenSpec {
            n,
            m: 0,
            k,
            density: Some(density),
            horn_fraction: None,
            seed,
        }
    }

    pub fn with_clauses(n: usize, m: usize, k: usize, seed: u64) -> GenSpec {
        GenSpec {
            n,
            m,
            k,
            density: None,
            horn_fraction: None,
            seed,
        }
    }

    pub fn num_clauses(&self) -> usize {
        match self.density {
            Some(d) => (d * self.n as f64).round() as usize,
            None => self.m,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn check(&self) -> Result<(), GenError> {
        if self.k == 0 {
            return Err(GenError::ZeroWidth);
        }
        if self.k > self.n {
            return Err(GenError::WidthTooLarge {
                k: self.k,
                n: self.n,
            });
        }
        Ok(())
    }
}

fn random_clause(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Clause {
    let vars = sample(rng, n, k);
    Clause::new(
        vars.into_iter()
            .map(|i| Lit::new(Var::from_index(i), rng.gen())),
    )
}

/// Uniform random k-SAT: every clause has `k` distinct variables and
/// independent fair-coin polarities.
pub fn random_ksat(spec: &GenSpec) -> Result<Formula, GenError> {
    spec.check()?;
    let mut rng = spec.rng();
    let clauses = (0..spec.num_clauses())
        .map(|_| random_clause(&mut rng, spec.n, spec.k))
        .collect();
    Ok(Formula::new(spec.n, clauses).expect("generated literals are in range"))
}

/// Random k-SAT with exactly `ceil(horn_fraction * m)` Horn clauses.
///
/// Slot classes are shuffled, then each slot draws uniform clauses until one
/// of the scheduled class appears. For k = 3 every clause is Horn or
/// anti-Horn but not both, so the non-Horn slots are anti-Horn.
pub fn random_ksat_horn_mix(spec: &GenSpec) -> Result<Formula, GenError> {
    spec.check()?;
    let fraction = spec.horn_fraction.unwrap_or(0.5);
    let unreachable = GenError::UnreachableFraction {
        fraction,
        k: spec.k,
    };
    if !(0.0..=1.0).contains(&fraction) {
        return Err(unreachable);
    }
    let m = spec.num_clauses();
    let horn = ((fraction * m as f64) - 1e-9).ceil().max(0.0) as usize;
    if spec.k < 2 && horn < m {
        return Err(unreachable);
    }
    let mut rng = spec.rng();
    let mut slots: Vec<bool> = (0..m).map(|i| i < horn).collect();
    slots.shuffle(&mut rng);
    let clauses = slots
        .iter()
        .map(|&want_horn| loop {
            let c = random_clause(&mut rng, spec.n, spec.k);
            if classify_clause(&c).horn == want_horn {
                break c;
            }
        })
        .collect();
    Ok(Formula::new(spec.n, clauses).expect("generated literals are in range"))
}

/// Name of the leaf feature carrying 3-SAT variable `v`.
pub fn leaf_name(v: Var) -> String {
    format!("x{}", v.get())
}

/// A small all-optional feature tree whose leaves are the variables of a
/// random 3-SAT instance, with the instance's clauses as cross-tree
/// constraints.
///
/// The tree is balanced: leaves are grouped `tree_arity` at a time under
/// optional internal features, level by level, until at most `tree_arity`
/// nodes remain; those become the children of the root. The tree adds no
/// constraint between two leaves, so projecting the feature model's
/// configurations onto the leaves gives exactly the models of the 3-SAT
/// instance.
pub fn generate_hard_fm(spec: &GenSpec, tree_arity: usize) -> Result<FeatureModel, GenError> {
    if tree_arity < 2 {
        return Err(GenError::BadArity);
    }
    let f = random_ksat(spec)?;
    let mut level: Vec<Feature> = f
        .vars()
        .map(|v| Feature::new(leaf_name(v), FeatureKind::Boolean, Some(Relation::Optional)))
        .collect();
    let mut depth = 0;
    while level.len() > tree_arity {
        depth += 1;
        let mut next = Vec::with_capacity(level.len() / tree_arity + 1);
        let mut it = level.into_iter().peekable();
        let mut i = 0;
        while it.peek().is_some() {
            let mut node = Feature::new(
                format!("g{depth}_{i}"),
                FeatureKind::Boolean,
                Some(Relation::Optional),
            );
            node.children = it.by_ref().take(tree_arity).collect();
            next.push(node);
            i += 1;
        }
        level = next;
    }
    let mut root = Feature::new("root".to_string(), FeatureKind::Boolean, None);
    root.children = level;
    let constraints = f
        .clauses()
        .iter()
        .map(|c| {
            Expr::Or(
                c.lits()
                    .iter()
                    .map(|l| {
                        let atom = Expr::feature(leaf_name(l.var()));
                        if l.is_positive() {
                            atom
                        } else {
                            Expr::Not(Box::new(atom))
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(FeatureModel::new(root, constraints).expect("generated model is well formed"))
}

/// Output of a generator: plain CNF or a feature model.
#[derive(Clone, Debug)]
pub enum Instance {
    Cnf(Formula),
    FeatureModel(FeatureModel),
}

/// Extra generator knobs that are not part of [`GenSpec`].
#[derive(Clone, Debug)]
pub struct GenOptions {
    pub tree_arity: usize,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { tree_arity: 4 }
    }
}

pub trait InstanceGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate(&self, spec: &GenSpec, opts: &GenOptions) -> Result<Instance, GenError>;
}

struct KSat;
struct HornMix;
struct HardFm;

impl InstanceGenerator for KSat {
    fn name(&self) -> &'static str {
        "ksat"
    }
    fn generate(&self, spec: &GenSpec, _: &GenOptions) -> Result<Instance, GenError> {
        random_ksat(spec).map(Instance::Cnf)
    }
}

impl InstanceGenerator for HornMix {
    fn name(&self) -> &'static str {
        "hornmix"
    }
    fn generate(&self, spec: &GenSpec, _: &GenOptions) -> Result<Instance, GenError> {
        random_ksat_horn_mix(spec).map(Instance::Cnf)
    }
}

impl InstanceGenerator for HardFm {
    fn name(&self) -> &'static str {
        "hardfm"
    }
    fn generate(&self, spec: &GenSpec, opts: &GenOptions) -> Result<Instance, GenError> {
        generate_hard_fm(spec, opts.tree_arity).map(Instance::FeatureModel)
    }
}

pub struct GeneratorRegistry {
    generators: BTreeMap<&'static str, Arc<dyn InstanceGenerator>>,
}

impl GeneratorRegistry {
    pub fn register(&mut self, g: Arc<dyn InstanceGenerator>) {
        self.generators.insert(g.name(), g);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn InstanceGenerator>> {
        self.generators.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.generators.keys().copied()
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        let mut reg = GeneratorRegistry {
            generators: BTreeMap::new(),
        };
        reg.register(Arc::new(KSat));
        reg.register(Arc::new(HornMix));
        reg.register(Arc::new(HardFm));
        reg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::formula_stats;

    #[test]
    fn density_sets_clause_count() {
        let f = random_ksat(&GenSpec::with_density(200, 4.25, 3, 1)).unwrap();
        assert_eq!(f.num_clauses(), 850);
        assert!(f
            .clauses()
            .iter()
            .all(|c| c.len() == 3 && !c.is_tautology()));
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec::with_density(50, 4.0, 3, 99);
        assert_eq!(random_ksat(&spec).unwrap(), random_ksat(&spec).unwrap());
        let other = GenSpec {
            seed: 100,
            ..spec.clone()
        };
        assert_ne!(random_ksat(&spec).unwrap(), random_ksat(&other).unwrap());
    }

    #[test]
    fn forced_variable_choice() {
        let f = random_ksat(&GenSpec::with_clauses(3, 1, 3, 5)).unwrap();
        let mut vars: Vec<u32> = f.clauses()[0]
            .lits()
            .iter()
            .map(|l| l.var().get())
            .collect();
        vars.sort();
        assert_eq!(vars, vec![1, 2, 3]);
    }

    #[test]
    fn width_errors() {
        assert_eq!(
            random_ksat(&GenSpec::with_clauses(2, 1, 3, 0)),
            Err(GenError::WidthTooLarge { k: 3, n: 2 })
        );
    }

    #[test]
    fn horn_mix_fractions() {
        for (fraction, expected) in [(1.0, 850), (0.5, 425), (0.8, 680), (0.0, 0), (0.33, 281)] {
            let spec = GenSpec {
                horn_fraction: Some(fraction),
                ..GenSpec::with_clauses(200, 850, 3, 3)
            };
            let f = random_ksat_horn_mix(&spec).unwrap();
            let horn = f
                .clauses()
                .iter()
                .filter(|c| classify_clause(c).horn)
                .count();
            assert_eq!(horn, expected, "fraction {fraction}");
            // for 3-SAT Horn and anti-Horn partition the clauses
            assert!(f
                .clauses()
                .iter()
                .all(|c| classify_clause(c).horn != classify_clause(c).anti_horn));
        }
        let all_horn = random_ksat_horn_mix(&GenSpec {
            horn_fraction: Some(1.0),
            ..GenSpec::with_clauses(20, 40, 3, 3)
        })
        .unwrap();
        assert_eq!(formula_stats(&all_horn).pct_horn, Some(100.0));
    }

    #[test]
    fn horn_mix_rejects_bad_fraction() {
        let spec = GenSpec {
            horn_fraction: Some(1.5),
            ..GenSpec::with_clauses(10, 10, 3, 0)
        };
        assert!(matches!(
            random_ksat_horn_mix(&spec),
            Err(GenError::UnreachableFraction { .. })
        ));
        let spec = GenSpec {
            horn_fraction: Some(0.5),
            ..GenSpec::with_clauses(10, 10, 1, 0)
        };
        assert!(matches!(
            random_ksat_horn_mix(&spec),
            Err(GenError::UnreachableFraction { .. })
        ));
    }

    #[test]
    fn hard_fm_shape() {
        let fm = generate_hard_fm(&GenSpec::with_clauses(4, 2, 3, 11), 2).unwrap();
        let names = fm.feature_names();
        let leaves = names.iter().filter(|n| n.starts_with('x')).count();
        assert_eq!(leaves, 4);
        assert!(names.len() - leaves >= 3);
        assert_eq!(fm.constraints().len(), 2);
        assert!(fm.features().all(|f| f.group.is_none()));
        assert!(fm
            .features()
            .skip(1)
            .all(|f| f.relation == Some(Relation::Optional)));
    }

    #[test]
    fn registry_has_three_generators() {
        let reg = GeneratorRegistry::default();
        assert_eq!(
            reg.names().collect::<Vec<_>>(),
            vec!["hardfm", "hornmix", "ksat"]
        );
        let spec = GenSpec::with_clauses(5, 3, 3, 0);
        assert!(matches!(
            reg.get("ksat")
                .unwrap()
                .generate(&spec, &GenOptions::default())
                .unwrap(),
            Instance::Cnf(_)
        ));
        assert!(matches!(
            reg.get("hardfm")
                .unwrap()
                .generate(&spec, &GenOptions::default())
                .unwrap(),
            Instance::FeatureModel(_)
        ));
    }
}
