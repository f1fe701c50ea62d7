//! Exhaustive truth-table oracles.
//!
//! Every procedure here enumerates assignments explicitly, so results are
//! ground truth for the desk-scale formulas the property and acceptance
//! tests use. Assignments are packed into a `u64`, bit `i` holding variable
//! `i + 1`.

use thiserror::Error;

use super::{Assignment, Formula, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{n} variables exceeds the brute-force limit of {limit}")]
    TooManyVars { n: usize, limit: usize },
    #[error("projection of {n} variables exceeds the limit of {limit}")]
    ProjectionTooLarge { n: usize, limit: usize },
    #[error("enumerating 2^{free} assignments exceeds the cap of {cap}")]
    EnumerationCap { free: usize, cap: u64 },
}

/// Limits that keep the oracles at desk scale.
#[derive(Clone, Copy, Debug)]
pub struct BruteLimits {
    pub max_vars: usize,
    pub max_projection: usize,
    pub max_enumeration: u64,
}

impl Default for BruteLimits {
    fn default() -> Self {
        BruteLimits {
            max_vars: 30,
            max_projection: 25,
            max_enumeration: 1 << 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteVerdict {
    Sat(Assignment),
    Unsat,
}

impl BruteVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, BruteVerdict::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarForce {
    Free,
    ForcedTrue,
    ForcedFalse,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backbone {
    Unsat,
    Vars(Vec<VarForce>),
}

/// Clauses as `(positive_mask, negative_mask)` pairs.
#[derive(Clone, Debug)]
pub struct BitFormula {
    num_vars: usize,
    clauses: Vec<(u64, u64)>,
}

impl BitFormula {
    pub fn new(f: &Formula) -> BitFormula {
        assert!(f.num_vars() <= 64, "bit formulas hold at most 64 variables");
        let clauses = f
            .clauses()
            .iter()
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
            .collect();
        BitFormula {
            num_vars: f.num_vars(),
            clauses,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn satisfied(&self, bits: u64) -> bool {
        self.clauses
            .iter()
            .all(|&(p, n)| bits & p != 0 || !bits & n != 0)
    }

    /// Visits every model that agrees with `fixed` on its assigned variables.
    /// The visitor returns `false` to stop early.
    pub fn for_each_model(
        &self,
        fixed_mask: u64,
        fixed_bits: u64,
        mut visit: impl FnMut(u64) -> bool,
    ) {
        let all = if self.num_vars == 64 {
            u64::MAX
        } else {
            (1u64 << self.num_vars) - 1
        };
        let free = all & !fixed_mask;
        let mut sub = 0u64;
        loop {
            let bits = fixed_bits | sub;
            if self.satisfied(bits) && !visit(bits) {
                return;
            }
            if sub == free {
                return;
            }
            sub = sub.wrapping_sub(free) & free;
        }
    }
}

fn check_vars(f: &Formula, limits: &BruteLimits) -> Result<(), OracleError> {
    if f.num_vars() > limits.max_vars {
        return Err(OracleError::TooManyVars {
            n: f.num_vars(),
            limit: limits.max_vars,
        });
    }
    Ok(())
}

fn check_enumeration(free: usize, limits: &BruteLimits) -> Result<(), OracleError> {
    if free >= 64 || (1u64 << free) > limits.max_enumeration {
        return Err(OracleError::EnumerationCap {
            free,
            cap: limits.max_enumeration,
        });
    }
    Ok(())
}

pub fn bits_to_assignment(bits: u64, num_vars: usize) -> Assignment {
    Assignment::from_values((0..num_vars).map(|i| Some(bits >> i & 1 == 1)).collect())
}

fn assignment_to_mask(a: &Assignment) -> (u64, u64) {
    let mut mask = 0;
    let mut bits = 0;
    for (i, v) in a.values().iter().enumerate() {
        if let Some(b) = v {
            mask |= 1 << i;
            if *b {
                bits |= 1 << i;
            }
        }
    }
    (mask, bits)
}

pub fn brute_force_solve(f: &Formula, limits: &BruteLimits) -> Result<BruteVerdict, OracleError> {
    brute_force_solve_under(f, &Assignment::new(f.num_vars()), limits)
}

/// Satisfiability of `f` restricted to extensions of the partial assignment
/// `fixed`; only the unassigned variables are enumerated.
pub fn brute_force_solve_under(
    f: &Formula,
    fixed: &Assignment,
    limits: &BruteLimits,
) -> Result<BruteVerdict, OracleError> {
    check_vars(f, limits)?;
    check_enumeration(f.num_vars() - fixed.num_assigned(), limits)?;
    let bf = BitFormula::new(f);
    let (mask, bits) = assignment_to_mask(fixed);
    let mut found = None;
    bf.for_each_model(mask, bits, |m| {
        found = Some(m);
        false
    });
    Ok(match found {
        Some(m) => {
            let model = bits_to_assignment(m, f.num_vars());
            assert!(
                f.is_satisfied_by(&model),
                "brute-force model fails verification"
            );
            BruteVerdict::Sat(model)
        }
        None => BruteVerdict::Unsat,
    })
}

/// All models of `f`, in ascending bit order.
pub fn enumerate_models(f: &Formula, limits: &BruteLimits) -> Result<Vec<u64>, OracleError> {
    check_vars(f, limits)?;
    check_enumeration(f.num_vars(), limits)?;
    let bf = BitFormula::new(f);
    let mut out = Vec::new();
    bf.for_each_model(0, 0, |m| {
        out.push(m);
        true
    });
    Ok(out)
}

/// Number of assignments to `projection` that extend to a model of `f`.
pub fn brute_force_count(
    f: &Formula,
    projection: &[Var],
    limits: &BruteLimits,
) -> Result<u64, OracleError> {
    check_vars(f, limits)?;
    let mut proj: Vec<Var> = projection.to_vec();
    proj.sort();
    proj.dedup();
    if proj.len() > limits.max_projection {
        return Err(OracleError::ProjectionTooLarge {
            n: proj.len(),
            limit: limits.max_projection,
        });
    }
    check_enumeration(f.num_vars(), limits)?;
    let bf = BitFormula::new(f);
    let mut seen = vec![0u64; ((1usize << proj.len()) + 63) / 64];
    let mut count = 0u64;
    bf.for_each_model(0, 0, |m| {
        let idx = proj.iter().enumerate().fold(0usize, |acc, (j, v)| {
            acc | (((m >> v.index()) & 1) as usize) << j
        });
        let word = &mut seen[idx / 64];
        let bit = 1u64 << (idx % 64);
        if *word & bit == 0 {
            *word |= bit;
            count += 1;
        }
        true
    });
    Ok(count)
}

/// Per-variable backbone status by full model enumeration.
pub fn backbone_brute(f: &Formula, limits: &BruteLimits) -> Result<Backbone, OracleError> {
    check_vars(f, limits)?;
    check_enumeration(f.num_vars(), limits)?;
    let bf = BitFormula::new(f);
    let mut all_and = u64::MAX;
    let mut all_or = 0u64;
    let mut any = false;
    bf.for_each_model(0, 0, |m| {
        any = true;
        all_and &= m;
        all_or |= m;
        true
    });
    if !any {
        return Ok(Backbone::Unsat);
    }
    Ok(Backbone::Vars(
        (0..f.num_vars())
            .map(|i| {
                if all_and >> i & 1 == 1 {
                    VarForce::ForcedTrue
                } else if all_or >> i & 1 == 0 {
                    VarForce::ForcedFalse
                } else {
                    VarForce::Free
                }
            })
            .collect(),
    ))
}
