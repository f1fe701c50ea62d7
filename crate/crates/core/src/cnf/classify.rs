use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Clause, Formula};

/// Syntactic clause classes. They overlap: a unit clause is both Horn and
/// anti-Horn.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct ClauseClass {
    pub horn: bool,
    pub anti_horn: bool,
    pub binary: bool,
    pub other: bool,
}

/// Horn: at most one positive literal. Anti-Horn: at most one negative
/// literal. Binary: exactly two literals. Other: none of the above.
pub fn classify_clause(c: &Clause) -> ClauseClass {
    let positives = c.lits().iter().filter(|l| l.is_positive()).count();
    let negatives = c.len() - positives;
    let horn = positives <= 1;
    let anti_horn = negatives <= 1;
    let binary = c.len() == 2;
    ClauseClass {
        horn,
        anti_horn,
        binary,
        other: !horn && !anti_horn && !binary,
    }
}

/// Clause-class and purity statistics. Percentages are `None` when their
/// denominator is zero and print as `NA`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct StatsReport {
    pub num_vars: usize,
    pub num_clauses: usize,
    pub pct_horn: Option<f64>,
    pub pct_anti_horn: Option<f64>,
    pub pct_binary: Option<f64>,
    pub pct_other: Option<f64>,
    /// Share of the `num_vars` variables that occur in exactly one polarity.
    pub pct_pure_vars: Option<f64>,
}

pub fn formula_stats(f: &Formula) -> StatsReport {
    let (mut horn, mut anti, mut binary, mut other) = (0usize, 0usize, 0usize, 0usize);
    for c in f.clauses() {
        let k = classify_clause(c);
        horn += k.horn as usize;
        anti += k.anti_horn as usize;
        binary += k.binary as usize;
        other += k.other as usize;
    }
    let pure = f
        .polarity_occurrences()
        .iter()
        .filter(|(p, n)| p != n)
        .count();
    let pct = |count: usize, total: usize| (total > 0).then(|| 100.0 * count as f64 / total as f64);
    let m = f.num_clauses();
    StatsReport {
        num_vars: f.num_vars(),
        num_clauses: m,
        pct_horn: pct(horn, m),
        pct_anti_horn: pct(anti, m),
        pct_binary: pct(binary, m),
        pct_other: pct(other, m),
        pct_pure_vars: pct(pure, f.num_vars()),
    }
}

/// Two decimals, or `NA`.
pub struct Pct(pub Option<f64>);

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(p) => write!(f, "{:.2}", p),
            None => write!(f, "NA"),
        }
    }
}

impl StatsReport {
    pub fn pct_cells(&self) -> [String; 5] {
        [
            Pct(self.pct_horn).to_string(),
            Pct(self.pct_anti_horn).to_string(),
            Pct(self.pct_binary).to_string(),
            Pct(self.pct_other).to_string(),
            Pct(self.pct_pure_vars).to_string(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Formula;

    fn class(lits: &[i64]) -> ClauseClass {
        classify_clause(&Clause::from_dimacs(lits))
    }

    #[test]
    fn clause_classes() {
        // (!a | !b | c)
        assert_eq!(
            class(&[-1, -2, 3]),
            ClauseClass {
                horn: true,
                anti_horn: false,
                binary: false,
                other: false
            }
        );
        // (a | b)
        assert_eq!(
            class(&[1, 2]),
            ClauseClass {
                horn: false,
                anti_horn: true,
                binary: true,
                other: false
            }
        );
        // (a | b | !c): one negative literal, so anti-Horn
        assert_eq!(
            class(&[1, 2, -3]),
            ClauseClass {
                horn: false,
                anti_horn: true,
                binary: false,
                other: false
            }
        );
        assert_eq!(
            class(&[1, 2, 3, -4, -5]),
            ClauseClass {
                horn: false,
                anti_horn: false,
                binary: false,
                other: true
            }
        );
        let unit = class(&[4]);
        assert!(unit.horn && unit.anti_horn && !unit.binary && !unit.other);
        let empty = classify_clause(&Clause::new([]));
        assert!(empty.horn && empty.anti_horn);
    }

    #[test]
    fn stats_binary_pair() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, 2], &[-1, -2]]);
        let s = formula_stats(&f);
        assert_eq!(s.pct_binary, Some(100.0));
        assert_eq!(s.pct_horn, Some(50.0));
        assert_eq!(s.pct_anti_horn, Some(50.0));
        assert_eq!(s.pct_other, Some(0.0));
        assert_eq!(s.pct_pure_vars, Some(0.0));
    }

    #[test]
    fn stats_all_units() {
        let s = formula_stats(&Formula::from_dimacs_clauses(2, &[&[1], &[2]]));
        assert_eq!(s.pct_horn, Some(100.0));
        assert_eq!(s.pct_anti_horn, Some(100.0));
        assert_eq!(s.pct_pure_vars, Some(100.0));
    }

    #[test]
    fn stats_empty_is_na() {
        let s = formula_stats(&Formula::default());
        assert_eq!(s.pct_horn, None);
        assert_eq!(
            s.pct_cells(),
            ["NA", "NA", "NA", "NA", "NA"].map(String::from)
        );
        let s = formula_stats(&Formula::from_dimacs_clauses(3, &[]));
        assert_eq!(s.pct_other, None);
        assert_eq!(s.pct_pure_vars, Some(0.0));
    }

    #[test]
    fn pct_formatting() {
        assert_eq!(Pct(Some(100.0)).to_string(), "100.00");
        assert_eq!(Pct(Some(200.0 / 3.0)).to_string(), "66.67");
    }
}
