use std::fmt::Write as _;

use super::{Clause, CnfError, Formula, Lit};

/// Parses a DIMACS CNF document.
///
/// Comment lines (`c ...`) are skipped, clauses may span lines, and a `%`
/// line (as emitted by the SATLIB generators) ends the clause section.
pub fn parse_dimacs(text: &str) -> Result<Formula, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut open = false;

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::MalformedHeader {
                    line: line_no,
                    reason: "duplicate problem line".into(),
                });
            }
            header = Some(parse_header(trimmed, line_no)?);
            continue;
        }
        let (num_vars, _) = header.ok_or(CnfError::MissingHeader)?;
        for tok in trimmed.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| CnfError::InvalidToken {
                line: line_no,
                token: tok.to_string(),
            })?;
            if v == 0 {
                clauses.push(Clause::new(current.drain(..)));
                open = false;
                continue;
            }
            if v.unsigned_abs() as usize > num_vars {
                return Err(CnfError::LiteralOutOfRange { lit: v, num_vars });
            }
            current.push(Lit::from_dimacs(v).expect("nonzero"));
            open = true;
        }
    }

    let (num_vars, declared) = header.ok_or(CnfError::MissingHeader)?;
    if open {
        return Err(CnfError::MissingTerminator);
    }
    if clauses.len() != declared {
        return Err(CnfError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Formula::new(num_vars, clauses)
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), CnfError> {
    let malformed = |reason: &str| CnfError::MalformedHeader {
        line: line_no,
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "p" {
        return Err(malformed("expected `p cnf <vars> <clauses>`"));
    }
    if parts[1] != "cnf" {
        return Err(malformed("format must be `cnf`"));
    }
    let vars = parts[2]
        .parse()
        .map_err(|_| malformed("variable count is not a non-negative integer"))?;
    let clauses = parts[3]
        .parse()
        .map_err(|_| malformed("clause count is not a non-negative integer"))?;
    Ok((vars, clauses))
}

/// Writes `f` as DIMACS CNF. Comments are not emitted.
pub fn write_dimacs(f: &Formula) -> String {
    let mut out = String::with_capacity(16 + f.num_literals() * 4);
    writeln!(out, "p cnf {} {}", f.num_vars(), f.num_clauses()).unwrap();
    for c in f.clauses() {
        writeln!(out, "{}", c).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_single_clause() {
        let f = parse_dimacs("p cnf 2 1\n1 -2 0").unwrap();
        assert_eq!(f, Formula::from_dimacs_clauses(2, &[&[1, -2]]));
    }

    #[test]
    fn parses_empty_formula() {
        let f = parse_dimacs("p cnf 1 0").unwrap();
        assert_eq!(f.num_vars(), 1);
        assert_eq!(f.num_clauses(), 0);
    }

    #[test]
    fn rejects_out_of_range_literal() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 3 0"),
            Err(CnfError::LiteralOutOfRange {
                lit: 3,
                num_vars: 2
            })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 2"),
            Err(CnfError::MissingTerminator)
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 2\n1 2 0"),
            Err(CnfError::ClauseCountMismatch {
                declared: 2,
                found: 1
            })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 2 1\n1 0"),
            Err(CnfError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 0"),
            Err(CnfError::MalformedHeader { .. })
        ));
        assert!(matches!(
            parse_dimacs("1 2 0"),
            Err(CnfError::MissingHeader)
        ));
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 a 0"),
            Err(CnfError::InvalidToken { line: 2, .. })
        ));
    }

    #[test]
    fn comments_and_multiline_clauses() {
        let text = "c hello\nc world\np cnf 3 2\n1 2\n3 0 -1\nc mid\n 0\n";
        let f = parse_dimacs(text).unwrap();
        assert_eq!(f, Formula::from_dimacs_clauses(3, &[&[1, 2, 3], &[-1]]));
    }

    #[test]
    fn write_examples() {
        let f = Formula::from_dimacs_clauses(2, &[&[1, -2]]);
        assert_eq!(write_dimacs(&f), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(write_dimacs(&Formula::default()), "p cnf 0 0\n");
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        (1usize..15).prop_flat_map(|n| {
            let lit = (1..=n as i64, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
            proptest::collection::vec(proptest::collection::vec(lit, 0..6), 0..20).prop_map(
                move |cs| {
                    let clauses = cs.iter().map(|c| Clause::from_dimacs(c)).collect();
                    Formula::new(n, clauses).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn round_trip(f in arb_formula()) {
            prop_assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
        }
    }
}
