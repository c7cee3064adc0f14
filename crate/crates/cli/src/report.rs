//! Entry-level comparison of a published or hand-written matrix against a
//! computed one, both in dump format.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    /// 1-based row.
    pub row: usize,
    /// 1-based column.
    pub col: usize,
    pub expected: u8,
    pub computed: u8,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}][{}]: expected {}, computed {}",
            self.row, self.col, self.expected, self.computed
        )
    }
}

fn parse(text: &str) -> Result<Vec<Vec<u8>>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<u8>().map_err(|_| format!("bad entry `{t}`")))
                .collect()
        })
        .collect()
}

/// Every entry where `computed` differs from `expected`, row-major.
pub fn compare_dumps(expected: &str, computed: &str) -> Result<Vec<Discrepancy>, String> {
    let (a, b) = (parse(expected)?, parse(computed)?);
    let shape = |m: &[Vec<u8>]| (m.len(), m.first().map_or(0, Vec::len));
    if shape(&a) != shape(&b) || a.iter().chain(&b).any(|r| r.len() != shape(&a).1) {
        return Err(format!(
            "shape mismatch: expected {:?}, computed {:?}",
            shape(&a),
            shape(&b)
        ));
    }
    let mut out = Vec::new();
    for (i, (ra, rb)) in a.iter().zip(&b).enumerate() {
        for (j, (&x, &y)) in ra.iter().zip(rb).enumerate() {
            if x != y {
                out.push(Discrepancy {
                    row: i + 1,
                    col: j + 1,
                    expected: x,
                    computed: y,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_entries() {
        let d = compare_dumps("1 0\n0 1\n", "1 1\n0 1\n").unwrap();
        assert_eq!(
            d,
            vec![Discrepancy {
                row: 1,
                col: 2,
                expected: 0,
                computed: 1
            }]
        );
        assert_eq!(d[0].to_string(), "[1][2]: expected 0, computed 1");
        assert!(compare_dumps("1 0\n", "1 0 0\n").is_err());
        assert!(compare_dumps("1 x\n", "1 0\n").is_err());
    }
}
