//! Bundled Q-matrices: the four 40-item simulation designs
//! (K ∈ {3, 5, 7, 15}), the 20-item fraction-subtraction matrix (K = 8),
//! and the 25-item TIMSS matrix (K = 15).
//!
//! Each matrix ships inside the binary as CSV (header `a1..aK`, one 0/1 row
//! per item) and is parsed on first access.  The CSV text is the canonical
//! artifact: the same files are written by the CLI, so round-tripping a
//! fixture through the file format is the identity.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::QMatrix;

/// Name, CSV source, and lazily parsed matrix for one bundled fixture.
struct Fixture {
    name: &'static str,
    csv: &'static str,
    parsed: OnceLock<QMatrix>,
}

impl Fixture {
    const fn new(name: &'static str, csv: &'static str) -> Self {
        Fixture {
            name,
            csv,
            parsed: OnceLock::new(),
        }
    }

    fn get(&self) -> QMatrix {
        self.parsed
            .get_or_init(|| {
                parse_q_csv(self.csv)
                    .unwrap_or_else(|e| panic!("bundled fixture {:?} is corrupt: {e}", self.name))
            })
            .clone()
    }
}

static FIXTURES: [Fixture; 6] = [
    Fixture::new(
        "sim-j40-k3",
        include_str!("../fixtures/q_sim_j40_k3.csv"),
    ),
    Fixture::new(
        "sim-j40-k5",
        include_str!("../fixtures/q_sim_j40_k5.csv"),
    ),
    Fixture::new(
        "sim-j40-k7",
        include_str!("../fixtures/q_sim_j40_k7.csv"),
    ),
    Fixture::new(
        "sim-j40-k15",
        include_str!("../fixtures/q_sim_j40_k15.csv"),
    ),
    Fixture::new(
        "fraction-j20-k8",
        include_str!("../fixtures/q_fraction_j20_k8.csv"),
    ),
    Fixture::new(
        "timss-j25-k15",
        include_str!("../fixtures/q_timss_j25_k15.csv"),
    ),
];

/// Parses Q-matrix CSV: a header `a1,a2,…,aK` followed by one row of
/// comma-separated 0/1 entries per item.
pub fn parse_q_csv(text: &str) -> Result<QMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::data("Q-matrix CSV is empty"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for (idx, col) in cols.iter().enumerate() {
        let expected = format!("a{}", idx + 1);
        if *col != expected {
            return Err(Error::data(format!(
                "Q-matrix CSV header column {} is {col:?}, expected {expected:?}",
                idx + 1
            )));
        }
    }
    let k = cols.len();
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut row = Vec::with_capacity(k);
        for cell in line.split(',') {
            match cell.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(Error::data(format!(
                        "Q-matrix CSV row {}: entry {other:?} is not 0 or 1",
                        lineno + 1
                    )))
                }
            }
        }
        if row.len() != k {
            return Err(Error::data(format!(
                "Q-matrix CSV row {} has {} entries, expected {k}",
                lineno + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    QMatrix::new(&rows)
}

/// Serializes a Q-matrix to the CSV format used by [`parse_q_csv`].
pub fn q_to_csv(q: &QMatrix) -> String {
    let header: Vec<String> = (1..=q.n_attrs()).map(|k| format!("a{k}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for j in 0..q.n_items() {
        let mask = q.row_mask(j);
        let row: Vec<&str> = (0..q.n_attrs())
            .map(|k| if mask >> k & 1 == 1 { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Looks a bundled fixture up by name; see [`names`] for the registry.
pub fn by_name(name: &str) -> Option<QMatrix> {
    FIXTURES.iter().find(|f| f.name == name).map(Fixture::get)
}

/// Names of all bundled fixtures, in registry order.
pub fn names() -> Vec<&'static str> {
    FIXTURES.iter().map(|f| f.name).collect()
}

/// The raw CSV text of a bundled fixture.
pub fn csv_by_name(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|f| f.name == name).map(|f| f.csv)
}

/// The 40-item simulation Q-matrix for `k ∈ {3, 5, 7, 15}` attributes.
pub fn sim_q(k: usize) -> Result<QMatrix> {
    by_name(&format!("sim-j40-k{k}")).ok_or_else(|| {
        Error::config(format!(
            "no bundled 40-item simulation Q-matrix for K={k}; available K: 3, 5, 7, 15"
        ))
    })
}

/// The 20-item × 8-attribute fraction-subtraction Q-matrix.
pub fn fraction_q() -> QMatrix {
    by_name("fraction-j20-k8").expect("bundled fixture")
}

/// The 25-item × 15-attribute TIMSS Q-matrix.
pub fn timss_q() -> QMatrix {
    by_name("timss-j25-k15").expect("bundled fixture")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_parses_and_has_documented_shapes() {
        let shapes = [
            ("sim-j40-k3", 40, 3),
            ("sim-j40-k5", 40, 5),
            ("sim-j40-k7", 40, 7),
            ("sim-j40-k15", 40, 15),
            ("fraction-j20-k8", 20, 8),
            ("timss-j25-k15", 25, 15),
        ];
        assert_eq!(names().len(), shapes.len());
        for (name, j, k) in shapes {
            let q = by_name(name).unwrap_or_else(|| panic!("missing {name}"));
            assert_eq!(q.n_items(), j, "{name} items");
            assert_eq!(q.n_attrs(), k, "{name} attrs");
        }
        assert!(by_name("sim-j40-k4").is_none());
    }

    #[test]
    fn simulation_matrices_start_with_stacked_identities() {
        for k in [3usize, 5, 7, 15] {
            let q = sim_q(k).unwrap();
            for t in 0..2 * k {
                assert_eq!(q.row_mask(t), 1 << (t % k), "K={k} row {t}");
            }
            for j in 0..q.n_items() {
                let w = q.item_weight(j);
                assert!((1..=3).contains(&w), "K={k} item {j} weight {w}");
            }
        }
        assert!(sim_q(4).is_err());
    }

    #[test]
    fn simulation_matrices_have_five_row_interaction_blocks() {
        for k in [3usize, 5, 7, 15] {
            let q = sim_q(k).unwrap();
            for t in 2 * k..2 * k + 5 {
                assert_eq!(q.item_weight(t), 2, "K={k} row {t}");
            }
            for t in 2 * k + 5..2 * k + 10 {
                assert_eq!(q.item_weight(t), 3, "K={k} row {t}");
            }
        }
    }

    #[test]
    fn real_data_matrices_have_no_structural_constraint_violations() {
        let fq = fraction_q();
        assert_eq!((fq.n_items(), fq.n_attrs()), (20, 8));
        for j in 0..20 {
            assert!(fq.item_weight(j) >= 1);
        }
        let tq = timss_q();
        assert_eq!((tq.n_items(), tq.n_attrs()), (25, 15));
        for j in 0..25 {
            assert!(tq.item_weight(j) >= 1);
        }
    }

    #[test]
    fn csv_round_trip_is_identity() {
        for name in names() {
            let q = by_name(name).unwrap();
            let csv = q_to_csv(&q);
            assert_eq!(csv, csv_by_name(name).unwrap(), "{name} text round-trip");
            assert_eq!(parse_q_csv(&csv).unwrap(), q, "{name} parse round-trip");
        }
    }

    #[test]
    fn parser_rejects_malformed_input() {
        assert!(parse_q_csv("").is_err());
        assert!(parse_q_csv("a1,b2\n1,0\n").is_err(), "bad header");
        assert!(parse_q_csv("a1,a2\n1,2\n").is_err(), "non-binary entry");
        assert!(parse_q_csv("a1,a2\n1\n").is_err(), "short row");
        assert!(parse_q_csv("a1,a2\n0,0\n").is_err(), "all-zero row");
    }
}
