//! Delimited numeric table ingestion.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::Result;

/// A rectangular numeric table with optional header names.
#[derive(Debug, Clone)]
pub struct TableSource {
    pub header: Option<Vec<String>>,
    pub data: Dataset,
}

/// Loads a delimited numeric table from `path`. Row/column positions in
/// errors are 1-based file coordinates.
pub fn load_table(path: &Path, has_header: bool, delimiter: char) -> Result<TableSource> {
    let text = std::fs::read_to_string(path)?;
    parse_table(&text, has_header, delimiter)
}

/// Parses delimited text into a table. Every cell must be a finite real;
/// rows must have equal length.
pub fn parse_table(text: &str, has_header: bool, delimiter: char) -> Result<TableSource> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut header = None;
    if has_header {
        match lines.next() {
            Some((_, line)) => {
                header = Some(
                    line.split(delimiter)
                        .map(|c| c.trim().to_string())
                        .collect(),
                );
            }
            None => {
                return Err(Error::Parse {
                    row: 1,
                    col: 1,
                    message: "empty table".to_string(),
                })
            }
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols = header.as_ref().map(|h: &Vec<String>| h.len());
    let mut first_data_row = 0usize;
    for (line_no, line) in lines {
        if rows.is_empty() {
            first_data_row = line_no;
        }
        let mut row = Vec::new();
        for (c, cell) in line.split(delimiter).enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: line_no,
                col: c + 1,
                message: format!("cannot parse {:?} as a number", cell.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: line_no,
                    col: c + 1,
                    message: format!("non-finite value {value}"),
                });
            }
            row.push(value);
        }
        match cols {
            None => cols = Some(row.len()),
            Some(expected) if expected != row.len() => {
                return Err(Error::Parse {
                    row: line_no,
                    col: row.len().min(expected) + 1,
                    message: format!("expected {expected} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: first_data_row.max(1),
            col: 1,
            message: "empty table".to_string(),
        });
    }
    Ok(TableSource {
        header,
        data: Dataset::from_rows(&rows)?,
    })
}

/// Formats a number with 17 significant digits, enough to round-trip f64.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_table() {
        let t = parse_table("1,2\n3,4", false, ',').unwrap();
        assert_eq!(t.data.rows(), 2);
        assert_eq!(t.data.cols(), 2);
        assert_eq!(t.data.row(1), &[3.0, 4.0]);
        assert!(t.header.is_none());
    }

    #[test]
    fn captures_header() {
        let t = parse_table("a,b\n1,2\n3,4", true, ',').unwrap();
        assert_eq!(t.header, Some(vec!["a".to_string(), "b".to_string()]));
        assert_eq!(t.data.rows(), 2);
    }

    #[test]
    fn reports_bad_cell_position() {
        match parse_table("1,x", false, ',') {
            Err(Error::Parse { row: 1, col: 2, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(matches!(
            parse_table("1,2\n3", false, ','),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            parse_table("", false, ','),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_table("a,b\n", true, ','),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn alternative_delimiter_and_crlf() {
        let t = parse_table("1;2\r\n3;4\r\n", false, ';').unwrap();
        assert_eq!(t.data.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn g17_round_trips() {
        for x in [std::f64::consts::PI, -1.0 / 3.0, 2.8378770664093453] {
            let s = format_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }
}
