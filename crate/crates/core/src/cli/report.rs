//! Report tables and the single-row `eval` CSV.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{MetricReport, EVAL_CSV_HEADER, METRIC_COLUMNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    #[default]
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Validation(format!("unknown report format {s:?}"))),
        }
    }
}

fn display_name(column: &str) -> &'static str {
    match column {
        "ndcg" => "NDCG",
        "aw_hc" => "AW-HC",
        "aw_a" => "AW-A",
        "perr_h" => "PErr-H",
        "perr_a" => "PErr-A",
        "cf1_h" => "CF1-H",
        "cf1_a" => "CF1-A",
        "cacc" => "Cacc",
        "harm" => "HarM",
        _ => unreachable!("unknown metric column {column}"),
    }
}

/// The `eval` output: header plus one data row.
pub fn eval_csv(report: &MetricReport) -> String {
    format!("{EVAL_CSV_HEADER}\n{}\n", report.to_csv_row())
}

pub fn parse_eval_csv(text: &str, path: &Path) -> Result<MetricReport> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line + 1,
        message,
    };
    let (hi, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
    if header.trim() != EVAL_CSV_HEADER {
        return Err(parse_err(hi, format!("expected header {EVAL_CSV_HEADER:?}")));
    }
    let (ri, row) = lines.next().ok_or_else(|| parse_err(hi + 1, "missing data row".into()))?;
    if let Some((extra, _)) = lines.next() {
        return Err(parse_err(extra, "more than one data row".into()));
    }
    let values = row
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| parse_err(ri, e.to_string()))?;
    let [ndcg, aw_hc, aw_a, cf1_h, cf1_a, cacc, perr_h, perr_a, harm] = values[..] else {
        return Err(parse_err(ri, format!("expected 9 values, found {}", values.len())));
    };
    Ok(MetricReport {
        ndcg,
        aw_hc,
        aw_a,
        cf1_h,
        cf1_a,
        cacc,
        perr_h,
        perr_a,
        harm,
    })
}

/// One row per named report, metric columns in report order. Markdown bolds
/// every cell equal to its column maximum.
pub fn render_report(reports: &[(String, MetricReport)], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("run,");
            out.push_str(&METRIC_COLUMNS.join(","));
            out.push('\n');
            for (name, r) in reports {
                out.push_str(name);
                for c in METRIC_COLUMNS {
                    out.push_str(&format!(",{}", r.get(c).expect("known column")));
                }
                out.push('\n');
            }
        }
        ReportFormat::Markdown => {
            let maxima: Vec<f64> = METRIC_COLUMNS
                .iter()
                .map(|c| {
                    reports
                        .iter()
                        .map(|(_, r)| r.get(c).expect("known column"))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            out.push_str("| Run |");
            for c in METRIC_COLUMNS {
                out.push_str(&format!(" {} |", display_name(c)));
            }
            out.push_str("\n|---|");
            out.push_str(&"---:|".repeat(METRIC_COLUMNS.len()));
            out.push('\n');
            for (name, r) in reports {
                out.push_str(&format!("| {name} |"));
                for (c, max) in METRIC_COLUMNS.iter().zip(&maxima) {
                    let v = r.get(c).expect("known column");
                    if v == *max {
                        out.push_str(&format!(" **{v:.4}** |"));
                    } else {
                        out.push_str(&format!(" {v:.4} |"));
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Reads back the CSV form of [`render_report`].
pub fn parse_report_csv(text: &str, path: &Path) -> Result<Vec<(String, MetricReport)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let expected = format!("run,{}", METRIC_COLUMNS.join(","));
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header {expected:?}"),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 10 {
                return Err(err(format!("expected 10 cells, found {}", cells.len())));
            }
            let mut v = [0.0; 9];
            for (slot, cell) in v.iter_mut().zip(&cells[1..]) {
                *slot = cell.trim().parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?;
            }
            let [ndcg, aw_hc, aw_a, perr_h, perr_a, cf1_h, cf1_a, cacc, harm] = v;
            Ok((
                cells[0].to_string(),
                MetricReport {
                    ndcg,
                    aw_hc,
                    aw_a,
                    cf1_h,
                    cf1_a,
                    cacc,
                    perr_h,
                    perr_a,
                    harm,
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(x: f64) -> MetricReport {
        MetricReport::from_parts(x, 2.0 * x - 1.0, 0.1, x, 0.3, 0.9, 0.2, x / 3.0)
    }

    #[test]
    fn eval_csv_round_trip() {
        let r = report(0.123456789);
        let back = parse_eval_csv(&eval_csv(&r), Path::new("e.csv")).unwrap();
        assert_eq!(back, r);
        assert!(parse_eval_csv("a,b\n1,2\n", Path::new("e.csv")).is_err());
    }

    #[test]
    fn markdown_bolds_column_maxima() {
        let reports = vec![("a".to_string(), report(0.2)), ("b".to_string(), report(0.6))];
        let md = render_report(&reports, ReportFormat::Markdown);
        let rows: Vec<&str> = md.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].starts_with("| Run | NDCG | AW-HC | AW-A | PErr-H"));
        assert!(rows[3].starts_with("| b | **0.6000** |"));
        assert!(rows[2].starts_with("| a | 0.2000 |"));
        // Tied column: both bold.
        assert!(rows[2].contains("**0.1000**") && rows[3].contains("**0.1000**"));
    }

    #[test]
    fn single_report_all_bold() {
        let md = render_report(&[("only".into(), report(0.5))], ReportFormat::Markdown);
        let row = md.lines().nth(2).unwrap();
        assert_eq!(row.matches("**").count(), 18);
    }

    #[test]
    fn csv_reparses() {
        let reports = vec![("a".to_string(), report(0.2)), ("b".to_string(), report(0.7))];
        let text = render_report(&reports, ReportFormat::Csv);
        let back = parse_report_csv(&text, Path::new("r.csv")).unwrap();
        for ((n0, r0), (n1, r1)) in reports.iter().zip(&back) {
            assert_eq!(n0, n1);
            for c in METRIC_COLUMNS {
                assert!((r0.get(c).unwrap() - r1.get(c).unwrap()).abs() <= 1e-9);
            }
        }
    }
}
