//! Table rendering: CSV (RFC-4180-style quoting), GitHub-flavored markdown,
//! and helpers shared by the JSON paths.
//!
//! Human formats print six significant figures. Values below 1e-12 print as
//! 0; markdown adds a footnote with the raw value so nothing is hidden.

/// Threshold below which a human-formatted value displays as zero.
pub const DISPLAY_ZERO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Six significant figures, plain decimal in a comfortable range and
/// scientific outside it.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e7).contains(&a) {
        let digits = (5 - a.log10().floor() as i64).max(0) as usize;
        format!("{x:.digits$}")
    } else {
        format!("{x:.5e}")
    }
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn render_cell(cell: &Cell, footnotes: Option<&mut Vec<String>>, coord: (usize, usize)) -> String {
    match cell {
        Cell::Text(s) => s.clone(),
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => {
            if x.abs() < DISPLAY_ZERO && *x != 0.0 {
                if let Some(notes) = footnotes {
                    notes.push(format!("row {}, column {}: raw value {:e}", coord.0 + 1, coord.1 + 1, x));
                }
                "0".into()
            } else {
                fmt_sig6(*x)
            }
        }
        Cell::Empty => String::new(),
    }
}

pub fn render_csv(headers: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(&headers.iter().map(|h| csv_quote(h)).collect::<Vec<_>>().join(","));
    out.push('\n');
    for (r, row) in rows.iter().enumerate() {
        let fields: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| csv_quote(&render_cell(cell, None, (r, c))))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn render_markdown(headers: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut footnotes = Vec::new();
    let mut body: Vec<Vec<String>> = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        body.push(
            row.iter()
                .enumerate()
                .map(|(c, cell)| render_cell(cell, Some(&mut footnotes), (r, c)))
                .collect(),
        );
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &body {
        for (c, field) in row.iter().enumerate() {
            widths[c] = widths[c].max(field.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |fields: &[String], widths: &[usize]| {
        let cells: Vec<String> = fields
            .iter()
            .zip(widths)
            .map(|(f, w)| format!("{f:<w$}"))
            .collect();
        format!("| {} |\n", cells.join(" | "))
    };
    out.push_str(&fmt_row(
        &headers.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        &widths,
    ));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("| {} |\n", rule.join(" | ")));
    for row in &body {
        out.push_str(&fmt_row(row, &widths));
    }
    if !footnotes.is_empty() {
        out.push('\n');
        out.push_str("Values below 1e-12 are displayed as 0:\n");
        for note in footnotes {
            out.push_str(&format!("  - {note}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_figures() {
        assert_eq!(fmt_sig6(0.0951930), "0.0951930");
        assert_eq!(fmt_sig6(3934.2), "3934.20");
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.5e-9), "1.50000e-9");
    }

    #[test]
    fn csv_quotes_specials() {
        let rows = vec![vec![Cell::Text("a,b".into()), Cell::Num(1.0)]];
        let csv = render_csv(&["x", "y"], &rows);
        assert_eq!(csv, "x,y\n\"a,b\",1.00000\n");
    }

    #[test]
    fn markdown_footnotes_near_zeros() {
        let rows = vec![vec![Cell::Num(7.6e-16)]];
        let md = render_markdown(&["v"], &rows);
        assert!(md.contains("| 0"));
        assert!(md.contains("raw value 7.6e-16"));
    }
}
