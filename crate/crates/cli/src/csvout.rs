//! CSV emission: header plus one line per result row, numbers at nine
//! significant digits so a rerun with the same seed is byte-identical.

use crate::runner::{ResultTable, Row};
use std::io::{self, Write};

/// Nine significant digits, scientific: round-trips well within one
/// unit of the last printed digit.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(value: Option<f64>) -> String {
    value.map(sig9).unwrap_or_default()
}

fn sweep_field(table: &ResultTable, row: &Row) -> String {
    if table.integer_sweep {
        format!("{}", row.sweep_value as i64)
    } else {
        sig9(row.sweep_value)
    }
}

/// Write the table. Columns: `curve`, the sweep column, `analytic`
/// and/or `simulated`+`ci_halfwidth`+`trials` depending on which engines
/// any curve requested, plus `wall_ms` when `timing` is set (timing
/// output is not byte-stable across runs, so it is opt-in).
pub fn emit_csv<W: Write>(table: &ResultTable, timing: bool, out: &mut W) -> io::Result<()> {
    let mut header: Vec<&str> = vec!["curve", table.sweep_column];
    if table.has_analytic {
        header.push("analytic");
    }
    if table.has_simulated {
        header.extend(["simulated", "ci_halfwidth", "trials"]);
    }
    if timing {
        header.push("wall_ms");
    }
    writeln!(out, "{}", header.join(","))?;

    for row in &table.rows {
        let mut fields: Vec<String> = vec![row.curve.clone(), sweep_field(table, row)];
        if table.has_analytic {
            fields.push(opt(row.analytic));
        }
        if table.has_simulated {
            fields.push(opt(row.simulated));
            fields.push(opt(row.ci_halfwidth));
            fields.push(row.trials.map(|t| t.to_string()).unwrap_or_default());
        }
        if timing {
            fields.push(format!("{:.3}", row.wall.as_secs_f64() * 1e3));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn row(curve: &str, x: f64, analytic: Option<f64>, simulated: Option<f64>) -> Row {
        Row {
            curve: curve.to_string(),
            sweep_value: x,
            analytic,
            simulated,
            ci_halfwidth: simulated.map(|_| 0.01),
            trials: simulated.map(|_| 1000),
            wall: Duration::from_millis(5),
        }
    }

    fn table(rows: Vec<Row>, has_analytic: bool, has_simulated: bool) -> ResultTable {
        ResultTable {
            sweep_column: "threshold_dbm",
            integer_sweep: false,
            has_analytic,
            has_simulated,
            rows,
        }
    }

    #[test]
    fn empty_table_emits_header_only() {
        let mut buf = Vec::new();
        emit_csv(&table(Vec::new(), true, true), false, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "curve,threshold_dbm,analytic,simulated,ci_halfwidth,trials\n"
        );
    }

    #[test]
    fn analytic_only_omits_simulation_columns() {
        let mut buf = Vec::new();
        let t = table(vec![row("a", -50.0, Some(0.25), None)], true, false);
        emit_csv(&t, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "curve,threshold_dbm,analytic\na,-5.00000000e1,2.50000000e-1\n");
    }

    #[test]
    fn numbers_reparse_to_nine_digits() {
        let values = [0.123456789123, 3.14159265e-7, 0.9999999999, 123456.789];
        for &v in &values {
            let printed = sig9(v);
            let back: f64 = printed.parse().unwrap();
            let rel = ((back - v) / v).abs();
            assert!(rel <= 5e-9, "{v} printed as {printed}, reparsed {back}");
        }
    }

    #[test]
    fn blank_cells_for_missing_engines_and_timing_column() {
        let mut buf = Vec::new();
        let t = table(
            vec![
                row("an", -50.0, Some(0.5), None),
                row("sim", -50.0, None, Some(0.49)),
            ],
            true,
            true,
        );
        emit_csv(&t, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "curve,threshold_dbm,analytic,simulated,ci_halfwidth,trials,wall_ms"
        );
        assert_eq!(lines[1], "an,-5.00000000e1,5.00000000e-1,,,,5.000");
        assert_eq!(
            lines[2],
            "sim,-5.00000000e1,,4.90000000e-1,1.00000000e-2,1000,5.000"
        );
    }
}
