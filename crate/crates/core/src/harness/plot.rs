//! Gnuplot scripts for the emitted CSV tables.

use crate::harness::table::ResultTable;

/// Script plotting every column whose name starts with `prefix` against the
/// first column of `table`, reading from `csv_path`.
///
/// The CSV carries a unit row under the header, hence `every ::1`.
pub fn gnuplot_script(table: &ResultTable, csv_path: &str, prefix: &str, ylabel: &str) -> String {
    let x = &table.columns[0];
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title '{}'\n", table.name));
    s.push_str(&format!("set xlabel '{} [{}]'\n", x.name, x.unit));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    let series: Vec<String> = table
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.name.starts_with(prefix))
        .map(|(i, _)| format!("'{csv_path}' every ::1 using 1:{} with linespoints", i + 1))
        .collect();
    if !series.is_empty() {
        s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_matching_columns() {
        let t = ResultTable::new(
            "fig4",
            &[("L_3", "Mb"), ("l_1", "Mb"), ("u_1", "J"), ("l_2", "Mb")],
        );
        let s = gnuplot_script(&t, "fig4.csv", "l_", "allocation [Mb]");
        assert!(s.contains("using 1:2"));
        assert!(s.contains("using 1:4"));
        assert!(!s.contains("using 1:3"));
    }
}
