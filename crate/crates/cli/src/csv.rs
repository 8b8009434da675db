//! Rectangular numeric CSV with `#` comment lines.

use std::io::{self, Write};

/// Floats are written with 17 significant digits, which round-trips every
/// finite `f64` exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Written after the rows, each prefixed with `# `.
    pub footer: Vec<String>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "CSV row width");
        self.rows.push(row);
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        for line in &self.footer {
            writeln!(w, "# {line}")?;
        }
        Ok(())
    }

    pub fn to_string_lossless(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }

    /// Inverse of [`CsvTable::write_to`]. Comment lines anywhere become footer.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table = CsvTable::default();
        let mut have_header = false;
        for (i, line) in text.lines().enumerate() {
            if let Some(c) = line.strip_prefix('#') {
                table.footer.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !have_header {
                table.header = line.split(',').map(str::to_string).collect();
                have_header = true;
                continue;
            }
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| format!("line {}: bad number '{c}'", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != table.header.len() {
                return Err(format!("line {}: {} cells, header has {}", i + 1, row.len(), table.header.len()));
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}
