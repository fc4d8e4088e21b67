//! Deterministic CSV tables and gnuplot scripts for simulation runs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Format like C's `%.12e`: twelve fractional digits and a signed exponent
/// of at least two digits. Fixed formatting keeps repeated runs of the same
/// configuration byte-identical.
pub fn fmt_e12(v: f64) -> String {
    let s = format!("{v:.12e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent marker");
    let (sign, digits) = match exponent.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Named columns of equal length, written comma separated with a header row
/// and CRLF line endings.
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Column position by name, for plot scripts that address columns by
    /// one-based index.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name).map(|i| i + 1)
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows = self.len();
        if self.columns.iter().any(|(_, c)| c.len() != rows) {
            return Err(Error::Config(
                "csv columns must all have the same length".to_string(),
            ));
        }
        let mut out = String::new();
        let header: Vec<&str> = self.columns.iter().map(|(n, _)| n.as_str()).collect();
        out.push_str(&header.join(","));
        out.push_str("\r\n");
        for i in 0..rows {
            for (j, (_, col)) in self.columns.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&fmt_e12(col[i]));
            }
            out.push_str("\r\n");
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv()?)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Which panels a plot script draws, with all columns named against a table.
pub struct PlotSpec<'a> {
    /// Base name for the emitted image files.
    pub name: &'a str,
    /// CSV filename the script reads, relative to the script itself.
    pub csv: &'a str,
    pub time: &'a str,
    /// Coordinates drawn against time in the state panel.
    pub states: Vec<String>,
    /// Phase portrait: abscissa and ordinate columns.
    pub phase: Option<(String, String)>,
    /// Energy-like columns drawn together against time.
    pub energies: Vec<String>,
    /// Planar trajectory panel from derived Cartesian columns.
    pub cartesian: Option<(String, String)>,
}

/// Render a gnuplot script drawing the configured panels as PNG files.
pub fn plot_script(table: &Table, spec: &PlotSpec) -> Result<String> {
    let col = |name: &str| -> Result<usize> {
        table
            .index_of(name)
            .ok_or_else(|| Error::Config(format!("plot column `{name}` is not in the table")))
    };
    let t = col(spec.time)?;
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script for `{}`; run: gnuplot {0}_plots.gp", spec.name);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 960,600");
    let _ = writeln!(s, "set grid");
    if !spec.states.is_empty() {
        let _ = writeln!(s, "\nset output '{}_states.png'", spec.name);
        let _ = writeln!(s, "set xlabel 't'");
        let _ = writeln!(s, "set ylabel 'state'");
        let mut parts = Vec::new();
        for name in &spec.states {
            let c = col(name)?;
            parts.push(format!(
                "'{}' using {t}:{c} with lines title '{name}'",
                spec.csv
            ));
        }
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    if let Some((x, y)) = &spec.phase {
        let cx = col(x)?;
        let cy = col(y)?;
        let _ = writeln!(s, "\nset output '{}_phase.png'", spec.name);
        let _ = writeln!(s, "set xlabel '{x}'");
        let _ = writeln!(s, "set ylabel '{y}'");
        let _ = writeln!(
            s,
            "plot '{}' using {cx}:{cy} with lines title '{x}, {y}'",
            spec.csv
        );
    }
    if !spec.energies.is_empty() {
        let _ = writeln!(s, "\nset output '{}_energy.png'", spec.name);
        let _ = writeln!(s, "set xlabel 't'");
        let _ = writeln!(s, "set ylabel 'energy'");
        let mut parts = Vec::new();
        for name in &spec.energies {
            let c = col(name)?;
            parts.push(format!(
                "'{}' using {t}:{c} with lines title '{name}'",
                spec.csv
            ));
        }
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    if let Some((x, y)) = &spec.cartesian {
        let cx = col(x)?;
        let cy = col(y)?;
        let _ = writeln!(s, "\nset output '{}_plane.png'", spec.name);
        let _ = writeln!(s, "set xlabel '{x}'");
        let _ = writeln!(s, "set ylabel '{y}'");
        let _ = writeln!(s, "set size ratio -1");
        let _ = writeln!(
            s,
            "plot '{}' using {cx}:{cy} with lines title 'trajectory'",
            spec.csv
        );
    }
    Ok(s)
}
