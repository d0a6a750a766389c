//! Field snapshots in legacy ASCII VTK, scalar tables in CSV, and the config
//! echo written next to every output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::SimConfig;
use crate::fem::Field;
use crate::geometry::{LabeledGrid, Phase};

pub const ECHO_FILE: &str = "config.toml";

/// Writes `config.toml` into `dir`, creating it if needed.
pub fn write_echo(dir: &Path, cfg: &SimConfig) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(ECHO_FILE);
    fs::write(&path, cfg.echo())?;
    Ok(path)
}

fn phase_code(p: Phase) -> u8 {
    match p {
        Phase::I1 => 1,
        Phase::I2 => 2,
        Phase::E => 0,
    }
}

/// Renders nodal fields as `STRUCTURED_POINTS`. Periodic grids are written
/// with the wrap-around row and column repeated so the image covers the
/// whole domain. With `phases` set, the element labels are added as cell
/// data (`0` extracellular, `1` and `2` intracellular).
pub fn render_vtk(grid: &LabeledGrid, title: &str, fields: &[(&str, &Field)], phases: bool) -> String {
    let (px, py) = (grid.nx + 1, grid.ny + 1);
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {px} {py} 1");
    s.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(s, "SPACING {} {} 1", grid.hx, grid.hy);
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", px * py);
        for (name, f) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for j in 0..py {
                for i in 0..px {
                    let _ = writeln!(s, "{}", f.values[grid.node(i, j)]);
                }
            }
        }
    }
    if phases {
        let _ = writeln!(s, "CELL_DATA {}", grid.num_elements());
        s.push_str("SCALARS phase int 1\nLOOKUP_TABLE default\n");
        for p in &grid.element_phase {
            let _ = writeln!(s, "{}", phase_code(*p));
        }
    }
    s
}

pub fn write_vtk(path: &Path, grid: &LabeledGrid, title: &str, fields: &[(&str, &Field)], phases: bool) -> io::Result<()> {
    fs::write(path, render_vtk(grid, title, fields, phases))
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV table with a header row and CRLF line endings.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut c = Self { text: String::new(), width: header.len() };
        c.push_line(header.iter().map(|h| csv_cell(h)));
        c
    }

    fn push_line(&mut self, cells: impl Iterator<Item = String>) {
        let line: Vec<String> = cells.collect();
        self.text.push_str(&line.join(","));
        self.text.push_str("\r\n");
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width does not match header");
        self.push_line(cells.iter().map(|c| csv_cell(c)));
    }

    /// Row of a label followed by numbers.
    pub fn labeled(&mut self, labels: &[&str], values: &[f64]) {
        let cells: Vec<String> = labels.iter().map(|l| l.to_string()).chain(values.iter().map(|v| v.to_string())).collect();
        self.row(&cells);
    }

    pub fn numbers(&mut self, values: &[f64]) {
        self.labeled(&[], values);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, &self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_reference_cell, CellGeometrySpec};

    #[test]
    fn csv_quotes_and_counts() {
        let mut c = Csv::new(&["name", "value"]);
        c.labeled(&["a,b"], &[1.5]);
        c.row(&["say \"hi\"".into(), "2".into()]);
        assert_eq!(c.as_str(), "name,value\r\n\"a,b\",1.5\r\n\"say \"\"hi\"\"\",2\r\n");
    }

    #[test]
    fn vtk_wraps_periodic_grid() {
        let g = build_reference_cell(&CellGeometrySpec::band(0.25, 0.75), 4).unwrap();
        let f = Field::from_fn(&g, |x, _| x);
        let text = render_vtk(&g, "t", &[("f", &f)], true);
        assert!(text.contains("DIMENSIONS 5 5 1"));
        assert!(text.contains("POINT_DATA 25"));
        assert!(text.contains("CELL_DATA 16"));
        let body: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("LOOKUP")).skip(1).take(5).collect();
        assert_eq!(body, ["0", "0.25", "0.5", "0.75", "0"]);
    }
}
