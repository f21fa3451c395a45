//! File output: CSV tables and legacy ASCII VTK fields, each stamped with
//! the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::fdops::Field;
use crate::mesh::Mesh;
use crate::modal::NodalLineSet;

/// An output directory bound to one resolved configuration.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub dir: PathBuf,
    config_json: String,
    digest: String,
}

impl OutputDir {
    /// Creates `dir` and writes `config.json` into it.
    pub fn create(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let out = OutputDir { dir: dir.to_path_buf(), config_json: serde_json::to_string(cfg).expect("config serializes"), digest: cfg.digest() };
        fs::write(out.dir.join("config.json"), cfg.to_json() + "\n")?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    fn header(&self) -> String {
        format!("# config: {}\n# config-sha256: {}\n", self.config_json, self.digest)
    }

    /// CSV with a config header, a column line and one line per row.
    pub fn write_csv<R, I>(&self, name: &str, columns: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut s = self.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            push_row(&mut s, r.as_ref());
        }
        let p = self.path(name);
        fs::write(&p, s)?;
        Ok(p)
    }

    /// CSV whose rows carry a leading text label.
    pub fn write_labeled_csv(&self, name: &str, columns: &[&str], rows: &[(String, Vec<f64>)]) -> Result<PathBuf> {
        let mut s = self.header();
        s.push_str(&columns.join(","));
        s.push('\n');
        for (label, r) in rows {
            s.push_str(label);
            if !r.is_empty() {
                s.push(',');
            }
            push_row(&mut s, r);
        }
        let p = self.path(name);
        fs::write(&p, s)?;
        Ok(p)
    }

    /// `{"config": ..., "<key>": value}` as pretty JSON.
    pub fn write_json<T: Serialize>(&self, name: &str, key: &str, value: &T) -> Result<PathBuf> {
        let config: serde_json::Value = serde_json::from_str(&self.config_json).expect("config is JSON");
        let mut obj = serde_json::Map::new();
        obj.insert("config".into(), config);
        obj.insert("config_sha256".into(), self.digest.clone().into());
        obj.insert(key.into(), serde_json::to_value(value).map_err(|e| crate::PlateError::Invalid(e.to_string()))?);
        let p = self.path(name);
        fs::write(&p, serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("json") + "\n")?;
        Ok(p)
    }

    /// Legacy ASCII VTK structured grid with point scalar `w`. The title
    /// line is limited to 256 characters, so it carries the config digest;
    /// the full document is `config.json` next to the file.
    pub fn write_vtk(&self, name: &str, m: &Mesh, w: &Field, t: f64) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, vtk_string(m, w, &format!("w t={t:e} config-sha256={}", self.digest)))?;
        Ok(p)
    }

    /// Nodal-line polylines as CSV rows `(line, x, y)`.
    pub fn write_nodal_lines(&self, name: &str, lines: &NodalLineSet) -> Result<PathBuf> {
        let rows = lines.polylines.iter().enumerate().flat_map(|(k, pl)| pl.iter().map(move |v| [k as f64, v[0], v[1]]));
        self.write_csv(name, &["line", "x", "y"], rows)
    }
}

fn push_row(s: &mut String, r: &[f64]) {
    for (k, v) in r.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        // shortest round-trip form: deterministic and lossless
        let _ = write!(s, "{v:e}");
    }
    s.push('\n');
}

/// Legacy VTK text for the physical points of `w`. Annulus grids repeat
/// the first angular line so the ring closes.
pub fn vtk_string(m: &Mesh, w: &Field, title: &str) -> String {
    let n2 = if m.periodic2 { m.n2 + 1 } else { m.n2 };
    let npts = m.n1 * n2;
    let mut title: String = title.chars().filter(|c| *c != '\n').collect();
    title.truncate(255);
    let mut s = String::with_capacity(npts * 64);
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {} {} 1\nPOINTS {npts} double", m.n1, n2);
    for j in 0..n2 as isize {
        for i in 0..m.n1 as isize {
            let (x, y) = m.coords(i, j);
            let _ = writeln!(s, "{x:e} {y:e} 0");
        }
    }
    let _ = writeln!(s, "POINT_DATA {npts}\nSCALARS w double 1\nLOOKUP_TABLE default");
    for j in 0..n2 as isize {
        for i in 0..m.n1 as isize {
            let (i1, i2) = m.canonical(i, j);
            let _ = writeln!(s, "{:e}", w.get(i1, i2));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_annulus, build_rectangle};

    #[test]
    fn vtk_layout() {
        let m = build_rectangle(0.0, 1.0, 0.0, 2.0, 5, 6).unwrap();
        let f = Field::from_fn(&m, |x, y| x + y);
        let s = vtk_string(&m, &f, "title");
        assert!(s.contains("DIMENSIONS 5 6 1"));
        assert!(s.contains("POINTS 30 double"));
        assert!(s.contains("SCALARS w double 1"));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 6 + 30 + 3 + 30);
        assert_eq!(lines.last().unwrap().parse::<f64>().unwrap(), 3.0);
    }

    #[test]
    fn vtk_annulus_closes() {
        let m = build_annulus(0.5, 1.0, 5, 8).unwrap();
        let f = Field::from_fn(&m, |x, _| x);
        let s = vtk_string(&m, &f, "t");
        assert!(s.contains("DIMENSIONS 5 9 1"));
    }
}
