//! Trajectory CSV files.
//!
//! The file starts with `# `-prefixed comment lines, normally the rendered
//! run configuration, followed by a header `t,x_1,..,x_{N·d},y_1,..` and one
//! row per grid node. Agent `i`, component `c` is column `x_{i·d + c + 1}`.
//! Values are written with 17 significant digits, enough to restore every
//! `f64` exactly.

use std::io::{BufRead, BufReader, Read, Write};

use hkd_core::{Layout, Trajectory};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub fn header(layout: Layout) -> Vec<String> {
    let mut cols = Vec::with_capacity(1 + layout.width());
    cols.push("t".to_string());
    cols.extend((1..=layout.n_x * layout.dim).map(|k| format!("x_{k}")));
    cols.extend((1..=layout.n_y * layout.dim).map(|k| format!("y_{k}")));
    cols
}

fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(mut out: W, traj: &Trajectory, comment: &str) -> Result<()> {
    for line in comment.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(traj.layout))?;
    let mut row = Vec::with_capacity(1 + traj.layout.width());
    for (t, values) in traj.nodes() {
        row.clear();
        row.push(number(t));
        row.extend(values.iter().map(|&v| number(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Contents of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTrajectory {
    /// Comment lines with the `# ` prefix removed.
    pub comment: String,
    pub x_columns: usize,
    pub y_columns: usize,
    pub times: Vec<f64>,
    /// Row-major node values without the time column.
    pub values: Vec<f64>,
}

impl CsvTrajectory {
    pub fn into_trajectory(self, layout: Layout, tau: f64) -> Result<Trajectory> {
        if layout.n_x * layout.dim != self.x_columns || layout.n_y * layout.dim != self.y_columns {
            return Err(Error::Format(format!(
                "file has {} x and {} y columns, layout needs {} and {}",
                self.x_columns,
                self.y_columns,
                layout.n_x * layout.dim,
                layout.n_y * layout.dim
            )));
        }
        Ok(Trajectory::from_nodes(layout, tau, self.times, self.values)?)
    }

    /// Rebuilds the trajectory using the configuration in the comment.
    pub fn into_configured(self) -> Result<(RunConfig, Trajectory)> {
        let cfg = RunConfig::parse(&self.comment)?;
        let s = cfg.to_scenario(None)?;
        let traj = self.into_trajectory(s.params.layout(), s.params.tau)?;
        Ok((cfg, traj))
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<CsvTrajectory> {
    let mut reader = BufReader::new(input);
    let mut comment = String::new();
    let mut rest = String::new();
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        if let Some(c) = line.strip_prefix('#') {
            comment.push_str(c.strip_prefix(' ').unwrap_or(c));
        } else {
            rest.push_str(&line);
            reader.read_to_string(&mut rest)?;
            break;
        }
        line.clear();
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let head = r.headers()?.clone();
    if head.get(0) != Some("t") {
        return Err(Error::Format("first column must be `t`".into()));
    }
    let mut x_columns = 0;
    let mut y_columns = 0;
    for (k, name) in head.iter().skip(1).enumerate() {
        let expected = if y_columns == 0 && name.starts_with("x_") {
            x_columns += 1;
            format!("x_{x_columns}")
        } else {
            y_columns += 1;
            format!("y_{y_columns}")
        };
        if name != expected {
            return Err(Error::Format(format!("column {} is `{name}`, expected `{expected}`", k + 2)));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut fields = rec.iter().map(|f| {
            f.trim().parse::<f64>().map_err(|_| Error::Format(format!("not a number: `{f}`")))
        });
        times.push(fields.next().ok_or_else(|| Error::Format("empty row".into()))??);
        for f in fields {
            values.push(f?);
        }
    }
    Ok(CsvTrajectory { comment, x_columns, y_columns, times, values })
}
