//! Long-format CSV tables, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pide_control::discretization::SpatialGrid;
use pide_control::time::{TimeGrid, Trajectory};

use crate::error::CliError;

#[derive(Debug, Clone, Copy)]
pub struct Fmt {
    digits: usize,
}

impl Fmt {
    /// `digits` significant decimal digits.
    pub fn new(digits: usize) -> Self {
        Self { digits }
    }

    pub fn num(&self, v: f64) -> String {
        format!("{:.*e}", self.digits - 1, v)
    }

    /// `v` rounded to what [`num`](Self::num) prints.
    pub fn quantize(&self, v: f64) -> f64 {
        self.num(v).parse().expect("formatted float parses")
    }
}

/// CSV table under construction.
pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.columns, "row width matches header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| CliError::Io(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(|e| CliError::Io(format!("renaming to {}: {e}", path.display())))?;
    Ok(path)
}

/// `(t, x, value)` at every level and every node, boundary nodes included.
pub fn trajectory_table(
    fmt: Fmt,
    time: &TimeGrid,
    grid: &SpatialGrid,
    value: &str,
    traj: &Trajectory,
) -> String {
    let nodes = grid.all_nodes();
    let last = nodes.len() - 1;
    let mut out = format!("t,x,{value}\n");
    for n in 0..=traj.n_steps() {
        let t = fmt.num(time.t(n));
        let level = traj.level(n);
        for (i, &x) in nodes.iter().enumerate() {
            let v = if i == 0 || i == last { 0.0 } else { level[i - 1] };
            let _ = writeln!(out, "{t},{},{}", fmt.num(x), fmt.num(v));
        }
    }
    out
}

/// Parses a table written by [`trajectory_table`] back into a trajectory on
/// the given grids.
pub fn read_trajectory(text: &str, time: &TimeGrid, grid: &SpatialGrid) -> Result<Trajectory, CliError> {
    let nodes = grid.all_nodes();
    let n_nodes = nodes.len();
    let n_steps = time.n_steps();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.split(',').count() != 3 || !header.starts_with("t,x,") {
        return Err(CliError::Config(format!("unexpected trajectory header {header:?}")));
    }
    let rows: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != (n_steps + 1) * n_nodes {
        return Err(CliError::Config(format!(
            "trajectory has {} rows, expected {} ({} levels × {} nodes)",
            rows.len(),
            (n_steps + 1) * n_nodes,
            n_steps + 1,
            n_nodes
        )));
    }
    let mut traj = Trajectory::zeros(n_steps, grid.n_dof());
    let tol = 1e-9 * time.final_time().max(1.0);
    for (r, line) in rows.iter().enumerate() {
        let (n, i) = (r / n_nodes, r % n_nodes);
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("row {}: {e}", r + 2)))?;
        if cells.len() != 3 {
            return Err(CliError::Config(format!("row {} has {} columns", r + 2, cells.len())));
        }
        if (cells[0] - time.t(n)).abs() > tol || (cells[1] - nodes[i]).abs() > 1e-9 {
            return Err(CliError::Config(format!(
                "row {} at (t, x) = ({}, {}) does not match the grid point ({}, {})",
                r + 2,
                cells[0],
                cells[1],
                time.t(n),
                nodes[i]
            )));
        }
        if i > 0 && i < n_nodes - 1 {
            traj.level_mut(n)[i - 1] = cells[2];
        }
    }
    Ok(traj)
}
