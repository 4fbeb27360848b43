//! Observed samples `(x_i, y_i)` with covariates in `[0, 1]`, and the CSV
//! formats used by the command-line tool.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::solver::GridSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    x: f64,
    y: f64,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(invalid(format!(
                "x has {} entries but y has {}",
                x.len(),
                y.len()
            )));
        }
        if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain {
                what: format!("covariate {i}"),
                value: v,
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("responses must be finite"));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Reads a CSV file with header `x,y`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: Row = row?;
            x.push(row.x);
            y.push(row.y);
        }
        Self::new(x, y)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (&x, &y) in self.x.iter().zip(&self.y) {
            w.serialize(Row { x, y })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes a trajectory as CSV with columns `t, f, f_deriv_1, ..`.
pub fn write_trajectory_csv<W: std::io::Write>(sol: &GridSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "f".to_string()];
    header.extend((1..sol.order()).map(|j| format!("f_deriv_{j}")));
    w.write_record(&header)?;
    for (k, t) in sol.grid_points().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(sol.state(k).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
