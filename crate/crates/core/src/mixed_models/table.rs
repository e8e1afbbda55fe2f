//! Long-format observation tables and their CSV readers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub group: String,
    pub x: f64,
    pub y: f64,
}

/// Observations of `(group, x, y)` plus an optional group-level covariate.
///
/// Groups keep the order in which they first appear in `rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    rows: Vec<Observation>,
    groups: Vec<String>,
    covariates: Option<BTreeMap<String, f64>>,
}

/// One group's observations in column form.
#[derive(Debug, Clone)]
pub(crate) struct GroupColumns {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Option<f64>,
}

impl ObservationTable {
    pub fn new(rows: Vec<Observation>, covariates: Option<BTreeMap<String, f64>>) -> Result<Self> {
        let mut groups: Vec<String> = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if !r.x.is_finite() || !r.y.is_finite() {
                return Err(Error::Data(format!("observation {i} has a non-finite value")));
            }
            if !groups.contains(&r.group) {
                groups.push(r.group.clone());
            }
        }
        let table = Self {
            rows,
            groups,
            covariates,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::Data(format!(
                "need at least 2 groups, found {}",
                self.groups.len()
            )));
        }
        for g in &self.groups {
            let xs: Vec<f64> = self.rows.iter().filter(|r| &r.group == g).map(|r| r.x).collect();
            if xs.len() < 3 {
                return Err(Error::Data(format!(
                    "group '{g}' has {} observations, need at least 3",
                    xs.len()
                )));
            }
            if xs.iter().all(|&x| x == xs[0]) {
                return Err(Error::Data(format!("x is constant within group '{g}'")));
            }
        }
        if let Some(cov) = &self.covariates {
            for g in &self.groups {
                if !cov.contains_key(g) {
                    return Err(Error::Data(format!("no covariate value for group '{g}'")));
                }
            }
            if let Some(extra) = cov.keys().find(|k| !self.groups.contains(k)) {
                return Err(Error::Data(format!("covariate given for unknown group '{extra}'")));
            }
            let first = cov[&self.groups[0]];
            if self.groups.iter().all(|g| cov[g] == first) {
                return Err(Error::Data("covariate z is constant across groups".into()));
            }
            if cov.values().any(|z| !z.is_finite()) {
                return Err(Error::Data("covariate z has a non-finite value".into()));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Observation] {
        &self.rows
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn covariates(&self) -> Option<&BTreeMap<String, f64>> {
        self.covariates.as_ref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Replaces the covariate map.
    pub fn with_covariates(self, covariates: Option<BTreeMap<String, f64>>) -> Result<Self> {
        Self::new(self.rows, covariates)
    }

    /// Applies `x -> ax * x + bx`, `y -> ay * y + by` and `z -> az * z + bz`.
    pub fn affine(&self, (ax, bx): (f64, f64), (ay, by): (f64, f64), (az, bz): (f64, f64)) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| Observation {
                group: r.group.clone(),
                x: ax * r.x + bx,
                y: ay * r.y + by,
            })
            .collect();
        let cov = self
            .covariates
            .as_ref()
            .map(|c| c.iter().map(|(g, z)| (g.clone(), az * z + bz)).collect());
        Self::new(rows, cov)
    }

    /// z-scores x and y over all observations and z across groups.
    pub fn standardized(&self) -> Result<Self> {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.x).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.y).collect();
        let (mx, sx) = mean_sd(&xs);
        let (my, sy) = mean_sd(&ys);
        if sy == 0.0 {
            return Err(Error::Degenerate("y is constant; cannot standardize".into()));
        }
        let (az, bz) = match &self.covariates {
            Some(c) => {
                let zs: Vec<f64> = self.groups.iter().map(|g| c[g]).collect();
                let (mz, sz) = mean_sd(&zs);
                (1.0 / sz, -mz / sz)
            }
            None => (1.0, 0.0),
        };
        self.affine((1.0 / sx, -mx / sx), (1.0 / sy, -my / sy), (az, bz))
    }

    pub(crate) fn group_columns(&self) -> Vec<GroupColumns> {
        self.groups
            .iter()
            .map(|g| {
                let (x, y) = self
                    .rows
                    .iter()
                    .filter(|r| &r.group == g)
                    .map(|r| (r.x, r.y))
                    .unzip();
                GroupColumns {
                    x,
                    y,
                    z: self.covariates.as_ref().map(|c| c[g]),
                }
            })
            .collect()
    }

    /// Reads an observation CSV (a `group` column plus the named x and y
    /// columns) and, optionally, a covariate CSV (`group` plus the named z
    /// column).
    pub fn from_csv(
        observations: &Path,
        x_col: &str,
        y_col: &str,
        covariates: Option<(&Path, &str)>,
    ) -> Result<Self> {
        let (header, records) = read_csv(observations)?;
        let gi = column(&header, "group", observations)?;
        let xi = column(&header, x_col, observations)?;
        let yi = column(&header, y_col, observations)?;
        let mut rows = Vec::with_capacity(records.len());
        for (line, rec) in &records {
            rows.push(Observation {
                group: rec[gi].clone(),
                x: number(&rec[xi], x_col, observations, *line)?,
                y: number(&rec[yi], y_col, observations, *line)?,
            });
        }
        let cov = match covariates {
            Some((path, z_col)) => {
                let (header, records) = read_csv(path)?;
                let gi = column(&header, "group", path)?;
                let zi = column(&header, z_col, path)?;
                let mut map = BTreeMap::new();
                for (line, rec) in &records {
                    let z = number(&rec[zi], z_col, path, *line)?;
                    if map.insert(rec[gi].clone(), z).is_some() {
                        return Err(Error::Format(format!(
                            "{} line {line}: duplicate covariate for group '{}'",
                            path.display(),
                            rec[gi]
                        )));
                    }
                }
                Some(map)
            }
            None => None,
        };
        Self::new(rows, cov)
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type Records = Vec<(u64, Vec<String>)>;

fn read_csv(path: &Path) -> Result<(Vec<String>, Records)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        records.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok((header, records))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Format(match line {
            Some(l) => format!("{} line {l}: {kind:?}", path.display()),
            None => format!("{}: {kind:?}", path.display()),
        }),
    }
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| {
        Error::Format(format!(
            "{} line 1: missing column '{name}' (header: {})",
            path.display(),
            header.join(",")
        ))
    })
}

fn number(field: &str, col: &str, path: &Path, line: u64) -> Result<f64> {
    field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        Error::Format(format!(
            "{} line {line}: column '{col}' has non-numeric value '{field}'",
            path.display()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(group: &str, x: f64, y: f64) -> Observation {
        Observation {
            group: group.into(),
            x,
            y,
        }
    }

    fn two_groups() -> Vec<Observation> {
        vec![
            obs("a", 0.0, 1.0),
            obs("a", 1.0, 2.0),
            obs("a", 2.0, 2.5),
            obs("b", 0.0, 0.0),
            obs("b", 1.0, 1.5),
            obs("b", 2.0, 3.5),
        ]
    }

    #[test]
    fn validates_group_shape() {
        assert!(ObservationTable::new(two_groups(), None).is_ok());
        let mut rows = two_groups();
        rows.pop();
        assert!(matches!(ObservationTable::new(rows, None), Err(Error::Data(_))));
        let mut rows = two_groups();
        for r in rows.iter_mut().filter(|r| r.group == "b") {
            r.x = 4.0;
        }
        assert!(matches!(ObservationTable::new(rows, None), Err(Error::Data(_))));
        let single: Vec<_> = two_groups().into_iter().filter(|r| r.group == "a").collect();
        assert!(ObservationTable::new(single, None).is_err());
    }

    #[test]
    fn validates_covariates() {
        let cov = |pairs: &[(&str, f64)]| {
            Some(pairs.iter().map(|(g, z)| (g.to_string(), *z)).collect::<BTreeMap<_, _>>())
        };
        assert!(ObservationTable::new(two_groups(), cov(&[("a", 1.0), ("b", 2.0)])).is_ok());
        assert!(ObservationTable::new(two_groups(), cov(&[("a", 1.0)])).is_err());
        assert!(ObservationTable::new(two_groups(), cov(&[("a", 1.0), ("b", 1.0)])).is_err());
        assert!(ObservationTable::new(two_groups(), cov(&[("a", 1.0), ("b", 2.0), ("c", 0.0)])).is_err());
    }

    #[test]
    fn standardization_is_z_score() {
        let t = ObservationTable::new(two_groups(), None).unwrap().standardized().unwrap();
        let xs: Vec<f64> = t.rows().iter().map(|r| r.x).collect();
        let (m, s) = mean_sd(&xs);
        assert!(m.abs() < 1e-15 && (s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        std::fs::write(&path, "group,x,y\na,0,1\na,1,2\na,2,abc\n").unwrap();
        match ObservationTable::from_csv(&path, "x", "y", None) {
            Err(Error::Format(msg)) => assert!(msg.contains("line 4"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
        std::fs::write(&path, "group,N,FID\na,0,1\n").unwrap();
        match ObservationTable::from_csv(&path, "x", "FID", None) {
            Err(Error::Format(msg)) => assert!(msg.contains("missing column 'x'")),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
