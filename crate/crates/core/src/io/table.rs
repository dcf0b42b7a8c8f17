//! Dataset CSV reading and writing.

use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupSpec};
use crate::error::{Error, Result};

/// Cells read as missing rather than non-numeric.
const MISSING_TOKENS: [&str; 4] = ["", "NA", "NaN", "nan"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRoles {
    pub name: String,
    pub members: Vec<String>,
}

/// Which header columns play which part. An intercept is always added.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnRoles {
    pub outcome: String,
    pub exposures: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Exposure groups; every exposure in exactly one. Without groups each
    /// exposure is its own group.
    #[serde(default)]
    pub groups: Vec<GroupRoles>,
}

impl ColumnRoles {
    /// Checks roles against each other, without looking at any data.
    pub fn validate(&self) -> Result<()> {
        if self.outcome.is_empty() {
            return Err(Error::Config("data.outcome is empty".into()));
        }
        if self.exposures.is_empty() {
            return Err(Error::Config("data.exposures is empty".into()));
        }
        let mut all: Vec<&str> = vec![self.outcome.as_str()];
        all.extend(self.exposures.iter().map(String::as_str));
        all.extend(self.covariates.iter().map(String::as_str));
        let mut sorted = all.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("column '{}' is assigned more than one role", w[0])));
        }
        self.group_spec().map(|_| ())
    }

    pub fn group_spec(&self) -> Result<GroupSpec> {
        if self.groups.is_empty() {
            return GroupSpec::new((0..self.exposures.len()).collect(), self.exposures.clone())
                .map_err(|e| Error::Config(e.to_string()));
        }
        let mut assignment: Vec<Option<usize>> = vec![None; self.exposures.len()];
        for (k, g) in self.groups.iter().enumerate() {
            for m in &g.members {
                let j = self.exposures.iter().position(|e| e == m).ok_or_else(|| {
                    Error::Config(format!("group '{}' lists '{m}', which is not an exposure", g.name))
                })?;
                if assignment[j].replace(k).is_some() {
                    return Err(Error::Config(format!("exposure '{m}' is in more than one group")));
                }
            }
        }
        let assignments = assignment
            .iter()
            .enumerate()
            .map(|(j, a)| {
                a.ok_or_else(|| {
                    Error::Config(format!("exposure '{}' is not in any group", self.exposures[j]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::new(assignments, self.groups.iter().map(|g| g.name.clone()).collect())
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Reads the header of `path` only.
pub fn read_header(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::InputFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut rdr = ::csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::MalformedCsv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(header.iter().map(|h| h.trim().to_string()).collect())
}

fn locate(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Parses an RFC-4180 file with a header row. Row numbers in errors are
/// 1-based data rows (the header is row 0).
pub fn load_csv(path: &Path, roles: &ColumnRoles) -> Result<Dataset> {
    roles.validate()?;
    let groups = roles.group_spec()?;
    let file = File::open(path).map_err(|e| Error::InputFile {
        path: path.to_path_buf(),
        source: e,
    })?;
    let malformed = |message: String| Error::MalformedCsv {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let y_col = locate(&header, &roles.outcome)?;
    let z_cols = roles
        .exposures
        .iter()
        .map(|n| locate(&header, n))
        .collect::<Result<Vec<_>>>()?;
    let x_cols = roles
        .covariates
        .iter()
        .map(|n| locate(&header, n))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut x = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| malformed(format!("row {row}: {e}")))?;
        let cell = |col: usize| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("").trim();
            if MISSING_TOKENS.contains(&raw) {
                return Err(Error::MissingValue {
                    row,
                    column: header[col].clone(),
                });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::NonNumeric {
                    row,
                    column: header[col].clone(),
                    value: raw.to_string(),
                }),
            }
        };
        y.push(cell(y_col)?);
        for &c in &z_cols {
            z.push(cell(c)?);
        }
        for &c in &x_cols {
            x.push(cell(c)?);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(malformed("no data rows".into()));
    }
    Dataset::with_intercept(
        DVector::from_vec(y),
        DMatrix::from_row_slice(n, z_cols.len(), &z),
        DMatrix::from_row_slice(n, x_cols.len(), &x),
        roles.exposures.clone(),
        roles.covariates.clone(),
        groups,
    )
}

/// Round-trip-exact decimal: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_writer(path: &Path) -> Result<::csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

pub(crate) fn csv_error(path: &Path, e: ::csv::Error) -> Error {
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serialization(format!("{}: {other:?}", path.display())),
    }
}

/// Writes outcome, exposures and non-intercept covariates, in that order.
pub fn write_dataset(d: &Dataset, outcome: &str, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let icol = d.intercept_column();
    let covs: Vec<usize> = (0..d.c()).filter(|&j| Some(j) != icol).collect();
    let mut header = vec![outcome.to_string()];
    header.extend(d.exposure_names().iter().cloned());
    header.extend(covs.iter().map(|&j| d.covariate_names()[j].clone()));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for i in 0..d.n() {
        let mut row = vec![fmt_f64(d.y()[i])];
        row.extend((0..d.p()).map(|j| fmt_f64(d.exposures()[(i, j)])));
        row.extend(covs.iter().map(|&j| fmt_f64(d.covariates()[(i, j)])));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles() -> ColumnRoles {
        ColumnRoles {
            outcome: "y".into(),
            exposures: vec!["a".into(), "b".into()],
            covariates: vec!["age".into()],
            groups: vec![],
        }
    }

    #[test]
    fn reads_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "id,y,a,b,age\n1,1.5,2,3,40\n2,2.5,1,0,41\n3,0.5,4,1,39\n").unwrap();
        let d = load_csv(&p, &roles()).unwrap();
        assert_eq!((d.n(), d.p(), d.c()), (3, 2, 2));
        assert_eq!(d.y()[1], 2.5);
        assert_eq!(d.exposures()[(2, 0)], 4.0);
        assert_eq!(d.covariates()[(0, 1)], 40.0);
    }

    #[test]
    fn cell_errors_name_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "y,a,b,age\n1,2,3,40\n2,,0,41\n").unwrap();
        match load_csv(&p, &roles()) {
            Err(Error::MissingValue { row, column }) => assert_eq!((row, column.as_str()), (2, "a")),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&p, "y,a,b,age\n1,2,3,forty\n").unwrap();
        assert!(matches!(load_csv(&p, &roles()), Err(Error::NonNumeric { row: 1, .. })));
        std::fs::write(&p, "y,a,b\n1,2,3\n").unwrap();
        assert!(matches!(load_csv(&p, &roles()), Err(Error::MissingColumn(c)) if c == "age"));
        std::fs::write(&p, "y,a,b,age\n1,2,3\n").unwrap();
        assert!(matches!(load_csv(&p, &roles()), Err(Error::MalformedCsv { .. })));
        assert!(matches!(
            load_csv(&dir.path().join("absent.csv"), &roles()),
            Err(Error::InputFile { .. })
        ));
    }

    #[test]
    fn group_roles_checked() {
        let mut r = roles();
        r.groups = vec![GroupRoles {
            name: "g".into(),
            members: vec!["a".into()],
        }];
        assert!(r.validate().is_err());
        r.groups[0].members.push("b".into());
        r.validate().unwrap();
        r.covariates.push("a".into());
        assert!(r.validate().is_err());
    }
}
