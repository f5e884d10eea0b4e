//! Study data: test outcomes and covariates split by disease status.

use serde::{Deserialize, Serialize};

use crate::error::{ArocError, Result};

/// Ordered covariate names shared by both groups of a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Schema {
    names: Vec<String>,
}

impl Schema {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ArocError::invalid(format!("duplicate covariate name `{n}`")));
            }
        }
        Ok(Self { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ArocError::MissingCovariate(name.to_string()))
    }
}

/// Outcomes and covariate columns of one disease group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Sample {
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl Sample {
    /// `columns[j][i]` is covariate `j` of subject `i`.
    pub fn new(y: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        for (j, c) in columns.iter().enumerate() {
            if c.len() != y.len() {
                return Err(ArocError::DimensionMismatch {
                    context: format!("covariate column {j}"),
                    expected: y.len(),
                    found: c.len(),
                });
            }
        }
        if let Some(v) = y.iter().chain(columns.iter().flatten()).find(|v| !v.is_finite()) {
            return Err(ArocError::NonFinite {
                what: "sample data".into(),
                value: *v,
            });
        }
        Ok(Self { y, columns })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn n_covariates(&self) -> usize {
        self.columns.len()
    }

    /// Covariate record of subject `i`, aligned with the schema.
    pub fn record(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Subsample by row indices (repetitions allowed).
    pub fn select(&self, rows: &[usize]) -> Sample {
        Sample {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }
}

/// One study: a covariate schema plus nondiseased and diseased samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    nondiseased: Sample,
    diseased: Sample,
}

impl Dataset {
    pub fn new(schema: Schema, nondiseased: Sample, diseased: Sample) -> Result<Self> {
        for (label, s) in [("nondiseased", &nondiseased), ("diseased", &diseased)] {
            if s.n_covariates() != schema.len() {
                return Err(ArocError::DimensionMismatch {
                    context: format!("{label} covariate count"),
                    expected: schema.len(),
                    found: s.n_covariates(),
                });
            }
        }
        Ok(Self {
            schema,
            nondiseased,
            diseased,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn nondiseased(&self) -> &Sample {
        &self.nondiseased
    }

    pub fn diseased(&self) -> &Sample {
        &self.diseased
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_lookup_and_duplicates() {
        let s = Schema::new(["age", "gender"]).unwrap();
        assert_eq!(s.index_of("gender").unwrap(), 1);
        assert!(matches!(s.index_of("bmi"), Err(ArocError::MissingCovariate(_))));
        assert!(Schema::new(["a", "a"]).is_err());
    }

    #[test]
    fn sample_validates_shapes() {
        assert!(Sample::new(vec![1.0, 2.0], vec![vec![1.0]]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN], vec![]).is_err());
        let s = Sample::new(vec![1.0, 2.0, 3.0], vec![vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(s.record(1), vec![5.0]);
        let sub = s.select(&[2, 2, 0]);
        assert_eq!(sub.y(), &[3.0, 3.0, 1.0]);
        assert_eq!(sub.column(0), &[6.0, 6.0, 4.0]);
    }

    #[test]
    fn dataset_checks_covariate_count() {
        let schema = Schema::new(["x"]).unwrap();
        let a = Sample::new(vec![1.0], vec![vec![0.0]]).unwrap();
        let b = Sample::new(vec![1.0], vec![]).unwrap();
        assert!(Dataset::new(schema.clone(), a.clone(), b).is_err());
        assert!(Dataset::new(schema, a.clone(), a).is_ok());
    }
}
