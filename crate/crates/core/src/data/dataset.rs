use std::path::Path;
use std::sync::Arc;

use super::schema::{FeatureKind, Schema, Task};
use crate::{Error, Result};

/// An `N × p` feature table with its response vector.
///
/// Categorical cells hold the category index (as an integral `f64`);
/// continuous cells hold the value. Missing cells carry `0.0` and are flagged
/// in a parallel mask until preprocessing fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    values: Vec<f64>,
    missing: Vec<bool>,
    y: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major cells. `None` marks a missing cell.
    pub fn from_cells(schema: Arc<Schema>, cells: Vec<Option<f64>>, y: Vec<f64>) -> Result<Self> {
        let p = schema.p();
        if cells.len() != y.len() * p {
            return Err(Error::Contract(format!(
                "{} cells do not form {} rows of {p} features",
                cells.len(),
                y.len()
            )));
        }
        let missing = cells.iter().map(Option::is_none).collect();
        let values = cells.into_iter().map(|c| c.unwrap_or(0.0)).collect();
        let ds = Dataset {
            schema,
            values,
            missing,
            y,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Builds a dataset with no missing cells.
    pub fn from_rows(schema: Arc<Schema>, values: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let missing = vec![false; values.len()];
        if values.len() != y.len() * schema.p() {
            return Err(Error::Contract("row-major values do not match row count".into()));
        }
        let ds = Dataset {
            schema,
            values,
            missing,
            y,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let p = self.schema.p();
        for n in 0..self.len() {
            for f in 0..p {
                if self.missing[n * p + f] {
                    continue;
                }
                let v = self.values[n * p + f];
                match self.schema.cardinality(f) {
                    Some(card) => {
                        if v.fract() != 0.0 || v < 0.0 || v as usize >= card {
                            return Err(Error::Ingestion {
                                row: n + 1,
                                column: self.schema.feature(f).name.clone(),
                                message: format!("category index {v} outside [0, {card})"),
                            });
                        }
                    }
                    None if !v.is_finite() => {
                        return Err(Error::Ingestion {
                            row: n + 1,
                            column: self.schema.feature(f).name.clone(),
                            message: "non-finite value".into(),
                        })
                    }
                    None => {}
                }
            }
            let yn = self.y[n];
            let bad = match self.schema.task() {
                Task::Classification => yn != 0.0 && yn != 1.0,
                Task::Regression => !yn.is_finite(),
            };
            if bad {
                return Err(Error::Ingestion {
                    row: n + 1,
                    column: self.schema.response().to_string(),
                    message: format!("invalid response {yn}"),
                });
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let p = self.schema.p();
        &self.values[n * p..(n + 1) * p]
    }

    pub fn value(&self, n: usize, feature: usize) -> f64 {
        self.values[n * self.schema.p() + feature]
    }

    pub fn category(&self, n: usize, feature: usize) -> usize {
        self.value(n, feature) as usize
    }

    pub fn is_missing(&self, n: usize, feature: usize) -> bool {
        self.missing[n * self.schema.p() + feature]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sensitive category of each row.
    pub fn sensitive_groups(&self) -> Vec<usize> {
        let s = self.schema.sensitive();
        (0..self.len()).map(|n| self.category(n, s)).collect()
    }

    /// Rows `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let p = self.schema.p();
        let mut values = Vec::with_capacity(indices.len() * p);
        let mut missing = Vec::with_capacity(indices.len() * p);
        let mut y = Vec::with_capacity(indices.len());
        for &n in indices {
            values.extend_from_slice(&self.values[n * p..(n + 1) * p]);
            missing.extend_from_slice(&self.missing[n * p..(n + 1) * p]);
            y.push(self.y[n]);
        }
        Dataset {
            schema: self.schema.clone(),
            values,
            missing,
            y,
        }
    }

    /// Copy with the sensitive cell of every row set to `category`.
    pub fn with_sensitive(&self, category: usize) -> Result<Dataset> {
        if category >= self.schema.sensitive_cardinality() {
            return Err(Error::Contract(format!(
                "sensitive category {category} out of range"
            )));
        }
        let p = self.schema.p();
        let s = self.schema.sensitive();
        let mut out = self.clone();
        for n in 0..self.len() {
            out.values[n * p + s] = category as f64;
            out.missing[n * p + s] = false;
        }
        Ok(out)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            missing: vec![false; values.len()],
            values,
            y: self.y.clone(),
        }
    }
}

/// Reads a UTF-8 comma-separated file with a header row. Column order is free
/// but the header must name exactly the schema's features plus its response.
/// Empty cells are missing features; categorical cells must use the declared
/// vocabulary.
pub fn load_csv(path: impl AsRef<Path>, schema: &Arc<Schema>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub(crate) fn read_csv<R: std::io::Read>(reader: R, schema: &Arc<Schema>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();

    let p = schema.p();
    let mut column_of = vec![usize::MAX; p];
    let mut response_col = None;
    for (c, name) in header.iter().enumerate() {
        if name == schema.response() {
            response_col = Some(c);
        } else if let Some(f) = schema.position(name) {
            column_of[f] = c;
        } else {
            return Err(Error::SchemaMismatch {
                feature: name.to_string(),
                message: "column not declared in schema".into(),
            });
        }
    }
    if let Some(f) = column_of.iter().position(|&c| c == usize::MAX) {
        return Err(Error::SchemaMismatch {
            feature: schema.feature(f).name.clone(),
            message: "declared feature missing from header".into(),
        });
    }
    let response_col = response_col.ok_or_else(|| Error::SchemaMismatch {
        feature: schema.response().to_string(),
        message: "response column missing from header".into(),
    })?;

    let mut cells = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (f, &c) in column_of.iter().enumerate() {
            let raw = record.get(c).unwrap_or("");
            let spec = schema.feature(f);
            if raw.is_empty() {
                cells.push(None);
                continue;
            }
            let value = match &spec.kind {
                FeatureKind::Categorical { categories } => categories
                    .iter()
                    .position(|cat| cat == raw)
                    .map(|k| k as f64)
                    .ok_or_else(|| Error::Ingestion {
                        row,
                        column: spec.name.clone(),
                        message: format!("undeclared category `{raw}`"),
                    })?,
                FeatureKind::Continuous => raw
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Ingestion {
                        row,
                        column: spec.name.clone(),
                        message: format!("cannot parse `{raw}` as a number"),
                    })?,
            };
            cells.push(Some(value));
        }
        let raw = record.get(response_col).unwrap_or("");
        let yn = raw.trim().parse::<f64>().map_err(|_| Error::Ingestion {
            row,
            column: schema.response().to_string(),
            message: format!("cannot parse response `{raw}`"),
        })?;
        y.push(yn);
    }
    debug_assert_eq!(cells.len(), y.len() * p);
    Dataset::from_cells(schema.clone(), cells, y)
}

/// Writes the dataset with categorical cells as their labels and the response
/// last. Missing cells are written empty.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let schema = ds.schema();
    let mut header = schema.feature_names();
    header.push(schema.response().to_string());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for n in 0..ds.len() {
        record.clear();
        for f in 0..schema.p() {
            if ds.is_missing(n, f) {
                record.push(String::new());
            } else if schema.cardinality(f).is_some() {
                record.push(schema.category_label(f, ds.category(n, f)).unwrap().to_string());
            } else {
                record.push(ds.value(n, f).to_string());
            }
        }
        record.push(ds.y[n].to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(
                vec![
                    FeatureSpec::categorical("g", &["A", "B"]),
                    FeatureSpec::continuous("x"),
                ],
                0,
                "y",
                Task::Classification,
            )
            .unwrap(),
        )
    }

    #[test]
    fn reads_three_rows() {
        let text = "g,x,y\nA,1.5,1\nB,2,0\nA,-3,0\n";
        let ds = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.row(1), &[1.0, 2.0]);
        assert_eq!(ds.y(), &[1.0, 0.0, 0.0]);
        assert!(!ds.has_missing());
    }

    #[test]
    fn column_order_is_free() {
        let text = "y,x,g\n1,1.5,B\n";
        let ds = read_csv(text.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.row(0), &[1.0, 1.5]);
    }

    #[test]
    fn missing_cell_is_flagged() {
        let text = "g,x,y\nA,,1\nB,2,0\n";
        let ds = read_csv(text.as_bytes(), &schema()).unwrap();
        assert!(ds.is_missing(0, 1));
        assert!(!ds.is_missing(1, 1));
    }

    #[test]
    fn undeclared_category_names_row_and_column() {
        let text = "g,x,y\nA,1,1\nZ,2,0\n";
        match read_csv(text.as_bytes(), &schema()).unwrap_err() {
            Error::Ingestion { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "g");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_column_and_bad_cells() {
        let unknown = "g,x,z,y\nA,1,0,1\n";
        assert!(matches!(
            read_csv(unknown.as_bytes(), &schema()),
            Err(Error::SchemaMismatch { feature, .. }) if feature == "z"
        ));
        let unparseable = "g,x,y\nA,abc,1\n";
        assert!(matches!(
            read_csv(unparseable.as_bytes(), &schema()),
            Err(Error::Ingestion { row: 1, .. })
        ));
        let bad_label = "g,x,y\nA,1,2\n";
        assert!(read_csv(bad_label.as_bytes(), &schema()).is_err());
    }

    #[test]
    fn write_then_read() {
        let text = "g,x,y\nA,,1\nB,0.1,0\n";
        let ds = read_csv(text.as_bytes(), &schema()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
        assert_eq!(load_csv(&path, &schema()).unwrap(), ds);
    }
}
