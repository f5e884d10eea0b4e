//! CSV ingestion: a header row, a response column, a status column and
//! numeric covariate columns. Columns not named by the model are ignored.

use std::path::Path;

use aroc_core::data::{Dataset, Sample, Schema};

use crate::CliError;

/// Which columns to read and how to split subjects by status.
pub struct Layout<'a> {
    pub response: &'a str,
    pub status: &'a str,
    /// Status value marking diseased subjects.
    pub tag: &'a str,
    pub covariates: &'a [String],
}

fn data_err(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Data(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Data(format!("{}: {msg}", path.display())),
    }
}

pub fn read_dataset(path: &Path, layout: &Layout) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, None, e))?;
    let headers = reader.headers().map_err(|e| data_err(path, Some(1), e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, Some(1), format!("missing column `{name}`")))
    };
    let y_col = column(layout.response)?;
    let s_col = column(layout.status)?;
    let x_cols = layout
        .covariates
        .iter()
        .map(|c| column(c))
        .collect::<Result<Vec<_>, _>>()?;

    let p = x_cols.len();
    let (mut y0, mut y1) = (Vec::new(), Vec::new());
    let (mut x0, mut x1) = (vec![Vec::new(); p], vec![Vec::new(); p]);
    for rec in reader.records() {
        let rec = rec.map_err(|e| data_err(path, e.position().map(|p| p.line()), e))?;
        let line = rec.position().map(|p| p.line());
        let field = |j: usize, name: &str| -> Result<f64, CliError> {
            let raw = rec.get(j).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| data_err(path, line, format!("column `{name}`: `{raw}` is not a number")))?;
            if !v.is_finite() {
                return Err(data_err(
                    path,
                    line,
                    format!("column `{name}`: non-finite value `{raw}`"),
                ));
            }
            Ok(v)
        };
        let status = rec.get(s_col).unwrap_or("");
        if status.is_empty() {
            return Err(data_err(path, line, format!("column `{}` is empty", layout.status)));
        }
        let diseased = status == layout.tag;
        let y = field(y_col, layout.response)?;
        let (ys, xs) = if diseased {
            (&mut y1, &mut x1)
        } else {
            (&mut y0, &mut x0)
        };
        ys.push(y);
        for ((col, &j), name) in xs.iter_mut().zip(&x_cols).zip(layout.covariates) {
            col.push(field(j, name)?);
        }
    }
    if y0.is_empty() || y1.is_empty() {
        return Err(data_err(
            path,
            None,
            format!(
                "need both groups; found {} nondiseased and {} diseased rows (diseased status `{}`)",
                y0.len(),
                y1.len(),
                layout.tag
            ),
        ));
    }
    let schema = Schema::new(layout.covariates.iter().cloned()).map_err(CliError::from)?;
    let nondiseased = Sample::new(y0, x0).map_err(CliError::from)?;
    let diseased = Sample::new(y1, x1).map_err(CliError::from)?;
    Dataset::new(schema, nondiseased, diseased).map_err(CliError::from)
}

/// Writes a dataset in the input layout (`y`, `status`, covariates).
pub fn write_dataset(data: &Dataset, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut header = vec!["y".to_string(), "status".to_string()];
    header.extend(data.schema().names().iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (status, s) in [("0", data.nondiseased()), ("1", data.diseased())] {
        for i in 0..s.len() {
            let mut row = vec![s.y()[i].to_string(), status.to_string()];
            row.extend(s.record(i).iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
