//! Transform files: CSV with interleaved re/im columns, TBT1 `n × n × 1`, or built-in names.

use std::fs;
use std::path::Path;

use tubalg_core::{CMatrix, Tensor3, Transform, C64, TRANSFORM_TOL};

use crate::{tbt, CliError, FormatError};

/// Resolves `builtin:<kind>:<n>`, a `.csv` path, or a TBT1 path.
pub fn load(spec: &str, tol: Option<f64>) -> Result<Transform, CliError> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        return builtin(rest);
    }
    let path = Path::new(spec);
    let mat = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        parse_csv(&bytes)
    } else {
        from_tensor(&tbt::read(path)?)
    }
    .map_err(|source| CliError::Format {
        path: path.into(),
        source,
    })?;
    Ok(Transform::build(mat, tol.unwrap_or(TRANSFORM_TOL))?)
}

fn builtin(rest: &str) -> Result<Transform, CliError> {
    let usage = || CliError::Usage(format!("unknown built-in transform {rest:?}; use dct:N, dft:N or identity:N"));
    let (kind, n) = rest.split_once(':').ok_or_else(usage)?;
    let n: usize = n.parse().map_err(|_| usage())?;
    if n == 0 {
        return Err(CliError::Usage("built-in transform size must be positive".into()));
    }
    match kind {
        "dct" => Ok(Transform::dct(n)),
        "dft" => Ok(Transform::dft(n)),
        "identity" => Ok(Transform::identity(n)),
        _ => Err(usage()),
    }
}

/// `n` rows of `2n` fields `re₀, im₀, re₁, im₁, …`; no header.
pub fn parse_csv(bytes: &[u8]) -> Result<CMatrix, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| FormatError::Csv {
            offset: e.position().map_or(0, |p| p.byte()),
            message: e.to_string(),
        })?;
        let offset = record.position().map_or(0, |p| p.byte());
        let err = |message: String| FormatError::Csv { offset, message };
        if record.len() % 2 != 0 {
            return Err(err(format!("row has {} fields, expected an even count", record.len())));
        }
        let mut row = Vec::with_capacity(record.len() / 2);
        for pair in 0..record.len() / 2 {
            let parse = |f: &str| f.parse::<f64>().map_err(|_| err(format!("field {f:?} is not a number")));
            row.push(C64::new(parse(&record[2 * pair])?, parse(&record[2 * pair + 1])?));
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(err(format!("row has {} entries, previous rows have {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows[0].len() != n {
        return Err(FormatError::Csv {
            offset: bytes.len() as u64,
            message: format!("expected a square matrix, got {n} rows of {} entries", rows.first().map_or(0, Vec::len)),
        });
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Shortest round-trip decimal, so reloading gives the same matrix bit for bit.
pub fn to_csv(mat: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..mat.nrows() {
        let fields: Vec<String> = (0..mat.ncols())
            .flat_map(|j| [format!("{}", mat[(i, j)].re), format!("{}", mat[(i, j)].im)])
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn from_tensor(t: &Tensor3) -> Result<CMatrix, FormatError> {
    let (m, p, n) = t.dims();
    if m != p || n != 1 || m == 0 {
        return Err(FormatError::NotSquare((m, p, n)));
    }
    Ok(t.slice(0))
}

pub fn to_tensor(mat: &CMatrix) -> Tensor3 {
    Tensor3::from_fn(mat.nrows(), mat.ncols(), 1, |i, j, _| mat[(i, j)])
}

/// Writes CSV for a `.csv` path and TBT1 otherwise.
pub fn save(path: &Path, t: &Transform) -> Result<(), CliError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        fs::write(path, to_csv(t.matrix())).map_err(|e| CliError::io(path, e))
    } else {
        tbt::write(path, &to_tensor(t.matrix()))
    }
}
