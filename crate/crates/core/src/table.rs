//! Reading numeric CSV columns by header name.

use std::io::Read;

use crate::error::{Error, Result};

/// Reads the named columns of a headed CSV file as numbers, in the order
/// requested.
pub fn read_columns<R: Read>(reader: R, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| Error::InvalidInput(format!("missing column {name}")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v = field.parse().map_err(|_| {
                Error::InvalidInput(format!("row {}: {} is not a number: {field:?}", line + 2, names[c]))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_by_name() {
        let text = "b,a\n1,2\n3,4\n";
        let cols = read_columns(text.as_bytes(), &["a", "b"]).unwrap();
        assert_eq!(cols, vec![vec![2.0, 4.0], vec![1.0, 3.0]]);
        assert!(read_columns(text.as_bytes(), &["c"]).is_err());
        assert!(read_columns("a\nx\n".as_bytes(), &["a"]).is_err());
    }
}
