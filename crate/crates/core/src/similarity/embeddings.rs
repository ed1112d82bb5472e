use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Fixed-dimension embedding vectors keyed by item id. Row `i` of the
/// matrix is the vector of `ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    vectors: DMatrix<f64>,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, vectors: DMatrix<f64>) -> Result<Self> {
        if ids.len() != vectors.nrows() {
            return Err(Error::dimension(format!("{} ids for {} vectors", ids.len(), vectors.nrows())));
        }
        if vectors.ncols() == 0 {
            return Err(Error::validation("embeddings have dimension 0"));
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            let r = pos % vectors.nrows();
            return Err(Error::validation(format!("embedding `{}` has a non-finite entry", ids[r])));
        }
        let mut seen = HashMap::new();
        for (i, id) in ids.iter().enumerate() {
            if let Some(prev) = seen.insert(id.as_str(), i) {
                return Err(Error::validation(format!("duplicate embedding id `{id}` (rows {prev} and {i})")));
            }
        }
        Ok(EmbeddingSet { ids, vectors })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::dimension("embedding rows have different lengths"));
        }
        EmbeddingSet::new(ids, DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.row(i).iter().copied().collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn subset(&self, idx: &[usize]) -> EmbeddingSet {
        EmbeddingSet {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            vectors: self.vectors.select_rows(idx),
        }
    }

    /// Rows for `ids` in that order; fails listing every missing id.
    pub fn select_ids(&self, ids: &[String]) -> Result<EmbeddingSet> {
        let lookup: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let missing: Vec<&str> = ids.iter().filter(|id| !lookup.contains_key(id.as_str())).map(String::as_str).collect();
        if !missing.is_empty() {
            return Err(Error::Dimension(format!("no embedding for items {missing:?}")));
        }
        let idx: Vec<usize> = ids.iter().map(|id| lookup[id.as_str()]).collect();
        Ok(self.subset(&idx))
    }

    /// Returns a copy whose ids are passed through `f`.
    pub fn map_ids(&self, f: impl Fn(&str) -> String) -> Result<EmbeddingSet> {
        EmbeddingSet::new(self.ids.iter().map(|s| f(s)).collect(), self.vectors.clone())
    }
}

/// Reads `item_id<TAB>v1<TAB>...<TAB>vd` lines. A first line starting with
/// `item_id` is treated as a header.
pub fn parse_embeddings<R: Read>(reader: R) -> Result<EmbeddingSet> {
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().trim().to_string();
        if lineno == 1 && id == "item_id" {
            continue;
        }
        if id.is_empty() {
            return Err(Error::Parse { line: lineno, message: "empty item_id".into() });
        }
        let values = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad float `{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::Parse { line: lineno, message: "no embedding values".into() });
        }
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} values, found {}", first.len(), values.len()),
                });
            }
        }
        ids.push(id);
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("embedding file has no rows".into()));
    }
    EmbeddingSet::from_rows(ids, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let e = parse_embeddings("a\t1.0\t2.0\nb\t-1\t0.5\n".as_bytes()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.dim(), 2);
        assert_eq!(e.vector(1), vec![-1.0, 0.5]);
        let h = parse_embeddings("item_id\tx\ty\na\t1\t2\n".as_bytes()).unwrap();
        assert_eq!(h.ids(), &["a".to_string()]);
    }

    #[test]
    fn ragged_rows_and_bad_values() {
        assert!(matches!(
            parse_embeddings("a\t1\t2\nb\t1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_embeddings("a\tnope\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_embeddings("".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(parse_embeddings("a\tNaN\n".as_bytes()).is_err());
    }

    #[test]
    fn select_reports_missing() {
        let e = parse_embeddings("a\t1\nb\t2\n".as_bytes()).unwrap();
        let err = e.select_ids(&["b".into(), "zz".into()]).unwrap_err();
        assert!(err.to_string().contains("zz"));
        assert_eq!(e.select_ids(&["b".into(), "a".into()]).unwrap().vector(0), vec![2.0]);
    }
}
