use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Reserved out-of-vocabulary token. Always row 0.
pub const UNK_TOKEN: &str = "<unk>";

/// Fixed token vectors with a vocabulary index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    matrix: Array2<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `(token, vector)` rows. A zero UNK row is prepended
    /// unless the rows already contain [`UNK_TOKEN`]; duplicate tokens keep
    /// their first vector.
    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension", "must be positive"));
        }
        let mut tokens = vec![UNK_TOKEN.to_owned()];
        let mut data = vec![0.0; dim];
        let mut index = HashMap::new();
        index.insert(UNK_TOKEN.to_owned(), 0);
        for (token, vector) in rows {
            if vector.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for `{token}` has {} entries, expected {dim}",
                    vector.len()
                )));
            }
            if token == UNK_TOKEN {
                data[..dim].copy_from_slice(&vector);
                continue;
            }
            if index.contains_key(&token) {
                continue;
            }
            index.insert(token.clone(), tokens.len());
            tokens.push(token);
            data.extend_from_slice(&vector);
        }
        let matrix = Array2::from_shape_vec((tokens.len(), dim), data).expect("shape checked");
        Ok(EmbeddingTable { index, tokens, matrix })
    }

    /// Seeded vectors with entries uniform in `[-scale, scale]`.
    pub fn random<S: AsRef<str>>(tokens: &[S], dim: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = tokens
            .iter()
            .map(|t| {
                let v = (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect();
                (t.as_ref().to_owned(), v)
            })
            .collect();
        EmbeddingTable::from_rows(dim, rows)
    }

    /// Reads a whitespace-separated word-vector text file
    /// (`token v1 v2 ... vk` per line, GloVe layout).
    pub fn load_text(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file), &path.display().to_string())
    }

    pub fn read_text<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            source_name: source_name.to_owned(),
            line,
            reason,
        };
        let mut dim = None;
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let vector = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(lineno, format!("`{f}` is not a finite number")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vector.is_empty() {
                return Err(parse_err(lineno, format!("token `{token}` has no vector")));
            }
            match dim {
                None => dim = Some(vector.len()),
                Some(k) if k != vector.len() => {
                    return Err(parse_err(
                        lineno,
                        format!("expected {k} components, found {}", vector.len()),
                    ))
                }
                Some(_) => {}
            }
            rows.push((token.to_owned(), vector));
        }
        let dim = dim.ok_or_else(|| parse_err(0, "no vectors found".into()))?;
        EmbeddingTable::from_rows(dim, rows)
    }

    /// Writes every row except the implicit zero UNK row.
    pub fn save_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        for (row, token) in self.tokens.iter().enumerate() {
            let v = self.matrix.row(row);
            if row == 0 && v.iter().all(|&x| x == 0.0) {
                continue;
            }
            write!(w, "{token}").map_err(io)?;
            for x in v {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Row index of `token`, falling back to UNK.
    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// Stacks the rows for `ids` into an `L x k` matrix.
    pub fn gather(&self, ids: &[usize]) -> Array2<f64> {
        let k = self.dim();
        let mut out = Array2::zeros((ids.len(), k));
        for (i, &id) in ids.iter().enumerate() {
            out.row_mut(i).assign(&self.matrix.row(id));
        }
        out
    }

    /// Rebuilds a table from a token list and a row-major matrix, as stored
    /// in checkpoints. Row 0 must be UNK.
    pub fn from_parts(tokens: Vec<String>, matrix: Array2<f64>) -> Result<Self> {
        if tokens.len() != matrix.nrows() {
            return Err(Error::Shape(format!(
                "{} tokens for {} embedding rows",
                tokens.len(),
                matrix.nrows()
            )));
        }
        if tokens.first().map(String::as_str) != Some(UNK_TOKEN) {
            return Err(Error::invalid("vocabulary", "row 0 must be the UNK token"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::invalid("vocabulary", format!("duplicate token `{t}`")));
            }
        }
        Ok(EmbeddingTable { index, tokens, matrix })
    }
}
