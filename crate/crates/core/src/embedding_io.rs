//! Embedding files keyed by external id.
//!
//! Text: header `n dim`, then `id v1 ... vdim` per line.
//! Binary: magic `SGEMB001`, `n` and `dim` as u64 LE, then per row a u32 LE
//! id length, the UTF-8 id bytes and `dim` f32 LE values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SGEMB001";

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                found: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(EmbeddingTable { ids, dim, data, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Ids in `required` that have no row, in the given order.
    pub fn missing<'a>(&self, required: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        required
            .into_iter()
            .filter(|id| !self.index.contains_key(*id))
            .map(str::to_owned)
            .collect()
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{} {}", self.len(), self.dim)?;
            for (i, id) in self.ids.iter().enumerate() {
                w.write_all(id.as_bytes())?;
                for x in self.row(i) {
                    write!(w, " {x}")?;
                }
                w.write_all(b"\n")?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            w.write_all(MAGIC)?;
            w.write_all(&(self.len() as u64).to_le_bytes())?;
            w.write_all(&(self.dim as u64).to_le_bytes())?;
            for (i, id) in self.ids.iter().enumerate() {
                w.write_all(&(id.len() as u32).to_le_bytes())?;
                w.write_all(id.as_bytes())?;
                for &x in self.row(i) {
                    w.write_all(&(x as f32).to_le_bytes())?;
                }
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Reads either format, detected by the binary magic.
    pub fn read(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut head = [0u8; 8];
        let n = file.read(&mut head).map_err(|e| Error::io(path, e))?;
        drop(file);
        if n == 8 && &head == MAGIC {
            Self::read_binary(path)
        } else {
            Self::read_text(path)
        }
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(BufReader::new(file), &path.display().to_string())
    }

    pub fn parse_text(reader: impl BufRead, name: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: name.to_owned(),
            line,
            message,
        };
        let mut lines = reader.lines().enumerate();
        let (n, dim) = match lines.next() {
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(name, e))?;
                let mut it = line.split_whitespace().map(str::parse::<usize>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(n)), Some(Ok(d)), None) => (n, d),
                    _ => return Err(parse_err(1, format!("expected header `n dim`, got {line:?}"))),
                }
            }
            None => return Err(parse_err(1, "empty file".into())),
        };

        let mut ids = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        let mut seen = HashMap::with_capacity(n);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io(name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let id = fields.next().expect("non-empty line");
            let start = data.len();
            for f in fields {
                let x: f64 = f
                    .parse()
                    .map_err(|_| parse_err(lineno + 1, format!("bad value {f:?}")))?;
                data.push(x);
            }
            let found = data.len() - start;
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
            if seen.insert(id.to_owned(), ()).is_some() {
                return Err(Error::DuplicateId(id.to_owned()));
            }
            ids.push(id.to_owned());
        }
        if ids.len() != n {
            return Err(parse_err(1, format!("header declares {n} rows, found {}", ids.len())));
        }
        Self::new(ids, dim, data)
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let bad = |m: &str| Error::Parse {
            path: name.clone(),
            line: 0,
            message: m.to_owned(),
        };
        let mut read = |buf: &mut [u8]| r.read_exact(buf).map_err(|e| Error::io(path, e));

        let mut magic = [0u8; 8];
        read(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut u64buf = [0u8; 8];
        read(&mut u64buf)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        read(&mut u64buf)?;
        let dim = u64::from_le_bytes(u64buf) as usize;

        let mut ids = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        let mut u32buf = [0u8; 4];
        for _ in 0..n {
            read(&mut u32buf)?;
            let len = u32::from_le_bytes(u32buf) as usize;
            let mut idbuf = vec![0u8; len];
            read(&mut idbuf)?;
            let id = String::from_utf8(idbuf).map_err(|_| bad("id is not UTF-8"))?;
            for _ in 0..dim {
                read(&mut u32buf)?;
                data.push(f32::from_le_bytes(u32buf) as f64);
            }
            ids.push(id);
        }
        Self::new(ids, dim, data)
    }
}
