use std::io::{Read, Write};
use std::path::Path;

use crate::data::Split;
use crate::error::{Error, Result};

/// Embeddings of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpRow {
    pub id: usize,
    pub domain: u32,
    pub label: usize,
    pub split: Split,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub v_par: Vec<f64>,
    pub v_perp: Vec<f64>,
}

/// Per-sample `v`, `z`, `v_par`, `v_perp` blocks of a common width `d`.
///
/// On disk: a CSV with header `id,domain,label,split,` followed by `d` columns
/// per block named `v_0.., z_0.., v_par_0.., v_perp_0..`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingDump {
    dim: usize,
    rows: Vec<DumpRow>,
}

const BLOCKS: [&str; 4] = ["v", "z", "v_par", "v_perp"];

impl EmbeddingDump {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[DumpRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: DumpRow) -> Result<()> {
        let d = self.dim;
        if [&row.v, &row.z, &row.v_par, &row.v_perp].iter().any(|b| b.len() != d) {
            return Err(Error::dim("embedding dump", format!("row {} does not have width {d}", row.id)));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Rows of one split, in stored order.
    pub fn filter_split(&self, split: Split) -> EmbeddingDump {
        EmbeddingDump {
            dim: self.dim,
            rows: self.rows.iter().filter(|r| r.split == split).cloned().collect(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["id", "domain", "label", "split"].iter().map(|s| s.to_string()).collect();
        for b in BLOCKS {
            h.extend((0..self.dim).map(|i| format!("{b}_{i}")));
        }
        h
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.id.to_string(), r.domain.to_string(), r.label.to_string(), r.split.to_string()];
            for block in [&r.v, &r.z, &r.v_par, &r.v_perp] {
                rec.extend(block.iter().map(f64::to_string));
            }
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<embedding dump>", e))
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let header = input.headers()?.clone();
        let extra = header.len().checked_sub(4).filter(|n| n % 4 == 0).ok_or_else(|| {
            Error::Format(format!("embedding dump header has {} columns", header.len()))
        })?;
        let mut dump = EmbeddingDump::new(extra / 4);
        if dump.header().iter().ne(header.iter()) {
            return Err(Error::Format("unexpected embedding dump header".into()));
        }
        for (line, rec) in input.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Format(format!("embedding dump row {}: bad {what}", line + 1));
            let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(&header[i])) };
            let d = dump.dim;
            let block = |b: usize| -> Result<Vec<f64>> { (0..d).map(|i| num(4 + b * d + i)).collect() };
            dump.push(DumpRow {
                id: rec[0].parse().map_err(|_| bad("id"))?,
                domain: rec[1].parse().map_err(|_| bad("domain"))?,
                label: rec[2].parse().map_err(|_| bad("label"))?,
                split: rec[3].parse()?,
                v: block(0)?,
                z: block(1)?,
                v_par: block(2)?,
                v_perp: block(3)?,
            })?;
        }
        Ok(dump)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
