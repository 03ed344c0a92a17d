use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use super::{DomainDataset, Split};
use crate::error::{Error, Result};
use crate::method::VoteLabel;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw contents of an image IDX file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

fn truncated(what: &str) -> Error {
    Error::io(what, io::Error::new(io::ErrorKind::UnexpectedEof, "truncated IDX data"))
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| truncated(what))
}

pub fn parse_idx_images(bytes: &[u8], what: &str) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, what)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!("{what}: image magic {magic}, expected {IDX_IMAGES_MAGIC}")));
    }
    let count = be_u32(bytes, 4, what)? as usize;
    let height = be_u32(bytes, 8, what)? as usize;
    let width = be_u32(bytes, 12, what)? as usize;
    let n = count * height * width;
    let pixels = bytes.get(16..16 + n).ok_or_else(|| truncated(what))?.to_vec();
    Ok(IdxImages {
        count,
        height,
        width,
        pixels,
    })
}

pub fn parse_idx_labels(bytes: &[u8], what: &str) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, what)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!("{what}: label magic {magic}, expected {IDX_LABELS_MAGIC}")));
    }
    let count = be_u32(bytes, 4, what)? as usize;
    Ok(bytes.get(8..8 + count).ok_or_else(|| truncated(what))?.to_vec())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Reads an image/label IDX pair; pixels are scaled by 1/255 and every domain id is 0.
pub fn load_idx(images: &Path, labels: &Path, split: Split) -> Result<DomainDataset> {
    let img = parse_idx_images(&read(images)?, &images.display().to_string())?;
    let lab = parse_idx_labels(&read(labels)?, &labels.display().to_string())?;
    if img.count != lab.len() {
        return Err(Error::Consistency(format!("{} images but {} labels", img.count, lab.len())));
    }
    DomainDataset::new(
        img.height,
        img.width,
        img.pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
        lab.iter().map(|&l| VoteLabel::Single(l as usize)).collect(),
        vec![0; lab.len()],
        split,
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes pixels (rounded to bytes) and majority labels as an IDX pair.
pub fn write_idx(dataset: &DomainDataset, images: &Path, labels: &Path) -> Result<()> {
    let n = dataset.len();
    let mut img = Vec::with_capacity(16 + dataset.pixels().len());
    for v in [IDX_IMAGES_MAGIC, n as u32, dataset.height() as u32, dataset.width() as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend(dataset.pixels().iter().map(|p| (p * 255.0).round() as u8));

    let mut lab = Vec::with_capacity(8 + n);
    lab.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    lab.extend_from_slice(&(n as u32).to_be_bytes());
    for l in dataset.majority_labels() {
        let b = u8::try_from(l).map_err(|_| Error::Format(format!("label {l} does not fit in a byte")))?;
        lab.push(b);
    }
    write_file(images, &img)?;
    write_file(labels, &lab)
}

/// One domain id per line.
pub fn write_domain_ids(dataset: &DomainDataset, path: &Path) -> Result<()> {
    let mut text = String::with_capacity(dataset.len() * 3);
    for d in dataset.domains() {
        text.push_str(&d.to_string());
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

pub fn read_domain_ids(path: &Path) -> Result<Vec<u32>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    for (n, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        ids.push(
            t.parse()
                .map_err(|_| Error::Format(format!("{}:{}: bad domain id '{t}'", path.display(), n + 1)))?,
        );
    }
    Ok(ids)
}
