//! Big-endian IDX files as used by MNIST and Fashion-MNIST.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::TruncatedFile(format!("missing {what}")))?;
    Ok(u32::from_be_bytes(buf))
}

fn read_body<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut body = Vec::with_capacity(len);
    r.take(len as u64).read_to_end(&mut body)?;
    if body.len() != len {
        return Err(Error::TruncatedFile(format!(
            "expected {len} data bytes, found {}",
            body.len()
        )));
    }
    Ok(body)
}

/// Reads an unsigned-byte image file into `n x (rows * cols)`, scaled to `[0, 1]`.
pub fn read_idx_images<R: Read>(mut r: R) -> Result<Matrix> {
    let magic = read_u32(&mut r, "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let n = read_u32(&mut r, "item count")? as usize;
    let rows = read_u32(&mut r, "row count")? as usize;
    let cols = read_u32(&mut r, "column count")? as usize;
    let body = read_body(&mut r, n * rows * cols)?;
    let data = body.into_iter().map(|b| f64::from(b) / 255.0).collect();
    Matrix::from_vec(n, rows * cols, data)
}

pub fn read_idx_labels<R: Read>(mut r: R) -> Result<Vec<usize>> {
    let magic = read_u32(&mut r, "magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let n = read_u32(&mut r, "item count")? as usize;
    Ok(read_body(&mut r, n)?.into_iter().map(usize::from).collect())
}

/// Writes `images` as an IDX image file, quantizing `[0, 1]` to bytes.
pub fn write_idx_images<W: Write>(mut w: W, images: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != images.cols() {
        return Err(Error::DimensionMismatch {
            expected: images.cols(),
            got: rows * cols,
        });
    }
    for v in [IMAGES_MAGIC, images.rows() as u32, rows as u32, cols as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    let bytes: Vec<u8> = images
        .as_slice()
        .iter()
        .map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_idx_labels<W: Write>(mut w: W, labels: &[usize]) -> Result<()> {
    for v in [LABELS_MAGIC, labels.len() as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    let bytes: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Loads an IDX image file as an unlabeled dataset.
pub fn load_idx(path: impl AsRef<Path>) -> Result<Dataset> {
    let samples = read_idx_images(BufReader::new(File::open(path)?))?;
    Dataset::new(samples, None, None)
}

/// Loads matching image and label files.
pub fn load_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    let samples = read_idx_images(BufReader::new(File::open(images)?))?;
    let labels = read_idx_labels(BufReader::new(File::open(labels)?))?;
    if labels.len() != samples.rows() {
        return Err(Error::DimensionMismatch {
            expected: samples.rows(),
            got: labels.len(),
        });
    }
    Dataset::new(samples, Some(labels), None)
}

impl Dataset {
    /// Writes the samples (and labels, when present) as IDX files.
    pub fn save_idx(
        &self,
        images: impl AsRef<Path>,
        labels: Option<&Path>,
        rows: usize,
        cols: usize,
    ) -> Result<()> {
        let mut w = BufWriter::new(File::create(images)?);
        write_idx_images(&mut w, &self.samples, rows, cols)?;
        w.flush()?;
        if let (Some(path), Some(l)) = (labels, &self.labels) {
            let mut w = BufWriter::new(File::create(path)?);
            write_idx_labels(&mut w, l)?;
            w.flush()?;
        }
        Ok(())
    }
}
