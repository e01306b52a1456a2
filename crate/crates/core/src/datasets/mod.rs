//! Synthetic multi-modal data for desk-scale runs, plus IDX ingestion.

mod idx;
mod ring;
mod shapes;

use std::io::Write;

pub use idx::{load_idx, load_idx_pair, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels};
pub use ring::gaussian_ring;
pub use shapes::{synthetic_shapes, ShapeClass, ShapesConfig};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Matrix,
    /// Mode or class id per sample.
    pub labels: Option<Vec<usize>>,
    pub mode_centers: Option<Vec<Vec<f64>>>,
}

impl Dataset {
    pub fn new(samples: Matrix, labels: Option<Vec<usize>>, mode_centers: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != samples.rows() {
                return Err(Error::DimensionMismatch {
                    expected: samples.rows(),
                    got: labels.len(),
                });
            }
            if let Some(centers) = &mode_centers {
                if let Some(&bad) = labels.iter().find(|&&l| l >= centers.len()) {
                    return Err(Error::InvalidDimension(format!(
                        "label {bad} has no mode center"
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            labels,
            mode_centers,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    /// Draws `n` rows uniformly with replacement.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Matrix {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.len())).collect();
        self.samples.select_rows(&idx)
    }

    /// A fresh random permutation of row indices.
    pub fn shuffled_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        idx
    }

    /// CSV with header `x0,...,x{D-1},label`; the label column is empty when absent.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (i, row) in self.samples.iter_rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
            rec.push(
                self.labels
                    .as_ref()
                    .map(|l| l[i].to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
