use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeClass {
    Disk,
    Cross,
    Frame,
    Bar,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 4] = [ShapeClass::Disk, ShapeClass::Cross, ShapeClass::Frame, ShapeClass::Bar];

    /// Membership test in shape-centered coordinates scaled by the image side.
    fn contains(self, x: f64, y: f64) -> bool {
        let (ax, ay) = (x.abs(), y.abs());
        match self {
            ShapeClass::Disk => x * x + y * y <= 0.3 * 0.3,
            ShapeClass::Cross => (ax <= 0.1 && ay <= 0.38) || (ay <= 0.1 && ax <= 0.38),
            ShapeClass::Frame => {
                let m = ax.max(ay);
                (0.22..=0.38).contains(&m)
            }
            ShapeClass::Bar => ax <= 0.4 && ay <= 0.16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapesConfig {
    pub side: usize,
    pub n_per_class: usize,
    /// Uniform integer translation in `[-max_shift, max_shift]` pixels per axis.
    pub max_shift: i32,
    /// Uniform rotation in `[-max_rotation_deg, max_rotation_deg]`.
    pub max_rotation_deg: f64,
}

impl ShapesConfig {
    pub fn new(side: usize, n_per_class: usize) -> Self {
        Self {
            side,
            n_per_class,
            max_shift: 2,
            max_rotation_deg: 20.0,
        }
    }

    pub fn without_jitter(mut self) -> Self {
        self.max_shift = 0;
        self.max_rotation_deg = 0.0;
        self
    }
}

/// Renders `n_per_class` binary `side x side` images of each [`ShapeClass`],
/// flattened row-major, labels `0..4` in [`ShapeClass::ALL`] order.
pub fn synthetic_shapes(config: &ShapesConfig, seed: u64) -> Result<Dataset> {
    let side = config.side;
    if side < 8 {
        return Err(Error::InvalidDimension(format!("shape images need side >= 8, got {side}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n_per_class * ShapeClass::ALL.len();
    let mut samples = Matrix::zeros(n, side * side);
    let mut labels = Vec::with_capacity(n);
    let s = side as f64;
    let mut row = 0;
    for (label, class) in ShapeClass::ALL.into_iter().enumerate() {
        for _ in 0..config.n_per_class {
            let (dx, dy) = if config.max_shift > 0 {
                (
                    rng.random_range(-config.max_shift..=config.max_shift),
                    rng.random_range(-config.max_shift..=config.max_shift),
                )
            } else {
                (0, 0)
            };
            let theta = if config.max_rotation_deg > 0.0 {
                rng.random_range(-config.max_rotation_deg..=config.max_rotation_deg).to_radians()
            } else {
                0.0
            };
            let (sin, cos) = theta.sin_cos();
            let cx = s / 2.0 + dx as f64;
            let cy = s / 2.0 + dy as f64;
            let img = samples.row_mut(row);
            for py in 0..side {
                for px in 0..side {
                    let x = px as f64 + 0.5 - cx;
                    let y = py as f64 + 0.5 - cy;
                    // rotate the sample point by -theta into the shape frame
                    let u = (cos * x + sin * y) / s;
                    let v = (-sin * x + cos * y) / s;
                    if class.contains(u, v) {
                        img[py * side + px] = 1.0;
                    }
                }
            }
            labels.push(label);
            row += 1;
        }
    }
    Dataset::new(samples, Some(labels), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_jitter_means_identical_images() {
        let ds = synthetic_shapes(&ShapesConfig::new(12, 5).without_jitter(), 1).unwrap();
        for class in 0..4 {
            let first = ds.samples.row(class * 5);
            for i in 1..5 {
                assert_eq!(ds.samples.row(class * 5 + i), first);
            }
        }
    }

    #[test]
    fn disk_geometry_at_side_eight() {
        let ds = synthetic_shapes(&ShapesConfig::new(8, 1).without_jitter(), 0).unwrap();
        let disk = ds.samples.row(0);
        assert_eq!(disk[3 * 8 + 3], 1.0);
        assert_eq!(disk[4 * 8 + 4], 1.0);
        for corner in [0, 7, 56, 63] {
            assert_eq!(disk[corner], 0.0);
        }
    }

    #[test]
    fn exact_class_histogram() {
        let ds = synthetic_shapes(&ShapesConfig::new(10, 7), 4).unwrap();
        let mut counts = [0; 4];
        for &l in ds.labels.as_ref().unwrap() {
            counts[l] += 1;
        }
        assert_eq!(counts, [7; 4]);
        assert!(ds.samples.as_slice().iter().all(|&p| p == 0.0 || p == 1.0));
    }

    #[test]
    fn classes_render_differently() {
        let ds = synthetic_shapes(&ShapesConfig::new(16, 1).without_jitter(), 0).unwrap();
        for a in 0..4 {
            for b in a + 1..4 {
                assert_ne!(ds.samples.row(a), ds.samples.row(b));
            }
        }
    }

    #[test]
    fn too_small_rejected() {
        assert!(synthetic_shapes(&ShapesConfig::new(7, 1), 0).is_err());
    }
}
