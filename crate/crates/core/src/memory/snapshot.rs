//! Self-describing JSON snapshots of a memory.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Label, MemoryParams, MemoryState};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const FORMAT: &str = "memorygan-memory/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemorySnapshot {
    format: String,
    n_slots: usize,
    key_dim: usize,
    params: MemoryParams,
    /// Row-major `n_slots x key_dim`.
    keys: Vec<f64>,
    values: Vec<u8>,
    ages: Vec<u64>,
    histogram: Vec<f64>,
}

impl From<&MemoryState> for MemorySnapshot {
    fn from(state: &MemoryState) -> Self {
        Self {
            format: FORMAT.to_owned(),
            n_slots: state.n_slots(),
            key_dim: state.key_dim(),
            params: state.params,
            keys: state.keys.as_slice().to_vec(),
            values: state.values.iter().map(|v| v.bit()).collect(),
            ages: state.ages.clone(),
            histogram: state.histogram.clone(),
        }
    }
}

impl TryFrom<MemorySnapshot> for MemoryState {
    type Error = Error;

    fn try_from(s: MemorySnapshot) -> Result<Self> {
        if s.format != FORMAT {
            return Err(Error::IncompatibleCheckpoint(format!(
                "unknown memory format `{}`",
                s.format
            )));
        }
        if let Some(bad) = s.values.iter().find(|&&b| b > 1) {
            return Err(Error::IncompatibleCheckpoint(format!("non-binary value {bad}")));
        }
        MemoryState::from_parts(
            Matrix::from_vec(s.n_slots, s.key_dim, s.keys)?,
            s.values.into_iter().map(Label::from_bit).collect(),
            s.ages,
            s.histogram,
            s.params,
        )
    }
}

impl MemoryState {
    pub fn snapshot(&self) -> MemorySnapshot {
        self.into()
    }

    pub fn write_snapshot<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &self.snapshot())?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(reader: R) -> Result<Self> {
        let snap: MemorySnapshot = serde_json::from_reader(reader)?;
        snap.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_snapshot(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_snapshot(BufReader::new(File::open(path)?))
    }
}
