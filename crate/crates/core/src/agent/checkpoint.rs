//! Checkpoint container: `manifest.json` plus `weights.bin`.
//!
//! The manifest records the format version, the network config, the training
//! step, the checkpoint index and one entry per array (name, shape, offset in
//! elements). `weights.bin` holds every array back to back as little-endian
//! IEEE-754 32-bit floats in row-major order, in manifest order.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::{NetError, Network, NetworkConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: NetworkConfig,
    pub net: Network<f32>,
    pub step: u64,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: NetworkConfig,
    pub step: u64,
    pub index: usize,
    pub endianness: String,
    pub dtype: String,
    pub arrays: Vec<ArrayEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("bad manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {0}")]
    Version(u32),
    #[error("checkpoint layout does not match its config: {0}")]
    Layout(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

impl Checkpoint {
    pub fn manifest(&self) -> Manifest {
        let mut offset = 0;
        let arrays = self
            .net
            .shapes()
            .into_iter()
            .map(|(name, shape)| {
                let e = ArrayEntry { name, offset, shape };
                offset += e.shape.iter().product::<usize>();
                e
            })
            .collect();
        Manifest {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            step: self.step,
            index: self.index,
            endianness: "little".into(),
            dtype: "f32".into(),
            arrays,
        }
    }

    pub fn weight_bytes(&self) -> Vec<u8> {
        self.net.params().iter().flat_map(|p| p.iter()).flat_map(|x| x.to_le_bytes()).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<(), CheckpointError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let weights = dir.join("weights.bin");
        write_atomic(&weights, &self.weight_bytes()).map_err(io_err(&weights))?;
        let manifest = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest())?;
        write_atomic(&manifest, text.as_bytes()).map_err(io_err(&manifest))
    }

    pub fn load(dir: &Path) -> Result<Self, CheckpointError> {
        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format_version != FORMAT_VERSION {
            return Err(CheckpointError::Version(m.format_version));
        }
        if m.endianness != "little" || m.dtype != "f32" {
            return Err(CheckpointError::Layout(format!("{} {}", m.endianness, m.dtype)));
        }
        let weights_path = dir.join("weights.bin");
        let bytes = fs::read(&weights_path).map_err(io_err(&weights_path))?;
        let mut net = Network::<f32>::zeros(&m.config)?;
        let expected = net.shapes();
        if expected.len() != m.arrays.len() {
            return Err(CheckpointError::Layout(format!("{} arrays, expected {}", m.arrays.len(), expected.len())));
        }
        let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        if bytes.len() != 4 * total {
            return Err(CheckpointError::Layout(format!("{} weight bytes, expected {}", bytes.len(), 4 * total)));
        }
        for ((entry, (name, shape)), dst) in m.arrays.iter().zip(&expected).zip(net.params_mut()) {
            if &entry.name != name || &entry.shape != shape {
                return Err(CheckpointError::Layout(format!("array {} {:?}, expected {name} {shape:?}", entry.name, entry.shape)));
            }
            let start = 4 * entry.offset;
            let end = start + 4 * dst.len();
            let src = bytes.get(start..end).ok_or_else(|| CheckpointError::Layout(format!("array {name} out of range")))?;
            for (d, chunk) in dst.iter_mut().zip(src.chunks_exact(4)) {
                *d = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            }
        }
        Ok(Self { config: m.config, net, step: m.step, index: m.index })
    }

    /// First-layer weight column for each cell's current-player input, in
    /// cell-index order.
    pub fn cell_embeddings(&self) -> Vec<Vec<f32>> {
        let w = &self.net.body[0].w;
        (0..self.net.cells()).map(|i| w.column(i).to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::Board;

    fn ckpt() -> Checkpoint {
        let config = NetworkConfig { size: 3, layers: 2, width: 5, seed: 9, ..Default::default() };
        Checkpoint { net: Network::init(&config).unwrap(), config, step: 17, index: 2 }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let c = ckpt();
        c.save(dir.path()).unwrap();
        let back = Checkpoint::load(dir.path()).unwrap();
        assert_eq!(back, c);
        let b = Board::parse("B . .\n . W .\n . . .\n").unwrap();
        let fv = b.encode().unwrap();
        let (x, y) = (c.net.forward(&fv).unwrap(), back.net.forward(&fv).unwrap());
        assert_eq!(x.logits.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), y.logits.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(x.value.to_bits(), y.value.to_bits());
    }

    #[test]
    fn manifest_offsets_are_contiguous() {
        let m = ckpt().manifest();
        assert_eq!(m.arrays[0].name, "body1.w");
        assert_eq!(m.arrays[0].shape, vec![5, 18]);
        assert_eq!(m.arrays[1].offset, 90);
        assert_eq!(m.arrays.last().unwrap().name, "value.b");
    }

    #[test]
    fn truncated_weights_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        ckpt().save(dir.path()).unwrap();
        let p = dir.path().join("weights.bin");
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(Checkpoint::load(dir.path()), Err(CheckpointError::Layout(_))));
    }

    #[test]
    fn embeddings_have_width_length_and_vanish_for_zero_nets() {
        let c = ckpt();
        let e = c.cell_embeddings();
        assert_eq!(e.len(), 9);
        assert!(e.iter().all(|v| v.len() == 5));
        let z = Checkpoint { net: Network::zeros(&c.config).unwrap(), ..c };
        assert!(z.cell_embeddings().iter().flatten().all(|&x| x == 0.0));
    }
}
