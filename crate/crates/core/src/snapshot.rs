//! Self-describing binary grid snapshots.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `CFSNAP\0\n` |
//! | 4     | format version (`u32`) |
//! | 4     | header length `h` (`u32`) |
//! | h     | header, UTF-8 JSON ([`SnapshotHeader`]) |
//! | 8     | value count `n` (`u64`) |
//! | 8 n   | values as `f64`, node-major with components contiguous |
//! | 32    | SHA-256 of every preceding byte |
//!
//! Node order follows the grid: for bidisk fields the first factor's angle
//! is outermost, then its radius, then the second factor's angle and radius.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{BidiskGrid, GridSpec, MapField1, MapField2};

pub const MAGIC: &[u8; 8] = b"CFSNAP\0\n";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// Where the values live and how to read them back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    /// One entry per disk factor.
    pub grids: Vec<GridSpec>,
    /// Values per node.
    pub components: usize,
    pub convention: String,
    /// Free-form provenance. Kept free of timestamps so reruns are identical.
    pub metadata: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSnapshot {
    pub header: SnapshotHeader,
    pub values: Vec<f64>,
}

const CONVENTION: &str = "polar nodes p = j*nr + i with r graded toward the circle and r[nr-1] = 1; \
bidisk node p1*n2 + p2; values are Poincare-ball coordinates";

impl GridSnapshot {
    fn node_count(&self) -> usize {
        self.header.grids.iter().map(|g| g.nr * g.ntheta).product()
    }

    pub fn from_disk(f: &MapField1) -> Self {
        Self {
            header: SnapshotHeader {
                grids: vec![GridSpec::of(&f.grid)],
                components: f.dim,
                convention: CONVENTION.into(),
                metadata: BTreeMap::new(),
            },
            values: f.values.clone(),
        }
    }

    pub fn from_bidisk(f: &MapField2) -> Self {
        Self::from_bidisk_values(&f.grid, f.dim, f.values.clone())
    }

    /// Any per-node field on the bidisk (scalars use one component).
    pub fn from_bidisk_values(grid: &BidiskGrid, components: usize, values: Vec<f64>) -> Self {
        Self {
            header: SnapshotHeader {
                grids: vec![GridSpec::of(&grid.first), GridSpec::of(&grid.second)],
                components,
                convention: CONVENTION.into(),
                metadata: BTreeMap::new(),
            },
            values,
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.header.metadata.insert(key.into(), value.into());
        self
    }

    pub fn to_disk(&self) -> Result<MapField1> {
        let [g] = self.header.grids.as_slice() else {
            return Err(Error::ShapeMismatch(format!(
                "snapshot has {} factor grids, a disk field needs 1",
                self.header.grids.len()
            )));
        };
        let mut f = MapField1::zeros(g.build()?, self.header.components)?;
        f.values.copy_from_slice(&self.values);
        Ok(f)
    }

    pub fn to_bidisk(&self) -> Result<MapField2> {
        let [a, b] = self.header.grids.as_slice() else {
            return Err(Error::ShapeMismatch(format!(
                "snapshot has {} factor grids, a bidisk field needs 2",
                self.header.grids.len()
            )));
        };
        let grid = BidiskGrid::new(a.build()?, b.build()?);
        let mut f = MapField2::zeros(grid, self.header.components)?;
        f.values.copy_from_slice(&self.values);
        Ok(f)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.values.len() != self.node_count() * self.header.components {
            return Err(Error::ShapeMismatch(format!(
                "snapshot holds {} values, header describes {}",
                self.values.len(),
                self.node_count() * self.header.components
            )));
        }
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(32 + header.len() + 8 * self.values.len() + DIGEST_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    /// Inverse of [`GridSnapshot::to_bytes`]; `origin` only labels errors.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let corrupt = |reason: &str| Error::Corrupt {
            path: origin.to_path_buf(),
            reason: reason.into(),
        };
        if bytes.len() < 16 + 8 + DIGEST_LEN || &bytes[..8] != MAGIC {
            return Err(corrupt("missing magic bytes or truncated preamble"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum mismatch"));
        }
        let hlen = u32::from_le_bytes(body[12..16].try_into().unwrap()) as usize;
        let header_end = 16 + hlen;
        if body.len() < header_end + 8 {
            return Err(corrupt("header length exceeds file"));
        }
        let header: SnapshotHeader =
            serde_json::from_slice(&body[16..header_end]).map_err(|e| corrupt(&format!("bad header: {e}")))?;
        let count = u64::from_le_bytes(body[header_end..header_end + 8].try_into().unwrap()) as usize;
        let payload = &body[header_end + 8..];
        if payload.len() != count * 8 {
            return Err(corrupt("payload length disagrees with value count"));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let snap = Self { header, values };
        if count != snap.node_count() * snap.header.components {
            return Err(corrupt("value count disagrees with header grids"));
        }
        Ok(snap)
    }
}

pub fn save_snapshot(path: &Path, snap: &GridSnapshot) -> Result<()> {
    std::fs::write(path, snap.to_bytes()?)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<GridSnapshot> {
    GridSnapshot::from_bytes(&std::fs::read(path)?, path)
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
