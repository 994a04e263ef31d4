//! RWCF feature cache: a little-endian binary file of per-clip vectors.
//!
//! ```text
//! "RWCF" | u32 version | u32 arch | u32 capacity | u64 seed | u32 dim | u32 count
//! count × ( u16 id_len | id (UTF-8) | dim × f32 )
//! ```

use std::path::Path;

use randcnn_core::frontends::{ArchId, Capacity, FeatureVector};

use crate::bytes::ByteReader;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"RWCF";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 4 + 4;

#[derive(Clone, Debug, PartialEq)]
pub struct CacheRecord {
    pub clip_id: String,
    pub values: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCache {
    pub arch: u32,
    pub capacity: u32,
    pub seed: u64,
    pub dim: u32,
    pub records: Vec<CacheRecord>,
}

impl FeatureCache {
    pub fn new(arch: ArchId, capacity: Capacity, seed: u64, dim: usize) -> Self {
        Self { arch: arch.code(), capacity: capacity.code(), seed, dim: dim as u32, records: Vec::new() }
    }

    /// Builds a cache from extracted vectors, which must share one `FrontEndSpec`.
    pub fn from_features(arch: ArchId, capacity: Capacity, seed: u64, dim: usize, fv: Vec<FeatureVector>) -> Result<Self> {
        let mut c = Self::new(arch, capacity, seed, dim);
        for f in fv {
            if f.values.len() != dim {
                return Err(Error::Data(format!("{}: {} values, expected {dim}", f.clip_id, f.values.len())));
            }
            c.records.push(CacheRecord { clip_id: f.clip_id, values: f.values });
        }
        Ok(c)
    }

    pub fn arch_id(&self) -> Option<ArchId> {
        ArchId::from_code(self.arch)
    }

    pub fn capacity_id(&self) -> Option<Capacity> {
        Capacity::from_code(self.capacity)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.records.len() * (2 + 16 + 4 * self.dim as usize));
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&self.arch.to_le_bytes());
        out.extend_from_slice(&self.capacity.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.dim.to_le_bytes());
        let count = u32::try_from(self.records.len()).map_err(|_| Error::Data("too many records".into()))?;
        out.extend_from_slice(&count.to_le_bytes());
        for r in &self.records {
            if r.values.len() != self.dim as usize {
                return Err(Error::Data(format!("record '{}' has {} values, header dim is {}", r.clip_id, r.values.len(), self.dim)));
            }
            let id = r.clip_id.as_bytes();
            let len = u16::try_from(id.len()).map_err(|_| Error::Data(format!("clip id longer than 65535 bytes: {}", r.clip_id)))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(id);
            for v in &r.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parses a complete cache; `origin` only labels errors.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::Corrupt { path: origin.into(), kind: "feature cache", reason };
        let mut r = ByteReader::new(bytes);
        let magic = r.take(4).ok_or_else(|| corrupt("shorter than the magic".into()))?;
        if magic != CACHE_MAGIC {
            return Err(corrupt(format!("bad magic {magic:?}")));
        }
        let header = (|| Some((r.u32()?, r.u32()?, r.u32()?, r.u64()?, r.u32()?, r.u32()?)))();
        let (version, arch, capacity, seed, dim, count) = header.ok_or_else(|| corrupt("truncated header".into()))?;
        if version != CACHE_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let mut records = Vec::with_capacity((count as usize).min(1 << 20));
        for i in 0..count {
            let trunc = || corrupt(format!("truncated at record {i} of {count}"));
            let len = r.u16().ok_or_else(trunc)? as usize;
            let id = r.take(len).ok_or_else(trunc)?;
            let clip_id = String::from_utf8(id.to_vec()).map_err(|_| corrupt(format!("record {i} id is not UTF-8")))?;
            let values = r.f32s(dim as usize).ok_or_else(trunc)?;
            records.push(CacheRecord { clip_id, values });
        }
        if r.remaining() != 0 {
            return Err(corrupt(format!("{} trailing bytes after {count} records", r.remaining())));
        }
        Ok(Self { arch, capacity, seed, dim, records })
    }
}

pub fn write_cache(path: &Path, cache: &FeatureCache) -> Result<()> {
    std::fs::write(path, cache.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: &Path) -> Result<FeatureCache> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureCache::from_bytes(&bytes, path)
}
