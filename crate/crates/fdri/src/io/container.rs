//! Binary container for matrices and pattern sets.
//!
//! Layout: a 32-byte little-endian header (magic "FDRI", version, dtype,
//! reserved word, rows, cols) followed by the row-major payload. All
//! interpretation lives in a JSON sidecar next to the file (`<path>.json`),
//! which also carries a SHA-256 digest of the payload that is verified on
//! load.

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::reconstruction::{
    Method, Precision, Provenance, ReconstructionMatrix, ReconstructionMatrixF32,
};
use crate::sampling::{MeasurementMatrix, PatternSet, Protocol};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"FDRI";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

const DTYPE_F32: u32 = 0;
const DTYPE_F64: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContainerMeta {
    pub kind: String,
    pub dtype: String,
    pub rows: u64,
    pub cols: u64,
    pub resolution: [u64; 2],
    pub digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binarized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_meta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_white: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl ContainerMeta {
    fn bare(kind: &str, dtype: &str, rows: u64, cols: u64, resolution: [u64; 2], digest: String) -> Self {
        ContainerMeta {
            kind: kind.to_string(),
            dtype: dtype.to_string(),
            rows,
            cols,
            resolution,
            digest,
            protocol: None,
            binarized: None,
            selection_meta: None,
            seed: None,
            method: None,
            mu: None,
            eps: None,
            m_digest: None,
            include_white: None,
            tolerance: None,
            provenance: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Payload {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl Payload {
    fn dtype_word(&self) -> u32 {
        match self {
            Payload::F32(_) => DTYPE_F32,
            Payload::F64(_) => DTYPE_F64,
        }
    }

    fn dtype_str(&self) -> &'static str {
        match self {
            Payload::F32(_) => "f32",
            Payload::F64(_) => "f64",
        }
    }

    fn len(&self) -> usize {
        match self {
            Payload::F32(v) => v.len(),
            Payload::F64(v) => v.len(),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        match self {
            Payload::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Payload::F64(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes payload + sidecar. The caller fills the metadata fields beyond the
/// structural ones; digest/rows/cols/dtype are overwritten here.
pub fn save_container(
    path: &Path,
    rows: u64,
    cols: u64,
    payload: &Payload,
    mut meta: ContainerMeta,
) -> Result<()> {
    if payload.len() as u64 != rows * cols {
        return Err(Error::invalid(format!(
            "payload length {} does not match {rows}x{cols}",
            payload.len()
        )));
    }
    let body = payload.to_bytes();
    let mut file = Vec::with_capacity(HEADER_LEN + body.len());
    file.extend_from_slice(MAGIC);
    file.extend_from_slice(&VERSION.to_le_bytes());
    file.extend_from_slice(&payload.dtype_word().to_le_bytes());
    file.extend_from_slice(&0u32.to_le_bytes());
    file.extend_from_slice(&rows.to_le_bytes());
    file.extend_from_slice(&cols.to_le_bytes());
    file.extend_from_slice(&body);
    fs::write(path, &file).map_err(|e| Error::io(path, e))?;

    meta.rows = rows;
    meta.cols = cols;
    meta.dtype = payload.dtype_str().to_string();
    meta.digest = sha256_hex(&body);
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Format(format!("cannot serialize sidecar: {e}")))?;
    fs::write(sidecar_path(path), json).map_err(|e| Error::io(sidecar_path(path), e))
}

/// Reads payload + sidecar and verifies the structural fields and the
/// payload digest.
pub fn load_container(path: &Path) -> Result<(Payload, ContainerMeta)> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} is shorter than a container header", path.display())));
    }
    if &data[0..4] != MAGIC {
        return Err(Error::Format(format!("{} has the wrong magic", path.display())));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let dtype = u32::from_le_bytes(data[8..12].try_into().unwrap());
    let rows = u64::from_le_bytes(data[16..24].try_into().unwrap());
    let cols = u64::from_le_bytes(data[24..32].try_into().unwrap());
    let count = (rows * cols) as usize;
    let body = &data[HEADER_LEN..];
    let payload = match dtype {
        DTYPE_F32 => {
            if body.len() != count * 4 {
                return Err(Error::Format("payload length does not match header".to_string()));
            }
            Payload::F32(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        DTYPE_F64 => {
            if body.len() != count * 8 {
                return Err(Error::Format("payload length does not match header".to_string()));
            }
            Payload::F64(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        }
        other => return Err(Error::Format(format!("unknown dtype word {other}"))),
    };

    let sc = sidecar_path(path);
    let json = fs::read_to_string(&sc).map_err(|e| Error::io(&sc, e))?;
    let meta: ContainerMeta =
        serde_json::from_str(&json).map_err(|e| Error::Format(format!("bad sidecar: {e}")))?;
    if meta.rows != rows || meta.cols != cols {
        return Err(Error::Provenance(format!(
            "sidecar dimensions {}x{} disagree with header {rows}x{cols}",
            meta.rows, meta.cols
        )));
    }
    let digest = sha256_hex(body);
    if meta.digest != digest {
        return Err(Error::Provenance(format!(
            "payload digest {} does not match sidecar {}",
            &digest[..12],
            &meta.digest[..12.min(meta.digest.len())]
        )));
    }
    Ok((payload, meta))
}

// ---------------------------------------------------------------------
// typed wrappers
// ---------------------------------------------------------------------

pub fn save_pattern_set(set: &PatternSet, path: &Path) -> Result<()> {
    let n = set.width() * set.height();
    let mut flat = Vec::with_capacity(set.len() * n);
    for p in set.patterns() {
        flat.extend_from_slice(p.pixels());
    }
    let mut meta = ContainerMeta::bare(
        "pattern-set",
        "f64",
        set.len() as u64,
        n as u64,
        [set.width() as u64, set.height() as u64],
        String::new(),
    );
    meta.protocol = Some(set.protocol().as_str().to_string());
    meta.binarized = Some(set.binarized());
    meta.selection_meta = Some(set.selection_meta().to_string());
    meta.seed = set.seed();
    save_container(path, set.len() as u64, n as u64, &Payload::F64(flat), meta)
}

pub fn load_pattern_set(path: &Path) -> Result<PatternSet> {
    let (payload, meta) = load_container(path)?;
    if meta.kind != "pattern-set" {
        return Err(Error::Format(format!("{} is a {} container, not a pattern set", path.display(), meta.kind)));
    }
    let flat = match payload {
        Payload::F64(v) => v,
        Payload::F32(_) => return Err(Error::Format("pattern sets are stored in f64".to_string())),
    };
    let (w, h) = (meta.resolution[0] as usize, meta.resolution[1] as usize);
    let n = w * h;
    let patterns: Result<Vec<Image>> = flat
        .chunks_exact(n)
        .map(|c| Image::new(w, h, c.to_vec()))
        .collect();
    let protocol: Protocol = meta
        .protocol
        .as_deref()
        .ok_or_else(|| Error::Format("pattern-set sidecar lacks protocol".to_string()))?
        .parse()?;
    PatternSet::new(
        protocol,
        patterns?,
        meta.binarized.unwrap_or(false),
        meta.selection_meta.unwrap_or_default(),
        meta.seed,
    )
}

pub fn save_measurement_matrix(m: &MeasurementMatrix, path: &Path) -> Result<()> {
    let mut meta = ContainerMeta::bare(
        "measurement-matrix",
        "f64",
        m.k() as u64,
        m.n() as u64,
        [m.width() as u64, m.height() as u64],
        String::new(),
    );
    meta.provenance = Some(m.provenance().to_string());
    save_container(path, m.k() as u64, m.n() as u64, &Payload::F64(m.entries().to_vec()), meta)
}

pub fn load_measurement_matrix(path: &Path) -> Result<MeasurementMatrix> {
    let (payload, meta) = load_container(path)?;
    if meta.kind != "measurement-matrix" {
        return Err(Error::Format(format!("{} is a {} container", path.display(), meta.kind)));
    }
    let entries = match payload {
        Payload::F64(v) => v,
        Payload::F32(_) => return Err(Error::Format("measurement matrices are stored in f64".to_string())),
    };
    MeasurementMatrix::new(
        meta.resolution[0] as usize,
        meta.resolution[1] as usize,
        entries,
        meta.provenance.unwrap_or_default(),
    )
}

/// Reconstruction matrices can be persisted in either precision; f32 is the
/// deployment format for the real-time path.
pub fn save_reconstruction_matrix(
    p: &ReconstructionMatrix,
    path: &Path,
    precision: Precision,
    include_white: Option<bool>,
) -> Result<()> {
    let payload = match precision {
        Precision::F64 => Payload::F64(p.entries().to_vec()),
        Precision::F32 => Payload::F32(p.entries().iter().map(|&v| v as f32).collect()),
    };
    let mut meta = ContainerMeta::bare(
        "reconstruction-matrix",
        precision.as_str(),
        p.n() as u64,
        p.k() as u64,
        [p.width() as u64, p.height() as u64],
        String::new(),
    );
    meta.method = Some(p.method().as_str().to_string());
    meta.mu = p.provenance().mu;
    meta.eps = p.provenance().eps;
    meta.m_digest = Some(p.provenance().m_digest.clone());
    // f32 storage rounds every entry, so the right-inverse residual of the
    // stored matrix is bounded by single precision, not by the method.
    meta.tolerance = Some(match precision {
        Precision::F64 => p.method().tolerance(),
        Precision::F32 => p.method().tolerance().max(1e-4),
    });
    meta.include_white = include_white;
    save_container(path, p.n() as u64, p.k() as u64, &payload, meta)
}

#[derive(Debug, Clone)]
pub enum LoadedReconstruction {
    F64(ReconstructionMatrix),
    F32(ReconstructionMatrixF32),
}

impl LoadedReconstruction {
    pub fn k(&self) -> usize {
        match self {
            LoadedReconstruction::F64(p) => p.k(),
            LoadedReconstruction::F32(p) => p.k(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            LoadedReconstruction::F64(p) => p.n(),
            LoadedReconstruction::F32(p) => p.n(),
        }
    }

    pub fn apply(&self, y: &[f64]) -> Result<Image> {
        match self {
            LoadedReconstruction::F64(p) => p.apply(y),
            LoadedReconstruction::F32(p) => p.apply(y),
        }
    }

    /// Full-precision view; the f32 variant is widened.
    pub fn as_f64(&self) -> Result<ReconstructionMatrix> {
        match self {
            LoadedReconstruction::F64(p) => Ok(p.clone()),
            LoadedReconstruction::F32(p) => ReconstructionMatrix::new(
                p.width(),
                p.height(),
                p.k(),
                p.entries().iter().map(|&v| f64::from(v)).collect(),
                p.method(),
                p.provenance().clone(),
            ),
        }
    }
}

pub fn load_reconstruction_matrix(path: &Path) -> Result<(LoadedReconstruction, ContainerMeta)> {
    let (payload, meta) = load_container(path)?;
    if meta.kind != "reconstruction-matrix" {
        return Err(Error::Format(format!("{} is a {} container", path.display(), meta.kind)));
    }
    let method: Method = meta
        .method
        .as_deref()
        .ok_or_else(|| Error::Format("reconstruction sidecar lacks method".to_string()))?
        .parse()?;
    let (w, h) = (meta.resolution[0] as usize, meta.resolution[1] as usize);
    let k = meta.cols as usize;
    let loaded = match payload {
        Payload::F64(entries) => {
            let provenance = Provenance {
                m_digest: meta.m_digest.clone().unwrap_or_default(),
                mu: meta.mu,
                eps: meta.eps,
                precision: Precision::F64,
            };
            LoadedReconstruction::F64(ReconstructionMatrix::new(w, h, k, entries, method, provenance)?)
        }
        Payload::F32(entries) => {
            let provenance = Provenance {
                m_digest: meta.m_digest.clone().unwrap_or_default(),
                mu: meta.mu,
                eps: meta.eps,
                precision: Precision::F32,
            };
            LoadedReconstruction::F32(ReconstructionMatrixF32::new(w, h, k, entries, method, provenance)?)
        }
    };
    Ok((loaded, meta))
}
