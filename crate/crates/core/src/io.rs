//! On-disk formats.
//!
//! Distributions are stored as an 8-byte magic, a little-endian `u32`
//! format version, a little-endian `u32` qubit count, then `2^n`
//! little-endian `f64` values. Everything else is JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, ParseError};
use crate::variant::{InitState, InputPort, MeasBasis, OutputPort, Subcircuit, SubcircuitVariant};

pub const DIST_MAGIC: &[u8; 8] = b"WCUTDIST";
pub const DIST_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Circuit { path: PathBuf, source: ParseError },
    #[error("not a distribution file (bad magic)")]
    BadMagic,
    #[error("unsupported distribution format version {0}")]
    BadVersion(u32),
    #[error("distribution payload has {got} bytes, expected {expected}")]
    Truncated { expected: usize, got: usize },
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(file_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(file_err(dir))?;
    }
    fs::write(path, text).map_err(file_err(path))
}

pub fn read_circuit(path: &Path) -> Result<Circuit, IoError> {
    Circuit::parse(&read_text(path)?).map_err(|source| IoError::Circuit {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn encode_distribution(values: &[f64]) -> Vec<u8> {
    assert!(values.len().is_power_of_two());
    let n = values.len().trailing_zeros();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(DIST_MAGIC);
    out.extend_from_slice(&DIST_VERSION.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_distribution(bytes: &[u8]) -> Result<Vec<f64>, IoError> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != DIST_MAGIC {
        return Err(IoError::BadMagic);
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(8);
    if version != DIST_VERSION {
        return Err(IoError::BadVersion(version));
    }
    let n = word(12) as usize;
    let expected = 8usize
        .checked_shl(n as u32)
        .filter(|_| n < 48)
        .ok_or(IoError::Truncated {
            expected: usize::MAX,
            got: bytes.len() - HEADER_LEN,
        })?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(IoError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_distribution(path: &Path, values: &[f64]) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(file_err(dir))?;
    }
    fs::write(path, encode_distribution(values)).map_err(file_err(path))
}

pub fn read_distribution(path: &Path) -> Result<Vec<f64>, IoError> {
    decode_distribution(&fs::read(path).map_err(file_err(path))?)
}

/// Sidecar metadata of a distribution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionMeta {
    pub n: usize,
    pub num_cuts: usize,
    pub sum: f64,
    pub runtime_seconds: f64,
    pub multiplies: u64,
}

/// Subcircuit description with its circuit inlined as text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcircuitRecord {
    pub index: usize,
    pub qubits: Vec<usize>,
    pub input_ports: Vec<InputPort>,
    pub output_ports: Vec<OutputPort>,
    pub circuit: String,
}

impl SubcircuitRecord {
    pub fn from_subcircuit(sub: &Subcircuit) -> Self {
        SubcircuitRecord {
            index: sub.index,
            qubits: sub.qubits.clone(),
            input_ports: sub.input_ports.clone(),
            output_ports: sub.output_ports.clone(),
            circuit: sub.circuit.to_text(),
        }
    }

    pub fn to_subcircuit(&self) -> Result<Subcircuit, IoError> {
        let circuit = Circuit::parse(&self.circuit).map_err(|e| IoError::Manifest(e.to_string()))?;
        if circuit.num_qubits() != self.qubits.len() {
            return Err(IoError::Manifest(format!("subcircuit {} width mismatch", self.index)));
        }
        Ok(Subcircuit {
            index: self.index,
            circuit,
            qubits: self.qubits.clone(),
            input_ports: self.input_ports.clone(),
            output_ports: self.output_ports.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRecord {
    pub id: String,
    pub parent: usize,
    pub index: usize,
    pub inits: Vec<InitState>,
    pub meas: Vec<MeasBasis>,
    /// Local wires of the input ports, then of the output ports.
    pub port_wires: Vec<usize>,
    /// Circuit text file, relative to the manifest.
    pub file: String,
}

/// Everything needed to run variants and attribute their outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantManifest {
    pub num_qubits: usize,
    pub num_cuts: usize,
    pub subcircuits: Vec<SubcircuitRecord>,
    pub variants: Vec<VariantRecord>,
}

impl VariantManifest {
    pub fn new(num_qubits: usize, num_cuts: usize, subs: &[Subcircuit], variants: &[Vec<SubcircuitVariant>]) -> Self {
        let records = subs
            .iter()
            .zip(variants)
            .flat_map(|(sub, vars)| {
                vars.iter().map(move |v| {
                    let id = format!("s{}_v{}", v.parent, v.index);
                    VariantRecord {
                        file: format!("variants/{id}.txt"),
                        id,
                        parent: v.parent,
                        index: v.index,
                        inits: v.inits.clone(),
                        meas: v.meas.clone(),
                        port_wires: sub
                            .input_ports
                            .iter()
                            .map(|p| p.wire)
                            .chain(sub.output_ports.iter().map(|p| p.wire))
                            .collect(),
                    }
                })
            })
            .collect();
        VariantManifest {
            num_qubits,
            num_cuts,
            subcircuits: subs.iter().map(SubcircuitRecord::from_subcircuit).collect(),
            variants: records,
        }
    }

    pub fn subcircuits(&self) -> Result<Vec<Subcircuit>, IoError> {
        let subs = self
            .subcircuits
            .iter()
            .map(SubcircuitRecord::to_subcircuit)
            .collect::<Result<Vec<_>, _>>()?;
        for (i, s) in subs.iter().enumerate() {
            if s.index != i {
                return Err(IoError::Manifest("subcircuits out of order".into()));
            }
        }
        Ok(subs)
    }

    /// Writes the manifest and one circuit file per variant under `dir`.
    pub fn write(&self, dir: &Path, variants: &[Vec<SubcircuitVariant>]) -> Result<(), IoError> {
        for (rec, v) in self.variants.iter().zip(variants.iter().flatten()) {
            write_text(&dir.join(&rec.file), &v.circuit.to_text())?;
        }
        write_json(&dir.join("variants.json"), self)
    }
}

/// Raw output of one variant over all its wires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub parent: usize,
    pub index: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawOutputs {
    pub backend: crate::sim::BackendKind,
    pub records: Vec<RawRecord>,
}

impl RawOutputs {
    /// Raw vectors grouped per subcircuit, indexed by variant.
    pub fn grouped(&self, num_subcircuits: usize) -> Result<Vec<Vec<Vec<f64>>>, IoError> {
        let mut out: Vec<Vec<Option<Vec<f64>>>> = vec![Vec::new(); num_subcircuits];
        for r in &self.records {
            let group = out
                .get_mut(r.parent)
                .ok_or_else(|| IoError::Manifest(format!("raw output for unknown subcircuit {}", r.parent)))?;
            if group.len() <= r.index {
                group.resize(r.index + 1, None);
            }
            group[r.index] = Some(r.values.clone());
        }
        out.into_iter()
            .enumerate()
            .map(|(s, g)| {
                g.into_iter()
                    .enumerate()
                    .map(|(v, x)| x.ok_or_else(|| IoError::Manifest(format!("missing raw output s{s}_v{v}"))))
                    .collect()
            })
            .collect()
    }
}
