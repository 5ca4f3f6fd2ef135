//! Offline dataset transfer as a sequence of QR-sized text frames.
//!
//! Frame grammar (one frame per QR code):
//!
//! ```text
//! ULSP1|<transfer id: 8 lowercase hex>|<index>|<total>|<checksum: 8 lowercase hex>|<chunk>
//! ```
//!
//! The payload is the canonical GeoJSON of the dataset, DEFLATE-compressed
//! and base64-encoded (standard alphabet, padding kept). The base64 text is
//! cut into chunks; `checksum` is the CRC32 of the whole base64 text, so any
//! altered character of any chunk is caught before decoding.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use base64::Engine;
use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use qrcode::QrCode;
pub use qrcode::EcLevel;

use crate::export::serialize_geojson;
use crate::ingest::{parse_geojson, IngestError};
use crate::schema::{canonicalize, FormatRegistry, UlspDataset};

pub const MAGIC: &str = "ULSP1";
pub const DEFAULT_MAX_CHUNK_CHARS: usize = 800;
pub const MIN_MAX_CHUNK_CHARS: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum QrError {
    #[error("max chunk size {0} is below the minimum of {MIN_MAX_CHUNK_CHARS}")]
    ChunkTooSmall(usize),
    #[error("bad frame {part} at position {position}: {message}")]
    Frame {
        part: &'static str,
        position: usize,
        message: String,
    },
    #[error("no frames to assemble")]
    NoFrames,
    #[error("frame belongs to transfer {found}, expected {expected}")]
    MixedTransfer { expected: String, found: String },
    #[error("frame {index} disagrees with the transfer header (total/checksum)")]
    Inconsistent { index: usize },
    #[error("frame {index} received twice with different content")]
    ChunkConflict { index: usize },
    #[error("checksum mismatch: expected {expected}, computed {computed}")]
    ChecksumMismatch { expected: String, computed: String },
    #[error("payload is not valid base64: {0}")]
    Base64(String),
    #[error("payload does not decompress: {0}")]
    Decompress(String),
    #[error("payload is not a dataset: {0}")]
    Payload(#[from] IngestError),
    #[error("QR rendering failed: {0}")]
    Render(String),
}

/// One decoded frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrFrame {
    pub transfer_id: String,
    pub index: usize,
    pub total: usize,
    pub checksum: String,
    pub chunk: String,
}

impl QrFrame {
    pub fn to_text(&self) -> String {
        format!(
            "{MAGIC}|{}|{}|{}|{}|{}",
            self.transfer_id, self.index, self.total, self.checksum, self.chunk
        )
    }
}

fn checksum_hex(text: &str) -> String {
    format!("{:08x}", crc32fast::hash(text.as_bytes()))
}

/// Splits a dataset into frame texts, in index order. The chunks depend only
/// on the dataset; the transfer id is random per call.
pub fn encode_frames(ds: &UlspDataset, max_chunk_chars: usize) -> Result<Vec<String>, QrError> {
    if max_chunk_chars < MIN_MAX_CHUNK_CHARS {
        return Err(QrError::ChunkTooSmall(max_chunk_chars));
    }
    let payload = payload_text(ds);
    let checksum = checksum_hex(&payload);
    let transfer_id = format!("{:08x}", rand::random::<u32>());
    let chunks: Vec<&str> = payload
        .as_bytes()
        .chunks(max_chunk_chars)
        .map(|c| std::str::from_utf8(c).expect("base64 is ASCII"))
        .collect();
    let total = chunks.len();
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(index, chunk)| {
            QrFrame {
                transfer_id: transfer_id.clone(),
                index,
                total,
                checksum: checksum.clone(),
                chunk: chunk.to_string(),
            }
            .to_text()
        })
        .collect())
}

/// Base64 of the DEFLATE-compressed canonical GeoJSON.
pub fn payload_text(ds: &UlspDataset) -> String {
    let bytes = serialize_geojson(&canonicalize(ds));
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&bytes).expect("writing to memory");
    let compressed = enc.finish().expect("writing to memory");
    base64::engine::general_purpose::STANDARD.encode(compressed)
}

fn is_lower_hex8(s: &str) -> bool {
    s.len() == 8 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn is_base64_text(s: &str) -> bool {
    let body = s.trim_end_matches('=');
    s.len() - body.len() <= 2
        && body
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'+' || b == b'/')
}

/// Parses one frame text. Surrounding whitespace is ignored.
pub fn decode_frame(text: &str) -> Result<QrFrame, QrError> {
    let text = text.trim();
    let parts: Vec<&str> = text.split('|').collect();
    let mut starts = Vec::with_capacity(parts.len());
    let mut pos = 0;
    for p in &parts {
        starts.push(pos);
        pos += p.len() + 1;
    }
    let bad = |i: usize, part: &'static str, message: String| QrError::Frame {
        part,
        position: starts.get(i).copied().unwrap_or(text.len()),
        message,
    };
    if parts.len() != 6 {
        return Err(bad(
            parts.len().min(6),
            "layout",
            format!("expected 6 '|'-separated parts, found {}", parts.len()),
        ));
    }
    if parts[0] != MAGIC {
        return Err(bad(0, "magic", format!("expected {MAGIC:?}, found {:?}", parts[0])));
    }
    if !is_lower_hex8(parts[1]) {
        return Err(bad(1, "transfer_id", format!("{:?} is not 8 lowercase hex digits", parts[1])));
    }
    let number = |i: usize, part: &'static str| -> Result<usize, QrError> {
        let s = parts[i];
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(i, part, format!("{s:?} is not a decimal integer")));
        }
        s.parse().map_err(|e| bad(i, part, format!("{s:?}: {e}")))
    };
    let index = number(2, "index")?;
    let total = number(3, "total")?;
    if total == 0 {
        return Err(bad(3, "total", "total must be at least 1".into()));
    }
    if index >= total {
        return Err(bad(2, "index", format!("index {index} is not below total {total}")));
    }
    if !is_lower_hex8(parts[4]) {
        return Err(bad(4, "checksum", format!("{:?} is not 8 lowercase hex digits", parts[4])));
    }
    if parts[5].is_empty() {
        return Err(bad(5, "chunk", "empty chunk".into()));
    }
    if !is_base64_text(parts[5]) {
        return Err(bad(5, "chunk", "not base64 text".into()));
    }
    Ok(QrFrame {
        transfer_id: parts[1].to_string(),
        index,
        total,
        checksum: parts[4].to_string(),
        chunk: parts[5].to_string(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assembly {
    Complete(UlspDataset),
    /// Sorted indices still to be scanned.
    Missing(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Header {
    transfer_id: String,
    total: usize,
    checksum: String,
}

/// Incremental reassembly of one transfer, fed frame by frame as codes are
/// scanned.
#[derive(Debug, Clone, Default)]
pub struct AssemblyState {
    expected: Option<Header>,
    received: BTreeMap<usize, String>,
}

impl AssemblyState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a frame. Returns `false` for an exact duplicate.
    pub fn push(&mut self, frame: QrFrame) -> Result<bool, QrError> {
        let header = Header {
            transfer_id: frame.transfer_id,
            total: frame.total,
            checksum: frame.checksum,
        };
        match &self.expected {
            None => self.expected = Some(header),
            Some(h) if h.transfer_id != header.transfer_id => {
                return Err(QrError::MixedTransfer {
                    expected: h.transfer_id.clone(),
                    found: header.transfer_id,
                })
            }
            Some(h) if *h != header => return Err(QrError::Inconsistent { index: frame.index }),
            Some(_) => {}
        }
        match self.received.get(&frame.index) {
            Some(chunk) if *chunk == frame.chunk => Ok(false),
            Some(_) => Err(QrError::ChunkConflict { index: frame.index }),
            None => {
                self.received.insert(frame.index, frame.chunk);
                Ok(true)
            }
        }
    }

    pub fn total(&self) -> Option<usize> {
        self.expected.as_ref().map(|h| h.total)
    }

    pub fn missing(&self) -> Vec<usize> {
        let total = self.total().unwrap_or(0);
        (0..total).filter(|i| !self.received.contains_key(i)).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.expected.is_some() && self.missing().is_empty()
    }

    /// Decodes the dataset once every frame is present.
    pub fn finish(&self, reg: &FormatRegistry) -> Result<Assembly, QrError> {
        let Some(header) = &self.expected else {
            return Err(QrError::NoFrames);
        };
        let missing = self.missing();
        if !missing.is_empty() {
            return Ok(Assembly::Missing(missing));
        }
        let payload: String = self.received.values().map(String::as_str).collect();
        let computed = checksum_hex(&payload);
        if computed != header.checksum {
            return Err(QrError::ChecksumMismatch {
                expected: header.checksum.clone(),
                computed,
            });
        }
        let compressed = base64::engine::general_purpose::STANDARD
            .decode(payload.as_bytes())
            .map_err(|e| QrError::Base64(e.to_string()))?;
        let mut bytes = Vec::new();
        DeflateDecoder::new(compressed.as_slice())
            .read_to_end(&mut bytes)
            .map_err(|e| QrError::Decompress(e.to_string()))?;
        Ok(Assembly::Complete(parse_geojson(&bytes, reg)?))
    }
}

/// Reassembles a transfer from frames in any order.
pub fn assemble(frames: impl IntoIterator<Item = QrFrame>, reg: &FormatRegistry) -> Result<Assembly, QrError> {
    let mut state = AssemblyState::new();
    for frame in frames {
        state.push(frame)?;
    }
    state.finish(reg)
}

/// Renders text as a PNG QR code.
pub fn render_png(text: &str, level: EcLevel) -> Result<Vec<u8>, QrError> {
    let code = QrCode::with_error_correction_level(text.as_bytes(), level)
        .map_err(|e| QrError::Render(e.to_string()))?;
    let image = code
        .render::<image::Luma<u8>>()
        .module_dimensions(8, 8)
        .quiet_zone(true)
        .build();
    let mut out = std::io::Cursor::new(Vec::new());
    image
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| QrError::Render(e.to_string()))?;
    Ok(out.into_inner())
}
