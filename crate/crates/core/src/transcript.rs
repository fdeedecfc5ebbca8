//! What the server puts on the shared link.
//!
//! A transcript is an ordered list of labelled segments. Its measured rate
//! is the total payload length divided by the file size. Segments with an
//! empty payload are kept as markers; they cost nothing.
//!
//! # Binary layout
//!
//! Segments are written back to back, each as
//!
//! ```text
//! kind      u8       0 = subset, 1 = uncoded file, 2 = RLC block
//! label     u64 LE   subset bitmask (bit k-1 = user k), or 1-based file number
//! bit_len   u32 LE   payload length in bits
//! coeff_id  u64 LE   kind 2 only: (block index << 32) | block width in bits
//! payload   ceil(bit_len / 8) bytes, bit i at byte i/8, bit i%8 (LSB first)
//! ```
//!
//! For kind 2 every payload bit is one random linear combination, so
//! `bit_len` is also the number of combinations sent.

use thiserror::Error;

use crate::bits::BitString;
use crate::subsets::SubsetMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegmentLabel {
    /// XOR-coded segment for the user subset `S`.
    Subset(SubsetMask),
    /// Uncached suffix of one file (0-based), sent uncoded.
    File(usize),
    /// Random linear combinations over one block of one file (0-based).
    Rlc {
        file: usize,
        block: usize,
        block_bits: usize,
    },
}

impl SegmentLabel {
    fn kind(self) -> u8 {
        match self {
            SegmentLabel::Subset(_) => 0,
            SegmentLabel::File(_) => 1,
            SegmentLabel::Rlc { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub label: SegmentLabel,
    pub payload: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("truncated transcript at byte {0}")]
    Truncated(usize),
    #[error("unknown segment kind {kind} at byte {offset}")]
    UnknownKind { kind: u8, offset: usize },
    #[error("duplicate segment label {0:?}")]
    DuplicateLabel(SegmentLabel),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryTranscript {
    file_bits: usize,
    segments: Vec<Segment>,
}

impl DeliveryTranscript {
    pub fn new(file_bits: usize) -> Self {
        assert!(file_bits > 0);
        Self {
            file_bits,
            segments: Vec::new(),
        }
    }

    pub fn push(&mut self, label: SegmentLabel, payload: BitString) {
        debug_assert!(
            self.segments.iter().all(|s| s.label != label),
            "duplicate label {label:?}"
        );
        self.segments.push(Segment { label, payload });
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    /// All segments, including empty markers, in transmission order.
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segments that actually carry bits.
    pub fn sent(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| !s.payload.is_empty())
    }

    pub fn find(&self, label: SegmentLabel) -> Option<&Segment> {
        self.segments.iter().find(|s| s.label == label)
    }

    pub fn total_bits(&self) -> usize {
        self.segments.iter().map(|s| s.payload.len()).sum()
    }

    /// Transmitted bits per file bit.
    pub fn measured_rate(&self) -> f64 {
        self.total_bits() as f64 / self.file_bits as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for seg in &self.segments {
            out.push(seg.label.kind());
            let label: u64 = match seg.label {
                SegmentLabel::Subset(mask) => mask.0,
                SegmentLabel::File(n) | SegmentLabel::Rlc { file: n, .. } => n as u64 + 1,
            };
            out.extend_from_slice(&label.to_le_bytes());
            let bit_len = u32::try_from(seg.payload.len()).expect("segment under 4 Gbit");
            out.extend_from_slice(&bit_len.to_le_bytes());
            if let SegmentLabel::Rlc {
                block, block_bits, ..
            } = seg.label
            {
                let id = ((block as u64) << 32) | block_bits as u64;
                out.extend_from_slice(&id.to_le_bytes());
            }
            out.extend_from_slice(&seg.payload.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], file_bits: usize) -> Result<Self, TranscriptError> {
        let mut reader = Reader { bytes, pos: 0 };
        let mut out = Self::new(file_bits);
        while reader.pos < bytes.len() {
            let offset = reader.pos;
            let kind = reader.take(1)?[0];
            let label = u64::from_le_bytes(reader.take(8)?.try_into().unwrap());
            let bit_len = u32::from_le_bytes(reader.take(4)?.try_into().unwrap()) as usize;
            let label = match kind {
                0 => SegmentLabel::Subset(SubsetMask(label)),
                1 => SegmentLabel::File(label as usize - 1),
                2 => {
                    let id = u64::from_le_bytes(reader.take(8)?.try_into().unwrap());
                    SegmentLabel::Rlc {
                        file: label as usize - 1,
                        block: (id >> 32) as usize,
                        block_bits: (id & 0xffff_ffff) as usize,
                    }
                }
                kind => return Err(TranscriptError::UnknownKind { kind, offset }),
            };
            let payload_at = reader.pos;
            let payload = BitString::from_bytes(reader.take(bit_len.div_ceil(8))?, bit_len)
                .ok_or(TranscriptError::Truncated(payload_at))?;
            if out.find(label).is_some() {
                return Err(TranscriptError::DuplicateLabel(label));
            }
            out.segments.push(Segment { label, payload });
        }
        Ok(out)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TranscriptError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(TranscriptError::Truncated(self.pos));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
}
