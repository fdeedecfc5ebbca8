//! Inputs shared by both simulators: the file library, demand vectors, and
//! the simulation error type.

use std::fmt;

use thiserror::Error;

use crate::bits::BitString;
use crate::rng::{substream, Substream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("K M / N = {0} is not an integer; use memory sharing")]
    NonCornerMemory(f64),
    #[error("file of {file_bits} bits cannot be split into {parts} equal subfiles")]
    IndivisibleFile { file_bits: usize, parts: u64 },
    #[error("user {user} cannot decode: {reason}")]
    DecodeFailure { user: usize, reason: String },
    #[error("invalid demand vector: {0}")]
    InvalidDemand(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

/// `N` files of exactly `F` bits each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLibrary {
    file_bits: usize,
    files: Vec<BitString>,
}

impl FileLibrary {
    pub fn new(files: Vec<BitString>) -> Result<Self, SchemeError> {
        let file_bits = files.first().map_or(0, BitString::len);
        if files.is_empty() || file_bits == 0 {
            return Err(SchemeError::Unsupported("empty library".into()));
        }
        if files.iter().any(|f| f.len() != file_bits) {
            return Err(SchemeError::Unsupported("files differ in length".into()));
        }
        Ok(Self { file_bits, files })
    }

    /// Uniformly random contents drawn from the library substream of `seed`.
    pub fn random(files: usize, file_bits: usize, seed: u64) -> Self {
        assert!(files > 0 && file_bits > 0);
        let mut rng = substream(seed, Substream::Library);
        Self {
            file_bits,
            files: (0..files)
                .map(|_| BitString::random(file_bits, &mut rng))
                .collect(),
        }
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// File `n`, 0-based.
    pub fn file(&self, n: usize) -> &BitString {
        &self.files[n]
    }

    pub fn files(&self) -> &[BitString] {
        &self.files
    }

    /// Bits `start..start + len` of every file laid out as `layout` says.
    pub fn chunked(&self, start: usize, layout: &ChunkLayout) -> Self {
        let width = layout.width();
        let files = self
            .files
            .iter()
            .enumerate()
            .map(|(n, f)| {
                let mut out = BitString::default();
                let mut offset = start;
                for r in 0..layout.chunks {
                    let real = layout.real(n, r);
                    let mut piece = f.slice(offset, real);
                    piece.resize(width);
                    out.append(&piece);
                    offset += real;
                }
                out
            })
            .collect();
        Self {
            file_bits: width * layout.chunks,
            files,
        }
    }
}

/// `len` bits of each file cut into `chunks` pieces whose lengths differ by
/// at most one, each zero padded to the longest.
///
/// The `len % chunks` longer pieces of file `n` start at chunk
/// `rotation + n (len % chunks)` and wrap around, so across files every
/// chunk index is long about equally often.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkLayout {
    pub len: usize,
    pub chunks: usize,
    pub rotation: usize,
}

impl ChunkLayout {
    pub fn width(&self) -> usize {
        self.len.div_ceil(self.chunks)
    }

    /// Long pieces handed out per file.
    pub fn extra(&self) -> usize {
        self.len % self.chunks
    }

    /// Real bits in chunk `r` of file `n`.
    pub fn real(&self, n: usize, r: usize) -> usize {
        let first = (self.rotation + n * self.extra()) % self.chunks;
        let shifted = (r + self.chunks - first) % self.chunks;
        self.len / self.chunks + usize::from(shifted < self.extra())
    }
}

/// One requested file per user, 0-based file indices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(demands: Vec<usize>, files: usize) -> Result<Self, SchemeError> {
        if let Some(bad) = demands.iter().find(|&&d| d >= files) {
            return Err(SchemeError::InvalidDemand(format!(
                "file {} requested but only {files} files exist",
                bad + 1
            )));
        }
        Ok(Self(demands))
    }

    /// From 1-based file numbers, as written on the command line.
    pub fn from_one_based(demands: &[usize], files: usize) -> Result<Self, SchemeError> {
        if demands.contains(&0) {
            return Err(SchemeError::InvalidDemand("file numbers start at 1".into()));
        }
        Self::new(demands.iter().map(|d| d - 1).collect(), files)
    }

    /// `d_k = k mod N`: all-distinct requests when `K <= N`, every file
    /// requested when `K >= N`.
    pub fn distinct(users: usize, files: usize) -> Self {
        Self((0..users).map(|k| k % files).collect())
    }

    /// All `N^K` demand vectors in lexicographic order.
    pub fn all(users: usize, files: usize) -> impl Iterator<Item = DemandVector> {
        let total = files.checked_pow(users as u32).expect("N^K overflows");
        (0..total).map(move |mut code| {
            let mut d = vec![0; users];
            for slot in d.iter_mut().rev() {
                *slot = code % files;
                code /= files;
            }
            DemandVector(d)
        })
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }

    /// File requested by user `k`.
    pub fn of(&self, k: usize) -> usize {
        self.0[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Requested files, ascending, without repetition.
    pub fn distinct_files(&self) -> Vec<usize> {
        let mut f = self.0.clone();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Users requesting file `n`.
    pub fn requesters(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(move |(_, &d)| d == n)
            .map(|(k, _)| k)
    }

    pub(crate) fn check_users(&self, users: usize) -> Result<(), SchemeError> {
        if self.0.len() == users {
            Ok(())
        } else {
            Err(SchemeError::InvalidDemand(format!(
                "{} demands for {users} users",
                self.0.len()
            )))
        }
    }
}

impl fmt::Display for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "-")?;
            }
            write!(f, "{}", d + 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DemandVector({self})")
    }
}
