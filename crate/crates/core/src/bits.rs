//! Packed bit strings.
//!
//! Bits are stored little-endian in `u64` words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Bits past `len` are always zero, so derived
//! equality compares contents.

use std::fmt;

use rand::Rng;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut out = Self {
            words: (0..words_for(len)).map(|_| rng.gen()).collect(),
            len,
        };
        out.clear_tail();
        out
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::default();
        for b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(w * WORD + b)
                }
            })
        })
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Copy of bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        assert!(start + len <= self.len, "slice past end");
        let mut out = Self::zeros(len);
        if start.is_multiple_of(WORD) {
            let first = start / WORD;
            out.words
                .copy_from_slice(&self.words[first..first + words_for(len)]);
            out.clear_tail();
        } else {
            for i in 0..len {
                if self.get(start + i) {
                    out.set(i, true);
                }
            }
        }
        out
    }

    pub fn append(&mut self, other: &BitString) {
        if self.len.is_multiple_of(WORD) {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
        } else {
            for b in other.iter() {
                self.push(b);
            }
        }
    }

    /// Bits at `positions`, in the given order.
    pub fn gather<I: IntoIterator<Item = usize>>(&self, positions: I) -> Self {
        Self::from_bits(positions.into_iter().map(|p| self.get(p)))
    }

    /// XOR `other` into `self`, first zero padding the shorter operand to the
    /// longer length. The result has length `max(self.len, other.len)`.
    pub fn xor_padded(&mut self, other: &BitString) {
        if other.len > self.len {
            self.resize(other.len);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Bitwise AND; both operands must have the same length.
    pub fn and(&self, other: &BitString) -> BitString {
        assert_eq!(self.len, other.len);
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        }
    }

    /// Bitwise NOT within `len`.
    pub fn complement(&self) -> BitString {
        let mut out = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    /// Grow with zeros or truncate.
    pub fn resize(&mut self, len: usize) {
        self.words.resize(words_for(len), 0);
        self.len = len;
        self.clear_tail();
    }

    /// Parity of the bitwise AND, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitString) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    /// Little-endian bit order within each byte, padded with zeros to a whole
    /// number of bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Self> {
        if bytes.len() < len.div_ceil(8) {
            return None;
        }
        let mut out = Self::zeros(len);
        for (w, chunk) in out.words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        out.clear_tail();
        Some(out)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString[{}](", self.len)?;
        for (i, b) in self.iter().enumerate() {
            if i == 64 {
                write!(f, "…")?;
                break;
            }
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, ")")
    }
}
