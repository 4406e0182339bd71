//! Packed, immutable bit sequences and their encodings.
//!
//! Bits are stored MSB-first: bit `i` of the stream lives at bit position
//! `63 - (i % 64)` of word `i / 64`, which makes the byte-level packing of a
//! word simply its big-endian byte order. Trailing pad bits past `len` are
//! always zero. All counting helpers work word-at-a-time; the per-bit
//! accessors exist for construction, oracles, and tests.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Provenance of a bit stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Origin {
    #[default]
    File,
    Simulated,
    PhaseTrace,
}

/// An immutable sequence of coin tosses, bit-packed MSB-first.
#[derive(Clone)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
    origin: Origin,
}

impl PartialEq for BitStream {
    /// Equality compares bits and length; provenance is metadata.
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len && self.words == other.words
    }
}

impl Eq for BitStream {}

impl core::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "BitStream(len={}, origin={:?}", self.len, self.origin)?;
        if self.len <= 64 {
            write!(f, ", bits=")?;
            for i in 0..self.len {
                write!(f, "{}", u8::from(self.get(i)))?;
            }
        }
        write!(f, ")")
    }
}

impl BitStream {
    /// Builds a stream from raw words; the tail past `len` is zeroed.
    pub fn from_words(mut words: Vec<u64>, len: usize, origin: Origin) -> Result<Self> {
        let needed = len.div_ceil(64);
        if words.len() < needed {
            return Err(Error::OutOfBounds {
                requested: len as u64,
                available: (words.len() * 64) as u64,
            });
        }
        words.truncate(needed);
        let mut out = Self { words, len, origin };
        out.mask_tail();
        Ok(out)
    }

    /// Parses ASCII `'0'`/`'1'` text, ignoring whitespace.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut b = Builder::new(Origin::File);
        for (offset, ch) in text.char_indices() {
            match ch {
                '0' => b.push(false),
                '1' => b.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Error::Format { offset, found: c }),
            }
        }
        Ok(b.finish())
    }

    /// Unpacks `length` bits from MSB-first packed bytes; pad bits ignored.
    pub fn from_packed(bytes: &[u8], length: usize) -> Result<Self> {
        if length > bytes.len() * 8 {
            return Err(Error::OutOfBounds {
                requested: length as u64,
                available: (bytes.len() * 8) as u64,
            });
        }
        let mut words = Vec::with_capacity(length.div_ceil(64));
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words.push(u64::from_be_bytes(buf));
        }
        Self::from_words(words, length, Origin::File)
    }

    /// Packs into MSB-first bytes (`ceil(len/8)` of them, zero padded).
    pub fn pack(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(nbytes);
        out
    }

    /// One `'0'`/`'1'` character per bit, no separators.
    pub fn to_nist_ascii(&self) -> String {
        let mut s = String::with_capacity(self.len);
        for i in 0..self.len {
            s.push(if self.get(i) { '1' } else { '0' });
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    /// Backing words, tail bits zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (63 - (i & 63))) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Total number of 1 bits.
    pub fn ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Number of 1 bits among `bits[start..start + count]`.
    pub fn ones_in_range(&self, start: usize, count: usize) -> u64 {
        assert!(start + count <= self.len);
        if count == 0 {
            return 0;
        }
        let end = start + count - 1; // inclusive
        let (ws, we) = (start >> 6, end >> 6);
        let head = !0u64 >> (start & 63);
        let tail = !0u64 << (63 - (end & 63));
        if ws == we {
            return u64::from((self.words[ws] & head & tail).count_ones());
        }
        let mut total = u64::from((self.words[ws] & head).count_ones());
        for w in &self.words[ws + 1..we] {
            total += u64::from(w.count_ones());
        }
        total + u64::from((self.words[we] & tail).count_ones())
    }

    /// Word `j` of the stream shifted left by `shift` bits: bits
    /// `[64 j + shift, 64 j + shift + 64)`, zero-filled past the end.
    #[inline]
    fn shifted_word(&self, j: usize, shift: usize) -> u64 {
        let q = j + (shift >> 6);
        let r = (shift & 63) as u32;
        let hi = self.words.get(q).copied().unwrap_or(0);
        if r == 0 {
            hi
        } else {
            let lo = self.words.get(q + 1).copied().unwrap_or(0);
            (hi << r) | (lo >> (64 - r))
        }
    }

    /// Number of adjacent `11` pairs `(i, i+1)` with both indices in
    /// `[start, start + count)`; there are `count - 1` such pairs.
    pub fn pairs11_in_range(&self, start: usize, count: usize) -> u64 {
        assert!(start + count <= self.len);
        if count < 2 {
            return 0;
        }
        // Pair indicator stream P_i = b_i & b_{i+1}; count its ones over
        // [start, start + count - 1).
        let pairs = count - 1;
        let end = start + pairs - 1;
        let (ws, we) = (start >> 6, end >> 6);
        let head = !0u64 >> (start & 63);
        let tail = !0u64 << (63 - (end & 63));
        let pword = |j: usize| self.words[j] & self.shifted_word(j, 1);
        if ws == we {
            return u64::from((pword(ws) & head & tail).count_ones());
        }
        let mut total = u64::from((pword(ws) & head).count_ones());
        for j in ws + 1..we {
            total += u64::from(pword(j).count_ones());
        }
        total + u64::from((pword(we) & tail).count_ones())
    }

    /// The `m <= 64` bits starting at `start`, right-aligned in a `u64`.
    #[inline]
    pub fn extract(&self, start: usize, m: usize) -> u64 {
        debug_assert!((1..=64).contains(&m) && start + m <= self.len);
        let j = start >> 6;
        let r = (start & 63) as u32;
        let hi = self.words[j];
        let word = if r == 0 {
            hi
        } else {
            let lo = self.words.get(j + 1).copied().unwrap_or(0);
            (hi << r) | (lo >> (64 - r))
        };
        word >> (64 - m as u32)
    }

    /// Number of positions `i < len - lag` where `b_i != b_{i+lag}`.
    pub fn mismatches_at_lag(&self, lag: usize) -> u64 {
        assert!(lag >= 1 && lag < self.len);
        let valid = self.len - lag;
        let mut total = 0u64;
        let full = valid >> 6;
        for j in 0..full {
            total += u64::from((self.words[j] ^ self.shifted_word(j, lag)).count_ones());
        }
        let rem = valid & 63;
        if rem > 0 {
            let x = self.words[full] ^ self.shifted_word(full, lag);
            total += u64::from((x & (!0u64 << (64 - rem))).count_ones());
        }
        total
    }

    /// Copies `bits[start..start + count]` into a fresh stream.
    pub fn slice(&self, start: usize, count: usize) -> BitStream {
        assert!(start + count <= self.len);
        let mut words = Vec::with_capacity(count.div_ceil(64));
        let mut t = 0;
        while t * 64 < count {
            words.push(self.shifted_word(t, start));
            t += 1;
        }
        let mut out = BitStream {
            words,
            len: count,
            origin: self.origin,
        };
        out.mask_tail();
        out
    }

    /// Non-overlapping consecutive blocks of `block_size` bits; the
    /// remainder is discarded.
    pub fn blocks(&self, block_size: usize) -> Result<impl Iterator<Item = BitStream> + '_> {
        if block_size == 0 {
            return Err(Error::InvalidArgument("block_size must be >= 1"));
        }
        let n = self.len / block_size;
        Ok((0..n).map(move |i| self.slice(i * block_size, block_size)))
    }

    fn mask_tail(&mut self) {
        let r = self.len & 63;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - r);
            }
        }
        debug_assert_eq!(self.words.len(), self.len.div_ceil(64));
    }
}

/// Incremental MSB-first stream builder.
#[derive(Debug)]
pub struct Builder {
    words: Vec<u64>,
    cur: u64,
    fill: u32,
    len: usize,
    origin: Origin,
}

impl Builder {
    pub fn new(origin: Origin) -> Self {
        Self {
            words: Vec::new(),
            cur: 0,
            fill: 0,
            len: 0,
            origin,
        }
    }

    pub fn with_capacity(origin: Origin, bits: usize) -> Self {
        let mut b = Self::new(origin);
        b.words.reserve(bits.div_ceil(64));
        b
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        self.cur = (self.cur << 1) | u64::from(bit);
        self.fill += 1;
        self.len += 1;
        if self.fill == 64 {
            self.words.push(self.cur);
            self.cur = 0;
            self.fill = 0;
        }
    }

    /// Appends 64 bits at once, MSB of `word` first.
    pub fn push_word(&mut self, word: u64) {
        if self.fill == 0 {
            self.words.push(word);
            self.len += 64;
        } else {
            for i in (0..64).rev() {
                self.push((word >> i) & 1 == 1);
            }
        }
    }

    pub fn finish(mut self) -> BitStream {
        if self.fill > 0 {
            self.words.push(self.cur << (64 - self.fill));
        }
        BitStream {
            words: self.words,
            len: self.len,
            origin: self.origin,
        }
    }
}
