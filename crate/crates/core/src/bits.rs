//! Word-level helpers shared by [`ObjectSet`](crate::ObjectSet) and the matrix kernel.
//!
//! Bits are packed little-endian into `u64` words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Bits past the logical length are always zero.

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask of the valid bits in the last word of a `len`-bit vector.
#[inline]
pub(crate) fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

#[inline]
pub(crate) fn get(words: &[u64], i: usize) -> bool {
    words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
}

#[inline]
pub(crate) fn set(words: &mut [u64], i: usize, value: bool) {
    let mask = 1u64 << (i % WORD_BITS);
    if value {
        words[i / WORD_BITS] |= mask;
    } else {
        words[i / WORD_BITS] &= !mask;
    }
}

pub(crate) fn fill_ones(words: &mut [u64], len: usize) {
    words.fill(!0);
    if let Some(last) = words.last_mut() {
        *last &= tail_mask(len);
    }
}

#[inline]
pub(crate) fn or_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d |= *s;
    }
}

#[inline]
pub(crate) fn and_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d &= *s;
    }
}

#[inline]
pub(crate) fn is_zero(words: &[u64]) -> bool {
    words.iter().all(|&w| w == 0)
}

/// `a ⊆ b`
#[inline]
pub(crate) fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

#[inline]
pub(crate) fn intersects(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

pub(crate) fn count_ones(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Copies `len` bits starting at `src_start` in `src` to `dst_start` in `dst`.
pub(crate) fn copy_range(
    dst: &mut [u64],
    dst_start: usize,
    src: &[u64],
    src_start: usize,
    len: usize,
) {
    let mut done = 0;
    let head = (WORD_BITS - dst_start % WORD_BITS) % WORD_BITS;
    if head > 0 && len > 0 {
        let chunk = head.min(len);
        write_bits(dst, dst_start, read_bits(src, src_start, chunk), chunk);
        done = chunk;
    }
    // whole destination words
    let s_off = (src_start + done) % WORD_BITS;
    let mut sw = (src_start + done) / WORD_BITS;
    let mut dw = (dst_start + done) / WORD_BITS;
    while len - done >= WORD_BITS {
        dst[dw] = if s_off == 0 {
            src[sw]
        } else {
            (src[sw] >> s_off) | (src[sw + 1] << (WORD_BITS - s_off))
        };
        sw += 1;
        dw += 1;
        done += WORD_BITS;
    }
    if done < len {
        write_bits(
            dst,
            dst_start + done,
            read_bits(src, src_start + done, len - done),
            len - done,
        );
    }
}

/// Stores the low `n` (1..=64) bits of `v` at bit `p`; must not cross a word.
#[inline]
fn write_bits(dst: &mut [u64], p: usize, v: u64, n: usize) {
    let off = p % WORD_BITS;
    let mask = if n == WORD_BITS {
        !0
    } else {
        ((1u64 << n) - 1) << off
    };
    let w = &mut dst[p / WORD_BITS];
    *w = (*w & !mask) | (v << off);
}

/// `n` (1..=64) bits starting at bit `p`, low-aligned.
#[inline]
fn read_bits(src: &[u64], p: usize, n: usize) -> u64 {
    let (w, off) = (p / WORD_BITS, p % WORD_BITS);
    let mut v = src[w] >> off;
    if off != 0 && off + n > WORD_BITS {
        v |= src[w + 1] << (WORD_BITS - off);
    }
    if n == WORD_BITS {
        v
    } else {
        v & ((1u64 << n) - 1)
    }
}

/// Contiguous `(src_start, dst_start, len)` runs of an ascending index list.
pub(crate) fn runs_of(keep: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut runs: Vec<(usize, usize, usize)> = Vec::new();
    for (dst, &src) in keep.iter().enumerate() {
        match runs.last_mut() {
            Some((s, _, len)) if *s + *len == src => *len += 1,
            _ => runs.push((src, dst, 1)),
        }
    }
    runs
}

/// Iterator over the indices of set bits.
pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl<'a> Ones<'a> {
    pub(crate) fn new(words: &'a [u64]) -> Self {
        Ones {
            words,
            word_idx: 0,
            current: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let tz = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * WORD_BITS + tz);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}
