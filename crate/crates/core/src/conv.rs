//! Exact boolean convolution used by the sumset machinery.
//!
//! Membership of `n` in a sumset is "does any pair a+b = n exist", i.e. a
//! boolean convolution of membership indicators. Small instances use a
//! shift-or over packed bitsets; large ones use a number-theoretic transform
//! over Z_p with p = 15*2^27 + 1. Representation counts never reach p for
//! any window this crate accepts, so a nonzero residue is exactly "count is
//! nonzero" and the result is exact integer arithmetic throughout.

/// NTT-friendly prime and a primitive root.
const P: u64 = 2_013_265_921; // 15 * 2^27 + 1
const ROOT: u64 = 31;
const MAX_LOG: u32 = 27;

/// Windows at or below this use the quadratic bitset path.
const NAIVE_LIMIT: usize = 1 << 12;

/// Packed bitset over `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }

    /// `self |= src << shift`, truncated to `self.len`.
    pub fn or_shifted(&mut self, src: &Bits, shift: usize) {
        if shift >= self.len {
            return;
        }
        let word_shift = shift / 64;
        let bit_shift = shift % 64;
        let n = self.words.len();
        for i in 0..src.words.len() {
            let w = src.words[i];
            if w == 0 {
                continue;
            }
            let lo_idx = i + word_shift;
            if lo_idx >= n {
                break;
            }
            self.words[lo_idx] |= w << bit_shift;
            if bit_shift > 0 && lo_idx + 1 < n {
                self.words[lo_idx + 1] |= w >> (64 - bit_shift);
            }
        }
        self.mask_tail();
    }

    fn mask_tail(&mut self) {
        let extra = self.words.len() * 64 - self.len;
        if extra > 0 {
            let last = self.words.len() - 1;
            self.words[last] &= u64::MAX >> extra;
        }
    }
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= P;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % P;
        }
        base = base * base % P;
        exp >>= 1;
    }
    acc
}

/// In-place iterative NTT; `a.len()` must be a power of two dividing 2^27.
fn ntt(a: &mut [u32], invert: bool) {
    let n = a.len();
    assert!(n.is_power_of_two() && n.trailing_zeros() <= MAX_LOG);

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let mut w_len = pow_mod(ROOT, (P - 1) / len as u64);
        if invert {
            w_len = pow_mod(w_len, P - 2);
        }
        for start in (0..n).step_by(len) {
            let mut w = 1u64;
            for k in 0..len / 2 {
                let u = a[start + k] as u64;
                let v = a[start + k + len / 2] as u64 * w % P;
                a[start + k] = ((u + v) % P) as u32;
                a[start + k + len / 2] = ((u + P - v) % P) as u32;
                w = w * w_len % P;
            }
        }
        len <<= 1;
    }

    if invert {
        let n_inv = pow_mod(n as u64, P - 2);
        for x in a.iter_mut() {
            *x = (*x as u64 * n_inv % P) as u32;
        }
    }
}

fn convolve_ntt(a: &Bits, b: &Bits, out_len: usize) -> Bits {
    let need = a.len() + b.len() - 1;
    let size = need.next_power_of_two();
    assert!(
        size.trailing_zeros() <= MAX_LOG,
        "convolution size {size} exceeds the exact NTT capacity"
    );
    // Counts are bounded by min(|a|, |b|) <= size <= 2^27 < P, so residues
    // equal true representation counts.
    let mut fa = vec![0u32; size];
    for i in a.ones() {
        fa[i] = 1;
    }
    let mut fb = vec![0u32; size];
    for i in b.ones() {
        fb[i] = 1;
    }
    ntt(&mut fa, false);
    ntt(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(fb.iter()) {
        *x = (*x as u64 * *y as u64 % P) as u32;
    }
    ntt(&mut fa, true);

    let mut out = Bits::new(out_len);
    for (i, &c) in fa.iter().take(out_len).enumerate() {
        if c != 0 {
            out.set(i);
        }
    }
    out
}

fn convolve_naive(a: &Bits, b: &Bits, out_len: usize) -> Bits {
    let mut out = Bits::new(out_len);
    for i in a.ones() {
        if i >= out_len {
            break;
        }
        out.or_shifted(b, i);
    }
    out
}

/// Boolean convolution: bit `n` of the result is set iff `n = i + j` for some
/// set bits `i` of `a` and `j` of `b`. Exact for every size accepted.
pub(crate) fn convolve_bool(a: &Bits, b: &Bits, out_len: usize) -> Bits {
    if a.len().max(b.len()).max(out_len) <= NAIVE_LIMIT {
        convolve_naive(a, b, out_len)
    } else {
        convolve_ntt(a, b, out_len)
    }
}
