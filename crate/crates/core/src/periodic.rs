//! Canonical algebra of eventually periodic subsets of N.
//!
//! A set is a finite exceptional part below a threshold plus a fully
//! periodic tail (modulus and residues). This class is closed under union,
//! intersection, complement, difference, affine images `k*S + h`, and exact
//! sumsets, and every member has a unique canonical form: the tail modulus
//! is the minimal period, the threshold is minimal for that modulus, and
//! structural equality decides set equality.
//!
//! The ground set is N starting at 0; densities are counted against
//! `[1, n]`, where element 0 never matters.
//!
//! Sumsets are computed over a provably sufficient window and then
//! post-verified against the window bit for bit. The window bound covers
//! the Frobenius number of the two tail step sizes, so the read-off beyond
//! it is exact; a mismatch would mean the bound is wrong and aborts the
//! process rather than returning a bad set.

use std::fmt;

use num_integer::Integer;

use crate::conv::{convolve_bool, Bits};
use crate::{Error, Result};

/// Hard cap on the sumset verification window, in elements. Windows beyond
/// this would need more memory/time than exact desk-scale work justifies.
pub const SUMSET_WINDOW_CAP: u64 = 1 << 24;

/// An eventually periodic subset of N in canonical form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EventuallyPeriodicSet {
    /// Minimal period of the tail; 1 when the tail is empty or full.
    modulus: u64,
    /// Sorted residues in `[0, modulus)` forming the tail.
    residues: Vec<u64>,
    /// Minimal threshold, a multiple of `modulus`. Membership below it is
    /// given by `exceptions`, at or above it by `residues`.
    threshold: u64,
    /// Sorted members below `threshold`.
    exceptions: Vec<u64>,
}

impl fmt::Debug for EventuallyPeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EPSet({})", self.render())
    }
}

impl fmt::Display for EventuallyPeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn round_up(value: u64, step: u64) -> u64 {
    value.div_ceil(step) * step
}

impl EventuallyPeriodicSet {
    // ------------------------------------------------------------------
    // Constructors
    // ------------------------------------------------------------------

    /// Builds a set from raw parts and canonicalizes it.
    ///
    /// `residues` must lie in `[0, modulus)`, `threshold` must be a multiple
    /// of `modulus`, and `exceptions` must lie in `[0, threshold)`.
    pub fn make(
        modulus: u64,
        residues: &[u64],
        threshold: u64,
        exceptions: &[u64],
    ) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::OutOfRange("modulus must be positive".into()));
        }
        if !threshold.is_multiple_of(modulus) {
            return Err(Error::OutOfRange(format!(
                "threshold {threshold} is not a multiple of modulus {modulus}"
            )));
        }
        if let Some(&r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(Error::OutOfRange(format!(
                "residue {r} not in [0, {modulus})"
            )));
        }
        if let Some(&e) = exceptions.iter().find(|&&e| e >= threshold) {
            return Err(Error::OutOfRange(format!(
                "exception {e} not below threshold {threshold}"
            )));
        }
        let mut res: Vec<u64> = residues.to_vec();
        res.sort_unstable();
        res.dedup();
        let mut exc: Vec<u64> = exceptions.to_vec();
        exc.sort_unstable();
        exc.dedup();
        Ok(Self::assemble(modulus, res, threshold, exc))
    }

    /// The empty set.
    pub fn empty() -> Self {
        EventuallyPeriodicSet {
            modulus: 1,
            residues: Vec::new(),
            threshold: 0,
            exceptions: Vec::new(),
        }
    }

    /// All of N.
    pub fn naturals() -> Self {
        EventuallyPeriodicSet {
            modulus: 1,
            residues: vec![0],
            threshold: 0,
            exceptions: Vec::new(),
        }
    }

    /// A finite set.
    pub fn from_finite(elements: &[u64]) -> Self {
        let mut e: Vec<u64> = elements.to_vec();
        e.sort_unstable();
        e.dedup();
        let threshold = e.last().map_or(0, |&m| m + 1);
        Self::assemble(1, Vec::new(), threshold, e)
    }

    /// The arithmetic progression `step*N + offset`.
    pub fn arithmetic_progression(step: u64, offset: u64) -> Self {
        assert!(step >= 1, "progression step must be positive");
        // The only progression element below the rounded threshold is the
        // offset itself, when it is not on the grid yet.
        let t = round_up(offset, step);
        let exceptions: Vec<u64> = if offset < t { vec![offset] } else { vec![] };
        Self::assemble(step, vec![offset % step], t, exceptions)
    }

    // ------------------------------------------------------------------
    // Accessors
    // ------------------------------------------------------------------

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn exceptions(&self) -> &[u64] {
        &self.exceptions
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty() && self.exceptions.is_empty()
    }

    /// True when the set has no periodic tail.
    pub fn is_finite(&self) -> bool {
        self.residues.is_empty()
    }

    /// Membership test.
    pub fn member(&self, n: u64) -> bool {
        if n < self.threshold {
            self.exceptions.binary_search(&n).is_ok()
        } else {
            self.residues.binary_search(&(n % self.modulus)).is_ok()
        }
    }

    /// Sorted members `<= limit`.
    pub fn enumerate(&self, limit: u64) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .exceptions
            .iter()
            .copied()
            .take_while(|&e| e <= limit)
            .collect();
        if !self.residues.is_empty() {
            for &r in &self.residues {
                let mut n = self.threshold + r;
                while n <= limit {
                    out.push(n);
                    n += self.modulus;
                }
            }
            out.sort_unstable();
        }
        out
    }

    /// Number of members in `[1, limit]`, exactly.
    pub fn count_in_1_to(&self, limit: u64) -> u64 {
        let mut count = self
            .exceptions
            .iter()
            .filter(|&&e| e >= 1 && e <= limit)
            .count() as u64;
        if limit >= self.threshold {
            for &r in &self.residues {
                let first = self.threshold + r;
                if first == 0 {
                    // r = 0 and threshold = 0: count from modulus (exclude 0).
                    if limit >= self.modulus {
                        count += (limit - self.modulus) / self.modulus + 1;
                    }
                } else if first <= limit {
                    count += (limit - first) / self.modulus + 1;
                }
            }
        }
        count
    }

    // ------------------------------------------------------------------
    // Canonicalization
    // ------------------------------------------------------------------

    fn assemble(modulus: u64, residues: Vec<u64>, threshold: u64, exceptions: Vec<u64>) -> Self {
        debug_assert!(threshold.is_multiple_of(modulus));
        debug_assert!(residues.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(exceptions.windows(2).all(|w| w[0] < w[1]));

        // Empty tail: modulus collapses to 1 and the threshold hugs the
        // largest exception.
        if residues.is_empty() {
            let threshold = exceptions.last().map_or(0, |&m| m + 1);
            return EventuallyPeriodicSet {
                modulus: 1,
                residues,
                threshold,
                exceptions,
            };
        }

        // Minimal tail period: smallest divisor d of q whose blocks repeat.
        let q = modulus;
        let mut tail_bits = Bits::new(q as usize);
        for &r in &residues {
            tail_bits.set(r as usize);
        }
        let mut period = q;
        for d in divisors(q) {
            let d_us = d as usize;
            if (d_us..q as usize).all(|r| tail_bits.get(r) == tail_bits.get(r - d_us)) {
                period = d;
                break;
            }
        }
        let residues: Vec<u64> = residues.into_iter().filter(|&r| r < period).collect();
        let mut tail_small = Bits::new(period as usize);
        for &r in &residues {
            tail_small.set(r as usize);
        }

        // Minimal threshold: pop whole blocks whose explicit membership
        // already matches the tail rule. The old threshold is a multiple of
        // q, hence of the new period.
        let mut exc_bits = Bits::new(threshold as usize);
        for &e in &exceptions {
            exc_bits.set(e as usize);
        }
        let mut t = threshold;
        while t >= period {
            let block_ok = (t - period..t)
                .all(|n| exc_bits.get(n as usize) == tail_small.get((n % period) as usize));
            if block_ok {
                t -= period;
            } else {
                break;
            }
        }
        let exceptions: Vec<u64> = exceptions.into_iter().filter(|&e| e < t).collect();

        EventuallyPeriodicSet {
            modulus: period,
            residues,
            threshold: t,
            exceptions,
        }
    }

    // ------------------------------------------------------------------
    // Boolean algebra
    // ------------------------------------------------------------------

    /// Packed membership bits for `0..limit`.
    pub(crate) fn membership_bits(&self, limit: u64) -> Bits {
        let mut bits = Bits::new(limit as usize);
        for &e in &self.exceptions {
            if e < limit {
                bits.set(e as usize);
            }
        }
        if !self.residues.is_empty() {
            let mut tail = Bits::new(self.modulus as usize);
            for &r in &self.residues {
                tail.set(r as usize);
            }
            let mut n = self.threshold;
            let mut r = (self.threshold % self.modulus) as usize;
            while n < limit {
                if tail.get(r) {
                    bits.set(n as usize);
                }
                n += 1;
                r += 1;
                if r == self.modulus as usize {
                    r = 0;
                }
            }
        }
        bits
    }

    fn zip_op(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let l = self.modulus.lcm(&other.modulus);
        let t = round_up(self.threshold.max(other.threshold), l);
        let bits_a = self.membership_bits(t);
        let bits_b = other.membership_bits(t);
        let exceptions: Vec<u64> = (0..t)
            .filter(|&n| f(bits_a.get(n as usize), bits_b.get(n as usize)))
            .collect();
        // At or beyond t both operands follow their tails, and t = 0 mod l.
        let residues: Vec<u64> = (0..l)
            .filter(|&r| {
                f(
                    self.residues.binary_search(&(r % self.modulus)).is_ok(),
                    other.residues.binary_search(&(r % other.modulus)).is_ok(),
                )
            })
            .collect();
        Self::assemble(l, residues, t, exceptions)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_op(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.zip_op(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_op(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Self {
        let full = (0..self.modulus).collect::<Vec<_>>();
        let residues: Vec<u64> = full
            .into_iter()
            .filter(|r| self.residues.binary_search(r).is_err())
            .collect();
        let exceptions: Vec<u64> = (0..self.threshold)
            .filter(|&n| self.exceptions.binary_search(&n).is_err())
            .collect();
        Self::assemble(self.modulus, residues, self.threshold, exceptions)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    /// Exact image `scale*S + offset`.
    pub fn affine(&self, scale: u64, offset: u64) -> Self {
        assert!(scale >= 1, "affine scale must be positive");
        if self.is_empty() {
            return Self::empty();
        }
        if self.residues.is_empty() {
            let elements: Vec<u64> =
                self.exceptions.iter().map(|&e| scale * e + offset).collect();
            return Self::from_finite(&elements);
        }
        let q = scale * self.modulus;
        // Raw image threshold; elements of the mapped tail below the rounded
        // threshold become explicit exceptions.
        let raw_t = scale * self.threshold + offset;
        let t = round_up(raw_t, q);
        let mut exceptions: Vec<u64> = self.exceptions.iter().map(|&e| scale * e + offset).collect();
        let mut n = self.threshold;
        loop {
            let image = scale * n + offset;
            if image >= t {
                break;
            }
            if self.member(n) {
                exceptions.push(image);
            }
            n += 1;
        }
        exceptions.sort_unstable();
        let residues: Vec<u64> = {
            let mut v: Vec<u64> = self
                .residues
                .iter()
                .map(|&r| (scale * r + offset) % q)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        Self::assemble(q, residues, t, exceptions)
    }

    // ------------------------------------------------------------------
    // Sumsets
    // ------------------------------------------------------------------

    /// Exact sumset `{a + b: a in self, b in other}`.
    ///
    /// The result is computed over a window whose length covers the point
    /// past which the sumset is provably periodic, then post-verified
    /// against that window bit for bit. A post-verification mismatch means
    /// the window bound is wrong and panics: a wrong set must never be
    /// returned.
    pub fn sumset(&self, other: &Self) -> Result<Self> {
        if self.is_empty() || other.is_empty() {
            return Ok(Self::empty());
        }
        match (self.is_finite(), other.is_finite()) {
            (true, true) => {
                let mut sums: Vec<u64> = Vec::new();
                for &a in &self.exceptions {
                    for &b in &other.exceptions {
                        sums.push(a + b);
                    }
                }
                Ok(Self::from_finite(&sums))
            }
            (true, false) => other.sumset_with_finite(&self.exceptions),
            (false, true) => self.sumset_with_finite(&other.exceptions),
            (false, false) => self.sumset_periodic(other),
        }
    }

    /// Sumset with a non-empty finite set: a union of translates, computed
    /// over a shared window.
    fn sumset_with_finite(&self, finite: &[u64]) -> Result<Self> {
        let max_e = *finite.last().expect("finite operand is non-empty");
        let l = self.modulus;
        // Beyond max_e + threshold every translate follows its tail.
        let t = round_up(max_e + self.threshold + 1, l);
        let window_len = t + 2 * l;
        if window_len > SUMSET_WINDOW_CAP {
            return Err(Error::BudgetExceeded(format!(
                "sumset window of {window_len} elements exceeds cap {SUMSET_WINDOW_CAP}"
            )));
        }
        let base = self.membership_bits(window_len);
        let mut window = Bits::new(window_len as usize);
        for &e in finite {
            window.or_shifted(&base, e as usize);
        }
        Ok(Self::read_off_window(&window, l, t))
    }

    /// Sumset of two sets with non-empty periodic tails.
    fn sumset_periodic(&self, other: &Self) -> Result<Self> {
        let (q1, q2) = (self.modulus, other.modulus);
        let g = q1.gcd(&q2);
        let l = q1.lcm(&q2);
        // Past t_star the sumset is periodic mod l: translate parts are
        // periodic mod q1 or q2 from threshold sums, and each pair of tail
        // progressions is fully present past its offset plus the scaled
        // Frobenius bound g*(q1/g - 1)*(q2/g - 1) <= q1*q2/g - q1 - q2 + g.
        let t_star = self.threshold + other.threshold + q1 * q2 / g + q1 + q2;
        let t = round_up(t_star, l);
        let window_len = t + 2 * l;
        if window_len > SUMSET_WINDOW_CAP {
            return Err(Error::BudgetExceeded(format!(
                "sumset window of {window_len} elements exceeds cap {SUMSET_WINDOW_CAP}"
            )));
        }

        let pure = self.threshold == 0
            && other.threshold == 0
            && self.exceptions.is_empty()
            && other.exceptions.is_empty();
        let window = if pure && q1 == q2 {
            // Residue-level convolution: n is a member iff some residue sum
            // s = r1 + r2 <= n has s = n (mod q).
            let q = q1 as usize;
            let mut ra = Bits::new(q);
            for &r in &self.residues {
                ra.set(r as usize);
            }
            let mut rb = Bits::new(q);
            for &r in &other.residues {
                rb.set(r as usize);
            }
            let sums = convolve_bool(&ra, &rb, 2 * q - 1);
            let mut window = Bits::new(window_len as usize);
            for n in 0..window_len as usize {
                let r = n % q;
                let hit = if n < q {
                    sums.get(n)
                } else {
                    sums.get(r) || (r + q <= 2 * q - 2 && sums.get(r + q))
                };
                if hit {
                    window.set(n);
                }
            }
            window
        } else {
            let a = self.membership_bits(window_len);
            let b = other.membership_bits(window_len);
            convolve_bool(&a, &b, window_len as usize)
        };
        Ok(Self::read_off_window(&window, l, t))
    }

    /// Reads the tail off the final window period, canonicalizes, and
    /// post-verifies the claimed set against the whole window.
    fn read_off_window(window: &Bits, l: u64, t: u64) -> Self {
        debug_assert!(t.is_multiple_of(l));
        debug_assert!(window.len() as u64 >= t + 2 * l);
        let exceptions: Vec<u64> = (0..t).filter(|&n| window.get(n as usize)).collect();
        let residues: Vec<u64> = (0..l).filter(|&r| window.get((t + r) as usize)).collect();
        let result = Self::assemble(l, residues, t, exceptions);

        // Mandatory post-verification: the canonical set must reproduce the
        // window, including two full periods past the threshold.
        let check = result.membership_bits(window.len() as u64);
        assert!(
            check == *window,
            "sumset post-verification mismatch: the periodicity window bound is wrong"
        );
        result
    }

    /// Exact k-fold sumset (k >= 1).
    pub fn k_fold_sumset(&self, k: u32) -> Result<Self> {
        assert!(k >= 1, "k must be positive");
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.sumset(self)?;
        }
        Ok(acc)
    }

    // ------------------------------------------------------------------
    // Textual grammar
    // ------------------------------------------------------------------

    /// Canonical rendering; see the grammar notes in the crate README.
    ///
    /// Finite sets render as `{a,b,...}`. Sets with a tail render as
    /// `[{extras} + ] mod q {residues} [from T] [except-remove {absent}]`
    /// where `extras` are members below the threshold that the tail rule
    /// misses and `absent` are tail-rule matches below the threshold that
    /// are not members.
    pub fn render(&self) -> String {
        fn list(items: &[u64]) -> String {
            let inner: Vec<String> = items.iter().map(|n| n.to_string()).collect();
            format!("{{{}}}", inner.join(","))
        }
        if self.residues.is_empty() {
            return list(&self.exceptions);
        }
        let tail_matches: Vec<u64> = (0..self.threshold)
            .filter(|&n| self.residues.binary_search(&(n % self.modulus)).is_ok())
            .collect();
        let extras: Vec<u64> = self
            .exceptions
            .iter()
            .copied()
            .filter(|e| tail_matches.binary_search(e).is_err())
            .collect();
        let removed: Vec<u64> = tail_matches
            .iter()
            .copied()
            .filter(|m| self.exceptions.binary_search(m).is_err())
            .collect();
        let mut out = String::new();
        if !extras.is_empty() {
            out.push_str(&list(&extras));
            out.push_str(" + ");
        }
        out.push_str(&format!("mod {} {}", self.modulus, list(&self.residues)));
        if self.threshold > 0 {
            out.push_str(&format!(" from {}", self.threshold));
        }
        if !removed.is_empty() {
            out.push_str(&format!(" except-remove {}", list(&removed)));
        }
        out
    }

    /// Parses the textual set grammar. Round-trips bit-exactly with
    /// [`render`](Self::render).
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse_set()
    }
}

/// Divisors of n in increasing order.
fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

// ----------------------------------------------------------------------
// Grammar parser
// ----------------------------------------------------------------------

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { text, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: Some(self.pos),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        if let Some(after) = rest.strip_prefix(kw) {
            let boundary = after
                .chars()
                .next()
                .is_none_or(|c| !c.is_alphanumeric() && c != '-');
            if boundary {
                self.pos += kw.len();
                return true;
            }
        }
        false
    }

    fn expect_char(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected {c:?}")))
        }
    }

    fn parse_nat(&mut self) -> Result<u64> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.error("expected a non-negative integer"));
        }
        self.pos += digits.len();
        digits
            .parse::<u64>()
            .map_err(|_| self.error("integer out of range"))
    }

    fn parse_list(&mut self) -> Result<Vec<u64>> {
        self.expect_char('{')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.text[self.pos..].starts_with('}') {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.parse_nat()?);
            self.skip_ws();
            if self.text[self.pos..].starts_with(',') {
                self.pos += 1;
            } else {
                self.expect_char('}')?;
                break;
            }
        }
        items.sort_unstable();
        items.dedup();
        Ok(items)
    }

    fn parse_set(&mut self) -> Result<EventuallyPeriodicSet> {
        let mut added: Vec<u64> = Vec::new();
        let mut base: Option<EventuallyPeriodicSet> = None;

        match self.peek_char() {
            Some('{') => {
                added = self.parse_list()?;
                self.skip_ws();
                if self.text[self.pos..].starts_with('+') {
                    self.pos += 1;
                    base = Some(self.parse_periodic()?);
                }
            }
            Some('m') => {
                base = Some(self.parse_periodic()?);
            }
            _ => return Err(self.error("expected '{' or 'mod'")),
        }

        self.skip_ws();
        if self.pos != self.text.len() {
            return Err(self.error("trailing input after set expression"));
        }

        let mut set = base.unwrap_or_else(EventuallyPeriodicSet::empty);
        if !added.is_empty() {
            set = set.union(&EventuallyPeriodicSet::from_finite(&added));
        }
        Ok(set)
    }

    fn parse_periodic(&mut self) -> Result<EventuallyPeriodicSet> {
        if !self.eat_keyword("mod") {
            return Err(self.error("expected 'mod'"));
        }
        let modulus = self.parse_nat()?;
        if modulus == 0 {
            return Err(self.error("modulus must be positive"));
        }
        // Optional long-form keyword: `mod 4 residues {1}`.
        self.eat_keyword("residues");
        let residues = self.parse_list()?;
        if let Some(&r) = residues.iter().find(|&&r| r >= modulus) {
            return Err(self.error(format!("residue {r} not in [0, {modulus})")));
        }
        // `from T` annotates the canonical threshold; membership semantics
        // are carried entirely by the residues and the add/remove lists.
        if self.eat_keyword("from") {
            let _threshold = self.parse_nat()?;
        }
        let mut set = EventuallyPeriodicSet::make(modulus, &residues, 0, &[])
            .expect("validated parts");
        if self.eat_keyword("except-add") {
            let extra = self.parse_list()?;
            set = set.union(&EventuallyPeriodicSet::from_finite(&extra));
        }
        if self.eat_keyword("except-remove") {
            let removed = self.parse_list()?;
            set = set.difference(&EventuallyPeriodicSet::from_finite(&removed));
        }
        Ok(set)
    }
}
