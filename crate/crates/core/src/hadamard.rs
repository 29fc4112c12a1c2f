//! Hadamard component code of order `r`: Sylvester matrices, the fast
//! Hadamard transform, both encoders and the log-domain symbol-MAP decoders.
//!
//! Bits are `u8` values in `{0, 1}`. LLRs use the convention
//! `L = ln P(bit = 0) - ln P(bit = 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Saturation applied to every LLR before it enters an exponential.
pub const LLR_CLAMP: f64 = 60.0;

#[inline]
pub(crate) fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_CLAMP, LLR_CLAMP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Order of a Hadamard component code. The code has length `q = 2^r` and
/// `r + 2` information bits seen by the protograph (one SPC codeword).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HadamardOrder(u32);

impl HadamardOrder {
    pub const MIN: u32 = 3;
    pub const MAX: u32 = 16;

    pub fn new(r: u32) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&r) {
            Ok(HadamardOrder(r))
        } else {
            Err(Error::Parameter(format!(
                "Hadamard order r = {r} outside [{}, {}]",
                Self::MIN,
                Self::MAX
            )))
        }
    }

    /// Order implied by a protomatrix row weight `d = r + 2`.
    pub fn from_row_weight(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("row weight {d} is below 5")));
        }
        Self::new(u32::try_from(d - 2).unwrap_or(u32::MAX))
    }

    pub fn r(self) -> u32 {
        self.0
    }

    pub fn q(self) -> usize {
        1 << self.0
    }

    pub fn parity(self) -> Parity {
        if self.0 % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn is_even(self) -> bool {
        self.parity() == Parity::Even
    }

    /// Number of protograph bits per component code, `d = r + 2`.
    pub fn info_len(self) -> usize {
        self.0 as usize + 2
    }

    /// Codeword positions `0, 1, 2, 4, ..., 2^(r-1), 2^r - 1`.
    pub fn info_positions(self) -> Vec<usize> {
        let mut p = Vec::with_capacity(self.info_len());
        p.push(0);
        p.extend((0..self.0).map(|k| 1usize << k));
        p.push(self.q() - 1);
        p
    }

    /// Positions carrying channel observations (degree-1 Hadamard variable
    /// nodes), ascending. Even order: everything outside the information
    /// positions. Odd order: `1 ..= 2^r - 2`.
    pub fn channel_positions(self) -> Vec<usize> {
        let q = self.q();
        match self.parity() {
            Parity::Even => {
                let info = self.info_positions();
                (0..q).filter(|p| !info.contains(p)).collect()
            }
            Parity::Odd => (1..q - 1).collect(),
        }
    }

    /// Channel positions `2^(k-1)` that are dropped when `n_h` of them are
    /// punctured (odd order only): the `n_h` highest `k`.
    pub fn punctured_positions(self, n_h: usize) -> Vec<usize> {
        let r = self.0 as usize;
        (r.saturating_sub(n_h)..r).map(|k| 1usize << k).collect()
    }
}

/// Sylvester Hadamard matrix `H_q`, entries produced on demand from the
/// doubling recursion so large orders need no storage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HadamardMatrix {
    r: u32,
}

pub fn build_hadamard(r: u32) -> Result<HadamardMatrix> {
    if !(1..=HadamardOrder::MAX).contains(&r) {
        return Err(Error::Parameter(format!("r = {r} outside [1, 16]")));
    }
    Ok(HadamardMatrix { r })
}

impl HadamardMatrix {
    pub fn size(&self) -> usize {
        1 << self.r
    }

    /// Entry `(i, j)`: the lower-right quadrant of each doubling step is negated.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        let mut half = self.size() >> 1;
        let (mut i, mut j) = (i, j);
        let mut s = 1i8;
        while half > 0 {
            if i >= half && j >= half {
                s = -s;
            }
            i &= half - 1;
            j &= half - 1;
            half >>= 1;
        }
        s
    }

    pub fn row(&self, i: usize) -> Vec<i8> {
        (0..self.size()).map(|j| self.get(i, j)).collect()
    }

    /// Dense matrix-vector product; O(q^2), intended for checking [`fht`].
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| (0..self.size()).map(|j| f64::from(self.get(i, j)) * v[j]).sum())
            .collect()
    }
}

/// In-place fast Hadamard transform: `v[j] <- <h_j, v>`.
pub fn fht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::Parameter(format!("length {n} is not a power of two")));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

pub fn fht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fht_in_place(&mut out)?;
    Ok(out)
}

#[inline]
fn parity_bit(x: usize) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Codeword `+h_j` (`negated = false`) or `-h_j` as bits.
pub fn codeword(order: HadamardOrder, j: usize, negated: bool) -> Vec<u8> {
    (0..order.q())
        .map(|i| parity_bit(i & j) ^ u8::from(negated))
        .collect()
}

/// Even-parity SPC relation over positions `0, 1, 2, ..., 2^(r-1), 2^r - 1`.
pub fn spc_identity_holds(order: HadamardOrder, bits: &[u8]) -> bool {
    order.info_positions().iter().fold(0u8, |acc, &p| acc ^ bits[p]) == 0
}

fn check_info_word(order: HadamardOrder, u: &[u8]) -> Result<()> {
    if u.len() != order.info_len() {
        return Err(Error::Shape(format!(
            "information word has {} bits, expected {}",
            u.len(),
            order.info_len()
        )));
    }
    if u.iter().any(|&b| b > 1) {
        return Err(Error::Parameter(format!("non-binary information word {u:?}")));
    }
    if u.iter().fold(0, |a, &b| a ^ b) != 0 {
        return Err(Error::NotSpcCodeword(u.to_vec()));
    }
    Ok(())
}

fn require(order: HadamardOrder, expected: Parity) -> Result<()> {
    if order.parity() == expected {
        Ok(())
    } else {
        Err(Error::WrongParity { expected, r: order.r() })
    }
}

/// Column index `j` and sign of the codeword carrying information word `u`.
/// Both encoders select `s = u_0`; they differ in bit `k - 1` of `j`.
fn select(order: HadamardOrder, u: &[u8]) -> (usize, bool) {
    let r = order.r() as usize;
    let u0 = u[0];
    let j = (1..=r).fold(0usize, |j, k| {
        let bit = match order.parity() {
            Parity::Even => u[k] ^ u0,
            Parity::Odd => u[k],
        };
        j | (usize::from(bit) << (k - 1))
    });
    (j, u0 == 1)
}

/// Systematic encoding for even `r`; `u` lands on the information positions.
pub fn encode_systematic(u: &[u8], order: HadamardOrder) -> Result<Vec<u8>> {
    require(order, Parity::Even)?;
    check_info_word(order, u)?;
    let (j, neg) = select(order, u);
    Ok(codeword(order, j, neg))
}

/// Non-systematic encoding for odd `r`: `u_k` is replaced by `u_k ^ u_0`
/// for `k = 1..=r` and the result is encoded systematically.
pub fn encode_nonsystematic(u: &[u8], order: HadamardOrder) -> Result<Vec<u8>> {
    require(order, Parity::Odd)?;
    check_info_word(order, u)?;
    let (j, neg) = select(order, u);
    Ok(codeword(order, j, neg))
}

/// Index map `j -> 2^r - 1 - j` used to re-sort the `-h_j` metrics so the
/// odd-order middle positions reduce to an ordinary partition.
pub fn odd_reindex(order: HadamardOrder) -> Vec<usize> {
    let q = order.q();
    (0..q).map(|j| q - 1 - j).collect()
}

/// Places per-bit extrinsics onto the information positions of a full
/// length-`2^r` a-priori vector (even `r`).
pub fn assemble_llr_even(ext_from_pvns: &[f64], channel: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let order = order_from_len(channel.len())?;
    require(order, Parity::Even)?;
    if ext_from_pvns.len() != order.info_len() {
        return Err(Error::Shape(format!(
            "{} a-priori values for {} information bits",
            ext_from_pvns.len(),
            order.info_len()
        )));
    }
    let mut apr = vec![0.0; order.q()];
    for (&p, &x) in order.info_positions().iter().zip(ext_from_pvns) {
        if channel[p] != 0.0 {
            return Err(Error::Layout(format!(
                "channel LLR {} at information position {p}",
                channel[p]
            )));
        }
        apr[p] = x;
    }
    Ok((apr, channel.to_vec()))
}

fn order_from_len(len: usize) -> Result<HadamardOrder> {
    if !len.is_power_of_two() {
        return Err(Error::Shape(format!("LLR vector length {len} is not a power of two")));
    }
    HadamardOrder::new(len.trailing_zeros())
}

/// A-posteriori and extrinsic LLRs of the `r + 2` information bits.
#[derive(Clone, Debug, PartialEq)]
pub struct HadamardDecodeResult {
    pub app: Vec<f64>,
    pub ext: Vec<f64>,
}

/// Log-sum-exp of the terms selected by `take`, exact for any magnitude.
fn lse_where(a: &[f64], b: &[f64], b_index: impl Fn(usize) -> usize, take_a: impl Fn(usize) -> bool) -> f64 {
    let term = |j: usize| if take_a(j) { a[j] } else { b[b_index(j)] };
    let q = a.len();
    let m = (0..q).map(term).fold(f64::NEG_INFINITY, f64::max);
    m + libm::log((0..q).map(|j| libm::exp(term(j) - m)).sum::<f64>())
}

/// Reusable scratch space for the component decoder.
#[derive(Clone, Debug)]
pub struct HadamardDecoder {
    order: HadamardOrder,
    info: Vec<usize>,
    plus: Vec<f64>,
    minus: Vec<f64>,
    ea: Vec<f64>,
    eb: Vec<f64>,
}

impl HadamardDecoder {
    pub fn new(order: HadamardOrder) -> Self {
        let q = order.q();
        HadamardDecoder {
            order,
            info: order.info_positions(),
            plus: vec![0.0; q],
            minus: vec![0.0; q],
            ea: vec![0.0; q],
            eb: vec![0.0; q],
        }
    }

    pub fn order(&self) -> HadamardOrder {
        self.order
    }

    /// Computes `app` for the `r + 2` information bits from their a-priori
    /// LLRs `prior` and the length-`2^r` channel vector `ch` (zero where no
    /// observation exists). Inputs are clamped to [`LLR_CLAMP`].
    pub fn decode_into(&mut self, prior: &[f64], ch: &[f64], app: &mut [f64]) {
        let q = self.order.q();
        debug_assert_eq!(prior.len(), self.order.info_len());
        debug_assert_eq!(ch.len(), q);
        for (x, &c) in self.plus.iter_mut().zip(ch) {
            *x = clamp_llr(c);
        }
        match self.order.parity() {
            Parity::Even => {
                for (&p, &l) in self.info.iter().zip(prior) {
                    self.plus[p] += clamp_llr(l);
                }
                fht_in_place(&mut self.plus).expect("power-of-two length");
                for (b, a) in self.minus.iter_mut().zip(self.plus.iter_mut()) {
                    *a *= 0.5;
                    *b = -*a;
                }
            }
            Parity::Odd => {
                self.minus.copy_from_slice(&self.plus);
                let r = self.order.r() as usize;
                self.plus[0] += clamp_llr(prior[0]);
                self.minus[0] += clamp_llr(prior[0]);
                self.plus[q - 1] += clamp_llr(prior[r + 1]);
                self.minus[q - 1] += clamp_llr(prior[r + 1]);
                for k in 1..=r {
                    let l = clamp_llr(prior[k]);
                    self.plus[1 << (k - 1)] += l;
                    self.minus[1 << (k - 1)] -= l;
                }
                fht_in_place(&mut self.plus).expect("power-of-two length");
                fht_in_place(&mut self.minus).expect("power-of-two length");
                for (a, b) in self.plus.iter_mut().zip(self.minus.iter_mut()) {
                    *a *= 0.5;
                    *b *= -0.5;
                }
            }
        }
        // plus[j] = ln gamma(+h_j), minus[j] = ln gamma(-h_j), up to a common constant.
        let shift = self
            .plus
            .iter()
            .chain(self.minus.iter())
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        for j in 0..q {
            self.ea[j] = libm::exp(self.plus[j] - shift);
            self.eb[j] = libm::exp(self.minus[j] - shift);
        }
        let odd = !self.order.is_even();
        for (slot, &pos) in self.info.iter().enumerate() {
            // Middle positions of an odd order pair +h_j with -h_(q-1-j).
            let reindex = odd && pos != 0 && pos != q - 1;
            let bj = |j: usize| if reindex { q - 1 - j } else { j };
            let (mut num, mut den) = (0.0, 0.0);
            for j in 0..q {
                if parity_bit(pos & j) == 0 {
                    num += self.ea[j];
                    den += self.eb[bj(j)];
                } else {
                    num += self.eb[bj(j)];
                    den += self.ea[j];
                }
            }
            app[slot] = if num >= f64::MIN_POSITIVE && den >= f64::MIN_POSITIVE {
                libm::log(num) - libm::log(den)
            } else {
                let sel = |j: usize| parity_bit(pos & j) == 0;
                lse_where(&self.plus, &self.minus, bj, sel)
                    - lse_where(&self.plus, &self.minus, bj, |j| !sel(j))
            };
        }
    }

    /// Like [`decode_into`](Self::decode_into) and also writes extrinsics
    /// `ext = app - clamp(prior)`.
    pub fn decode_ext_into(&mut self, prior: &[f64], ch: &[f64], app: &mut [f64], ext: &mut [f64]) {
        self.decode_into(prior, ch, app);
        for ((e, &a), &p) in ext.iter_mut().zip(app.iter()).zip(prior) {
            *e = a - clamp_llr(p);
        }
    }
}

/// Symbol-MAP decoding for even `r`. `apr` and `ch` are full length-`2^r`
/// vectors; `apr` is read at the information positions only.
pub fn symbol_map_decode_even(apr: &[f64], ch: &[f64]) -> Result<HadamardDecodeResult> {
    let order = order_from_len(apr.len())?;
    require(order, Parity::Even)?;
    if ch.len() != apr.len() {
        return Err(Error::Shape(format!("apr length {} vs ch length {}", apr.len(), ch.len())));
    }
    let prior: Vec<f64> = order.info_positions().iter().map(|&p| apr[p]).collect();
    decode_with(order, &prior, ch)
}

/// Symbol-MAP decoding for odd `r`. `ext_from_pvns` holds the `r + 2`
/// a-priori LLRs of the information bits; `ch` must be zero at positions
/// `0` and `2^r - 1`.
pub fn symbol_map_decode_odd(ext_from_pvns: &[f64], ch: &[f64]) -> Result<HadamardDecodeResult> {
    let order = order_from_len(ch.len())?;
    require(order, Parity::Odd)?;
    if ext_from_pvns.len() != order.info_len() {
        return Err(Error::Shape(format!(
            "{} a-priori values for {} information bits",
            ext_from_pvns.len(),
            order.info_len()
        )));
    }
    for p in [0, order.q() - 1] {
        if ch[p] != 0.0 {
            return Err(Error::Layout(format!("channel LLR {} at position {p}", ch[p])));
        }
    }
    decode_with(order, ext_from_pvns, ch)
}

fn decode_with(order: HadamardOrder, prior: &[f64], ch: &[f64]) -> Result<HadamardDecodeResult> {
    if prior.iter().chain(ch).any(|x| x.is_nan()) {
        return Err(Error::Parameter("NaN LLR".into()));
    }
    let d = order.info_len();
    let mut dec = HadamardDecoder::new(order);
    let mut app = vec![0.0; d];
    let mut ext = vec![0.0; d];
    dec.decode_ext_into(prior, ch, &mut app, &mut ext);
    Ok(HadamardDecodeResult { app, ext })
}

/// Exact APP LLRs by enumerating every SPC word and its codeword (test oracle).
///
/// `prior` has `r + 2` entries, `ch` has `2^r`. Sums are taken in the linear
/// domain after a max shift with compensated summation.
pub fn brute_force_map(prior: &[f64], ch: &[f64], order: HadamardOrder) -> Result<Vec<f64>> {
    if order.r() > 6 {
        return Err(Error::Parameter(format!(
            "brute-force enumeration refused for r = {}",
            order.r()
        )));
    }
    let d = order.info_len();
    if prior.len() != d || ch.len() != order.q() {
        return Err(Error::Shape("prior/channel lengths do not match the order".into()));
    }
    let mut words = Vec::new();
    for bits in 0u32..(1 << (d - 1)) {
        let mut u: Vec<u8> = (0..d - 1).map(|k| ((bits >> k) & 1) as u8).collect();
        u.push(u.iter().fold(0, |a, &b| a ^ b));
        let c = match order.parity() {
            Parity::Even => encode_systematic(&u, order)?,
            Parity::Odd => encode_nonsystematic(&u, order)?,
        };
        let sgn = |b: u8| 1.0 - 2.0 * f64::from(b);
        let logw = u.iter().zip(prior).map(|(&b, &l)| 0.5 * sgn(b) * clamp_llr(l)).sum::<f64>()
            + c.iter().zip(ch).map(|(&b, &l)| 0.5 * sgn(b) * clamp_llr(l)).sum::<f64>();
        words.push((u, logw));
    }
    let top = words.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    Ok((0..d)
        .map(|k| {
            let mut zero = Neumaier::default();
            let mut one = Neumaier::default();
            for (u, lw) in &words {
                let p = libm::exp(lw - top);
                if u[k] == 0 {
                    zero.add(p);
                } else {
                    one.add(p);
                }
            }
            libm::log(zero.total()) - libm::log(one.total())
        })
        .collect())
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
