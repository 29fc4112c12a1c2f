//! Protograph EXIT analysis with Monte-Carlo Hadamard check updates,
//! descending threshold search, and random protomatrix generation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hadamard::{HadamardDecoder, HadamardOrder, Parity};
use crate::par::{derive_seed, Executor};
use crate::protograph::{code_rate, validate, Constraints, Protomatrix, PunctureSpec};

const A1: f64 = -0.0421061;
const B1: f64 = 0.209252;
const C1: f64 = -0.00640081;
const A2: f64 = 0.00181491;
const B2: f64 = -0.142675;
const C2: f64 = -0.0822054;
const D2: f64 = 0.0549608;
const SIGMA_BREAK: f64 = 1.6363;
const SIGMA_ONE: f64 = 10.0;

const AI1: f64 = 1.09542;
const BI1: f64 = 0.214217;
const CI1: f64 = 2.33727;
const AI2: f64 = 0.706692;
const BI2: f64 = 0.386013;
const CI2: f64 = -1.75017;
const I_BREAK: f64 = 0.3646;

/// Stand-in for `J^-1(1)`: large enough that `J` of it is exactly 1 and the
/// derived LLRs saturate the decoder clamp.
const SIGMA_SAT: f64 = 30.0;

/// Mutual information of a consistent Gaussian LLR with standard deviation `sigma`.
pub fn j_fun(sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!("J needs sigma >= 0, got {sigma}")));
    }
    Ok(j_raw(sigma))
}

fn j_raw(sigma: f64) -> f64 {
    let s = sigma;
    let v = if s <= SIGMA_BREAK {
        A1 * s * s * s + B1 * s * s + C1 * s
    } else if s < SIGMA_ONE {
        1.0 - libm::exp(A2 * s * s * s + B2 * s * s + C2 * s + D2)
    } else {
        1.0
    };
    v.clamp(0.0, 1.0)
}

/// Inverse of [`j_fun`] on `[0, 1)`.
pub fn j_inv(i: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&i) {
        return Err(Error::Parameter(format!("J^-1 needs 0 <= I < 1, got {i}")));
    }
    Ok(j_inv_unchecked(i))
}

fn j_inv_unchecked(i: f64) -> f64 {
    if i <= I_BREAK {
        AI1 * i * i + BI1 * i + CI1 * libm::sqrt(i)
    } else {
        -AI2 * libm::log(BI2 * (1.0 - i)) - CI2 * i
    }
}

/// `J^-1` extended to the closed interval, saturating at `I = 1`.
fn j_inv_sat(i: f64) -> f64 {
    if i <= 0.0 {
        0.0
    } else if i >= 1.0 {
        SIGMA_SAT
    } else {
        j_inv_unchecked(i).min(SIGMA_SAT)
    }
}

/// Standard deviation of the channel LLRs, `sqrt(8 R Eb/N0)`.
pub fn sigma_lch(rate: f64, ebn0_db: f64) -> f64 {
    libm::sqrt(8.0 * rate * libm::pow(10.0, ebn0_db / 10.0))
}

/// Dense row-major matrix of mutual-information values.
#[derive(Clone, Debug, PartialEq)]
pub struct MiMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MiMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MiMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        MiMatrix { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// The matrices iterated by the analysis, for protomatrix dimensions m x n
/// and row weight d.
#[derive(Clone, Debug, PartialEq)]
pub struct MiState {
    pub i_av: MiMatrix,
    pub i_ev: MiMatrix,
    pub i_ah: MiMatrix,
    pub i_eh: MiMatrix,
    pub i_app: Vec<f64>,
}

fn channel_var(j: usize, sigma: f64, punct: &PunctureSpec) -> f64 {
    if punct.is_column_punctured(j) {
        0.0
    } else {
        sigma * sigma
    }
}

/// Variable-node update: extrinsic MI from protograph variable `j` to check row `i`.
pub fn vn_update(b: &Protomatrix, i_av: &MiMatrix, sigma_lch: f64, punct: &PunctureSpec) -> MiMatrix {
    let (m, n) = (b.m(), b.n());
    let mut out = MiMatrix::zeros(m, n);
    for j in 0..n {
        let sq: Vec<f64> = (0..m).map(|s| libm::pow(j_inv_sat(i_av.get(s, j)), 2.0)).collect();
        let total: f64 = (0..m).map(|s| f64::from(b.get(s, j)) * sq[s]).sum::<f64>()
            + channel_var(j, sigma_lch, punct);
        for i in 0..m {
            if b.get(i, j) > 0 {
                out.set(i, j, j_raw(libm::sqrt((total - sq[i]).max(0.0))));
            }
        }
    }
    out
}

/// Repeats each `I_ev(i, j)` `b[i][j]` times along row `i`, giving an m x d matrix.
pub fn expand_to_ah(b: &Protomatrix, i_ev: &MiMatrix) -> Result<MiMatrix> {
    let d = b
        .uniform_row_weight()
        .ok_or_else(|| Error::Shape("rows do not share a common weight".into()))?;
    let mut out = MiMatrix::zeros(b.m(), d);
    for i in 0..b.m() {
        let row = out.row_mut(i);
        let mut k = 0;
        for j in 0..b.n() {
            for _ in 0..b.get(i, j) {
                row[k] = i_ev.get(i, j);
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Averages the `b[i][j]` entries of `I_eh` row `i` that belong to column `j`.
pub fn contract_to_av(b: &Protomatrix, i_eh: &MiMatrix) -> MiMatrix {
    let mut out = MiMatrix::zeros(b.m(), b.n());
    for i in 0..b.m() {
        let mut k = 0;
        for j in 0..b.n() {
            let mult = b.get(i, j) as usize;
            if mult > 0 {
                let s: f64 = i_eh.row(i)[k..k + mult].iter().sum();
                out.set(i, j, s / mult as f64);
                k += mult;
            }
        }
    }
    out
}

/// A-posteriori MI of every protograph column.
pub fn i_app(b: &Protomatrix, i_av: &MiMatrix, sigma_lch: f64, punct: &PunctureSpec) -> Vec<f64> {
    (0..b.n())
        .map(|j| {
            let s: f64 = (0..b.m())
                .map(|i| f64::from(b.get(i, j)) * libm::pow(j_inv_sat(i_av.get(i, j)), 2.0))
                .sum::<f64>()
                + channel_var(j, sigma_lch, punct);
            j_raw(libm::sqrt(s))
        })
        .collect()
}

/// Samples per independently seeded Monte-Carlo chunk.
const MC_CHUNK: usize = 1000;

/// `log2(1 + e^-x)` without overflow.
fn log2_1p_exp_neg(x: f64) -> f64 {
    let v = if x > 0.0 {
        libm::log1p(libm::exp(-x))
    } else {
        -x + libm::log1p(libm::exp(x))
    };
    v * core::f64::consts::LOG2_E
}

/// Sums of `log2(1 + exp(-(1 - 2x) L_ext))` per position over samples
/// `chunk * MC_CHUNK ..` of one chunk.
fn mc_chunk(i_ah: &[f64], sigma_ch: f64, order: HadamardOrder, n_h: usize, count: usize, seed: u64, chunk: usize) -> Vec<f64> {
    let d = order.info_len();
    let q = order.q();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    let sig: Vec<f64> = i_ah.iter().map(|&i| j_inv_sat(i)).collect();
    let mut observed = vec![false; q];
    for p in order.channel_positions() {
        observed[p] = true;
    }
    if order.parity() == Parity::Odd {
        for p in order.punctured_positions(n_h) {
            observed[p] = false;
        }
    }
    let mut dec = HadamardDecoder::new(order);
    let (mut prior, mut ch) = (vec![0.0; d], vec![0.0; q]);
    let (mut app, mut ext) = (vec![0.0; d], vec![0.0; d]);
    let mut acc = vec![0.0; d];
    let mut u = vec![0u8; d];
    let r = order.r() as usize;
    for _ in 0..count {
        let bits = rng.next_u64();
        for k in 0..d - 1 {
            u[k] = ((bits >> k) & 1) as u8;
        }
        u[d - 1] = u[..d - 1].iter().fold(0, |a, &x| a ^ x);
        let neg = u[0] == 1;
        let jcol = (1..=r).fold(0usize, |jc, k| {
            let bit = if order.is_even() { u[k] ^ u[0] } else { u[k] };
            jc | (usize::from(bit) << (k - 1))
        });
        for (k, p) in prior.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let s = sig[k];
            *p = if u[k] == 0 { 1.0 } else { -1.0 } * (0.5 * s * s) + s * z;
        }
        for (i, c) in ch.iter_mut().enumerate() {
            *c = if observed[i] {
                let z: f64 = StandardNormal.sample(&mut rng);
                let bit = ((i & jcol).count_ones() & 1) as u8 ^ u8::from(neg);
                let sign = if bit == 0 { 1.0 } else { -1.0 };
                sign * (0.5 * sigma_ch * sigma_ch) + sigma_ch * z
            } else {
                0.0
            };
        }
        dec.decode_ext_into(&prior, &ch, &mut app, &mut ext);
        for k in 0..d {
            let signed = if u[k] == 0 { ext[k] } else { -ext[k] };
            acc[k] += log2_1p_exp_neg(signed);
        }
    }
    acc
}

fn chunk_sizes(w: usize) -> Vec<usize> {
    (0..w.div_ceil(MC_CHUNK)).map(|c| MC_CHUNK.min(w - c * MC_CHUNK)).collect()
}

fn finish(acc: Vec<f64>, w: usize) -> Vec<f64> {
    acc.into_iter().map(|s| (1.0 - s / w as f64).clamp(0.0, 1.0)).collect()
}

/// Monte-Carlo estimate of the extrinsic MI of the `r + 2` information bits
/// of one Hadamard check, given their a-priori MI `i_ah_row` and the channel
/// LLR standard deviation `sigma_ch`. `n_h` channel positions `2^(k-1)`
/// (highest `k` first) are punctured for odd `r`. Deterministic per seed.
pub fn hadamard_mi_mc(
    i_ah_row: &[f64],
    sigma_ch: f64,
    order: HadamardOrder,
    n_h: usize,
    w: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_mc_args(i_ah_row, order, w)?;
    let mut acc = vec![0.0; order.info_len()];
    for (c, &count) in chunk_sizes(w).iter().enumerate() {
        for (a, x) in acc.iter_mut().zip(mc_chunk(i_ah_row, sigma_ch, order, n_h, count, seed, c)) {
            *a += x;
        }
    }
    Ok(finish(acc, w))
}

fn check_mc_args(i_ah_row: &[f64], order: HadamardOrder, w: usize) -> Result<()> {
    if i_ah_row.len() != order.info_len() {
        return Err(Error::Shape(format!(
            "{} a-priori values for r = {}",
            i_ah_row.len(),
            order.r()
        )));
    }
    if w == 0 {
        return Err(Error::Parameter("at least one Monte-Carlo sample is needed".into()));
    }
    Ok(())
}

/// Parameters of one convergence run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PexitConfig {
    pub max_iters: usize,
    pub samples: usize,
    pub seed: u64,
    /// Convergence is declared when every `I_app(j) >= 1 - epsilon`.
    pub epsilon: f64,
}

impl Default for PexitConfig {
    fn default() -> Self {
        PexitConfig { max_iters: 300, samples: 10_000, seed: 0, epsilon: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PexitRun {
    pub converged: bool,
    pub iterations: usize,
    /// `min_j I_app(j)` after each iteration.
    pub trace: Vec<f64>,
    pub state: MiState,
}

/// Iterates the analysis at one Eb/N0 until every column's a-posteriori MI
/// reaches `1 - epsilon` or `max_iters` is spent.
///
/// The Monte-Carlo seed of check row `i` depends only on `(cfg.seed, i)`,
/// so every iteration and every Eb/N0 reuses the same random numbers.
/// Check updates are memoized on their exact inputs.
pub fn pexit_converges<E: Executor>(
    b: &Protomatrix,
    ebn0_db: f64,
    punct: &PunctureSpec,
    cfg: &PexitConfig,
    exec: &E,
) -> Result<PexitRun> {
    let order = b.hadamard_order()?;
    let rate = code_rate(b, punct)?.to_f64();
    if cfg.max_iters == 0 {
        return Err(Error::Parameter("max_iters must be at least 1".into()));
    }
    let sigma = sigma_lch(rate, ebn0_db);
    let (m, n, d) = (b.m(), b.n(), order.info_len());
    let n_h = punct.d1h_per_hcn();
    let chunks = chunk_sizes(cfg.samples);
    let row_seeds: Vec<u64> = (0..m).map(|i| derive_seed(cfg.seed, i as u64)).collect();
    let mut cache: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    let mut state = MiState {
        i_av: MiMatrix::zeros(m, n),
        i_ev: MiMatrix::zeros(m, n),
        i_ah: MiMatrix::zeros(m, d),
        i_eh: MiMatrix::zeros(m, d),
        i_app: vec![0.0; n],
    };
    let mut trace = Vec::new();
    check_mc_args(&vec![0.0; d], order, cfg.samples)?;
    for it in 1..=cfg.max_iters {
        state.i_ev = vn_update(b, &state.i_av, sigma, punct);
        state.i_ah = expand_to_ah(b, &state.i_ev)?;
        let keys: Vec<Vec<u64>> = (0..m)
            .map(|i| state.i_ah.row(i).iter().map(|x| x.to_bits()).collect())
            .collect();
        let todo: Vec<usize> = (0..m).filter(|&i| !cache.contains_key(&keys[i])).collect();
        let tasks: Vec<(usize, usize)> = todo.iter().flat_map(|&i| (0..chunks.len()).map(move |c| (i, c))).collect();
        let i_ah = &state.i_ah;
        let partial = exec.map(tasks.len(), |t| {
            let (i, c) = tasks[t];
            mc_chunk(i_ah.row(i), sigma, order, n_h, chunks[c], row_seeds[i], c)
        });
        for (slot, &i) in todo.iter().enumerate() {
            let mut acc = vec![0.0; d];
            for p in &partial[slot * chunks.len()..(slot + 1) * chunks.len()] {
                for (a, x) in acc.iter_mut().zip(p) {
                    *a += x;
                }
            }
            cache.insert(keys[i].clone(), finish(acc, cfg.samples));
        }
        for i in 0..m {
            state.i_eh.row_mut(i).copy_from_slice(&cache[&keys[i]]);
        }
        state.i_av = contract_to_av(b, &state.i_eh);
        state.i_app = i_app(b, &state.i_av, sigma, punct);
        let min = state.i_app.iter().copied().fold(f64::INFINITY, f64::min);
        trace.push(min);
        if min >= 1.0 - cfg.epsilon {
            return Ok(PexitRun { converged: true, iterations: it, trace, state });
        }
    }
    Ok(PexitRun { converged: false, iterations: cfg.max_iters, trace, state })
}

/// Descending threshold search over an Eb/N0 grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdQuery {
    pub b: Protomatrix,
    pub punct: PunctureSpec,
    pub start_db: f64,
    pub floor_db: f64,
    pub step_db: f64,
    pub cfg: PexitConfig,
}

impl ThresholdQuery {
    pub fn new(b: Protomatrix, punct: PunctureSpec, cfg: PexitConfig) -> Self {
        ThresholdQuery { b, punct, start_db: -1.40, floor_db: -1.59, step_db: 0.01, cfg }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub ebn0_db: f64,
    pub converged: bool,
    pub iterations: usize,
    pub min_i_app: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub steps: Vec<StepRecord>,
    /// Lowest converging Eb/N0 on the grid; `None` when the start point
    /// itself does not converge (or lies at or below the floor).
    pub threshold_db: Option<f64>,
}

/// Steps down from `start_db` by `step_db` while the analysis converges and
/// the point is above `floor_db`; the threshold is the last converging point.
pub fn threshold_search<E: Executor>(q: &ThresholdQuery, exec: &E) -> Result<ThresholdReport> {
    if !(q.step_db > 0.0) {
        return Err(Error::Parameter("step_db must be positive".into()));
    }
    if q.floor_db < -1.59 - 1e-9 {
        return Err(Error::Parameter(format!("floor {} dB is below -1.59 dB", q.floor_db)));
    }
    let mut steps = Vec::new();
    let mut threshold = None;
    for k in 0u32.. {
        // Grid points are rounded to 1e-6 dB so accumulated steps stay exact.
        let e = libm::round((q.start_db - f64::from(k) * q.step_db) * 1e6) / 1e6;
        if e <= q.floor_db + 1e-9 {
            break;
        }
        let run = pexit_converges(&q.b, e, &q.punct, &q.cfg, exec)?;
        steps.push(StepRecord {
            ebn0_db: e,
            converged: run.converged,
            iterations: run.iterations,
            min_i_app: run.trace.last().copied().unwrap_or(0.0),
        });
        if !run.converged {
            break;
        }
        threshold = Some(e);
    }
    Ok(ThresholdReport { steps, threshold_db: threshold })
}

/// Draws a protomatrix meeting `c` (uniform row weight, column-weight band,
/// entry cap). Fails after a bounded number of attempts.
pub fn random_protomatrix(c: &Constraints, seed: u64) -> Result<Protomatrix> {
    let (m, n, d) = (c.m, c.n, c.row_weight);
    let cap = c.max_entry as usize;
    if m == 0 || n == 0 {
        return Err(Error::Infeasible("protomatrix dimensions must be positive".into()));
    }
    if d > n * cap || c.min_col_weight > m * cap || c.min_col_weight > c.max_col_weight
        || m * d < n * c.min_col_weight || m * d > n * c.max_col_weight
    {
        return Err(Error::Infeasible(format!(
            "{m}x{n}, row weight {d}, column weight {}..={}, entries <= {} cannot be met",
            c.min_col_weight, c.max_col_weight, c.max_entry
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        if let Some(b) = attempt(c, &mut rng) {
            if validate(&b, c).is_ok() {
                return Ok(b);
            }
        }
    }
    Err(Error::Infeasible("no protomatrix found within the attempt budget".into()))
}

fn attempt(c: &Constraints, rng: &mut ChaCha8Rng) -> Option<Protomatrix> {
    let (m, n, d) = (c.m, c.n, c.row_weight);
    let cap = c.max_entry;
    let mut e = vec![0u32; m * n];
    let mut row_w = vec![0usize; m];
    let mut col_w = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        cols.swap(k, rng.random_range(0..=k));
    }
    for &j in &cols {
        while col_w[j] < c.min_col_weight {
            let rows: Vec<usize> = (0..m).filter(|&i| row_w[i] < d && e[i * n + j] < cap).collect();
            if rows.is_empty() {
                return None;
            }
            let i = rows[rng.random_range(0..rows.len())];
            e[i * n + j] += 1;
            row_w[i] += 1;
            col_w[j] += 1;
        }
    }
    for i in 0..m {
        while row_w[i] < d {
            let open: Vec<usize> = (0..n).filter(|&j| col_w[j] < c.max_col_weight && e[i * n + j] < cap).collect();
            if open.is_empty() {
                return None;
            }
            let j = open[rng.random_range(0..open.len())];
            e[i * n + j] += 1;
            row_w[i] += 1;
            col_w[j] += 1;
        }
    }
    Protomatrix::new(m, n, e).ok()
}

/// Outcome of a random-restart search.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    /// Threshold of each candidate in generation order (`None`: above start).
    pub thresholds: Vec<Option<f64>>,
    pub best: Option<(Protomatrix, f64)>,
}

/// Random restart: evaluates `budget` random candidates and keeps the one
/// with the lowest threshold (earliest wins ties). `on_best` sees every new
/// best candidate as soon as it is found.
pub fn search<E: Executor>(
    c: &Constraints,
    budget: usize,
    seed: u64,
    template: &ThresholdQuery,
    exec: &E,
    mut on_best: impl FnMut(&Protomatrix, f64),
) -> Result<SearchReport> {
    let mut report = SearchReport { thresholds: Vec::new(), best: None };
    for k in 0..budget {
        let b = random_protomatrix(c, derive_seed(seed, k as u64))?;
        let q = ThresholdQuery { b: b.clone(), ..template.clone() };
        let t = threshold_search(&q, exec)?.threshold_db;
        report.thresholds.push(t);
        if let Some(t) = t {
            if report.best.as_ref().is_none_or(|(_, bt)| t < *bt) {
                on_best(&b, t);
                report.best = Some((b, t));
            }
        }
    }
    Ok(report)
}
