//! AWGN Monte-Carlo harness: all-zero BPSK frames, frame-error-driven
//! stopping and BER/FER/iteration statistics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decoder::{decode, ChannelLlrs, DecoderConfig, TannerGraph};
use crate::error::{Error, Result};
use crate::hadamard::{clamp_llr, Parity};
use crate::lifting::QcCode;
use crate::par::Executor;
use crate::protograph::{rate_for, CodeRate, PunctureSpec};

/// One operating point of the channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelPoint {
    pub ebn0_db: f64,
    /// Noise standard deviation for unit-energy BPSK.
    pub sigma_ch: f64,
}

impl ChannelPoint {
    /// `sigma_ch^2 = 1 / (2 R 10^(Eb/N0 / 10))`.
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) || !ebn0_db.is_finite() {
            return Err(Error::Parameter(format!("bad channel point: rate {rate}, {ebn0_db} dB")));
        }
        let sigma_ch = libm::sqrt(1.0 / (2.0 * rate * libm::pow(10.0, ebn0_db / 10.0)));
        Ok(ChannelPoint { ebn0_db, sigma_ch })
    }
}

/// Integer tallies; merging is fieldwise addition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SimStats {
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub iterations_total: u64,
    /// Frames reported converged whose hard decisions nevertheless violate
    /// some check, found by an independent recount on the code.
    pub spc_violations: u64,
}

impl SimStats {
    pub fn merge(&mut self, o: &SimStats) {
        self.frames += o.frames;
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.iterations_total += o.iterations_total;
        self.spc_violations += o.spc_violations;
    }

    pub fn ber(&self, k: u64) -> f64 {
        if self.frames == 0 || k == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.frames as f64 * k as f64)
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.frame_errors as f64 / self.frames as f64
    }

    pub fn avg_iters(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.iterations_total as f64 / self.frames as f64
    }
}

/// A lifted code prepared for simulation.
#[derive(Clone, Debug)]
pub struct SimCode {
    code: QcCode,
    graph: TannerGraph,
    punct: PunctureSpec,
    rate: CodeRate,
    /// Punctured codeword positions among the degree-1 nodes of a check.
    d1h_mask: Vec<bool>,
}

impl SimCode {
    pub fn new(code: QcCode, punct: PunctureSpec) -> Result<Self> {
        let order = code.order()?;
        let rate = rate_for(order, code.m(), code.n(), &punct)?;
        let graph = TannerGraph::new(&code)?;
        let dropped = match order.parity() {
            Parity::Odd => order.punctured_positions(punct.d1h_per_hcn()),
            Parity::Even => Vec::new(),
        };
        let d1h_mask = graph.d1h_positions().iter().map(|p| dropped.contains(p)).collect();
        Ok(SimCode { code, graph, punct, rate, d1h_mask })
    }

    pub fn code(&self) -> &QcCode {
        &self.code
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn rate(&self) -> CodeRate {
        self.rate
    }

    /// Information bits per frame, `z1 z2 (n - m)`; they are the first `k`
    /// protograph variables.
    pub fn k(&self) -> usize {
        self.code.z1() * self.code.z2() * (self.code.n() - self.code.m())
    }

    pub fn point(&self, ebn0_db: f64) -> Result<ChannelPoint> {
        ChannelPoint::new(ebn0_db, self.rate.to_f64())
    }
}

/// Channel LLRs `2y / sigma^2` of the all-zero codeword, `y ~ N(+1, sigma^2)`,
/// for frame `frame` of the stream keyed by `seed`. Punctured positions are 0.
pub fn transmit_all_zero(sc: &SimCode, point: &ChannelPoint, seed: u64, frame: u64) -> ChannelLlrs {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    let s = point.sigma_ch;
    let draw = |rng: &mut ChaCha8Rng| {
        let z: f64 = StandardNormal.sample(rng);
        clamp_llr(2.0 * (1.0 + s * z) / (s * s))
    };
    let z = sc.code.z1() * sc.code.z2();
    let pvn = (0..sc.graph.num_vars())
        .map(|v| if sc.punct.is_column_punctured(v / z) { 0.0 } else { draw(&mut rng) })
        .collect();
    let nd = sc.graph.d1h_per_check();
    let mut d1h = vec![0.0; sc.graph.num_checks() * nd];
    for (i, l) in d1h.iter_mut().enumerate() {
        if !sc.d1h_mask[i % nd] {
            *l = draw(&mut rng);
        }
    }
    ChannelLlrs { pvn, d1h }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub max_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_frame_errors: 100, max_frames: 10_000_000 }
    }
}

/// Frames decoded per dispatch to the executor.
const BATCH: u64 = 32;

fn one_frame(sc: &SimCode, point: &ChannelPoint, cfg: &DecoderConfig, seed: u64, frame: u64) -> Result<SimStats> {
    let ch = transmit_all_zero(sc, point, seed, frame);
    let out = decode(&sc.graph, &ch, cfg)?;
    let bit_errors = out.hard_bits[..sc.k()].iter().filter(|&&b| b != 0).count() as u64;
    let violation = out.converged && !sc.code.checks_satisfied(&out.hard_bits);
    Ok(SimStats {
        frames: 1,
        bit_errors,
        frame_errors: u64::from(bit_errors > 0 || !out.converged),
        iterations_total: out.iterations as u64,
        spc_violations: u64::from(violation),
    })
}

/// Tallies frames `frames.start .. frames.end` without early stopping; shards
/// over disjoint ranges merge to the single-range result.
pub fn run_range<E: Executor>(
    sc: &SimCode,
    point: &ChannelPoint,
    cfg: &DecoderConfig,
    frames: core::ops::Range<u64>,
    seed: u64,
    exec: &E,
) -> Result<SimStats> {
    let mut total = SimStats::default();
    for s in exec.map((frames.end - frames.start) as usize, |i| one_frame(sc, point, cfg, seed, frames.start + i as u64)) {
        total.merge(&s?);
    }
    Ok(total)
}

/// Simulates frames `0, 1, 2, ...` until `stop` triggers. Frames are decoded
/// in batches but tallied in index order, so the result does not depend on
/// the executor.
pub fn run_point<E: Executor>(
    sc: &SimCode,
    point: &ChannelPoint,
    cfg: &DecoderConfig,
    stop: &StopRule,
    seed: u64,
    exec: &E,
) -> Result<SimStats> {
    let mut total = SimStats::default();
    let mut next = 0u64;
    while total.frames < stop.max_frames && total.frame_errors < stop.max_frame_errors {
        let n = BATCH.min(stop.max_frames - next);
        let batch = exec.map(n as usize, |i| one_frame(sc, point, cfg, seed, next + i as u64));
        for s in batch {
            total.merge(&s?);
            if total.frame_errors >= stop.max_frame_errors {
                break;
            }
        }
        next += n;
    }
    Ok(total)
}

pub const RESULTS_HEADER: &str = "ebn0_db,frames,ber,fer,avg_iters";

/// CSV results, one row per point sorted by Eb/N0.
pub fn emit_results(points: &[(f64, SimStats)], k: u64) -> String {
    let mut rows: Vec<&(f64, SimStats)> = points.iter().collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for (db, s) in rows {
        let _ = writeln!(out, "{db},{},{:e},{:e},{}", s.frames, s.ber(k), s.fer(), s.avg_iters());
    }
    out
}
