//! Flooding decoder over the lifted graph: repeat (variable) updates at the
//! protograph variables and symbol-MAP updates at the Hadamard checks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hadamard::{clamp_llr, HadamardDecoder, HadamardOrder};
use crate::lifting::QcCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecoderConfig {
    pub max_iters: usize,
    /// Stop as soon as every check's hard decisions form an SPC codeword.
    pub early_stop: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { max_iters: 300, early_stop: true }
    }
}

/// Channel LLRs of one frame: one per protograph variable node and, per
/// check, one per degree-1 Hadamard variable in ascending codeword position.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelLlrs {
    pub pvn: Vec<f64>,
    pub d1h: Vec<f64>,
}

/// Edge messages, indexed `check * d + slot`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMessages {
    pub v2c: Vec<f64>,
    pub c2v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub hard_bits: Vec<u8>,
    pub iterations: usize,
    pub converged: bool,
}

/// Connectivity of a lifted code in the layout the decoder iterates over.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    order: HadamardOrder,
    d: usize,
    checks: usize,
    vars: usize,
    /// Variable on each edge.
    edge_var: Vec<u32>,
    /// Edges of each variable (CSR).
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
    channel_pos: Vec<usize>,
}

impl TannerGraph {
    pub fn new(code: &QcCode) -> Result<Self> {
        let order = code.order()?;
        let (d, checks, vars) = (code.row_weight(), code.num_checks(), code.num_vars());
        if u32::try_from(checks * d).is_err() {
            return Err(Error::Parameter(format!("{} edges exceed the supported size", checks * d)));
        }
        let edge_var: Vec<u32> = (0..checks)
            .flat_map(|c| (0..d).map(move |k| (c, k)))
            .map(|(c, k)| code.var_of(c, k) as u32)
            .collect();
        let mut var_ptr = vec![0usize; vars + 1];
        for &v in &edge_var {
            var_ptr[v as usize + 1] += 1;
        }
        for v in 0..vars {
            var_ptr[v + 1] += var_ptr[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Ok(TannerGraph { order, d, checks, vars, edge_var, var_ptr, var_edges, channel_pos: order.channel_positions() })
    }

    pub fn order(&self) -> HadamardOrder {
        self.order
    }

    pub fn num_checks(&self) -> usize {
        self.checks
    }

    pub fn num_vars(&self) -> usize {
        self.vars
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Degree-1 Hadamard variables per check.
    pub fn d1h_per_check(&self) -> usize {
        self.channel_pos.len()
    }

    /// Codeword positions of the degree-1 Hadamard variables of a check.
    pub fn d1h_positions(&self) -> &[usize] {
        &self.channel_pos
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e] as usize
    }

    pub fn var_edges(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]].iter().map(|&e| e as usize)
    }

    fn check_shapes(&self, ch: &ChannelLlrs) -> Result<()> {
        if ch.pvn.len() != self.vars || ch.d1h.len() != self.checks * self.d1h_per_check() {
            return Err(Error::Shape(format!(
                "channel LLRs ({}, {}) do not match the code ({}, {})",
                ch.pvn.len(),
                ch.d1h.len(),
                self.vars,
                self.checks * self.d1h_per_check()
            )));
        }
        Ok(())
    }

    /// True if every check's hard decisions XOR to zero.
    pub fn spc_satisfied(&self, bits: &[u8]) -> bool {
        self.edge_var
            .chunks_exact(self.d)
            .all(|vs| vs.iter().fold(0u8, |a, &v| a ^ bits[v as usize]) == 0)
    }
}

/// Repeat-node update. `v2c[e]` is the channel LLR plus every other
/// incoming check message; `app[v]` sums them all.
pub fn vn_pass(g: &TannerGraph, channel_pvn: &[f64], c2v: &[f64], v2c: &mut [f64], app: &mut [f64]) {
    for v in 0..g.vars {
        let total = g.var_edges(v).fold(channel_pvn[v], |s, e| s + c2v[e]);
        app[v] = total;
        for e in g.var_edges(v) {
            v2c[e] = total - c2v[e];
        }
    }
}

/// Hadamard check update: per check, symbol-MAP decoding with a-priori
/// `v2c` (clamped) and its degree-1 channel observations; `c2v` gets the
/// extrinsic LLRs.
pub fn cn_pass(g: &TannerGraph, v2c: &[f64], d1h: &[f64], c2v: &mut [f64]) -> Result<()> {
    if v2c.len() != g.num_edges() || c2v.len() != g.num_edges() || d1h.len() != g.checks * g.d1h_per_check() {
        return Err(Error::Shape("message or channel layout does not match the graph".into()));
    }
    let (d, q, nd) = (g.d, g.order.q(), g.d1h_per_check());
    let mut dec = HadamardDecoder::new(g.order);
    let mut ch = vec![0.0; q];
    let mut app = vec![0.0; d];
    for c in 0..g.checks {
        for (&p, &l) in g.channel_pos.iter().zip(&d1h[c * nd..(c + 1) * nd]) {
            ch[p] = l;
        }
        let prior = &v2c[c * d..(c + 1) * d];
        dec.decode_ext_into(prior, &ch, &mut app, &mut c2v[c * d..(c + 1) * d]);
    }
    Ok(())
}

/// Hard decision with ties going to bit 0.
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Iterative decoding of one frame with the flooding schedule.
pub fn decode(g: &TannerGraph, ch: &ChannelLlrs, cfg: &DecoderConfig) -> Result<DecodeOutcome> {
    g.check_shapes(ch)?;
    if cfg.max_iters == 0 {
        return Err(Error::Parameter("max_iters must be at least 1".into()));
    }
    let mut msg = EdgeMessages { v2c: vec![0.0; g.num_edges()], c2v: vec![0.0; g.num_edges()] };
    let mut app = vec![0.0; g.vars];
    let mut bits = vec![0u8; g.vars];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        iterations = it;
        vn_pass(g, &ch.pvn, &msg.c2v, &mut msg.v2c, &mut app);
        for x in msg.v2c.iter_mut() {
            *x = clamp_llr(*x);
        }
        cn_pass(g, &msg.v2c, &ch.d1h, &mut msg.c2v)?;
        for (v, b) in bits.iter_mut().enumerate() {
            let a = g.var_edges(v).fold(ch.pvn[v], |s, e| s + msg.c2v[e]);
            *b = hard_decision(a);
        }
        converged = g.spc_satisfied(&bits);
        if converged && cfg.early_stop {
            break;
        }
    }
    Ok(DecodeOutcome { hard_bits: bits, iterations, converged })
}
