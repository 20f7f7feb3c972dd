//! Trustingness/trustworthiness propagation with per-iteration sum
//! normalization, final log min-max rescaling, and believability edge
//! scores.
//!
//! Each sweep recomputes, for every node, the trustingness from its
//! out-edges and the trustworthiness from its in-edges, damped by the
//! partner's score raised to the involvement exponent. Sweeps are
//! synchronous: iteration `k+1` reads only iteration-`k` scores, so the
//! result is independent of node order.

use std::io::Write;

use crate::graph::{DirectedGraph, NodeId};
use crate::util::fmt_f64;
use crate::{Error, Result};

/// Parameters of the trust propagation.
#[derive(Debug, Clone, Copy)]
pub struct TsmParams {
    /// Involvement exponent `s`; the risk an actor takes when creating a
    /// link. Applied as `1 + tw(x)^s` in the update denominators.
    pub involvement: f64,
    pub max_iterations: u32,
    /// Stop when `max_v |dti(v)| + |dtw(v)|` falls below this.
    pub convergence_epsilon: f64,
    /// Lower end of the normalized score range; also the relative clamp
    /// applied to zero raw scores before the logarithm.
    pub log_floor: f64,
}

impl Default for TsmParams {
    fn default() -> Self {
        Self {
            involvement: 1.0,
            max_iterations: 100,
            convergence_epsilon: 1e-6,
            log_floor: 1e-6,
        }
    }
}

impl TsmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.involvement >= 0.0 && self.involvement.is_finite()) {
            return Err(Error::InvalidParams {
                message: format!("involvement must be finite and >= 0, got {}", self.involvement),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams {
                message: "max_iterations must be >= 1".into(),
            });
        }
        if !(self.convergence_epsilon > 0.0) {
            return Err(Error::InvalidParams {
                message: "convergence_epsilon must be > 0".into(),
            });
        }
        if !(self.log_floor > 0.0 && self.log_floor < 1.0) {
            return Err(Error::InvalidParams {
                message: "log_floor must be in (0, 1)".into(),
            });
        }
        Ok(())
    }
}

/// Raw propagation output, sum-normalized per iteration. Both vectors sum
/// to 1 whenever their raw sums were positive (i.e. the graph has edges).
#[derive(Debug, Clone)]
pub struct RawTrustScores {
    pub ti: Vec<f64>,
    pub tw: Vec<f64>,
    pub iterations_run: u32,
    pub converged: bool,
}

/// Final scores rescaled into `[log_floor, 1]`; the per-vector maximum
/// maps to exactly 1.
#[derive(Debug, Clone)]
pub struct TrustScores {
    ti: Vec<f64>,
    tw: Vec<f64>,
}

impl TrustScores {
    /// Construct from explicit vectors; every entry must lie in (0, 1].
    pub fn new(ti: Vec<f64>, tw: Vec<f64>) -> Result<Self> {
        if ti.len() != tw.len() {
            return Err(Error::InconsistentUniverse {
                message: format!("ti has {} entries, tw has {}", ti.len(), tw.len()),
            });
        }
        for &x in ti.iter().chain(tw.iter()) {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::ScoreOutOfRange { value: x });
            }
        }
        Ok(Self { ti, tw })
    }

    pub fn len(&self) -> usize {
        self.ti.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ti.is_empty()
    }

    pub fn ti(&self, v: NodeId) -> f64 {
        self.ti[v as usize]
    }

    pub fn tw(&self, v: NodeId) -> f64 {
        self.tw[v as usize]
    }

    pub fn ti_slice(&self) -> &[f64] {
        &self.ti
    }

    pub fn tw_slice(&self) -> &[f64] {
        &self.tw
    }

    /// Dump `node_id,ti,tw` rows with 17-significant-digit values.
    pub fn write_csv<W: Write>(&self, g: &DirectedGraph, mut out: W) -> Result<()> {
        writeln!(out, "node_id,ti,tw")?;
        for v in g.nodes() {
            writeln!(
                out,
                "{},{},{}",
                g.external_id(v),
                fmt_f64(self.ti(v)),
                fmt_f64(self.tw(v))
            )?;
        }
        Ok(())
    }
}

/// Run the synchronous trust propagation until convergence or
/// `max_iterations`. Scores start uniform at `1/n`.
pub fn compute_tsm(g: &DirectedGraph, p: &TsmParams) -> Result<RawTrustScores> {
    p.validate()?;
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let s = p.involvement;
    let init = 1.0 / n as f64;
    let mut ti = vec![init; n];
    let mut tw = vec![init; n];
    let mut new_ti = vec![0.0; n];
    let mut new_tw = vec![0.0; n];
    let mut iterations_run = 0;
    let mut converged = false;

    for _ in 0..p.max_iterations {
        iterations_run += 1;
        for v in 0..n {
            let mut acc_ti = 0.0;
            for &(x, w) in g.out(v as NodeId) {
                acc_ti += w / (1.0 + tw[x as usize].powf(s));
            }
            new_ti[v] = acc_ti;
            let mut acc_tw = 0.0;
            for &(x, w) in g.incoming(v as NodeId) {
                acc_tw += w / (1.0 + ti[x as usize].powf(s));
            }
            new_tw[v] = acc_tw;
        }
        let ti_sum: f64 = new_ti.iter().sum();
        let tw_sum: f64 = new_tw.iter().sum();
        if ti_sum == 0.0 && tw_sum == 0.0 {
            // edgeless graph: zero is a fixed point of every later sweep
            ti.fill(0.0);
            tw.fill(0.0);
            converged = true;
            break;
        }
        if ti_sum > 0.0 {
            for x in new_ti.iter_mut() {
                *x /= ti_sum;
            }
        }
        if tw_sum > 0.0 {
            for x in new_tw.iter_mut() {
                *x /= tw_sum;
            }
        }
        let mut delta: f64 = 0.0;
        for v in 0..n {
            delta = delta.max((new_ti[v] - ti[v]).abs() + (new_tw[v] - tw[v]).abs());
        }
        std::mem::swap(&mut ti, &mut new_ti);
        std::mem::swap(&mut tw, &mut new_tw);
        if delta < p.convergence_epsilon {
            converged = true;
            break;
        }
    }

    Ok(RawTrustScores {
        ti,
        tw,
        iterations_run,
        converged,
    })
}

/// Log min-max rescaling of one raw vector into `[log_floor, 1]`.
///
/// Zero entries are clamped to `log_floor * min_positive` before the
/// logarithm. A degenerate vector (max == min, including all-zero) maps
/// every entry to 1.
fn normalize_vector(raw: &[f64], log_floor: f64) -> Vec<f64> {
    let min_positive = raw
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min_positive.is_finite() {
        return vec![1.0; raw.len()];
    }
    let clamp = log_floor * min_positive;
    let clamped: Vec<f64> = raw.iter().map(|&x| if x == 0.0 { clamp } else { x }).collect();
    let min = clamped.iter().copied().fold(f64::INFINITY, f64::min);
    let max = clamped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![1.0; raw.len()];
    }
    let (ln_min, ln_max) = (min.ln(), max.ln());
    clamped
        .iter()
        .map(|&x| {
            let y = (x.ln() - ln_min) / (ln_max - ln_min);
            log_floor + y * (1.0 - log_floor)
        })
        .collect()
}

/// Rescale raw scores into strictly positive `(0, 1]` values.
pub fn normalize_scores(r: &RawTrustScores, p: &TsmParams) -> TrustScores {
    TrustScores {
        ti: normalize_vector(&r.ti, p.log_floor),
        tw: normalize_vector(&r.tw, p.log_floor),
    }
}

/// Believability of the follower edge `u -> v`: `tw(v) * ti(u)`. Both
/// factors lie in (0, 1], so the product does too.
pub fn believability(ts: &TrustScores, u: NodeId, v: NodeId) -> f64 {
    ts.tw(v) * ts.ti(u)
}

/// Believability with an edge-existence check: errors unless `u -> v` is
/// an edge of `g`.
pub fn believability_on_edge(
    g: &DirectedGraph,
    ts: &TrustScores,
    u: NodeId,
    v: NodeId,
) -> Result<f64> {
    if g.edge_weight(u, v).is_none() {
        return Err(Error::MissingEdge { src: u, dst: v });
    }
    Ok(believability(ts, u, v))
}
