//! Annealer access: the access-time model, schedule planning, the sampler
//! wire protocol and a local mock sampler.
//!
//! Access time for `p` programmings and `r` anneal-read cycles is
//! `p * t_prog + r * (t_anneal + t_read)`.

mod client;
mod endpoint;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use client::{sample_embedded, sample_remote, EmbeddedSamples, PhysicalSource, QpuSolver};
pub use endpoint::{
    endpoint_from_env, mock_qpu, HttpEndpoint, MockEndpoint, MockParams, SampleRequest, SampleResponse,
    SamplerEndpoint, Timing, ENDPOINT_ENV,
};

/// Relative slack for comparing planned access times against limits.
const TIME_TOLERANCE: f64 = 1e-9;

/// Chain-strength multipliers cycled across programmings, starting at 1.
pub const CHAIN_STRENGTH_LADDER: [f64; 7] = [1.0, 1.25, 1.5, 1.75, 2.0, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccessTimeModel {
    /// Seconds per programming.
    pub t_prog: f64,
    /// Seconds per anneal.
    pub t_anneal: f64,
    /// Seconds per readout.
    pub t_read: f64,
    /// Admissible anneal times, seconds.
    pub anneal_bounds: (f64, f64),
}

impl Default for AccessTimeModel {
    fn default() -> Self {
        AccessTimeModel {
            t_prog: 0.016,
            t_anneal: 0.000240,
            t_read: 0.000241,
            anneal_bounds: (0.0000005, 0.002),
        }
    }
}

impl AccessTimeModel {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.anneal_bounds;
        if !(self.t_prog > 0.0 && self.t_read > 0.0 && lo > 0.0 && lo <= hi) {
            return Err(Error::Param("access times must be positive".into()));
        }
        if !(lo..=hi).contains(&self.t_anneal) {
            return Err(Error::Param(format!(
                "anneal time {} s outside [{lo}, {hi}]",
                self.t_anneal
            )));
        }
        Ok(())
    }

    /// Reads per programming that make the reads take as long as the
    /// programming itself.
    pub fn block_reads(&self) -> usize {
        ((self.t_prog / (self.t_anneal + self.t_read)) * (1.0 + TIME_TOLERANCE))
            .floor()
            .max(1.0) as usize
    }
}

/// What changes between programmings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Modifier {
    None,
    /// Spin-reversal mask over physical variable indices.
    Srt {
        mask: Vec<usize>,
    },
    ChainStrength {
        multiplier: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub programmings: usize,
    pub reads: usize,
    /// Seconds.
    pub t_anneal: f64,
    /// One per programming, or empty until assigned.
    #[serde(default)]
    pub modifiers: Vec<Modifier>,
}

impl AnnealSchedule {
    pub fn new(programmings: usize, reads: usize, t_anneal: f64) -> Self {
        AnnealSchedule {
            programmings,
            reads,
            t_anneal,
            modifiers: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.programmings == 0 {
            return Err(Error::Param("a schedule needs at least one programming".into()));
        }
        if self.reads < self.programmings {
            return Err(Error::Param(format!(
                "{} reads cannot cover {} programmings",
                self.reads, self.programmings
            )));
        }
        if !self.modifiers.is_empty() && self.modifiers.len() != self.programmings {
            return Err(Error::Param("one modifier per programming".into()));
        }
        Ok(())
    }

    /// Reads in programming `k`; the remainder goes to the first blocks.
    pub fn block_reads(&self, k: usize) -> usize {
        let base = self.reads / self.programmings;
        base + usize::from(k < self.reads % self.programmings)
    }
}

/// Access time in seconds for `sched` under `model`.
pub fn access_time(sched: &AnnealSchedule, model: &AccessTimeModel) -> Result<f64> {
    sched.validate()?;
    Ok(sched.programmings as f64 * model.t_prog + sched.reads as f64 * (sched.t_anneal + model.t_read))
}

fn fits(t_used: f64, t: f64) -> bool {
    t_used <= t * (1.0 + TIME_TOLERANCE)
}

fn reads_within(avail: f64, per_read: f64) -> usize {
    if avail <= 0.0 {
        0
    } else {
        (avail / per_read * (1.0 + TIME_TOLERANCE)).floor() as usize
    }
}

/// Plans `r >= s` reads within `t` seconds. Blocks of one programming and
/// [`AccessTimeModel::block_reads`] reads are repeated to fill `t`; if that
/// yields too few reads, programmings are dropped in favor of reads, and as
/// a last resort the anneal time is shortened.
pub fn plan_schedule(s: usize, t: f64, model: &AccessTimeModel) -> Result<AnnealSchedule> {
    model.validate()?;
    if s == 0 || !(t > 0.0) {
        return Err(Error::Param(format!("cannot plan s = {s}, t = {t}")));
    }
    let per_read = model.t_anneal + model.t_read;
    let r0 = model.block_reads();
    let block = model.t_prog + r0 as f64 * per_read;
    let blocks = (t / block * (1.0 + TIME_TOLERANCE)).floor() as usize;
    if blocks >= 1 && blocks * r0 >= s {
        let spare = t - blocks as f64 * block;
        let reads = blocks * r0 + reads_within(spare, per_read);
        return Ok(AnnealSchedule::new(blocks, reads, model.t_anneal));
    }
    for p in (1..=blocks.max(1)).rev() {
        let reads = reads_within(t - p as f64 * model.t_prog, per_read);
        if reads >= s && reads >= p {
            return Ok(AnnealSchedule::new(p, reads, model.t_anneal));
        }
    }
    let avail = t - model.t_prog;
    if avail > 0.0 {
        let t_anneal = (avail / s as f64 - model.t_read).min(model.t_anneal);
        if t_anneal >= model.anneal_bounds.0 {
            let sched = AnnealSchedule::new(1, reads_within(avail, t_anneal + model.t_read).max(s), t_anneal);
            if fits(access_time(&sched, model)?, t) {
                return Ok(sched);
            }
        }
    }
    Err(Error::Infeasible(format!(
        "{s} reads need at least {:.6} s, limit is {t} s",
        model.t_prog + s as f64 * (model.anneal_bounds.0 + model.t_read)
    )))
}
