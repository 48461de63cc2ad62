//! Client side of the annealer: per-programming modifiers, submission and
//! read-back into the physical or logical space.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use super::{
    access_time, plan_schedule, AccessTimeModel, AnnealSchedule, Modifier, SampleRequest, SamplerEndpoint,
    CHAIN_STRENGTH_LADDER,
};
use crate::embedding::{apply_embedding, unembed, Embedding};
use crate::error::{Error, Result};
use crate::model::{Assignment, Bqm, Vartype};
use crate::seed;
use crate::solvers::{Budget, Clock, Sample, SampleSet, Solver, SolverConfig, SolverKind, Status};
use crate::topology::HardwareGraph;

/// What the annealer is programmed with.
#[derive(Clone, Copy)]
pub enum PhysicalSource<'a> {
    /// A model already on the hardware graph; programmings differ by
    /// spin-reversal masks.
    Native(&'a Bqm),
    /// Re-embedded for each programming with that programming's
    /// chain-strength multiplier.
    Embedded {
        logical: &'a Bqm,
        embedding: &'a Embedding,
        hw: &'a HardwareGraph,
    },
}

impl PhysicalSource<'_> {
    /// The physical model at unit chain strength, against which returned
    /// samples are scored.
    pub fn nominal(&self) -> Result<Bqm> {
        match *self {
            PhysicalSource::Native(m) => Ok(m.clone()),
            PhysicalSource::Embedded { logical, embedding, hw } => apply_embedding(logical, embedding, hw, 1.0),
        }
    }

    fn modifiers(&self, programmings: usize, num_variables: usize, seed: u64) -> Vec<Modifier> {
        (0..programmings)
            .map(|k| match self {
                PhysicalSource::Native(_) => {
                    let mut rng = seed::rng(seed::derive(seed, &[k as u64, 1]));
                    Modifier::Srt {
                        mask: (0..num_variables).filter(|_| rng.random::<bool>()).collect(),
                    }
                }
                PhysicalSource::Embedded { .. } => Modifier::ChainStrength {
                    multiplier: CHAIN_STRENGTH_LADDER[k % CHAIN_STRENGTH_LADDER.len()],
                },
            })
            .collect()
    }

    fn programmed(&self, nominal: &Bqm, modifier: &Modifier) -> Result<Bqm> {
        match (self, modifier) {
            (_, Modifier::None) => Ok(nominal.to_vartype(Vartype::Spin)),
            (_, Modifier::Srt { mask }) => {
                let mask: BTreeSet<usize> = mask.iter().copied().collect();
                Ok(nominal.to_vartype(Vartype::Spin).spin_reversal(&mask)?.0)
            }
            (PhysicalSource::Embedded { logical, embedding, hw }, Modifier::ChainStrength { multiplier }) => {
                Ok(apply_embedding(logical, embedding, hw, *multiplier)?.to_vartype(Vartype::Spin))
            }
            (PhysicalSource::Native(_), Modifier::ChainStrength { .. }) => {
                Err(Error::Param("chain-strength modifiers need an embedded source".into()))
            }
        }
    }
}

/// Runs `sched` on `endpoint`, one request per programming, and returns
/// every read scored on the nominal physical model. Missing modifiers are
/// filled from `seed`. Mock endpoints report the modeled access time;
/// real ones the measured round-trip time.
pub fn sample_remote(
    source: &PhysicalSource,
    sched: &AnnealSchedule,
    endpoint: &dyn SamplerEndpoint,
    access: &AccessTimeModel,
    seed: u64,
) -> Result<SampleSet> {
    sched.validate()?;
    let started = Instant::now();
    let nominal = source.nominal()?;
    let n = nominal.num_variables();
    let modifiers = if sched.modifiers.is_empty() {
        source.modifiers(sched.programmings, n, seed)
    } else {
        sched.modifiers.clone()
    };
    let mut samples = Vec::with_capacity(sched.reads);
    for (k, modifier) in modifiers.iter().enumerate() {
        let reads = sched.block_reads(k);
        let request = SampleRequest {
            bqm: source.programmed(&nominal, modifier)?,
            num_reads: reads,
            annealing_time_us: sched.t_anneal * 1e6,
            programmings: 1,
            modifiers: vec![modifier.clone()],
            seed: seed::derive(seed, &[k as u64, 0]),
        };
        let response = endpoint.submit(&request)?;
        response.validate(n, reads)?;
        for mut row in response.samples {
            if let Modifier::Srt { mask } = modifier {
                for &i in mask {
                    row[i] = -row[i];
                }
            }
            if nominal.vartype() == Vartype::Binary {
                row.iter_mut().for_each(|v| *v = (*v + 1) / 2);
            }
            let energy = nominal.energy_unchecked(&row);
            samples.push(Sample {
                values: Assignment::new(row),
                energy,
                num_occurrences: 1,
            });
        }
    }
    samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let (wall_time, clock) = if endpoint.is_mock() {
        (access_time(sched, access)?, Clock::model())
    } else {
        (started.elapsed().as_secs_f64(), Clock::Wall)
    };
    let mut set = SampleSet {
        solver: if endpoint.is_mock() { "qpu-mock" } else { "qpu" }.into(),
        vartype: nominal.vartype(),
        requested: sched.reads,
        samples,
        work: (sched.reads as f64 * sched.t_anneal * 1e9).round() as u64,
        wall_time,
        clock,
        status: Status::Complete,
        info: Default::default(),
    };
    set.info.insert("sampler".into(), endpoint.name().into());
    set.info.insert("work_unit".into(), "anneal_ns".into());
    set.info.insert("programmings".into(), sched.programmings.into());
    set.info.insert("t_anneal".into(), sched.t_anneal.into());
    Ok(set)
}

/// Reads of an embedded run in both spaces.
#[derive(Debug, Clone)]
pub struct EmbeddedSamples {
    pub physical: SampleSet,
    /// Majority-vote readouts scored on the logical model, same order as
    /// `physical`.
    pub logical: SampleSet,
    /// Broken chains over all reads divided by reads times chains.
    pub chain_break_fraction: f64,
}

/// Samples an embedded model and maps every read back to the logical space.
pub fn sample_embedded(
    logical: &Bqm,
    embedding: &Embedding,
    hw: &HardwareGraph,
    sched: &AnnealSchedule,
    endpoint: &dyn SamplerEndpoint,
    access: &AccessTimeModel,
    seed: u64,
) -> Result<EmbeddedSamples> {
    let source = PhysicalSource::Embedded { logical, embedding, hw };
    let physical = sample_remote(&source, sched, endpoint, access, seed)?;
    let mut broken = 0usize;
    let mut samples = Vec::with_capacity(physical.samples.len());
    for (k, s) in physical.samples.iter().enumerate() {
        let (values, report) = unembed(&s.values, embedding, seed::derive(seed, &[k as u64, 2]))?;
        broken += report.num_broken;
        let energy = logical.energy_unchecked(values.values());
        samples.push(Sample {
            values,
            energy,
            num_occurrences: 1,
        });
    }
    let total = physical.samples.len() * embedding.num_chains();
    let mut logical_set = physical.clone();
    logical_set.vartype = logical.vartype();
    logical_set.samples = samples;
    logical_set.samples.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(EmbeddedSamples {
        physical,
        logical: logical_set,
        chain_break_fraction: if total == 0 { 0.0 } else { broken as f64 / total as f64 },
    })
}

/// The annealer as a [`Solver`]: plans a schedule for `(s, t)`, samples
/// through the endpoint and keeps the `s` best reads.
#[derive(Clone)]
pub struct QpuSolver {
    endpoint: Arc<dyn SamplerEndpoint>,
    access: AccessTimeModel,
}

impl QpuSolver {
    pub fn new(endpoint: Arc<dyn SamplerEndpoint>, access: AccessTimeModel) -> Self {
        QpuSolver { endpoint, access }
    }

    pub fn access_model(&self) -> &AccessTimeModel {
        &self.access
    }

    fn infeasible(&self, vartype: Vartype, s: usize, budget: &Budget, why: String) -> SampleSet {
        let mut set = SampleSet {
            solver: self.id().into(),
            vartype,
            requested: s,
            samples: Vec::new(),
            work: 0,
            wall_time: 0.0,
            clock: budget.clock(),
            status: Status::Partial,
            info: Default::default(),
        };
        set.info.insert("infeasible".into(), why.into());
        set
    }

    fn keep_best(&self, mut set: SampleSet, s: usize, budget: &mut Budget) -> SampleSet {
        budget.charge_seconds(set.wall_time);
        set.samples.truncate(s);
        set.requested = s;
        set.status = if set.samples.len() >= s {
            Status::Complete
        } else {
            Status::Partial
        };
        set
    }

    /// Samples an embedded instance for scenario `(s, budget)`, returning
    /// the `s` best logical readouts and the chain-break fraction.
    pub fn solve_embedded(
        &self,
        logical: &Bqm,
        embedding: &Embedding,
        hw: &HardwareGraph,
        s: usize,
        budget: &mut Budget,
        seed: u64,
    ) -> Result<(SampleSet, f64)> {
        let sched = match plan_schedule(s, budget.remaining(), &self.access) {
            Ok(sched) => sched,
            Err(Error::Infeasible(why)) => return Ok((self.infeasible(logical.vartype(), s, budget, why), 0.0)),
            Err(e) => return Err(e),
        };
        let out = sample_embedded(
            logical,
            embedding,
            hw,
            &sched,
            self.endpoint.as_ref(),
            &self.access,
            seed,
        )?;
        let mut set = self.keep_best(out.logical, s, budget);
        set.info
            .insert("chain_break_fraction".into(), out.chain_break_fraction.into());
        Ok((set, out.chain_break_fraction))
    }
}

impl Solver for QpuSolver {
    fn id(&self) -> &str {
        if self.endpoint.is_mock() {
            "qpu-mock"
        } else {
            "qpu"
        }
    }

    fn kind(&self) -> SolverKind {
        SolverKind::Annealer
    }

    fn solve(&self, model: &Bqm, s: usize, budget: &mut Budget, config: &SolverConfig) -> Result<SampleSet> {
        let sched = match plan_schedule(s, budget.remaining(), &self.access) {
            Ok(sched) => sched,
            Err(Error::Infeasible(why)) => return Ok(self.infeasible(model.vartype(), s, budget, why)),
            Err(e) => return Err(e),
        };
        let set = sample_remote(
            &PhysicalSource::Native(model),
            &sched,
            self.endpoint.as_ref(),
            &self.access,
            config.seed,
        )?;
        Ok(self.keep_best(set, s, budget))
    }
}
