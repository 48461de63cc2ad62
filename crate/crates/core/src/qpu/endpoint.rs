//! Sampler wire protocol and the two endpoint kinds.

use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{access_time, AccessTimeModel, AnnealSchedule, Modifier};
use crate::error::{Error, Result};
use crate::model::{Assignment, Bqm, Vartype};
use crate::seed;
use crate::solvers::{beta_schedule, Clock, Sample, SampleSet, SpinProblem, Status};

/// Environment variable holding the sampler URL.
pub const ENDPOINT_ENV: &str = "QUBENCH_QPU_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRequest {
    pub bqm: Bqm,
    pub num_reads: usize,
    pub annealing_time_us: f64,
    pub programmings: usize,
    #[serde(default)]
    pub modifiers: Vec<Modifier>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub t_prog_us: f64,
    pub t_anneal_us: f64,
    pub t_read_us: f64,
}

impl Timing {
    pub fn total_seconds(&self) -> f64 {
        (self.t_prog_us + self.t_anneal_us + self.t_read_us) * 1e-6
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResponse {
    /// Spin values, one row per read, indexed like the submitted model.
    pub samples: Vec<Vec<i8>>,
    pub energies: Vec<f64>,
    pub timing: Timing,
}

impl SampleResponse {
    pub fn validate(&self, num_variables: usize, num_reads: usize) -> Result<()> {
        if self.samples.len() != num_reads || self.energies.len() != num_reads {
            return Err(Error::Endpoint(format!(
                "expected {num_reads} samples and energies, got {} and {}",
                self.samples.len(),
                self.energies.len()
            )));
        }
        if let Some(k) = self
            .samples
            .iter()
            .position(|row| row.len() != num_variables || row.iter().any(|&v| v != 1 && v != -1))
        {
            return Err(Error::Endpoint(format!(
                "sample {k} is not a spin vector of length {num_variables}"
            )));
        }
        Ok(())
    }
}

/// Something that anneals a model. Implementations serialize their own
/// requests: at most one is in flight per endpoint.
pub trait SamplerEndpoint: Send + Sync {
    fn name(&self) -> String;

    /// Mock endpoints report modeled rather than measured time.
    fn is_mock(&self) -> bool;

    fn submit(&self, request: &SampleRequest) -> Result<SampleResponse>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockParams {
    /// Effective temperature as a fraction of the largest weight.
    pub temperature: f64,
    pub anneal_sweeps: usize,
    /// Sweeps at the effective temperature after the anneal.
    pub equilibration_sweeps: usize,
}

impl Default for MockParams {
    fn default() -> Self {
        MockParams {
            temperature: 0.2,
            anneal_sweeps: 64,
            equilibration_sweeps: 16,
        }
    }
}

fn largest_weight(model: &Bqm) -> f64 {
    let spin = model.to_vartype(Vartype::Spin);
    spin.linear()
        .iter()
        .copied()
        .chain(spin.quadratic().map(|(_, _, w)| w))
        .fold(0.0f64, |m, w| m.max(w.abs()))
}

/// Stand-in annealer: `n_reads` independent short anneals that end at the
/// effective temperature. Labeled MOCK; reported time is the access time of
/// one programming.
pub fn mock_qpu(model: &Bqm, n_reads: usize, t_anneal: f64, seed: u64, params: &MockParams) -> Result<SampleSet> {
    if !(params.temperature >= 0.0) {
        return Err(Error::Param("mock temperature must be >= 0".into()));
    }
    let p = SpinProblem::new(model);
    let scale = largest_weight(model).max(f64::MIN_POSITIVE);
    let beta_eff = if params.temperature > 0.0 {
        1.0 / (params.temperature * scale)
    } else {
        f64::INFINITY
    };
    let (hot, cold) = p.default_beta_range();
    let end = if beta_eff.is_finite() { beta_eff } else { cold };
    let betas = if params.anneal_sweeps == 0 {
        Vec::new()
    } else {
        beta_schedule(hot.min(end), end, params.anneal_sweeps)
    };
    let mut rng = seed::rng(seed);
    let mut samples = Vec::with_capacity(n_reads);
    for _ in 0..n_reads {
        let mut x = p.random_state(&mut rng);
        let mut fields = p.local_fields(&x);
        for &beta in &betas {
            p.metropolis_sweep(beta, &mut x, &mut fields, &mut rng);
        }
        for _ in 0..params.equilibration_sweeps {
            p.metropolis_sweep(beta_eff, &mut x, &mut fields, &mut rng);
        }
        let values = p.to_source(&x);
        let energy = model.energy_unchecked(&values);
        samples.push(Sample {
            values: Assignment::new(values),
            energy,
            num_occurrences: 1,
        });
    }
    let atm = AccessTimeModel::default();
    let wall_time = if n_reads == 0 {
        0.0
    } else {
        access_time(&AnnealSchedule::new(1, n_reads, t_anneal), &atm)?
    };
    let mut set = SampleSet {
        solver: "qpu-mock".into(),
        vartype: model.vartype(),
        requested: n_reads,
        samples,
        work: (n_reads as f64 * t_anneal * 1e9).round() as u64,
        wall_time,
        clock: Clock::model(),
        status: Status::Complete,
        info: Default::default(),
    };
    set.info.insert("sampler".into(), "MOCK".into());
    set.info.insert("work_unit".into(), "anneal_ns".into());
    Ok(set)
}

pub struct MockEndpoint {
    params: MockParams,
    access: AccessTimeModel,
    lock: Mutex<()>,
}

impl MockEndpoint {
    pub fn new(params: MockParams, access: AccessTimeModel) -> Self {
        MockEndpoint {
            params,
            access,
            lock: Mutex::new(()),
        }
    }
}

impl Default for MockEndpoint {
    fn default() -> Self {
        MockEndpoint::new(MockParams::default(), AccessTimeModel::default())
    }
}

impl SamplerEndpoint for MockEndpoint {
    fn name(&self) -> String {
        "MOCK".into()
    }

    fn is_mock(&self) -> bool {
        true
    }

    fn submit(&self, request: &SampleRequest) -> Result<SampleResponse> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let t_anneal = request.annealing_time_us * 1e-6;
        let spin = request.bqm.to_vartype(Vartype::Spin);
        let set = mock_qpu(&spin, request.num_reads, t_anneal, request.seed, &self.params)?;
        let reads = request.num_reads as f64;
        Ok(SampleResponse {
            energies: set.samples.iter().map(|s| s.energy).collect(),
            samples: set.samples.into_iter().map(|s| s.values.into_values()).collect(),
            timing: Timing {
                t_prog_us: request.programmings as f64 * self.access.t_prog * 1e6,
                t_anneal_us: reads * request.annealing_time_us,
                t_read_us: reads * self.access.t_read * 1e6,
            },
        })
    }
}

/// JSON over HTTP POST.
pub struct HttpEndpoint {
    url: String,
    agent: ureq::Agent,
    lock: Mutex<()>,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEndpoint {
            url: url.into(),
            agent,
            lock: Mutex::new(()),
        }
    }
}

impl SamplerEndpoint for HttpEndpoint {
    fn name(&self) -> String {
        self.url.clone()
    }

    fn is_mock(&self) -> bool {
        false
    }

    fn submit(&self, request: &SampleRequest) -> Result<SampleResponse> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(request)
            .map_err(|e| Error::Endpoint(format!("{}: {e}", self.url)))?;
        response
            .body_mut()
            .read_json::<SampleResponse>()
            .map_err(|e| Error::Endpoint(format!("malformed response from {}: {e}", self.url)))
    }
}

/// The mock when `mock` is set, otherwise the HTTP endpoint named by
/// [`ENDPOINT_ENV`].
pub fn endpoint_from_env(mock: bool, params: MockParams) -> Result<Box<dyn SamplerEndpoint>> {
    if mock {
        return Ok(Box::new(MockEndpoint::new(params, AccessTimeModel::default())));
    }
    match std::env::var(ENDPOINT_ENV) {
        Ok(url) if !url.trim().is_empty() => Ok(Box::new(HttpEndpoint::new(url.trim(), Duration::from_secs(600)))),
        _ => Err(Error::Endpoint(format!(
            "no sampler endpoint: set {ENDPOINT_ENV} or use the mock"
        ))),
    }
}
