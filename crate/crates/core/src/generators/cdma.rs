use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{Bqm, Vartype};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdmaParams {
    pub users: usize,
    /// Spreading-code length; defaults to the number of users.
    pub code_length: usize,
    pub sigma: f64,
}

impl CdmaParams {
    pub fn new(users: usize) -> Self {
        CdmaParams {
            users,
            code_length: users,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CdmaInstance {
    pub model: Bqm,
    /// One ±1 code per user.
    pub codes: Vec<Vec<i8>>,
    pub transmitted: Vec<i8>,
    pub received: Vec<f64>,
}

/// Decoding model `E(x) = ½‖y − Sx‖²` with `S[l][i] = codes[i][l] / √L`.
/// All pairs are stored, zero correlations included.
pub fn cdma_from_parts(codes: &[Vec<i8>], received: &[f64]) -> Result<Bqm> {
    let n = codes.len();
    if n < 2 {
        return Err(Error::Param("CDMA needs at least 2 users".into()));
    }
    let len = received.len();
    if len == 0 || codes.iter().any(|c| c.len() != len) {
        return Err(Error::Param("every code must match the received signal length".into()));
    }
    if codes.iter().flatten().any(|&v| v != 1 && v != -1) {
        return Err(Error::Param("spreading codes must be ±1".into()));
    }
    let scale = 1.0 / len as f64;
    let root = (len as f64).sqrt();
    let linear: Vec<f64> = codes
        .iter()
        .map(|c| -c.iter().zip(received).map(|(&s, &y)| f64::from(s) * y).sum::<f64>() / root)
        .collect();
    let mut model = Bqm::new(Vartype::Spin, n);
    for (i, &h) in linear.iter().enumerate() {
        model.set_linear(i, h)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            let dot: i64 = codes[i].iter().zip(&codes[j]).map(|(&a, &b)| i64::from(a * b)).sum();
            model.set_interaction(i, j, dot as f64 * scale)?;
        }
    }
    let yy: f64 = received.iter().map(|y| y * y).sum();
    model.set_offset(0.5 * (n as f64 + yy));
    Ok(model)
}

pub fn gen_cdma(params: &CdmaParams, seed: u64) -> Result<CdmaInstance> {
    let (n, len) = (params.users, params.code_length);
    if n < 2 {
        return Err(Error::Param("CDMA needs at least 2 users".into()));
    }
    if len == 0 || !(params.sigma >= 0.0) {
        return Err(Error::Param("CDMA needs a positive code length and sigma >= 0".into()));
    }
    let mut rng = seed::rng(seed);
    let sign = |rng: &mut rand_chacha::ChaCha8Rng| if rng.random::<bool>() { 1i8 } else { -1 };
    let codes: Vec<Vec<i8>> = (0..n).map(|_| (0..len).map(|_| sign(&mut rng)).collect()).collect();
    let transmitted: Vec<i8> = (0..n).map(|_| sign(&mut rng)).collect();
    let noise = Normal::new(0.0, params.sigma).map_err(|e| Error::Param(e.to_string()))?;
    let root = (len as f64).sqrt();
    let received: Vec<f64> = (0..len)
        .map(|l| {
            let clean: f64 = (0..n).map(|i| f64::from(codes[i][l] * transmitted[i])).sum::<f64>() / root;
            clean + noise.sample(&mut rng)
        })
        .collect();
    let model = cdma_from_parts(&codes, &received)?;
    Ok(CdmaInstance {
        model,
        codes,
        transmitted,
        received,
    })
}
