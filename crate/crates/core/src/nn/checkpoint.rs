//! Versioned JSON checkpoints. Float arrays are stored as base64 of their
//! little-endian bytes so a round trip is bit-exact.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::policy::{ActorCritic, NetSpec};
use crate::error::NnError;
use crate::rl::normalize::{RewardScaler, RunningNormalizer};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

/// Everything that makes up the learned controller.
#[derive(Debug, Clone)]
pub struct PolicyParams<T> {
    pub net: ActorCritic,
    pub params: Vec<T>,
    pub adam: Adam<T>,
    pub obs_norm: RunningNormalizer,
    pub reward_norm: RewardScaler,
}

impl<T: Scalar> PolicyParams<T> {
    pub fn new<R: rand::Rng>(spec: NetSpec, gamma: f64, clip: f64, rng: &mut R) -> Result<Self, NnError> {
        let net = ActorCritic::new(spec)?;
        let params = net.init(rng);
        let n = params.len();
        Ok(Self {
            obs_norm: RunningNormalizer::new(net.spec().input, clip),
            reward_norm: RewardScaler::new(gamma, clip),
            net,
            params,
            adam: Adam::new(n),
        })
    }

    pub fn log_std(&self) -> T {
        self.params[self.net.log_std_index()]
    }
}

/// Position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub policy: PolicyParams<T>,
    pub rng: RngState,
    pub env_steps: u64,
    pub updates: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Blob {
    len: usize,
    data: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizerFile {
    count: u64,
    mean: Blob,
    m2: Blob,
    clip: Blob,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardFile {
    gamma: Blob,
    ret: Blob,
    stats: NormalizerFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RngFile {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdamFile {
    t: u64,
    m: Blob,
    v: Blob,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    dtype: String,
    spec: NetSpec,
    param_count: usize,
    params: Blob,
    adam: AdamFile,
    obs_norm: NormalizerFile,
    reward_norm: RewardFile,
    rng: RngFile,
    env_steps: u64,
    updates: u64,
}

fn encode<S: Scalar>(xs: &[S]) -> Blob {
    let mut bytes = Vec::with_capacity(xs.len() * S::BYTES);
    for &x in xs {
        x.extend_le_bytes(&mut bytes);
    }
    Blob {
        len: xs.len(),
        data: B64.encode(bytes),
    }
}

fn decode<S: Scalar>(b: &Blob, what: &str) -> Result<Vec<S>, NnError> {
    let bytes = B64
        .decode(&b.data)
        .map_err(|e| NnError::Malformed(format!("{what}: {e}")))?;
    if bytes.len() != b.len * S::BYTES {
        return Err(NnError::Malformed(format!(
            "{what}: expected {} values, found {} bytes",
            b.len,
            bytes.len()
        )));
    }
    Ok(bytes.chunks_exact(S::BYTES).map(S::from_le_slice).collect())
}

fn scalar_from(b: &Blob, what: &str) -> Result<f64, NnError> {
    decode::<f64>(b, what)?
        .first()
        .copied()
        .ok_or_else(|| NnError::Malformed(format!("{what}: empty")))
}

fn norm_to_file(n: &RunningNormalizer) -> NormalizerFile {
    NormalizerFile {
        count: n.count,
        mean: encode(&n.mean),
        m2: encode(&n.m2),
        clip: encode(&[n.clip]),
    }
}

fn norm_from_file(f: &NormalizerFile, what: &str) -> Result<RunningNormalizer, NnError> {
    let mean = decode(&f.mean, what)?;
    let m2: Vec<f64> = decode(&f.m2, what)?;
    if mean.len() != m2.len() {
        return Err(NnError::Malformed(format!("{what}: mean/m2 length mismatch")));
    }
    Ok(RunningNormalizer {
        count: f.count,
        mean,
        m2,
        clip: scalar_from(&f.clip, what)?,
    })
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.policy;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            dtype: T::DTYPE.to_string(),
            spec: p.net.spec().clone(),
            param_count: p.params.len(),
            params: encode(&p.params),
            adam: AdamFile {
                t: p.adam.t,
                m: encode(&p.adam.m),
                v: encode(&p.adam.v),
            },
            obs_norm: norm_to_file(&p.obs_norm),
            reward_norm: RewardFile {
                gamma: encode(&[p.reward_norm.gamma]),
                ret: encode(&[p.reward_norm.ret]),
                stats: norm_to_file(&p.reward_norm.stats),
            },
            rng: RngFile {
                seed: B64.encode(self.rng.seed),
                stream: self.rng.stream,
                word_pos: self.rng.word_pos.to_string(),
            },
            env_steps: self.env_steps,
            updates: self.updates,
        };
        let mut out = serde_json::to_vec_pretty(&file).expect("checkpoint serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NnError> {
        // check the version before the full schema so old files get a clear error
        let head: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| NnError::Malformed(e.to_string()))?;
        let version = head
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| NnError::Malformed("missing format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(NnError::Version {
                found: version as u32,
                expected: FORMAT_VERSION,
            });
        }
        let file: CheckpointFile = serde_json::from_value(head).map_err(|e| NnError::Malformed(e.to_string()))?;
        if file.dtype != T::DTYPE {
            return Err(NnError::Dtype {
                found: file.dtype,
                expected: T::DTYPE,
            });
        }
        let net = ActorCritic::new(file.spec)?;
        let params: Vec<T> = decode(&file.params, "params")?;
        if params.len() != net.param_count() || file.param_count != params.len() {
            return Err(NnError::Shape(format!(
                "spec needs {} parameters, file holds {}",
                net.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NnError::Malformed("non-finite parameter".into()));
        }
        let m: Vec<T> = decode(&file.adam.m, "adam.m")?;
        let v: Vec<T> = decode(&file.adam.v, "adam.v")?;
        if m.len() != params.len() || v.len() != params.len() {
            return Err(NnError::Shape("optimizer state does not match parameters".into()));
        }
        let obs_norm = norm_from_file(&file.obs_norm, "obs_norm")?;
        if obs_norm.dim() != net.spec().input {
            return Err(NnError::Shape("observation normalizer width".into()));
        }
        let reward_norm = RewardScaler {
            gamma: scalar_from(&file.reward_norm.gamma, "reward_norm.gamma")?,
            ret: scalar_from(&file.reward_norm.ret, "reward_norm.ret")?,
            stats: norm_from_file(&file.reward_norm.stats, "reward_norm")?,
        };
        let seed: [u8; 32] = B64
            .decode(&file.rng.seed)
            .map_err(|e| NnError::Malformed(format!("rng seed: {e}")))?
            .try_into()
            .map_err(|_| NnError::Malformed("rng seed must be 32 bytes".into()))?;
        let word_pos = file
            .rng
            .word_pos
            .parse()
            .map_err(|e| NnError::Malformed(format!("rng word_pos: {e}")))?;
        Ok(Self {
            policy: PolicyParams {
                net,
                params,
                adam: Adam { m, v, t: file.adam.t },
                obs_norm,
                reward_norm,
            },
            rng: RngState {
                seed,
                stream: file.rng.stream,
                word_pos,
            },
            env_steps: file.env_steps,
            updates: file.updates,
        })
    }
}
