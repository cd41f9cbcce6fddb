//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian, floats as IEEE-754 bit patterns):
//!
//! ```text
//! magic            8 bytes  "HCPCKPT1"
//! version          u32      (currently 1)
//! algorithm        u8       0 = ddpg, 1 = ppo
//! mode             u8       0 baseline, 1 hcp-e, 2 hcp-e-dyn, 3 hcp-i
//! progress         u64      episodes (ddpg) or env steps (ppo)
//! updates          u64
//! rng_state        u64
//! config_hash      u32 len + bytes (hex string)
//! obs_norm         count f64, dim u32, mean[dim] f64, m2[dim] f64
//! n_nets           u32
//!   per net: name (u32 len + bytes), spec (u32 n_sizes + u32[,]
//!            u8 activations[n_sizes-1] (0 selu, 1 tanh, 2 identity),
//!            inject flag u8 [+ u32 layer + u32 dim]),
//!            params (u64 len + values/m/v f64[len] + step u64)
//! log_std          flag u8 [+ params as above]   (ppo only)
//! embedding        flag u8 [+ dim u32 + lr f64 + n_rows u32 +
//!                  per row: id (u32 len + bytes) + values/m/v f64[dim]
//!                  + step u64]
//! ```
//!
//! Gradient buffers are not stored; they are zero at save points.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use hcp_core::embedding::EmbeddingTable;
use hcp_core::nn::{Activation, Mlp, MlpSpec, NetParams};
use hcp_core::rl::{DdpgTrainer, EncodingMode, PpoTrainer, RunningNorm};
use hcp_core::rng::Rng;

const MAGIC: &[u8; 8] = b"HCPCKPT1";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ddpg,
    Ppo,
}

/// Deserialized checkpoint contents.
pub struct Checkpoint {
    pub algorithm: Algorithm,
    pub mode: EncodingMode,
    pub progress: u64,
    pub updates: u64,
    pub rng_state: u64,
    pub config_hash: String,
    pub obs_norm: RunningNorm,
    pub nets: Vec<(String, MlpSpec, NetParams)>,
    pub log_std: Option<NetParams>,
    pub embedding: Option<EmbeddingSnapshot>,
}

pub struct EmbeddingSnapshot {
    pub dim: usize,
    pub learning_rate: f64,
    pub rows: Vec<(String, NetParams)>,
}

// --- primitive writers -----------------------------------------------------

fn w_u8(w: &mut impl Write, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

fn w_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn w_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn w_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn w_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for v in vs {
        w_f64(w, *v)?;
    }
    Ok(())
}

fn w_str(w: &mut impl Write, s: &str) -> Result<()> {
    w_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn r_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn r_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn r_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn r_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn r_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(r_f64(r)?);
    }
    Ok(out)
}

fn r_str(r: &mut impl Read) -> Result<String> {
    let len = r_u32(r)? as usize;
    if len > 1 << 20 {
        bail!("unreasonable string length {len} in checkpoint");
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn act_code(a: Activation) -> u8 {
    match a {
        Activation::Selu => 0,
        Activation::Tanh => 1,
        Activation::Identity => 2,
    }
}

fn act_from(code: u8) -> Result<Activation> {
    Ok(match code {
        0 => Activation::Selu,
        1 => Activation::Tanh,
        2 => Activation::Identity,
        other => bail!("bad activation code {other}"),
    })
}

fn mode_code(m: EncodingMode) -> u8 {
    match m {
        EncodingMode::Baseline => 0,
        EncodingMode::Explicit => 1,
        EncodingMode::ExplicitDyn => 2,
        EncodingMode::Implicit => 3,
    }
}

fn mode_from(code: u8) -> Result<EncodingMode> {
    Ok(match code {
        0 => EncodingMode::Baseline,
        1 => EncodingMode::Explicit,
        2 => EncodingMode::ExplicitDyn,
        3 => EncodingMode::Implicit,
        other => bail!("bad encoding-mode code {other}"),
    })
}

fn write_params(w: &mut impl Write, p: &NetParams) -> Result<()> {
    w_u64(w, p.values.len() as u64)?;
    w_f64s(w, &p.values)?;
    w_f64s(w, &p.m)?;
    w_f64s(w, &p.v)?;
    w_u64(w, p.step)?;
    Ok(())
}

fn read_params(r: &mut impl Read) -> Result<NetParams> {
    let len = r_u64(r)? as usize;
    if len > 1 << 28 {
        bail!("unreasonable parameter count {len}");
    }
    let mut p = NetParams::zeros(len);
    p.values = r_f64s(r, len)?;
    p.m = r_f64s(r, len)?;
    p.v = r_f64s(r, len)?;
    p.step = r_u64(r)?;
    Ok(p)
}

fn write_net(w: &mut impl Write, name: &str, net: &Mlp) -> Result<()> {
    w_str(w, name)?;
    w_u32(w, net.spec.layer_sizes.len() as u32)?;
    for s in &net.spec.layer_sizes {
        w_u32(w, *s as u32)?;
    }
    for a in &net.spec.activations {
        w_u8(w, act_code(*a))?;
    }
    match net.spec.inject {
        Some(inj) => {
            w_u8(w, 1)?;
            w_u32(w, inj.layer as u32)?;
            w_u32(w, inj.dim as u32)?;
        }
        None => w_u8(w, 0)?,
    }
    write_params(w, &net.params)
}

fn read_net(r: &mut impl Read) -> Result<(String, MlpSpec, NetParams)> {
    let name = r_str(r)?;
    let n_sizes = r_u32(r)? as usize;
    if n_sizes > 64 {
        bail!("unreasonable layer count");
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(r_u32(r)? as usize);
    }
    let mut acts = Vec::with_capacity(n_sizes - 1);
    for _ in 0..n_sizes - 1 {
        acts.push(act_from(r_u8(r)?)?);
    }
    let mut spec = MlpSpec::new(sizes, acts);
    if r_u8(r)? == 1 {
        let layer = r_u32(r)? as usize;
        let dim = r_u32(r)? as usize;
        spec = spec.with_injection(layer, dim);
    }
    let params = read_params(r)?;
    Ok((name, spec, params))
}

fn write_norm(w: &mut impl Write, n: &RunningNorm) -> Result<()> {
    w_f64(w, n.count)?;
    w_u32(w, n.dim() as u32)?;
    w_f64s(w, &n.mean)?;
    w_f64s(w, &n.m2)?;
    Ok(())
}

fn read_norm(r: &mut impl Read) -> Result<RunningNorm> {
    let count = r_f64(r)?;
    let dim = r_u32(r)? as usize;
    if dim > 1 << 20 {
        bail!("unreasonable normalizer dim");
    }
    let mut n = RunningNorm::new(dim);
    n.count = count;
    n.mean = r_f64s(r, dim)?;
    n.m2 = r_f64s(r, dim)?;
    Ok(n)
}

fn write_embedding(w: &mut impl Write, t: &EmbeddingTable) -> Result<()> {
    w_u32(w, t.dim() as u32)?;
    w_f64(w, t.learning_rate)?;
    let ids = t.ids().to_vec();
    w_u32(w, ids.len() as u32)?;
    for id in &ids {
        let idx = t.row_index(id)?;
        let row = t.row(idx);
        w_str(w, id)?;
        w_f64s(w, &row.values)?;
        w_f64s(w, &row.m)?;
        w_f64s(w, &row.v)?;
        w_u64(w, row.step)?;
    }
    Ok(())
}

fn read_embedding(r: &mut impl Read) -> Result<EmbeddingSnapshot> {
    let dim = r_u32(r)? as usize;
    let lr = r_f64(r)?;
    let n = r_u32(r)? as usize;
    if dim > 1 << 16 || n > 1 << 24 {
        bail!("unreasonable embedding table size");
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let id = r_str(r)?;
        let mut p = NetParams::zeros(dim);
        p.values = r_f64s(r, dim)?;
        p.m = r_f64s(r, dim)?;
        p.v = r_f64s(r, dim)?;
        p.step = r_u64(r)?;
        rows.push((id, p));
    }
    Ok(EmbeddingSnapshot {
        dim,
        learning_rate: lr,
        rows,
    })
}

// --- top-level save/load ----------------------------------------------------

pub fn save_ddpg(path: &Path, t: &DdpgTrainer, config_hash: &str) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w_u32(&mut w, VERSION)?;
    w_u8(&mut w, 0)?;
    w_u8(&mut w, mode_code(t.mode))?;
    w_u64(&mut w, t.episodes_done)?;
    w_u64(&mut w, t.updates_done)?;
    w_u64(&mut w, t.rng_state())?;
    w_str(&mut w, config_hash)?;
    write_norm(&mut w, &t.obs_norm)?;
    w_u32(&mut w, 4)?;
    write_net(&mut w, "actor", &t.actor)?;
    write_net(&mut w, "critic", &t.critic)?;
    write_net(&mut w, "target_actor", &t.target_actor)?;
    write_net(&mut w, "target_critic", &t.target_critic)?;
    w_u8(&mut w, 0)?; // no log_std
    match &t.embedding {
        Some(table) => {
            w_u8(&mut w, 1)?;
            write_embedding(&mut w, table)?;
        }
        None => w_u8(&mut w, 0)?,
    }
    w.flush()?;
    Ok(())
}

pub fn save_ppo(path: &Path, t: &PpoTrainer, config_hash: &str) -> Result<()> {
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w_u32(&mut w, VERSION)?;
    w_u8(&mut w, 1)?;
    w_u8(&mut w, mode_code(t.mode))?;
    w_u64(&mut w, t.steps_done)?;
    w_u64(&mut w, t.iterations_done)?;
    w_u64(&mut w, t.rng_state())?;
    w_str(&mut w, config_hash)?;
    write_norm(&mut w, &t.obs_norm)?;
    w_u32(&mut w, 2)?;
    write_net(&mut w, "policy", &t.policy)?;
    write_net(&mut w, "value", &t.value)?;
    w_u8(&mut w, 1)?;
    write_params(&mut w, &t.log_std)?;
    match &t.embedding {
        Some(table) => {
            w_u8(&mut w, 1)?;
            write_embedding(&mut w, table)?;
        }
        None => w_u8(&mut w, 0)?,
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("{} is not a checkpoint file", path.display());
    }
    let version = r_u32(&mut r)?;
    if version != VERSION {
        bail!("unsupported checkpoint version {version}");
    }
    let algorithm = match r_u8(&mut r)? {
        0 => Algorithm::Ddpg,
        1 => Algorithm::Ppo,
        other => bail!("bad algorithm code {other}"),
    };
    let mode = mode_from(r_u8(&mut r)?)?;
    let progress = r_u64(&mut r)?;
    let updates = r_u64(&mut r)?;
    let rng_state = r_u64(&mut r)?;
    let config_hash = r_str(&mut r)?;
    let obs_norm = read_norm(&mut r)?;
    let n_nets = r_u32(&mut r)? as usize;
    if n_nets > 16 {
        bail!("unreasonable net count");
    }
    let mut nets = Vec::with_capacity(n_nets);
    for _ in 0..n_nets {
        nets.push(read_net(&mut r)?);
    }
    let log_std = if r_u8(&mut r)? == 1 {
        Some(read_params(&mut r)?)
    } else {
        None
    };
    let embedding = if r_u8(&mut r)? == 1 {
        Some(read_embedding(&mut r)?)
    } else {
        None
    };
    Ok(Checkpoint {
        algorithm,
        mode,
        progress,
        updates,
        rng_state,
        config_hash,
        obs_norm,
        nets,
        log_std,
        embedding,
    })
}

impl Checkpoint {
    pub fn net(&self, name: &str) -> Result<&(String, MlpSpec, NetParams)> {
        self.nets
            .iter()
            .find(|(n, _, _)| n == name)
            .with_context(|| format!("checkpoint has no net `{name}`"))
    }

    /// Restore networks, normalizer, counters and randomness into a
    /// freshly constructed trainer (full resume).
    pub fn restore_ddpg(&self, t: &mut DdpgTrainer) -> Result<()> {
        self.restore_ddpg_nets(t)?;
        t.obs_norm = self.obs_norm.clone();
        t.episodes_done = self.progress;
        t.updates_done = self.updates;
        t.restore_rng(self.rng_state);
        if let (Some(snap), Some(table)) = (&self.embedding, &mut t.embedding) {
            let mut fresh = EmbeddingTable::new(snap.dim, snap.learning_rate);
            let mut rng = Rng::new(0);
            for (id, params) in &snap.rows {
                let idx = fresh.ensure_row(id, &mut rng);
                *fresh.row_mut(idx) = params.clone();
            }
            *table = fresh;
        }
        Ok(())
    }

    /// Restore only what transfers to new robots: network weights and
    /// observation statistics. Embedding rows stay fresh.
    pub fn restore_ddpg_nets(&self, t: &mut DdpgTrainer) -> Result<()> {
        let assign = |dst: &mut Mlp, name: &str| -> Result<()> {
            let (_, spec, params) = self.net(name)?;
            if dst.spec != *spec {
                bail!(
                    "checkpoint net `{name}` shape does not match the configured network \
                     (checkpoint {:?} vs config {:?})",
                    spec.layer_sizes,
                    dst.spec.layer_sizes
                );
            }
            dst.params = params.clone();
            Ok(())
        };
        assign(&mut t.actor, "actor")?;
        assign(&mut t.critic, "critic")?;
        assign(&mut t.target_actor, "target_actor")?;
        assign(&mut t.target_critic, "target_critic")?;
        t.obs_norm = self.obs_norm.clone();
        Ok(())
    }

    pub fn restore_ppo(&self, t: &mut PpoTrainer) -> Result<()> {
        self.restore_ppo_nets(t)?;
        t.steps_done = self.progress;
        t.iterations_done = self.updates;
        t.restore_rng(self.rng_state);
        if let (Some(snap), Some(table)) = (&self.embedding, &mut t.embedding) {
            let mut fresh = EmbeddingTable::new(snap.dim, snap.learning_rate);
            let mut rng = Rng::new(0);
            for (id, params) in &snap.rows {
                let idx = fresh.ensure_row(id, &mut rng);
                *fresh.row_mut(idx) = params.clone();
            }
            *table = fresh;
        }
        Ok(())
    }

    pub fn restore_ppo_nets(&self, t: &mut PpoTrainer) -> Result<()> {
        let assign = |dst: &mut Mlp, name: &str| -> Result<()> {
            let (_, spec, params) = self.net(name)?;
            if dst.spec != *spec {
                bail!(
                    "checkpoint net `{name}` shape does not match the configured network \
                     (checkpoint {:?} vs config {:?})",
                    spec.layer_sizes,
                    dst.spec.layer_sizes
                );
            }
            dst.params = params.clone();
            Ok(())
        };
        assign(&mut t.policy, "policy")?;
        assign(&mut t.value, "value")?;
        if let Some(ls) = &self.log_std {
            t.log_std = ls.clone();
        }
        t.obs_norm = self.obs_norm.clone();
        Ok(())
    }
}
