//! Binary agent snapshots.
//!
//! The format is a versioned little-endian dump of every network and
//! optimizer tensor; f64 bits are written verbatim, so save/load round-trips
//! are exact. Layout: magic, version, scalars (gamma, tau, noise_sigma),
//! then actor, critic, actor_target, critic_target, actor_opt, critic_opt.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::ddpg::AgentBundle;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, MlpNet};

const MAGIC: &[u8; 4] = b"VFA\0";
const VERSION: u32 = 1;

pub fn save_agent(path: &Path, agent: &AgentBundle) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    write_u32(&mut w, VERSION)?;
    write_f64(&mut w, agent.gamma)?;
    write_f64(&mut w, agent.tau)?;
    write_f64(&mut w, agent.noise_sigma)?;
    write_net(&mut w, &agent.actor)?;
    write_net(&mut w, &agent.critic)?;
    write_net(&mut w, &agent.actor_target)?;
    write_net(&mut w, &agent.critic_target)?;
    write_adam(&mut w, &agent.actor_opt)?;
    write_adam(&mut w, &agent.critic_opt)?;
    w.flush()?;
    Ok(())
}

pub fn load_agent(path: &Path) -> Result<AgentBundle> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse(format!(
            "{}: not an agent checkpoint",
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Parse(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let gamma = read_f64(&mut r)?;
    let tau = read_f64(&mut r)?;
    let noise_sigma = read_f64(&mut r)?;
    let actor = read_net(&mut r)?;
    let critic = read_net(&mut r)?;
    let actor_target = read_net(&mut r)?;
    let critic_target = read_net(&mut r)?;
    let actor_opt = read_adam(&mut r)?;
    let critic_opt = read_adam(&mut r)?;
    Ok(AgentBundle {
        actor,
        critic,
        actor_target,
        critic_target,
        actor_opt,
        critic_opt,
        gamma,
        tau,
        noise_sigma,
    })
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Tanh => 1,
        Activation::Linear => 2,
    }
}

fn activation_from_tag(tag: u8) -> Result<Activation> {
    match tag {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Tanh),
        2 => Ok(Activation::Linear),
        other => Err(Error::Parse(format!("unknown activation tag {other}"))),
    }
}

fn write_net(w: &mut impl Write, net: &MlpNet) -> Result<()> {
    write_u32(w, net.layer_sizes.len() as u32)?;
    for &s in &net.layer_sizes {
        write_u32(w, s as u32)?;
    }
    w.write_all(&[
        activation_tag(net.hidden_activation),
        activation_tag(net.output_activation),
    ])?;
    for layer in net.weights.iter().chain(net.biases.iter()) {
        write_vec(w, layer)?;
    }
    Ok(())
}

fn read_net(r: &mut impl Read) -> Result<MlpNet> {
    let n = read_u32(r)? as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Parse(format!("implausible layer count {n}")));
    }
    let mut layer_sizes = Vec::with_capacity(n);
    for _ in 0..n {
        layer_sizes.push(read_u32(r)? as usize);
    }
    let mut tags = [0u8; 2];
    r.read_exact(&mut tags)?;
    let mut net = MlpNet::zeros(
        &layer_sizes,
        activation_from_tag(tags[0])?,
        activation_from_tag(tags[1])?,
    );
    for k in 0..net.weights.len() {
        net.weights[k] = read_vec(r, net.weights[k].len())?;
    }
    for k in 0..net.biases.len() {
        net.biases[k] = read_vec(r, net.biases[k].len())?;
    }
    Ok(net)
}

fn write_adam(w: &mut impl Write, s: &AdamState) -> Result<()> {
    write_u32(w, s.m_weights.len() as u32)?;
    for v in s
        .m_weights
        .iter()
        .chain(s.v_weights.iter())
        .chain(s.m_biases.iter())
        .chain(s.v_biases.iter())
    {
        write_u64(w, v.len() as u64)?;
        write_vec(w, v)?;
    }
    write_u64(w, s.step_count)?;
    write_f64(w, s.lr)?;
    write_f64(w, s.beta1)?;
    write_f64(w, s.beta2)?;
    write_f64(w, s.eps)?;
    Ok(())
}

fn read_adam(r: &mut impl Read) -> Result<AdamState> {
    let n_layers = read_u32(r)? as usize;
    if n_layers > 63 {
        return Err(Error::Parse(format!("implausible layer count {n_layers}")));
    }
    let mut groups: Vec<Vec<Vec<f64>>> = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut group = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let len = read_u64(r)? as usize;
            group.push(read_vec(r, len)?);
        }
        groups.push(group);
    }
    let v_biases = groups.pop().unwrap();
    let m_biases = groups.pop().unwrap();
    let v_weights = groups.pop().unwrap();
    let m_weights = groups.pop().unwrap();
    Ok(AdamState {
        m_weights,
        v_weights,
        m_biases,
        v_biases,
        step_count: read_u64(r)?,
        lr: read_f64(r)?,
        beta1: read_f64(r)?,
        beta2: read_f64(r)?,
        eps: read_f64(r)?,
    })
}

fn write_vec(w: &mut impl Write, v: &[f64]) -> Result<()> {
    for &x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_vec(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    if len > (1 << 28) {
        return Err(Error::Parse(format!("implausible tensor length {len}")));
    }
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn write_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
