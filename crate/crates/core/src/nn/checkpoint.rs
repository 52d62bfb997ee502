//! Binary network records.
//!
//! Each record is: 8-byte magic, `u32` format version, `u8` role tag, `u8`
//! hidden and output activation codes, `u32` number of layer sizes, the
//! sizes as `u32`, `u64` parameter count, then the parameters as
//! little-endian `f64` (weights then bias for each layer, then the log
//! standard deviations for an actor). A checkpoint file is a sequence of
//! records; integers are little-endian.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::mlp::{Activation, Layer, Mlp};
use super::policy::{GaussianPolicy, ValueNet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FTARMNN\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Actor,
    Critic,
}

impl Role {
    fn tag(self) -> u8 {
        match self {
            Role::Actor => 1,
            Role::Critic => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Actor(GaussianPolicy),
    Critic(ValueNet),
}

impl Record {
    pub fn role(&self) -> Role {
        match self {
            Record::Actor(_) => Role::Actor,
            Record::Critic(_) => Role::Critic,
        }
    }

    fn net(&self) -> &Mlp {
        match self {
            Record::Actor(p) => &p.mean_net,
            Record::Critic(v) => &v.net,
        }
    }
}

pub fn write_record<W: Write>(out: &mut W, record: &Record) -> io::Result<()> {
    let net = record.net();
    let sizes = net.sizes();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&[record.role().tag(), net.hidden.code(), net.output.code()])?;
    out.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for s in &sizes {
        out.write_all(&(*s as u32).to_le_bytes())?;
    }
    let extra: &[f64] = match record {
        Record::Actor(p) => &p.log_std,
        Record::Critic(_) => &[],
    };
    let count = net.parameter_count() + extra.len();
    out.write_all(&(count as u64).to_le_bytes())?;
    for slice in net.params().into_iter().chain(std::iter::once(extra)) {
        for v in slice {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| corrupt("parameter count overflow"))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn read_record(c: &mut Cursor<'_>) -> Result<Record> {
    if c.take(8)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {}", version)));
    }
    let role = c.u8()?;
    let hidden = Activation::from_code(c.u8()?).ok_or_else(|| corrupt("unknown activation"))?;
    let output = Activation::from_code(c.u8()?).ok_or_else(|| corrupt("unknown activation"))?;
    let n_sizes = c.u32()? as usize;
    if !(2..=64).contains(&n_sizes) {
        return Err(corrupt(format!("implausible layer count {}", n_sizes)));
    }
    let sizes: Vec<usize> = (0..n_sizes)
        .map(|_| c.u32().map(|s| s as usize))
        .collect::<Result<_>>()?;
    if sizes.contains(&0) {
        return Err(corrupt("zero-width layer"));
    }
    let out_dim = sizes[n_sizes - 1];
    let net_params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let extra = match role {
        1 => out_dim,
        2 => 0,
        t => return Err(corrupt(format!("unknown role tag {}", t))),
    };
    let count = c.u64()? as usize;
    if count != net_params + extra {
        return Err(corrupt(format!(
            "parameter count {} does not match layer sizes",
            count
        )));
    }
    let mut values = c.f64s(count)?.into_iter();
    let mut layers = Vec::with_capacity(n_sizes - 1);
    for w in sizes.windows(2) {
        let weights: Vec<f64> = values.by_ref().take(w[0] * w[1]).collect();
        let bias: Vec<f64> = values.by_ref().take(w[1]).collect();
        layers.push(Layer {
            inputs: w[0],
            outputs: w[1],
            weights,
            bias,
        });
    }
    let net = Mlp::from_layers(layers, hidden, output)?;
    if !net.is_finite() {
        return Err(corrupt("non-finite parameters"));
    }
    Ok(match role {
        1 => Record::Actor(GaussianPolicy::from_parts(net, values.collect())?),
        _ => Record::Critic(ValueNet { net }),
    })
}

pub fn decode(data: &[u8]) -> Result<Vec<Record>> {
    let mut c = Cursor { data, pos: 0 };
    let mut out = Vec::new();
    while c.pos < data.len() {
        out.push(read_record(&mut c)?);
    }
    if out.is_empty() {
        return Err(corrupt("empty checkpoint"));
    }
    Ok(out)
}

pub fn encode(records: &[Record]) -> Vec<u8> {
    let mut buf = Vec::new();
    for r in records {
        write_record(&mut buf, r).expect("writing to a Vec cannot fail");
    }
    buf
}

/// Actor and critic saved together.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub actor: GaussianPolicy,
    pub critic: Option<ValueNet>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut records = vec![Record::Actor(self.actor.clone())];
        if let Some(c) = &self.critic {
            records.push(Record::Critic(c.clone()));
        }
        encode(&records)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Checkpoint> {
        let mut actor = None;
        let mut critic = None;
        for r in decode(data)? {
            match r {
                Record::Actor(p) if actor.is_none() => actor = Some(p),
                Record::Critic(v) if critic.is_none() => critic = Some(v),
                _ => return Err(corrupt("duplicate record")),
            }
        }
        let actor = actor.ok_or_else(|| corrupt("no actor record"))?;
        Ok(Checkpoint { actor, critic })
    }

    /// Writes through a temporary file so a crash never leaves a partial
    /// checkpoint behind.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut data = Vec::new();
        fs::File::open(path)?.read_to_end(&mut data)?;
        Checkpoint::from_bytes(&data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut actor = GaussianPolicy::new(23, &[32, 16], 9, 3).unwrap();
        actor.log_std[4] = -1.25;
        Checkpoint {
            actor,
            critic: Some(ValueNet::new(23, &[32, 16], 4).unwrap()),
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let ck = sample();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let obs: Vec<f64> = (0..23).map(|i| (i as f64).sin()).collect();
        let a = ck.actor.mean(&obs).unwrap();
        let b = back.actor.mean(&obs).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(
            u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
            FORMAT_VERSION
        );
        assert_eq!(bytes[12], 1);
        assert_eq!(u32::from_le_bytes(bytes[15..19].try_into().unwrap()), 4);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&[]).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[12] = 7;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let critic_only = encode(&[Record::Critic(ValueNet::new(3, &[4], 0).unwrap())]);
        assert!(Checkpoint::from_bytes(&critic_only).is_err());
    }
}
