//! Binary tensor files (`TTEN`) and TT-chain containers.
//!
//! `TTEN` layout, all little-endian:
//!
//! ```text
//! b"TTEN" | version u8 = 1 | N u32 | N × u64 dims | ∏dims × f64 entries
//! ```
//!
//! Entries follow the canonical first-mode-fastest order.
//!
//! A chain container (`TTCH`) is a small JSON header followed by one `TTEN`
//! record per factor:
//!
//! ```text
//! b"TTCH" | version u8 = 1 | header length u32 | JSON header | TTEN × N
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::tt::{TtChain, TtFactor};

pub const TTEN_MAGIC: &[u8; 4] = b"TTEN";
pub const TTEN_VERSION: u8 = 1;
pub const CHAIN_MAGIC: &[u8; 4] = b"TTCH";
pub const CHAIN_VERSION: u8 = 1;

/// Upper bound on entries accepted from a file header.
const MAX_ENTRIES: u64 = 1 << 34;

pub fn write_tensor<T: Scalar, W: Write>(w: &mut W, t: &DenseTensor<T>) -> Result<()> {
    w.write_all(TTEN_MAGIC)?;
    w.write_all(&[TTEN_VERSION])?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &x in t.data() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("unexpected end of file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_tensor<T: Scalar, R: Read>(r: &mut R) -> Result<DenseTensor<T>> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != TTEN_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected TTEN")));
    }
    let [version] = read_array::<1, _>(r)?;
    if version != TTEN_VERSION {
        return Err(Error::Format(format!("unsupported TTEN version {version}")));
    }
    let order = u32::from_le_bytes(read_array(r)?) as usize;
    let mut shape = Vec::with_capacity(order);
    let mut total: u64 = 1;
    for _ in 0..order {
        let d = u64::from_le_bytes(read_array(r)?);
        if d == 0 {
            return Err(Error::Format("zero-sized mode".into()));
        }
        total = total
            .checked_mul(d)
            .filter(|&t| t <= MAX_ENTRIES)
            .ok_or_else(|| Error::Format("tensor too large".into()))?;
        shape.push(d as usize);
    }
    let mut data = Vec::with_capacity(total as usize);
    for _ in 0..total {
        data.push(T::lit(f64::from_le_bytes(read_array(r)?)));
    }
    DenseTensor::new(shape, data)
}

pub fn save_tensor<T: Scalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_tensor(&mut r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub factor_count: usize,
    pub ranks: Vec<usize>,
    pub dims: Vec<usize>,
    pub left_orthogonal: Vec<bool>,
}

pub fn write_chain<T: Scalar, W: Write>(w: &mut W, chain: &TtChain<T>) -> Result<()> {
    let header = ChainHeader {
        factor_count: chain.len(),
        ranks: chain.ranks(),
        dims: chain.dims(),
        left_orthogonal: chain.factors().iter().map(TtFactor::is_left_orthogonal).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(CHAIN_MAGIC)?;
    w.write_all(&[CHAIN_VERSION])?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for f in chain.factors() {
        write_tensor(w, f.core())?;
    }
    Ok(())
}

pub fn read_chain<T: Scalar, R: Read>(r: &mut R) -> Result<TtChain<T>> {
    let magic: [u8; 4] = read_array(r)?;
    if &magic != CHAIN_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected TTCH")));
    }
    let [version] = read_array::<1, _>(r)?;
    if version != CHAIN_VERSION {
        return Err(Error::Format(format!("unsupported chain version {version}")));
    }
    let len = u32::from_le_bytes(read_array(r)?) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: ChainHeader = serde_json::from_slice(&json)?;
    if header.left_orthogonal.len() != header.factor_count || header.ranks.len() != header.factor_count + 1 {
        return Err(Error::Format("inconsistent chain header".into()));
    }
    let mut factors = Vec::with_capacity(header.factor_count);
    for &flag in &header.left_orthogonal {
        let core = read_tensor(r)?;
        factors.push(TtFactor::new(core)?.with_left_orthogonal(flag));
    }
    let chain = TtChain::new(factors)?;
    if chain.ranks() != header.ranks || chain.dims() != header.dims {
        return Err(Error::Format("chain header disagrees with stored factors".into()));
    }
    Ok(chain)
}

pub fn save_chain<T: Scalar>(path: impl AsRef<Path>, chain: &TtChain<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_chain(&mut w, chain)?;
    w.flush()?;
    Ok(())
}

pub fn load_chain<T: Scalar>(path: impl AsRef<Path>) -> Result<TtChain<T>> {
    let mut r = BufReader::new(File::open(path)?);
    read_chain(&mut r)
}
