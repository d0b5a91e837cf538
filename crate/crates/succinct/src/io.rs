//! Little-endian serialization helpers shared by every on-disk structure.

use std::io::{Read, Write};

pub use byteorder::{ReadBytesExt, WriteBytesExt, LE};

use crate::{Error, Result};

pub fn write_magic<W: Write>(w: &mut W, magic: &[u8; 4], version: u16) -> Result<()> {
    w.write_all(magic)?;
    w.write_u16::<LE>(version)?;
    Ok(())
}

/// Reads and checks a 4-byte magic plus version.
pub fn read_magic<R: Read>(r: &mut R, magic: &[u8; 4], version: u16) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    let v = r.read_u16::<LE>()?;
    if v != version {
        return Err(Error::Format(format!(
            "unsupported version {v} for {}",
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub fn write_u64s<W: Write>(w: &mut W, xs: &[u64]) -> Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    for &x in xs {
        w.write_u64::<LE>(x)?;
    }
    Ok(())
}

pub fn read_u64s<R: Read>(r: &mut R) -> Result<Vec<u64>> {
    let n = read_len(r)?;
    let mut xs = vec![0u64; n];
    r.read_u64_into::<LE>(&mut xs)?;
    Ok(xs)
}

pub fn write_u32s<W: Write>(w: &mut W, xs: &[u32]) -> Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    for &x in xs {
        w.write_u32::<LE>(x)?;
    }
    Ok(())
}

pub fn read_u32s<R: Read>(r: &mut R) -> Result<Vec<u32>> {
    let n = read_len(r)?;
    let mut xs = vec![0u32; n];
    r.read_u32_into::<LE>(&mut xs)?;
    Ok(xs)
}

pub fn write_bytes<W: Write>(w: &mut W, xs: &[u8]) -> Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    w.write_all(xs)?;
    Ok(())
}

pub fn read_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let n = read_len(r)?;
    let mut xs = vec![0u8; n];
    r.read_exact(&mut xs)?;
    Ok(xs)
}

/// Reads a u64 length prefix, rejecting values that cannot be a real length.
pub fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let n = r.read_u64::<LE>()?;
    if n > (1u64 << 40) {
        return Err(Error::Format(format!("implausible length {n}")));
    }
    Ok(n as usize)
}
