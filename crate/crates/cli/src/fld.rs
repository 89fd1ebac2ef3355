//! Binary field dumps: magic, version, rank, per-axis sizes, then
//! row-major little-endian `f64` values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use pbdm_core::{GridSpec, ScalarField2D};

use crate::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"PBDMFLD\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

impl Dump {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> CliResult<Self> {
        if dims.iter().product::<usize>() != values.len() {
            return Err(CliError::Format(format!(
                "{} values do not fill dims {dims:?}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }
}

pub fn encode(dims: &[usize], values: &[f64], w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write(path: &Path, dims: &[usize], values: &[f64]) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    encode(dims, values, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn take<const N: usize>(r: &mut impl Read) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn decode(r: &mut impl Read) -> CliResult<Dump> {
    let bad = |m: &str| CliError::Format(m.to_string());
    let io = |e: std::io::Error| CliError::Format(format!("truncated dump: {e}"));
    if &take::<8>(r).map_err(io)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(r).map_err(io)?);
    if version != VERSION {
        return Err(CliError::Format(format!("unsupported dump version {version}")));
    }
    let rank = u32::from_le_bytes(take(r).map_err(io)?) as usize;
    if rank == 0 || rank > 8 {
        return Err(CliError::Format(format!("implausible rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| take::<8>(r).map(|b| u64::from_le_bytes(b) as usize))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io)?;
    let len = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| bad("dims overflow"))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != len * 8 {
        return Err(CliError::Format(format!(
            "expected {} payload bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Dump::new(dims, values)
}

pub fn read(path: &Path) -> CliResult<Dump> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    decode(&mut r).map_err(|e| match e {
        CliError::Format(m) => CliError::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// A 2D field as CSV rows `x,y,value`.
pub fn write_csv_2d(path: &Path, field: &ScalarField2D, grid: &GridSpec) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "x,y,value")?;
        for i in 0..grid.nx1() {
            for j in 0..grid.ny1() {
                writeln!(w, "{},{},{}", grid.x(i), grid.y(j), field.get(i, j))?;
            }
        }
        w.flush()
    })();
    body.map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let values = vec![0.1, -2.5e-300, f64::MAX, 0.0, -0.0, 1.0 / 3.0];
        let mut buf = Vec::new();
        encode(&[2, 3], &values, &mut buf).unwrap();
        let d = decode(&mut buf.as_slice()).unwrap();
        assert_eq!(d.dims, vec![2, 3]);
        for (a, b) in d.values.iter().zip(&values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        encode(&[4], &[1.0, 2.0, 3.0, 4.0], &mut buf).unwrap();
        assert!(decode(&mut &buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(decode(&mut bad.as_slice()).is_err());
        assert!(Dump::new(vec![2, 2], vec![1.0]).is_err());
    }
}
