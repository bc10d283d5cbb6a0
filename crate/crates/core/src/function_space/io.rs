//! Grid function persistence.
//!
//! CSV: the header row is `t\x` followed by the x-nodes; every further row
//! is a t-node followed by that row's values. The Lipschitz bound is
//! recomputed on load.
//!
//! Binary (little endian):
//!
//! ```text
//! "DLGRD" | version:u8 | lipschitz_x:f64
//! n_t:u64 | t_nodes:f64 × n_t | n_x:u64 | x_nodes:f64 × n_x
//! values:f64 × (n_t × n_x)                      (row-major in t)
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::GridFunction;
use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 5] = b"DLGRD";
pub const GRID_VERSION: u8 = 1;

pub fn write_grid<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    w.write_all(GRID_MAGIC)?;
    w.write_u8(GRID_VERSION)?;
    w.write_f64::<LE>(f.lipschitz_x())?;
    for nodes in [f.t_nodes(), f.x_nodes()] {
        w.write_u64::<LE>(nodes.len() as u64)?;
        for &v in nodes {
            w.write_f64::<LE>(v)?;
        }
    }
    for &v in f.values() {
        w.write_f64::<LE>(v)?;
    }
    Ok(())
}

pub fn read_grid<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Format("not a grid function file (bad magic)".into()));
    }
    let version = r.read_u8()?;
    if version != GRID_VERSION {
        return Err(Error::Format(format!("unsupported grid version {version}")));
    }
    let lip = r.read_f64::<LE>()?;
    let n_t = r.read_u64::<LE>()? as usize;
    let t_nodes = read_f64s(&mut r, n_t)?;
    let n_x = r.read_u64::<LE>()? as usize;
    let x_nodes = read_f64s(&mut r, n_x)?;
    let values = read_f64s(&mut r, n_t * n_x)?;
    GridFunction::new(t_nodes, x_nodes, values, lip)
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    Ok((0..n).map(|_| r.read_f64::<LE>()).collect::<Result<Vec<_>, _>>()?)
}

pub fn write_grid_csv<W: Write>(f: &GridFunction, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t\\x".to_string()];
    header.extend(f.x_nodes().iter().map(|x| x.to_string()));
    out.write_record(&header)?;
    for (i, t) in f.t_nodes().iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(f.row(i).iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_grid_csv<R: Read>(r: R) -> Result<GridFunction> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number `{s}`: {e}")));
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| Error::Format("empty grid CSV".into()))??;
    let x_nodes = header.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
    let (mut t_nodes, mut values) = (Vec::new(), Vec::new());
    for rec in records {
        let rec = rec?;
        if rec.len() != x_nodes.len() + 1 {
            return Err(Error::Format(format!("row has {} fields, expected {}", rec.len(), x_nodes.len() + 1)));
        }
        t_nodes.push(parse(&rec[0])?);
        for v in rec.iter().skip(1) {
            values.push(parse(v)?);
        }
    }
    let mut probe = GridFunction::new(t_nodes.clone(), x_nodes.clone(), values.clone(), f64::INFINITY)?;
    let lip = probe.max_abs_slope();
    probe = GridFunction::new(t_nodes, x_nodes, values, lip)?;
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFunction {
        let xs: Vec<f64> = (0..=12).map(|j| -1.0 + j as f64 / 6.0).collect();
        GridFunction::from_fn(vec![0.0, 0.1, 0.35], xs, |t, x| (3.0 * x).sin() * (1.0 + t) / 7.0).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid(&f, &mut buf).unwrap();
        assert_eq!(read_grid(&buf[..]).unwrap(), f);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t\\x,-1,"));
        assert_eq!(read_grid_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(matches!(read_grid(&b"DLENS\x01"[..]), Err(Error::Format(_))));
        assert!(read_grid_csv(&b"t\\x,0,1\n0,1\n"[..]).is_err());
    }
}
