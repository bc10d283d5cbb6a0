//! Ensemble persistence.
//!
//! Binary layout (little endian):
//!
//! ```text
//! "DLENS" | version:u8 | seed:u64 | first_path:u64 | tag_len:u32 | tag bytes
//! n_nodes:u64 | times:f64 × n_nodes | n_paths:u64
//! values:f64 × (n_paths × n_nodes)              (path-major)
//! per path: n_jumps:u32 | (t, pre, post):f64×3 × n_jumps
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{JumpRecord, Partition, PathEnsemble};
use crate::error::{Error, Result};

pub const ENSEMBLE_MAGIC: &[u8; 5] = b"DLENS";
pub const ENSEMBLE_VERSION: u8 = 1;

pub fn write_ensemble<W: Write>(e: &PathEnsemble, mut w: W) -> Result<()> {
    w.write_all(ENSEMBLE_MAGIC)?;
    w.write_u8(ENSEMBLE_VERSION)?;
    w.write_u64::<LE>(e.seed)?;
    w.write_u64::<LE>(e.first_path as u64)?;
    w.write_u32::<LE>(e.model_tag.len() as u32)?;
    w.write_all(e.model_tag.as_bytes())?;
    let times = e.partition().times();
    w.write_u64::<LE>(times.len() as u64)?;
    for &t in times {
        w.write_f64::<LE>(t)?;
    }
    w.write_u64::<LE>(e.n_paths() as u64)?;
    for &v in e.values() {
        w.write_f64::<LE>(v)?;
    }
    for js in e.jumps() {
        w.write_u32::<LE>(js.len() as u32)?;
        for j in js {
            w.write_f64::<LE>(j.t)?;
            w.write_f64::<LE>(j.pre)?;
            w.write_f64::<LE>(j.post)?;
        }
    }
    Ok(())
}

pub fn read_ensemble<R: Read>(mut r: R) -> Result<PathEnsemble> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != ENSEMBLE_MAGIC {
        return Err(Error::Format("not an ensemble file (bad magic)".into()));
    }
    let version = r.read_u8()?;
    if version != ENSEMBLE_VERSION {
        return Err(Error::Format(format!("unsupported ensemble version {version}")));
    }
    let seed = r.read_u64::<LE>()?;
    let first_path = r.read_u64::<LE>()? as usize;
    let tag_len = r.read_u32::<LE>()? as usize;
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag)?;
    let tag = String::from_utf8(tag).map_err(|_| Error::Format("model tag is not UTF-8".into()))?;
    let n_nodes = r.read_u64::<LE>()? as usize;
    let times = (0..n_nodes).map(|_| r.read_f64::<LE>()).collect::<Result<Vec<_>, _>>()?;
    let n_paths = r.read_u64::<LE>()? as usize;
    let values = (0..n_paths * n_nodes)
        .map(|_| r.read_f64::<LE>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut jumps = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let n = r.read_u32::<LE>()? as usize;
        let mut js = Vec::with_capacity(n);
        for _ in 0..n {
            js.push(JumpRecord { t: r.read_f64::<LE>()?, pre: r.read_f64::<LE>()?, post: r.read_f64::<LE>()? });
        }
        jumps.push(js);
    }
    PathEnsemble::new(Partition::new(times)?, values, jumps, seed, tag, first_path)
}

/// Long-format node table: `path,node,t,x`.
pub fn write_nodes_csv<W: Write>(e: &PathEnsemble, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["path", "node", "t", "x"])?;
    for (p, path) in e.paths().enumerate() {
        for (k, (t, x)) in path.times.iter().zip(path.values).enumerate() {
            out.write_record(&[
                (e.first_path + p).to_string(),
                k.to_string(),
                t.to_string(),
                x.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Jump table: `path,t,x_pre,x_post`.
pub fn write_jumps_csv<W: Write>(e: &PathEnsemble, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["path", "t", "x_pre", "x_post"])?;
    for (p, js) in e.jumps().iter().enumerate() {
        for j in js {
            out.write_record(&[
                (e.first_path + p).to_string(),
                j.t.to_string(),
                j.pre.to_string(),
                j.post.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_models::{simulate, ModelSpec};

    #[test]
    fn binary_round_trip_preserves_bits() {
        let m = ModelSpec::jump_diffusion(3.0, -0.4, 1.0);
        let p = Partition::uniform(1.0, 10).unwrap();
        let e = simulate(&m, &p, 25, 77).unwrap();
        let mut buf = Vec::new();
        write_ensemble(&e, &mut buf).unwrap();
        assert_eq!(&buf[..5], ENSEMBLE_MAGIC);
        assert_eq!(buf[5], ENSEMBLE_VERSION);
        assert_eq!(read_ensemble(buf.as_slice()).unwrap(), e);
    }

    #[test]
    fn bad_magic_is_rejected() {
        assert!(matches!(read_ensemble(&b"NOPE!\x01"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let m = ModelSpec::brownian(1.0);
        let p = Partition::uniform(1.0, 4).unwrap();
        let e = simulate(&m, &p, 3, 0).unwrap();
        let mut buf = Vec::new();
        write_nodes_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 5);
        assert!(text.starts_with("path,node,t,x"));
    }
}
