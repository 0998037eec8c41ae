//! Snapshot container file format (binary, little-endian).
//!
//! Layout:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `"MDOASNP1"`                      |
//! | 8      | 4    | `n_tx` (u32)                            |
//! | 12     | 4    | `n_rx` (u32)                            |
//! | 16     | 8    | `num_samples` M (u64)                   |
//! | 24     | 8    | `d_over_lambda` (f64)                   |
//! | 32     | 8    | `phi_trx_deg` (f64)                     |
//! | 40     | …    | M·N complex samples, interleaved re/im  |
//!
//! Samples are stored snapshot-major; within a snapshot the element order is
//! the virtual-array flat index `(i−1)·n_rx + (l−1)`. All doubles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::scene::{ArrayGeometry, SnapshotSet};

const MAGIC: &[u8; 8] = b"MDOASNP1";

pub fn write_snapshots<W: Write>(mut w: W, snapshots: &SnapshotSet<f64>) -> Result<()> {
    let g = &snapshots.geometry;
    g.validate()?;
    w.write_all(MAGIC)?;
    w.write_all(&(g.n_tx as u32).to_le_bytes())?;
    w.write_all(&(g.n_rx as u32).to_le_bytes())?;
    w.write_all(&(snapshots.samples.len() as u64).to_le_bytes())?;
    w.write_all(&g.d_over_lambda.to_le_bytes())?;
    w.write_all(&g.phi_trx_deg.to_le_bytes())?;
    let n = g.n_virtual();
    for x in &snapshots.samples {
        if x.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "snapshot has {} entries, expected {n}",
                x.len()
            )));
        }
        for z in x.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_snapshots_file<P: AsRef<Path>>(path: P, snapshots: &SnapshotSet<f64>) -> Result<()> {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    write_snapshots(&mut w, snapshots)?;
    w.flush()?;
    Ok(())
}

fn read_exact_or_malformed<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::MalformedFile(format!("truncated while reading {what}")))
}

pub fn read_snapshots<R: Read>(mut r: R) -> Result<SnapshotSet<f64>> {
    let mut magic = [0u8; 8];
    read_exact_or_malformed(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::MalformedFile(
            "bad magic: not a snapshot container".into(),
        ));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    read_exact_or_malformed(&mut r, &mut b4, "n_tx")?;
    let n_tx = u32::from_le_bytes(b4) as usize;
    read_exact_or_malformed(&mut r, &mut b4, "n_rx")?;
    let n_rx = u32::from_le_bytes(b4) as usize;
    read_exact_or_malformed(&mut r, &mut b8, "num_samples")?;
    let m = u64::from_le_bytes(b8) as usize;
    read_exact_or_malformed(&mut r, &mut b8, "d_over_lambda")?;
    let d_over_lambda = f64::from_le_bytes(b8);
    read_exact_or_malformed(&mut r, &mut b8, "phi_trx_deg")?;
    let phi_trx_deg = f64::from_le_bytes(b8);

    let geometry = ArrayGeometry {
        n_tx,
        n_rx,
        d_over_lambda,
        phi_trx_deg,
    };
    geometry
        .validate()
        .map_err(|e| Error::MalformedFile(format!("invalid header geometry: {e}")))?;
    if m == 0 {
        return Err(Error::MalformedFile("file contains zero samples".into()));
    }

    let n = geometry.n_virtual();
    let mut samples = Vec::with_capacity(m);
    for s in 0..m {
        let mut data = Vec::with_capacity(n);
        for e in 0..n {
            read_exact_or_malformed(&mut r, &mut b8, &format!("sample {s} entry {e} (re)"))?;
            let re = f64::from_le_bytes(b8);
            read_exact_or_malformed(&mut r, &mut b8, &format!("sample {s} entry {e} (im)"))?;
            let im = f64::from_le_bytes(b8);
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::MalformedFile(format!(
                    "non-finite value in sample {s}"
                )));
            }
            data.push(Complex::new(re, im));
        }
        samples.push(CVector::new(data));
    }
    // Trailing garbage means the header and payload disagree.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::MalformedFile("trailing bytes after payload".into()));
    }
    Ok(SnapshotSet { samples, geometry })
}

pub fn read_snapshots_file<P: AsRef<Path>>(path: P) -> Result<SnapshotSet<f64>> {
    let f = File::open(path)?;
    read_snapshots(BufReader::new(f))
}
