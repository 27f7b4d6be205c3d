//! Field container: one JSON header line, then little-endian `f64` pairs `(re, im)`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{norms::slice_l2_norms, GridSpec, Rep, SpaceTimeField, SpatialField, SpatialRep};
use crate::error::{Error, Result};

const MAGIC: &str = "conewave-field";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Spacetime { rep: Rep },
    Spatial { rep: SpatialRep },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    #[serde(flatten)]
    pub kind: FieldKind,
    pub values: usize,
}

fn write_body(w: &mut impl Write, data: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 16);
    for c in data {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn write_container(w: &mut impl Write, header: &FieldHeader, data: &[Complex64]) -> Result<()> {
    let line = serde_json::to_string(header)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    write_body(w, data)
}

fn read_container(r: impl Read) -> Result<(FieldHeader, Vec<Complex64>)> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    if header.format != MAGIC {
        return Err(Error::Format(format!("unknown container format {:?}", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::Format(format!("unsupported container version {}", header.version)));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != header.values * 16 {
        return Err(Error::Format(format!(
            "container body has {} bytes, header announces {} values",
            bytes.len(),
            header.values
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok((header, data))
}

pub fn write_field(w: &mut impl Write, u: &SpaceTimeField) -> Result<()> {
    let header = FieldHeader {
        format: MAGIC.into(),
        version: VERSION,
        grid: u.grid().clone(),
        kind: FieldKind::Spacetime { rep: u.rep() },
        values: u.data().len(),
    };
    write_container(w, &header, u.data())
}

pub fn write_spatial(w: &mut impl Write, grid: &GridSpec, f: &SpatialField) -> Result<()> {
    if !f.matches(grid) {
        return Err(Error::Contract("spatial field does not match the grid".into()));
    }
    let header = FieldHeader {
        format: MAGIC.into(),
        version: VERSION,
        grid: grid.clone(),
        kind: FieldKind::Spatial { rep: f.rep() },
        values: f.data().len(),
    };
    write_container(w, &header, f.data())
}

pub fn read_field(r: impl Read) -> Result<SpaceTimeField> {
    let (h, data) = read_container(r)?;
    h.grid.validate(usize::MAX)?;
    match h.kind {
        FieldKind::Spacetime { rep } => SpaceTimeField::from_data(&h.grid, rep, data),
        FieldKind::Spatial { .. } => Err(Error::Format("container holds a spatial field".into())),
    }
}

pub fn read_spatial(r: impl Read) -> Result<(GridSpec, SpatialField)> {
    let (h, data) = read_container(r)?;
    h.grid.validate(usize::MAX)?;
    match h.kind {
        FieldKind::Spatial { rep } => {
            let f = SpatialField::from_data(&h.grid, rep, data)?;
            Ok((h.grid, f))
        }
        FieldKind::Spacetime { .. } => {
            Err(Error::Format("container holds a space-time field".into()))
        }
    }
}

pub fn save_field(path: impl AsRef<Path>, u: &SpaceTimeField) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut f, u)?;
    f.flush()?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SpaceTimeField> {
    read_field(std::fs::File::open(path)?)
}

pub fn save_spatial(path: impl AsRef<Path>, grid: &GridSpec, f: &SpatialField) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_spatial(&mut w, grid, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_spatial(path: impl AsRef<Path>) -> Result<(GridSpec, SpatialField)> {
    read_spatial(std::fs::File::open(path)?)
}

/// SHA-256 of the coefficient bytes, hex encoded.
pub fn content_hash(data: &[Complex64]) -> String {
    let mut h = Sha256::new();
    for c in data {
        h.update(c.re.to_le_bytes());
        h.update(c.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// CSV of `t, ||u(t)||_{L^2}` per time slice.
pub fn write_slice_norms_csv(w: impl Write, u: &SpaceTimeField) -> Result<()> {
    let sf = u.to_rep(Rep::SpatialFourier);
    let norms = slice_l2_norms(&sf)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "l2"])?;
    for (t, n) in u.grid().times().iter().zip(norms) {
        out.write_record([format!("{t:.12e}"), format!("{n:.12e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let g = GridSpec::new(2, 4, 1.0, 3, 2.0).unwrap();
        let u = SpaceTimeField::from_fn(&g, |t, x| Complex64::new(t.sin() + x[0], x[1].exp()))
            .into_rep(Rep::SpatialFourier);
        let mut buf = Vec::new();
        write_field(&mut buf, &u).unwrap();
        let v = read_field(&buf[..]).unwrap();
        assert_eq!(v.rep(), Rep::SpatialFourier);
        assert_eq!(v.grid(), u.grid());
        assert_eq!(content_hash(v.data()), content_hash(u.data()));
    }

    #[test]
    fn truncated_body_is_rejected() {
        let g = GridSpec::new(1, 4, 1.0, 2, 1.0).unwrap();
        let u = SpaceTimeField::zeros(&g, Rep::Physical);
        let mut buf = Vec::new();
        write_field(&mut buf, &u).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_field(&buf[..]).is_err());
    }

    #[test]
    fn slice_csv_has_one_row_per_time() {
        let g = GridSpec::new(1, 4, 1.0, 5, 1.0).unwrap();
        let u = SpaceTimeField::from_fn(&g, |_, _| Complex64::new(2.0, 0.0));
        let mut buf = Vec::new();
        write_slice_norms_csv(&mut buf, &u).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(1).unwrap().ends_with("2.000000000000e0"));
    }
}
