//! Flat little-endian binary layout for grids and fields, and CSV export.
//!
//! ```text
//! magic "CMAF" | version u32 | kind u8 (0 grid, 1 scalar, 2 hermitian)
//! n u32 | h f64 | box_lo [f64; 2n] | box_hi [f64; 2n] | dims [u64; 2n]
//! node_count u64 | classification [u8; node_count]
//! offset_count u64 | offsets [f64; offset_count]
//! scalar:    values [f64; node_count]
//! hermitian: len u64 | diag [f64; len·n] | lower [(re, im) f64; len·n(n-1)/2]
//! ```

use std::io::{Read, Write};

use crate::domain::{GridDomain, NodeClass};
use crate::hessian::{HermitianField, ScalarField};
use crate::radial::RadialProfile;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CMAF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Grid = 0,
    Scalar = 1,
    Hermitian = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridHeader {
    pub n: usize,
    pub h: f64,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub dims: Vec<usize>,
    pub classification: Vec<u8>,
    pub offsets: Vec<f64>,
}

impl GridHeader {
    pub fn of(grid: &GridDomain) -> Self {
        let box_lo = grid.origin().to_vec();
        let box_hi = box_lo
            .iter()
            .zip(grid.dims())
            .map(|(o, &d)| o + (d - 1) as f64 * grid.h())
            .collect();
        Self {
            n: grid.complex_dim(),
            h: grid.h(),
            box_lo,
            box_hi,
            dims: grid.dims().to_vec(),
            classification: grid.classification().iter().map(|c| *c as u8).collect(),
            offsets: grid.boundary_offsets().to_vec(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.classification.len()
    }

    /// Whether the header describes `grid` bit for bit.
    pub fn matches(&self, grid: &GridDomain) -> bool {
        *self == Self::of(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Grid,
    Scalar(Vec<f64>),
    Hermitian { len: usize, diag: Vec<f64>, lower: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: GridHeader,
    pub payload: Payload,
}

fn put_u32(w: &mut (impl Write + ?Sized), v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64(w: &mut (impl Write + ?Sized), v: usize) -> Result<()> {
    Ok(w.write_all(&(v as u64).to_le_bytes())?)
}

fn put_f64s(w: &mut (impl Write + ?Sized), v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_header(w: &mut (impl Write + ?Sized), kind: PayloadKind, g: &GridHeader) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    w.write_all(&[kind as u8])?;
    put_u32(w, g.n as u32)?;
    put_f64s(w, &[g.h])?;
    put_f64s(w, &g.box_lo)?;
    put_f64s(w, &g.box_hi)?;
    for &d in &g.dims {
        put_u64(w, d)?;
    }
    put_u64(w, g.node_count())?;
    w.write_all(&g.classification)?;
    put_u64(w, g.offsets.len())?;
    put_f64s(w, &g.offsets)
}

pub fn write_grid(w: &mut (impl Write + ?Sized), grid: &GridDomain) -> Result<()> {
    write_header(w, PayloadKind::Grid, &GridHeader::of(grid))
}

pub fn write_scalar_field(w: &mut (impl Write + ?Sized), u: &ScalarField) -> Result<()> {
    write_header(w, PayloadKind::Scalar, &GridHeader::of(u.grid()))?;
    put_f64s(w, u.values())
}

pub fn write_hermitian_field(w: &mut (impl Write + ?Sized), grid: &GridDomain, m: &HermitianField) -> Result<()> {
    write_header(w, PayloadKind::Hermitian, &GridHeader::of(grid))?;
    put_u64(w, m.len())?;
    put_f64s(w, m.diag())?;
    for c in m.lower() {
        put_f64s(w, &[c.re, c.im])?;
    }
    Ok(())
}

struct Reader<R> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b)?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self, limit: usize) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes()?) as usize;
        if v > limit {
            return Err(Error::Format(format!("length {v} exceeds limit {limit}")));
        }
        Ok(v)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| Ok(f64::from_le_bytes(self.bytes()?))).collect()
    }
}

const MAX_LEN: usize = 1 << 34;

pub fn read_field_file(r: impl Read) -> Result<FieldFile> {
    let mut rd = Reader { r };
    if &rd.bytes::<4>()? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = rd.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = rd.bytes::<1>()?[0];
    let n = rd.u32()? as usize;
    if n == 0 || n > 8 {
        return Err(Error::Format(format!("complex dimension {n} out of range")));
    }
    let h = rd.f64s(1)?[0];
    let box_lo = rd.f64s(2 * n)?;
    let box_hi = rd.f64s(2 * n)?;
    let dims = (0..2 * n).map(|_| rd.u64(MAX_LEN)).collect::<Result<Vec<_>>>()?;
    let count = rd.u64(MAX_LEN)?;
    if dims.iter().product::<usize>() != count {
        return Err(Error::Format("node count does not match dims".into()));
    }
    let mut classification = vec![0u8; count];
    rd.r.read_exact(&mut classification)?;
    if classification.iter().any(|&c| c > NodeClass::Exterior as u8) {
        return Err(Error::Format("bad node class".into()));
    }
    let offset_count = rd.u64(MAX_LEN)?;
    let offsets = rd.f64s(offset_count)?;
    let header = GridHeader {
        n,
        h,
        box_lo,
        box_hi,
        dims,
        classification,
        offsets,
    };
    let payload = match kind {
        0 => Payload::Grid,
        1 => Payload::Scalar(rd.f64s(count)?),
        2 => {
            let len = rd.u64(count)?;
            let diag = rd.f64s(len * n)?;
            let raw = rd.f64s(2 * len * n * (n - 1) / 2)?;
            let lower = raw.chunks_exact(2).map(|c| (c[0], c[1])).collect();
            Payload::Hermitian { len, diag, lower }
        }
        k => return Err(Error::Format(format!("unknown payload kind {k}"))),
    };
    Ok(FieldFile { header, payload })
}

/// Read a scalar field written for `grid`.
pub fn read_scalar_field(r: impl Read, grid: &std::sync::Arc<GridDomain>) -> Result<ScalarField> {
    let file = read_field_file(r)?;
    if !file.header.matches(grid) {
        return Err(Error::Format("field was written for a different grid".into()));
    }
    match file.payload {
        Payload::Scalar(v) => Ok(ScalarField::from_values(grid, v)),
        _ => Err(Error::Format("not a scalar field".into())),
    }
}

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x1,y1,…,class,value` per node.
pub fn write_field_csv(w: &mut (impl Write + ?Sized), u: &ScalarField) -> Result<()> {
    let grid = u.grid();
    let n = grid.complex_dim();
    let mut head: Vec<String> = (1..=n).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect();
    head.push("class".into());
    head.push("value".into());
    writeln!(w, "{}", head.join(","))?;
    let mut x = vec![0.0; grid.real_dim()];
    for idx in 0..grid.node_count() {
        grid.coords_into(idx, &mut x);
        let mut row: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        row.push((grid.class(idx) as u8).to_string());
        row.push(fmt_f64(u.value(idx)));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `lambda,sup_norm,iterations,residual` per branch point.
pub fn write_branch_csv(w: &mut (impl Write + ?Sized), branch: &[crate::eigenpath::BranchPoint]) -> Result<()> {
    writeln!(w, "lambda,sup_norm,iterations,residual")?;
    for p in branch {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(p.lambda),
            fmt_f64(p.sup_norm),
            p.report.iterations,
            fmt_f64(p.report.residual)
        )?;
    }
    Ok(())
}

/// `t,phi,dphi` along a radial profile.
pub fn write_profile_csv(w: &mut (impl Write + ?Sized), p: &RadialProfile) -> Result<()> {
    writeln!(w, "t,phi,dphi")?;
    for i in 0..p.t.len() {
        writeln!(w, "{},{},{}", fmt_f64(p.t[i]), fmt_f64(p.phi[i]), fmt_f64(p.dphi[i]))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use crate::hessian::complex_hessian;

    #[test]
    fn scalar_field_round_trip() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.125).unwrap();
        let u = ScalarField::from_fn_interior(&grid, |x| x[0] * x[1] - 0.3);
        let mut buf = Vec::new();
        write_scalar_field(&mut buf, &u).unwrap();
        let back = read_scalar_field(buf.as_slice(), &grid).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn hermitian_field_round_trip() {
        let grid = build_grid(DomainSpec::centered_ball(2, 1.0), 0.25).unwrap();
        let u = ScalarField::from_fn_interior(&grid, |x| x.iter().map(|v| v * v).sum::<f64>() - 1.0);
        let m = complex_hessian(&u);
        let mut buf = Vec::new();
        write_hermitian_field(&mut buf, &grid, &m).unwrap();
        let file = read_field_file(buf.as_slice()).unwrap();
        assert!(file.header.matches(&grid));
        match file.payload {
            Payload::Hermitian { len, diag, lower } => {
                assert_eq!(len, m.len());
                assert_eq!(diag, m.diag());
                assert!(lower.iter().zip(m.lower()).all(|(a, b)| a.0 == b.re && a.1 == b.im));
            }
            _ => panic!("wrong payload"),
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let grid = build_grid(DomainSpec::centered_ball(1, 1.0), 0.25).unwrap();
        let mut buf = Vec::new();
        write_grid(&mut buf, &grid).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_field_file(buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }
}
