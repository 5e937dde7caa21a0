//! Grid files. The binary layout is little-endian:
//! a 16-byte header `b"HVFG"`, `u32` format version (1), `u32` rank, `u32`
//! dtype (1 = f64), then `rank` `u32` node counts, `rank` `f64` lower bounds,
//! `rank` `f64` upper bounds and the values in row-major order (last axis fastest).
//! The CSV fallback has a header row and one row `x1,...,xn,value` per node.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::grid::GridFunction;

pub const MAGIC: &[u8; 4] = b"HVFG";
const FORMAT_VERSION: u32 = 1;
const DTYPE_F64: u32 = 1;

pub fn encode_binary(f: &GridFunction) -> Vec<u8> {
    let d = &f.domain;
    let rank = d.dim() as u32;
    let mut out = Vec::with_capacity(16 + 20 * d.dim() + 8 * f.len());
    out.extend_from_slice(MAGIC);
    for v in [FORMAT_VERSION, rank, DTYPE_F64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in &d.counts {
        out.extend_from_slice(&(*c as u32).to_le_bytes());
    }
    for v in d.lo.iter().chain(&d.hi).chain(&f.values) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self.bytes.get(self.pos..end).ok_or_else(|| Error::InvalidParameter("grid file truncated".into()))?;
        self.pos = end;
        Ok(s.try_into().expect("slice length"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn decode_binary(bytes: &[u8]) -> Result<GridFunction> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::InvalidParameter("not an HVFG grid file".into()));
    }
    let version = r.u32()?;
    let rank = r.u32()? as usize;
    let dtype = r.u32()?;
    if version != FORMAT_VERSION || dtype != DTYPE_F64 || rank == 0 || rank > 16 {
        return Err(Error::InvalidParameter(format!("unsupported grid header (version {version}, rank {rank}, dtype {dtype})")));
    }
    let counts: Vec<usize> = (0..rank).map(|_| r.u32().map(|c| c as usize)).collect::<Result<_>>()?;
    let lo: Vec<f64> = (0..rank).map(|_| r.f64()).collect::<Result<_>>()?;
    let hi: Vec<f64> = (0..rank).map(|_| r.f64()).collect::<Result<_>>()?;
    let total = counts.iter().try_fold(1usize, |a, c| a.checked_mul(*c)).ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
    if bytes.len() != r.pos + 8 * total {
        return Err(Error::InvalidParameter(format!("grid file holds {} value bytes, expected {}", bytes.len().saturating_sub(r.pos), 8 * total)));
    }
    super::config::check_budget(total)?;
    let values = (0..total).map(|_| r.f64()).collect::<Result<_>>()?;
    GridFunction::new(BoxDomain::new(lo, hi, counts)?, values)
}

pub fn encode_csv(f: &GridFunction) -> String {
    let d = &f.domain;
    let mut s: String = (1..=d.dim()).map(|k| format!("x{k},")).collect();
    s.push_str("value\n");
    for i in 0..f.len() {
        for x in d.coords(i) {
            s.push_str(&format!("{x},"));
        }
        s.push_str(&format!("{}\n", f.values[i]));
    }
    s
}

/// Reads the CSV fallback; the grid is recovered from the distinct coordinates.
pub fn decode_csv(text: &str) -> Result<GridFunction> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rank = rdr.headers().map_err(|e| Error::InvalidParameter(e.to_string()))?.len().saturating_sub(1);
    if rank == 0 {
        return Err(Error::InvalidParameter("grid CSV needs coordinate columns and a value column".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let row = rec.iter().map(|t| t.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number '{t}'")))).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); rank];
    for row in &rows {
        for k in 0..rank {
            axes[k].push(row[k]);
        }
    }
    for a in &mut axes {
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (1.0 + y.abs()));
    }
    let counts: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = counts.iter().product();
    if total != rows.len() {
        return Err(Error::InvalidParameter(format!("{} rows do not form a tensor grid of {counts:?} nodes", rows.len())));
    }
    super::config::check_budget(total)?;
    let dom = BoxDomain::new(axes.iter().map(|a| a[0]).collect(), axes.iter().map(|a| a[a.len() - 1]).collect(), counts)?;
    let mut values = vec![f64::NAN; total];
    for row in &rows {
        let idx = dom.nearest(&row[..rank]).ok_or_else(|| Error::InvalidParameter("coordinate outside the grid".into()))?;
        values[idx] = row[rank];
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("grid CSV has duplicate or missing nodes".into()));
    }
    GridFunction::new(dom, values)
}

/// Chooses the format from the magic bytes.
pub fn read_grid(path: &Path) -> Result<GridFunction> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        decode_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::InvalidParameter(format!("{} is neither HVFG nor UTF-8 CSV", path.display())))?;
        decode_csv(&text)
    }
}

/// Binary unless the extension is `.csv`.
pub fn write_grid(path: &Path, f: &GridFunction) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    if path.extension().is_some_and(|e| e == "csv") {
        std::fs::write(path, encode_csv(f))?;
    } else {
        std::fs::write(path, encode_binary(f))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFunction {
        let d = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 0.5], vec![5, 3]).unwrap();
        GridFunction::from_fn(&d, |x| x[0] * 3.0 - x[1] + 0.125)
    }

    #[test]
    fn binary_round_trip() {
        let f = sample();
        let bytes = encode_binary(&f);
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(bytes.len(), 16 + 2 * 4 + 4 * 8 + 15 * 8);
        let g = decode_binary(&bytes).unwrap();
        assert_eq!(g.values, f.values);
        assert_eq!(g.domain, f.domain);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_binary(&bad).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = sample();
        let g = decode_csv(&encode_csv(&f)).unwrap();
        assert_eq!(g.domain, f.domain);
        for (a, b) in g.values.iter().zip(&f.values) {
            assert_eq!(a, b);
        }
        assert!(decode_csv("x1,value\n0,1\n0,2\n").is_err());
    }
}
