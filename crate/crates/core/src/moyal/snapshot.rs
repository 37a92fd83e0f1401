//! Binary grid snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | type      | field                                   |
//! |--------|-----------|-----------------------------------------|
//! | 0      | [u8; 8]   | magic `PSGRID01`                        |
//! | 8      | u64       | n_q                                     |
//! | 16     | u64       | n_p                                     |
//! | 24     | f64 x 4   | q_min, q_max, p_min, p_max              |
//! | 56     | f64       | hbar                                    |
//! | 64     | f64       | padding fraction                        |
//! | 72     | u64       | flags: bit 0 complex, bits 1-2 provenance |
//! | 80     | f64 ...   | values, q-major; (re, im) pairs if complex |

use crate::error::{PsError, Result};
use crate::foundation::kernel::RectGrid;
use crate::foundation::operator::c;

use super::{GridFunction, PhaseGrid, Provenance};

pub const MAGIC: &[u8; 8] = b"PSGRID01";
pub const HEADER_LEN: usize = 80;

pub fn encode(f: &GridFunction) -> Vec<u8> {
    let complex = !f.is_real(0.0);
    let r = &f.grid.rect;
    let prov = match f.provenance {
        Provenance::State => 0u64,
        Provenance::Hamiltonian => 1,
        Provenance::Derived => 2,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + f.values.len() * if complex { 16 } else { 8 });
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(r.n_q as u64).to_le_bytes());
    out.extend_from_slice(&(r.n_p as u64).to_le_bytes());
    for v in [r.q_min, r.q_max, r.p_min, r.p_max, f.grid.hbar, f.grid.padding] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(complex as u64 | prov << 1).to_le_bytes());
    for v in &f.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        if complex {
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

fn word(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().expect("eight bytes")
}

pub fn decode(bytes: &[u8]) -> Result<GridFunction> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(PsError::Parse("not a PSGRID01 snapshot".into()));
    }
    let n_q = u64::from_le_bytes(word(bytes, 8)) as usize;
    let n_p = u64::from_le_bytes(word(bytes, 16)) as usize;
    let f = |k: usize| f64::from_le_bytes(word(bytes, 24 + 8 * k));
    let flags = u64::from_le_bytes(word(bytes, 72));
    let complex = flags & 1 == 1;
    let provenance = match (flags >> 1) & 3 {
        0 => Provenance::State,
        1 => Provenance::Hamiltonian,
        2 => Provenance::Derived,
        x => return Err(PsError::Parse(format!("unknown provenance code {x}"))),
    };
    let count = n_q.checked_mul(n_p).ok_or_else(|| PsError::Parse("grid size overflows".into()))?;
    let width = if complex { 16 } else { 8 };
    if bytes.len() != HEADER_LEN + count * width {
        return Err(PsError::Parse(format!("snapshot payload is {} bytes, header implies {}", bytes.len() - HEADER_LEN, count * width)));
    }
    let rect = RectGrid { q_min: f(0), q_max: f(1), n_q, p_min: f(2), p_max: f(3), n_p };
    let mut grid = PhaseGrid::new(rect, f(4))?;
    grid.padding = f(5);
    let values = (0..count)
        .map(|i| {
            let at = HEADER_LEN + i * width;
            let re = f64::from_le_bytes(word(bytes, at));
            let im = if complex { f64::from_le_bytes(word(bytes, at + 8)) } else { 0.0 };
            c(re, im)
        })
        .collect();
    GridFunction::new(grid, values, provenance)
}

pub fn write(path: &std::path::Path, f: &GridFunction) -> Result<()> {
    Ok(std::fs::write(path, encode(f))?)
}

pub fn read(path: &std::path::Path) -> Result<GridFunction> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = PhaseGrid::symmetric(5.0, 8, 0.5).unwrap();
        let w = GridFunction::coherent(&g, 0.5, 0.0);
        let bytes = encode(&w);
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 8);
        assert_eq!(decode(&bytes).unwrap(), w);
        let mut z = w.clone();
        z.values[3].im = 0.25;
        z.provenance = Provenance::Derived;
        assert_eq!(decode(&encode(&z)).unwrap(), z);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"PSGRID02").is_err());
    }
}
