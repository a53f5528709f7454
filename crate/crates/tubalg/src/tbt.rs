//! TBT1 tensor files.

use std::fs;
use std::path::Path;

use tubalg_core::{Domain, Tensor3, C64};

use crate::{CliError, FormatError};

pub const MAGIC: &[u8; 4] = b"TBT1";
const HEADER: usize = 4 + 3 * 8 + 1;

/// Writes real data with flag 0 when every imaginary part is exactly zero.
pub fn encode(t: &Tensor3) -> Vec<u8> {
    let real = t.is_real();
    let (m, p, n) = t.dims();
    let mut out = Vec::with_capacity(HEADER + t.len() * if real { 8 } else { 16 });
    out.extend_from_slice(MAGIC);
    for d in [m, p, n] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.push(if real { 0 } else { 1 });
    for z in t.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        if !real {
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

/// Decodes a spatial-domain tensor.
pub fn decode(bytes: &[u8]) -> Result<Tensor3, FormatError> {
    let take = |offset: usize, len: usize, what: &'static str| {
        bytes.get(offset..offset + len).ok_or(FormatError::Truncated {
            offset,
            what,
            needed: len,
            available: bytes.len().saturating_sub(offset),
        })
    };
    let magic = take(0, 4, "magic")?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic { found: magic.to_vec() });
    }
    let mut dims = [0u64; 3];
    for (i, d) in dims.iter_mut().enumerate() {
        *d = u64::from_le_bytes(take(4 + 8 * i, 8, "dimensions")?.try_into().unwrap());
    }
    let flag = take(28, 1, "domain flag")?[0];
    let width = match flag {
        0 => 8,
        1 => 16,
        _ => return Err(FormatError::BadFlag { offset: 28, flag }),
    };
    let overflow = FormatError::Overflow {
        offset: 4,
        dims: (dims[0], dims[1], dims[2]),
    };
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| usize::try_from(d).ok().and_then(|d| acc.checked_mul(d)))
        .ok_or(overflow.clone())?;
    let body_len = count.checked_mul(width).ok_or(overflow)?;
    let body = take(HEADER, body_len, "values")?;
    if bytes.len() > HEADER + body_len {
        return Err(FormatError::Trailing {
            offset: HEADER + body_len,
            extra: bytes.len() - HEADER - body_len,
        });
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let values: Vec<C64> = body
        .chunks_exact(width)
        .map(|c| if flag == 0 { C64::new(f(c), 0.0) } else { C64::new(f(&c[..8]), f(&c[8..])) })
        .collect();
    let (m, p, n) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    Ok(Tensor3::from_complex(m, p, n, values, Domain::Spatial).expect("length checked above"))
}

pub fn read(path: &Path) -> Result<Tensor3, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|source| CliError::Format {
        path: path.into(),
        source,
    })
}

pub fn write(path: &Path, t: &Tensor3) -> Result<(), CliError> {
    fs::write(path, encode(t)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_real_and_complex() {
        let real = Tensor3::from_fn(2, 3, 4, |i, j, k| C64::new((i + 10 * j + 100 * k) as f64 - 0.5, 0.0));
        let bytes = encode(&real);
        assert_eq!(bytes[28], 0);
        assert_eq!(bytes.len(), HEADER + 24 * 8);
        // (1, 2, 3) sits at 1 + 2·(2 + 3·3)
        let at = HEADER + 8 * (1 + 2 * (2 + 3 * 3));
        assert_eq!(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()), 320.5);
        assert_eq!(decode(&bytes).unwrap(), real);

        let cplx = Tensor3::from_fn(1, 2, 2, |i, j, k| C64::new(j as f64, (i + k) as f64 + 0.25));
        let bytes = encode(&cplx);
        assert_eq!(bytes[28], 1);
        assert_eq!(decode(&bytes).unwrap(), cplx);
    }

    #[test]
    fn errors_name_offsets() {
        let t = Tensor3::from_real(1, 1, 2, &[1.0, 2.0]).unwrap();
        let good = encode(&t);
        assert!(matches!(decode(b"TBT2"), Err(FormatError::BadMagic { .. })));
        let e = decode(&good[..10]).unwrap_err();
        assert!(e.to_string().starts_with("byte 4:"), "{e}");
        let mut bad = good.clone();
        bad[28] = 7;
        assert_eq!(decode(&bad), Err(FormatError::BadFlag { offset: 28, flag: 7 }));
        let e = decode(&good[..good.len() - 3]).unwrap_err();
        assert!(e.to_string().starts_with("byte 29:"), "{e}");
        let mut long = good.clone();
        long.push(0);
        assert_eq!(decode(&long), Err(FormatError::Trailing { offset: 45, extra: 1 }));
        let mut huge = good;
        huge[4..12].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode(&huge), Err(FormatError::Overflow { offset: 4, .. })));
    }

    #[test]
    fn empty_tensor() {
        let t = Tensor3::zeros(0, 3, 2);
        assert_eq!(decode(&encode(&t)).unwrap(), t);
    }
}
