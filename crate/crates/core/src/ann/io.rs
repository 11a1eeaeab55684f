//! Binary persistence for [`PqIndex`].
//!
//! Little-endian layout:
//!
//! ```text
//! magic      4 bytes  "PQIX"
//! version    u16      1
//! m          u32      subspaces
//! kc         u32      centroids per subspace
//! d          u32      vector dimension
//! n          u64      stored vectors
//! codebooks  m * kc * (d / m) f64, subspace-major then centroid-major
//! codes      n * m u16, row-major
//! keys       n records of (u32 byte length, UTF-8 IRI bytes)
//! ```

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{AnnError, PqIndex};
use crate::ontology::Iri;

pub const MAGIC: &[u8; 4] = b"PQIX";
pub const VERSION: u16 = 1;
/// Sanity bound on the stored dimension, checked before allocating.
const MAX_DIM: usize = 1 << 20;

fn io_err(e: std::io::Error) -> AnnError {
    AnnError::Io(e.to_string())
}

pub fn write_index(index: &PqIndex, mut w: impl Write) -> Result<(), AnnError> {
    let to_u32 = |v: usize, what: &str| u32::try_from(v).map_err(|_| AnnError::Format(format!("{what} {v} exceeds u32")));
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_u16::<LittleEndian>(VERSION).map_err(io_err)?;
    w.write_u32::<LittleEndian>(to_u32(index.m, "m")?).map_err(io_err)?;
    w.write_u32::<LittleEndian>(to_u32(index.kc, "kc")?).map_err(io_err)?;
    w.write_u32::<LittleEndian>(to_u32(index.d, "d")?).map_err(io_err)?;
    w.write_u64::<LittleEndian>(index.keys.len() as u64).map_err(io_err)?;
    for book in &index.codebooks {
        for centroid in book {
            for &x in centroid {
                w.write_f64::<LittleEndian>(x).map_err(io_err)?;
            }
        }
    }
    for code in &index.codes {
        for &c in code {
            w.write_u16::<LittleEndian>(c).map_err(io_err)?;
        }
    }
    for key in &index.keys {
        let bytes = key.as_str().as_bytes();
        w.write_u32::<LittleEndian>(to_u32(bytes.len(), "key length")?).map_err(io_err)?;
        w.write_all(bytes).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_index(mut r: impl Read) -> Result<PqIndex, AnnError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(AnnError::Format(format!("bad magic {magic:?}")));
    }
    let version = r.read_u16::<LittleEndian>().map_err(io_err)?;
    if version != VERSION {
        return Err(AnnError::Format(format!("unsupported version {version}")));
    }
    let m = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let kc = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let d = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let n = usize::try_from(r.read_u64::<LittleEndian>().map_err(io_err)?)
        .map_err(|_| AnnError::Format("vector count overflows".into()))?;
    if m == 0 || !d.is_multiple_of(m) {
        return Err(AnnError::BadShape { d, m });
    }
    if d > MAX_DIM {
        return Err(AnnError::Format(format!("dimension {d} exceeds {MAX_DIM}")));
    }
    if kc == 0 || kc > usize::from(u16::MAX) + 1 {
        return Err(AnnError::Format(format!("invalid centroid count {kc}")));
    }
    let sub = d / m;
    let mut codebooks = Vec::with_capacity(m);
    for _ in 0..m {
        let mut book = Vec::with_capacity(kc);
        for _ in 0..kc {
            let mut centroid = vec![0.0; sub];
            r.read_f64_into::<LittleEndian>(&mut centroid).map_err(io_err)?;
            if centroid.iter().any(|x| !x.is_finite()) {
                return Err(AnnError::Format("non-finite centroid".into()));
            }
            book.push(centroid);
        }
        codebooks.push(book);
    }
    // Counts come from the file, so do not trust them for allocation.
    let mut codes = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let mut code = vec![0u16; m];
        r.read_u16_into::<LittleEndian>(&mut code).map_err(io_err)?;
        if let Some(&bad) = code.iter().find(|&&c| c as usize >= kc) {
            return Err(AnnError::Format(format!("code {bad} out of range for {kc} centroids")));
        }
        codes.push(code);
    }
    let mut keys = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let len = u64::from(r.read_u32::<LittleEndian>().map_err(io_err)?);
        let mut buf = Vec::new();
        (&mut r).take(len).read_to_end(&mut buf).map_err(io_err)?;
        if buf.len() as u64 != len {
            return Err(AnnError::Io("truncated key".into()));
        }
        let s = String::from_utf8(buf).map_err(|e| AnnError::Format(format!("key is not UTF-8: {e}")))?;
        keys.push(Iri::new(s).map_err(|e| AnnError::Format(e.to_string()))?);
    }
    Ok(PqIndex {
        m,
        kc,
        d,
        codebooks,
        codes,
        keys,
    })
}
