//! Binary checkpoints of a [`SimState`].
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "SMAGCKPT"
//! version  u32
//! N        u32
//! L        f64
//! t        f64
//! step     u64
//! ncomp    u32
//! count    u64      complex values in the payload
//! payload  count × (re f64, im f64), component-major, row-major modes
//! checksum u64      FNV-1a over every preceding byte
//! ```

use std::path::Path;

use num_complex::Complex64;

use super::write_atomic;
use crate::error::{CheckpointError, Error, Result};
use crate::integrator::SimState;
use crate::spectral::{Grid, SpectralField, SpectralVelocity};

pub const MAGIC: &[u8; 8] = b"SMAGCKPT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8 + 8 + 4 + 8;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn encode(state: &SimState) -> Vec<u8> {
    let f = state.u.field();
    let g = f.grid();
    let count = f.ncomp() * g.len();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * count + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    out.extend_from_slice(&g.length().to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    out.extend_from_slice(&state.step_index.to_le_bytes());
    out.extend_from_slice(&(f.ncomp() as u32).to_le_bytes());
    out.extend_from_slice(&(count as u64).to_le_bytes());
    for c in f.comps() {
        for z in c {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> [u8; K] {
        let out = self.bytes[self.pos..self.pos + K].try_into().expect("length checked");
        self.pos += K;
        out
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<SimState, CheckpointError> {
    if bytes.len() >= 8 && &bytes[..8] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let mut r = Reader { bytes, pos: 8 };
    let version = r.u32();
    if version != VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let n = r.u32() as usize;
    let length = r.f64();
    let t = r.f64();
    let step_index = r.u64();
    let ncomp = r.u32() as usize;
    let count = r.u64();
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(16))
        .and_then(|p| p.checked_add(HEADER_LEN + 8))
        .ok_or_else(|| CheckpointError::Grid(format!("payload length {count} overflows")))?;
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CheckpointError::Grid(format!(
            "{} trailing bytes after checksum",
            bytes.len() - expected
        )));
    }
    let body = expected - 8;
    let stored = u64::from_le_bytes(bytes[body..].try_into().expect("8 bytes"));
    let computed = fnv1a64(&bytes[..body]);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }
    let grid = Grid::new(n, length).map_err(|e| CheckpointError::Grid(e.to_string()))?;
    if ncomp != 2 || count as usize != 2 * grid.len() {
        return Err(CheckpointError::Grid(format!(
            "velocity needs 2 × {} coefficients, found {ncomp} components and {count} values",
            grid.len()
        )));
    }
    let comps = (0..ncomp)
        .map(|_| (0..grid.len()).map(|_| Complex64::new(r.f64(), r.f64())).collect())
        .collect();
    let field = SpectralField::new(grid, comps).map_err(|e| CheckpointError::Grid(e.to_string()))?;
    Ok(SimState {
        t,
        u: SpectralVelocity::from_projected(field),
        step_index,
    })
}

pub fn save_checkpoint(state: &SimState, path: &Path) -> Result<()> {
    write_atomic(path, &encode(state))
}

pub fn load_checkpoint(path: &Path) -> Result<SimState> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::RandomICSpec;

    fn state() -> SimState {
        let g = Grid::new(16, 3.0).unwrap();
        let u = RandomICSpec { peak_k: 2.0, amplitude: 0.7 }.generate(&g, 5).unwrap();
        SimState { t: 0.1 + 0.2, u, step_index: 12345 }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = state();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ckpt");
        save_checkpoint(&s, &p).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(back.t.to_bits(), s.t.to_bits());
        assert_eq!(back.step_index, s.step_index);
        assert_eq!(back.u.grid(), s.u.grid());
        for (a, b) in back.u.field().comps().iter().zip(s.u.field().comps()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!((x.re.to_bits(), x.im.to_bits()), (y.re.to_bits(), y.im.to_bits()));
            }
        }
        assert_eq!(encode(&back), encode(&s));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn corruption_is_detected_distinctly() {
        let good = encode(&state());
        let mut flipped = good.clone();
        flipped[HEADER_LEN + 37] ^= 0x01;
        assert!(matches!(decode(&flipped), Err(CheckpointError::Checksum { .. })));
        let mut clock = good.clone();
        clock[28] ^= 0x80;
        assert!(matches!(decode(&clock), Err(CheckpointError::Checksum { .. })));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(CheckpointError::Truncated { .. })
        ));
        assert!(matches!(decode(&good[..20]), Err(CheckpointError::Truncated { .. })));
        let mut version = good.clone();
        version[8] = 9;
        assert_eq!(
            decode(&version).unwrap_err(),
            CheckpointError::Version { found: 9, expected: VERSION }
        );
        let mut magic = good.clone();
        magic[0] = b'X';
        assert_eq!(decode(&magic).unwrap_err(), CheckpointError::BadMagic);
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode(&long), Err(CheckpointError::Grid(_))));
        assert!(matches!(
            load_checkpoint(Path::new("/nonexistent/c.ckpt")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn odd_grid_is_refused() {
        let mut bytes = encode(&state());
        bytes[12..16].copy_from_slice(&15u32.to_le_bytes());
        let body = bytes.len() - 8;
        let sum = fnv1a64(&bytes[..body]);
        bytes[body..].copy_from_slice(&sum.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(CheckpointError::Grid(_))));
    }
}
