//! Binary snapshot files.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `BULB` | 4 bytes |
//! | format version | u32 |
//! | n | u32 |
//! | time (`t`, or `s` in the renormalized frame) | f64 |
//! | ν | f64 |
//! | frame (0 physical, 1 renormalized) | u8 |
//! | α | f64 |
//! | μ family (0 constant, 1 power law, 2 exp-gradient, 3 exp-enstrophy, 255 none) | u8 |
//! | μ parameters | 3 × f64 |
//! | physical time `t` | f64 |
//! | `log μ` | f64 |
//! | box side | f64 |
//! | lattice origin | f64 |
//! | provenance (0 synthesized, 1 run limit, 2 external) | u8 |
//! | manifest hash (SHA-256, zero if none) | 32 bytes |
//! | velocity | 3·n³ × f64, component-major, x fastest |

use std::path::Path;

use bulb_core::diagnostics::Frame;
use bulb_core::profile::Provenance;
use bulb_core::spectral::{Field, GridSpec};

use crate::error::CliError;

pub const MAGIC: &[u8; 4] = b"BULB";
pub const FORMAT_VERSION: u32 = 1;
pub const MU_NONE: u8 = 255;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 1 + 8 + 1 + 24 + 8 + 8 + 8 + 8 + 1 + 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub time: f64,
    pub viscosity: f64,
    pub frame: Frame,
    pub alpha: f64,
    pub mu_family: u8,
    pub mu_params: [f64; 3],
    pub phys_time: f64,
    pub log_mu: f64,
    pub provenance: Provenance,
    pub manifest: [u8; 32],
}

impl SnapshotMeta {
    pub fn physical(t: f64, viscosity: f64) -> Self {
        SnapshotMeta {
            time: t,
            viscosity,
            frame: Frame::Physical,
            alpha: 0.0,
            mu_family: MU_NONE,
            mu_params: [0.0; 3],
            phys_time: t,
            log_mu: 0.0,
            provenance: Provenance::RunLimit,
            manifest: [0; 32],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub meta: SnapshotMeta,
    pub field: Field,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let s = self.buf.get(self.pos..self.pos + N)?;
        self.pos += N;
        s.try_into().ok()
    }
    fn u8(&mut self) -> Option<u8> {
        self.take::<1>().map(|b| b[0])
    }
    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }
    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

impl Snapshot {
    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let p = self.field.as_physical().map_err(|e| CliError::Numerical(e.to_string()))?;
        let g = *p.grid();
        let m = &self.meta;
        let mut out = Vec::with_capacity(HEADER_LEN + 24 * g.len_physical());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(g.n as u32).to_le_bytes());
        out.extend_from_slice(&m.time.to_le_bytes());
        out.extend_from_slice(&m.viscosity.to_le_bytes());
        out.push(match m.frame {
            Frame::Physical => 0,
            Frame::Renormalized => 1,
        });
        out.extend_from_slice(&m.alpha.to_le_bytes());
        out.push(m.mu_family);
        for x in m.mu_params {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&m.phys_time.to_le_bytes());
        out.extend_from_slice(&m.log_mu.to_le_bytes());
        out.extend_from_slice(&g.domain_length.to_le_bytes());
        out.extend_from_slice(&g.origin.to_le_bytes());
        out.push(m.provenance.code());
        out.extend_from_slice(&m.manifest);
        for c in p.physical().map_err(|e| CliError::Numerical(e.to_string()))? {
            for x in c {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    /// Parses a snapshot; `dealias_fraction` is not stored and is supplied by
    /// the caller.
    pub fn from_bytes(buf: &[u8], dealias_fraction: f64) -> Result<Self, String> {
        let mut r = Reader { buf, pos: 0 };
        let (h, meta) = parse_header(&mut r)?;
        let grid = GridSpec::new(h.n)
            .and_then(|g| g.with_domain_length(h.length))
            .and_then(|g| g.with_origin(h.origin))
            .and_then(|g| g.with_dealias_fraction(dealias_fraction))
            .map_err(|e| e.to_string())?;
        let len = grid.len_physical();
        if buf.len() != HEADER_LEN + 24 * len {
            return Err(format!("expected {} bytes for n = {}, found {}", HEADER_LEN + 24 * len, h.n, buf.len()));
        }
        let comps: [Vec<f64>; 3] = std::array::from_fn(|_| (0..len).map(|_| r.f64().unwrap()).collect());
        let field = Field::from_physical(grid, comps).map_err(|e| e.to_string())?;
        Ok(Snapshot { meta, field })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path, dealias_fraction: f64) -> Result<Self, CliError> {
        let buf = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Snapshot::from_bytes(&buf, dealias_fraction).map_err(|message| CliError::Snapshot {
            path: path.display().to_string(),
            message,
        })
    }
}

struct Lattice {
    n: usize,
    length: f64,
    origin: f64,
}

fn parse_header(r: &mut Reader<'_>) -> Result<(Lattice, SnapshotMeta), String> {
    let short = || "truncated header".to_string();
    if &r.take::<4>().ok_or_else(short)? != MAGIC {
        return Err("missing BULB magic".into());
    }
    let version = r.u32().ok_or_else(short)?;
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let n = r.u32().ok_or_else(short)? as usize;
    let time = r.f64().ok_or_else(short)?;
    let viscosity = r.f64().ok_or_else(short)?;
    let frame = match r.u8().ok_or_else(short)? {
        0 => Frame::Physical,
        1 => Frame::Renormalized,
        f => return Err(format!("unknown frame flag {f}")),
    };
    let alpha = r.f64().ok_or_else(short)?;
    let mu_family = r.u8().ok_or_else(short)?;
    let mut mu_params = [0.0; 3];
    for x in mu_params.iter_mut() {
        *x = r.f64().ok_or_else(short)?;
    }
    let phys_time = r.f64().ok_or_else(short)?;
    let log_mu = r.f64().ok_or_else(short)?;
    let length = r.f64().ok_or_else(short)?;
    let origin = r.f64().ok_or_else(short)?;
    let prov = r.u8().ok_or_else(short)?;
    let provenance = Provenance::from_code(prov).ok_or_else(|| format!("unknown provenance {prov}"))?;
    let manifest = r.take::<32>().ok_or_else(short)?;
    Ok((
        Lattice { n, length, origin },
        SnapshotMeta {
            time,
            viscosity,
            frame,
            alpha,
            mu_family,
            mu_params,
            phys_time,
            log_mu,
            provenance,
            manifest,
        },
    ))
}

/// Header fields of a snapshot file without loading the velocity.
pub fn read_meta(path: &Path) -> Result<SnapshotMeta, CliError> {
    use std::io::Read;
    let mut buf = vec![0u8; HEADER_LEN];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut buf))
        .map_err(|e| CliError::io(path, e))?;
    parse_header(&mut Reader { buf: &buf, pos: 0 })
        .map(|(_, m)| m)
        .map_err(|message| CliError::Snapshot {
            path: path.display().to_string(),
            message,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bulb_core::init::random_field;

    #[test]
    fn round_trip_is_bitwise() {
        let g = GridSpec::centered(8, 1.5).unwrap();
        let f = random_field(g, 3);
        let mut meta = SnapshotMeta::physical(0.25, 0.1);
        meta.frame = Frame::Renormalized;
        meta.alpha = 1.5;
        meta.mu_family = 1;
        meta.mu_params = [1.0, 2.0, 0.0];
        meta.manifest[0] = 7;
        let s = Snapshot { meta, field: f.clone() };
        let b = s.to_bytes().unwrap();
        assert_eq!(&b[..4], b"BULB");
        let r = Snapshot::from_bytes(&b, g.dealias_fraction).unwrap();
        assert_eq!(r.meta, s.meta);
        assert_eq!(r.field.physical().unwrap(), f.physical().unwrap());
        assert_eq!(*r.field.grid(), g);
        assert!(Snapshot::from_bytes(&b[..b.len() - 1], 2.0 / 3.0).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Snapshot::from_bytes(&bad, 2.0 / 3.0).is_err());
    }
}
