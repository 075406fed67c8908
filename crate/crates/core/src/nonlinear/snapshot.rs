//! Binary field snapshots.
//!
//! Layout (little-endian): magic `STRATFLD`, `u32` version, `u32` Nx, `u32` Ny,
//! then `f64` t, β, ν, κ, followed by `Nx·Ny` values of ω and then `Nx·Ny`
//! values of θ, each row-major with rows indexed by `y`.

use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 8] = b"STRATFLD";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Snapshot {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.nx as u32).to_le_bytes())?;
        w.write_all(&(self.ny as u32).to_le_bytes())?;
        for v in [self.t, self.beta, self.nu, self.kappa] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in self.omega.iter().chain(&self.theta) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(52 + 16 * self.omega.len());
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(mut r: R) -> io::Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "bad snapshot magic",
            ));
        }
        let mut u = [0u8; 4];
        let mut read_u32 = |r: &mut R| -> io::Result<u32> {
            r.read_exact(&mut u)?;
            Ok(u32::from_le_bytes(u))
        };
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("unsupported snapshot version {version}"),
            ));
        }
        let nx = read_u32(&mut r)? as usize;
        let ny = read_u32(&mut r)? as usize;
        let mut f = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> io::Result<f64> {
            r.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let t = read_f64(&mut r)?;
        let beta = read_f64(&mut r)?;
        let nu = read_f64(&mut r)?;
        let kappa = read_f64(&mut r)?;
        let omega = (0..nx * ny)
            .map(|_| read_f64(&mut r))
            .collect::<io::Result<_>>()?;
        let theta = (0..nx * ny)
            .map(|_| read_f64(&mut r))
            .collect::<io::Result<_>>()?;
        Ok(Self {
            nx,
            ny,
            t,
            beta,
            nu,
            kappa,
            omega,
            theta,
        })
    }
}
