//! CSV and run-length binary export of arrival times and fronts.

use std::io::{self, Read, Write};

use super::front::{GridFront, UNREACHED};
use super::{GridConfig, PassageMap};

const MAGIC: &[u8; 4] = b"GHRL";

fn header(cfg: &GridConfig) -> String {
    ["x", "y", "z"][..cfg.dim].join(",")
}

fn coords(cfg: &GridConfig, idx: usize) -> String {
    let p = cfg.point(idx);
    p[..cfg.dim].iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",")
}

impl PassageMap {
    /// One row per node: centre then arrival time (`inf` when unreached).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let cfg = self.grid();
        writeln!(w, "{},theta", header(cfg))?;
        for (i, t) in self.times().iter().enumerate() {
            writeln!(w, "{},{}", coords(cfg, i), t)?;
        }
        Ok(())
    }

    /// Run-length encoding of the arrival-time bit patterns.
    pub fn write_rle<W: Write>(&self, w: W) -> io::Result<()> {
        let words: Vec<u64> = self.times().iter().map(|t| t.to_bits()).collect();
        write_runs(w, self.grid(), 8, &words)
    }
}

impl GridFront {
    /// One row per covered node: centre then first covering step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let cfg = self.grid();
        writeln!(w, "{},step", header(cfg))?;
        for (i, &k) in self.steps().iter().enumerate() {
            if k != UNREACHED {
                writeln!(w, "{},{}", coords(cfg, i), k)?;
            }
        }
        Ok(())
    }

    pub fn write_rle<W: Write>(&self, w: W) -> io::Result<()> {
        let words: Vec<u64> = self.steps().iter().map(|&k| k as u64).collect();
        write_runs(w, self.grid(), 4, &words)
    }
}

fn write_runs<W: Write>(mut w: W, cfg: &GridConfig, width: u8, words: &[u64]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[cfg.dim as u8, width])?;
    for v in [cfg.h, cfg.dt] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in cfg.window.lo {
        w.write_all(&v.to_le_bytes())?;
    }
    for n in cfg.dims() {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    let mut i = 0;
    while i < words.len() {
        let mut j = i + 1;
        while j < words.len() && words[j] == words[i] && j - i < u32::MAX as usize {
            j += 1;
        }
        w.write_all(&((j - i) as u32).to_le_bytes())?;
        let bytes = words[i].to_le_bytes();
        w.write_all(&bytes[..width as usize])?;
        i = j;
    }
    Ok(())
}

/// Decoded run-length file: grid geometry plus one word per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RleGrid {
    pub dim: usize,
    pub h: f64,
    pub dt: f64,
    pub lo: [f64; 3],
    pub dims: [usize; 3],
    pub words: Vec<u64>,
}

impl RleGrid {
    /// Words reinterpreted as arrival times.
    pub fn times(&self) -> Vec<f64> {
        self.words.iter().map(|w| f64::from_bits(*w)).collect()
    }
}

pub fn read_rle<R: Read>(mut r: R) -> io::Result<RleGrid> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a run-length grid file"));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let (dim, width) = (b2[0] as usize, b2[1] as usize);
    if width != 4 && width != 8 {
        return Err(bad("unsupported word width"));
    }
    let mut f8 = [0u8; 8];
    let mut read_f = |r: &mut R| -> io::Result<f64> {
        r.read_exact(&mut f8)?;
        Ok(f64::from_le_bytes(f8))
    };
    let h = read_f(&mut r)?;
    let dt = read_f(&mut r)?;
    let lo = [read_f(&mut r)?, read_f(&mut r)?, read_f(&mut r)?];
    let mut dims = [0usize; 3];
    let mut u4 = [0u8; 4];
    for d in dims.iter_mut() {
        r.read_exact(&mut u4)?;
        *d = u32::from_le_bytes(u4) as usize;
    }
    let total = dims[0] * dims[1] * dims[2];
    let mut words = Vec::with_capacity(total);
    while words.len() < total {
        r.read_exact(&mut u4)?;
        let run = u32::from_le_bytes(u4) as usize;
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf[..width])?;
        let mut v = u64::from_le_bytes(buf);
        if width == 4 && v == u32::MAX as u64 {
            v = UNREACHED as u64;
        }
        if run == 0 || words.len() + run > total {
            return Err(bad("corrupt run length"));
        }
        words.extend(std::iter::repeat(v).take(run));
    }
    Ok(RleGrid {
        dim,
        h,
        dt,
        lo,
        dims,
        words,
    })
}
