use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::layout::GenomeLayout;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RISNEGEN";
const VERSION: u32 = 1;

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse {
        record: 0,
        message: message.into(),
    }
}

/// Header (magic, version, layout fingerprint, length) then little-endian f64s.
pub fn write_genome<W: Write>(mut w: W, layout: &GenomeLayout, genome: &[f64]) -> Result<()> {
    if genome.len() != layout.len() {
        return Err(crate::error::invalid_input(format!(
            "genome has {} entries, layout expects {}",
            genome.len(),
            layout.len()
        )));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&layout.fingerprint().to_le_bytes())?;
    w.write_all(&(genome.len() as u64).to_le_bytes())?;
    for v in genome {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a genome and checks it was written for `layout`.
pub fn read_genome<R: Read>(mut r: R, layout: &GenomeLayout) -> Result<Vec<f64>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(parse_err("not a genome file"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(parse_err(format!("unsupported genome version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let fingerprint = u64::from_le_bytes(b8);
    if fingerprint != layout.fingerprint() {
        return Err(parse_err("genome was saved for a different architecture"));
    }
    r.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    if len != layout.len() {
        return Err(parse_err(format!("genome length {len}, layout expects {}", layout.len())));
    }
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(parse_err("trailing bytes after genome"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn save_genome(path: &Path, layout: &GenomeLayout, genome: &[f64]) -> Result<()> {
    write_genome(BufWriter::new(File::create(path)?), layout, genome)
}

pub fn load_genome(path: &Path, layout: &GenomeLayout) -> Result<Vec<f64>> {
    read_genome(BufReader::new(File::open(path)?), layout)
}
