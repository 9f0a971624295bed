//! Channel traces on disk. A trace file starts with one metadata line
//!
//! ```text
//! # risne-trace v1 n_tx=4 n_ris=16 ris_count=1
//! ```
//!
//! followed by a CSV table with a header row. Each data row is one
//! coherence block: `episode, step`, then `h`, then for every RIS the
//! row-major `H1` and `h2`, every complex entry written as a `re, im` pair.
//! Episodes and steps must be contiguous and start at zero.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::export::csv_error;
use crate::channel::{ChannelSet, ScenarioConfig};
use crate::cosyne::episode_rngs;
use crate::channel::ChannelModel;
use crate::error::{dim_mismatch, Error, Result};
use crate::numerics::ComplexMatrix;

const MAGIC: &str = "# risne-trace v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceDims {
    pub n_tx: usize,
    pub n_ris: usize,
    pub ris_count: usize,
}

impl TraceDims {
    pub fn of(cs: &ChannelSet) -> Self {
        Self {
            n_tx: cs.n_tx(),
            n_ris: cs.n_ris(),
            ris_count: cs.ris_count(),
        }
    }

    fn complex_count(&self) -> usize {
        self.n_tx + self.ris_count * (self.n_tx * self.n_ris + self.n_ris)
    }

    fn header(&self) -> Vec<String> {
        let mut cols = vec!["episode".to_string(), "step".to_string()];
        let mut pair = |name: String| {
            cols.push(format!("{name}_re"));
            cols.push(format!("{name}_im"));
        };
        for i in 0..self.n_tx {
            pair(format!("h_{i}"));
        }
        for k in 0..self.ris_count {
            for r in 0..self.n_tx {
                for c in 0..self.n_ris {
                    pair(format!("h1_{k}_{r}_{c}"));
                }
            }
            for i in 0..self.n_ris {
                pair(format!("h2_{k}_{i}"));
            }
        }
        cols
    }
}

fn parse_error(record: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        record,
        message: message.into(),
    }
}

pub fn write_trace<W: Write>(w: W, episodes: &[Vec<ChannelSet>]) -> Result<()> {
    let first = episodes
        .iter()
        .flat_map(|e| e.first())
        .next()
        .ok_or_else(|| crate::error::invalid_input("cannot write an empty trace"))?;
    let dims = TraceDims::of(first);
    let mut w = w;
    writeln!(w, "{MAGIC} n_tx={} n_ris={} ris_count={}", dims.n_tx, dims.n_ris, dims.ris_count)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(dims.header()).map_err(csv_error)?;
    let mut row: Vec<String> = Vec::with_capacity(2 + 2 * dims.complex_count());
    for (e, episode) in episodes.iter().enumerate() {
        for (t, cs) in episode.iter().enumerate() {
            cs.check_dims(dims.n_tx, dims.n_ris, dims.ris_count)?;
            row.clear();
            row.push(e.to_string());
            row.push(t.to_string());
            let mut push = |z: &Complex64| {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            };
            cs.h.as_slice().iter().for_each(&mut push);
            for (h1, h2) in cs.h1.iter().zip(&cs.h2) {
                h1.as_slice().iter().for_each(&mut push);
                h2.as_slice().iter().for_each(&mut push);
            }
            out.write_record(&row).map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_dims(line: &str) -> Result<TraceDims> {
    let rest = line
        .trim_end()
        .strip_prefix(MAGIC)
        .ok_or_else(|| parse_error(0, format!("missing '{MAGIC}' metadata line")))?;
    let (mut n_tx, mut n_ris, mut ris_count) = (None, None, None);
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_error(0, format!("malformed metadata field '{field}'")))?;
        let value: usize = value
            .parse()
            .map_err(|_| parse_error(0, format!("metadata '{key}' is not a count")))?;
        match key {
            "n_tx" => n_tx = Some(value),
            "n_ris" => n_ris = Some(value),
            "ris_count" => ris_count = Some(value),
            _ => return Err(parse_error(0, format!("unknown metadata field '{key}'"))),
        }
    }
    match (n_tx, n_ris, ris_count) {
        (Some(n_tx), Some(n_ris), Some(ris_count)) if n_tx > 0 && n_ris > 0 && ris_count > 0 => Ok(TraceDims {
            n_tx,
            n_ris,
            ris_count,
        }),
        _ => Err(parse_error(0, "metadata needs positive n_tx, n_ris and ris_count")),
    }
}

/// Reads a trace. Parse errors carry the 1-based data record index; record
/// 0 refers to the metadata or header.
pub fn read_trace<R: Read>(mut r: R) -> Result<Vec<Vec<ChannelSet>>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (meta, body) = text.split_once('\n').unwrap_or((&text, ""));
    let dims = parse_dims(meta)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    let expected = dims.header();
    if header.len() != expected.len() || header.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(parse_error(
            0,
            format!("header has {} columns, dims require {}", header.len(), expected.len()),
        ));
    }
    let mut episodes: Vec<Vec<ChannelSet>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let n = i + 1;
        let rec = rec.map_err(|e| parse_error(n, e.to_string()))?;
        let index = |col: usize| -> Result<usize> {
            rec[col]
                .trim()
                .parse()
                .map_err(|_| parse_error(n, format!("column '{}' is not an index: '{}'", expected[col], &rec[col])))
        };
        let (e, t) = (index(0)?, index(1)?);
        let mut values = Vec::with_capacity(dims.complex_count());
        for c in (2..rec.len()).step_by(2) {
            let num = |col: usize| -> Result<f64> {
                rec[col]
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(n, format!("column '{}' is not a number: '{}'", expected[col], &rec[col])))
            };
            values.push(Complex64::new(num(c)?, num(c + 1)?));
        }
        if e == episodes.len() {
            episodes.push(Vec::new());
        } else if e + 1 != episodes.len() {
            return Err(parse_error(n, format!("episode {e} out of order")));
        }
        let ep = episodes.last_mut().expect("pushed above");
        if t != ep.len() {
            return Err(parse_error(n, format!("step {t} out of order in episode {e}, expected {}", ep.len())));
        }
        ep.push(unflatten(&dims, values));
    }
    if episodes.is_empty() {
        return Err(parse_error(0, "trace holds no coherence blocks"));
    }
    Ok(episodes)
}

fn unflatten(d: &TraceDims, values: Vec<Complex64>) -> ChannelSet {
    let mut it = values.into_iter();
    let mut take = |rows: usize, cols: usize| {
        ComplexMatrix::from_vec(rows, cols, it.by_ref().take(rows * cols).collect()).expect("counted by header")
    };
    let h = take(d.n_tx, 1);
    let mut h1 = Vec::with_capacity(d.ris_count);
    let mut h2 = Vec::with_capacity(d.ris_count);
    for _ in 0..d.ris_count {
        h1.push(take(d.n_tx, d.n_ris));
        h2.push(take(d.n_ris, 1));
    }
    ChannelSet { h, h1, h2 }
}

pub fn save_trace(path: &Path, episodes: &[Vec<ChannelSet>]) -> Result<()> {
    let mut buf = Vec::new();
    write_trace(&mut buf, episodes)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<Vec<ChannelSet>>> {
    read_trace(fs::File::open(path)?)
}

/// Rejects a trace whose dims differ from the scenario.
pub fn check_trace(episodes: &[Vec<ChannelSet>], cfg: &ScenarioConfig) -> Result<()> {
    for cs in episodes.iter().flatten() {
        cs.check_dims(cfg.n_tx, cfg.n_ris, cfg.ris_count).map_err(|e| dim_mismatch(format!("trace vs scenario: {e}")))?;
    }
    Ok(())
}

/// Draws `episodes x horizon` blocks from the scenario model using the same
/// per-episode channel streams as a rollout with `seed`.
pub fn sample_trace(cfg: &ScenarioConfig, episodes: usize, seed: u64) -> Result<Vec<Vec<ChannelSet>>> {
    let model = ChannelModel::new(cfg)?;
    Ok((0..episodes)
        .map(|e| {
            let mut rng = episode_rngs(seed, e).0;
            (0..cfg.horizon).map(|_| model.sample(&mut rng)).collect()
        })
        .collect())
}
