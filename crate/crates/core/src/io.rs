//! Series text files and the binary trajectory checkpoint.
//!
//! A series file is tab-delimited text. Leading `# key: value` lines carry
//! metadata, the last header line `# columns: ...` names the columns. Values
//! are written with the shortest representation that parses back to the same
//! bits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocol::PulseSchedule;
use crate::state::ManyBodyState;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} values, series has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            if k.contains(':') || k.contains('\n') || v.contains('\n') {
                return Err(Error::Format(format!("metadata entry {k:?} cannot be encoded")));
            }
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "# columns: {}", self.columns.join("\t"))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push('\t');
                }
                line.push_str(&format!("{v:e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut out = Series::default();
        let mut have_columns = false;
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest
                    .split_once(": ")
                    .or_else(|| rest.strip_suffix(':').map(|k| (k, "")))
                    .ok_or_else(|| Error::Format(format!("line {}: bad header", no + 1)))?;
                if k == "columns" {
                    out.columns = v.split('\t').map(str::to_string).collect();
                    have_columns = true;
                } else {
                    out.meta.push((k.to_string(), v.to_string()));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            if !have_columns {
                return Err(Error::Format("data before the columns header".into()));
            }
            let row = line
                .split('\t')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Format(format!("line {}: {e}", no + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            out.push(row)
                .map_err(|e| Error::Format(format!("line {}: {e}", no + 1)))?;
        }
        if !have_columns {
            return Err(Error::Format("missing columns header".into()));
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FBTRAJ\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub particles: u32,
    pub n_orb: u32,
    pub wells: u32,
    pub depth: f64,
    pub kinetic: f64,
    pub g_in: f64,
    pub g_f: f64,
    pub tau: f64,
    pub pulses: u32,
    pub t_end: f64,
    pub count: u64,
    pub dim: u64,
}

impl CheckpointHeader {
    pub fn schedule(&self) -> Result<PulseSchedule> {
        PulseSchedule::new(self.g_in, self.g_f, self.tau, self.pulses as usize, self.t_end)
    }

    fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for v in [self.particles, self.n_orb, self.wells] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.depth, self.kinetic, self.g_in, self.g_f, self.tau] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.pulses.to_le_bytes())?;
        w.write_all(&self.t_end.to_le_bytes())?;
        w.write_all(&self.count.to_le_bytes())?;
        w.write_all(&self.dim.to_le_bytes())?;
        Ok(())
    }

    fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a trajectory checkpoint".into()));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        Ok(Self {
            particles: read_u32(r)?,
            n_orb: read_u32(r)?,
            wells: read_u32(r)?,
            depth: read_f64(r)?,
            kinetic: read_f64(r)?,
            g_in: read_f64(r)?,
            g_f: read_f64(r)?,
            tau: read_f64(r)?,
            pulses: read_u32(r)?,
            t_end: read_f64(r)?,
            count: read_u64(r)?,
            dim: read_u64(r)?,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Streams samples into a checkpoint whose sample count is fixed up front.
pub struct CheckpointWriter<W: Write> {
    inner: W,
    header: CheckpointHeader,
    written: u64,
}

impl CheckpointWriter<BufWriter<File>> {
    pub fn create(path: &Path, header: CheckpointHeader) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> CheckpointWriter<W> {
    pub fn new(mut inner: W, header: CheckpointHeader) -> Result<Self> {
        header.write_to(&mut inner)?;
        Ok(Self {
            inner,
            header,
            written: 0,
        })
    }

    pub fn push(&mut self, state: &ManyBodyState) -> Result<()> {
        if state.dim() as u64 != self.header.dim {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint expects dimension {}, got {}",
                self.header.dim,
                state.dim()
            )));
        }
        if self.written == self.header.count {
            return Err(Error::Format("more samples than announced in the header".into()));
        }
        let mut buf = Vec::with_capacity(8 + 16 * state.dim());
        buf.extend_from_slice(&state.time().to_le_bytes());
        for c in state.coeffs() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        self.inner.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.count {
            return Err(Error::Format(format!(
                "header announces {} samples, {} written",
                self.header.count, self.written
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(CheckpointHeader, Vec<ManyBodyState>)> {
    let header = CheckpointHeader::read_from(&mut r)?;
    let dim = header.dim as usize;
    let mut states = Vec::with_capacity(header.count as usize);
    let mut buf = vec![0u8; 16 * dim];
    for _ in 0..header.count {
        let time = read_f64(&mut r)?;
        r.read_exact(&mut buf)?;
        let coeffs: Vec<Complex64> = buf
            .chunks_exact(16)
            .map(|b| {
                let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        states.push(ManyBodyState::from_parts_unchecked(coeffs, time));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after the last sample".into()));
    }
    Ok((header, states))
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointHeader, Vec<ManyBodyState>)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
