//! Trajectory checkpoints: one record per energy step, each with a header
//! `(m, ε, n_nodes, n_even, n_cells, n_odd)` followed by the row-major even
//! and odd moment blocks.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::field::PhaseSpaceField;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"PNFMTRJ1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub index: usize,
    pub energy: f64,
    pub field: PhaseSpaceField,
}

pub struct CheckpointWriter<W: Write> {
    out: W,
    format: CheckpointFormat,
}

impl<W: Write> CheckpointWriter<W> {
    pub fn new(mut out: W, format: CheckpointFormat) -> Result<Self> {
        match format {
            CheckpointFormat::Csv => writeln!(out, "# record,index,energy,n_nodes,n_even,n_cells,n_odd")?,
            CheckpointFormat::Binary => out.write_all(MAGIC)?,
        }
        Ok(Self { out, format })
    }

    pub fn write(&mut self, index: usize, energy: f64, field: &PhaseSpaceField) -> Result<()> {
        let dims = [field.n_nodes(), field.n_even, field.n_cells(), field.n_odd];
        match self.format {
            CheckpointFormat::Csv => {
                writeln!(
                    self.out,
                    "step,{index},{energy:.17e},{},{},{},{}",
                    dims[0], dims[1], dims[2], dims[3]
                )?;
                for (tag, data, width) in [("even", &field.even, field.n_even), ("odd", &field.odd, field.n_odd)] {
                    for (row, chunk) in data.chunks(width).enumerate() {
                        write!(self.out, "{tag},{row}")?;
                        for v in chunk {
                            write!(self.out, ",{v:.17e}")?;
                        }
                        writeln!(self.out)?;
                    }
                }
            }
            CheckpointFormat::Binary => {
                self.out.write_all(&(index as u64).to_le_bytes())?;
                self.out.write_all(&energy.to_le_bytes())?;
                for d in dims {
                    self.out.write_all(&(d as u64).to_le_bytes())?;
                }
                for v in field.even.iter().chain(&field.odd) {
                    self.out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn read_checkpoint(input: impl BufRead, format: CheckpointFormat) -> Result<Vec<CheckpointRecord>> {
    match format {
        CheckpointFormat::Csv => read_csv(input),
        CheckpointFormat::Binary => read_binary(input),
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_csv(input: impl BufRead) -> Result<Vec<CheckpointRecord>> {
    let mut records = Vec::new();
    let mut lines = input.lines();
    while let Some(line) = lines.next() {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let head: Vec<&str> = line.split(',').collect();
        if head.len() != 7 || head[0] != "step" {
            return Err(bad(format!("expected step header, found {line:?}")));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let index = int(head[1])?;
        let energy: f64 = head[2].parse().map_err(|e| bad(format!("{:?}: {e}", head[2])))?;
        let (nn, ne, nc, no) = (int(head[3])?, int(head[4])?, int(head[5])?, int(head[6])?);
        let mut block = |tag: &str, rows: usize, width: usize| -> Result<Vec<f64>> {
            let mut data = Vec::with_capacity(rows * width);
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| bad("truncated record"))??;
                let mut parts = line.split(',');
                if parts.next() != Some(tag) || parts.next().map(int).transpose()? != Some(r) {
                    return Err(bad(format!("expected {tag} row {r}, found {line:?}")));
                }
                let row = parts
                    .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != width {
                    return Err(bad(format!("{tag} row {r} has {} values, expected {width}", row.len())));
                }
                data.extend(row);
            }
            Ok(data)
        };
        let even = block("even", nn, ne)?;
        let odd = block("odd", nc, no)?;
        records.push(CheckpointRecord {
            index,
            energy,
            field: PhaseSpaceField::from_parts(ne, no, even, odd)?,
        });
    }
    Ok(records)
}

fn read_binary(mut input: impl Read) -> Result<Vec<CheckpointRecord>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut records = Vec::new();
    let mut word = [0u8; 8];
    loop {
        match input.read_exact(&mut word) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let index = u64::from_le_bytes(word) as usize;
        let mut next = || -> Result<[u8; 8]> {
            let mut w = [0u8; 8];
            input.read_exact(&mut w).map_err(|_| bad("truncated record"))?;
            Ok(w)
        };
        let energy = f64::from_le_bytes(next()?);
        let mut dims = [0usize; 4];
        for d in &mut dims {
            *d = u64::from_le_bytes(next()?) as usize;
        }
        let [nn, ne, nc, no] = dims;
        let mut read = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| next().map(f64::from_le_bytes)).collect() };
        let even = read(nn * ne)?;
        let odd = read(nc * no)?;
        records.push(CheckpointRecord {
            index,
            energy,
            field: PhaseSpaceField::from_parts(ne, no, even, odd)?,
        });
    }
    Ok(records)
}
