//! Binary trace dumps for inspection with external tools.
//!
//! Layout, all little-endian:
//!
//! | bytes | field                          |
//! |-------|--------------------------------|
//! | 4     | magic `b"TESV"`                |
//! | 4     | `u32` samples per trace `L`    |
//! | 8     | `f64` sample period `dt`       |
//! | 8     | `u64` trace count              |
//! | 4·L·count | `f32` samples, trace-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Trace;
use crate::error::{Error, Result};

pub const TRACE_DUMP_MAGIC: [u8; 4] = *b"TESV";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_trace_dump(path: &Path, traces: &[Trace]) -> Result<()> {
    let first = traces.first().ok_or(Error::EmptyInput("traces to dump"))?;
    let len = first.len();
    let dt = first.dt();
    if let Some(t) = traces.iter().find(|t| t.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: t.len(),
        });
    }
    if let Some(t) = traces.iter().find(|t| t.dt() != dt) {
        return Err(Error::PeriodMismatch {
            expected: dt,
            found: t.dt(),
        });
    }
    let len32 = u32::try_from(len).map_err(|_| Error::TraceDump(format!("trace length {len} exceeds u32")))?;

    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = |bytes: &[u8]| out.write_all(bytes).map_err(io_err(path));
    write(&TRACE_DUMP_MAGIC)?;
    write(&len32.to_le_bytes())?;
    write(&dt.to_le_bytes())?;
    write(&(traces.len() as u64).to_le_bytes())?;
    for t in traces {
        for &v in t.samples() {
            write(&(v as f32).to_le_bytes())?;
        }
    }
    out.flush().map_err(io_err(path))
}

pub fn read_trace_dump(path: &Path) -> Result<Vec<Trace>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut input = BufReader::new(file);
    let mut read = |buf: &mut [u8]| input.read_exact(buf).map_err(io_err(path));

    let mut magic = [0u8; 4];
    read(&mut magic)?;
    if magic != TRACE_DUMP_MAGIC {
        return Err(Error::TraceDump(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    read(&mut b4)?;
    let len = u32::from_le_bytes(b4) as usize;
    read(&mut b8)?;
    let dt = f64::from_le_bytes(b8);
    read(&mut b8)?;
    let count = u64::from_le_bytes(b8);

    let mut traces = Vec::new();
    for _ in 0..count {
        let mut samples = Vec::with_capacity(len);
        for _ in 0..len {
            read(&mut b4)?;
            samples.push(f32::from_le_bytes(b4) as f64);
        }
        traces.push(Trace::new(samples, dt)?);
    }
    let mut rest = [0u8; 1];
    match input.read(&mut rest) {
        Ok(0) => Ok(traces),
        Ok(_) => Err(Error::TraceDump("trailing bytes after the last trace".into())),
        Err(source) => Err(io_err(path)(source)),
    }
}
