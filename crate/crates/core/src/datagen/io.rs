use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::generate::{Dataset, DatasetMeta, Pool, DATASET_VERSION};
use crate::error::{Error, Result};

/// Writes a dataset as JSON lines: a metadata header, then one pool per line.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset_to(ds, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset_to<W: Write>(ds: &Dataset, out: &mut W) -> Result<()> {
    let io = |e| Error::io("<writer>", e);
    serde_json::to_writer(&mut *out, &ds.meta)?;
    out.write_all(b"\n").map_err(io)?;
    for pool in &ds.pools {
        serde_json::to_writer(&mut *out, pool)?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

/// Reads a dataset written by [`write_dataset`], re-validating every
/// preference row and group label. Errors carry 1-based line numbers.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file, missing metadata header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let meta: DatasetMeta =
        serde_json::from_str(&header).map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if meta.version != DATASET_VERSION {
        return Err(parse_err(1, format!("unsupported dataset version {}", meta.version)));
    }

    let mut pools = Vec::with_capacity(meta.num_pools);
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pool: Pool = serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        if pool.features.len() != meta.n || pool.groups.len() != meta.n || pool.prefs.n() != meta.n {
            return Err(parse_err(lineno, format!("pool is not of size {}", meta.n)));
        }
        if pool.groups != meta.partition_attribute.labels(&pool.features) {
            return Err(parse_err(
                lineno,
                format!("groups inconsistent with partition {}", meta.partition_attribute),
            ));
        }
        pools.push(pool);
    }
    let ds = Dataset { meta, pools };
    ds.validate().map_err(|e| parse_err(0, e.to_string()))?;
    Ok(ds)
}
