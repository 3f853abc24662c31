use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{CrossingCounts, LocalTimeProfile};
use crate::error::{Error, Result};

/// Columns `j,U,D`.
pub fn write_counts_csv(counts: &CrossingCounts, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| {
        writeln!(w, "j,U,D")?;
        for (j, u, d) in counts.iter() {
            writeln!(w, "{j},{u},{d}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Columns `x,L`.
pub fn write_profile_csv(profile: &LocalTimeProfile, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| {
        writeln!(w, "x,L")?;
        for (x, l) in profile.x_grid.iter().zip(&profile.values) {
            writeln!(w, "{x:?},{l:?}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}
