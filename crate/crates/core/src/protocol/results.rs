use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One protocol run, as emitted to CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub run_id: u64,
    pub n: usize,
    pub ell: usize,
    pub s_oracle: f64,
    pub s_hat: f64,
    pub rel_error: f64,
    pub bytes_per_client: f64,
}

/// Writes a `# ` comment line carrying `fingerprint`, then a headed CSV.
pub fn write_results<W: Write, R: Serialize>(mut out: W, fingerprint: &str, rows: &[R]) -> Result<()> {
    writeln!(out, "# {fingerprint}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
