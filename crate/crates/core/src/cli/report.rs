use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] =
    ["analysis", "fingerprint", "level", "value", "err_est", "aux1", "aux2", "wall_ms"];

/// One output line. Meaning of the numeric columns per analysis:
///
/// | analysis | value | err_est | aux1 | aux2 |
/// |---|---|---|---|---|
/// | evaluate | Ê^n | mass outside grid | predicted cost | largest tensor |
/// | scan | Ê^n | gap to previous level | | |
/// | scan-limit | extrapolated limit | last gap | ratio | 1 if Cauchy |
/// | tightness | Ê^n[φ_N] | certificate bound | N | 1 if holds |
/// | independence | lhs | gap | rhs | |
/// | order | Ê^n | nesting gap | flipped value | level gap |
/// | pde-compare | PDE value | abs difference | lattice limit | CFL ratio |
/// | moment-bound | Ê^n[min(abs(X_t)^3, R)] | 4Ct^1.5 | t | 1 if holds |
/// | asymmetry-demo | failing gap | holding gap | direction (0 = Y from X) | families searched |
/// | marginal | marginal value | abs difference to joint | joint value | |
/// | extend | value at level j | observed gap | value at level i | modulus bound |
/// | check | observed | tolerance | target | 1 if passed |
///
/// A `:truncated` suffix marks results cut short by the resource guard.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub analysis: String,
    pub fingerprint: String,
    pub level: Option<u32>,
    pub value: f64,
    pub err_est: Option<f64>,
    pub aux1: Option<f64>,
    pub aux2: Option<f64>,
    pub wall_ms: f64,
}

impl Row {
    pub fn new(analysis: impl Into<String>, level: Option<u32>, value: f64) -> Self {
        Self {
            analysis: analysis.into(),
            fingerprint: String::new(),
            level,
            value,
            err_est: None,
            aux1: None,
            aux2: None,
            wall_ms: 0.0,
        }
    }

    pub fn err(mut self, v: f64) -> Self {
        self.err_est = Some(v);
        self
    }

    pub fn aux(mut self, a1: Option<f64>, a2: Option<f64>) -> Self {
        self.aux1 = a1;
        self.aux2 = a2;
        self
    }

    fn numbers(&self) -> impl Iterator<Item = f64> + '_ {
        [Some(self.value), self.err_est, self.aux1, self.aux2, Some(self.wall_ms)].into_iter().flatten()
    }

    pub fn is_finite(&self) -> bool {
        self.numbers().all(f64::is_finite)
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_csv(rows: &[Row], out: impl Write) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.analysis.clone(),
            r.fingerprint.clone(),
            r.level.map(|l| l.to_string()).unwrap_or_default(),
            cell(Some(r.value)),
            cell(r.err_est),
            cell(r.aux1),
            cell(r.aux2),
            format!("{:.3}", r.wall_ms),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(rows: &[Row], mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

pub fn write_file(rows: &[Row], path: &Path, json: bool) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if json {
        write_json(rows, file)
    } else {
        write_csv(rows, file)
    }
}
