//! CSV and text artifacts.
//!
//! Every CSV starts with the line `# slowcert-csv v1`, followed by
//! `# key=value` comment lines (always including the seed) and then an
//! ordinary header row. Floats are written in shortest round-trip
//! scientific notation so identical runs give identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::certificate::Certificate;
use crate::error::Result;
use crate::simverify::{InputSignal, Trajectory};

use super::CliError;

pub const CSV_MAGIC: &str = "# slowcert-csv v1";

/// `{:e}` formatting; non-finite values print as `inf`, `-inf` or `NaN`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// A CSV table waiting to be written.
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            meta: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CSV_MAGIC.as_bytes());
        out.push(b'\n');
        for (k, v) in &self.meta {
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Columns `t, x1..xn, V_hat, V_sharp, dV_sharp_dt, decrease_bound`.
///
/// Without an input the derivative is along the slow flow and the bound is
/// `-c V̂`. With an input the derivative includes `g u` and the bound is the
/// gated one, `-(c_b / 4T) V♯`. `V♯` beyond `f64` range prints as `inf`.
pub fn trajectory_table(
    cert: &Certificate,
    traj: &Trajectory,
    input: Option<&InputSignal>,
) -> Result<Table> {
    let n = traj.states.first().map_or(0, |x| x.len());
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=n).map(|i| format!("x{i}")));
    columns.extend(["V_hat", "V_sharp", "dV_sharp_dt", "decrease_bound"].map(String::from));
    let mut table = Table::new(columns);
    let log_c = cert.log_decrease_coeff();
    let fam = cert.family();
    let gated = fam.c_b / (4.0 * fam.window);
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let t = *t;
        let v_hat = cert.v_hat(x, t);
        let gain_log = cert.gain_log(t)?;
        let gain = gain_log.exp();
        let v_sharp = if v_hat == 0.0 {
            0.0
        } else {
            (gain_log + v_hat.ln()).exp()
        };
        let (d, bound) = match input {
            None => (cert.gain_free_derivative(x, t, None)?, -log_c.exp() * v_hat),
            Some(u) => (
                cert.gain_free_derivative(x, t, Some(&u(t, x)))?,
                -gated * v_sharp,
            ),
        };
        let d = if d == 0.0 { 0.0 } else { d * gain };
        let mut row = vec![fmt_f64(t)];
        row.extend(x.iter().map(|v| fmt_f64(*v)));
        row.extend([v_hat, v_sharp, d, bound].map(fmt_f64));
        table.push(row);
    }
    Ok(table)
}

/// Collects files for the output directory; nothing touches disk until
/// [`Artifacts::write`].
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> std::result::Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error, p: &Path| {
            CliError::Io(format!("cannot write {}: {e}", p.display()))
        };
        std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path).map_err(|e| io(e, &path))?;
            f.write_all(bytes).map_err(|e| io(e, &path))?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new(vec!["a".into(), "b".into()]).meta("seed", 7);
        t.push(vec![fmt_f64(0.5), fmt_f64(f64::INFINITY)]);
        let s = String::from_utf8(t.to_bytes()).unwrap();
        assert_eq!(s, "# slowcert-csv v1\n# seed=7\na,b\n5e-1,inf\n");
    }
}
