//! CSV/SVG emission. Files are written to a temporary sibling and renamed
//! into place. Metadata lives in `#` comment lines above the CSV header so
//! that bodies are byte-identical across runs of the same spec.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};

use crate::spec::ExperimentSpec;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Formats a finite float (shortest round-trip form, exponent for very
/// small or large magnitudes); NaN and infinities are refused.
pub fn num(x: f64) -> Result<String> {
    if !x.is_finite() {
        bail!("refusing to emit non-finite value {x}");
    }
    Ok(format!("{x:?}"))
}

/// `#`-prefixed metadata: tool version, spec hash, seed, timestamp, the
/// effective spec, and any extra `key: value` pairs.
pub fn header(spec: &ExperimentSpec, extra: &[(&str, String)]) -> String {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut out = format!(
        "# olo-bench {}\n# spec_sha256: {}\n# seed: {}\n# created_unix: {created}\n",
        env!("CARGO_PKG_VERSION"),
        spec.hash(),
        spec.seed
    );
    for (k, v) in extra {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    for line in spec.canonical_ini().lines().filter(|l| !l.is_empty()) {
        out.push_str("# spec | ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// A CSV table with a fixed column order.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn body(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path, header: &str) -> Result<()> {
        let mut bytes = header.as_bytes().to_vec();
        bytes.extend(self.body()?);
        write_atomic(path, &bytes)
    }
}

/// Strips `#` metadata lines, leaving the CSV body.
pub fn strip_header(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

pub fn out_path(spec: &ExperimentSpec, name: &str) -> PathBuf {
    spec.out_dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Command;

    #[test]
    fn table_body_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), num(0.5).unwrap()]);
        assert_eq!(t.body().unwrap(), b"a,b\n1,0.5\n");
        let spec = ExperimentSpec::new(Command::Regret);
        let h = header(&spec, &[("note", "x".into())]);
        assert!(h.lines().all(|l| l.starts_with('#')));
        assert!(h.contains(&spec.hash()));
        assert_eq!(strip_header(&format!("{h}a,b\n")), "a,b\n");
    }

    #[test]
    fn non_finite_values_refused() {
        assert!(num(f64::NAN).is_err());
        assert!(num(f64::INFINITY).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
