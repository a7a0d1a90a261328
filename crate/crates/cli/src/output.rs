//! Output sinks: structured text (`key: value` lines, blank-line-separated
//! records) or CSV (RFC-4180-style quoting via the `csv` crate), to stdout
//! or to files inside an output directory.

use std::io::Write;
use std::path::PathBuf;

use crate::{CliError, Format};
use sp4_core::C64;

/// One output record: ordered key/value pairs.
pub type Record = Vec<(String, String)>;

/// 17-significant-digit float formatting.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Complex values as `re,im` with full precision.
pub fn fmt_c(z: C64) -> String {
    format!("{},{}", fmt_f(z.re), fmt_f(z.im))
}

pub struct Sink {
    format: Format,
    out_dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(format: Format, out_dir: Option<String>) -> Self {
        Sink { format, out_dir: out_dir.map(PathBuf::from) }
    }

    fn render(&self, records: &[Record]) -> Result<String, CliError> {
        match self.format {
            Format::Text => {
                let mut out = String::new();
                for (k, rec) in records.iter().enumerate() {
                    if k > 0 {
                        out.push('\n');
                    }
                    for (key, value) in rec {
                        out.push_str(key);
                        out.push_str(": ");
                        out.push_str(value);
                        out.push('\n');
                    }
                }
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                if let Some(first) = records.first() {
                    w.write_record(first.iter().map(|(k, _)| k.as_str()))
                        .map_err(|e| CliError::Usage(format!("csv error: {e}")))?;
                }
                for rec in records {
                    w.write_record(rec.iter().map(|(_, v)| v.as_str()))
                        .map_err(|e| CliError::Usage(format!("csv error: {e}")))?;
                }
                let bytes =
                    w.into_inner().map_err(|e| CliError::Usage(format!("csv error: {e}")))?;
                String::from_utf8(bytes).map_err(|e| CliError::Usage(format!("csv error: {e}")))
            }
        }
    }

    /// Emit a record batch under an artifact name (the file stem when an
    /// output directory is in effect).
    pub fn emit(&self, name: &str, records: &[Record]) -> Result<(), CliError> {
        let body = self.render(records)?;
        self.write(name, &body, matches!(self.format, Format::Csv))
    }

    /// Emit preformatted text regardless of the format flag.
    pub fn emit_raw(&self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, body, false)
    }

    fn write(&self, name: &str, body: &str, csv: bool) -> Result<(), CliError> {
        match &self.out_dir {
            None => {
                print!("{body}");
                std::io::stdout().flush()?;
                Ok(())
            }
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{name}.{}", if csv { "csv" } else { "txt" }));
                std::fs::write(&path, body)?;
                println!("{}", path.display());
                Ok(())
            }
        }
    }
}
