//! RFC-4180 CSV output: CRLF row endings, '.' decimal separator, 17
//! significant digits so every f64 round-trips bit-exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct CsvWriter {
    w: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(CsvWriter { w: BufWriter::new(File::create(path)?) })
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) -> std::io::Result<()> {
        let mut first = true;
        for cell in cells {
            if !first {
                self.w.write_all(b",")?;
            }
            self.w.write_all(cell.as_ref().as_bytes())?;
            first = false;
        }
        self.w.write_all(b"\r\n")
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.w.flush()
    }
}

/// 17 significant digits; parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_i64(v: i64) -> String {
    v.to_string()
}
