//! CSV output. Every floating value is written with 17 significant digits.

use crate::scalar::Real;

/// Formats a real with 17 significant digits in scientific notation.
pub fn fmt_real<T: Real>(x: T) -> String {
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// In-memory CSV document with a mandatory header row.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        writer
            .write_record(header)
            .expect("writing to memory cannot fail");
        Self { writer }
    }

    /// Appends one record. Panics if its length differs from the header's.
    pub fn push<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .expect("record length must match the header");
    }

    pub fn finish(self) -> String {
        let bytes = self
            .writer
            .into_inner()
            .expect("flushing to memory cannot fail");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_real(0.1f64), "1.0000000000000001e-1");
        assert_eq!(fmt_real(f64::INFINITY), "inf");
        let back: f64 = fmt_real(1.0f64 / 3.0).parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn table_has_header() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(["1", "2"]);
        assert_eq!(t.finish(), "a,b\n1,2\n");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_rejected() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(["1"]);
    }
}
