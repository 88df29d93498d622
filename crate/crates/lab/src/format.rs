//! Fixed, platform-independent text formats for artifacts.
//!
//! Floats are written as the shortest decimal string that parses back to
//! the same `f64` (`NaN`, `inf` and `-inf` for non-finite values). JSON
//! numbers follow the same rule; non-finite values become `null`.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub fn float(x: f64) -> String {
    ryu::Buffer::new().format(x).to_owned()
}

/// Builds a CSV file from a header and rows of floats.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.into_iter().map(float)).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

#[derive(Serialize)]
pub struct Versioned<'a, T: Serialize> {
    pub schema_version: u32,
    pub suite: &'a str,
    #[serde(flatten)]
    pub body: T,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        assert_eq!(float(-2.0), "-2.0");
        assert_eq!(float(0.1), "0.1");
        assert_eq!(float(1e-300), "1e-300");
        assert_eq!(float(f64::NAN), "NaN");
        assert_eq!(float(f64::NEG_INFINITY), "-inf");
        let x = 0.1 + 0.2;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_layout() {
        let out = csv_table(&["t", "x"], [vec![0.0, -1.5], vec![1.0, 2e-20]]);
        assert_eq!(String::from_utf8(out).unwrap(), "t,x\n0.0,-1.5\n1.0,2e-20\n");
    }
}
