//! CSV and JSON writers. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Header plus rows, `\n` line endings.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        let mut buf = header.join(",");
        buf.push('\n');
        Csv { buf }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(&f);
        }
        self.buf.push('\n');
    }

    pub fn nums(&mut self, xs: &[f64]) {
        self.row(xs.iter().map(|&x| num(x)));
    }

    pub fn write(&self, path: &Path) -> Result<(), String> {
        std::fs::write(path, &self.buf).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }
}

/// Quote a field if it holds a comma, quote or newline.
pub fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        let mut q = String::with_capacity(s.len() + 2);
        q.push('"');
        for c in s.chars() {
            if c == '"' {
                q.push('"');
            }
            q.push(c);
        }
        q.push('"');
        q
    } else {
        s.to_string()
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    let _ = writeln!(s);
    std::fs::write(path, s).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn quoting() {
        assert_eq!(text("a;b"), "a;b");
        assert_eq!(text("x,\"y\""), "\"x,\"\"y\"\"\"");
    }
}
