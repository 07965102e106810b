//! Line-oriented `key = value` manifests used by dataset directories and run
//! artifacts. Hardened: caps on line count and length, strict key syntax,
//! duplicate keys rejected.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

const MAX_LINES: usize = 10_000;
const MAX_LINE_LEN: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.len() <= 128
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut entries = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            if ln >= MAX_LINES {
                return Err(Error::Manifest("too many lines".into()));
            }
            if line.len() > MAX_LINE_LEN {
                return Err(Error::Manifest(format!("line {} too long", ln + 1)));
            }
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Manifest(format!("line {}: missing '='", ln + 1)))?;
            let k = k.trim();
            if !valid_key(k) {
                return Err(Error::Manifest(format!("line {}: bad key '{k}'", ln + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Manifest(format!("duplicate key '{k}'")));
            }
        }
        Ok(Manifest { entries })
    }

    pub fn parse_bytes(bytes: &[u8]) -> Result<Manifest> {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::Manifest("manifest is not utf-8".into()))?;
        Self::parse(text)
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        assert!(valid_key(key), "internal manifest key '{key}'");
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Manifest(format!("missing key '{key}'")))
    }

    pub fn get_opt(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse::<T>()
            .map_err(|_| Error::Manifest(format!("key '{key}' has unparseable value")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Manifest> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        Self::parse_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_lookup() {
        let mut m = Manifest::new();
        m.insert("grid.dim", 2);
        m.insert("coefficient_hash", "abc123");
        let text = m.render();
        let back = Manifest::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.get_parsed::<usize>("grid.dim").unwrap(), 2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Manifest::parse("novalue\n").is_err());
        assert!(Manifest::parse("bad key = 1\n").is_err());
        assert!(Manifest::parse("a = 1\na = 2\n").is_err());
        assert!(Manifest::parse(&format!("k = {}\n", "x".repeat(5000))).is_err());
        assert!(Manifest::parse("# comment only\n\n").is_ok());
    }
}
