//! `key=value` sidecar files written next to every output image.

use std::fmt::{self, Display};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneMeta {
    entries: Vec<(String, String)>,
}

impl SceneMeta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        debug_assert!(key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'));
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut meta = Self::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Format(format!("meta line without `=`: {line}")))?;
            meta.entries.push((k.to_string(), v.to_string()));
        }
        Ok(meta)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_string()).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl Display for SceneMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// `<output>.meta`
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut m = SceneMeta::new();
        m.push("lambda", 100.0).push("tau_resolved", 0.1f64 + 0.2).push("preset", "blob");
        let text = m.to_string();
        assert_eq!(text.lines().next(), Some("lambda=100"));
        let back = SceneMeta::parse(&text).unwrap();
        assert_eq!(back, m);
        let tau: f64 = back.get("tau_resolved").unwrap().parse().unwrap();
        assert_eq!(tau, 0.1 + 0.2);
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/d.ppm")), PathBuf::from("out/d.ppm.meta"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(SceneMeta::parse("novalue\n").is_err());
    }
}
