//! Key sources for the retrieval commands.
//!
//! A key file has one key per line, optionally followed by a tab and a
//! decimal value. Keys without a value get [`default_value`]. Synthetic
//! sources are written `synthetic:COUNT`.

use std::fs;
use std::path::PathBuf;

use fusepeel::retrieval::{default_value, synthetic_keys};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeySource {
    Synthetic(usize),
    File(PathBuf),
}

impl std::str::FromStr for KeySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("synthetic:") {
            Some(count) => count
                .parse()
                .map(KeySource::Synthetic)
                .map_err(|e| format!("bad synthetic key count {count:?}: {e}")),
            None => Ok(KeySource::File(PathBuf::from(s))),
        }
    }
}

pub fn load(source: &KeySource, seed: u64, r_bits: u32) -> Result<Vec<(Vec<u8>, u64)>, CliError> {
    match source {
        KeySource::Synthetic(count) => Ok(synthetic_keys(*count, seed)
            .into_iter()
            .map(|k| {
                let v = default_value(k.as_bytes(), r_bits);
                (k.into_bytes(), v)
            })
            .collect()),
        KeySource::File(path) => {
            let text = fs::read(path).map_err(|e| CliError::io(path, e))?;
            parse(&text, r_bits)
        }
    }
}

pub fn parse(text: &[u8], r_bits: u32) -> Result<Vec<(Vec<u8>, u64)>, CliError> {
    let limit = if r_bits == 64 { u64::MAX } else { (1u64 << r_bits) - 1 };
    let mut out = Vec::new();
    for (no, line) in text.split(|&b| b == b'\n').enumerate() {
        let line = line.strip_suffix(b"\r").unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.iter().position(|&b| b == b'\t') {
            Some(tab) => {
                let raw = std::str::from_utf8(&line[tab + 1..])
                    .ok()
                    .and_then(|s| s.trim().parse::<u64>().ok())
                    .ok_or_else(|| CliError::Usage(format!("line {}: bad value", no + 1)))?;
                if raw > limit {
                    return Err(CliError::Usage(format!(
                        "line {}: value {raw} does not fit in {r_bits} bits",
                        no + 1
                    )));
                }
                (&line[..tab], raw)
            }
            None => (line, default_value(line, r_bits)),
        };
        out.push((key.to_vec(), value));
    }
    Ok(out)
}
