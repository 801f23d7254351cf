//! `key=value` run settings shared by config files and command-line flags.
//!
//! Keys are the long flag names without dashes: `algo`, `function`, `dim`,
//! `m`, `lambda`, `sigma0`, `seed`, `runs`, `budget`, `target`, `preset`,
//! `rotation-seed`, `out`, `emit-eigenspectrum`, `timing`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::experiment::{CellSpec, ExperimentSpec};

/// A single-cell experiment assembled from settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub cell: CellSpec,
    pub out_dir: Option<PathBuf>,
    pub record_timing: bool,
}

impl Default for RunRequest {
    fn default() -> Self {
        Self {
            cell: CellSpec::default(),
            out_dir: None,
            record_timing: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

impl RunRequest {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let cell = &mut self.cell;
        match key.trim() {
            "algo" => cell.algorithm.algorithm = value.parse()?,
            "function" => cell.function = value.parse()?,
            "dim" => cell.n = parse(key, value)?,
            "m" => cell.algorithm.overrides.m = Some(value.parse()?),
            "lambda" => cell.algorithm.overrides.lambda = Some(parse(key, value)?),
            "sigma0" => cell.sigma0 = Some(parse(key, value)?),
            "seed" => cell.base_seed = parse(key, value)?,
            "runs" => cell.runs = parse(key, value)?,
            "budget" => cell.budget = Some(parse(key, value)?),
            "target" => cell.target_f = Some(parse(key, value)?),
            "preset" => cell.algorithm.preset = value.parse()?,
            "rotation-seed" => cell.rotation_seed = Some(parse(key, value)?),
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "emit-eigenspectrum" => cell.emit_eigenspectrum = parse_bool(key, value)?,
            "timing" => self.record_timing = parse_bool(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        pairs.into_iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn into_experiment(self) -> ExperimentSpec {
        ExperimentSpec {
            cells: vec![self.cell],
            out_dir: self.out_dir,
            record_timing: self.record_timing,
        }
    }
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// a leading `--` on keys is accepted.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            (!line.is_empty()).then_some((i, line))
        })
        .map(|(i, line)| {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("config line {}: expected key=value, got {line:?}", i + 1))
            })?;
            let k = k.trim();
            Ok((k.strip_prefix("--").unwrap_or(k).to_string(), v.trim().to_string()))
        })
        .collect()
}
