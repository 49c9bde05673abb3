// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over one numeric configuration field.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::pipeline::execute;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    /// Non-Markovianity measure of the run.
    pub measure: f64,
    pub max_revival_height: f64,
    /// Peak time of the largest revival, s; absent when there is none.
    pub revival_time: Option<f64>,
}

/// Copy of `cfg` with the dotted field `axis` set to `value`.
pub fn with_axis(cfg: &RunConfig, axis: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut root = toml::Value::try_from(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let unknown = || CliError::Config(format!("unknown sweep axis `{axis}`"));
    let mut slot = &mut root;
    for part in axis.split('.') {
        slot = slot.get_mut(part).ok_or_else(unknown)?;
    }
    *slot = match slot {
        toml::Value::Integer(_) => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Config(format!("{axis}: {value} is not a non-negative integer")));
            }
            toml::Value::Integer(value as i64)
        }
        toml::Value::Float(_) => toml::Value::Float(value),
        _ => return Err(CliError::Config(format!("sweep axis `{axis}` is not numeric"))),
    };
    let out: RunConfig = root.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    out.validate()?;
    Ok(out)
}

/// Independent runs per value, returned in input order.
pub fn sweep(cfg: &RunConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let configs = values
        .iter()
        .map(|&v| with_axis(cfg, axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    configs
        .par_iter()
        .zip(values)
        .map(|(c, &value)| {
            let out = execute(c)?;
            let peak = out.report.max_revival();
            Ok(SweepRow {
                value,
                measure: out.report.measure,
                max_revival_height: peak.map_or(0.0, |r| r.height),
                revival_time: peak.map(|r| r.peak_time),
            })
        })
        .collect()
}

pub fn sweep_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut s = format!("{axis},measure,max_revival_height,revival_time_s\n");
    for r in rows {
        let t = r.revival_time.map_or(String::new(), |t| t.to_string());
        s.push_str(&format!("{},{},{},{}\n", r.value, r.measure, r.max_revival_height, t));
    }
    s
}
