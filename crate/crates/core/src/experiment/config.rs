//! INI-style scenario files and the built-in presets.
//!
//! ```text
//! [run]           name, replications, bursts_per_replication, seed, warmup_fraction
//! [topology]      topology, routing, propagation_delay_ps, W, CW
//! [traffic]       load, mean_burst_bits, data_bit_rate, control_bit_rate
//! [architecture]  architecture, t_sw_ps, t_proc_ps
//! [output]        plot
//! ```
//!
//! List-valued keys (`topology`, `architecture`, `load`, `W`,
//! `mean_burst_bits`, `control_bit_rate`) take comma-separated values.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{EscapePolicy, Ini};
use thiserror::Error;

use super::{PlotKind, Scenario, TopologySpec};
use crate::architectures::Architecture;
use crate::kernel::SimTime;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("unknown preset `{0}` (available: fig2, fig3, fig4, fig5, fig6)")]
    UnknownPreset(String),
}

pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "fig6"];

fn load_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Built-in scenarios at the default scale of 10^6 bursts x 5 replications.
pub fn preset(name: &str) -> Result<Scenario, ConfigError> {
    let both = vec![TopologySpec::Nsfnet, TopologySpec::Torus { rows: 6, cols: 6 }];
    let base = Scenario {
        name: name.to_string(),
        topologies: both,
        loads: load_grid(),
        ..Scenario::default()
    };
    let s = match name {
        "fig2" => Scenario {
            plot: PlotKind::LossVsLoad,
            ..base
        },
        "fig3" => Scenario {
            plot: PlotKind::LossByCause,
            ..base
        },
        "fig4" => Scenario {
            topologies: vec![TopologySpec::Nsfnet],
            architectures: vec![Architecture::COBS],
            wavelengths: vec![16, 32],
            mean_burst_bits: vec![1_000_000, 5_000_000],
            control_bit_rates: vec![10_000_000_000, 622_000_000],
            plot: PlotKind::Sweep,
            ..base
        },
        "fig5" => Scenario {
            loads: vec![0.65],
            plot: PlotKind::Fairness,
            ..base
        },
        "fig6" => Scenario {
            plot: PlotKind::Utilization,
            ..base
        },
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(s)
}

fn value_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        message: message.into(),
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e: T::Err| value_err(key, format!("`{}`: {e}", v.trim())))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| scalar(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(value_err(key, "empty list"));
    }
    Ok(items)
}

fn picos(key: &str, v: &str) -> Result<SimTime, ConfigError> {
    scalar::<u64>(key, v).map(SimTime::from_ps)
}

/// Applies the keys of `text` on top of `base` and validates the result.
pub fn parse_config(text: &str, base: Scenario) -> Result<Scenario, ConfigError> {
    let ini = Ini::load_from_str_noescape(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut s = base;
    for (section, props) in ini.iter() {
        let section = section.unwrap_or("");
        for (key, v) in props.iter() {
            let unknown = || ConfigError::UnknownKey {
                section: section.to_string(),
                key: key.to_string(),
            };
            match section {
                "run" => match key {
                    "name" => s.name = v.trim().to_string(),
                    "replications" => s.replications = scalar(key, v)?,
                    "bursts_per_replication" => s.bursts_per_replication = scalar(key, v)?,
                    "seed" => s.master_seed = scalar(key, v)?,
                    "warmup_fraction" => s.warmup_fraction = scalar(key, v)?,
                    _ => return Err(unknown()),
                },
                "topology" => match key {
                    "topology" => s.topologies = list(key, v)?,
                    "routing" => s.routing = scalar(key, v)?,
                    "propagation_delay_ps" => s.propagation_delay = picos(key, v)?,
                    "W" => s.wavelengths = list(key, v)?,
                    "CW" => s.control_wavelengths = scalar(key, v)?,
                    _ => return Err(unknown()),
                },
                "traffic" => match key {
                    "load" => s.loads = list(key, v)?,
                    "mean_burst_bits" => s.mean_burst_bits = list(key, v)?,
                    "data_bit_rate" => s.data_bit_rate = scalar(key, v)?,
                    "control_bit_rate" => s.control_bit_rates = list(key, v)?,
                    _ => return Err(unknown()),
                },
                "architecture" => match key {
                    "architecture" => s.architectures = list(key, v)?,
                    "t_sw_ps" => s.t_sw = picos(key, v)?,
                    "t_proc_ps" => s.t_proc = picos(key, v)?,
                    _ => return Err(unknown()),
                },
                "output" => match key {
                    "plot" => s.plot = scalar(key, v)?,
                    _ => return Err(unknown()),
                },
                "" => return Err(unknown()),
                other => return Err(ConfigError::UnknownSection(other.to_string())),
            }
        }
    }
    s.validate()?;
    Ok(s)
}

/// Reads a config file. Relative `file:` topology paths resolve against the file's directory.
pub fn load_config(path: &Path, base: Scenario) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let before = base.topologies.clone();
    let mut s = parse_config(&text, base)?;
    if s.topologies != before {
        let dir = path.parent().unwrap_or(Path::new("."));
        for t in &mut s.topologies {
            if let TopologySpec::File(p) = t {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
    }
    Ok(s)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Serializes `s` in the format accepted by [`parse_config`].
pub fn scenario_to_config(s: &Scenario) -> String {
    let mut ini = Ini::new();
    ini.with_section(Some("run"))
        .set("name", s.name.clone())
        .set("replications", s.replications.to_string())
        .set("bursts_per_replication", s.bursts_per_replication.to_string())
        .set("seed", s.master_seed.to_string())
        .set("warmup_fraction", s.warmup_fraction.to_string());
    ini.with_section(Some("topology"))
        .set("topology", join(&s.topologies))
        .set("routing", s.routing.to_string())
        .set("propagation_delay_ps", s.propagation_delay.0.to_string())
        .set("W", join(&s.wavelengths))
        .set("CW", s.control_wavelengths.to_string());
    ini.with_section(Some("traffic"))
        .set("load", join(&s.loads))
        .set("mean_burst_bits", join(&s.mean_burst_bits))
        .set("data_bit_rate", s.data_bit_rate.to_string())
        .set("control_bit_rate", join(&s.control_bit_rates));
    ini.with_section(Some("architecture"))
        .set("architecture", join(&s.architectures))
        .set("t_sw_ps", s.t_sw.0.to_string())
        .set("t_proc_ps", s.t_proc.0.to_string());
    ini.with_section(Some("output")).set("plot", s.plot.to_string());
    let mut buf = Vec::new();
    ini.write_to_policy(&mut buf, EscapePolicy::Nothing)
        .expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ini output is UTF-8")
}
