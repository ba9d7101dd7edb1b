//! Run configuration: CLI flag values, key = value config files, and the
//! merge rule (flags override file values, file values override defaults).
//!
//! Radii accept an optional `L` suffix meaning multiples of the model scale
//! L = (4 pi rho0)^(-1/2), e.g. `--r-star 2L`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fluid::FluidModel;

/// A radius given either in geometric units or in units of L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusSpec {
    Geometric(f64),
    ScaleUnits(f64),
}

impl RadiusSpec {
    pub fn resolve(&self, model: &FluidModel) -> f64 {
        match *self {
            RadiusSpec::Geometric(v) => v,
            RadiusSpec::ScaleUnits(v) => v * model.radial_scale(),
        }
    }
}

impl FromStr for RadiusSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (body, scaled) = match t.strip_suffix(['L', 'l']) {
            Some(b) => (b, true),
            None => (t, false),
        };
        let v: f64 = body
            .parse()
            .map_err(|e| Error::Config(format!("bad radius {t:?}: {e}")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {t:?}")));
        }
        Ok(if scaled { RadiusSpec::ScaleUnits(v) } else { RadiusSpec::Geometric(v) })
    }
}

/// Parse a comma-separated list of radius specs.
pub fn parse_radius_list(s: &str) -> Result<Vec<RadiusSpec>> {
    s.split(',').map(|t| t.parse()).collect()
}

/// Parse a comma-separated list of plain floats.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

/// All tunables shared by the subcommands.  Optional fields are filled from
/// the config file and finally from model-scaled defaults.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub k: Option<f64>,
    pub rho0: Option<f64>,
    pub r_min: Option<RadiusSpec>,
    pub r_max: Option<RadiusSpec>,
    pub tol: Option<f64>,
    pub r_star: Option<RadiusSpec>,
    pub delta: Option<RadiusSpec>,
    pub h: Option<f64>,
    pub big_delta: Option<RadiusSpec>,
    pub fit_lo: Option<RadiusSpec>,
    pub fit_hi: Option<RadiusSpec>,
    pub deltas: Option<Vec<RadiusSpec>>,
    pub hs: Option<Vec<f64>>,
    pub ks: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub plot: bool,
}

impl RunConfig {
    /// Fill unset fields from a parsed config file.
    pub fn apply_file(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in kv {
            match key.as_str() {
                "k" => set_if_none(&mut self.k, parse_f64(key, value)?),
                "rho0" => set_if_none(&mut self.rho0, parse_f64(key, value)?),
                "r_min" => set_if_none(&mut self.r_min, value.parse()?),
                "r_max" => set_if_none(&mut self.r_max, value.parse()?),
                "tol" => set_if_none(&mut self.tol, parse_f64(key, value)?),
                "r_star" => set_if_none(&mut self.r_star, value.parse()?),
                "delta" => set_if_none(&mut self.delta, value.parse()?),
                "h" => set_if_none(&mut self.h, parse_f64(key, value)?),
                "big_delta" => set_if_none(&mut self.big_delta, value.parse()?),
                "fit_lo" => set_if_none(&mut self.fit_lo, value.parse()?),
                "fit_hi" => set_if_none(&mut self.fit_hi, value.parse()?),
                "deltas" => set_if_none(&mut self.deltas, parse_radius_list(value)?),
                "hs" => set_if_none(&mut self.hs, parse_f64_list(value)?),
                "ks" => set_if_none(&mut self.ks, parse_f64_list(value)?),
                "workers" => set_if_none(
                    &mut self.workers,
                    value
                        .parse::<usize>()
                        .map_err(|e| Error::Config(format!("bad workers {value:?}: {e}")))?,
                ),
                "out_dir" => set_if_none(&mut self.out_dir, PathBuf::from(value)),
                "plot" => {
                    self.plot = self.plot
                        || value
                            .parse::<bool>()
                            .map_err(|e| Error::Config(format!("bad plot {value:?}: {e}")))?
                }
                other => {
                    return Err(Error::Config(format!("unknown config key {other:?}")));
                }
            }
        }
        Ok(())
    }

    /// The validated fluid model; `k` is mandatory.
    pub fn model(&self) -> Result<FluidModel> {
        let k = self.k.ok_or_else(|| Error::Config("missing required parameter k".into()))?;
        FluidModel::new(k, self.rho0.unwrap_or(1.0))
    }

    pub fn out_dir(&self) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        if let Ok(env) = std::env::var("EFSTAR_OUT") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from(".")
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value for {key}: {value:?}: {e}")))
}

fn set_if_none<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

/// Parse a plain-text `key = value` config file.  `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_spec_parsing() {
        assert_eq!("2L".parse::<RadiusSpec>().unwrap(), RadiusSpec::ScaleUnits(2.0));
        assert_eq!("0.5".parse::<RadiusSpec>().unwrap(), RadiusSpec::Geometric(0.5));
        assert_eq!("1.5l".parse::<RadiusSpec>().unwrap(), RadiusSpec::ScaleUnits(1.5));
        assert!("".parse::<RadiusSpec>().is_err());
        assert!("-2L".parse::<RadiusSpec>().is_err());
        assert!("xL".parse::<RadiusSpec>().is_err());

        let model = FluidModel::new(0.6, 1.0).unwrap();
        let l = model.radial_scale();
        assert_eq!(RadiusSpec::ScaleUnits(2.0).resolve(&model), 2.0 * l);
        assert_eq!(RadiusSpec::Geometric(0.7).resolve(&model), 0.7);
    }

    #[test]
    fn config_file_parsing_and_merge() {
        let text = "# example\nk = 0.6\nrho0 = 2.0\nr_star = 2L # band center\nhs = 0.5, 1.0\n";
        let kv = parse_config_text(text).unwrap();
        let mut cfg = RunConfig { k: Some(0.9), ..Default::default() };
        cfg.apply_file(&kv).unwrap();
        // CLI-provided k wins, file fills the rest
        assert_eq!(cfg.k, Some(0.9));
        assert_eq!(cfg.rho0, Some(2.0));
        assert_eq!(cfg.r_star, Some(RadiusSpec::ScaleUnits(2.0)));
        assert_eq!(cfg.hs.as_deref(), Some(&[0.5, 1.0][..]));
    }

    #[test]
    fn config_rejects_unknown_keys_and_duplicates() {
        let mut cfg = RunConfig::default();
        let kv = parse_config_text("nope = 1\n").unwrap();
        assert!(cfg.apply_file(&kv).is_err());
        assert!(parse_config_text("k = 1\nk = 2\n").is_err());
        assert!(parse_config_text("just a line\n").is_err());
    }

    #[test]
    fn model_requires_k() {
        let cfg = RunConfig::default();
        assert!(cfg.model().is_err());
        let cfg = RunConfig { k: Some(0.6), ..Default::default() };
        assert_eq!(cfg.model().unwrap().rho0(), 1.0);
    }
}
