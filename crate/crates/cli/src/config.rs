//! Run configuration: a TOML file, subcommand defaults and flag overrides,
//! merged into one validated [`Settings`].

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rdeid::acceptance::DEFAULT_SEED;
use serde::{Deserialize, Serialize};

/// A number written either as a TOML number or as a decimal string. Strings
/// keep every digit at high precision, where `0.1` as a binary double would not.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Decimal {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decimal::Int(v) => write!(f, "{v}"),
            // Shortest round-trip form, so 0.1 stays "0.1".
            Decimal::Float(v) => write!(f, "{v:?}"),
            Decimal::Text(s) => f.write_str(s.trim()),
        }
    }
}

impl From<&str> for Decimal {
    fn from(s: &str) -> Self {
        Decimal::Text(s.to_string())
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Main terms first, then the tail; defaults to `lambda_n = n^2`.
    pub rates: Option<Vec<Decimal>>,
    /// Defaults to all ones.
    pub amplitudes: Option<Vec<Decimal>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub delta_min: Option<Decimal>,
    pub delta_max: Option<Decimal>,
    pub delta_steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub p: Option<Decimal>,
    pub q: Option<Decimal>,
    pub nx: Option<usize>,
    /// 2 or 4.
    pub order: Option<usize>,
    pub horizon: Option<Decimal>,
    /// Equispaced measurement samples on `[0, horizon]`.
    pub samples: Option<usize>,
    pub stride_min: Option<usize>,
    /// Defaults to the largest stride whose window fits the record.
    pub stride_max: Option<usize>,
    /// Field snapshots written by `simulate`.
    pub snapshots: Option<usize>,
}

/// The file format. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub precision: Option<u32>,
    pub seed: Option<u64>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub epsilon: Option<Decimal>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub pde: PdeSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("config does not parse")
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes =
            std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
        Ok((Self::parse(text)?, bytes))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Condition,
    Esprit,
    Bounds,
    Simulate,
    Pipeline,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Condition => "condition",
            Command::Esprit => "esprit",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Pipeline => "pipeline",
            Command::Verify => "verify",
        }
    }

    fn uses_pde(self) -> bool {
        matches!(self, Command::Simulate | Command::Pipeline)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub precision: Option<u32>,
    pub seed: Option<u64>,
    pub delta_min: Option<String>,
    pub delta_max: Option<String>,
    pub delta_steps: Option<usize>,
    pub epsilon: Option<String>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
}

/// Fully resolved and validated run settings. Numbers stay decimal strings
/// until the precision is known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub command: Command,
    pub precision: u32,
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    pub epsilon: String,
    pub rates: Vec<String>,
    pub amplitudes: Vec<String>,
    pub delta_min: String,
    pub delta_max: String,
    pub delta_steps: usize,
    pub p: String,
    pub q: String,
    pub nx: usize,
    pub order: usize,
    pub horizon: String,
    pub samples: usize,
    pub stride_min: usize,
    pub stride_max: usize,
    pub snapshots: usize,
}

fn check_decimal(name: &str, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => bail!("{name} = {s:?} is not a finite decimal number"),
    }
}

impl Settings {
    pub fn resolve(command: Command, file: &ConfigFile, flags: &Overrides) -> Result<Self> {
        let pde_run = command.uses_pde();
        let precision =
            flags
                .precision
                .or(file.precision)
                .unwrap_or(if pde_run { 100 } else { 32 });
        if ![16, 32, 100].contains(&precision) {
            bail!("precision must be 16, 32 or 100, got {precision}");
        }
        let n1 = flags.n1.or(file.n1).unwrap_or(4);
        let n2 = flags.n2.or(file.n2).unwrap_or(if pde_run { 2 } else { 1 });
        if n1 == 0 {
            bail!("n1 must be at least 1");
        }
        let default_eps = if pde_run { "1e-4" } else { "0.1" };
        let epsilon = flags
            .epsilon
            .clone()
            .or(file.epsilon.as_ref().map(ToString::to_string))
            .unwrap_or_else(|| default_eps.into());
        if check_decimal("epsilon", &epsilon)? < 0.0 {
            bail!("epsilon must be non-negative");
        }

        let terms = n1 + n2;
        let pick = |given: &Option<Vec<Decimal>>,
                    name: &str,
                    default: &dyn Fn(usize) -> String|
         -> Result<Vec<String>> {
            match given {
                Some(v) if v.len() < terms => {
                    bail!(
                        "model.{name} has {} entries, n1 + n2 = {terms} needed",
                        v.len()
                    )
                }
                Some(v) => v[..terms]
                    .iter()
                    .map(|d| {
                        let s = d.to_string();
                        check_decimal(name, &s).map(|_| s)
                    })
                    .collect(),
                None => Ok((1..=terms).map(default).collect()),
            }
        };
        let rates = pick(&file.model.rates, "rates", &|n| (n * n).to_string())?;
        let amplitudes = pick(&file.model.amplitudes, "amplitudes", &|_| "1".into())?;

        let delta_min = flags
            .delta_min
            .clone()
            .or(file.sweep.delta_min.as_ref().map(ToString::to_string))
            .unwrap_or_else(|| "0.5".into());
        let delta_max = flags
            .delta_max
            .clone()
            .or(file.sweep.delta_max.as_ref().map(ToString::to_string))
            .unwrap_or_else(|| "6".into());
        let delta_steps = flags.delta_steps.or(file.sweep.delta_steps).unwrap_or(56);
        let (lo, hi) = (
            check_decimal("delta_min", &delta_min)?,
            check_decimal("delta_max", &delta_max)?,
        );
        if lo <= 0.0 || hi < lo {
            bail!("the step range needs 0 < delta_min <= delta_max, got [{lo}, {hi}]");
        }
        if delta_steps == 0 || (delta_steps == 1 && hi != lo) {
            bail!("delta_steps = {delta_steps} cannot span [{lo}, {hi}]");
        }

        let pde = &file.pde;
        let dec = |v: &Option<Decimal>, default: &str| {
            v.as_ref().map_or(default.to_string(), ToString::to_string)
        };
        let p = dec(&pde.p, "0.1");
        let q = dec(&pde.q, "0.1");
        let horizon = dec(&pde.horizon, "2");
        if check_decimal("p", &p)? <= 0.0 {
            bail!("p must be positive");
        }
        check_decimal("q", &q)?;
        if check_decimal("horizon", &horizon)? <= 0.0 {
            bail!("horizon must be positive");
        }
        let nx = pde.nx.unwrap_or(60);
        let order = pde.order.unwrap_or(4);
        if order != 2 && order != 4 {
            bail!("pde.order must be 2 or 4, got {order}");
        }
        let samples = pde.samples.unwrap_or(1025);
        if pde_run && samples < 2 * n1 {
            bail!("{samples} samples cannot hold a window of {}", 2 * n1);
        }
        let stride_cap = if samples >= 2 * n1 {
            rdeid::pde::max_stride(samples, n1)
        } else {
            0
        };
        let stride_min = pde.stride_min.unwrap_or(1);
        let stride_max = pde.stride_max.unwrap_or(stride_cap);
        if pde_run && (stride_min == 0 || stride_min > stride_max || stride_max > stride_cap) {
            bail!("strides [{stride_min}, {stride_max}] must lie in [1, {stride_cap}]");
        }
        let snapshots = pde.snapshots.unwrap_or(21);
        if snapshots < 2 {
            bail!("pde.snapshots must be at least 2");
        }

        Ok(Settings {
            command,
            precision,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            n1,
            n2,
            epsilon,
            rates,
            amplitudes,
            delta_min,
            delta_max,
            delta_steps,
            p,
            q,
            nx,
            order,
            horizon,
            samples,
            stride_min,
            stride_max,
            snapshots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("n1 = 3\nepsilon = 0.1\n[sweep]\ndelta_steps = 5\n").unwrap();
        let flags = Overrides {
            n1: Some(2),
            delta_steps: Some(7),
            ..Default::default()
        };
        let s = Settings::resolve(Command::Condition, &file, &flags).unwrap();
        assert_eq!(s.n1, 2);
        assert_eq!(s.delta_steps, 7);
        assert_eq!(s.epsilon, "0.1");
        assert_eq!(s.rates, vec!["1", "4", "9"]);
    }

    #[test]
    fn decimal_strings_survive() {
        let file = ConfigFile::parse("epsilon = \"1e-30\"\n[model]\nrates = [1, 2.5, \"3.25\"]\n")
            .unwrap();
        let s = Settings::resolve(
            Command::Esprit,
            &file,
            &Overrides {
                n1: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(s.rates, vec!["1", "2.5", "3.25"]);
        assert_eq!(s.epsilon, "1e-30");
    }

    #[test]
    fn validation_errors() {
        let bad = [
            "precision = 20",
            "n1 = 0",
            "epsilon = -1",
            "[model]\nrates = [1, 2]",
            "[sweep]\ndelta_min = 2\ndelta_max = 1",
            "[pde]\norder = 3",
            "unknown = 1",
        ];
        for text in bad {
            let parsed = ConfigFile::parse(text);
            let outcome = parsed
                .and_then(|f| Settings::resolve(Command::Condition, &f, &Overrides::default()));
            assert!(outcome.is_err(), "{text:?} accepted");
        }
    }
}
