//! Run configuration: flags override the JSON config file, which overrides defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use starmop::model::ModelParams;
use starmop::mop::MAX_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. All are optional so that the config
/// file can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long = "t-top", allow_negative_numbers = true)]
    pub t_top: Option<f64>,
    /// Truncation point of the star; 1.02 x* by default.
    #[arg(long = "x-hat", allow_negative_numbers = true)]
    pub x_hat: Option<f64>,
    /// Polynomial degree; repeat for a sweep.
    #[arg(long = "n")]
    pub n: Vec<usize>,
    /// Starting precision of the polynomial solve.
    #[arg(long = "precision-bits")]
    pub precision_bits: Option<usize>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Largest harmonic moment index.
    #[arg(long)]
    pub moments: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with any of the fields above (snake_case; `n` is a list).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    d: Option<usize>,
    t0: Option<f64>,
    t_top: Option<f64>,
    x_hat: Option<f64>,
    n: Option<Vec<usize>>,
    precision_bits: Option<usize>,
    grid: Option<usize>,
    moments: Option<usize>,
    format: Option<Format>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub d: usize,
    pub t0: f64,
    pub t_top: f64,
    pub x_hat: f64,
    pub n: Vec<usize>,
    pub precision_bits: Option<usize>,
    pub grid: usize,
    pub moments: usize,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub seed: u64,
    #[serde(skip)]
    pub params: ModelParams,
}

/// A rejected field with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field,
        message: message.into(),
    }
}

fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| bad("config", format!("{}: {e}", path.display())))
}

pub const DEFAULT_GRID: usize = 40;
pub const DEFAULT_MOMENTS: usize = 8;
pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, ConfigError> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let d = args.d.or(file.d).ok_or_else(|| bad("d", "required"))?;
        let t0 = args.t0.or(file.t0).ok_or_else(|| bad("t0", "required"))?;
        let t_top = args
            .t_top
            .or(file.t_top)
            .ok_or_else(|| bad("t_top", "required"))?;
        if d < 2 {
            return Err(bad("d", format!("must be at least 2, got {d}")));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(bad("t0", format!("must be positive, got {t0}")));
        }
        if !(t_top > 0.0 && t_top.is_finite()) {
            return Err(bad("t_top", format!("must be positive, got {t_top}")));
        }
        let mut params = ModelParams::new(d, t0, t_top).map_err(|e| bad("t0", e.to_string()))?;
        if let Some(x) = args.x_hat.or(file.x_hat) {
            params = params
                .with_x_hat(x)
                .map_err(|e| bad("x_hat", e.to_string()))?;
        }

        let n = if args.n.is_empty() {
            file.n.unwrap_or_default()
        } else {
            args.n.clone()
        };
        if let Some(&m) = n.iter().find(|&&m| m == 0 || m % d != 0) {
            return Err(bad(
                "n",
                format!("{m} is not a positive multiple of d = {d}"),
            ));
        }
        let precision_bits = args.precision_bits.or(file.precision_bits);
        if let Some(b) = precision_bits {
            if !(64..=MAX_BITS).contains(&b) {
                return Err(bad(
                    "precision_bits",
                    format!("{b} outside 64..={MAX_BITS}"),
                ));
            }
        }
        let grid = args.grid.or(file.grid).unwrap_or(DEFAULT_GRID);
        if !(2..=100_000).contains(&grid) {
            return Err(bad("grid", format!("{grid} outside 2..=100000")));
        }
        let moments = args.moments.or(file.moments).unwrap_or(DEFAULT_MOMENTS);
        if moments > 256 {
            return Err(bad("moments", format!("{moments} above 256")));
        }
        Ok(Self {
            d,
            t0,
            t_top,
            x_hat: params.x_hat,
            n,
            precision_bits,
            grid,
            moments,
            format: args.format.or(file.format).unwrap_or(Format::Json),
            out: args.out.clone().or(file.out),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            params,
        })
    }

    /// Degrees for the polynomial commands; `2d, 4d, 6d, 8d` when none were given.
    pub fn degrees(&self) -> Vec<usize> {
        if self.n.is_empty() {
            (1..=4).map(|i| 2 * i * self.d).collect()
        } else {
            self.n.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(d: usize, t0: f64, t: f64) -> CommonArgs {
        CommonArgs {
            d: Some(d),
            t0: Some(t0),
            t_top: Some(t),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::resolve(&args(3, 0.05, 2.0)).unwrap();
        assert_eq!(c.grid, DEFAULT_GRID);
        assert_eq!(c.degrees(), vec![6, 12, 18, 24]);
        assert!((c.x_hat - 1.02 * 0.226_101_473_090_688_44).abs() < 1e-12);

        let e = RunConfig::resolve(&args(1, 0.05, 2.0)).unwrap_err();
        assert_eq!(e.field, "d");
        let e = RunConfig::resolve(&args(3, 0.5, 2.0)).unwrap_err();
        assert_eq!(e.field, "t0");
        let mut a = args(3, 0.05, 2.0);
        a.n = vec![6, 7];
        assert_eq!(RunConfig::resolve(&a).unwrap_err().field, "n");
        a.n = vec![6];
        a.x_hat = Some(0.1);
        assert_eq!(RunConfig::resolve(&a).unwrap_err().field, "x_hat");
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("starmop-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(
            &path,
            r#"{"d": 3, "t0": 0.05, "t_top": 2.0, "grid": 17, "n": [6]}"#,
        )
        .unwrap();
        let mut a = CommonArgs {
            config: Some(path.clone()),
            ..Default::default()
        };
        let c = RunConfig::resolve(&a).unwrap();
        assert_eq!((c.d, c.grid, c.n.clone()), (3, 17, vec![6]));
        a.grid = Some(9);
        a.n = vec![12];
        let c = RunConfig::resolve(&a).unwrap();
        assert_eq!((c.grid, c.n.clone()), (9, vec![12]));

        std::fs::write(&path, r#"{"d": 3, "bogus": 1}"#).unwrap();
        assert_eq!(RunConfig::resolve(&a).unwrap_err().field, "config");
        std::fs::remove_dir_all(&dir).ok();
    }
}
