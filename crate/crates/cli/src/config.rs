//! TOML run configuration.
//!
//! Every table is optional; each subcommand checks for the tables it reads.
//!
//! ```toml
//! seed = 7
//! out_dir = "runs/demo"
//!
//! [domain]
//! kind = "half_space"
//! d = 2
//!
//! [weight]
//! kind = "log"
//!
//! [kernel]
//! kind = "neumann"
//! alpha = 1.0
//!
//! [suite.aikawa]
//! samples = 100000
//! ```

use std::path::{Path, PathBuf};

use bbhk_core::geometry::DomainSpec;
use bbhk_core::kernels::KernelKind;
use bbhk_core::simulate::Model;
use bbhk_core::verify::{SuiteName, SuiteParams};
use bbhk_core::weights::{WeightKind, WeightSpec};
use serde::Deserialize;

use crate::CliError;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "BBHK_SEED";
/// Environment variable holding the worker count.
pub const THREADS_ENV: &str = "BBHK_THREADS";

pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub domain: Option<DomainSpec<f64>>,
    pub weight: Option<WeightTable>,
    pub kernel: Option<KernelTable>,
    pub sim: Option<SimTable>,
    pub grid: Option<GridTable>,
    /// Suites run by `suite all`; all of them when absent.
    pub suites: Option<Vec<SuiteName>>,
    #[serde(default)]
    pub suite: SuiteParams,
}

#[derive(Clone, Debug, Deserialize)]
pub struct WeightTable {
    #[serde(flatten)]
    pub kind: WeightKind<f64>,
    /// Truncation length; the domain's `diam(D^c)` when absent.
    pub a0: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct KernelTable {
    #[serde(flatten)]
    pub kind: KernelKind<f64>,
    pub alpha: f64,
    pub rel_tol: Option<f64>,
    pub mc_samples: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTable {
    pub model: Model,
    pub alpha: f64,
    pub t: f64,
    pub n_paths: usize,
    pub dt: Option<f64>,
    pub x0: Vec<f64>,
    /// Bandwidth for `hk-check`, in units of `t^{1/α}`.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
}

fn default_bandwidth() -> f64 {
    0.25
}

/// Points and scales for the grid subcommands.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridTable {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub widths: Vec<f64>,
    pub samples: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Flag, then config, then environment, then the built-in default.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| CliError::Config(format!("{SEED_ENV}={v} is not an unsigned integer"))),
            Err(_) => Ok(DEFAULT_SEED),
        }
    }

    pub fn resolve_out(&self, flag: Option<PathBuf>, fallback: &str) -> PathBuf {
        flag.or_else(|| self.out_dir.clone()).unwrap_or_else(|| PathBuf::from(fallback))
    }

    pub fn domain(&self) -> Result<DomainSpec<f64>, CliError> {
        let d = self.domain.clone().ok_or_else(|| missing("domain"))?;
        d.validate()?;
        Ok(d)
    }

    pub fn weight(&self, dom: &DomainSpec<f64>) -> Result<WeightSpec<f64>, CliError> {
        let w = match &self.weight {
            Some(t) => WeightSpec::new(t.kind).with_a0(t.a0.unwrap_or_else(|| dom.a0())),
            None => WeightSpec::log().with_a0(dom.a0()),
        };
        w.validate()?;
        Ok(w)
    }

    pub fn kernel(&self) -> Result<&KernelTable, CliError> {
        self.kernel.as_ref().ok_or_else(|| missing("kernel"))
    }

    pub fn sim(&self) -> Result<&SimTable, CliError> {
        self.sim.as_ref().ok_or_else(|| missing("sim"))
    }

    pub fn grid(&self) -> Result<&GridTable, CliError> {
        self.grid.as_ref().ok_or_else(|| missing("grid"))
    }
}

fn missing(table: &str) -> CliError {
    CliError::Config(format!("config has no [{table}] table"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use bbhk_core::verify::SuiteParams;

    #[test]
    fn committed_suite_configs_hold_the_defaults() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        for name in SuiteName::ALL {
            let cfg = RunConfig::load(&dir.join(format!("{name}.toml"))).unwrap();
            assert_eq!(cfg.suite, SuiteParams::default(), "{name}");
            assert_eq!(cfg.seed, Some(7));
        }
        let grid = RunConfig::load(&dir.join("grid.toml")).unwrap();
        grid.domain().unwrap();
        grid.kernel().unwrap();
        grid.sim().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("sed = 3"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("[suite.aikawa]\nsample = 3"), Err(CliError::Config(_))));
    }

    #[test]
    fn flag_seed_beats_config_seed() {
        let cfg = RunConfig::parse("seed = 4").unwrap();
        assert_eq!(cfg.resolve_seed(Some(9)).unwrap(), 9);
        assert_eq!(cfg.resolve_seed(None).unwrap(), 4);
    }
}
