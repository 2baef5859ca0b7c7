//! Workspace configuration: where the inputs live and which defaults
//! apply. All paths in the file resolve relative to the file's own
//! directory, so a workspace can be moved around freely.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use serde::{Deserialize, Serialize};

use intelliad_core::analytics::{DataPlan, RevenueInputs, BYTES_PER_GB};
use intelliad_core::inspector::AdNetworkCatalog;
use intelliad_core::power::PowerModel;
use intelliad_core::reviews::{default_stopwords, load_stopwords, KeywordTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Defaults {
    pub k: usize,
    pub rating_cutoff: u8,
    pub runs_expected: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub embed_window: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            k: intelliad_core::reviews::DEFAULT_K,
            rating_cutoff: intelliad_core::reviews::DEFAULT_RATING_CUTOFF,
            runs_expected: intelliad_core::profiler::DEFAULT_RUNS_EXPECTED,
            seed: 1,
            embed_dim: 32,
            embed_window: 2,
        }
    }
}

/// A data plan in config form; either the byte quota or a GB count
/// (1024^3 bytes each) must be present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPlanConfig {
    pub price: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quota_bytes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quota_gb: Option<f64>,
}

impl DataPlanConfig {
    pub fn to_plan(self) -> Result<DataPlan> {
        let quota_bytes = match (self.quota_bytes, self.quota_gb) {
            (Some(bytes), _) => bytes,
            (None, Some(gb)) => gb * BYTES_PER_GB,
            (None, None) => bail!("data_plan needs quota_bytes or quota_gb"),
        };
        if quota_bytes <= 0.0 {
            bail!("data_plan quota must be positive");
        }
        Ok(DataPlan {
            price: self.price,
            quota_bytes,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkspaceConfig {
    pub catalog: Option<PathBuf>,
    pub power_model: Option<PathBuf>,
    pub keyword_table: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub reviews: Option<PathBuf>,
    pub scheme_map: Option<PathBuf>,
    pub apps: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub traces: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub revenue: Option<RevenueInputs>,
    pub data_plan: Option<DataPlanConfig>,
    pub defaults: Defaults,
}

/// A loaded config plus the directory its relative paths resolve
/// against, merged with command-line overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: WorkspaceConfig,
    base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub rating_cutoff: u8,
    pub runs: usize,
}

pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub rating_cutoff: Option<u8>,
    pub runs: Option<usize>,
}

impl Context {
    pub fn load(config_path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let (config, base_dir) = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read config {}", path.display()))?;
                let config: WorkspaceConfig = serde_json::from_str(&text)
                    .with_context(|| format!("malformed config {}", path.display()))?;
                let base = path
                    .parent()
                    .filter(|p| !p.as_os_str().is_empty())
                    .unwrap_or_else(|| Path::new("."))
                    .to_path_buf();
                (config, base)
            }
            None => (WorkspaceConfig::default(), PathBuf::from(".")),
        };
        let out_dir = overrides
            .out
            .or_else(|| config.out_dir.as_ref().map(|p| resolve(&base_dir, p)))
            .unwrap_or_else(|| base_dir.join("out"));
        Ok(Context {
            seed: overrides.seed.unwrap_or(config.defaults.seed),
            k: overrides.k.unwrap_or(config.defaults.k),
            rating_cutoff: overrides.rating_cutoff.unwrap_or(config.defaults.rating_cutoff),
            runs: overrides.runs.unwrap_or(config.defaults.runs_expected),
            config,
            base_dir,
            out_dir,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        resolve(&self.base_dir, path)
    }

    pub fn catalog(&self) -> Result<AdNetworkCatalog> {
        match &self.config.catalog {
            Some(path) => {
                let path = self.resolve(path);
                AdNetworkCatalog::load(&path)
                    .with_context(|| format!("loading catalog {}", path.display()))
            }
            None => Ok(AdNetworkCatalog::builtin()),
        }
    }

    pub fn keyword_table(&self) -> Result<KeywordTable> {
        match &self.config.keyword_table {
            Some(path) => {
                let path = self.resolve(path);
                KeywordTable::load(&path)
                    .with_context(|| format!("loading keyword table {}", path.display()))
            }
            None => Ok(KeywordTable::builtin()),
        }
    }

    pub fn stopwords(&self) -> Result<std::collections::BTreeSet<String>> {
        match &self.config.stopwords {
            Some(path) => {
                let path = self.resolve(path);
                load_stopwords(&path)
                    .with_context(|| format!("loading stopwords {}", path.display()))
            }
            None => Ok(default_stopwords()),
        }
    }

    pub fn power_model(&self) -> Result<PowerModel> {
        let path = self
            .config
            .power_model
            .as_ref()
            .context("config has no power_model path")?;
        let path = self.resolve(path);
        PowerModel::load(&path)
            .with_context(|| format!("loading power model {}", path.display()))
    }

    pub fn scheme_map(&self) -> Result<BTreeMap<String, String>> {
        let path = self
            .config
            .scheme_map
            .as_ref()
            .context("config has no scheme_map path")?;
        let path = self.resolve(path);
        let text = fs::read_to_string(&path)
            .with_context(|| format!("cannot read scheme map {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("malformed scheme map {}", path.display()))
    }

    /// Default traces directory: configured path or `<out>/traces`.
    pub fn traces_dir(&self) -> PathBuf {
        self.config
            .traces
            .as_ref()
            .map(|p| self.resolve(p))
            .unwrap_or_else(|| self.out_dir.join("traces"))
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Stable per-session seed derivation, so one workspace seed fans out to
/// distinct but reproducible per-run generator seeds.
pub fn derive_seed(base: u64, label: &str, run: usize) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = FNV_OFFSET;
    for byte in label.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    let mut x = base
        ^ hash
        ^ (run as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
