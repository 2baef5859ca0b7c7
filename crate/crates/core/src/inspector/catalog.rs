//! Ad network catalog: which compiled type prefixes, source constants,
//! and layout elements identify each network's SDK.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Display shape of an ad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdFormat {
    Banner,
    SmartBanner,
    FullBanner,
    Interstitial,
    Video,
}

impl AdFormat {
    /// Fixed pixel size on a phone display, where the format defines one.
    pub fn nominal_size(self) -> Option<(u32, u32)> {
        match self {
            AdFormat::Banner => Some((320, 50)),
            AdFormat::FullBanner => Some((468, 60)),
            AdFormat::SmartBanner | AdFormat::Interstitial | AdFormat::Video => None,
        }
    }
}

impl fmt::Display for AdFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AdFormat::Banner => "Banner",
            AdFormat::SmartBanner => "SmartBanner",
            AdFormat::FullBanner => "FullBanner",
            AdFormat::Interstitial => "Interstitial",
            AdFormat::Video => "Video",
        };
        f.write_str(name)
    }
}

/// Detection signatures for one ad network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    /// Fully-qualified type-name prefixes in dotted form, each ending
    /// with a dot (e.g. "com.google.android.gms.ads.").
    pub type_prefixes: Vec<String>,
    /// Source constant or type token mapped to the format it declares
    /// (e.g. "BANNER" or "InterstitialAd").
    #[serde(default)]
    pub format_constants: BTreeMap<String, AdFormat>,
    /// Layout XML element names that render this network's ads.
    #[serde(default)]
    pub layout_markers: Vec<String>,
}

/// All known networks, keyed by display name. Iteration order (and thus
/// detection-report order) is the lexicographic name order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdNetworkCatalog {
    pub entries: BTreeMap<String, NetworkEntry>,
}

const BUILTIN_CATALOG: &str = include_str!("../../data/catalog.json");

impl AdNetworkCatalog {
    /// The catalog shipped with the crate, covering AdMob, MoPub, Amazon,
    /// and InMobi. Extend it by shipping a bigger catalog file.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_CATALOG).expect("bundled catalog is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let catalog: AdNetworkCatalog =
            serde_json::from_str(text).map_err(CatalogError::Parse)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CatalogError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        if self.entries.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for (network, entry) in &self.entries {
            if entry.type_prefixes.is_empty() {
                return Err(CatalogError::Invalid(format!(
                    "network {network} has no type prefixes"
                )));
            }
            for prefix in &entry.type_prefixes {
                if prefix.is_empty() {
                    return Err(CatalogError::Invalid(format!(
                        "network {network} has an empty type prefix"
                    )));
                }
                if let Some(first) = seen.insert(prefix, network) {
                    return Err(CatalogError::DuplicatePrefix {
                        prefix: prefix.clone(),
                        first: first.to_string(),
                        second: network.clone(),
                    });
                }
            }
            for constant in entry.format_constants.keys() {
                if constant.is_empty() {
                    return Err(CatalogError::Invalid(format!(
                        "network {network} maps an empty format constant"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Loads and validates a catalog file.
pub fn load_catalog(path: &Path) -> Result<AdNetworkCatalog, CatalogError> {
    AdNetworkCatalog::load(path)
}

#[derive(Debug)]
pub enum CatalogError {
    Io(String, std::io::Error),
    Parse(serde_json::Error),
    Empty,
    DuplicatePrefix {
        prefix: String,
        first: String,
        second: String,
    },
    Invalid(String),
}

impl fmt::Display for CatalogError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogError::Io(path, err) => write!(f, "cannot read catalog {path}: {err}"),
            CatalogError::Parse(err) => write!(f, "malformed catalog: {err}"),
            CatalogError::Empty => write!(f, "malformed catalog: no networks defined"),
            CatalogError::DuplicatePrefix { prefix, first, second } => write!(
                f,
                "malformed catalog: networks {first} and {second} share type prefix {prefix}"
            ),
            CatalogError::Invalid(msg) => write!(f, "malformed catalog: {msg}"),
        }
    }
}

impl std::error::Error for CatalogError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CatalogError::Io(_, err) => Some(err),
            CatalogError::Parse(err) => Some(err),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_the_four_reference_networks() {
        let catalog = AdNetworkCatalog::builtin();
        for network in ["AdMob", "MoPub", "Amazon", "InMobi"] {
            assert!(catalog.entries.contains_key(network), "missing {network}");
        }
    }

    #[test]
    fn single_network_catalog_loads() {
        let text = r#"{
            "AdMob": {
                "type_prefixes": ["com.google.android.gms.ads."],
                "format_constants": {"BANNER": "Banner"},
                "layout_markers": []
            }
        }"#;
        let catalog = AdNetworkCatalog::from_json(text).unwrap();
        assert_eq!(catalog.entries.len(), 1);
        assert!(catalog.entries["AdMob"]
            .type_prefixes
            .contains(&"com.google.android.gms.ads.".to_string()));
    }

    #[test]
    fn empty_object_is_malformed() {
        assert!(matches!(
            AdNetworkCatalog::from_json("{}"),
            Err(CatalogError::Empty)
        ));
    }

    #[test]
    fn shared_prefix_is_malformed() {
        let text = r#"{
            "NetA": {"type_prefixes": ["com.x."]},
            "NetB": {"type_prefixes": ["com.x."]}
        }"#;
        assert!(matches!(
            AdNetworkCatalog::from_json(text),
            Err(CatalogError::DuplicatePrefix { .. })
        ));
    }

    #[test]
    fn unknown_format_constant_is_malformed() {
        let text = r#"{
            "NetA": {"type_prefixes": ["com.x."], "format_constants": {"BANNER": "Billboard"}}
        }"#;
        assert!(matches!(
            AdNetworkCatalog::from_json(text),
            Err(CatalogError::Parse(_))
        ));
    }

    #[test]
    fn nominal_sizes_match_standard_formats() {
        assert_eq!(AdFormat::Banner.nominal_size(), Some((320, 50)));
        assert_eq!(AdFormat::FullBanner.nominal_size(), Some((468, 60)));
        assert_eq!(AdFormat::SmartBanner.nominal_size(), None);
        assert_eq!(AdFormat::Interstitial.nominal_size(), None);
    }
}
