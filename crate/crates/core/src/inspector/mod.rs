//! Ad integration detection on app packages.
//!
//! Two ingestion paths cover the common cases without full bytecode
//! analysis:
//!
//! - a decompiled tree (apktool-style smali or decompiled java sources
//!   plus decoded layout XML) supports network detection, ad format
//!   extraction, and ad counting;
//! - a raw `.dex` image supports network detection only, by scanning the
//!   type-descriptor string table.
//!
//! Formats come from the two declaration routes seen in real apps: size
//! constants referenced in code (`AdSize.BANNER`), and ad views declared
//! in layout XML whose resource id the code references. Layouts must be
//! decoded to plain XML first; binary AXML is not handled here.
//! Obfuscated packages that rename ad SDK types defeat prefix matching
//! and are a documented limitation.

pub mod catalog;
pub mod dex;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

pub use catalog::{load_catalog, AdFormat, AdNetworkCatalog, CatalogError, NetworkEntry};
pub use dex::DexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    DecompiledTree,
    RawDex,
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputKind::DecompiledTree => f.write_str("decompiled tree"),
            InputKind::RawDex => f.write_str("raw dex"),
        }
    }
}

const CODE_EXTENSIONS: [&str; 2] = ["smali", "java"];

/// One app package on disk, either a decompiled tree or a directory
/// holding `.dex` files. Construction verifies the directory actually
/// contains input of the declared kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppPackageInput {
    kind: InputKind,
    root: PathBuf,
}

impl AppPackageInput {
    pub fn decompiled_tree(root: impl Into<PathBuf>) -> Result<Self, InspectorError> {
        Self::with_kind(root.into(), InputKind::DecompiledTree)
    }

    pub fn raw_dex(root: impl Into<PathBuf>) -> Result<Self, InspectorError> {
        Self::with_kind(root.into(), InputKind::RawDex)
    }

    /// Picks the kind from the directory contents: any `.dex` file means
    /// a raw package, otherwise a decompiled tree.
    pub fn infer(root: impl Into<PathBuf>) -> Result<Self, InspectorError> {
        let root = root.into();
        if files_with_extensions(&root, &["dex"])?.is_empty() {
            Self::with_kind(root, InputKind::DecompiledTree)
        } else {
            Self::with_kind(root, InputKind::RawDex)
        }
    }

    fn with_kind(root: PathBuf, kind: InputKind) -> Result<Self, InspectorError> {
        let wanted: &[&str] = match kind {
            InputKind::DecompiledTree => &CODE_EXTENSIONS,
            InputKind::RawDex => &["dex"],
        };
        if files_with_extensions(&root, wanted)?.is_empty() {
            return Err(InspectorError::NoInputFiles {
                path: root.display().to_string(),
                kind,
            });
        }
        Ok(AppPackageInput { kind, root })
    }

    pub fn kind(&self) -> InputKind {
        self.kind
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

/// One detected ad: the serving network and the declared format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub network: String,
    pub format: AdFormat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeWarning {
    /// Code references an ad view id that no layout file declares. The
    /// placement is kept with the modal Banner format.
    DanglingLayoutId {
        id: String,
        network: String,
        file: String,
    },
}

impl fmt::Display for SchemeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeWarning::DanglingLayoutId { id, network, file } => write!(
                f,
                "{file}: ad view id {id:?} ({network}) not found in any layout; assuming Banner"
            ),
        }
    }
}

/// The ad networks and formats one app integrates, in detection order.
/// Duplicates are meaningful: an app embedding two banners of the same
/// network yields two placements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdIntegrationScheme {
    placements: Vec<Placement>,
    warnings: Vec<SchemeWarning>,
}

impl AdIntegrationScheme {
    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Always equal to the number of placements.
    pub fn ad_count(&self) -> usize {
        self.placements.len()
    }

    pub fn warnings(&self) -> &[SchemeWarning] {
        &self.warnings
    }
}

/// JSON shape of one app's scheme report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub app_id: String,
    pub placements: Vec<Placement>,
    pub ad_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SchemeReport {
    pub fn new(app_id: impl Into<String>, scheme: &AdIntegrationScheme) -> Self {
        SchemeReport {
            app_id: app_id.into(),
            ad_count: scheme.ad_count(),
            placements: scheme.placements().to_vec(),
            warnings: scheme.warnings().iter().map(|w| w.to_string()).collect(),
        }
    }
}

fn files_with_extensions(root: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, InspectorError> {
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| InspectorError::UnreadableInput {
            path: root.display().to_string(),
            source: e.into_io_error().unwrap_or_else(|| {
                std::io::Error::other("walk error")
            }),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let matches = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|want| e.eq_ignore_ascii_case(want)));
        if matches {
            files.push(entry.path().to_path_buf());
        }
    }
    Ok(files)
}

fn read_text(path: &Path) -> Result<String, InspectorError> {
    let bytes = fs::read(path).map_err(|e| InspectorError::UnreadableInput {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// "com.a.b." in the dotted spelling becomes "Lcom/a/b/" in descriptors.
fn descriptor_prefix(dotted: &str) -> String {
    format!("L{}", dotted.replace('.', "/"))
}

fn prefix_occurs(text: &str, dotted: &str) -> bool {
    text.contains(dotted) || text.contains(&descriptor_prefix(dotted))
}

fn entry_occurs(text: &str, entry: &NetworkEntry) -> bool {
    entry.type_prefixes.iter().any(|p| prefix_occurs(text, p))
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Byte offsets of identifier-bounded occurrences of `token`, so BANNER
/// never matches inside SMART_BANNER.
fn token_positions(haystack: &str, token: &str) -> Vec<usize> {
    haystack
        .match_indices(token)
        .filter(|(pos, _)| {
            let before_ok = haystack[..*pos]
                .chars()
                .next_back()
                .is_none_or(|c| !is_ident_char(c));
            let after_ok = haystack[pos + token.len()..]
                .chars()
                .next()
                .is_none_or(|c| !is_ident_char(c));
            before_ok && after_ok
        })
        .map(|(pos, _)| pos)
        .collect()
}

/// Which networks the package references. Tree mode scans code files for
/// either spelling of each type prefix; raw-dex mode scans only the dex
/// type tables.
pub fn detect_networks(
    input: &AppPackageInput,
    catalog: &AdNetworkCatalog,
) -> Result<BTreeSet<String>, InspectorError> {
    match input.kind {
        InputKind::DecompiledTree => {
            let mut found = BTreeSet::new();
            for path in files_with_extensions(&input.root, &CODE_EXTENSIONS)? {
                let text = read_text(&path)?;
                for (network, entry) in &catalog.entries {
                    if !found.contains(network) && entry_occurs(&text, entry) {
                        found.insert(network.clone());
                    }
                }
            }
            Ok(found)
        }
        InputKind::RawDex => {
            let mut found = BTreeSet::new();
            for path in files_with_extensions(&input.root, &["dex"])? {
                let bytes = fs::read(&path).map_err(|e| InspectorError::UnreadableInput {
                    path: path.display().to_string(),
                    source: e,
                })?;
                let descriptors = dex::type_descriptors(&bytes).map_err(|e| {
                    InspectorError::DexParse {
                        path: path.display().to_string(),
                        source: e,
                    }
                })?;
                for (network, entry) in &catalog.entries {
                    if found.contains(network) {
                        continue;
                    }
                    let hit = entry.type_prefixes.iter().any(|p| {
                        let descriptor = descriptor_prefix(p);
                        descriptors.iter().any(|d| d.starts_with(&descriptor))
                    });
                    if hit {
                        found.insert(network.clone());
                    }
                }
            }
            Ok(found)
        }
    }
}

/// An ad view declared in layout XML: resolved network, declared format,
/// and the android:id it can be referenced by.
#[derive(Debug, Clone, PartialEq, Eq)]
struct LayoutAd {
    network: String,
    format: AdFormat,
}

fn layout_element_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"<\s*([A-Za-z_][A-Za-z0-9_.$]*)((?:[^>"']|"[^"]*"|'[^']*')*?)/?>"#).unwrap()
    })
}

fn attr_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"([A-Za-z0-9_:.-]+)\s*=\s*"([^"]*)""#).unwrap())
}

fn xml_comment_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<!--.*?-->").unwrap())
}

fn strip_id_reference(value: &str) -> Option<&str> {
    value
        .strip_prefix("@+id/")
        .or_else(|| value.strip_prefix("@id/"))
}

/// Scans decoded layout XML for catalog ad views, keyed by android:id.
/// The first declaration of an id wins (duplicate ids across orientation
/// variants describe the same ad).
fn index_layout_ads(
    root: &Path,
    catalog: &AdNetworkCatalog,
) -> Result<BTreeMap<String, LayoutAd>, InspectorError> {
    let mut index = BTreeMap::new();
    for path in files_with_extensions(root, &["xml"])? {
        let text = read_text(&path)?;
        let text = xml_comment_re().replace_all(&text, " ");
        for caps in layout_element_re().captures_iter(&text) {
            let tag = caps.get(1).map_or("", |m| m.as_str());
            let network = catalog.entries.iter().find_map(|(network, entry)| {
                let by_prefix = entry.type_prefixes.iter().any(|p| tag.starts_with(p.as_str()));
                let by_marker = entry.layout_markers.iter().any(|m| m == tag);
                (by_prefix || by_marker).then_some((network, entry))
            });
            let Some((network, entry)) = network else {
                continue;
            };
            let attrs = caps.get(2).map_or("", |m| m.as_str());
            let mut id = None;
            let mut format = None;
            for attr in attr_re().captures_iter(attrs) {
                let name = attr.get(1).map_or("", |m| m.as_str());
                let value = attr.get(2).map_or("", |m| m.as_str());
                if name == "android:id" || name == "id" {
                    id = strip_id_reference(value).map(str::to_owned);
                    continue;
                }
                if format.is_none() {
                    format = entry
                        .format_constants
                        .iter()
                        .find(|(constant, _)| !token_positions(value, constant).is_empty())
                        .map(|(_, f)| *f);
                }
            }
            if let Some(id) = id {
                index.entry(id).or_insert(LayoutAd {
                    network: network.clone(),
                    // A sized ad view defaults to the standard banner.
                    format: format.unwrap_or(AdFormat::Banner),
                });
            }
        }
    }
    Ok(index)
}

fn r_id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"R(?:\.id\.|\$id;->)([A-Za-z0-9_]+)").unwrap())
}

/// Resolves the ad formats of every detected network and counts the
/// embedded ads. Requires a decompiled tree; formats are not recoverable
/// from a bare dex type table.
pub fn extract_ad_formats(
    input: &AppPackageInput,
    catalog: &AdNetworkCatalog,
) -> Result<AdIntegrationScheme, InspectorError> {
    if input.kind != InputKind::DecompiledTree {
        return Err(InspectorError::UnsupportedInputKind { kind: input.kind });
    }
    let detected = detect_networks(input, catalog)?;
    let layout_ads = index_layout_ads(&input.root, catalog)?;

    let mut scheme = AdIntegrationScheme::default();
    // A resource id names one declared ad view no matter how often the
    // code looks it up, so the id route counts each id once app-wide.
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();
    for path in files_with_extensions(&input.root, &CODE_EXTENSIONS)? {
        let text = read_text(&path)?;
        let file_networks: Vec<&String> = detected
            .iter()
            .filter(|n| entry_occurs(&text, &catalog.entries[*n]))
            .collect();
        if file_networks.is_empty() {
            continue;
        }
        // Decompiled code repeats a type token on every line touching it
        // (new-instance, invoke, check-cast), and one activity renders at
        // most one ad per format, so a constant counts once per file.
        let mut seen_constants: BTreeSet<(String, String)> = BTreeSet::new();
        for line in text.lines() {
            let line_networks: Vec<&String> = file_networks
                .iter()
                .copied()
                .filter(|n| entry_occurs(line, &catalog.entries[*n]))
                .collect();

            // Placements found on this line, ordered by match position so
            // detection order follows the source.
            let mut events: Vec<(usize, Placement)> = Vec::new();

            for caps in r_id_re().captures_iter(line) {
                let id = caps.get(1).map_or("", |m| m.as_str());
                let pos = caps.get(0).map(|m| m.start()).unwrap_or(0);
                if let Some(ad) = layout_ads.get(id) {
                    if detected.contains(&ad.network) && seen_ids.insert(id.to_string()) {
                        events.push((
                            pos,
                            Placement {
                                network: ad.network.clone(),
                                format: ad.format,
                            },
                        ));
                    }
                } else if !seen_ids.contains(id) {
                    if let Some(network) = line_networks.first() {
                        // The line manipulates an ad type but the id has
                        // no layout declaration: keep the placement,
                        // warn, and fall back to the modal banner format.
                        seen_ids.insert(id.to_string());
                        scheme.warnings.push(SchemeWarning::DanglingLayoutId {
                            id: id.to_string(),
                            network: (*network).clone(),
                            file: path.display().to_string(),
                        });
                        events.push((
                            pos,
                            Placement {
                                network: (*network).clone(),
                                format: AdFormat::Banner,
                            },
                        ));
                    }
                }
            }

            // Constants attribute to the network named on the same line;
            // a file referencing exactly one network covers declarations
            // split across lines (common in decompiled java).
            let constant_networks: &[&String] = if !line_networks.is_empty() {
                &line_networks
            } else if file_networks.len() == 1 {
                &file_networks
            } else {
                &[]
            };
            for network in constant_networks {
                for (constant, format) in &catalog.entries[*network].format_constants {
                    for pos in token_positions(line, constant) {
                        let key = ((*network).clone(), constant.clone());
                        if seen_constants.insert(key) {
                            events.push((
                                pos,
                                Placement {
                                    network: (*network).clone(),
                                    format: *format,
                                },
                            ));
                        }
                    }
                }
            }

            events.sort_by_key(|(pos, _)| *pos);
            scheme.placements.extend(events.into_iter().map(|(_, p)| p));
        }
    }
    Ok(scheme)
}

#[derive(Debug)]
pub enum InspectorError {
    Catalog(CatalogError),
    UnreadableInput { path: String, source: std::io::Error },
    DexParse { path: String, source: DexError },
    UnsupportedInputKind { kind: InputKind },
    NoInputFiles { path: String, kind: InputKind },
}

impl fmt::Display for InspectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InspectorError::Catalog(err) => err.fmt(f),
            InspectorError::UnreadableInput { path, source } => {
                write!(f, "unreadable input {path}: {source}")
            }
            InspectorError::DexParse { path, source } => write!(f, "{path}: {source}"),
            InspectorError::UnsupportedInputKind { kind } => {
                write!(f, "ad format extraction requires a decompiled tree, got {kind}")
            }
            InspectorError::NoInputFiles { path, kind } => {
                write!(f, "{path} contains no files usable as {kind} input")
            }
        }
    }
}

impl std::error::Error for InspectorError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            InspectorError::Catalog(err) => Some(err),
            InspectorError::UnreadableInput { source, .. } => Some(source),
            InspectorError::DexParse { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<CatalogError> for InspectorError {
    fn from(err: CatalogError) -> Self {
        InspectorError::Catalog(err)
    }
}
