//! CSV bundles, manifests and the synthetic generator.

mod generate;
mod schema;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ContractPreference, Economy, QuasiStrategy};

pub use generate::{generate, GeneratedInstance, GeneratorConfig};
pub use schema::{
    allocation_csv, contract_prefs_csv, economy_csvs, parse_allocation, parse_contract_prefs, parse_economy,
    parse_strategies, policies_csv, strategies_csvs, BRANCHES, CADETS, CONTRACT_PREFS, NO_COST, POLICIES, PRIORITIES,
    STRATEGIES, TIERS, UNMATCHED, WILLING,
};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

/// Default output directory is overridden by this variable.
pub const OUT_DIR_ENV: &str = "BRANCHING_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    /// Per branch, cadets in each tier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier_counts: Option<BTreeMap<String, Vec<usize>>>,
    /// File name to lowercase hex sha256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of an instance plus the manifest that hashes them.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceBundle {
    pub files: BTreeMap<String, String>,
    pub manifest: Manifest,
}

impl InstanceBundle {
    /// Hashes `files` into a fresh manifest.
    pub fn new(files: BTreeMap<String, String>, mut manifest: Manifest) -> Self {
        manifest.files = files.iter().map(|(k, v)| (k.clone(), sha256_hex(v.as_bytes()))).collect();
        InstanceBundle { files, manifest }
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// All files including `manifest.json`.
    pub fn all_files(&self) -> BTreeMap<String, String> {
        let mut out = self.files.clone();
        out.insert(MANIFEST.into(), self.manifest_json());
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_all_atomic(dir, &self.all_files())
    }
}

/// A bundle read from disk.
#[derive(Clone, Debug)]
pub struct LoadedBundle {
    pub dir: PathBuf,
    pub economy: Economy,
    pub preferences: Option<Vec<ContractPreference>>,
    pub strategies: Option<Vec<QuasiStrategy>>,
    pub manifest: Option<Manifest>,
}

/// Reads `dir`. When `manifest.json` is present every listed hash is checked first.
pub fn load_bundle(dir: &Path) -> Result<LoadedBundle> {
    let mpath = dir.join(MANIFEST);
    let manifest = if mpath.exists() {
        let m: Manifest = serde_json::from_str(&schema::read_text(&mpath)?).map_err(|e| Error::Manifest {
            file: MANIFEST.into(),
            detail: e.to_string(),
        })?;
        verify_manifest(dir, &m)?;
        Some(m)
    } else {
        None
    };
    let economy = parse_economy(dir)?;
    let p = dir.join(CONTRACT_PREFS);
    let preferences = if p.exists() { Some(parse_contract_prefs(&p, &economy)?) } else { None };
    let s = dir.join(STRATEGIES);
    let w = dir.join(WILLING);
    let strategies = if s.exists() {
        Some(parse_strategies(&s, w.exists().then_some(w.as_path()), &economy)?)
    } else {
        None
    };
    Ok(LoadedBundle {
        dir: dir.to_path_buf(),
        economy,
        preferences,
        strategies,
        manifest,
    })
}

pub fn verify_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    if m.format_version != FORMAT_VERSION {
        return Err(Error::Manifest {
            file: MANIFEST.into(),
            detail: format!("format_version {} is not {FORMAT_VERSION}", m.format_version),
        });
    }
    for (name, want) in &m.files {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let got = sha256_hex(&bytes);
        if &got != want {
            return Err(Error::Manifest {
                file: name.clone(),
                detail: format!("sha256 {got} does not match manifest {want}"),
            });
        }
    }
    Ok(())
}

/// Writes every file to a temporary sibling, then renames them into place.
/// Nothing is renamed unless all temporaries were written.
pub fn write_all_atomic(dir: &Path, files: &BTreeMap<String, String>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = std::fs::remove_file(tmp);
        }
    };
    for (name, text) in files {
        let dest = dir.join(name);
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        let res = std::fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(text.as_bytes())?;
            f.sync_all()
        });
        if let Err(e) = res {
            cleanup(&staged);
            let _ = std::fs::remove_file(&tmp);
            return Err(Error::io(&tmp, e));
        }
        staged.push((tmp, dest));
    }
    for (tmp, dest) in &staged {
        std::fs::rename(tmp, dest).map_err(|e| Error::io(dest, e))?;
    }
    Ok(())
}

pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    write_all_atomic(dir, &BTreeMap::from([(name.to_string_lossy().into_owned(), text.to_string())]))
}
