//! Named dielectric models.
//!
//! A registry file is TOML:
//!
//! ```toml
//! [materials.au-palik]
//! model = "tabulated"
//! plasma_ev = 9.0
//! relaxation_ev = 0.035
//! data = "au_eps2.csv"     # relative to the registry file
//! splice_ev = 0.125        # optional, defaults to the first row
//! ```
//!
//! Entries are layered over the built-ins `ideal`, `au` and `cu` (Drude
//! 9.0/0.035 eV and 8.9/0.030 eV, conventional literature values).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use casimir_core::materials::{DielectricModel, DrudeParams};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::io;

pub const DATA_DIR_ENV: &str = "CASIMIR_DATA_DIR";
pub const REGISTRY_FILE: &str = "materials.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Perfect,
    Drude,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub model: ModelKind,
    pub plasma_ev: Option<f64>,
    pub relaxation_ev: Option<f64>,
    pub data: Option<PathBuf>,
    pub splice_ev: Option<f64>,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    materials: BTreeMap<String, MaterialEntry>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    entries: BTreeMap<String, MaterialEntry>,
    /// Directory relative data paths resolve against.
    root: PathBuf,
}

fn drude_entry(d: DrudeParams, description: &str) -> MaterialEntry {
    MaterialEntry {
        model: ModelKind::Drude,
        plasma_ev: Some(d.plasma_ev),
        relaxation_ev: Some(d.relaxation_ev),
        data: None,
        splice_ev: None,
        description: description.into(),
    }
}

impl Registry {
    pub fn builtin() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            "ideal".into(),
            MaterialEntry {
                model: ModelKind::Perfect,
                plasma_ev: None,
                relaxation_ev: None,
                data: None,
                splice_ev: None,
                description: "perfect conductor".into(),
            },
        );
        entries.insert("au".into(), drude_entry(DrudeParams::GOLD_DEFAULT, "gold, Drude defaults"));
        entries.insert("cu".into(), drude_entry(DrudeParams::COPPER_DEFAULT, "copper, Drude defaults"));
        Registry {
            entries,
            root: PathBuf::from("."),
        }
    }

    /// Built-ins overlaid with the entries of a registry file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let file: RegistryFile = toml::from_str(&text).map_err(|e| toml_error(path, &text, &e))?;
        let mut reg = Registry::builtin();
        reg.entries.extend(file.materials);
        reg.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(reg)
    }

    /// An explicit registry file, else `$CASIMIR_DATA_DIR/materials.toml`
    /// when present, else the built-ins.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Registry::load(p);
        }
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let dir = PathBuf::from(dir);
            let file = dir.join(REGISTRY_FILE);
            if file.is_file() {
                return Registry::load(&file);
            }
            let mut reg = Registry::builtin();
            reg.root = dir;
            return Ok(reg);
        }
        Ok(Registry::builtin())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entry(&self, name: &str) -> Result<&MaterialEntry> {
        self.entries.get(name).ok_or_else(|| {
            casimir_core::Error::Config(format!(
                "unknown material `{name}`; registry has: {}",
                self.names().collect::<Vec<_>>().join(", ")
            ))
            .into()
        })
    }

    pub fn model(&self, name: &str) -> Result<DielectricModel> {
        let e = self.entry(name)?;
        let missing = |field: &str| -> CliError {
            casimir_core::Error::Config(format!("material `{name}`: `{field}` is required for this model")).into()
        };
        let drude = || -> Result<DrudeParams> {
            let p = e.plasma_ev.ok_or_else(|| missing("plasma_ev"))?;
            let g = e.relaxation_ev.ok_or_else(|| missing("relaxation_ev"))?;
            Ok(DrudeParams::new(p, g)?)
        };
        Ok(match e.model {
            ModelKind::Perfect => DielectricModel::PerfectConductor,
            ModelKind::Drude => DielectricModel::DrudeOnly(drude()?),
            ModelKind::Tabulated => {
                let rel = e.data.as_ref().ok_or_else(|| missing("data"))?;
                let path = if rel.is_absolute() { rel.clone() } else { self.root.join(rel) };
                let table = io::read_optical_table(&path)?;
                DielectricModel::tabulated(table, drude()?, e.splice_ev)?
            }
        })
    }
}

/// Checks on one registry entry.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialReport {
    pub name: String,
    pub model: ModelKind,
    /// `eps(i xi)` at 0.01, 0.1, 1, 10 and 100 eV.
    pub samples: Vec<(f64, f64)>,
    /// Relative jump in real-axis absorption at the splice.
    pub splice_jump: Option<f64>,
}

pub const SPLICE_JUMP_LIMIT: f64 = 1e-2;

impl Registry {
    pub fn validate(&self, name: &str) -> Result<MaterialReport> {
        let e = self.entry(name)?;
        let model = self.model(name)?;
        let mut samples = Vec::new();
        if !model.is_perfect_conductor() {
            let mut prev = f64::INFINITY;
            for xi in [0.01, 0.1, 1.0, 10.0, 100.0] {
                let eps = model.eval(xi)?;
                if !(eps >= 1.0 && eps <= prev) {
                    return Err(casimir_core::Error::Validation(format!(
                        "material `{name}`: eps(i xi) = {eps:e} at {xi} eV breaks monotone decay to 1"
                    ))
                    .into());
                }
                prev = eps;
                samples.push((xi, eps));
            }
        }
        let splice_jump = model
            .splice_absorption()
            .map(|(below, above)| (below - above).abs() / above.abs().max(f64::MIN_POSITIVE));
        Ok(MaterialReport {
            name: name.into(),
            model: e.model,
            samples,
            splice_jump,
        })
    }
}

/// Parse error with the line of the offending TOML span.
pub fn toml_error(path: &Path, text: &str, e: &toml::de::Error) -> CliError {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
        .unwrap_or(0);
    CliError::parse(path, line, e.message().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn builtins_resolve() {
        let r = Registry::builtin();
        assert!(r.model("ideal").unwrap().is_perfect_conductor());
        assert_eq!(r.model("au").unwrap(), DielectricModel::DrudeOnly(DrudeParams::GOLD_DEFAULT));
        let e = r.model("gold").unwrap_err().to_string();
        assert!(e.contains("au, cu, ideal"), "{e}");
    }

    #[test]
    fn file_entries_and_tables() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("t.csv"), "energy_ev,eps2\n0.5,100\n1,30\n5,4\n20,0.5\n").unwrap();
        fs::write(
            dir.path().join(REGISTRY_FILE),
            "[materials.tab]\nmodel = \"tabulated\"\nplasma_ev = 9.0\nrelaxation_ev = 0.035\ndata = \"t.csv\"\n\
             [materials.broken]\nmodel = \"drude\"\nplasma_ev = 9.0\n",
        )
        .unwrap();
        let r = Registry::load(&dir.path().join(REGISTRY_FILE)).unwrap();
        assert!(matches!(r.model("tab").unwrap(), DielectricModel::Tabulated { .. }));
        assert!(r.validate("tab").unwrap().splice_jump.is_some());
        assert!(r.model("broken").unwrap_err().to_string().contains("relaxation_ev"));
        assert!(r.model("au").is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        fs::write(&p, "[materials.x]\nmodel = \"drude\"\nplasma = 9.0\n").unwrap();
        let e = Registry::load(&p).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains(":3:"), "{e}");
    }
}
