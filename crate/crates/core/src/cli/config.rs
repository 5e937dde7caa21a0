use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::BoxDomain;
use crate::hvf::{builtin, from_json, HormanderSystem};
use crate::lift::ConstantMatrix;

/// Environment variable capping the number of grid points of any single grid.
pub const BUDGET_VAR: &str = "SUBELLIPTIC_BUDGET";
pub const DEFAULT_BUDGET: usize = 4_000_000;

/// Lists of sweep parameters; empty lists fall back to the defaults of each command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub eps: Vec<f64>,
    pub r: Vec<f64>,
    pub k: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Everything an experiment depends on. Its hash tags every CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: String,
    pub lift: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
    pub matrices: Vec<PathBuf>,
    pub sweep: SweepSpec,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: "grushin1".into(),
            lift: "grushin1".into(),
            lo: vec![],
            hi: vec![],
            counts: vec![],
            matrices: vec![],
            sweep: SweepSpec::default(),
            tolerances: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }

    /// Leading hex digits of the SHA-256 of the canonical JSON form. The output
    /// directory is left out: moving the reports must not change their tags.
    pub fn hash(&self) -> String {
        let keyed = ExperimentConfig { output_dir: PathBuf::new(), ..self.clone() };
        let text = serde_json::to_string(&keyed).expect("config serialises");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect::<String>()[..16].to_string()
    }

    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                return Err(Error::InvalidParameter(format!("tolerance '{k}' must be positive, got {v}")));
            }
        }
        if self.lo.len() != self.hi.len() || (!self.counts.is_empty() && self.counts.len() != self.lo.len()) {
            return Err(Error::DimensionMismatch("lo, hi and counts must have one entry per coordinate".into()));
        }
        self.system()?;
        Ok(())
    }

    /// The catalog entry named by `system`, or the JSON file it points to.
    pub fn system(&self) -> Result<HormanderSystem> {
        load_system(&self.system)
    }

    /// The configured box, or `default` when none is given; checked against the budget.
    pub fn domain_or(&self, default: BoxDomain) -> Result<BoxDomain> {
        let dom = if self.lo.is_empty() {
            default
        } else {
            let counts = if self.counts.is_empty() { default.counts.clone() } else { self.counts.clone() };
            BoxDomain::new(self.lo.clone(), self.hi.clone(), counts)?
        };
        check_budget(dom.len())?;
        Ok(dom)
    }

    pub fn load_matrices(&self) -> Result<Vec<ConstantMatrix>> {
        self.matrices.iter().map(|p| load_matrix(p)).collect()
    }
}

/// A built-in name, or a path to a JSON catalog entry.
pub fn load_system(name: &str) -> Result<HormanderSystem> {
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{name}: {e}")))?;
        return from_json(&text);
    }
    builtin(name)
}

/// A matrix file holds a JSON array of rows.
pub fn load_matrix(path: &Path) -> Result<ConstantMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("matrix {}: {e}", path.display())))?;
    ConstantMatrix::new(rows)
}

pub fn budget() -> Result<usize> {
    match std::env::var(BUDGET_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidParameter(format!("{BUDGET_VAR}={v} is not a point count"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

pub fn check_budget(points: usize) -> Result<()> {
    let cap = budget()?;
    if points > cap {
        return Err(Error::Budget(format!("{points} grid points requested, {BUDGET_VAR} allows {cap}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.sweep.p = vec![2.0];
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        b.sweep.p.clear();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_fields_and_bad_tolerances_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sytem": "grushin1"}"#).is_err());
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"tolerances": {"ratio": -1}}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"system": "nosuch"}"#).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::UnknownSystem(_))));
    }
}
