//! Versioned JSON persistence for solved tables, sealed with a SHA-256 checksum.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{EpsilonConfig, GridValue};
use crate::rational::Rational;
use crate::scenario::TrimmedScenario;
use crate::solver::{build_reachable_graph, Solution, ValueTable};

pub const CACHE_VERSION: u32 = 1;

/// Body plus the hex digest of its canonical serialization.
#[derive(Serialize, Deserialize)]
struct Sealed<T> {
    #[serde(flatten)]
    body: T,
    checksum: String,
}

fn digest<T: Serialize>(body: &T) -> Result<String> {
    let bytes = serde_json::to_vec(body)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Serializes `body` with its checksum attached.
pub fn seal<T: Serialize>(body: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Out<'a, T> {
        #[serde(flatten)]
        body: &'a T,
        checksum: String,
    }
    let checksum = digest(body)?;
    Ok(serde_json::to_string(&Out { body, checksum })?)
}

/// Parses a sealed document, rejecting it if the checksum does not match.
pub fn unseal<T: Serialize + DeserializeOwned>(text: &str) -> Result<T> {
    let sealed: Sealed<T> =
        serde_json::from_str(text).map_err(|e| Error::Cache(format!("unreadable cache: {e}")))?;
    let expect = digest(&sealed.body)?;
    if expect != sealed.checksum {
        return Err(Error::Cache(format!(
            "checksum mismatch: stored {}, computed {expect}",
            sealed.checksum
        )));
    }
    Ok(sealed.body)
}

/// On-disk form of a solved `(ε, m)` game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheFile {
    pub version: u32,
    pub eps: Rational,
    pub m: usize,
    pub nodes: Vec<TrimmedScenario>,
    pub values: Vec<Rational>,
    pub ratios: Vec<Rational>,
    pub rho_star: Rational,
    pub sweeps: u32,
    pub levels: Vec<u32>,
    pub z_trace: Vec<Rational>,
}

impl CacheFile {
    pub fn from_solution(sol: &Solution) -> Self {
        let cfg = &sol.graph.cfg;
        let grid = |v: &GridValue| cfg.grid_value(*v).expect("finite grid value");
        CacheFile {
            version: CACHE_VERSION,
            eps: cfg.eps.clone(),
            m: cfg.m,
            nodes: sol.graph.nodes.clone(),
            values: sol.table.values.iter().map(grid).collect(),
            ratios: sol.ratios.iter().map(grid).collect(),
            rho_star: sol.rho_star(),
            sweeps: sol.table.sweeps,
            levels: sol.table.levels.clone(),
            z_trace: sol.table.z_trace.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        seal(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: CacheFile = unseal(text)?;
        if file.version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported cache version {}", file.version)));
        }
        let n = file.nodes.len();
        if file.values.len() != n || file.ratios.len() != n || file.levels.len() != n {
            return Err(Error::Cache("per-node arrays disagree in length".into()));
        }
        if file.nodes.first() != Some(&TrimmedScenario::Empty) {
            return Err(Error::Cache("node 0 must be EMPTY".into()));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Rebuilds the solution: the graph is recomputed and must match the stored nodes.
    pub fn into_solution(self, node_cap: usize) -> Result<Solution> {
        let cfg = EpsilonConfig::new(self.eps.clone(), self.m)?;
        let graph = build_reachable_graph(&cfg, node_cap)?;
        if graph.nodes != self.nodes {
            return Err(Error::Cache("stored nodes differ from the rebuilt graph".into()));
        }
        let to_grid = |r: &Rational| -> Result<GridValue> {
            let g = cfg.grid_round_up(r)?;
            if cfg.grid_value(g).as_ref() != Some(r) {
                return Err(Error::Cache(format!("value {r} is not a grid point")));
            }
            Ok(g)
        };
        let values = self.values.iter().map(to_grid).collect::<Result<Vec<_>>>()?;
        let ratios = self.ratios.iter().map(to_grid).collect::<Result<Vec<_>>>()?;
        let rho_star = to_grid(&self.rho_star)?;
        if values[0] != rho_star {
            return Err(Error::Cache("rho_star differs from the value of EMPTY".into()));
        }
        let table = ValueTable {
            values,
            rho_star,
            sweeps: self.sweeps,
            z_trace: self.z_trace,
            levels: self.levels,
        };
        Ok(Solution { graph, ratios, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolveOptions, DEFAULT_NODE_CAP};

    #[test]
    fn round_trip_and_tamper_detection() {
        let cfg = EpsilonConfig::new(Rational::one(), 2).unwrap();
        let sol = solve(&cfg, SolveOptions::default()).unwrap();
        let file = CacheFile::from_solution(&sol);
        let text = file.to_json().unwrap();
        let back = CacheFile::parse(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json().unwrap(), text);
        let restored = back.into_solution(DEFAULT_NODE_CAP).unwrap();
        assert_eq!(restored.table, sol.table);
        assert_eq!(restored.ratios, sol.ratios);

        let tampered = text.replacen("\"sweeps\":", "\"sweeps\":1", 1);
        assert!(matches!(CacheFile::parse(&tampered), Err(Error::Cache(_))));
        assert!(matches!(CacheFile::parse("{}"), Err(Error::Cache(_))));
    }
}
