//! Run configuration shared by the flags and `--config` JSON files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use cdg_core::assembly::HMode;
use cdg_core::problems::{LoadSource, ProblemKind};
use cdg_core::study::{MeshKind, StudyConfig};
use serde::{Deserialize, Serialize};

/// Mesh levels, written `2..5` (inclusive), `2-5` or `2,3,5`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Levels {
    List(Vec<u32>),
    Text(String),
}

impl Levels {
    pub fn resolve(&self) -> anyhow::Result<Vec<u32>> {
        match self {
            Levels::List(v) => Ok(v.clone()),
            Levels::Text(s) => parse_levels(s),
        }
    }
}

pub fn parse_levels(s: &str) -> anyhow::Result<Vec<u32>> {
    let s = s.trim();
    let range = s.split_once("..=").or_else(|| s.split_once("..")).or_else(|| s.split_once('-'));
    let levels: Vec<u32> = if let Some((a, b)) = range {
        let a: u32 = a.trim().parse().with_context(|| format!("bad level range '{s}'"))?;
        let b: u32 = b.trim().parse().with_context(|| format!("bad level range '{s}'"))?;
        if b < a {
            bail!("empty level range '{s}'");
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<u32>().with_context(|| format!("bad level '{t}'")))
            .collect::<anyhow::Result<_>>()?
    };
    if levels.is_empty() {
        bail!("no levels given");
    }
    Ok(levels)
}

/// Every knob of a run. Field names match the long flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub levels: Option<Levels>,
    pub level: Option<u32>,
    pub beta: f64,
    pub mesh: MeshKind,
    pub seed: u64,
    pub amplitude: f64,
    pub load_source: LoadSource,
    pub h_mode: HMode,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::Sphere,
            levels: None,
            level: None,
            beta: 10.0,
            mesh: MeshKind::Structured,
            seed: 0,
            amplitude: 0.2,
            load_source: LoadSource::Oracle,
            h_mode: HMode::GlobalH,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            problem: self.problem,
            load_source: self.load_source,
            beta: self.beta,
            h_mode: self.h_mode,
            mesh: self.mesh,
            amplitude: self.amplitude,
            seed: self.seed,
            ..StudyConfig::new(self.problem)
        }
    }

    pub fn level_list(&self) -> anyhow::Result<Vec<u32>> {
        match (&self.levels, self.level) {
            (Some(l), _) => l.resolve(),
            (None, Some(l)) => Ok(vec![l]),
            (None, None) => bail!("no mesh levels given (use --levels)"),
        }
    }

    pub fn single_level(&self) -> anyhow::Result<u32> {
        match (self.level, &self.levels) {
            (Some(l), _) => Ok(l),
            (None, Some(l)) => Ok(l.resolve()?[0]),
            (None, None) => bail!("no mesh level given (use --level)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_syntax() {
        assert_eq!(parse_levels("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_levels("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_levels("1-2").unwrap(), vec![1, 2]);
        assert_eq!(parse_levels("4, 1").unwrap(), vec![4, 1]);
        assert!(parse_levels("5..2").is_err());
        assert!(parse_levels("x").is_err());
    }

    #[test]
    fn json_uses_flag_names() {
        let c: RunConfig = serde_json::from_str(
            r#"{"problem":"torus","levels":"1..3","beta":20,"mesh":"perturbed","seed":7,
                "amplitude":0.1,"load_source":"paper","h_mode":"per-edge","out":"x.csv"}"#,
        )
        .unwrap();
        assert_eq!(c.problem, ProblemKind::Torus);
        assert_eq!(c.level_list().unwrap(), vec![1, 2, 3]);
        assert_eq!(c.h_mode, HMode::PerEdge);
        assert_eq!(c.load_source, LoadSource::Paper);
        let d: RunConfig = serde_json::from_str(r#"{"levels":[2,3],"h_mode":"global"}"#).unwrap();
        assert_eq!(d.beta, 10.0);
        assert_eq!(d.level_list().unwrap(), vec![2, 3]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus":1}"#).is_err());
    }
}
