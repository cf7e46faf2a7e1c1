use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use elasel::bench::{Function, CATALOG};
use elasel::ela::{FEATURE_NAMES, SELECTED_FEATURES};
use elasel::forest::ForestParams;
use elasel::modcma::{CmaParams, VariantFilter};
use elasel::selector::{CvConfig, Metric};
use elasel::{Error, Result};

/// Everything a pipeline step needs; file keys, then command-line overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub suite: SuiteConfig,
    pub portfolio: PortfolioConfig,
    pub features: FeaturesConfig,
    pub forest: ForestParams,
    pub cv: CvConfig,
    pub selection: SelectionConfig,
    pub inputs: InputsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub functions: Vec<u32>,
    pub instances: Vec<u32>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioConfig {
    /// `"default"`, `"auto-select"` (use `portfolio.txt` from the output
    /// directory) or a path to a portfolio file.
    pub file: String,
    pub budget: u64,
    pub runs: u32,
    /// Portfolio size kept by `select-portfolio`.
    pub size: usize,
    /// Number of variants `select-portfolio` draws from the candidates.
    pub candidates: usize,
    /// Module pattern restricting the candidates, e.g. `"0?0?0000000"`.
    pub filter: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSubset {
    /// `"all"` or `"selected"`.
    Named(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub n_samples: usize,
    pub reps: usize,
    pub subset: FeatureSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Threshold grid; the built-in grid when absent.
    pub grid: Option<Vec<f64>>,
    pub metric: Metric,
}

/// Input files; each defaults to the matching file in the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputsConfig {
    pub performance: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            suite: SuiteConfig::default(),
            portfolio: PortfolioConfig::default(),
            features: FeaturesConfig::default(),
            forest: ForestParams::default(),
            cv: CvConfig::default(),
            selection: SelectionConfig::default(),
            inputs: InputsConfig::default(),
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { functions: CATALOG.iter().map(|f| f.fid()).collect(), instances: vec![1, 2, 3, 4], dim: 5 }
    }
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        PortfolioConfig { file: "default".into(), budget: 500, runs: 5, size: 8, candidates: 32, filter: None }
    }
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig { n_samples: 2000, reps: 50, subset: FeatureSubset::Named("all".into()) }
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { grid: None, metric: Metric::LogRmse }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::validation(msg)
}

impl PipelineConfig {
    /// Reads a TOML file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        resolve(&mut cfg.inputs.performance);
        resolve(&mut cfg.inputs.features);
        resolve(&mut cfg.inputs.predictions);
        resolve(&mut cfg.inputs.report);
        if !matches!(cfg.portfolio.file.as_str(), "default" | "auto-select") && Path::new(&cfg.portfolio.file).is_relative() {
            cfg.portfolio.file = base.join(&cfg.portfolio.file).to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.suite;
        if s.functions.is_empty() || s.instances.is_empty() {
            return Err(invalid("suite needs at least one function and one instance"));
        }
        for &fid in &s.functions {
            Function::from_fid(fid)?;
        }
        if s.instances.contains(&0) {
            return Err(invalid("instance ids start at 1"));
        }
        if s.dim < 2 {
            return Err(invalid("dim must be >= 2"));
        }
        let p = &self.portfolio;
        if p.runs == 0 || p.size == 0 || p.candidates == 0 {
            return Err(invalid("portfolio runs, size and candidates must be >= 1"));
        }
        let lambda = CmaParams::<f64>::defaults(s.dim).lambda as u64;
        if p.budget < lambda {
            return Err(invalid(format!("budget {} is below one generation ({lambda} evaluations)", p.budget)));
        }
        if let Some(f) = &p.filter {
            f.parse::<VariantFilter>()?;
        }
        if !matches!(p.file.as_str(), "default" | "auto-select") && !Path::new(&p.file).is_file() {
            return Err(invalid(format!("portfolio file {} does not exist", p.file)));
        }
        let f = &self.features;
        let min_n = 10 * s.dim;
        if f.n_samples < min_n {
            return Err(invalid(format!("n_samples must be >= {min_n}")));
        }
        if f.reps == 0 {
            return Err(invalid("feature reps must be >= 1"));
        }
        self.feature_subset()?;
        self.forest.validate().map_err(|e| invalid(e.to_string()))?;
        if self.cv.replications == 0 || self.cv.k < 2 {
            return Err(invalid("cv needs k >= 2 and replications >= 1"));
        }
        if self.cv.k > s.instances.len() {
            return Err(invalid(format!("cv.k = {} exceeds the {} instance ids", self.cv.k, s.instances.len())));
        }
        if let Some(g) = &self.selection.grid {
            if g.is_empty() || g.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(invalid("selection.grid must be non-empty and positive"));
            }
        }
        for p in [&self.inputs.performance, &self.inputs.features, &self.inputs.predictions, &self.inputs.report]
            .into_iter()
            .flatten()
        {
            if !p.is_file() {
                return Err(invalid(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Feature names to keep, in output order.
    pub fn feature_subset(&self) -> Result<Vec<String>> {
        let names: Vec<String> = match &self.features.subset {
            FeatureSubset::Named(n) if n == "all" => FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            FeatureSubset::Named(n) if n == "selected" => SELECTED_FEATURES.iter().map(|s| s.to_string()).collect(),
            FeatureSubset::Named(n) => return Err(invalid(format!("feature subset {n:?}: expected all, selected or a list"))),
            FeatureSubset::List(l) => l.clone(),
        };
        if names.is_empty() {
            return Err(invalid("feature subset is empty"));
        }
        for (i, n) in names.iter().enumerate() {
            if !FEATURE_NAMES.contains(&n.as_str()) {
                return Err(invalid(format!("unknown feature {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(invalid(format!("duplicate feature {n:?}")));
            }
        }
        Ok(names)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
