//! Pipeline configuration file: corpus paths, stage parameters, and the
//! root seed every stage derives its randomness from.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use storyline_core::bphmm::Hyperparams;

fn default_k_lang() -> usize {
    100
}
fn default_k_visual() -> usize {
    20
}
fn default_knn() -> usize {
    5
}
fn default_sweeps() -> u64 {
    2000
}
fn default_burn_in() -> u64 {
    1000
}
fn default_describe_samples() -> usize {
    1000
}
fn default_describe_order() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    /// Ground-truth segmentation; evaluation runs when present.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    /// Stop-word file; the built-in English list applies when absent.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default = "default_k_lang")]
    pub k_lang: usize,
    #[serde(default = "default_k_visual")]
    pub k_visual: usize,
    #[serde(default = "default_knn")]
    pub knn: usize,
    #[serde(default)]
    pub hyper: Hyperparams,
    #[serde(default = "default_sweeps")]
    pub sweeps: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_describe_samples")]
    pub describe_samples: usize,
    #[serde(default = "default_describe_order")]
    pub describe_order: usize,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self = serde_json::from_str(&text).context("parsing config")?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_lang == 0 || self.k_visual == 0 || self.knn == 0 {
            bail!("k_lang, k_visual, and knn must be positive");
        }
        if self.describe_samples == 0 || self.describe_order == 0 {
            bail!("describe_samples and describe_order must be positive");
        }
        if self.sweeps <= self.burn_in {
            bail!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps,
                self.burn_in
            );
        }
        self.hyper
            .validate()
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
        Ok(())
    }
}
