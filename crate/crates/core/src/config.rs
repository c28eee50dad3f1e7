//! Hyperparameters for every stage, with TOML loading and the desk preset.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmine::MinerConfig;

/// Knowledge-base embedding training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Complex dimension of every embedding vector.
    pub h: usize,
    pub batch_kbe: usize,
    pub n_kbe: usize,
    pub n_warm: usize,
    pub lr_kbe: f64,
    pub lr_trans: f64,
    pub k_kbe: usize,
    pub k_pl: usize,
    pub gamma_kbe: f64,
    pub p_kbe: f64,
    pub r_lk: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    /// Insert a tanh hidden layer of this width into the translator.
    pub translator_hidden: Option<usize>,
    /// Apply dropout to relation vectors.
    pub dropout_relations: bool,
    /// Apply dropout to the positive and negative object vectors.
    pub dropout_objects: bool,
    /// Triples ranked for the checkpointing MRR.
    pub mrr_sample: usize,
    /// Epochs between checkpoint evaluations.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            h: 200,
            batch_kbe: 128,
            n_kbe: 400,
            n_warm: 30,
            lr_kbe: 1e-3,
            lr_trans: 5e-4,
            k_kbe: 1000,
            k_pl: 10,
            gamma_kbe: 0.1,
            p_kbe: 0.3,
            r_lk: 2.25,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 13,
            translator_hidden: None,
            dropout_relations: true,
            dropout_objects: true,
            mrr_sample: 2000,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        positive("h", self.h)?;
        positive("batch_kbe", self.batch_kbe)?;
        positive("k_kbe", self.k_kbe)?;
        positive("k_pl", self.k_pl)?;
        positive("eval_every", self.eval_every)?;
        rate("lr_kbe", self.lr_kbe)?;
        rate("lr_trans", self.lr_trans)?;
        rate("r_lk", self.r_lk)?;
        rate("eps", self.eps)?;
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        if !(0.0..0.5).contains(&self.gamma_kbe) {
            return Err(Error::Config(format!("gamma_kbe must lie in [0, 0.5), got {}", self.gamma_kbe)));
        }
        if !(0.0..1.0).contains(&self.p_kbe) {
            return Err(Error::Config(format!("p_kbe must lie in [0, 1), got {}", self.p_kbe)));
        }
        if self.translator_hidden == Some(0) {
            return Err(Error::Config("translator_hidden must be positive".into()));
        }
        Ok(())
    }
}

/// Question-answering model training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaConfig {
    /// Width of the question encoder's token embeddings.
    pub d: usize,
    pub batch_qa: usize,
    pub n_qa: usize,
    pub lr_qa: f64,
    pub k_qa: usize,
    pub gamma_qa: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self {
            d: 1024,
            batch_qa: 32,
            n_qa: 1000,
            lr_qa: 1e-5,
            k_qa: 500,
            gamma_qa: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 13,
        }
    }
}

impl QaConfig {
    pub fn validate(&self) -> Result<()> {
        positive("d", self.d)?;
        positive("batch_qa", self.batch_qa)?;
        positive("k_qa", self.k_qa)?;
        rate("lr_qa", self.lr_qa)?;
        rate("eps", self.eps)?;
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        if !(0.0..0.5).contains(&self.gamma_qa) {
            return Err(Error::Config(format!("gamma_qa must lie in [0, 0.5), got {}", self.gamma_qa)));
        }
        Ok(())
    }
}

/// Synthetic benchmark generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub entities_per_kb: usize,
    pub relations_per_kb: usize,
    pub triples_per_kb: usize,
    pub full_links: usize,
    pub partial_links: usize,
    /// Question quota for each (template, link type) cell.
    pub questions_per_cell: usize,
    /// Instantiations with more gold answers than this are rejected.
    pub max_answers: usize,
    /// Planted partial-link pairs whose forced merge confuses two relation ranges.
    pub merge_failure_pairs: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            entities_per_kb: 300,
            relations_per_kb: 12,
            triples_per_kb: 1500,
            full_links: 30,
            partial_links: 30,
            questions_per_cell: 45,
            max_answers: 10,
            merge_failure_pairs: 0,
            seed: 13,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        positive("entities_per_kb", self.entities_per_kb)?;
        positive("relations_per_kb", self.relations_per_kb)?;
        positive("max_answers", self.max_answers)?;
        let linked = self.full_links + self.partial_links;
        if linked > self.entities_per_kb {
            return Err(Error::Config(format!(
                "{linked} links cannot fit in {} entities per kb",
                self.entities_per_kb
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// The published hyperparameters.
    Paper,
    /// Shrunk for a single desktop CPU.
    Desk,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected paper or desk)"))),
        }
    }
}

/// Everything a command may need, loaded from one TOML file with one table per stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub qa: QaConfig,
    pub gen: GenConfig,
    pub miner: MinerConfig,
    /// Seeds averaged over by evaluation.
    pub seeds: Vec<u64>,
}

pub const DEFAULT_SEEDS: [u64; 3] = [13, 17, 19];

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        let mut cfg = Self {
            seeds: DEFAULT_SEEDS.to_vec(),
            ..Self::default()
        };
        cfg.apply_preset(p);
        cfg
    }

    /// Overwrite the fields a preset controls.
    pub fn apply_preset(&mut self, p: Preset) {
        match p {
            Preset::Paper => {
                let (t, q) = (TrainConfig::default(), QaConfig::default());
                self.train.h = t.h;
                self.train.n_kbe = t.n_kbe;
                self.train.k_kbe = t.k_kbe;
                self.train.p_kbe = t.p_kbe;
                self.train.lr_kbe = t.lr_kbe;
                self.qa.n_qa = q.n_qa;
                self.qa.k_qa = q.k_qa;
                self.qa.d = q.d;
                self.qa.lr_qa = q.lr_qa;
            }
            Preset::Desk => {
                self.train.h = 32;
                self.train.n_kbe = 200;
                self.train.k_kbe = 100;
                // dropout at h = 32 keeps training MRR near 0.25
                self.train.p_kbe = 0.0;
                self.train.lr_kbe = 3e-3;
                self.qa.n_qa = 100;
                self.qa.k_qa = 50;
                // a from-scratch encoder needs a far larger step than a pretrained one
                self.qa.d = 64;
                self.qa.lr_qa = 3e-3;
            }
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.seeds.is_empty() {
            cfg.seeds = DEFAULT_SEEDS.to_vec();
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Use one seed for every stochastic stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.qa.seed = seed;
        self.gen.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.qa.validate()?;
        self.gen.validate()?;
        self.miner.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        Ok(())
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Config(format!("{name} must be positive")));
    }
    Ok(())
}

fn rate(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} must be a positive number, got {v}")));
    }
    Ok(())
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
    }
    Ok(())
}
