//! JSON run configuration.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pseudolabel::model::ModelConfig;
use pseudolabel::textpipe::{self, load_jsonl, load_sentiment140_csv, LabeledExample};
use pseudolabel::training::TrainConfig;
use serde::{Deserialize, Serialize};

use pseudolabel::selftrain::StudentMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    #[default]
    Jsonl,
    Sentiment140,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalDataset {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub format: DatasetFormat,
}

impl EvalDataset {
    pub fn load(&self) -> Result<Vec<LabeledExample>> {
        let data = match self.format {
            DatasetFormat::Jsonl => load_jsonl(&self.path),
            DatasetFormat::Sentiment140 => load_sentiment140_csv(&self.path),
        }
        .with_context(|| format!("loading evaluation dataset '{}'", self.name))?;
        if data.is_empty() {
            bail!("evaluation dataset '{}' is empty", self.name);
        }
        Ok(data)
    }
}

/// Model dimensions that may be changed from the defaults. The vocabulary
/// size always comes from the built vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub embed_dim: Option<usize>,
    pub lstm_hidden_per_dir: Option<usize>,
    pub max_len: Option<usize>,
    pub embed_dropout_p: Option<f64>,
    pub final_dropout_p: Option<f64>,
}

impl ModelOverrides {
    pub fn apply(&self, vocab_size: usize) -> ModelConfig {
        let d = ModelConfig::default();
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            lstm_hidden_per_dir: self.lstm_hidden_per_dir.unwrap_or(d.lstm_hidden_per_dir),
            num_classes: d.num_classes,
            embed_dropout_p: self.embed_dropout_p.unwrap_or(d.embed_dropout_p),
            final_dropout_p: self.final_dropout_p.unwrap_or(d.final_dropout_p),
            max_len: self.max_len.unwrap_or(d.max_len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSettings {
    pub min_freq: usize,
    pub max_size: usize,
}

impl Default for VocabSettings {
    fn default() -> Self {
        VocabSettings {
            min_freq: textpipe::DEFAULT_MIN_FREQ,
            max_size: textpipe::DEFAULT_MAX_VOCAB,
        }
    }
}

/// Settings shared by the experiment runner and the single-stage commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSettings {
    pub model: ModelOverrides,
    pub vocab: VocabSettings,
    pub teacher: TrainConfig,
    /// Student training; the teacher settings are used when absent.
    pub student: Option<TrainConfig>,
    /// Held-out share for early stopping when no validation file is given.
    pub val_fraction: f64,
    pub pseudolabel_batch: usize,
    pub threshold: Option<f64>,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            model: ModelOverrides::default(),
            vocab: VocabSettings::default(),
            teacher: TrainConfig::default(),
            student: None,
            val_fraction: 0.1,
            pseudolabel_batch: 256,
            threshold: None,
        }
    }
}

impl TrainingSettings {
    pub fn student_train(&self) -> &TrainConfig {
        self.student.as_ref().unwrap_or(&self.teacher)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub teacher_train: PathBuf,
    #[serde(default)]
    pub teacher_val: Option<PathBuf>,
    /// Evaluated as the last report row, named `TEACHER-TEST`.
    #[serde(default)]
    pub teacher_test: Option<PathBuf>,
    pub unlabeled: Vec<PathBuf>,
    pub eval: Vec<EvalDataset>,
    #[serde(default)]
    pub settings: TrainingSettings,
    #[serde(default = "default_modes")]
    pub modes: Vec<StudentMode>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn default_modes() -> Vec<StudentMode> {
    StudentMode::ALL.to_vec()
}

pub const TEACHER_TEST: &str = "TEACHER-TEST";

impl ExperimentConfig {
    /// Reads a config file. Relative paths are resolved against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.teacher_train);
        self.teacher_val.iter_mut().for_each(fix);
        self.teacher_test.iter_mut().for_each(fix);
        self.unlabeled.iter_mut().for_each(fix);
        self.eval.iter_mut().for_each(|e| fix(&mut e.path));
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.eval.is_empty() && self.teacher_test.is_none() {
            bad.push("at least one evaluation dataset is required".to_string());
        }
        if self.unlabeled.is_empty() {
            bad.push("unlabeled corpus list is empty".to_string());
        }
        if self.modes.is_empty() {
            bad.push("modes is empty".to_string());
        }
        let mut seen = HashSet::new();
        for p in self.input_paths() {
            if !seen.insert(p) {
                bad.push(format!("path {} is referenced twice", p.display()));
            }
        }
        let mut names = HashSet::new();
        for e in &self.eval {
            if !names.insert(e.name.as_str()) || (self.teacher_test.is_some() && e.name == TEACHER_TEST) {
                bad.push(format!("evaluation dataset name '{}' is used twice", e.name));
            }
        }
        if !(self.settings.val_fraction > 0.0 && self.settings.val_fraction < 1.0) {
            bad.push("val_fraction must be in (0, 1)".to_string());
        }
        if self.settings.pseudolabel_batch == 0 {
            bad.push("pseudolabel_batch must be at least 1".to_string());
        }
        if let Err(e) = self.settings.teacher.validate() {
            bad.push(e.to_string());
        }
        if let Err(e) = self.settings.student_train().validate() {
            bad.push(e.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            bail!("invalid experiment config: {}", bad.join("; "))
        }
    }

    fn input_paths(&self) -> Vec<&Path> {
        let mut v = vec![self.teacher_train.as_path()];
        v.extend(self.teacher_val.as_deref());
        v.extend(self.teacher_test.as_deref());
        v.extend(self.unlabeled.iter().map(PathBuf::as_path));
        v.extend(self.eval.iter().map(|e| e.path.as_path()));
        v.push(self.output_dir.as_path());
        v
    }

    /// Evaluation datasets in report order.
    pub fn report_datasets(&self) -> Vec<EvalDataset> {
        let mut v = self.eval.clone();
        if let Some(p) = &self.teacher_test {
            v.push(EvalDataset {
                name: TEACHER_TEST.into(),
                path: p.clone(),
                format: DatasetFormat::Jsonl,
            });
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        serde_json::from_str(
            r#"{"teacher_train":"t.jsonl","unlabeled":["u.jsonl"],
                "eval":[{"name":"A","path":"a.jsonl"}],"seed":1,"output_dir":"out"}"#,
        )
        .unwrap()
    }

    #[test]
    fn minimal_config_is_valid() {
        let c = cfg();
        c.validate().unwrap();
        assert_eq!(c.modes, StudentMode::ALL.to_vec());
        assert_eq!(c.settings.val_fraction, 0.1);
    }

    #[test]
    fn duplicate_paths_rejected() {
        let mut c = cfg();
        c.eval[0].path = "u.jsonl".into();
        assert!(c.validate().unwrap_err().to_string().contains("twice"));
    }

    #[test]
    fn relative_paths_resolve() {
        let mut c = cfg();
        c.resolve_relative(Path::new("/data"));
        assert_eq!(c.teacher_train, Path::new("/data/t.jsonl"));
        assert_eq!(c.eval[0].path, Path::new("/data/a.jsonl"));
    }

    #[test]
    fn overrides_keep_defaults() {
        let m = ModelOverrides {
            embed_dim: Some(8),
            ..Default::default()
        }
        .apply(100);
        assert_eq!((m.vocab_size, m.embed_dim, m.lstm_hidden_per_dir), (100, 8, 512));
    }
}
