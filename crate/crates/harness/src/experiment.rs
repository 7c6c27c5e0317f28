//! Stage functions and the end-to-end teacher/student experiment.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use log::info;
use pseudolabel::model::{load_model, save_model, Classifier, LayerGroup};
use pseudolabel::numcore::{derive_seed, Exec, Rng};
use pseudolabel::selftrain::{
    compare_models, format_percent, pseudolabel_corpus, train_student, EvalReport,
    PseudoLabelRecord, StudentMode, StudentSetup, NOISY_STUDENT, TEACHER,
};
use pseudolabel::textpipe::{
    load_jsonl, open_unlabeled_jsonl, split, tokenize, JsonlWriter, LabeledExample, UnlabeledDoc,
    Vocabulary,
};
use pseudolabel::training::{chain_thaw_plan, train_classifier, TrainTrace};

use crate::config::{ExperimentConfig, TrainingSettings, VocabSettings, TEACHER_TEST};

pub const TEACHER_MODEL: &str = "teacher.model";
pub const PSEUDO_FILE: &str = "pseudo.jsonl";
pub const REPORT_MD: &str = "report.md";
pub const REPORT_JSON: &str = "report.json";
pub const LOCK_FILE: &str = "run.lock";

pub fn student_model_file(mode: StudentMode) -> String {
    format!("student_{}.model", mode.key())
}

/// Streams the documents of several unlabeled JSONL files in order.
pub fn unlabeled_stream<'a>(
    paths: &'a [PathBuf],
) -> impl Iterator<Item = pseudolabel::Result<UnlabeledDoc>> + 'a {
    paths.iter().enumerate().flat_map(|(i, p)| {
        match open_unlabeled_jsonl(p, format!("f{i}:")) {
            Ok(it) => Box::new(it) as Box<dyn Iterator<Item = _>>,
            Err(e) => Box::new(std::iter::once(Err(e))),
        }
    })
}

/// Vocabulary over the labeled training text plus the unlabeled corpus, so
/// teacher and students share one embedding table layout.
pub fn build_vocabulary(
    train: &[LabeledExample],
    unlabeled: &[PathBuf],
    settings: &VocabSettings,
) -> Result<Vocabulary> {
    let mut failure = None;
    let unlabeled_tokens = unlabeled_stream(unlabeled).map_while(|d| match d {
        Ok(d) => Some(tokenize(&d.text)),
        Err(e) => {
            failure = Some(e);
            None
        }
    });
    let corpus = train.iter().map(|e| tokenize(&e.text)).chain(unlabeled_tokens);
    let vocab = Vocabulary::build(corpus, settings.min_freq, settings.max_size)?;
    if let Some(e) = failure {
        return Err(e).context("reading unlabeled corpus for the vocabulary");
    }
    Ok(vocab)
}

fn holdout(
    train: &[LabeledExample],
    val: Option<&[LabeledExample]>,
    fraction: f64,
    rng: &mut Rng,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    Ok(match val {
        Some(v) => (train.to_vec(), v.to_vec()),
        None => split(train, fraction, rng)?,
    })
}

/// Trains a freshly initialised teacher with chain-thaw. Without a
/// validation set a share of `train` is held out.
pub fn train_teacher(
    vocab: Vocabulary,
    train: &[LabeledExample],
    val: Option<&[LabeledExample]>,
    settings: &TrainingSettings,
    seed: u64,
) -> Result<(Classifier<f32>, TrainTrace)> {
    let config = settings.model.apply(vocab.len());
    let init = Classifier::init(config, vocab, &mut Rng::new(derive_seed(seed, "teacher-init")))?;
    let (train, val) = holdout(train, val, settings.val_fraction, &mut Rng::new(derive_seed(seed, "teacher-split")))?;
    let plan = chain_thaw_plan(&LayerGroup::ALL)?;
    let mut rng = Rng::new(derive_seed(seed, "teacher-train"));
    Ok(train_classifier(&init, &train, &val, &plan, &settings.teacher, &mut rng)?)
}

/// Labels the corpus with `teacher` and writes the records to `out`
/// through a temporary file. Returns the number of records written.
pub fn write_pseudolabels(
    teacher: &Classifier<f32>,
    unlabeled: &[PathBuf],
    settings: &TrainingSettings,
    exec: Exec,
    out: &Path,
) -> Result<usize> {
    let tmp = tmp_path(out);
    let mut w = JsonlWriter::create(&tmp)?;
    let mut n = 0;
    for rec in pseudolabel_corpus(
        teacher,
        unlabeled_stream(unlabeled),
        settings.pseudolabel_batch,
        settings.threshold,
        exec,
    )? {
        w.write(&rec?)?;
        n += 1;
    }
    w.finish()?;
    fs::rename(&tmp, out).with_context(|| format!("renaming {}", tmp.display()))?;
    Ok(n)
}

pub fn load_pseudolabels(path: &Path) -> Result<Vec<PseudoLabelRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}: bad pseudolabel record at line {}", path.display(), i + 1))
        })
        .collect()
}

pub fn train_student_stage(
    mode: StudentMode,
    pseudo: &[PseudoLabelRecord],
    teacher_train: &[LabeledExample],
    teacher: &Classifier<f32>,
    settings: &TrainingSettings,
    seed: u64,
) -> Result<(Classifier<f32>, TrainTrace)> {
    let setup = StudentSetup {
        plan: chain_thaw_plan(&LayerGroup::ALL)?,
        train: settings.student_train().clone(),
        val_fraction: settings.val_fraction,
    };
    let mut rng = Rng::new(derive_seed(seed, &format!("student-{}", mode.key())));
    Ok(train_student(mode, pseudo, teacher_train, teacher, &setup, &mut rng)?)
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = tmp_path(path);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming {}", tmp.display()))
}

/// Exclusive ownership of an output directory, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                anyhow!("{} is locked by another run (remove {} if stale)", dir.display(), path.display())
            } else {
                anyhow!("creating {}: {e}", path.display())
            }
        })?;
        let _ = writeln!(f, "{}", std::process::id());
        Ok(DirLock { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    info!("stage {name}");
    f().with_context(|| format!("stage '{name}' failed"))
}

/// Loads a model saved by an earlier run, or trains and saves one.
fn resume_or_train(
    path: &Path,
    trace_path: &Path,
    train: impl FnOnce() -> Result<(Classifier<f32>, TrainTrace)>,
) -> Result<Classifier<f32>> {
    if path.exists() {
        info!("reusing {}", path.display());
        return Ok(load_model(path)?);
    }
    let (model, trace) = train()?;
    trace.write_jsonl(trace_path)?;
    save_model(&model, path)?;
    Ok(model)
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub output_dir: PathBuf,
    pub pseudolabels: usize,
}

/// Teacher, pseudolabels, students, then the comparison report. Each stage
/// reuses its artifact when a previous run left one behind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let _lock = DirLock::acquire(out)?;
    let settings = &cfg.settings;
    let exec = settings.teacher.exec;

    let (teacher_train, teacher_val) = stage("load", || {
        let train = load_jsonl(&cfg.teacher_train)?;
        let val = cfg.teacher_val.as_ref().map(load_jsonl).transpose()?;
        Ok((train, val))
    })?;

    let teacher = stage("teacher", || {
        resume_or_train(&out.join(TEACHER_MODEL), &out.join("teacher_trace.jsonl"), || {
            let vocab = build_vocabulary(&teacher_train, &cfg.unlabeled, &settings.vocab)?;
            info!("vocabulary: {} tokens", vocab.len());
            train_teacher(vocab, &teacher_train, teacher_val.as_deref(), settings, cfg.seed)
        })
    })?;

    let pseudo = stage("pseudolabel", || {
        let path = out.join(PSEUDO_FILE);
        if !path.exists() {
            let n = write_pseudolabels(&teacher, &cfg.unlabeled, settings, exec, &path)?;
            info!("{n} pseudolabels");
        }
        load_pseudolabels(&path)
    })?;

    let mut students = Vec::new();
    for &mode in &cfg.modes {
        let model = stage(&format!("student-{}", mode.key()), || {
            resume_or_train(
                &out.join(student_model_file(mode)),
                &out.join(format!("student_{}_trace.jsonl", mode.key())),
                || train_student_stage(mode, &pseudo, &teacher_train, &teacher, settings, cfg.seed),
            )
        })?;
        students.push((mode, model));
    }

    let report = stage("evaluate", || {
        let datasets = cfg
            .report_datasets()
            .into_iter()
            .map(|d| Ok((d.name.clone(), d.load()?)))
            .collect::<Result<Vec<_>>>()?;
        let mut models = vec![(TEACHER, &teacher)];
        models.extend(students.iter().map(|(m, c)| (m.display_name(), c)));
        let refs: Vec<(&str, &[LabeledExample])> =
            datasets.iter().map(|(n, d)| (n.as_str(), d.as_slice())).collect();
        let mut report = compare_models(&models, &refs, exec)?;
        report.notes = report_notes(&report);
        write_atomic(&out.join(REPORT_MD), &report.to_markdown())?;
        write_atomic(&out.join(REPORT_JSON), &report.to_json())?;
        Ok(report)
    })?;

    Ok(ExperimentOutcome {
        report,
        output_dir: out.clone(),
        pseudolabels: pseudo.len(),
    })
}

/// Out-of-domain means and the in-domain comparison, when both columns exist.
fn report_notes(report: &EvalReport) -> Vec<String> {
    let mut notes = Vec::new();
    let (Some(t), Some(s)) = (
        report.models.iter().position(|m| m == TEACHER),
        report.models.iter().position(|m| m == NOISY_STUDENT),
    ) else {
        return notes;
    };
    let ood: Vec<_> = report.rows.iter().filter(|r| r.dataset != TEACHER_TEST).collect();
    if !ood.is_empty() {
        let mean = |i: usize| ood.iter().map(|r| r.accuracies[i]).sum::<f64>() / ood.len() as f64;
        notes.push(format!(
            "Mean accuracy over the {} other datasets: {TEACHER} {}, {NOISY_STUDENT} {}.",
            ood.len(),
            format_percent(mean(t)),
            format_percent(mean(s)),
        ));
    }
    if let Some(row) = report.rows.iter().find(|r| r.dataset == TEACHER_TEST) {
        notes.push(format!(
            "In-domain ({TEACHER_TEST}, informational): {TEACHER} {}, {NOISY_STUDENT} {}.",
            format_percent(row.accuracies[t]),
            format_percent(row.accuracies[s]),
        ));
    }
    notes
}
