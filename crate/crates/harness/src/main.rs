use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use harness::config::{DatasetFormat, EvalDataset, ExperimentConfig, TrainingSettings};
use harness::experiment::{
    build_vocabulary, load_pseudolabels, run_experiment, train_student_stage, train_teacher,
    write_pseudolabels,
};
use harness::synth::{write_synth, SynthSpec};
use pseudolabel::model::{load_model, save_model};
use pseudolabel::selftrain::{compare_models, StudentMode};
use pseudolabel::textpipe::{load_jsonl, LabeledExample};
use pseudolabel::training::TrainTrace;

#[derive(Parser)]
#[command(name = "pseudolabel", version, about = "Teacher/student sentiment self-training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic multi-domain corpora.
    SynthData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a teacher on labeled JSONL with chain-thaw.
    TrainTeacher {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: Option<PathBuf>,
        /// Unlabeled corpora whose tokens join the vocabulary.
        #[arg(long)]
        unlabeled: Vec<PathBuf>,
        /// JSON training settings (model, vocab, teacher, student, ...).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Label an unlabeled corpus with a teacher.
    Pseudolabel {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
    },
    /// Train a student from a teacher and its pseudolabels.
    TrainStudent {
        #[arg(long, value_parser = parse_mode)]
        mode: StudentMode,
        #[arg(long)]
        teacher: PathBuf,
        #[arg(long)]
        pseudo: PathBuf,
        /// The teacher's labeled training data (mixed in by the noisy mode).
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Accuracy table for one or more models.
    Evaluate {
        /// `name=path` or a bare path (named after the file).
        #[arg(long, required = true)]
        model: Vec<String>,
        /// `name=path`; `.csv` files are read as Sentiment-140.
        #[arg(long, required = true)]
        data: Vec<String>,
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
    /// Full teacher, pseudolabel, student, report pipeline.
    RunExperiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// HTTP inference endpoint.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn parse_mode(s: &str) -> Result<StudentMode, String> {
    s.parse().map_err(|e: pseudolabel::Error| e.to_string())
}

fn named(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((n, p)) => (n.to_string(), PathBuf::from(p)),
        None => {
            let p = PathBuf::from(arg);
            let n = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (n, p)
        }
    }
}

fn settings(path: Option<&Path>) -> Result<TrainingSettings> {
    path.map(TrainingSettings::load).transpose().map(Option::unwrap_or_default)
}

fn write_trace(trace: &TrainTrace, path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        trace.write_jsonl(p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthData { spec, out, seed } => {
            let mut spec = SynthSpec::load(&spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let m = write_synth(&spec, &out)?;
            println!("wrote {} domains and {} to {}", m.labeled.len(), m.unlabeled.display(), out.display());
        }
        Command::TrainTeacher { train, val, unlabeled, config, out, seed, trace_out } => {
            let s = settings(config.as_deref())?;
            let train = load_jsonl(&train)?;
            let val = val.as_ref().map(load_jsonl).transpose()?;
            let vocab = build_vocabulary(&train, &unlabeled, &s.vocab)?;
            let seed = seed.unwrap_or(s.teacher.seed);
            let (model, trace) = train_teacher(vocab, &train, val.as_deref(), &s, seed)?;
            save_model(&model, &out)?;
            write_trace(&trace, trace_out.as_deref())?;
            println!("saved teacher to {}", out.display());
        }
        Command::Pseudolabel { model, input, out, threshold, batch_size } => {
            let teacher = load_model(&model)?;
            let s = TrainingSettings { threshold, pseudolabel_batch: batch_size, ..Default::default() };
            let n = write_pseudolabels(&teacher, &input, &s, s.teacher.exec, &out)?;
            println!("wrote {n} pseudolabels to {}", out.display());
        }
        Command::TrainStudent { mode, teacher, pseudo, train, config, out, seed, trace_out } => {
            let s = settings(config.as_deref())?;
            let teacher = load_model(&teacher)?;
            let pseudo = load_pseudolabels(&pseudo)?;
            let train = load_jsonl(&train)?;
            let seed = seed.unwrap_or(s.student_train().seed);
            let (model, trace) = train_student_stage(mode, &pseudo, &train, &teacher, &s, seed)?;
            save_model(&model, &out)?;
            write_trace(&trace, trace_out.as_deref())?;
            println!("saved {mode} student to {}", out.display());
        }
        Command::Evaluate { model, data, json_out } => {
            let models = model
                .iter()
                .map(|m| {
                    let (n, p) = named(m);
                    Ok((n, load_model(&p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let datasets = data
                .iter()
                .map(|d| {
                    let (name, path) = named(d);
                    let format = if path.extension().is_some_and(|e| e == "csv") {
                        DatasetFormat::Sentiment140
                    } else {
                        DatasetFormat::Jsonl
                    };
                    Ok((name.clone(), EvalDataset { name, path, format }.load()?))
                })
                .collect::<Result<Vec<_>>>()?;
            let m: Vec<_> = models.iter().map(|(n, c)| (n.as_str(), c)).collect();
            let d: Vec<(&str, &[LabeledExample])> =
                datasets.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
            let report = compare_models(&m, &d, Default::default())?;
            print!("{}", report.to_markdown());
            if let Some(p) = json_out {
                std::fs::write(&p, report.to_json()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::RunExperiment { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.report.to_markdown());
        }
        Command::Serve { model, addr } => {
            let model = load_model(&model)?;
            tokio::runtime::Runtime::new()?.block_on(harness::serve::serve(model, addr))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
