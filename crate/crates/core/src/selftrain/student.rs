use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PseudoLabelRecord;
use crate::model::Classifier;
use crate::numcore::{Real, Rng};
use crate::textpipe::{split, LabeledExample};
use crate::training::{train_classifier, PhasePlan, TrainConfig, TrainTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StudentMode {
    /// The teacher itself, further trained on pseudolabels only.
    #[serde(rename = "finetune")]
    TeacherFineTuned,
    /// A freshly initialised network trained on pseudolabels plus the
    /// teacher's labeled data, with dropout noise.
    #[serde(rename = "noisy")]
    IndependentNoisyStudent,
}

impl StudentMode {
    pub const ALL: [StudentMode; 2] = [Self::TeacherFineTuned, Self::IndependentNoisyStudent];

    /// Short name used on the command line and in file names.
    pub fn key(self) -> &'static str {
        match self {
            Self::TeacherFineTuned => "finetune",
            Self::IndependentNoisyStudent => "noisy",
        }
    }

    /// Column title in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            Self::TeacherFineTuned => super::TEACHER_FINETUNED,
            Self::IndependentNoisyStudent => super::NOISY_STUDENT,
        }
    }
}

impl fmt::Display for StudentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for StudentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown student mode '{s}' (finetune|noisy)")))
    }
}

/// Training set for a student: pseudolabels only, or pseudolabels plus the
/// teacher's training data shuffled together.
pub fn assemble_student_dataset(
    mode: StudentMode,
    pseudo: &[PseudoLabelRecord],
    teacher_train: &[LabeledExample],
    rng: &mut Rng,
) -> Result<Vec<LabeledExample>> {
    if pseudo.is_empty() {
        return Err(Error::Invalid("no pseudolabeled documents to train a student on".into()));
    }
    let pseudo = pseudo.iter().cloned().map(LabeledExample::from);
    Ok(match mode {
        StudentMode::TeacherFineTuned => pseudo.collect(),
        StudentMode::IndependentNoisyStudent => {
            let mut all: Vec<_> = pseudo.chain(teacher_train.iter().cloned()).collect();
            rng.shuffle(&mut all);
            all
        }
    })
}

/// Everything student training needs besides the data.
#[derive(Debug, Clone)]
pub struct StudentSetup {
    pub plan: PhasePlan,
    pub train: TrainConfig,
    /// Share of the student dataset held out for early stopping.
    pub val_fraction: f64,
}

/// Trains one student. Fine-tuning starts from the teacher's weights; the
/// noisy student starts from a fresh initialisation drawn from its own
/// stream of `rng`. Both keep the teacher's vocabulary and dimensions.
pub fn train_student<T: Real>(
    mode: StudentMode,
    pseudo: &[PseudoLabelRecord],
    teacher_train: &[LabeledExample],
    teacher: &Classifier<T>,
    setup: &StudentSetup,
    rng: &mut Rng,
) -> Result<(Classifier<T>, TrainTrace)> {
    let data = assemble_student_dataset(mode, pseudo, teacher_train, &mut rng.fork(1))?;
    let (train, val) = split(&data, setup.val_fraction, &mut rng.fork(2))?;
    let start = match mode {
        StudentMode::TeacherFineTuned => teacher.clone(),
        StudentMode::IndependentNoisyStudent => {
            Classifier::init(teacher.config.clone(), teacher.vocab.clone(), &mut rng.fork(3))?
        }
    };
    let mut train_rng = rng.fork(4);
    train_classifier(&start, &train, &val, &setup.plan, &setup.train, &mut train_rng)
}
