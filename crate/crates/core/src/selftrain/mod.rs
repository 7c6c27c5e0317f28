//! Teacher pseudolabelling, student training, and model comparison.

mod compare;
mod pseudo;
mod student;

pub use compare::{compare_models, format_percent, ComparisonRow, EvalReport};
pub use pseudo::{pseudolabel_corpus, PseudoLabelRecord, Pseudolabeler};
pub use student::{assemble_student_dataset, train_student, StudentMode, StudentSetup};

/// Report column names.
pub const TEACHER: &str = "Teacher";
pub const TEACHER_FINETUNED: &str = "Teacher Finetuning";
pub const NOISY_STUDENT: &str = "Independent Noisy Student";
