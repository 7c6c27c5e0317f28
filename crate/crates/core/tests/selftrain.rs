use pseudolabel::model::{Classifier, LayerGroup, ModelConfig};
use pseudolabel::numcore::{Exec, Rng};
use pseudolabel::selftrain::{
    compare_models, pseudolabel_corpus, train_student, PseudoLabelRecord, StudentMode, StudentSetup,
};
use pseudolabel::textpipe::{LabeledExample, SentimentLabel, UnlabeledDoc, Vocabulary};
use pseudolabel::training::{chain_thaw_plan, TrainConfig};
use pseudolabel::Error;

fn teacher(seed: u64) -> Classifier<f32> {
    let words = (0..30).map(|i| format!("w{i}"));
    let vocab = Vocabulary::from_tokens(["<pad>".to_string(), "<unk>".to_string()].into_iter().chain(words).collect())
        .unwrap();
    let config = ModelConfig { embed_dim: 6, lstm_hidden_per_dir: 4, max_len: 6, ..Default::default() };
    Classifier::init(config, vocab, &mut Rng::new(seed)).unwrap()
}

fn docs(n: usize) -> Vec<UnlabeledDoc> {
    let mut rng = Rng::new(77);
    (0..n)
        .map(|i| UnlabeledDoc {
            id: format!("doc{i}"),
            text: (0..rng.range_inclusive(1, 8)).map(|_| format!("w{}", rng.below(32))).collect::<Vec<_>>().join(" "),
        })
        .collect()
}

fn label_all(t: &Classifier<f32>, d: &[UnlabeledDoc], batch: usize, threshold: Option<f64>) -> Vec<PseudoLabelRecord> {
    pseudolabel_corpus(t, d.iter().cloned().map(Ok), batch, threshold, Exec::Parallel)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn labeled(n: usize) -> Vec<LabeledExample> {
    (0..n).map(|i| LabeledExample::new(format!("w{} w{}", i % 30, (i * 7) % 30), SentimentLabel::ALL[i % 3])).collect()
}

#[test]
fn records_match_predict_and_keep_order() {
    let t = teacher(1);
    let d = docs(70);
    let recs = label_all(&t, &d, 16, None);
    assert_eq!(recs.len(), d.len());
    for (r, doc) in recs.iter().zip(&d) {
        assert_eq!(r.doc_id, doc.id);
        let p = t.predict(&doc.text).unwrap();
        assert_eq!((r.label, r.confidence), (p.label, p.confidence()));
        assert!(r.confidence > 0.0 && r.confidence <= 1.0);
    }
    assert_eq!(recs, label_all(&t, &d, 7, None), "batch size changed the output");
    assert_eq!(recs, label_all(&t, &d, 16, None), "not deterministic");
}

#[test]
fn threshold_filters_monotonically() {
    let t = teacher(2);
    let d = docs(120);
    let all = label_all(&t, &d, 32, None);
    let mut last = all.len();
    for thr in [0.34, 0.36, 0.38, 0.4, 0.5, 0.9, 1.0] {
        let kept = label_all(&t, &d, 32, Some(thr));
        assert!(kept.len() <= last, "threshold {thr} kept more");
        assert!(kept.iter().all(|r| r.confidence >= thr));
        let expected: Vec<_> = all.iter().filter(|r| r.confidence >= thr).cloned().collect();
        assert_eq!(kept, expected);
        last = kept.len();
    }
}

#[test]
fn invalid_threshold_and_batch_rejected() {
    let t = teacher(3);
    assert!(pseudolabel_corpus(&t, Vec::<pseudolabel::Result<UnlabeledDoc>>::new(), 8, Some(0.0), Exec::Sequential).is_err());
    assert!(pseudolabel_corpus(&t, Vec::<pseudolabel::Result<UnlabeledDoc>>::new(), 0, None, Exec::Sequential).is_err());
}

#[test]
fn read_errors_carry_the_document_index() {
    let t = teacher(3);
    let mut input: Vec<pseudolabel::Result<UnlabeledDoc>> = docs(5).into_iter().map(Ok).collect();
    input.insert(3, Err(Error::Invalid("disk on fire".into())));
    let out: Vec<_> = pseudolabel_corpus(&t, input, 2, None, Exec::Sequential).unwrap().collect();
    let err = out.iter().find_map(|r| r.as_ref().err()).unwrap().to_string();
    assert!(err.contains("document 3"), "{err}");
    assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 2);
}

fn setup(max_epochs: usize) -> StudentSetup {
    StudentSetup {
        plan: chain_thaw_plan(&LayerGroup::ALL).unwrap(),
        train: TrainConfig { max_epochs, patience: 1, batch_size: 16, ..Default::default() },
        val_fraction: 0.2,
    }
}

#[test]
fn finetune_with_no_epochs_is_the_teacher() {
    let t = teacher(4);
    let pseudo = label_all(&t, &docs(30), 8, None);
    let (s, trace) =
        train_student(StudentMode::TeacherFineTuned, &pseudo, &labeled(10), &t, &setup(0), &mut Rng::new(5)).unwrap();
    assert!(trace.records.is_empty());
    for g in LayerGroup::ALL {
        assert!(s.params.group_bits_equal(&t.params, g));
    }
}

#[test]
fn noisy_student_starts_from_its_own_initialisation() {
    let (a, b) = (teacher(4), teacher(40));
    let pseudo = label_all(&a, &docs(30), 8, None);
    let run = |t: &Classifier<f32>| {
        train_student(StudentMode::IndependentNoisyStudent, &pseudo, &labeled(10), t, &setup(0), &mut Rng::new(6))
            .unwrap()
            .0
    };
    let (sa, sb) = (run(&a), run(&b));
    for g in LayerGroup::ALL {
        assert!(sa.params.group_bits_equal(&sb.params, g), "init depends on teacher weights ({g})");
        assert!(!sa.params.group_bits_equal(&a.params, g), "init copied the teacher ({g})");
    }
}

#[test]
fn comparison_values_do_not_depend_on_dataset_order() {
    let (a, b) = (teacher(7), teacher(8));
    let (x, y, z) = (labeled(12), labeled(21), labeled(9));
    let models = [("a", &a), ("b", &b)];
    let fwd = compare_models(&models, &[("x", &x[..]), ("y", &y[..]), ("z", &z[..])], Exec::Sequential).unwrap();
    let rev = compare_models(&models, &[("z", &z[..]), ("y", &y[..]), ("x", &x[..])], Exec::Parallel).unwrap();
    assert_eq!(rev.rows.iter().map(|r| r.dataset.as_str()).collect::<Vec<_>>(), ["z", "y", "x"]);
    for row in &fwd.rows {
        let other = rev.rows.iter().find(|r| r.dataset == row.dataset).unwrap();
        assert_eq!(row.accuracies, other.accuracies);
    }
    assert!(compare_models(&models, &[("empty", &[][..])], Exec::Sequential).is_err());
}
