use coreball::core::{predict_ovo, BinaryModel, KernelSpec, OvoModel, SparseVector, SupportVector};
use coreball::libsvm::parse_str;
use coreball::model_file::{deserialize_model, serialize_model};
use coreball::train::{train_ovo, TrainOptions};
use coreball::Error;

const HAND: &str = "\
coreball-svm v1
kernel linear
C 1.0
classes 2 1 2
machine 1 2 nsv=2
0.5 1:1.0
-0.5 1:-1.0
";

fn x(v: &[f64]) -> SparseVector {
    SparseVector::from_dense(v)
}

#[test]
fn hand_written_model_predicts_by_hand() {
    // h(x) = 0.5 (x1 + 1) - 0.5 (-x1 + 1) = x1
    let model = deserialize_model(HAND).unwrap();
    let m = &model.machines()[0];
    assert_eq!(m.decision_value(&x(&[2.0])), 2.0);
    assert_eq!(predict_ovo(&model, &x(&[2.0])), 1);
    assert_eq!(predict_ovo(&model, &x(&[-3.0, 5.0])), 2);
    assert_eq!(predict_ovo(&model, &x(&[0.0, 1.0])), 1);
    assert_eq!(serialize_model(&model).unwrap(), HAND);
}

#[test]
fn trained_model_round_trips_byte_for_byte() {
    let text = "1 1:0.1 2:0.3\n1 1:0.2 2:0.1\n2 1:1.1 2:0.9\n2 1:0.9 2:1.3\n3 1:-1.2 2:1.0\n3 1:-0.8 2:0.7\n";
    let data = parse_str(text).unwrap();
    for kernel in [
        KernelSpec::Rbf { sigma2: 0.7 },
        KernelSpec::Linear,
        KernelSpec::PolyInhomogeneous { degree: 3 },
        KernelSpec::PolyHomogeneous { gamma: 0.37, degree: 2 },
    ] {
        let trained = train_ovo(&data, &TrainOptions::new(kernel, 10.0, coreball::core::Algorithm::Mfw)).unwrap();
        let first = serialize_model(&trained.model).unwrap();
        let loaded = deserialize_model(&first).unwrap();
        assert_eq!(serialize_model(&loaded).unwrap(), first);
        for s in data.samples() {
            for (a, b) in trained.model.machines().iter().zip(loaded.machines()) {
                assert_eq!(a.decision_value(&s.features).to_bits(), b.decision_value(&s.features).to_bits());
            }
        }
    }
}

#[test]
fn empty_support_cannot_be_written() {
    let machine = BinaryModel { kernel: KernelSpec::Linear, c: 1.0, support: vec![], positive_class: 0, negative_class: 1 };
    let model = OvoModel::new(vec![0, 1], vec![machine]).unwrap();
    assert!(matches!(serialize_model(&model), Err(Error::Core(coreball::core::Error::EmptySupport))));
}

#[test]
fn mixed_kernels_cannot_be_written() {
    let sv = || vec![SupportVector { features: x(&[1.0]), coef: 1.0 }];
    let a = BinaryModel { kernel: KernelSpec::Linear, c: 1.0, support: sv(), positive_class: 0, negative_class: 1 };
    let b = BinaryModel { kernel: KernelSpec::Rbf { sigma2: 1.0 }, positive_class: 0, negative_class: 2, ..a.clone() };
    let c = BinaryModel { positive_class: 1, negative_class: 2, ..a.clone() };
    let model = OvoModel::new(vec![0, 1, 2], vec![a, b, c]).unwrap();
    assert!(serialize_model(&model).is_err());
}

#[test]
fn malformed_files_are_rejected_with_line_numbers() {
    let cases = [
        (HAND.replace("v1", "v2"), "model file: unsupported version 'v2' at line 1"),
        (HAND.replace("coreball-svm v1", "libsvm"), "model file: not a coreball-svm model at line 1"),
        (HAND.replace("kernel linear", "kernel cosine"), "model file: unknown kernel 'cosine' at line 2"),
        (HAND.replace("C 1.0", "cost 1.0"), "model file: expected 'C' section at line 3"),
        (HAND.replace("classes 2 1 2", "classes 3 1 2"), "model file: expected 3 class ids, found 2 at line 4"),
        (HAND.replace("nsv=2", "nsv=3"), "model file: unexpected end of file, expected support vector at line 8"),
        (HAND.replace("nsv=2", "count=2"), "model file: expected nsv=<value>, got 'count=2' at line 5"),
        (HAND.replace("-0.5 1:-1.0", "-0.5 2:1 1:1"), "model file: non-increasing index at line 7"),
        (HAND.replace("-0.5", "0"), "model file: support coefficient must be finite and non-zero at line 7"),
        (format!("{HAND}extra\n"), "model file: unexpected content after the last machine at line 8"),
        (HAND.replace("machine 1 2", "machine 1 1"), "model file: invalid configuration: machine refers to an unknown or repeated class at line 7"),
    ];
    for (text, message) in cases {
        assert_eq!(deserialize_model(&text).unwrap_err().to_string(), message);
    }
    assert!(deserialize_model(&format!("{HAND}\n\n")).is_ok());
}
