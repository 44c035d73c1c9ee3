use std::io::Write;

use medpredict::advice::AdviceTable;
use medpredict::persistence::ModelArtifact;
use medpredict::pipeline::{evaluate_csv, train_tabular_csv, Disease, TrainConfig};
use medpredict::predict::predict_features;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_pima(path: &std::path::Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "Pregnancies,Glucose,BloodPressure,SkinThickness,Insulin,BMI,DiabetesPedigreeFunction,Age,Outcome").unwrap();
    for i in 0..n {
        let sick = i % 3 == 0;
        let glucose = if rng.random_bool(0.03) { 0.0 } else if sick { rng.random_range(130.0..200.0) } else { rng.random_range(70.0..140.0) };
        let bmi = if sick { rng.random_range(28.0..45.0) } else { rng.random_range(18.0..35.0) };
        writeln!(
            f,
            "{},{glucose:.0},{},{},{},{bmi:.1},{:.3},{},{}",
            rng.random_range(0..10),
            rng.random_range(50..90),
            rng.random_range(0..40),
            rng.random_range(0..200),
            rng.random_range(0.1..1.5),
            rng.random_range(21..70),
            u8::from(sick)
        )
        .unwrap();
    }
}

#[test]
fn train_save_load_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pima.csv");
    write_pima(&csv, 240, 5);
    let cfg = TrainConfig::default();
    let out = train_tabular_csv(Disease::Diabetes, &csv, &cfg).unwrap();
    assert_eq!(out.artifact.feature_names, ["Pregnancies", "Glucose", "Insulin", "BMI", "Age"]);

    let model_path = dir.path().join("diabetes.model");
    out.artifact.save(&model_path).unwrap();
    let loaded = ModelArtifact::load(&model_path).unwrap();
    assert_eq!(loaded, out.artifact);

    let advice = AdviceTable::builtin();
    let body = serde_json::json!({"Pregnancies": 2, "Glucose": 185, "Insulin": 100, "BMI": 41.5, "Age": 50});
    let a = predict_features(&out.artifact, &body, &advice).unwrap();
    let b = predict_features(&loaded, &body, &advice).unwrap();
    assert_eq!(a, b);

    let (cm, report) = evaluate_csv(&loaded, &csv).unwrap();
    assert_eq!(cm.total(), 240);
    assert!(report.accuracy > 0.8);

    let again = train_tabular_csv(Disease::Diabetes, &csv, &cfg).unwrap();
    assert_eq!(again.artifact.to_bytes().unwrap(), out.artifact.to_bytes().unwrap());
    assert_eq!(again.render(), out.render());
}
