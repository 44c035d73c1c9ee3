use std::io::Cursor;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use medpredict::advice::AdviceTable;
use medpredict::dataframe::{Matrix, ScalerParams};
use medpredict::ensemble::{fit_forest, EnsembleConfig};
use medpredict::neuralnet::build_lung_cnn;
use medpredict::persistence::ModelArtifact;
use medpredict::predict::predict_features;
use medpredict::Model;
use medpredict_service::{router, AppState, Registry, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn diabetes() -> ModelArtifact {
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| vec![(i % 4) as f64, 90.0 + 4.0 * i as f64, 60.0 + i as f64, 22.0 + 0.6 * i as f64, 25.0 + i as f64])
        .collect();
    let y: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
    let m = Matrix::from_rows(&rows);
    let scaler = ScalerParams::fit(&m);
    let cfg = EnsembleConfig { n_trees: 5, ..EnsembleConfig::default() };
    ModelArtifact {
        disease: "diabetes".into(),
        feature_names: ["Pregnancies", "Glucose", "Insulin", "BMI", "Age"].map(String::from).to_vec(),
        class_names: vec!["0".into(), "1".into()],
        model: Model::Forest(fit_forest(&scaler.transform(&m).unwrap(), &y, 2, &cfg, 3).unwrap()),
        scaler: Some(scaler),
    }
}

fn lung() -> ModelArtifact {
    ModelArtifact {
        disease: "lung".into(),
        feature_names: Vec::new(),
        class_names: ["lung_aca", "lung_n", "lung_scc"].map(String::from).to_vec(),
        scaler: None,
        model: Model::NeuralNet(build_lung_cnn(16, 16, 3, 5).unwrap()),
    }
}

fn app(limit: usize) -> axum::Router {
    let mut cfg = ServiceConfig::new(".");
    cfg.max_body_bytes = limit;
    let state = AppState::ready(Registry::from_artifacts([diabetes(), lung()]), AdviceTable::builtin());
    router(state, &cfg)
}

async fn send(app: &axum::Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn json_post(path: &str, body: &Value) -> Request<Body> {
    Request::post(path)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn png(w: u32, h: u32, rgb: [u8; 3]) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    image::RgbImage::from_pixel(w, h, image::Rgb(rgb))
        .write_to(&mut out, image::ImageFormat::Png)
        .unwrap();
    out.into_inner()
}

fn multipart(bytes: &[u8], content_type: &str) -> Request<Body> {
    let boundary = "XBOUNDARYX";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"image\"; filename=\"x.png\"\r\nContent-Type: {content_type}\r\n\r\n"
    )
    .into_bytes();
    body.extend_from_slice(bytes);
    body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
    Request::post("/predict/lung")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap()
}

#[tokio::test]
async fn health_and_models() {
    let app = app(1 << 20);
    let (s, v) = send(&app, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"status": "ok", "model_count": 2}));

    let (s, v) = send(&app, Request::get("/models").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["disease"], "diabetes");
    assert_eq!(list[0]["features"], json!(["Pregnancies", "Glucose", "Insulin", "BMI", "Age"]));
    assert_eq!(list[1]["input_size"], json!([16, 16]));
}

#[tokio::test]
async fn health_is_unavailable_while_loading() {
    let state = AppState::loading(AdviceTable::builtin());
    let app = router(state.clone(), &ServiceConfig::new("."));
    let (s, v) = send(&app, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["status"], "unavailable");
    let (s, _) = send(&app, Request::get("/models").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);

    state.set_registry(Registry::default());
    let (s, v) = send(&app, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["model_count"], 0);
}

#[tokio::test]
async fn tabular_prediction_matches_library() {
    let app = app(1 << 20);
    let body = json!({"Pregnancies": 3, "Glucose": 150, "Insulin": 80, "BMI": 33.3, "Age": 41});
    let (s, v) = send(&app, json_post("/predict/diabetes", &body)).await;
    assert_eq!(s, StatusCode::OK);
    let direct = predict_features(&diabetes(), &body, &AdviceTable::builtin()).unwrap();
    assert_eq!(v, serde_json::to_value(&direct).unwrap());
    assert!(v["advice"].as_str().unwrap().contains("not a medical diagnosis"));
}

#[tokio::test]
async fn malformed_requests_name_fields() {
    let app = app(1 << 20);
    let (s, v) = send(&app, json_post("/predict/diabetes", &json!({"Pregnancies": 3, "Insulin": 80, "BMI": "x", "Age": 41}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"], json!(["Glucose", "BMI"]));

    let (s, v) = send(&app, json_post("/predict/flu", &json!({}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(v["error"].as_str().unwrap().contains("flu"));

    let req = Request::post("/predict/diabetes").header(header::CONTENT_TYPE, "application/json").body(Body::from("{oops")).unwrap();
    let (s, v) = send(&app, req).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v.get("fields").is_none());

    let req = Request::post("/predict/diabetes").header(header::CONTENT_TYPE, "text/plain").body(Body::from("1,2")).unwrap();
    assert_eq!(send(&app, req).await.0, StatusCode::UNSUPPORTED_MEDIA_TYPE);
}

#[tokio::test]
async fn oversized_body_is_rejected() {
    let app = app(256);
    let big = json!({"Pregnancies": 3, "Glucose": 150, "Insulin": 80, "BMI": 33.3, "Age": 41, "pad": "x".repeat(1000)});
    let (s, v) = send(&app, json_post("/predict/diabetes", &big)).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
    assert!(v["error"].is_string());
}

#[tokio::test]
async fn image_upload_is_resized_and_predicted() {
    let app = app(1 << 20);
    let (s, v) = send(&app, multipart(&png(96, 80, [200, 30, 90]), "image/png")).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["model_kind"], "neuralnet");
    let again = send(&app, multipart(&png(96, 80, [200, 30, 90]), "image/png")).await.1;
    assert_eq!(v, again);

    let (s, _) = send(&app, multipart(&[], "image/png")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = send(&app, multipart(b"hello", "text/plain")).await;
    assert_eq!(s, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let (s, _) = send(&app, json_post("/predict/lung", &json!({}))).await;
    assert_eq!(s, StatusCode::UNSUPPORTED_MEDIA_TYPE);
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let app = app(1 << 20);
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/predict/diabetes")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "*");
}

#[tokio::test]
async fn registry_skips_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    diabetes().save(&dir.path().join("a_diabetes.model")).unwrap();
    std::fs::write(dir.path().join("b_broken.model"), b"MDPMODEL garbage").unwrap();
    lung().save(&dir.path().join("c_lung.model")).unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
    let (reg, report) = Registry::load_dir(dir.path()).unwrap();
    assert_eq!(reg.diseases().collect::<Vec<_>>(), ["diabetes", "lung"]);
    assert_eq!(report.failed.len(), 1);
    assert!(report.failed[0].0.ends_with("b_broken.model"));

    let empty = tempfile::tempdir().unwrap();
    assert!(Registry::load_dir(empty.path()).unwrap().0.is_empty());
}

#[tokio::test]
async fn static_directory_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>ui</h1>").unwrap();
    let mut cfg = ServiceConfig::new(".");
    cfg.static_dir = Some(dir.path().to_path_buf());
    let app = router(AppState::ready(Registry::default(), AdviceTable::builtin()), &cfg);
    let resp = app.oneshot(Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<h1>ui</h1>");
}
