use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use lfr_core::lf_data::{synthesize_light_field, write_light_field, Layer, Region, SyntheticSceneSpec, Texture};
use lfr_service::{AppState, Dataset, ServiceConfig};
use reqwest::StatusCode;
use serde_json::{json, Value};

/// 32×32 views: background plane at d = 1, centred square at d = 2.
fn write_dataset(dir: &Path) {
    let front = Layer {
        texture: Texture::Procedural { seed: 41 },
        disparity: 2.0,
        region: Region { x0: 0.25, y0: 0.25, x1: 0.75, y1: 0.75 },
    };
    let back = Layer::full(Texture::Procedural { seed: 42 }, 1.0);
    let mut spec = SyntheticSceneSpec::new(64, 3, 3, 2, vec![back, front]);
    spec.channels = 3;
    spec.noise_sigma = 0.002;
    spec.seed = 5;
    let scene = synthesize_light_field(&spec).unwrap();
    write_light_field(dir, &scene.lf, 1.0, Some([0.0, 4.0])).unwrap();
}

struct Server {
    base: String,
    client: reqwest::Client,
    _data: tempfile::TempDir,
    _results: tempfile::TempDir,
}

impl Server {
    async fn start() -> Self {
        let data = tempfile::tempdir().unwrap();
        let results = tempfile::tempdir().unwrap();
        write_dataset(data.path());
        let dataset = Dataset::load(data.path(), None).unwrap();
        let config = ServiceConfig {
            results_dir: results.path().to_path_buf(),
        };
        let state = AppState::new(dataset, config).unwrap();
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(lfr_service::serve(listener, state));
        Self {
            base: format!("http://{addr}"),
            client: reqwest::Client::new(),
            _data: data,
            _results: results,
        }
    }

    async fn get(&self, path: &str) -> reqwest::Response {
        self.client.get(format!("{}{path}", self.base)).send().await.unwrap()
    }

    async fn post(&self, path: &str, body: Value) -> reqwest::Response {
        self.client
            .post(format!("{}{path}", self.base))
            .json(&body)
            .send()
            .await
            .unwrap()
    }

    async fn bytes(&self, path: &str, body: Value) -> Vec<u8> {
        let res = self.post(path, body).await;
        assert_eq!(res.status(), StatusCode::OK);
        assert_eq!(res.headers()["content-type"], "image/png");
        res.bytes().await.unwrap().to_vec()
    }

    async fn disparity_at(&self, x: usize, y: usize) -> f64 {
        let v: Value = self.get(&format!("/disparity/value?x={x}&y={y}")).await.json().await.unwrap();
        v["d"].as_f64().unwrap()
    }

    async fn submit(&self, body: Value) -> String {
        let res = self.post("/refocus/render", body).await;
        assert_eq!(res.status(), StatusCode::OK);
        let v: Value = res.json().await.unwrap();
        v["job_id"].as_str().unwrap().to_string()
    }

    async fn wait_for(&self, id: &str) -> Value {
        for _ in 0..600 {
            let job: Value = self.get(&format!("/job/{id}")).await.json().await.unwrap();
            if job["state"] == "done" || job["state"] == "failed" {
                return job;
            }
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
        panic!("job {id} did not finish");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn dataset_endpoints() {
    let server = Server::start().await;
    let info: Value = server.get("/dataset/info").await.json().await.unwrap();
    assert_eq!(info["rows"], 3);
    assert_eq!(info["cols"], 3);
    assert_eq!((info["width"].as_u64(), info["height"].as_u64()), (Some(32), Some(32)));
    let range = info["disparity_range"].as_array().unwrap();
    assert_eq!(range.len(), 2);

    let res = server.get("/dataset/center.png").await;
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(res.headers()["content-type"], "image/png");

    assert!((server.disparity_at(16, 16).await - 2.0).abs() <= 0.5);
    assert!((server.disparity_at(16, 3).await - 1.0).abs() <= 0.5);

    let res = server.get("/disparity/value?x=32&y=0").await;
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
    let body: Value = res.json().await.unwrap();
    assert_eq!(body["field"], "x");
    let res = server.get("/disparity/value?x=1").await;
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn previews() {
    let server = Server::start().await;
    let center = server.get("/dataset/center.png").await.bytes().await.unwrap().to_vec();
    let sharp = server.bytes("/refocus/preview", json!({"df": 1.0, "k": 0.0})).await;
    assert_eq!(sharp, center);

    let a = server.bytes("/refocus/preview", json!({"df": 2.0, "k": 1.5, "a": 15, "b": 0.3})).await;
    let b = server.bytes("/refocus/preview", json!({"df": 2.0, "k": 1.5, "a": 15, "b": 0.3})).await;
    assert_eq!(a, b);
    assert_ne!(a, center);
    let wider = server.bytes("/refocus/preview", json!({"df": 2.0, "k": 3.0})).await;
    assert_ne!(wider, a);

    for (body, field) in [
        (json!({"df": 2.0, "k": -0.5}), "k"),
        (json!({"df": 9.0, "k": 1.0}), "df"),
        (json!({"df": 2.0, "k": 1.0, "b": 2.0}), "b"),
    ] {
        let res = server.post("/refocus/preview", body).await;
        assert_eq!(res.status(), StatusCode::BAD_REQUEST);
        let err: Value = res.json().await.unwrap();
        assert_eq!(err["field"], field);
        assert!(!err["message"].as_str().unwrap().is_empty());
    }
    let res = server.post("/refocus/preview", json!({"k": 1.0})).await;
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread")]
async fn render_jobs_run_in_order_and_report_progress() {
    let server = Server::start().await;
    let first = server.submit(json!({"df": 2.0, "k": 1.0, "scale": 2, "noi": 4})).await;
    let second = server.submit(json!({"df": 2.0, "k": 1.0, "scale": 2, "noi": 2})).await;
    assert_ne!(first, second);

    let done = server.wait_for(&second).await;
    assert_eq!(done["state"], "done");
    assert_eq!(done["progress"], 2);
    assert_eq!(done["noi"], 2);
    assert_eq!(done["params"]["df"], 2.0);
    assert!(done["error"].is_null());
    // the earlier submission has to be finished by now
    let earlier: Value = server.get(&format!("/job/{first}")).await.json().await.unwrap();
    assert_eq!(earlier["state"], "done");
    assert_eq!(earlier["progress"], 4);

    let res = server.get(&format!("/job/{first}/result.png")).await;
    assert_eq!(res.status(), StatusCode::OK);
    let bytes = res.bytes().await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("result.png");
    std::fs::write(&path, &bytes).unwrap();
    let img = lfr_core::lf_data::load_png(&path).unwrap();
    assert_eq!((img.height(), img.width(), img.channels()), (64, 64, 3));
}

#[tokio::test(flavor = "multi_thread")]
async fn render_errors() {
    let server = Server::start().await;
    for (body, field) in [
        (json!({"df": 2.0, "k": -1.0}), "k"),
        (json!({"df": 2.0, "k": 1.0, "noi": 0}), "noi"),
        (json!({"df": -3.0, "k": 1.0}), "df"),
        (json!({"df": 2.0, "k": 1.0, "step": 0.0}), "step"),
    ] {
        let res = server.post("/refocus/render", body).await;
        assert_eq!(res.status(), StatusCode::BAD_REQUEST);
        let err: Value = res.json().await.unwrap();
        assert_eq!(err["field"], field);
    }
    assert_eq!(server.get("/job/job-999999").await.status(), StatusCode::NOT_FOUND);
    assert_eq!(server.get("/job/nope/result.png").await.status(), StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread")]
async fn scripted_viewer_session() {
    let server = Server::start().await;
    // click the near square, then the background
    let near = server.disparity_at(16, 16).await;
    let far = server.disparity_at(3, 16).await;
    assert!((near - far).abs() > 0.5);
    let near_preview = server.bytes("/refocus/preview", json!({"df": near, "k": 2.0})).await;
    let far_preview = server.bytes("/refocus/preview", json!({"df": far, "k": 2.0})).await;
    assert_ne!(near_preview, far_preview);

    // scrub k; the last response must be the one for the final value
    let mut last = Vec::new();
    for k in [0.5, 1.0, 1.5, 2.5] {
        last = server.bytes("/refocus/preview", json!({"df": far, "k": k})).await;
    }
    assert_eq!(last, server.bytes("/refocus/preview", json!({"df": far, "k": 2.5})).await);

    let id = server.submit(json!({"df": far, "k": 2.5, "noi": 3})).await;
    let job = server.wait_for(&id).await;
    assert_eq!(job["state"], "done");
    assert_eq!(job["progress"], 3);
    assert_eq!(server.get(&format!("/job/{id}/result.png")).await.status(), StatusCode::OK);
}
