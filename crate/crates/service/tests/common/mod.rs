#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use seafloor_core::ingest::Workspace;
use seafloor_service::{serve, ServiceConfig};
use serde_json::Value;
use tempfile::TempDir;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// The Auka fixture laid out as a workspace in a fresh temporary directory.
pub fn auka_workspace() -> TempDir {
    let src = fixtures().join("auka");
    let dir = tempfile::tempdir().unwrap();
    let ws = Workspace::create(
        &src.join("cores.csv"),
        &src.join("samples.csv"),
        Some(&src.join("maps.json")),
        Some(&src.join("parameters.json")),
        dir.path(),
    )
    .unwrap();
    assert!(ws.report.succeeded(), "{}", ws.report.summary());
    dir
}

pub struct Server {
    pub base: String,
    pub client: reqwest::Client,
}

/// Starts the service on an ephemeral loopback port.
pub async fn start(config: ServiceConfig) -> Server {
    let (tx, rx) = tokio::sync::oneshot::channel::<SocketAddr>();
    tokio::spawn(async move {
        serve(config, "127.0.0.1:0".parse().unwrap(), move |addr| {
            tx.send(addr).unwrap();
        })
        .await
        .unwrap();
    });
    let addr = rx.await.unwrap();
    Server {
        base: format!("http://{addr}"),
        client: reqwest::Client::builder().no_proxy().build().unwrap(),
    }
}

pub async fn start_in(dir: &Path) -> Server {
    start(ServiceConfig::new(dir)).await
}

impl Server {
    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let res = self.client.get(self.url(path)).send().await.unwrap();
        let status = res.status().as_u16();
        (status, res.json().await.unwrap())
    }

    pub async fn get_text(&self, path: &str) -> (u16, String) {
        let res = self.client.get(self.url(path)).send().await.unwrap();
        (res.status().as_u16(), res.text().await.unwrap())
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let res = self
            .client
            .post(self.url(path))
            .json(body)
            .send()
            .await
            .unwrap();
        let status = res.status().as_u16();
        (status, res.json().await.unwrap())
    }

    /// Submits an interpolation and polls until it settles.
    pub async fn interpolate(&self, body: &Value) -> (String, Value) {
        let (status, submitted) = self.post("/api/interpolations", body).await;
        assert_eq!(status, 202, "{submitted}");
        let id = submitted["job_id"].as_str().unwrap().to_owned();
        loop {
            let (status, job) = self.get(&format!("/api/interpolations/{id}")).await;
            assert_eq!(status, 200);
            match job["status"].as_str().unwrap() {
                "done" | "failed" => return (id, job),
                _ => tokio::time::sleep(Duration::from_millis(20)).await,
            }
        }
    }
}

pub fn geochem_ids() -> Vec<&'static str> {
    vec![
        "NA091_008",
        "NA091_014",
        "NA091_020",
        "S0193_PC2",
        "S0193_PC5",
        "S0193_PC9",
    ]
}
