#![allow(dead_code)]

use std::path::PathBuf;

use tokio::sync::oneshot;

use oplaceran_client::Client;
use oplaceran_core::scenario::{load_scenario, Scenario};
use oplaceran_service::{serve_with_shutdown, AppState};

pub fn fixture(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    load_scenario(std::fs::File::open(path).unwrap()).unwrap()
}

/// A running service on an ephemeral port; stops when dropped.
pub struct Server {
    pub client: Client,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl Server {
    pub async fn start(state: AppState) -> Server {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(serve_with_shutdown(listener, state, async {
            let _ = rx.await;
        }));
        Server {
            client: Client::new(format!("http://{addr}")),
            stop: Some(tx),
            task: Some(task),
        }
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.task.take() {
            t.await.unwrap().unwrap();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
    }
}
