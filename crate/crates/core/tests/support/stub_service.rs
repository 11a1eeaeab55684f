//! Minimal HTTP server speaking the `/embed` protocol, for client tests.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use polyalign::embedding::HashEmbedder;

#[derive(Debug, Clone)]
#[allow(dead_code)]
pub enum Behavior {
    /// Raw hashed trigram features, with a small text-dependent delay so
    /// concurrent batches finish out of order.
    Hash { dim: usize },
    /// Always answer with this status and `{"error": msg}`.
    Fail { status: u16, message: String },
    /// Sleep before answering.
    Slow(Duration),
    /// Return one vector fewer than requested.
    DropOne { dim: usize },
    /// Vectors whose length disagrees with the reported dim.
    Ragged,
}

#[derive(Default)]
pub struct Stats {
    pub requests: AtomicUsize,
    in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub batch_sizes: Mutex<Vec<usize>>,
}

pub struct StubService {
    port: u16,
    pub stats: Arc<Stats>,
}

impl StubService {
    pub fn start(behavior: Behavior) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let stats = Arc::new(Stats::default());
        let shared = Arc::clone(&stats);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let behavior = behavior.clone();
                let stats = Arc::clone(&shared);
                thread::spawn(move || {
                    let _ = handle(stream, &behavior, &stats);
                });
            }
        });
        Self { port, stats }
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }
}

fn handle(stream: TcpStream, behavior: &Behavior, stats: &Stats) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;

    stats.requests.fetch_add(1, Ordering::SeqCst);
    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let (status, payload) = respond(&request_line, &body, behavior, stats);
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);

    let mut stream = stream;
    let reason = if status == 200 { "OK" } else { "Error" };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn respond(request_line: &str, body: &[u8], behavior: &Behavior, stats: &Stats) -> (u16, String) {
    if !request_line.starts_with("POST /embed ") {
        return (404, r#"{"error":"not found"}"#.into());
    }
    let texts: Vec<String> = match serde_json::from_slice::<serde_json::Value>(body) {
        Ok(v) => match v.get("texts").and_then(|t| serde_json::from_value(t.clone()).ok()) {
            Some(t) => t,
            None => return (400, r#"{"error":"missing texts"}"#.into()),
        },
        Err(_) => return (400, r#"{"error":"malformed body"}"#.into()),
    };
    stats.batch_sizes.lock().unwrap().push(texts.len());
    let vectors = |dim: usize, texts: &[String]| -> Vec<Vec<f64>> {
        let h = HashEmbedder::new(dim);
        texts.iter().map(|t| h.features(t)).collect()
    };
    match behavior {
        Behavior::Hash { dim } => {
            let jitter = texts.first().map_or(0, |t| t.len() % 7) as u64;
            thread::sleep(Duration::from_millis(5 * jitter));
            let v = vectors(*dim, &texts);
            (200, serde_json::json!({"dim": dim, "vectors": v}).to_string())
        }
        Behavior::Fail { status, message } => (*status, serde_json::json!({"error": message}).to_string()),
        Behavior::Slow(d) => {
            thread::sleep(*d);
            let v = vectors(64, &texts);
            (200, serde_json::json!({"dim": 64, "vectors": v}).to_string())
        }
        Behavior::DropOne { dim } => {
            let mut v = vectors(*dim, &texts);
            v.pop();
            (200, serde_json::json!({"dim": dim, "vectors": v}).to_string())
        }
        Behavior::Ragged => {
            let v: Vec<Vec<f64>> = texts.iter().enumerate().map(|(i, _)| vec![1.0; 3 + i]).collect();
            (200, serde_json::json!({"dim": 3, "vectors": v}).to_string())
        }
    }
}
