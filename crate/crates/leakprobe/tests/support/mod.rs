//! A minimal single-threaded HTTP/1.1 server for exercising the HTTP
//! provider and the remote embedding client without network access.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    #[allow(dead_code)] // consumed by a subset of the test binaries
    pub headers: Vec<String>,
    pub body: serde_json::Value,
}

pub struct MockServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<RecordedRequest>>>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

/// Starts a server whose handler maps each request body to a
/// `(status, body)` response. Responses close the connection, so every
/// request arrives on a fresh socket.
pub fn spawn<F>(handler: F) -> MockServer
where
    F: Fn(&RecordedRequest) -> (u16, String) + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
    listener.set_nonblocking(true).expect("nonblocking listener");
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests: Arc<Mutex<Vec<RecordedRequest>>> = Arc::new(Mutex::new(Vec::new()));
    let shutdown = Arc::new(AtomicBool::new(false));

    let thread_requests = Arc::clone(&requests);
    let thread_shutdown = Arc::clone(&shutdown);
    let handle = std::thread::spawn(move || {
        while !thread_shutdown.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((mut stream, _)) => {
                    stream.set_nonblocking(false).ok();
                    if let Some(request) = read_request(&mut stream) {
                        let (status, body) = handler(&request);
                        thread_requests.lock().unwrap().push(request);
                        let response = format!(
                            "HTTP/1.1 {status} MOCK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                            body.len()
                        );
                        let _ = stream.write_all(response.as_bytes());
                    }
                }
                Err(ref err) if err.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(std::time::Duration::from_millis(2));
                }
                Err(_) => break,
            }
        }
    });

    MockServer {
        url,
        requests,
        shutdown,
        handle: Some(handle),
    }
}

fn read_request(stream: &mut std::net::TcpStream) -> Option<RecordedRequest> {
    let mut raw = Vec::new();
    let mut buf = [0u8; 1024];
    let header_end = loop {
        let n = stream.read(&mut buf).ok()?;
        if n == 0 {
            return None;
        }
        raw.extend_from_slice(&buf[..n]);
        if let Some(pos) = find_header_end(&raw) {
            break pos;
        }
        if raw.len() > 1 << 20 {
            return None;
        }
    };

    let header_text = String::from_utf8_lossy(&raw[..header_end]).to_string();
    let headers: Vec<String> = header_text.lines().map(str::to_string).collect();
    let content_length = headers
        .iter()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);

    let mut body_bytes = raw[header_end + 4..].to_vec();
    while body_bytes.len() < content_length {
        let n = stream.read(&mut buf).ok()?;
        if n == 0 {
            break;
        }
        body_bytes.extend_from_slice(&buf[..n]);
    }

    let body = if body_bytes.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::from_slice(&body_bytes).unwrap_or(serde_json::Value::Null)
    };
    Some(RecordedRequest { headers, body })
}

fn find_header_end(raw: &[u8]) -> Option<usize> {
    raw.windows(4).position(|w| w == b"\r\n\r\n")
}

/// A completion endpoint answering every prompt with the same text.
pub fn completion_server(text: &'static str) -> MockServer {
    spawn(move |_| {
        (
            200,
            serde_json::json!({"choices": [{"text": text}]}).to_string(),
        )
    })
}

/// An embedding endpoint returning a deterministic 3-dim vector per input
/// text (length, first byte, constant), dimension-consistent across batches.
pub fn embedding_server() -> MockServer {
    spawn(|request| {
        let inputs = request.body["input"].as_array().cloned().unwrap_or_default();
        let data: Vec<serde_json::Value> = inputs
            .iter()
            .enumerate()
            .map(|(index, text)| {
                let text = text.as_str().unwrap_or_default();
                let first = f64::from(text.bytes().next().unwrap_or(1));
                serde_json::json!({
                    "index": index,
                    "embedding": [text.len() as f64 + 1.0, first, 1.0],
                })
            })
            .collect();
        (200, serde_json::json!({ "data": data }).to_string())
    })
}
