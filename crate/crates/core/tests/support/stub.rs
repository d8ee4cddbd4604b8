//! Minimal HTTP/1.1 stub answering chat-completion requests from a script.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::json;

#[derive(Clone, Debug)]
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

impl Reply {
    /// 200 with `content` as the assistant message.
    pub fn content(content: &str) -> Self {
        let body = json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
        Self { status: 200, body, delay: Duration::ZERO }
    }

    pub fn status(status: u16) -> Self {
        Self { status, body: "{\"error\": \"scripted\"}".into(), delay: Duration::ZERO }
    }

    pub fn delayed(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

type Script = dyn Fn(usize) -> Reply + Send + Sync;

pub struct Stub {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
    pub max_in_flight: Arc<AtomicUsize>,
    pub bodies: Arc<Mutex<Vec<String>>>,
    pub auth_headers: Arc<Mutex<Vec<Option<String>>>>,
}

struct Shared {
    script: Box<Script>,
    requests: Arc<AtomicUsize>,
    in_flight: AtomicUsize,
    max_in_flight: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<String>>>,
    auth_headers: Arc<Mutex<Vec<Option<String>>>>,
}

/// Serve forever on an ephemeral port; the `n`th request (0-based) gets `script(n)`.
pub fn start(script: impl Fn(usize) -> Reply + Send + Sync + 'static) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let shared = Arc::new(Shared {
        script: Box::new(script),
        requests: Arc::new(AtomicUsize::new(0)),
        in_flight: AtomicUsize::new(0),
        max_in_flight: Arc::new(AtomicUsize::new(0)),
        bodies: Arc::new(Mutex::new(Vec::new())),
        auth_headers: Arc::new(Mutex::new(Vec::new())),
    });
    let stub = Stub {
        url,
        requests: shared.requests.clone(),
        max_in_flight: shared.max_in_flight.clone(),
        bodies: shared.bodies.clone(),
        auth_headers: shared.auth_headers.clone(),
    };
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let shared = shared.clone();
            thread::spawn(move || {
                let _ = handle(stream, &shared);
            });
        }
    });
    stub
}

fn handle(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut length = 0usize;
    let mut auth = None;
    loop {
        line.clear();
        reader.read_line(&mut line)?;
        let header = line.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => length = value.trim().parse().unwrap_or(0),
                "authorization" => auth = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;

    let now = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let index = shared.requests.fetch_add(1, Ordering::SeqCst);
    shared.bodies.lock().unwrap().push(String::from_utf8_lossy(&body).into_owned());
    shared.auth_headers.lock().unwrap().push(auth);

    let reply = (shared.script)(index);
    thread::sleep(reply.delay);
    shared.in_flight.fetch_sub(1, Ordering::SeqCst);

    let mut stream = stream;
    let head = format!(
        "HTTP/1.1 {} Scripted\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reply.status,
        reply.body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(reply.body.as_bytes())?;
    stream.flush()
}
