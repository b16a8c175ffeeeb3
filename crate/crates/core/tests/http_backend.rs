//! HTTP backend against a local mock server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use psyscreen::backend::{BackendError, BackendKind, BackendSpec, ChatBackend, ChatMessage, HttpChatBackend};

enum Reply {
    Status(u16, String),
    /// Accept the request and never answer.
    Stall,
}

struct Captured {
    auth: Option<String>,
    path: String,
    body: String,
}

/// Serve one scripted reply per connection; returns the base URL and the
/// captured requests.
fn serve(replies: Vec<Reply>) -> (String, Arc<Mutex<Vec<Captured>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for reply in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let captured = read_request(&stream);
            log.lock().unwrap().push(captured);
            match reply {
                Reply::Status(code, body) => respond(stream, code, &body),
                Reply::Stall => {
                    thread::sleep(Duration::from_millis(600));
                    drop(stream);
                }
            }
        }
    });
    (url, seen)
}

fn read_request(stream: &TcpStream) -> Captured {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut auth = None;
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).unwrap();
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (name, value) = h.split_once(':').unwrap();
        match name.to_ascii_lowercase().as_str() {
            "content-length" => len = value.trim().parse().unwrap(),
            "authorization" => auth = Some(value.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    Captured {
        auth,
        path,
        body: String::from_utf8(body).unwrap(),
    }
}

fn respond(mut stream: TcpStream, code: u16, body: &str) {
    let text = format!(
        "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(text.as_bytes()).unwrap();
}

fn ok_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 3}
    })
    .to_string()
}

fn spec(url: &str) -> BackendSpec {
    let mut s = BackendSpec::new(BackendKind::HttpChat);
    s.endpoint_url = url.to_string();
    s.timeout_s = 0.3;
    s.max_retries = 2;
    s.retry_backoff_s = 0.01;
    s
}

fn request(s: &BackendSpec) -> psyscreen::backend::ChatRequest {
    s.request(vec![
        ChatMessage::system("sys"),
        ChatMessage::user("Participant 1: hi./"),
    ])
}

#[test]
fn success_sends_bearer_token_and_model() {
    let (url, seen) = serve(vec![Reply::Status(200, ok_body("Likelihood: 3/7"))]);
    let s = spec(&url);
    let backend = HttpChatBackend::with_token(&s, "test-token");
    let resp = backend.complete(&request(&s)).unwrap();
    assert_eq!(resp.content, "Likelihood: 3/7");
    assert_eq!(resp.prompt_tokens, Some(11));
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].auth.as_deref(), Some("Bearer test-token"));
    assert_eq!(seen[0].path, "/v1/chat/completions");
    let body: serde_json::Value = serde_json::from_str(&seen[0].body).unwrap();
    assert_eq!(body["model"], "gpt-4");
    assert_eq!(body["messages"][1]["content"], "Participant 1: hi./");
}

#[test]
fn server_errors_are_retried() {
    let (url, seen) = serve(vec![
        Reply::Status(503, "busy".into()),
        Reply::Status(429, "slow down".into()),
        Reply::Status(200, ok_body("fine")),
    ]);
    let s = spec(&url);
    let resp = HttpChatBackend::with_token(&s, "t").complete(&request(&s)).unwrap();
    assert_eq!(resp.content, "fine");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn retries_are_bounded() {
    let (url, seen) = serve((0..3).map(|_| Reply::Status(500, "down".into())).collect());
    let s = spec(&url);
    let err = HttpChatBackend::with_token(&s, "t").complete(&request(&s)).unwrap_err();
    assert!(matches!(err, BackendError::Transport(m) if m.contains("500")));
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn unauthorized_is_not_retried() {
    let (url, seen) = serve(vec![
        Reply::Status(401, "bad key".into()),
        Reply::Status(200, ok_body("x")),
    ]);
    let s = spec(&url);
    let err = HttpChatBackend::with_token(&s, "t").complete(&request(&s)).unwrap_err();
    assert!(matches!(err, BackendError::Auth(_)));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn stalled_server_times_out() {
    let (url, _) = serve(vec![Reply::Stall]);
    let s = spec(&url);
    let err = HttpChatBackend::with_token(&s, "t").complete(&request(&s)).unwrap_err();
    assert!(err.is_timeout(), "{err:?}");
}

#[test]
fn missing_token_variable_is_an_auth_error() {
    let mut s = spec("http://127.0.0.1:9");
    s.auth_env_var = "PSYSCREEN_TEST_TOKEN_THAT_IS_NOT_SET".into();
    assert!(matches!(HttpChatBackend::from_spec(&s), Err(BackendError::Auth(_))));
}
