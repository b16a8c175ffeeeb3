//! Send one prompt to a live chat-completions endpoint.
//!
//! ```text
//! OPENAI_API_KEY=... cargo run --example live_http -- fixtures/backends/openai.toml
//! ```
//!
//! The token is only ever read from the environment variable the spec names.

use std::path::PathBuf;

use psyscreen::backend::{complete, BackendSpec, ChatMessage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Some(path) = std::env::args().nth(1).map(PathBuf::from) else {
        eprintln!("usage: live_http <backend.toml>");
        std::process::exit(2);
    };
    let spec = BackendSpec::load(&path)?;
    if std::env::var(&spec.auth_env_var).is_err() {
        eprintln!("{} is not set; nothing sent", spec.auth_env_var);
        return Ok(());
    }
    let req = spec.request(vec![
        ChatMessage::system("You rate depression likelihood from interview text."),
        ChatMessage::user(
            "Participant 1:\ni sleep fine./ work is good./\n\nEnd with: Likelihood of Ongoing Mental Health Disorder: N/7",
        ),
    ]);
    let resp = complete(&spec, &req)?;
    println!("{:.1}s\n{}", resp.latency_s, resp.content);
    Ok(())
}
