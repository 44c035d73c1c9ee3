use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

struct KillOnDrop(Child);

impl Drop for KillOnDrop {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_starts_and_skips_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.model"), b"MDPMODEL nope").unwrap();
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let child = Command::new(env!("CARGO_BIN_EXE_medpredict"))
        .args(["serve", "--models-dir", dir.path().to_str().unwrap(), "--port", &port.to_string()])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let _guard = KillOnDrop(child);

    let deadline = Instant::now() + Duration::from_secs(20);
    let health = loop {
        match get(port, "/health") {
            Some(r) if r.starts_with("HTTP/1.1 200") => break r,
            _ if Instant::now() > deadline => panic!("service never became healthy"),
            _ => std::thread::sleep(Duration::from_millis(50)),
        }
    };
    assert!(health.contains(r#"{"status":"ok","model_count":0}"#), "{health}");
    let models = get(port, "/models").unwrap();
    assert!(models.ends_with("[]"), "{models}");
}

#[test]
fn serve_rejects_missing_directory() {
    let out = Command::new(env!("CARGO_BIN_EXE_medpredict"))
        .args(["serve", "--models-dir", "/definitely/not/here", "--port", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
