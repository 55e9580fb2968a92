use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_PROVIDER_TIMEOUT: Duration = Duration::from_secs(60);

type Key = ([u8; 32], [u8; 32]);

/// External LPIPS process: `<program> [args..] <pathA> <pathB>` must print a
/// single decimal on stdout and exit 0.
///
/// Results are cached by the content hashes of the two files. Calls are
/// serialized unless the provider is marked reentrant.
#[derive(Debug)]
pub struct LpipsProvider {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    reentrant: bool,
    cache: Mutex<HashMap<Key, f64>>,
    gate: Mutex<()>,
}

impl LpipsProvider {
    /// `command` is split on whitespace into the program and leading arguments.
    pub fn new(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty LPIPS provider command".into()))?;
        Ok(LpipsProvider {
            program,
            args: parts.collect(),
            timeout: DEFAULT_PROVIDER_TIMEOUT,
            reentrant: false,
            cache: Mutex::new(HashMap::new()),
            gate: Mutex::new(()),
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn reentrant(mut self, yes: bool) -> Self {
        self.reentrant = yes;
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    fn run(&self, a: &Path, b: &Path) -> Result<f64> {
        let fail = |message: String, stderr: String| Error::Provider { message, stderr };
        let spawn = || {
            Command::new(&self.program)
                .args(&self.args)
                .arg(a)
                .arg(b)
                .stdin(Stdio::null())
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
        };
        // A freshly written script can briefly report ETXTBSY while another
        // thread's fork still holds its write descriptor.
        let mut attempt = spawn();
        for _ in 0..20 {
            match &attempt {
                Err(e) if e.raw_os_error() == Some(26) => {
                    std::thread::sleep(Duration::from_millis(10));
                    attempt = spawn();
                }
                _ => break,
            }
        }
        let mut child =
            attempt.map_err(|e| fail(format!("cannot start `{}`: {e}", self.program), String::new()))?;
        let drain = |mut r: Box<dyn Read + Send>| {
            std::thread::spawn(move || {
                let mut buf = Vec::new();
                let _ = r.read_to_end(&mut buf);
                String::from_utf8_lossy(&buf).into_owned()
            })
        };
        let out = drain(Box::new(child.stdout.take().expect("piped stdout")));
        let err = drain(Box::new(child.stderr.take().expect("piped stderr")));

        let start = Instant::now();
        let status = loop {
            if let Some(s) = child.try_wait()? {
                break Some(s);
            }
            if start.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let Some(status) = status else {
            // Grandchildren may still hold the pipes open; leave the readers detached.
            return Err(fail(format!("timed out after {:?}", self.timeout), String::new()));
        };
        let stdout = out.join().unwrap_or_default();
        let stderr = err.join().unwrap_or_default();
        if !status.success() {
            return Err(fail(format!("provider exited with {status}"), stderr));
        }
        let text = stdout.trim();
        let value: f64 = text
            .parse()
            .map_err(|_| fail(format!("unparsable provider output {text:?}"), stderr.clone()))?;
        if !value.is_finite() {
            return Err(fail(format!("non-finite provider output {text:?}"), stderr));
        }
        Ok(value)
    }
}

fn file_hash(path: &Path) -> Result<[u8; 32]> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(Sha256::digest(&bytes).into())
}

/// Runs (or recalls) the provider on two RGB image files.
pub fn lpips_external(a: &Path, b: &Path, provider: &LpipsProvider) -> Result<f64> {
    let key = (file_hash(a)?, file_hash(b)?);
    if let Some(&v) = provider.cache.lock().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let value = if provider.reentrant {
        provider.run(a, b)?
    } else {
        let _guard = provider.gate.lock().expect("provider lock");
        provider.run(a, b)?
    };
    provider.cache.lock().expect("cache lock").insert(key, value);
    Ok(value)
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn script(dir: &Path, name: &str, body: &str) -> String {
        use std::os::unix::fs::PermissionsExt;
        let p = dir.join(name);
        std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn files(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let (a, b) = (dir.join("a.png"), dir.join("b.png"));
        std::fs::write(&a, b"aaa").unwrap();
        std::fs::write(&b, b"bbb").unwrap();
        (a, b)
    }

    #[test]
    fn stub_provider_and_cache() {
        let dir = tempfile::tempdir().unwrap();
        let (a, _) = files(dir.path());
        let counter = dir.path().join("calls");
        let cmd = script(dir.path(), "p.sh", &format!("echo x >> {}\necho 0.0", counter.display()));
        let p = LpipsProvider::new(&cmd).unwrap();
        assert_eq!(lpips_external(&a, &a, &p).unwrap(), 0.0);
        assert_eq!(lpips_external(&a, &a, &p).unwrap(), 0.0);
        assert_eq!(std::fs::read_to_string(&counter).unwrap().lines().count(), 1);
        assert_eq!(p.cached_entries(), 1);
    }

    #[test]
    fn provider_receives_paths() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = files(dir.path());
        let log = dir.path().join("args");
        let cmd = script(dir.path(), "p.sh", &format!("echo \"$1 $2\" > {}\necho 0.25", log.display()));
        let p = LpipsProvider::new(&cmd).unwrap();
        assert_eq!(lpips_external(&a, &b, &p).unwrap(), 0.25);
        assert_eq!(
            std::fs::read_to_string(&log).unwrap().trim(),
            format!("{} {}", a.display(), b.display())
        );
    }

    #[test]
    fn parse_error_carries_stderr() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = files(dir.path());
        let cmd = script(dir.path(), "p.sh", "echo warming up >&2\necho abc");
        let p = LpipsProvider::new(&cmd).unwrap();
        match lpips_external(&a, &b, &p) {
            Err(Error::Provider { stderr, .. }) => assert!(stderr.contains("warming up")),
            other => panic!("expected provider error, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_exit_and_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = files(dir.path());
        let bad = LpipsProvider::new(&script(dir.path(), "bad.sh", "echo nope >&2\nexit 2")).unwrap();
        assert!(matches!(lpips_external(&a, &b, &bad), Err(Error::Provider { .. })));
        let slow = LpipsProvider::new(&script(dir.path(), "slow.sh", "sleep 5\necho 0.1"))
            .unwrap()
            .with_timeout(Duration::from_millis(200));
        let t = Instant::now();
        match lpips_external(&a, &b, &slow) {
            Err(Error::Provider { message, .. }) => assert!(message.contains("timed out")),
            other => panic!("expected timeout, got {other:?}"),
        }
        assert!(t.elapsed() < Duration::from_secs(4));
        assert!(LpipsProvider::new("  ").is_err());
    }
}
