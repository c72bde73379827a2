//! Child-process execution under wall-clock and memory limits, and compiler probing.

use std::io::{Read, Seek};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub timeout: Duration,
    /// Address-space cap applied with `setrlimit`. Leave unset for ASan binaries,
    /// which reserve far more virtual memory than they use.
    pub memory_bytes: Option<u64>,
}

pub const GIB: u64 = 1 << 30;

impl Limits {
    pub fn new(timeout: Duration, memory_bytes: Option<u64>) -> Limits {
        Limits { timeout, memory_bytes }
    }

    /// 10 s, 1 GiB: the default for running test binaries.
    pub fn run_default() -> Limits {
        Limits::new(Duration::from_secs(10), Some(GIB))
    }

    /// 200 s, 1 GiB: the default for compiling.
    pub fn compile_default() -> Limits {
        Limits::new(Duration::from_secs(200), Some(GIB))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Exit {
    Code(i32),
    Signal(i32),
    Timeout,
}

impl Exit {
    pub fn success(self) -> bool {
        self == Exit::Code(0)
    }
}

#[derive(Debug, Clone)]
pub struct Output {
    pub exit: Exit,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub elapsed: Duration,
}

impl Output {
    pub fn stdout_str(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }

    pub fn stderr_str(&self) -> String {
        String::from_utf8_lossy(&self.stderr).into_owned()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("compiler `{0}` not found or not runnable")]
    ToolchainMissing(String),
    #[error("sandbox failure: {0}")]
    SandboxFailure(#[from] std::io::Error),
}

/// Run `cmd` to completion or until the limits trip. The child leads its own
/// process group so a timeout kills any grandchildren too.
pub fn run_limited(cmd: &mut Command, limits: &Limits) -> std::io::Result<Output> {
    let mut out_file = tempfile::tempfile()?;
    let mut err_file = tempfile::tempfile()?;
    cmd.stdin(Stdio::null())
        .stdout(out_file.try_clone()?)
        .stderr(err_file.try_clone()?)
        .process_group(0);
    if let Some(bytes) = limits.memory_bytes {
        // SAFETY: setrlimit is async-signal-safe and touches no parent state.
        unsafe {
            cmd.pre_exec(move || {
                let lim = libc::rlimit { rlim_cur: bytes, rlim_max: bytes };
                if libc::setrlimit(libc::RLIMIT_AS, &lim) != 0 {
                    return Err(std::io::Error::last_os_error());
                }
                Ok(())
            });
        }
    }
    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as i32;
    let mut pause = Duration::from_micros(200);
    let exit = loop {
        if let Some(status) = child.try_wait()? {
            break match (status.code(), status.signal()) {
                (Some(c), _) => Exit::Code(c),
                (None, Some(s)) => Exit::Signal(s),
                _ => Exit::Code(-1),
            };
        }
        if start.elapsed() >= limits.timeout {
            // SAFETY: plain syscall on the child's process group.
            unsafe {
                libc::killpg(pid, libc::SIGKILL);
            }
            child.wait()?;
            break Exit::Timeout;
        }
        std::thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(20));
    };
    let elapsed = start.elapsed();
    // reap stragglers that outlived a normally exiting leader
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    out_file.rewind()?;
    out_file.read_to_end(&mut stdout)?;
    err_file.rewind()?;
    err_file.read_to_end(&mut stderr)?;
    Ok(Output { exit, stdout, stderr, elapsed })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilerSpec {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub extra_flags: Vec<String>,
    #[serde(default)]
    pub version: String,
}

impl CompilerSpec {
    /// Locate `path` (a file path or a name on `PATH`) and record its version line.
    pub fn probe(path: impl AsRef<Path>) -> Result<CompilerSpec, ToolError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let out = run_limited(
            Command::new(path).arg("--version"),
            &Limits::new(Duration::from_secs(30), None),
        )
        .map_err(|_| ToolError::ToolchainMissing(display.clone()))?;
        if !out.exit.success() {
            return Err(ToolError::ToolchainMissing(display));
        }
        let version = out.stdout_str().lines().next().unwrap_or_default().trim().to_string();
        let name = path.file_name().map_or(display.clone(), |n| n.to_string_lossy().into_owned());
        Ok(CompilerSpec { name, path: path.to_path_buf(), extra_flags: vec![], version })
    }

    pub fn command(&self) -> Command {
        let mut c = Command::new(&self.path);
        c.args(&self.extra_flags);
        c
    }
}

/// Write `source` to `dir/<stem>.c` and compile it with `flags` into `dir/<stem>`.
/// Returns the compiler's output and the path of the would-be binary.
pub fn compile_c(
    spec: &CompilerSpec,
    source: &str,
    dir: &Path,
    stem: &str,
    flags: &[&str],
    limits: &Limits,
) -> Result<(Output, PathBuf), ToolError> {
    let src = dir.join(format!("{stem}.c"));
    let bin = dir.join(stem);
    std::fs::write(&src, source)?;
    let mut cmd = spec.command();
    cmd.args(flags).arg(&src).arg("-o").arg(&bin);
    let out = run_limited(&mut cmd, limits).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
            ToolError::ToolchainMissing(spec.path.display().to_string())
        }
        _ => ToolError::SandboxFailure(e),
    })?;
    Ok((out, bin))
}

/// The default trusted compiler: `$CC`, else `cc`.
pub fn default_compiler() -> Result<CompilerSpec, ToolError> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    CompilerSpec::probe(cc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_output_and_code() {
        let out = run_limited(
            Command::new("sh").args(["-c", "echo hi; echo err >&2; exit 3"]),
            &Limits::new(Duration::from_secs(5), None),
        )
        .unwrap();
        assert_eq!(out.exit, Exit::Code(3));
        assert_eq!(out.stdout_str(), "hi\n");
        assert_eq!(out.stderr_str(), "err\n");
    }

    #[test]
    fn timeout_kills_group() {
        let out = run_limited(
            Command::new("sh").args(["-c", "sleep 30 & sleep 30"]),
            &Limits::new(Duration::from_millis(200), None),
        )
        .unwrap();
        assert_eq!(out.exit, Exit::Timeout);
        assert!(out.elapsed < Duration::from_secs(5));
    }

    #[test]
    fn signal_reported() {
        let out = run_limited(
            Command::new("sh").args(["-c", "kill -SEGV $$"]),
            &Limits::new(Duration::from_secs(5), None),
        )
        .unwrap();
        assert_eq!(out.exit, Exit::Signal(libc::SIGSEGV));
    }

    #[test]
    fn memory_cap_applies() {
        let out = run_limited(
            Command::new("sh").args(["-c", "head -c 200000000 /dev/zero | tr '\\0' x | sort >/dev/null"]),
            &Limits::new(Duration::from_secs(20), Some(64 << 20)),
        )
        .unwrap();
        assert!(!out.exit.success());
    }

    #[test]
    fn missing_compiler() {
        assert!(matches!(
            CompilerSpec::probe("/nonexistent/cc"),
            Err(ToolError::ToolchainMissing(_))
        ));
        assert!(!CompilerSpec::probe("cc").unwrap().version.is_empty());
    }
}
