//! Command-line front end.
//!
//! Every command writes its outputs atomically and embeds the resolved
//! configuration in them: as a `config` key in JSON, as a `# config ...`
//! line in CSV. Exit codes are 0 on success, 1 for usage or validation
//! errors and 2 for I/O errors.

mod args;
mod commands;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use serde_json::Value;

pub use args::*;
pub use commands::{ModelFile, PoolingFile};

use crate::error::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "PLDL_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Messages go to stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    init_threads();
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    if e.is_io() {
        EXIT_IO
    } else {
        EXIT_INVALID
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Replaces `--config FILE` by the flags it encodes, placed right after
/// the subcommand words so that explicit flags still win.
fn expand_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(argv);
    };
    let path = match argv[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            argv.remove(pos);
            p
        }
        None => {
            argv.remove(pos);
            if pos >= argv.len() {
                return Err(Error::InvalidConfig("--config needs a file".into()));
            }
            argv.remove(pos).to_string_lossy().into_owned()
        }
    };
    let flags = config_flags(Path::new(&path))?;
    let words = argv
        .iter()
        .skip(1)
        .take_while(|a| !a.to_string_lossy().starts_with('-'))
        .count();
    let words = match argv.get(1).map(|a| a.to_string_lossy().into_owned()).as_deref() {
        Some("pool") | Some("select") => words.min(2),
        _ => words.min(1),
    };
    let at = 1 + words;
    let tail = argv.split_off(at);
    argv.extend(flags);
    argv.extend(tail);
    Ok(argv)
}

/// Keys that describe an output rather than a flag.
const META_KEYS: [&str; 3] = ["command", "version", "config"];

fn config_flags(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: Value = serde_json::from_str(&text)?;
    // accept both a bare object and an output file carrying `config`
    let obj = match &value {
        Value::Object(o) => match o.get("config") {
            Some(Value::Object(inner)) => inner.clone(),
            _ => o.clone(),
        },
        _ => {
            return Err(Error::InvalidConfig(format!(
                "{}: expected a JSON object",
                path.display()
            )))
        }
    };
    let mut flags = Vec::new();
    for (key, v) in obj {
        if META_KEYS.contains(&key.as_str()) {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => flags.push(flag.into()),
            Value::String(s) => flags.push(format!("{flag}={s}").into()),
            Value::Number(n) => flags.push(format!("{flag}={n}").into()),
            Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                flags.push(format!("{flag}={}", joined.join(",")).into());
            }
            Value::Object(_) => {
                return Err(Error::InvalidConfig(format!("config key {key:?} cannot be an object")));
            }
        }
    }
    Ok(flags)
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad grid {text:?}; use start:stop:step or a,b,c"));
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // round away accumulated binary error so grid values print cleanly
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5:2:0.5").unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("1, 3,7").unwrap(), vec![1.0, 3.0, 7.0]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn config_goes_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"command":"pool nbp","p_max":6,"no_bootstrap":true,"quiet":false,"data":"x.jsonl"}"#,
        )
        .unwrap();
        let argv: Vec<OsString> = [
            "pldl",
            "select",
            "clusters",
            "--config",
            cfg.to_str().unwrap(),
            "--p-max",
            "9",
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let out: Vec<String> = expand_config(argv)
            .unwrap()
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect();
        assert_eq!(&out[..3], &["pldl", "select", "clusters"]);
        assert!(out.contains(&"--p-max=6".to_string()));
        assert!(out.contains(&"--no-bootstrap".to_string()));
        assert!(!out.iter().any(|a| a.contains("quiet") || a.contains("command")));
        assert_eq!(&out[out.len() - 2..], &["--p-max", "9"]);
    }
}
