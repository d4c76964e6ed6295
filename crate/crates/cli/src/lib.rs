//! Command implementations behind the `linker_builder`, `model_builder`,
//! `application`, `evaluate` and `synthetic` binaries. Each command is a
//! clap `Args` struct plus a `run` function, so tests can drive them
//! without spawning processes.

pub mod application;
pub mod evaluate;
pub mod linker_builder;
pub mod model_builder;
pub mod synthetic;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;

/// File name of the linker artifact inside a model directory.
pub const LINKER_FILE: &str = "linker.json";

/// Rewrites single-dash long flags (`-mode`) to the double-dash form clap
/// expects. Short flags such as `-h` and negative numbers are left alone.
pub fn normalize_args<I, T>(args: I) -> Vec<OsString>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    args.into_iter()
        .map(Into::into)
        .enumerate()
        .map(|(i, arg)| {
            if i == 0 {
                return arg;
            }
            match arg.to_str() {
                Some(s) if is_single_dash_long(s) => OsString::from(format!("-{s}")),
                _ => arg,
            }
        })
        .collect()
}

fn is_single_dash_long(s: &str) -> bool {
    let Some(rest) = s.strip_prefix('-') else {
        return false;
    };
    !rest.starts_with('-') && rest.len() > 1 && rest.starts_with(|c: char| c.is_ascii_alphabetic())
}

/// Parses normalized process arguments into `A`.
pub fn parse_args<A: Parser>() -> A {
    A::parse_from(normalize_args(std::env::args_os()))
}

/// Shared `main` body: logging setup, then `run`, mapping failure to exit
/// code 1 with the error chain on stderr.
pub fn main_with<A: Parser>(run: impl FnOnce(A) -> Result<()>) {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = parse_args::<A>();
    if let Err(e) = run(args) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Writes pretty JSON to a temporary sibling and renames it into place, so
/// the destination only ever holds a complete file.
pub fn write_json_atomic<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file_name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let mut file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    file.write_all(bytes)
        .and_then(|_| file.sync_all())
        .with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving output into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(args: &[&str]) -> Vec<String> {
        normalize_args(args.iter().copied())
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect()
    }

    #[test]
    fn single_dash_long_flags_are_doubled() {
        assert_eq!(
            norm(&[
                "app",
                "-mode",
                "prediction",
                "-input",
                "a.json",
                "--output",
                "b.json"
            ]),
            [
                "app",
                "--mode",
                "prediction",
                "--input",
                "a.json",
                "--output",
                "b.json"
            ]
        );
    }

    #[test]
    fn short_flags_values_and_program_name_untouched() {
        assert_eq!(
            norm(&["-prog", "-h", "-0.5", "-", "x"]),
            ["-prog", "-h", "-0.5", "-", "x"]
        );
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_json_atomic(&path, &[1, 2]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "[\n  1,\n  2\n]\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
