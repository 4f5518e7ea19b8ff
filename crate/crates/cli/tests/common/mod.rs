#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jostline::config::ProfileDoc;
use jostline::MediumProfile;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jostline"))
}

/// Writes a profile document and returns its path.
pub fn write_profile(dir: &Path, name: &str, p: &MediumProfile<f64>) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, ProfileDoc::from_profile(p).to_json()).unwrap();
    path
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
