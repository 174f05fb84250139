#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

pub fn bundled_csv() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic.csv")
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_greenstat")
}
