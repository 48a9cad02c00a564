//! One JSON file per key under the cache directory. The key hashes the
//! canonical polynomial together with every setting that can change the
//! monodromy block.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use algcover::exactpoly::BiPoly;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::report::SCHEMA;
use crate::Settings;

pub fn key(poly: &BiPoly, s: &Settings) -> String {
    let t = &s.track;
    let base = match s.base {
        Some(z) => format!("{:e} {:e}", z.re, z.im),
        None => "auto".into(),
    };
    let material = format!(
        "schema {SCHEMA}\npoly {poly}\ntrack {:e} {:e} {:e} {:e} {}\nbase {base}\ncap {}\n",
        t.tol_res, t.sep_fraction, t.h_init, t.h_min, t.max_steps, s.cap
    );
    hex::encode(Sha256::digest(material.as_bytes()))
}

fn path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

/// `None` on a miss or an unreadable entry; the caller recomputes.
pub fn load(dir: &Path, key: &str) -> Option<Value> {
    let text = fs::read_to_string(path(dir, key)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn store(dir: &Path, key: &str, block: &Value) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    fs::write(&tmp, serde_json::to_string_pretty(block).expect("block is serializable"))?;
    fs::rename(tmp, path(dir, key))
}
