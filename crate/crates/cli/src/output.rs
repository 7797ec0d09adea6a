use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Failure;

/// Files of one run, named `<command>-<hash>-<artifact>.<ext>` where the
/// hash covers the resolved config and the contents of its input files.
pub struct Artifacts {
    dir: PathBuf,
    stem: String,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Result<Self, Failure> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(cfg).map_err(|e| Failure::numerical("Io", e.to_string()))?);
        h.update(cfg.input_bytes());
        let digest = h.finalize();
        let hash: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        fs::create_dir_all(&cfg.out)?;
        Ok(Self {
            dir: cfg.out.clone(),
            stem: format!("{}-{hash}", cfg.command),
        })
    }

    fn path(&self, artifact: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{}-{artifact}.{ext}", self.stem))
    }

    pub fn csv<F>(&self, artifact: &str, body: F) -> Result<PathBuf, Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.path(artifact, "csv");
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        println!("{}", path.display());
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, artifact: &str, value: &T) -> Result<PathBuf, Failure> {
        let path = self.path(artifact, "json");
        let mut v = serde_json::to_value(value).map_err(|e| Failure::numerical("Io", e.to_string()))?;
        round_floats(&mut v);
        let text = serde_json::to_string_pretty(&v).map_err(|e| Failure::numerical("Io", e.to_string()))?;
        fs::write(&path, text + "\n")?;
        println!("{}", path.display());
        Ok(path)
    }
}

/// Rounds every non-integer number to 12 significant digits.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
                if let Some(m) = serde_json::Number::from_f64(r) {
                    *n = m;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}
