//! On-disk artifacts: atomic writes and the hash-stamped JSON envelope.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use driftlab_core::verifier::config_hash;

use crate::config::RunConfig;

pub const ARTIFACT_SCHEMA: &str = "driftlab.artifact/1";

/// What produced an artifact: the command and its resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config: RunConfig,
    /// SHA-256 of the input ensemble file, when one was read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
}

impl Provenance {
    pub fn hash(&self) -> Result<String> {
        let view = Provenance { config: self.config.hashed_view(), ..self.clone() };
        Ok(config_hash(&serde_json::to_value(view)?)?)
    }
}

/// Every JSON artifact: provenance, its hash, and the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    pub kind: String,
    pub config_hash: String,
    pub provenance: Provenance,
    pub payload: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(kind: &str, provenance: &Provenance, payload: T) -> Result<Self> {
        Ok(Envelope {
            schema: ARTIFACT_SCHEMA.into(),
            kind: kind.into(),
            config_hash: provenance.hash()?,
            provenance: provenance.clone(),
            payload,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

impl<T: DeserializeOwned> Envelope<T> {
    /// Read an envelope and check that its stored hash matches its
    /// provenance.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let env: Envelope<T> =
            serde_json::from_str(&text).with_context(|| format!("{} is not a driftlab artifact", path.display()))?;
        if env.schema != ARTIFACT_SCHEMA {
            bail!("{}: unsupported artifact schema `{}`", path.display(), env.schema);
        }
        let recomputed = env.provenance.hash()?;
        if recomputed != env.config_hash {
            bail!(
                "{}: stored config hash {} does not match its provenance ({recomputed})",
                path.display(),
                env.config_hash
            );
        }
        Ok(env)
    }
}

/// Short form of a config hash used in file and directory names.
pub fn short(hash: &str) -> &str {
    &hash[..12.min(hash.len())]
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Write via a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Run directory `<root>/<command>-<hash12>`.
pub fn run_dir(root: &Path, command: &str, hash: &str) -> PathBuf {
    root.join(format!("{command}-{}", short(hash)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance { command: "simulate".into(), config: RunConfig::default(), input_sha256: None }
    }

    #[test]
    fn output_location_does_not_change_the_hash() {
        let a = prov();
        let mut b = prov();
        b.config.output = Some("/elsewhere".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.config.seed = Some(9);
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn tampered_envelope_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        let mut env = Envelope::new("x", &prov(), 1.0f64).unwrap();
        write_atomic(&p, env.to_json().unwrap().as_bytes()).unwrap();
        assert!(Envelope::<f64>::read(&p).is_ok());
        env.provenance.config.seed = Some(5);
        write_atomic(&p, env.to_json().unwrap().as_bytes()).unwrap();
        let err = Envelope::<f64>::read(&p).unwrap_err().to_string();
        assert!(err.contains("does not match"), "{err}");
    }
}
