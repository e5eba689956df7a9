use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Everything needed to re-run a command and check its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Fully resolved parameters after merging config and flags.
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    /// Hex SHA-256 of the output bytes (for JSON outputs, of the compact
    /// serialisation of the `result` field).
    pub output_sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: Value, seed: Option<u64>, output: &[u8]) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            output_sha256: sha256_hex(output),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let m = RunManifest::new(
            "simulate",
            serde_json::json!({"gamma": 0.1, "trials": 10, "x": [1e-300, 0.1 + 0.2]}),
            Some(u64::MAX),
            b"abc",
        );
        let s = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            m.output_sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
