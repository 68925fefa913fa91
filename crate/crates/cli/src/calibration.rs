//! Calibrated inequality constants cached in a checksummed JSON file.

use std::path::Path;

use qcrit::qcore::{calibrate_lindqvist, LindqvistConstant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CALIBRATION_SCHEMA: &str = "qcrit-calibration/1";

/// Exponents with a cached Lindqvist constant.
pub const CALIBRATED_P: [f64; 3] = [1.5, 2.0, 3.0];

/// Random candidates added to the calibration grid.
const CALIBRATION_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationBody {
    pub schema: String,
    pub seed: u64,
    pub samples: usize,
    pub lindqvist: Vec<LindqvistConstant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    body: CalibrationBody,
    sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub body: CalibrationBody,
    pub sha256: String,
}

fn digest(body: &CalibrationBody) -> String {
    let bytes = serde_json::to_vec(body).expect("calibration serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl Calibration {
    pub fn generate(seed: u64) -> CliResult<Self> {
        let lindqvist = CALIBRATED_P
            .iter()
            .map(|&p| calibrate_lindqvist(p, CALIBRATION_SAMPLES, seed))
            .collect::<qcrit::Result<Vec<_>>>()?;
        let body = CalibrationBody {
            schema: CALIBRATION_SCHEMA.into(),
            seed,
            samples: CALIBRATION_SAMPLES,
            lindqvist,
        };
        let sha256 = digest(&body);
        Ok(Self { body, sha256 })
    }

    /// Reads and checks `path`; a missing file is generated and written.
    pub fn load_or_create(path: &Path, seed: u64) -> CliResult<Self> {
        let name = path.display().to_string();
        if !path.exists() {
            let cal = Self::generate(seed)?;
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
            }
            let file = CalibrationFile {
                body: cal.body.clone(),
                sha256: cal.sha256.clone(),
            };
            let text = serde_json::to_string_pretty(&file).expect("calibration serializes") + "\n";
            std::fs::write(path, text).map_err(|e| CliError::io(name, e))?;
            return Ok(cal);
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(name.clone(), e))?;
        let bad = |reason: String| CliError::Calibration {
            path: name.clone(),
            reason,
        };
        let file: CalibrationFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if file.body.schema != CALIBRATION_SCHEMA {
            return Err(bad(format!("unsupported schema {:?}", file.body.schema)));
        }
        let sha256 = digest(&file.body);
        if sha256 != file.sha256 {
            return Err(bad("checksum mismatch".into()));
        }
        if file.body.lindqvist.iter().any(|c| !(c.constant > 0.0 && c.constant.is_finite())) {
            return Err(bad("non-positive constant".into()));
        }
        Ok(Self {
            body: file.body,
            sha256,
        })
    }

    pub fn lindqvist(&self, p: f64) -> Option<f64> {
        self.body.lindqvist.iter().find(|c| c.p == p).map(|c| c.constant)
    }
}
