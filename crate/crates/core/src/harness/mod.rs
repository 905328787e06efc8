//! Evaluation harness: reference simulator, error injection, generated
//! networks and scoring.

pub mod bench;
pub mod gen;
pub mod inject;
pub mod pipeline;
pub mod score;
pub mod sim;

use std::path::Path;

use crate::netmodel::{Diagnostic, LoadError, Network};
use crate::requirements::{parse_requirements, Requirement, RequirementError};

/// A network together with the requirements it should meet.
#[derive(Clone, Debug)]
pub struct Case {
    pub net: Network,
    pub requirements: Vec<Requirement>,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum CaseError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Requirement(#[from] RequirementError),
    #[error("{0}: {1}")]
    Io(String, String),
}

/// Loads `configs/*.cfg`, `topology.json` and `requirements.json` from `dir`.
pub fn load_case(dir: &Path) -> Result<Case, CaseError> {
    let (net, warnings) = Network::load(&dir.join("configs"), &dir.join("topology.json"))?;
    let rp = dir.join("requirements.json");
    let text = std::fs::read_to_string(&rp).map_err(|e| CaseError::Io(rp.display().to_string(), e.to_string()))?;
    let requirements = parse_requirements(&text, &net.topology)?;
    Ok(Case {
        net,
        requirements,
        warnings,
    })
}

/// Directory of the fixtures shipped with the crate.
pub fn fixture_dir(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}
