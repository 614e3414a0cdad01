use std::fs;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::backend::{BackendDescriptor, BackendKind, SamplingParams, BACKEND_URL_ENV};
use crate::filter::{DistanceUnit, FilterConfig};
use crate::mask::{Granularity, MaskConfig};
use crate::prompt::SpecialTokens;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IoPaths {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// CoNLL-U parses of generated sentences, keyed by their `# text`.
    pub parses: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub distance_unit: DistanceUnit,
    pub self_bleu_max_n: usize,
    /// Divide tree edit distance by the larger tree size.
    pub normalized_ted: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            distance_unit: DistanceUnit::Token,
            self_bleu_max_n: 4,
            normalized_ted: false,
        }
    }
}

/// Every knob of a pipeline run. Loaded from JSON; CLI flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub global_seed: u64,
    pub mask: MaskConfig,
    pub sampling: SamplingParams,
    pub filter: FilterConfig,
    pub backend: BackendDescriptor,
    pub tokens: SpecialTokens,
    pub eval: EvalOptions,
    pub io: IoPaths,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
}

/// Values given on the command line or in the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub backend_url: Option<String>,
    pub granularity: Option<Granularity>,
    pub epsilon: Option<usize>,
    pub threshold: Option<f64>,
    pub offline: bool,
    pub workers: Option<usize>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        RunConfig::from_json(&text)
    }

    /// Applies overrides on top of the file values. A backend URL switches
    /// the backend to remote unless `offline` is set.
    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.global_seed = seed;
        }
        if let Some(url) = o.backend_url {
            self.backend.endpoint_url = Some(url);
            self.backend.kind = BackendKind::Remote;
            if self.backend.capabilities.len() < 2 {
                self.backend.capabilities = BackendDescriptor::remote("").capabilities;
            }
        }
        if o.offline {
            self.backend.kind = BackendKind::Offline;
            self.backend.capabilities = BackendDescriptor::offline().capabilities;
        }
        if let Some(g) = o.granularity {
            self.mask.granularity = g;
        }
        if let Some(e) = o.epsilon {
            self.filter.epsilon = e;
        }
        if let Some(t) = o.threshold {
            self.filter.threshold = t;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        let io = &mut self.io;
        for (slot, value) in [
            (&mut io.input, o.input),
            (&mut io.output, o.output),
            (&mut io.parses, o.parses),
            (&mut io.report, o.report),
        ] {
            if value.is_some() {
                *slot = value;
            }
        }
    }

    /// Resolves a configuration: defaults, then the file, then the
    /// environment's backend URL, then explicit flags.
    pub fn resolve(path: Option<&Path>, mut flags: Overrides) -> Result<RunConfig, PipelineError> {
        let mut cfg = match path {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if flags.backend_url.is_none() {
            flags.backend_url = std::env::var(BACKEND_URL_ENV).ok().filter(|u| !u.trim().is_empty());
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        self.mask.validate().map_err(|e| invalid(&e))?;
        self.sampling.validate().map_err(|e| invalid(&e))?;
        self.filter.validate().map_err(|e| invalid(&e))?;
        self.backend.validate().map_err(|e| invalid(&e))?;
        self.tokens.validate().map_err(|e| invalid(&e))?;
        if self.eval.self_bleu_max_n < 1 {
            return Err(PipelineError::Config("self_bleu_max_n must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seed for one sentence: the global seed mixed with a stable hash of its id,
/// so results do not depend on scheduling.
pub fn sentence_seed(global_seed: u64, sent_id: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(sent_id.as_bytes());
    global_seed ^ h.finish()
}
