//! Negation augmentation: dependency-guided masking, fill-in-the-blank
//! generation, filtering of candidate negations, and quality metrics.

pub mod backend;
pub mod eval;
pub mod filter;
pub mod mask;
pub mod pipeline;
pub mod prompt;
pub mod syntax;

pub use backend::{Backend, BackendDescriptor, BackendError, SamplingParams, ScoredSequence};
pub use filter::{filter_candidates, CueLexicon, FilterConfig, FilteredSet};
pub use eval::{EvalReport, LabeledTree};
pub use mask::{propose_masks, Granularity, MaskConfig, MaskProposal, RuleId};
pub use pipeline::{CorpusRecord, PipelineError, RunConfig};
pub use prompt::{build_prompt, parse_completion, PromptString, SpecialTokens};
pub use syntax::{parse_conllu, DepSentence, SpanRange, Token};
