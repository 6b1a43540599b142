//! Response rendering and knowledge providers.

mod creative;
mod curiosity;
mod generator;
mod kit;
mod knowledge;
mod promoter;
mod templates;
mod tone;

use thiserror::Error;

use crate::dialogue::ResponseCase;

pub use creative::{compose_recipe, extract_tags, validate_generated_recipe, Composition, ExtractedTags};
pub use curiosity::{get_curiosity, CuratedCuriosity, CuriosityStore, Passage, PassageStore};
pub use generator::{
    Fixture, FixtureGenerator, FnGenerator, Generator, GeneratorError, GeneratorKind, GeneratorRequest,
    GeneratorResponse, HttpGenerator, Recording, StubGenerator, GENERATOR_TIMEOUT,
};
pub use kit::ResponseKit;
pub use knowledge::{
    define_term, extract_definition_term, step_detail, substitute_ingredient, worst_definition, Dictionary,
    SubstitutionKb,
};
pub use promoter::{
    promote_task, validate_description, DescriptionVerdict, FoodLexicon, BROKEN_WORDS, PROMOTER_MAX_WORDS,
};
pub use templates::{fill, TemplateBank};
pub use tone::ToneOfVoice;

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("no templates for {} in a {} tone", .case.name(), .tone.phrase())]
    UnknownCase { case: ResponseCase, tone: ToneOfVoice },
    #[error("template for {} needs {{{name}}}", .case.name())]
    MissingPlaceholder { case: ResponseCase, name: String },
    #[error("invalid knowledge file: {0}")]
    InvalidKnowledge(String),
    #[error("at least one tag is required")]
    NoTags,
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
