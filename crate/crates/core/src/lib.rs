//! Conversational task-assistant engine.

// `!(x >= 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod corpus;
pub mod dialogue;
pub mod embedding;
pub mod engine;
pub mod intent;
pub mod lexical;
pub mod ranking;
pub mod response;
pub mod scalar;
pub mod simulation;
pub mod text;
pub mod video;

pub type DefaultEngine = engine::Engine<f64>;
pub type DefaultCatalogIndex = catalog::CatalogIndex<f64>;
pub type DefaultVideoIndex = video::VideoIndex<f64>;
pub type DefaultRatingModel = simulation::RatingModel<f64>;
pub type Embedding = embedding::EmbeddingVector<f64>;
