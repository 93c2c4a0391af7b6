//! Identification of meta-comments in news-site user comments and
//! classification of their addressee (media house, journalist, moderator).

pub mod classifiers;
pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod features;
pub mod neural;
pub mod sampling;
pub mod seed;
pub mod synthetic;
pub mod textprep;
