//! Evolutionary learning of ALCQ(D) class expressions from positive and
//! negative examples over a closed-world knowledge graph.

pub mod cli;
pub mod concept;
pub mod evolve;
pub mod harness;
pub mod init;
pub mod kb;
pub mod par;
pub mod retrieval;
pub mod rng;
pub mod splits;

pub use concept::ConceptTree;
pub use kb::KnowledgeBase;
pub use retrieval::{retrieve, LearningProblem};
