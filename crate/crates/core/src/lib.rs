pub mod cli;
pub mod crossings;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod graphical;
pub mod renewal;
pub mod renorm;
pub mod seeding;
pub mod stats;
pub mod verify;

pub use distributions::{DfrVerdict, InterarrivalLaw, LawKind};
pub use error::{Error, Result};
pub use renewal::{RenewalTrain, TauSpec};
pub use stats::Estimate;
pub use engine::{Configuration, SimOutcome, Snapshot};
pub use graphical::{Edge, GraphicalSample, LazySample, Percolation, TauPolicy};
