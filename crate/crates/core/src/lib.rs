pub mod case;
pub mod dispatch;
pub mod error;
pub mod gsdf;
pub mod lsd;
pub mod relay;
pub mod scenario;
pub mod report;
pub mod search;
pub mod study;

pub use case::{Bus, CaseData, GenKind, Generator, Line};
pub use error::{Error, IslandPartition, Result};
pub use gsdf::{build_gsdf, woodbury_update, GsdfMatrix, SusceptanceSystem};
