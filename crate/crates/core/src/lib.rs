pub mod chains;
pub mod error;
pub mod extension;
pub mod graded_lie;
pub mod groups;
pub mod hodge;
pub mod linalg;
pub mod par;
pub mod reconstruct;
pub mod verify;

pub use error::{Error, Result};
