//! Forts, their morphisms, and certified cylindrical parametrization in
//! dimensions one and two.

pub mod cad;
pub mod engine;
pub mod certify;
pub mod fort;
pub mod generate;
pub mod ledger;
pub mod morphism;
pub mod norm;
pub mod plane;
pub mod verify;

pub use fort::{validate_fort, Entry, Fort, FortError, FortPoint, IntegerCell, WidthForm};
