//! Protocols of communicating I/O automata: consistency checking, decision
//! games derived from them and the meaning of decisions and characters.

pub mod automaton;
pub mod consistency;
pub mod dot;
pub mod dsl;
pub mod error;
pub mod explore;
pub mod export;
pub mod fixtures;
pub mod gdf;
pub mod gif;
pub mod product;
pub mod protocol;
pub mod run;
pub mod symbol;
#[cfg(feature = "testing")]
pub mod testing;
