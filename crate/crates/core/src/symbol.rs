//! Names for characters, state values, decisions and roles.

use std::borrow::Borrow;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::ModelError;

/// The reserved spelling of the empty character.
pub const EPS: &str = "eps";

/// A nonempty identifier naming a character, a state value, a decision or a role.
///
/// Symbols follow ASCII identifier syntax (`[A-Za-z_][A-Za-z0-9_]*`) and may
/// not be spelled `eps`, which always denotes the empty character.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Result<Self, ModelError> {
        if is_identifier(name) && name != EPS {
            Ok(Symbol(Arc::from(name)))
        } else {
            Err(ModelError::InvalidSymbol(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<&str> for Symbol {
    type Error = ModelError;

    fn try_from(value: &str) -> Result<Self, Self::Error> {
        Symbol::new(value)
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// An input or output character of a single automaton: either empty or named.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Character {
    Eps,
    Named(Symbol),
}

impl Character {
    /// Parses `eps` as the empty character and anything else as a symbol.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        if text == EPS {
            Ok(Character::Eps)
        } else {
            Symbol::new(text).map(Character::Named)
        }
    }

    pub fn is_eps(&self) -> bool {
        matches!(self, Character::Eps)
    }

    pub fn symbol(&self) -> Option<&Symbol> {
        match self {
            Character::Eps => None,
            Character::Named(s) => Some(s),
        }
    }
}

impl From<Symbol> for Character {
    fn from(s: Symbol) -> Self {
        Character::Named(s)
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Character::Eps => f.write_str(EPS),
            Character::Named(s) => write!(f, "{s}"),
        }
    }
}

/// A character qualified by the role that owns it, e.g. `Z.arrived`.
///
/// Product-level characters of a protocol have at most one non-empty
/// component, so they are represented as `Option<Qualified>` with `None`
/// standing for the empty character.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Qualified {
    pub role: Symbol,
    pub name: Symbol,
}

impl Qualified {
    pub fn new(role: Symbol, name: Symbol) -> Self {
        Qualified { role, name }
    }

    /// Parses `Role.name`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let (role, name) = text
            .split_once('.')
            .ok_or_else(|| ModelError::InvalidSymbol(text.to_string()))?;
        Ok(Qualified::new(Symbol::new(role)?, Symbol::new(name)?))
    }
}

impl fmt::Display for Qualified {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.role, self.name)
    }
}

/// Formats a product-level character, printing `eps` for `None`.
pub struct ProductChar<'a>(pub &'a Option<Qualified>);

impl fmt::Display for ProductChar<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str(EPS),
            Some(q) => write!(f, "{q}"),
        }
    }
}

/// Parses `eps` or `Role.name`.
pub fn parse_product_char(text: &str) -> Result<Option<Qualified>, ModelError> {
    if text == EPS {
        Ok(None)
    } else {
        Qualified::parse(text).map(Some)
    }
}

pub(crate) fn sym(name: &str) -> Symbol {
    Symbol::new(name).unwrap_or_else(|_| panic!("invalid symbol literal {name:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_is_not_a_symbol() {
        assert!(Symbol::new("eps").is_err());
        assert_eq!(Character::parse("eps").unwrap(), Character::Eps);
        assert_ne!(Character::Eps, Character::Named(sym("a")));
    }

    #[test]
    fn identifier_rules() {
        assert!(Symbol::new("IArrive").is_ok());
        assert!(Symbol::new("_x9").is_ok());
        for bad in ["", "9a", "a-b", "a.b", "ä", " a"] {
            assert!(Symbol::new(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn qualified_round_trip() {
        let q = Qualified::parse("Z.arrived").unwrap();
        assert_eq!(q.to_string(), "Z.arrived");
        assert_eq!(parse_product_char("eps").unwrap(), None);
        assert!(Qualified::parse("arrived").is_err());
    }
}
