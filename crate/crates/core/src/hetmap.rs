//! String-keyed map of variant values with kind-checked reads.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("key {key:?} holds {found}, not {expected}")]
    KindMismatch {
        key: String,
        expected: ValueKind,
        found: ValueKind,
    },
}

impl MapError {
    /// Stable numeric code: 1 for a missing key, 2 for a kind mismatch.
    pub fn code(&self) -> u8 {
        match self {
            MapError::MissingKey(_) => 1,
            MapError::KindMismatch { .. } => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Int,
    Real,
    Complex,
    Bool,
    Str,
    RealList,
    StrList,
    List,
    Map,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Int => "integer",
            ValueKind::Real => "real",
            ValueKind::Complex => "complex",
            ValueKind::Bool => "boolean",
            ValueKind::Str => "string",
            ValueKind::RealList => "list of reals",
            ValueKind::StrList => "list of strings",
            ValueKind::List => "list",
            ValueKind::Map => "map",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Complex(Complex64),
    Bool(bool),
    Str(String),
    RealList(Vec<f64>),
    StrList(Vec<String>),
    /// Heterogeneous or nested list, e.g. a stack of 2x2 matrices.
    List(Vec<Value>),
    Map(HeterogeneousMap),
}

impl Value {
    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Int(_) => ValueKind::Int,
            Value::Real(_) => ValueKind::Real,
            Value::Complex(_) => ValueKind::Complex,
            Value::Bool(_) => ValueKind::Bool,
            Value::Str(_) => ValueKind::Str,
            Value::RealList(_) => ValueKind::RealList,
            Value::StrList(_) => ValueKind::StrList,
            Value::List(_) => ValueKind::List,
            Value::Map(_) => ValueKind::Map,
        }
    }
}

macro_rules! value_from {
    ($($t:ty => $v:ident),* $(,)?) => {
        $(impl From<$t> for Value {
            fn from(x: $t) -> Self {
                Value::$v(x.into())
            }
        })*
    };
}

value_from! {
    i64 => Int,
    i32 => Int,
    u32 => Int,
    f64 => Real,
    Complex64 => Complex,
    bool => Bool,
    String => Str,
    &str => Str,
    Vec<f64> => RealList,
    Vec<String> => StrList,
    Vec<Value> => List,
    HeterogeneousMap => Map,
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x as i64)
    }
}

/// Types that can be read back out of a [`Value`] without coercion.
pub trait FromValue<'a>: Sized {
    const KIND: ValueKind;
    fn from_value(v: &'a Value) -> Option<Self>;
}

macro_rules! from_value {
    ($($t:ty => $v:ident, $kind:ident, |$x:ident| $e:expr);* $(;)?) => {
        $(impl<'a> FromValue<'a> for $t {
            const KIND: ValueKind = ValueKind::$kind;
            fn from_value(v: &'a Value) -> Option<Self> {
                match v {
                    Value::$v($x) => Some($e),
                    _ => None,
                }
            }
        })*
    };
}

from_value! {
    i64 => Int, Int, |x| *x;
    f64 => Real, Real, |x| *x;
    Complex64 => Complex, Complex, |x| *x;
    bool => Bool, Bool, |x| *x;
    &'a str => Str, Str, |x| x.as_str();
    &'a [f64] => RealList, RealList, |x| x.as_slice();
    &'a [String] => StrList, StrList, |x| x.as_slice();
    &'a [Value] => List, List, |x| x.as_slice();
    &'a HeterogeneousMap => Map, Map, |x| x;
}

/// Ordered string-keyed map of [`Value`]s.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeterogeneousMap {
    entries: BTreeMap<String, Value>,
}

impl HeterogeneousMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces `key`, returning the previous value.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<Value>) -> Option<Value> {
        self.entries.insert(key.into(), value.into())
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.insert(key, value);
        self
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        self.entries.remove(key)
    }

    pub fn raw(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    /// Returns the value under `key` only if it has kind `expected`.
    pub fn get_kind(&self, key: &str, expected: ValueKind) -> Result<&Value, MapError> {
        let v = self
            .entries
            .get(key)
            .ok_or_else(|| MapError::MissingKey(key.into()))?;
        if v.kind() == expected {
            Ok(v)
        } else {
            Err(MapError::KindMismatch {
                key: key.into(),
                expected,
                found: v.kind(),
            })
        }
    }

    /// Typed read: `map.get::<i64>("shots")`.
    pub fn get<'a, T: FromValue<'a>>(&'a self, key: &str) -> Result<T, MapError> {
        let v = self.get_kind(key, T::KIND)?;
        Ok(T::from_value(v).expect("kind already checked"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<K: Into<String>, V: Into<Value>> FromIterator<(K, V)> for HeterogeneousMap {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            entries: iter
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_reads() {
        let mut m = HeterogeneousMap::new();
        m.insert("shots", 1024i64);
        assert_eq!(m.get::<i64>("shots"), Ok(1024));
        assert_eq!(
            m.get::<f64>("missing"),
            Err(MapError::MissingKey("missing".into()))
        );
        let err = m.get::<&str>("shots").unwrap_err();
        assert_eq!(
            err,
            MapError::KindMismatch {
                key: "shots".into(),
                expected: ValueKind::Str,
                found: ValueKind::Int
            }
        );
        assert_ne!(err.code(), MapError::MissingKey("x".into()).code());
    }

    #[test]
    fn no_coercion_between_numeric_kinds() {
        let m = HeterogeneousMap::new().with("x", 1.0).with("n", 3i64);
        assert!(m.get::<i64>("x").is_err());
        assert!(m.get::<f64>("n").is_err());
        assert_eq!(m.get_kind("x", ValueKind::Real), Ok(&Value::Real(1.0)));
    }

    #[test]
    fn nested_and_list_values() {
        let inner = HeterogeneousMap::new().with("a", true);
        let m = HeterogeneousMap::new()
            .with("inner", inner.clone())
            .with("p", alloc::vec![0.5, 1.5])
            .with("z", Complex64::new(1.0, -1.0))
            .with("names", alloc::vec![String::from("a")]);
        assert_eq!(m.get::<&HeterogeneousMap>("inner"), Ok(&inner));
        assert_eq!(m.get::<&[f64]>("p"), Ok(&[0.5, 1.5][..]));
        assert_eq!(m.get::<Complex64>("z"), Ok(Complex64::new(1.0, -1.0)));
        assert_eq!(m.get::<&[String]>("names").unwrap().len(), 1);
        assert_eq!(
            m.keys().collect::<alloc::vec::Vec<_>>(),
            ["inner", "names", "p", "z"]
        );
    }

    #[test]
    fn insert_replaces() {
        let mut m = HeterogeneousMap::new();
        assert_eq!(m.insert("k", 1i64), None);
        assert_eq!(m.insert("k", "v"), Some(Value::Int(1)));
        assert_eq!(m.get::<&str>("k"), Ok("v"));
        assert_eq!(m.len(), 1);
    }
}
