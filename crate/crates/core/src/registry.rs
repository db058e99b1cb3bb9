use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Name-keyed constructors for one family of interchangeable strategies.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, fn() -> Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &'static str, build: fn() -> Box<T>) -> Self {
        self.register(name, build);
        self
    }

    /// Adds or replaces the constructor registered under `name`.
    pub fn register(&mut self, name: &'static str, build: fn() -> Box<T>) {
        self.entries.insert(name, build);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn build(&self, name: &str) -> Result<Box<T>> {
        self.entries
            .get(name)
            .map(|build| build())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().map(String::from).collect(),
            })
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}
