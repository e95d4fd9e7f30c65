//! Name-keyed registries of interchangeable strategies.
//!
//! Key agreement schemes, aggregators, experiments and acceptance suites are
//! all selected at runtime by name (from a config file or the CLI). Each
//! family registers boxed trait objects here.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Box<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, entries: BTreeMap::new() }
    }

    /// Registers `item` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &'static str, item: Box<T>) -> &mut Self {
        self.entries.insert(name, item);
        self
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::Unknown {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &T)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Hi;
    impl Greeter for Hi {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    #[test]
    fn lookup_and_unknown_name() {
        let mut reg: Registry<dyn Greeter> = Registry::new("greeter");
        reg.register("hi", Box::new(Hi));
        assert_eq!(reg.get("hi").unwrap().greet(), "hi");
        let err = reg.get("bye").err().unwrap();
        assert!(err.to_string().contains("available: hi"));
        assert_eq!(reg.names(), vec!["hi"]);
    }
}
