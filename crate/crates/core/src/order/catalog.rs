use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::OrderError;

/// Ordered list of unique action names with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionCatalog {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ActionCatalog {
    pub fn new<I, S>(names: I) -> Result<Self, OrderError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut catalog = ActionCatalog::default();
        for name in names {
            let name = name.into();
            if catalog.index.contains_key(&name) {
                return Err(OrderError::DuplicateAction(name));
            }
            catalog.push(name);
        }
        Ok(catalog)
    }

    /// Catalog `["1", "2", ..., "m"]`, handy for numbered examples.
    pub fn numbered(m: usize) -> Self {
        Self::new((1..=m).map(|i| i.to_string())).expect("numbers are unique")
    }

    fn push(&mut self, name: String) -> usize {
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        i
    }

    /// Returns the index of `name`, appending it when absent.
    pub fn intern(&mut self, name: &str) -> usize {
        match self.index.get(name) {
            Some(&i) => i,
            None => self.push(name.to_string()),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<usize, OrderError> {
        self.index_of(name)
            .ok_or_else(|| OrderError::UnknownAction(name.to_string()))
    }

    /// Maps a sequence of names to indices, failing on the first unknown one.
    pub fn encode<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, OrderError> {
        names.iter().map(|n| self.resolve(n.as_ref())).collect()
    }
}

impl Serialize for ActionCatalog {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.names.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ActionCatalog {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        ActionCatalog::new(names).map_err(serde::de::Error::custom)
    }
}
