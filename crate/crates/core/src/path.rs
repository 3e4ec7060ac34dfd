//! Location paths into a model or interchange document, e.g.
//! `relationships[3].endpoints[1]`.

use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Key(String),
    Index(usize),
}

/// A path made of object keys and list indices. Ordering is segment-wise,
/// so `entities[2]` sorts before `entities[10]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelPath(Vec<Segment>);

impl ModelPath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn key(mut self, key: impl Into<String>) -> Self {
        self.0.push(Segment::Key(key.into()));
        self
    }

    pub fn index(mut self, idx: usize) -> Self {
        self.0.push(Segment::Index(idx));
        self
    }

    pub fn entity(idx: usize) -> Self {
        Self::root().key("entities").index(idx)
    }

    pub fn attribute(entity: usize, attr: usize) -> Self {
        Self::entity(entity).key("attributes").index(attr)
    }

    pub fn relationship(idx: usize) -> Self {
        Self::root().key("relationships").index(idx)
    }

    pub fn endpoint(rel: usize, ep: usize) -> Self {
        Self::relationship(rel).key("endpoints").index(ep)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ModelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("$");
        }
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Segment::Key(k) if i == 0 => f.write_str(k)?,
                Segment::Key(k) => write!(f, ".{k}")?,
                Segment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

impl Serialize for ModelPath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nested_paths() {
        assert_eq!(ModelPath::endpoint(3, 1).to_string(), "relationships[3].endpoints[1]");
        assert_eq!(ModelPath::attribute(0, 2).to_string(), "entities[0].attributes[2]");
        assert_eq!(ModelPath::root().to_string(), "$");
    }

    #[test]
    fn index_order_is_numeric() {
        assert!(ModelPath::entity(2) < ModelPath::entity(10));
    }
}
