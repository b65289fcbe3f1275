use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::text;

/// Resolves a place name to coordinates.
pub trait GeoCoder {
    fn locate(&self, name: &str) -> Option<(String, GeoPoint)>;
}

/// Static name → coordinate table, loaded from `name<TAB>lat<TAB>lon` lines.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    // folded name -> (canonical name, point)
    entries: BTreeMap<String, (String, GeoPoint)>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, point: GeoPoint) -> Result<()> {
        point.validate()?;
        let key = text::tokenize(name).join(" ");
        if key.is_empty() {
            return Err(Error::invalid(format!("gazetteer name {name:?} has no word characters")));
        }
        self.entries.insert(key, (name.trim().to_owned(), point));
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
        Self::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let mut g = Gazetteer::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |m: &str| Error::Format {
                what: "gazetteer",
                message: format!("line {}: {m}", i + 1),
            };
            if fields.len() != 3 {
                return Err(bad("expected name, lat, lon"));
            }
            let lat: f64 = fields[1].trim().parse().map_err(|_| bad("latitude is not a number"))?;
            let lon: f64 = fields[2].trim().parse().map_err(|_| bad("longitude is not a number"))?;
            g.insert(fields[0], GeoPoint { lat, lon }).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Token sequences of every name, used for longest-match scanning.
    pub(crate) fn token_keys(&self) -> impl Iterator<Item = (Vec<&str>, &String, &GeoPoint)> {
        self.entries
            .iter()
            .map(|(k, (name, p))| (k.split(' ').collect(), name, p))
    }

    pub(crate) fn by_key(&self, key: &str) -> Option<&(String, GeoPoint)> {
        self.entries.get(key)
    }
}

impl GeoCoder for Gazetteer {
    fn locate(&self, name: &str) -> Option<(String, GeoPoint)> {
        self.entries.get(&text::tokenize(name).join(" ")).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_locate() {
        let g = Gazetteer::parse("Wuhan\t30.59\t114.31\n# comment\nNew York City\t40.71\t-74.01\n").unwrap();
        assert_eq!(g.len(), 2);
        let (name, p) = g.locate("new  york city").unwrap();
        assert_eq!(name, "New York City");
        assert_eq!(p.lat, 40.71);
        assert!(g.locate("Paris").is_none());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Gazetteer::parse("Nowhere\t95\t0\n").is_err());
        assert!(Gazetteer::parse("Nowhere\tx\t0\n").is_err());
    }
}
