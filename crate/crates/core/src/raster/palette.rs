use std::path::Path;

use crate::error::{Error, Result};

/// One palette entry: a class name and its mask index.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ClassDef {
    pub name: String,
    pub index: u8,
}

/// Class palette backing every mask file. Indices must be dense from 0 and
/// names unique, so a palette of K classes defines masks with values 0..K.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Palette {
    pub classes: Vec<ClassDef>,
}

impl Palette {
    pub fn new(names: &[&str]) -> Self {
        Palette {
            classes: names
                .iter()
                .enumerate()
                .map(|(i, &name)| ClassDef {
                    name: name.to_string(),
                    index: i as u8,
                })
                .collect(),
        }
    }

    /// The nine-class facade palette used by the synthetic fixtures.
    pub fn facade() -> Self {
        Palette::new(&[
            "building", "window", "door", "roof", "tree", "sky", "people", "car", "sign",
        ])
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let palette: Palette = serde_json::from_str(&text)
            .map_err(|e| Error::malformed("palette", e.to_string()))?;
        palette.validate()?;
        Ok(palette)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("palette serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::malformed("palette", "no classes"));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.index as usize != i {
                return Err(Error::malformed(
                    "palette",
                    format!("class '{}' has index {}, expected dense index {}", c.name, c.index, i),
                ));
            }
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::malformed(
                    "palette",
                    format!("duplicate class name '{}'", c.name),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<u8> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.index)
    }

    pub fn name_of(&self, index: u8) -> Option<&str> {
        self.classes.get(index as usize).map(|c| c.name.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facade_palette_layout() {
        let p = Palette::facade();
        assert_eq!(p.len(), 9);
        assert_eq!(p.index_of("building"), Some(0));
        assert_eq!(p.index_of("window"), Some(1));
        assert_eq!(p.index_of("sky"), Some(5));
        assert_eq!(p.name_of(8), Some("sign"));
        p.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("palette.json");
        let p = Palette::facade();
        p.save(&path).unwrap();
        assert_eq!(Palette::load(&path).unwrap(), p);
    }

    #[test]
    fn sparse_indices_rejected() {
        let text = r#"{"classes":[{"name":"a","index":0},{"name":"b","index":2}]}"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Palette::load(&path), Err(Error::Malformed { .. })));
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"{"classes":[{"name":"a","index":0},{"name":"a","index":1}]}"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.json");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Palette::load(&path), Err(Error::Malformed { .. })));
    }
}
