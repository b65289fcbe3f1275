//! The closed set of 22 discipline labels used for multi-label classification.

pub const NUM_DISCIPLINES: usize = 22;

pub const DISCIPLINES: [&str; NUM_DISCIPLINES] = [
    "Mathematical Sciences",
    "Physical Sciences",
    "Chemical Sciences",
    "Earth Sciences",
    "Environmental Sciences",
    "Biological Sciences",
    "Agricultural and Veterinary Sciences",
    "Information and Computing Sciences",
    "Engineering",
    "Technology",
    "Medical and Health Sciences",
    "Built Environment and Design",
    "Education",
    "Economics",
    "Commerce, Management, Tourism and Services",
    "Studies in Human Society",
    "Psychology and Cognitive Sciences",
    "Law and Legal Studies",
    "Studies in Creative Arts and Writing",
    "Language, Communication and Culture",
    "History and Archaeology",
    "Philosophy and Religious Studies",
];

/// Resolve a label by index, exact name, or case-insensitive name.
pub fn lookup(name_or_index: &str) -> Option<usize> {
    if let Ok(i) = name_or_index.trim().parse::<usize>() {
        return (i < NUM_DISCIPLINES).then_some(i);
    }
    let wanted = name_or_index.trim().to_lowercase();
    DISCIPLINES.iter().position(|d| d.to_lowercase() == wanted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn labels_are_distinct() {
        let set: HashSet<_> = DISCIPLINES.iter().collect();
        assert_eq!(set.len(), NUM_DISCIPLINES);
    }

    #[test]
    fn lookup_by_index_and_name() {
        assert_eq!(lookup("10"), Some(10));
        assert_eq!(lookup("engineering"), Some(8));
        assert_eq!(lookup("22"), None);
        assert_eq!(lookup("Alchemy"), None);
    }
}
