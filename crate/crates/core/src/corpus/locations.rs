use serde::{Deserialize, Serialize};

use super::fuse::PaperRecord;
use crate::geo::{Gazetteer, GeoPoint};
use crate::text::word_spans;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationMention {
    pub paper_id: String,
    pub surface: String,
    pub canonical_name: String,
    pub lat: f64,
    pub lon: f64,
}

/// A place found in free text.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaceMatch {
    pub surface: String,
    pub canonical_name: String,
    pub point: GeoPoint,
}

/// Gazetteer matches across `texts` in order: case-insensitive, whole words,
/// longest match first, non-overlapping. Each place is reported once, with the
/// surface form of its first occurrence.
pub fn match_places(texts: &[&str], gazetteer: &Gazetteer) -> Vec<PlaceMatch> {
    let max_len = gazetteer.token_keys().map(|(t, _, _)| t.len()).max().unwrap_or(0);
    let mut out: Vec<PlaceMatch> = Vec::new();
    for text in texts {
        let spans = word_spans(text);
        let tokens: Vec<String> = spans.iter().map(|r| text[r.clone()].to_lowercase()).collect();
        let mut i = 0;
        while i < tokens.len() {
            let mut matched = 0;
            for len in (1..=max_len.min(tokens.len() - i)).rev() {
                let key = tokens[i..i + len].join(" ");
                if let Some((name, point)) = gazetteer.by_key(&key) {
                    if !out.iter().any(|m| &m.canonical_name == name) {
                        out.push(PlaceMatch {
                            surface: text[spans[i].start..spans[i + len - 1].end].to_owned(),
                            canonical_name: name.clone(),
                            point: *point,
                        });
                    }
                    matched = len;
                    break;
                }
            }
            i += matched.max(1);
        }
    }
    out
}

/// Places mentioned in a paper's title and abstract.
pub fn tag_locations(paper: &PaperRecord, gazetteer: &Gazetteer) -> Vec<LocationMention> {
    match_places(&[paper.title.as_str(), paper.r#abstract.as_str()], gazetteer)
        .into_iter()
        .map(|m| LocationMention {
            paper_id: paper.paper_id.clone(),
            surface: m.surface,
            canonical_name: m.canonical_name,
            lat: m.point.lat,
            lon: m.point.lon,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PaperType;

    fn paper(title: &str, abs: &str) -> PaperRecord {
        PaperRecord {
            paper_id: "p".into(),
            doi: None,
            title: title.into(),
            r#abstract: abs.into(),
            year: 2020,
            paper_type: PaperType::Article,
            author_ids: vec![],
            org_ids: vec![],
            venue_id: None,
            provenance: Default::default(),
            cites: vec![],
            affiliations: vec![],
        }
    }

    fn gaz() -> Gazetteer {
        Gazetteer::parse("Wuhan\t30.59\t114.31\nMilan\t45.46\t9.19\nNew York City\t40.71\t-74.01\nYork\t53.96\t-1.08\n")
            .unwrap()
    }

    #[test]
    fn two_cities() {
        let m = tag_locations(&paper("Lockdown", "Effects of the lockdown in Wuhan and Milan on mobility."), &gaz());
        let names: Vec<_> = m.iter().map(|m| m.canonical_name.as_str()).collect();
        assert_eq!(names, ["Wuhan", "Milan"]);
    }

    #[test]
    fn no_names() {
        assert!(tag_locations(&paper("Vaccines", "A trial of mRNA vaccines."), &gaz()).is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let m = tag_locations(&paper("", "Hospitalizations in new york city rose."), &gaz());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].canonical_name, "New York City");
        assert_eq!(m[0].surface, "new york city");
    }

    #[test]
    fn surfaces_occur_in_text() {
        let p = paper("York and WUHAN", "Yorkshire is not York; Wuhan again.");
        for m in tag_locations(&p, &gaz()) {
            let hay = format!("{} {}", p.title, p.r#abstract).to_lowercase();
            assert!(hay.contains(&m.surface.to_lowercase()));
        }
    }
}
