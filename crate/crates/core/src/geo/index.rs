use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::geohash::{self, BoundingBox, GeoPoint, Geohash};

pub const DEFAULT_INDEX_PRECISION: usize = 7;

/// Upper bound on covering cells examined per query box.
const MAX_QUERY_CELLS: usize = 512;

/// One indexed (paper, location) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedPoint {
    pub paper_id: String,
    pub location: String,
    pub point: GeoPoint,
    pub geohash: Geohash,
}

/// Sorted map from geohash cell to the points inside it. Prefix scans over the
/// sorted keys give the containing-cell lookups.
#[derive(Debug, Clone, Default)]
pub struct GeoIndex {
    precision: usize,
    cells: BTreeMap<String, Vec<usize>>,
    points: Vec<IndexedPoint>,
    // paper_id -> lowercased title + abstract, for keyword filtering
    texts: HashMap<String, String>,
}

impl GeoIndex {
    pub fn new(precision: usize) -> Result<Self> {
        if precision == 0 || precision > geohash::MAX_PRECISION {
            return Err(Error::invalid(format!("index precision {precision} not in 1..=12")));
        }
        Ok(GeoIndex {
            precision,
            ..Default::default()
        })
    }

    /// Register a paper's searchable text. Points may only be added for
    /// registered papers.
    pub fn add_paper(&mut self, paper_id: &str, title: &str, abstract_text: &str) {
        self.texts
            .insert(paper_id.to_owned(), format!("{}\n{}", title.to_lowercase(), abstract_text.to_lowercase()));
    }

    pub fn add_point(&mut self, paper_id: &str, location: &str, point: GeoPoint) -> Result<()> {
        if !self.texts.contains_key(paper_id) {
            return Err(Error::NotFound(format!("paper {paper_id} is not registered in the geo index")));
        }
        let gh = geohash::encode(point, self.precision)?;
        let idx = self.points.len();
        self.cells.entry(gh.as_str().to_owned()).or_default().push(idx);
        self.points.push(IndexedPoint {
            paper_id: paper_id.to_owned(),
            location: location.to_owned(),
            point,
            geohash: gh,
        });
        Ok(())
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn points(&self) -> &[IndexedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn geohashes_of(&self, paper_id: &str) -> Vec<&Geohash> {
        let mut out: Vec<&Geohash> = self
            .points
            .iter()
            .filter(|p| p.paper_id == paper_id)
            .map(|p| &p.geohash)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn matches_keyword(&self, paper_id: &str, keyword: &str) -> bool {
        let kw = keyword.to_lowercase();
        self.texts.get(paper_id).is_some_and(|t| t.contains(&kw))
    }

    fn scan_prefix(&self, prefix: &str, mut f: impl FnMut(&IndexedPoint)) {
        for (key, ids) in self.cells.range(prefix.to_owned()..) {
            if !key.starts_with(prefix) {
                break;
            }
            for &i in ids {
                f(&self.points[i]);
            }
        }
    }

    /// Paper ids with at least one point in any of `boxes` (closed) and, when
    /// given, the keyword in title or abstract. Sorted, deduplicated.
    pub fn bbox_search(&self, boxes: &[BoundingBox], keyword: Option<&str>) -> Vec<String> {
        let mut hits = BTreeSet::new();
        for bbox in boxes {
            let precision = self.query_precision(bbox);
            for cell in geohash::covering_cells(bbox, precision) {
                self.scan_prefix(cell.as_str(), |p| {
                    if bbox.contains(&p.point) {
                        hits.insert(p.paper_id.clone());
                    }
                });
            }
        }
        match keyword {
            Some(kw) if !kw.is_empty() => hits.into_iter().filter(|id| self.matches_keyword(id, kw)).collect(),
            _ => hits.into_iter().collect(),
        }
    }

    fn query_precision(&self, bbox: &BoundingBox) -> usize {
        let mut p = self.precision;
        while p > 1 {
            let (dlat, dlon) = geohash::cell_size(p);
            let rows = ((bbox.lat_max - bbox.lat_min) / dlat).ceil() + 2.0;
            let cols = ((bbox.lon_max - bbox.lon_min) / dlon).ceil() + 2.0;
            if rows * cols <= MAX_QUERY_CELLS as f64 {
                break;
            }
            p -= 1;
        }
        p
    }

    /// Count of (paper, location) pairs per geohash cell at `precision`.
    pub fn density_grid(&self, precision: usize) -> Result<BTreeMap<String, usize>> {
        if !(1..=6).contains(&precision) {
            return Err(Error::invalid(format!("density precision {precision} not in 1..=6")));
        }
        let mut grid = BTreeMap::new();
        for p in &self.points {
            *grid.entry(p.geohash.as_str()[..precision].to_owned()).or_insert(0) += 1;
        }
        Ok(grid)
    }
}

/// Render a density grid as `geohash<TAB>count` lines.
pub fn density_to_tsv(grid: &BTreeMap<String, usize>) -> String {
    grid.iter().map(|(h, c)| format!("{h}\t{c}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> GeoIndex {
        let mut idx = GeoIndex::new(DEFAULT_INDEX_PRECISION).unwrap();
        let pts = [
            ("p1", "Wuhan", 30.59, 114.31, "Lockdown in Wuhan"),
            ("p2", "Milan", 45.46, 9.19, "Hospital capacity"),
            ("p3", "Fiji", -17.7, 178.0, "Island lockdown"),
            ("p4", "Samoa", -13.8, -172.1, "Vaccination"),
        ];
        for (id, loc, lat, lon, title) in pts {
            idx.add_paper(id, title, "");
            idx.add_point(id, loc, GeoPoint { lat, lon }).unwrap();
        }
        idx.add_paper("p5", "No location", "");
        idx
    }

    #[test]
    fn world_box_returns_all_tagged() {
        let idx = fixture();
        assert_eq!(idx.bbox_search(&[BoundingBox::WORLD], None), ["p1", "p2", "p3", "p4"]);
    }

    #[test]
    fn keyword_narrows() {
        let idx = fixture();
        assert_eq!(idx.bbox_search(&[BoundingBox::WORLD], Some("LOCKDOWN")), ["p1", "p3"]);
    }

    #[test]
    fn antimeridian_box() {
        let idx = fixture();
        let boxes = BoundingBox::split_antimeridian(-20.0, -10.0, 170.0, -170.0).unwrap();
        assert_eq!(idx.bbox_search(&boxes, None), ["p3", "p4"]);
    }

    #[test]
    fn degenerate_box_is_boundary_inclusive() {
        let idx = fixture();
        let b = BoundingBox {
            lat_min: 45.46,
            lat_max: 45.46,
            lon_min: 9.19,
            lon_max: 9.19,
        };
        assert_eq!(idx.bbox_search(&[b], None), ["p2"]);
    }

    #[test]
    fn unknown_paper_rejected() {
        let mut idx = GeoIndex::new(5).unwrap();
        assert!(idx.add_point("ghost", "x", GeoPoint { lat: 0.0, lon: 0.0 }).is_err());
    }

    #[test]
    fn density_counts() {
        let idx = fixture();
        assert!(GeoIndex::new(7).unwrap().density_grid(3).unwrap().is_empty());
        let grid = idx.density_grid(1).unwrap();
        // Wuhan -> w, Milan -> u, Fiji -> r, Samoa -> 2
        let expected: BTreeMap<String, usize> =
            [("2", 1), ("r", 1), ("u", 1), ("w", 1)].into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
        assert_eq!(grid, expected);
        assert!(idx.density_grid(7).is_err());
        assert_eq!(density_to_tsv(&grid), "2\t1\nr\t1\nu\t1\nw\t1\n");
    }
}
