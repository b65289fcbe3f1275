//! Read-only query layer over an immutable pipeline snapshot: keyword and
//! bounding-box search, density grids, path traversal, paper detail and
//! network statistics. The HTTP server in the CLI is a thin wrapper over
//! these calls.

pub mod api;
pub mod layout;
pub mod snapshot;

pub use api::{
    parse_bbox, parse_density_precision, to_json_bytes, ApiError, ApiErrorKind, ApiResult, DensityCell, DensityParams,
    DensityResponse, HealthResponse, LocationRef, NamedRef, NetworkStatsResponse, PaperDetail, PaperSummary,
    SearchParams, SearchQuery, SearchResponse, TraverseResponse, VenueRef, API_VERSION, DEFAULT_DENSITY_PRECISION,
    DEFAULT_LIMIT, MAX_LIMIT,
};
pub use layout::DataDir;
pub use snapshot::Snapshot;

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::geo::{BoundingBox, GeoPoint};
    use crate::kgstore::{
        discipline_node_id, ConceptKind, Direction, Edge, KgStore, Node, PathQuery, RelationKind, Selector, Step,
    };
    use crate::netsci::{build_network, NetworkKind};

    const PLACES: [(&str, f64, f64); 5] = [
        ("Wuhan", 30.59, 114.31),
        ("New York", 40.71, -74.0),
        ("London", 51.5, -0.12),
        ("Auckland", -36.85, 174.76),
        ("Fairbanks", 64.84, -147.72),
    ];

    // (id, year, title, abstract, disciplines, places)
    const PAPERS: [(&str, i64, &str, &str, &[usize], &[&str]); 7] = [
        ("p1", 2020, "Lockdown in Wuhan", "Early response.", &[10], &["Wuhan"]),
        ("p2", 2021, "Mobility", "Lockdown effects on commuting.", &[13], &["New York"]),
        ("p3", 2020, "Vaccine hesitancy", "Survey of adults.", &[10, 16], &["London"]),
        ("p4", 2019, "Island LOCKDOWN", "", &[15], &["Auckland"]),
        ("p5", 2021, "Arctic study", "A remote lockdown.", &[], &["Fairbanks"]),
        ("p6", 2022, "Lockdowns without places", "", &[10], &[]),
        ("p7", 2020, "Two cities", "Comparison of lockdown policy.", &[10], &["Wuhan", "London"]),
    ];

    fn fixture_kg() -> KgStore {
        let mut kg = KgStore::new();
        for (i, name) in crate::disciplines::DISCIPLINES.iter().enumerate() {
            kg.upsert_node(Node::new(discipline_node_id(i), ConceptKind::Discipline).with("name", *name).with("index", i))
                .unwrap();
        }
        for (name, lat, lon) in PLACES {
            kg.upsert_node(
                Node::new(format!("location:{name}"), ConceptKind::Location)
                    .with("name", name)
                    .with("lat", lat)
                    .with("lon", lon),
            )
            .unwrap();
        }
        for a in ["a1", "a2", "a3"] {
            kg.upsert_node(Node::new(a, ConceptKind::Author).with("name", a.to_uppercase())).unwrap();
        }
        kg.upsert_node(Node::new("k1", ConceptKind::Knowledge).with("name", "quarantine")).unwrap();
        for (id, year, title, abs, discs, places) in PAPERS {
            kg.upsert_node(
                Node::new(id, ConceptKind::Paper)
                    .with("title", title)
                    .with("abstract", abs)
                    .with("year", year),
            )
            .unwrap();
            for &d in discs {
                kg.upsert_edge(Edge::new(id, RelationKind::BelongsTo, discipline_node_id(d))).unwrap();
            }
            for p in places {
                kg.upsert_edge(Edge::new(id, RelationKind::MentionLocation, format!("location:{p}"))).unwrap();
            }
        }
        for (p, a) in [("p1", "a1"), ("p1", "a2"), ("p2", "a2"), ("p2", "a3")] {
            kg.upsert_edge(Edge::new(p, RelationKind::IsWrittenBy, a)).unwrap();
        }
        kg.upsert_edge(Edge::new("p1", RelationKind::IsCitedBy, "p2")).unwrap();
        kg.upsert_edge(Edge::new("p1", RelationKind::MentionKnowledge, "k1")).unwrap();
        kg
    }

    fn snapshot() -> Snapshot {
        Snapshot::from_kg(fixture_kg(), None).unwrap()
    }

    fn query(keyword: &str, bbox: Option<[f64; 4]>, offset: usize, limit: usize) -> SearchQuery {
        SearchQuery {
            keyword: keyword.into(),
            discipline: None,
            bbox,
            offset,
            limit,
        }
    }

    fn ids(r: &SearchResponse) -> Vec<&str> {
        r.items.iter().map(|i| i.id.as_str()).collect()
    }

    #[test]
    fn keyword_search_matches_hand_enumeration() {
        let r = snapshot().search(&query("lockdown", None, 0, 100)).unwrap();
        assert_eq!(ids(&r), ["p6", "p2", "p5", "p1", "p7", "p4"]);
        assert_eq!(r.total, 6);
    }

    #[test]
    fn keyword_search_matches_linear_scan() {
        let s = snapshot();
        for kw in ["lockdown", "LOCK", "wuhan", "survey", "s", "nothing here", "policy"] {
            let got = s.search(&query(kw, None, 0, MAX_LIMIT)).unwrap();
            let lc = kw.to_lowercase();
            let mut want: Vec<(i64, &str)> = PAPERS
                .iter()
                .filter(|p| p.2.to_lowercase().contains(&lc) || p.3.to_lowercase().contains(&lc))
                .map(|p| (-p.1, p.0))
                .collect();
            want.sort();
            assert_eq!(ids(&got), want.iter().map(|w| w.1).collect::<Vec<_>>(), "{kw}");
        }
    }

    #[test]
    fn whole_earth_box_returns_every_located_paper() {
        let r = snapshot().search(&query("", Some([-180.0, -90.0, 180.0, 90.0]), 0, 100)).unwrap();
        let got: BTreeSet<&str> = ids(&r).into_iter().collect();
        assert_eq!(got, BTreeSet::from(["p1", "p2", "p3", "p4", "p5", "p7"]));
    }

    #[test]
    fn box_and_discipline_filters_are_conjunctive() {
        let s = snapshot();
        // around Wuhan and London only
        let mut q = query("", Some([-10.0, 20.0, 120.0, 60.0]), 0, 100);
        assert_eq!(ids(&s.search(&q).unwrap()), ["p1", "p3", "p7"]);
        q.discipline = Some(16);
        assert_eq!(ids(&s.search(&q).unwrap()), ["p3"]);
        q.keyword = "lockdown".into();
        assert!(s.search(&q).unwrap().items.is_empty());
    }

    #[test]
    fn antimeridian_box_wraps() {
        let r = snapshot().search(&query("", Some([170.0, -60.0, -140.0, 70.0]), 0, 100)).unwrap();
        assert_eq!(ids(&r), ["p5", "p4"]);
    }

    #[test]
    fn box_search_agrees_with_point_scan() {
        let s = snapshot();
        let boxes = [
            [-180.0, -90.0, 180.0, 90.0],
            [100.0, 0.0, 180.0, 60.0],
            [-80.0, 30.0, 0.0, 60.0],
            [150.0, -50.0, -150.0, 70.0],
            [0.0, 0.0, 1.0, 1.0],
        ];
        for b in boxes {
            let split = BoundingBox::split_antimeridian(b[1], b[3], b[0], b[2]).unwrap();
            let mut want: Vec<(i64, &str)> = PAPERS
                .iter()
                .filter(|p| {
                    p.5.iter().any(|name| {
                        let (_, lat, lon) = PLACES.iter().find(|pl| pl.0 == *name).unwrap();
                        let pt = GeoPoint { lat: *lat, lon: *lon };
                        split.iter().any(|bb| bb.contains(&pt))
                    })
                })
                .map(|p| (-p.1, p.0))
                .collect();
            want.sort();
            let got = s.search(&query("", Some(b), 0, 100)).unwrap();
            assert_eq!(ids(&got), want.iter().map(|w| w.1).collect::<Vec<_>>(), "{b:?}");
        }
    }

    #[test]
    fn pagination_contract() {
        let s = snapshot();
        let world = Some([-180.0, -90.0, 180.0, 90.0]);
        let r = s.search(&query("lockdown", world, 0, 2)).unwrap();
        assert_eq!(r.items.len(), 2);
        assert_eq!(r.total, 5);
        let full = s.search(&query("lockdown", world, 0, 100)).unwrap();
        let mut pages = Vec::new();
        for offset in (0..full.total + 2).step_by(2) {
            pages.extend(s.search(&query("lockdown", world, offset, 2)).unwrap().items);
        }
        assert_eq!(pages, full.items);
    }

    #[test]
    fn invalid_queries_are_bad_requests() {
        let s = snapshot();
        for q in [
            query("", None, 0, 10),
            query("x", None, 0, 0),
            query("x", None, 0, MAX_LIMIT + 1),
            query("x", Some([0.0, 10.0, 1.0, 5.0]), 0, 10),
            query("x", Some([0.0, -91.0, 1.0, 5.0]), 0, 10),
        ] {
            assert_eq!(s.search(&q).unwrap_err().status(), 400, "{q:?}");
        }
        for raw in ["1,2,3", "a,b,c,d", "0,0,200,1", "", "1,2,3,4,5"] {
            assert_eq!(parse_bbox(raw).unwrap_err().kind, ApiErrorKind::BadRequest, "{raw}");
        }
        let p = SearchParams {
            keyword: Some("x".into()),
            limit: Some("ten".into()),
            ..Default::default()
        };
        assert!(SearchQuery::from_params(&p).is_err());
        let p = SearchParams {
            keyword: Some("x".into()),
            discipline: Some("Alchemy".into()),
            ..Default::default()
        };
        assert!(SearchQuery::from_params(&p).is_err());
    }

    #[test]
    fn params_resolve_discipline_names() {
        let p = SearchParams {
            keyword: Some(" lockdown ".into()),
            discipline: Some("medical and health sciences".into()),
            bbox: Some("-180,-90,180,90".into()),
            offset: None,
            limit: Some("3".into()),
        };
        let q = SearchQuery::from_params(&p).unwrap();
        assert_eq!(q.keyword, "lockdown");
        assert_eq!(q.discipline, Some(10));
        assert_eq!(q.limit, 3);
        assert_eq!(ids(&snapshot().search(&q).unwrap()), ["p1", "p7"]);
    }

    #[test]
    fn density_matches_hand_count() {
        // Wuhan wt (p1, p7), London gc (p3, p7), New York dr, Auckland rc, Fairbanks be
        let d = snapshot().density(2).unwrap();
        let cells: Vec<(&str, usize)> = d.cells.iter().map(|c| (c.geohash.as_str(), c.count)).collect();
        assert_eq!(cells, [("be", 1), ("dr", 1), ("gc", 2), ("rc", 1), ("wt", 2)]);
        assert_eq!(d.total, 7);
        assert_eq!(snapshot().density(0).unwrap_err().status(), 400);
        assert_eq!(snapshot().density(7).unwrap_err().status(), 400);
    }

    fn one_hop_knowledge() -> PathQuery {
        PathQuery {
            start: Selector {
                kind: Some(ConceptKind::Paper),
                ..Default::default()
            },
            steps: vec![Step {
                relation: RelationKind::MentionKnowledge,
                direction: Direction::Forward,
            }],
            end: Selector {
                id: Some("k1".into()),
                ..Default::default()
            },
        }
    }

    #[test]
    fn traverse_delegates_and_bounds_hops() {
        let s = snapshot();
        let r = s.traverse(&one_hop_knowledge()).unwrap();
        assert_eq!(r.rows, [["p1", "k1"]]);
        assert_eq!(r.rows, s.kg().traverse(&one_hop_knowledge()).unwrap());

        let mut long = one_hop_knowledge();
        long.steps = vec![long.steps[0].clone(); 4];
        assert_eq!(s.traverse(&long).unwrap_err().status(), 400);
        long.steps.clear();
        assert_eq!(s.traverse(&long).unwrap_err().status(), 400);

        let empty = Snapshot::from_kg(KgStore::new(), None).unwrap();
        assert!(empty.traverse(&one_hop_knowledge()).unwrap().rows.is_empty());
    }

    #[test]
    fn paper_detail_and_not_found() {
        let s = snapshot();
        let p2 = s.paper("p2").unwrap();
        assert_eq!(p2.cites, ["p1"]);
        assert!(p2.cited_by.is_empty());
        assert_eq!(p2.authors.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(), ["A2", "A3"]);
        assert_eq!(p2.disciplines, ["Economics"]);
        let p1 = s.paper("p1").unwrap();
        assert_eq!(p1.cited_by, ["p2"]);
        assert_eq!(p1.knowledge[0].name, "quarantine");
        assert_eq!(p1.locations[0].name, "Wuhan");
        let err = s.paper("nope").unwrap_err();
        assert_eq!(err.status(), 404);
        assert_eq!(err.body()["error"]["code"], "not_found");
    }

    #[test]
    fn network_stats_mirror_netsci() {
        let s = snapshot();
        for kind in NetworkKind::ALL {
            let r = s.network_stats(kind.as_str()).unwrap();
            let want = build_network(s.kg(), kind).degree_stats();
            assert_eq!(r.rows.iter().map(|row| row.stats.clone()).collect::<Vec<_>>(), want);
            assert!(r.rows.iter().all(|row| row.network == kind && row.fit.is_none()));
        }
        assert_eq!(s.network_stats("friendship").unwrap_err().status(), 404);
    }

    #[test]
    fn identical_requests_give_identical_bytes() {
        let a = snapshot();
        let b = snapshot();
        let q = query("lockdown", Some([-180.0, -90.0, 180.0, 90.0]), 1, 3);
        assert_eq!(to_json_bytes(&a.search(&q).unwrap()), to_json_bytes(&b.search(&q).unwrap()));
        assert_eq!(to_json_bytes(&a.paper("p7").unwrap()), to_json_bytes(&b.paper("p7").unwrap()));
        assert_eq!(to_json_bytes(&a.density(4).unwrap()), to_json_bytes(&b.density(4).unwrap()));
        assert_eq!(to_json_bytes(&a.health()), to_json_bytes(&b.health()));
    }

    #[test]
    fn loads_from_data_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = DataDir::new(tmp.path());
        assert!(Snapshot::load(&dir).is_err());
        std::fs::create_dir_all(dir.kg_log().parent().unwrap()).unwrap();
        crate::kgstore::write_log(&fixture_kg(), &dir.kg_log()).unwrap();
        let s = Snapshot::load(&dir).unwrap();
        assert_eq!(s.health().papers, 7);
        assert_eq!(s.health().located_points, 7);
    }
}
