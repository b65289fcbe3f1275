//! Base32 geohash encoding by interleaved bisection (longitude bit first).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BASE32: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

pub const MAX_PRECISION: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return Err(Error::invalid(format!("latitude {} out of range", self.lat)));
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return Err(Error::invalid(format!("longitude {} out of range", self.lon)));
        }
        Ok(())
    }
}

/// Closed latitude/longitude rectangle. Boxes never cross the antimeridian;
/// see [`BoundingBox::split_antimeridian`] for wrap-around input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub const WORLD: BoundingBox = BoundingBox {
        lat_min: -90.0,
        lat_max: 90.0,
        lon_min: -180.0,
        lon_max: 180.0,
    };

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat >= self.lat_min && p.lat <= self.lat_max && p.lon >= self.lon_min && p.lon <= self.lon_max
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.lat_min >= self.lat_min
            && other.lat_max <= self.lat_max
            && other.lon_min >= self.lon_min
            && other.lon_max <= self.lon_max
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.lat_min <= other.lat_max
            && other.lat_min <= self.lat_max
            && self.lon_min <= other.lon_max
            && other.lon_min <= self.lon_max
    }

    /// Validate a query box given as west/south/east/north. A west edge greater
    /// than the east edge means the box wraps across the antimeridian and is
    /// returned as two boxes.
    pub fn split_antimeridian(lat_min: f64, lat_max: f64, lon_west: f64, lon_east: f64) -> Result<Vec<BoundingBox>> {
        for v in [lat_min, lat_max, lon_west, lon_east] {
            if !v.is_finite() {
                return Err(Error::invalid("bounding box edge is not finite"));
            }
        }
        if !(-90.0..=90.0).contains(&lat_min) || !(-90.0..=90.0).contains(&lat_max) {
            return Err(Error::invalid("bounding box latitude out of range"));
        }
        if !(-180.0..=180.0).contains(&lon_west) || !(-180.0..=180.0).contains(&lon_east) {
            return Err(Error::invalid("bounding box longitude out of range"));
        }
        if lat_min > lat_max {
            return Err(Error::invalid("bounding box south edge above north edge"));
        }
        if lon_west <= lon_east {
            return Ok(vec![BoundingBox {
                lat_min,
                lat_max,
                lon_min: lon_west,
                lon_max: lon_east,
            }]);
        }
        Ok(vec![
            BoundingBox {
                lat_min,
                lat_max,
                lon_min: lon_west,
                lon_max: 180.0,
            },
            BoundingBox {
                lat_min,
                lat_max,
                lon_min: -180.0,
                lon_max: lon_east,
            },
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Geohash(String);

impl Geohash {
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > MAX_PRECISION {
            return Err(Error::invalid(format!("geohash length {} not in 1..=12", s.len())));
        }
        for c in s.bytes() {
            if char_value(c).is_none() {
                return Err(Error::invalid(format!("invalid geohash character {:?}", c as char)));
            }
        }
        Ok(Geohash(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, precision: usize) -> Geohash {
        Geohash(self.0[..precision.min(self.0.len())].to_owned())
    }
}

impl fmt::Display for Geohash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Geohash {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Geohash::parse(&s)
    }
}

impl From<Geohash> for String {
    fn from(h: Geohash) -> String {
        h.0
    }
}

fn char_value(c: u8) -> Option<u8> {
    BASE32.iter().position(|&b| b == c).map(|i| i as u8)
}

pub fn encode(p: GeoPoint, precision: usize) -> Result<Geohash> {
    p.validate()?;
    if precision == 0 || precision > MAX_PRECISION {
        return Err(Error::invalid(format!("geohash precision {precision} not in 1..=12")));
    }
    let (mut lat_lo, mut lat_hi) = (-90.0f64, 90.0f64);
    let (mut lon_lo, mut lon_hi) = (-180.0f64, 180.0f64);
    let mut out = String::with_capacity(precision);
    let mut even = true;
    for _ in 0..precision {
        let mut ch = 0u8;
        for _ in 0..5 {
            ch <<= 1;
            if even {
                let mid = (lon_lo + lon_hi) / 2.0;
                if p.lon >= mid {
                    ch |= 1;
                    lon_lo = mid;
                } else {
                    lon_hi = mid;
                }
            } else {
                let mid = (lat_lo + lat_hi) / 2.0;
                if p.lat >= mid {
                    ch |= 1;
                    lat_lo = mid;
                } else {
                    lat_hi = mid;
                }
            }
            even = !even;
        }
        out.push(BASE32[ch as usize] as char);
    }
    Ok(Geohash(out))
}

pub fn decode(h: &str) -> Result<BoundingBox> {
    let h = Geohash::parse(h)?;
    let (mut lat_lo, mut lat_hi) = (-90.0f64, 90.0f64);
    let (mut lon_lo, mut lon_hi) = (-180.0f64, 180.0f64);
    let mut even = true;
    for c in h.0.bytes() {
        let v = char_value(c).expect("validated");
        for shift in (0..5).rev() {
            let bit = (v >> shift) & 1 == 1;
            if even {
                let mid = (lon_lo + lon_hi) / 2.0;
                if bit {
                    lon_lo = mid;
                } else {
                    lon_hi = mid;
                }
            } else {
                let mid = (lat_lo + lat_hi) / 2.0;
                if bit {
                    lat_lo = mid;
                } else {
                    lat_hi = mid;
                }
            }
            even = !even;
        }
    }
    Ok(BoundingBox {
        lat_min: lat_lo,
        lat_max: lat_hi,
        lon_min: lon_lo,
        lon_max: lon_hi,
    })
}

/// Cell dimensions (lat degrees, lon degrees) at a precision.
pub fn cell_size(precision: usize) -> (f64, f64) {
    let bits = 5 * precision as i32;
    let lon_bits = (bits + 1) / 2;
    let lat_bits = bits / 2;
    (180.0 / 2f64.powi(lat_bits), 360.0 / 2f64.powi(lon_bits))
}

/// All cells of the given precision whose closed extent intersects `bbox`.
pub fn covering_cells(bbox: &BoundingBox, precision: usize) -> Vec<Geohash> {
    let (dlat, dlon) = cell_size(precision);
    let lat_cells = (180.0 / dlat) as i64;
    let lon_cells = (360.0 / dlon) as i64;
    let row = |lat: f64| (((lat + 90.0) / dlat).floor() as i64).clamp(0, lat_cells - 1);
    let col = |lon: f64| (((lon + 180.0) / dlon).floor() as i64).clamp(0, lon_cells - 1);
    // Closed boxes: a point on a shared cell edge belongs to the upper cell, so the
    // lower neighbour is included when the box edge sits exactly on a boundary.
    let r0 = (row(bbox.lat_min) - 1).max(0);
    let r1 = row(bbox.lat_max);
    let c0 = (col(bbox.lon_min) - 1).max(0);
    let c1 = col(bbox.lon_max);
    let mut cells = Vec::new();
    for r in r0..=r1 {
        for c in c0..=c1 {
            let center = GeoPoint {
                lat: -90.0 + (r as f64 + 0.5) * dlat,
                lon: -180.0 + (c as f64 + 0.5) * dlon,
            };
            let cell = encode(center, precision).expect("cell centre in range");
            let extent = decode(cell.as_str()).expect("valid cell");
            if extent.intersects(bbox) {
                cells.push(cell);
            }
        }
    }
    cells.sort();
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_single_char() {
        assert_eq!(encode(GeoPoint::new(0.0, 0.0).unwrap(), 1).unwrap().as_str(), "s");
    }

    #[test]
    fn decode_s_is_first_quadrant_cell() {
        // bits 1,1,0,0,0: lon [0,180] -> lat [0,90] -> lon [0,90] -> lat [0,45] -> lon [0,45]
        let b = decode("s").unwrap();
        assert_eq!((b.lat_min, b.lat_max, b.lon_min, b.lon_max), (0.0, 45.0, 0.0, 45.0));
    }

    #[test]
    fn twelve_char_cell_is_narrow() {
        let b = decode("u4pruydqqvjq").unwrap();
        // 60 bits: 30 lon bits -> 360 / 2^30
        assert!(b.lon_max - b.lon_min < 1e-5);
        assert_eq!(b.lon_max - b.lon_min, 360.0 / 2f64.powi(30));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(decode("a").is_err());
        assert!(decode("").is_err());
        assert!(decode("0123456789bcd").is_err());
        assert!(encode(GeoPoint { lat: 91.0, lon: 0.0 }, 5).is_err());
        assert!(encode(GeoPoint { lat: 0.0, lon: 0.0 }, 13).is_err());
    }

    #[test]
    fn prefix_box_contains_longer_box() {
        assert!(decode("u4").unwrap().contains_box(&decode("u4pr").unwrap()));
    }

    #[test]
    fn antimeridian_split() {
        let boxes = BoundingBox::split_antimeridian(-10.0, 10.0, 170.0, -170.0).unwrap();
        assert_eq!(boxes.len(), 2);
        assert!(boxes[0].contains(&GeoPoint { lat: 0.0, lon: 175.0 }));
        assert!(boxes[1].contains(&GeoPoint { lat: 0.0, lon: -175.0 }));
        assert!(BoundingBox::split_antimeridian(10.0, -10.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn covering_cells_cover_box_corners() {
        let bbox = BoundingBox {
            lat_min: 10.0,
            lat_max: 12.5,
            lon_min: -3.0,
            lon_max: 4.0,
        };
        let cells = covering_cells(&bbox, 3);
        for (lat, lon) in [(10.0, -3.0), (12.5, 4.0), (11.0, 0.0)] {
            let h = encode(GeoPoint { lat, lon }, 3).unwrap();
            assert!(cells.contains(&h), "{h} missing");
        }
    }
}
