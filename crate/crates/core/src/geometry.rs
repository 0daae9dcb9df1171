//! Planar polygons in km coordinates, with the WKT subset used by the catalog
//! files.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.xmin <= other.xmax
            && other.xmin <= self.xmax
            && self.ymin <= other.ymax
            && other.ymin <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

/// Simple closed ring. The closing vertex is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    ring: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(mut ring: Vec<(f64, f64)>) -> Result<Self> {
        if ring.len() >= 2 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(Error::Config(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                ring.len()
            )));
        }
        if ring.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("polygon vertex".into()));
        }
        Ok(Self { ring })
    }

    /// Parses `POLYGON((x y, x y, ...))`. Only the outer ring is read.
    pub fn from_wkt(text: &str) -> Result<Self> {
        let t = text.trim();
        let upper = t.to_ascii_uppercase();
        let body = upper
            .strip_prefix("POLYGON")
            .ok_or_else(|| Error::Config(format!("not a WKT polygon: `{t}`")))?
            .trim();
        let inner = body
            .strip_prefix("((")
            .and_then(|b| b.split("))").next())
            .ok_or_else(|| Error::Config(format!("malformed WKT polygon: `{t}`")))?;
        // only the outer ring
        let outer = inner.split("),").next().unwrap_or(inner);
        let mut ring = Vec::new();
        for pair in outer.split(',') {
            let mut it = pair.split_whitespace();
            let (Some(xs), Some(ys), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Config(format!("malformed WKT vertex `{pair}`")));
            };
            let x: f64 = xs
                .parse()
                .map_err(|_| Error::Config(format!("bad WKT coordinate `{xs}`")))?;
            let y: f64 = ys
                .parse()
                .map_err(|_| Error::Config(format!("bad WKT coordinate `{ys}`")))?;
            ring.push((x, y));
        }
        Self::new(ring)
    }

    pub fn to_wkt(&self) -> String {
        let mut s = String::from("POLYGON((");
        for (i, (x, y)) in self.ring.iter().chain(self.ring.first()).enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&format!("{x} {y}"));
        }
        s.push_str("))");
        s
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.ring
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.ring.len();
        (0..n).map(move |i| (self.ring[i], self.ring[(i + 1) % n]))
    }

    /// Shoelace area (absolute).
    pub fn area(&self) -> f64 {
        let twice: f64 = self
            .edges()
            .map(|((x0, y0), (x1, y1))| x0 * y1 - x1 * y0)
            .sum();
        twice.abs() / 2.0
    }

    pub fn bbox(&self) -> BoundingBox {
        let mut b = BoundingBox {
            xmin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymin: f64::INFINITY,
            ymax: f64::NEG_INFINITY,
        };
        for &(x, y) in &self.ring {
            b.xmin = b.xmin.min(x);
            b.xmax = b.xmax.max(x);
            b.ymin = b.ymin.min(y);
            b.ymax = b.ymax.max(y);
        }
        b
    }

    /// Even-odd ray casting.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for ((x0, y0), (x1, y1)) in self.edges() {
            if (y0 > y) != (y1 > y) {
                let xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.ring.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return false;
                }
            }
        }
        true
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}
