//! Small 2-D geometry helpers shared by the radio model, coverage sampling,
//! and the relative-positioning code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A line-segment obstacle. Radio links whose straight path crosses an active
/// segment are blocked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Segment {
        Segment { a, b }
    }

    /// Proper segment intersection test (shared endpoints and collinear
    /// overlaps count as crossings — an obstacle touching the sight line
    /// blocks it).
    pub fn crosses(&self, other: &Segment) -> bool {
        fn orient(a: Point, b: Point, c: Point) -> f64 {
            (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
        }
        fn on_segment(a: Point, b: Point, p: Point) -> bool {
            p.x >= a.x.min(b.x) - 1e-12
                && p.x <= a.x.max(b.x) + 1e-12
                && p.y >= a.y.min(b.y) - 1e-12
                && p.y <= a.y.max(b.y) + 1e-12
        }

        let d1 = orient(self.a, self.b, other.a);
        let d2 = orient(self.a, self.b, other.b);
        let d3 = orient(other.a, other.b, self.a);
        let d4 = orient(other.a, other.b, self.b);

        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_segment(self.a, self.b, other.a))
            || (d2 == 0.0 && on_segment(self.a, self.b, other.b))
            || (d3 == 0.0 && on_segment(other.a, other.b, self.a))
            || (d4 == 0.0 && on_segment(other.a, other.b, self.b))
    }
}

/// Axis-aligned bounding box of a set of discs (used by the Monte Carlo
/// coverage samplers).
pub fn disc_bbox(centers: &[Point], radius: f64) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in centers {
        min.x = min.x.min(c.x - radius);
        min.y = min.y.min(c.y - radius);
        max.x = max.x.max(c.x + radius);
        max.y = max.y.max(c.y + radius);
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_crossing() {
        let wall = Segment::new(Point::new(0.0, -1.0), Point::new(0.0, 1.0));
        let through = Segment::new(Point::new(-1.0, 0.0), Point::new(1.0, 0.0));
        let beside = Segment::new(Point::new(-1.0, 2.0), Point::new(1.0, 2.0));
        assert!(wall.crosses(&through));
        assert!(!wall.crosses(&beside));
    }

    #[test]
    fn touching_endpoint_blocks() {
        let wall = Segment::new(Point::new(0.0, 0.0), Point::new(0.0, 2.0));
        let graze = Segment::new(Point::new(-1.0, 0.0), Point::new(0.0, 0.0));
        assert!(wall.crosses(&graze));
    }
}
