//! Waypoint mobility: piecewise-linear motion at constant speed, stopping at
//! the last waypoint. Positions are a pure function of time, so there are no
//! movement events to schedule.

use crate::geometry::Point;
use crate::units::Micros;

#[derive(Debug, Clone, PartialEq)]
struct Leg {
    from: Point,
    to: Point,
    start_us: u64,
    dur_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mobility {
    legs: Vec<Leg>,
    rest: Point,
}

impl Mobility {
    pub fn stationary(at: Point) -> Mobility {
        Mobility {
            legs: Vec::new(),
            rest: at,
        }
    }

    /// Start at `origin` at t = 0 and walk through `waypoints` at `speed`
    /// (meters per second).
    pub fn route(origin: Point, waypoints: &[Point], speed: f64) -> Mobility {
        let mut legs = Vec::new();
        let mut cursor = origin;
        let mut t = 0u64;
        for wp in waypoints {
            let d = cursor.dist(*wp);
            let dur = (d / speed * 1e6).round() as u64;
            if dur > 0 {
                legs.push(Leg {
                    from: cursor,
                    to: *wp,
                    start_us: t,
                    dur_us: dur,
                });
                t += dur;
            }
            cursor = *wp;
        }
        Mobility { legs, rest: cursor }
    }

    pub fn position(&self, at: Micros) -> Point {
        for leg in &self.legs {
            if at.0 < leg.start_us {
                return leg.from;
            }
            if at.0 < leg.start_us + leg.dur_us {
                let frac = (at.0 - leg.start_us) as f64 / leg.dur_us as f64;
                return Point::new(
                    leg.from.x + (leg.to.x - leg.from.x) * frac,
                    leg.from.y + (leg.to.y - leg.from.y) * frac,
                );
            }
        }
        self.rest
    }

    pub fn is_stationary(&self) -> bool {
        self.legs.is_empty()
    }
}
