//! Deployment geometry: anchors, tags, walls and radio reachability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Position;

/// A wall as a segment of the floor plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Wall {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            from: [x1, y1],
            to: [x2, y2],
        }
    }

    /// Whether the floor projection of the segment `a`-`b` touches the wall.
    pub fn blocks(&self, a: &Position, b: &Position) -> bool {
        segments_intersect([a.x, a.y], [b.x, b.y], self.from, self.to)
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection; touching counts.
pub fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Radio ranges and the success threshold of an exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioRange {
    pub los_range_m: f64,
    pub nlos_range_m: f64,
}

impl Default for RadioRange {
    fn default() -> Self {
        Self {
            los_range_m: 20.0,
            nlos_range_m: 5.0,
        }
    }
}

impl RadioRange {
    /// Within the NLOS range regardless of walls, or within the LOS range
    /// with no wall in the way. Both limits are inclusive.
    pub fn reaches(&self, a: &Position, b: &Position, walls: &[Wall]) -> bool {
        let d = a.distance(b);
        d <= self.nlos_range_m || (d <= self.los_range_m && !walls.iter().any(|w| w.blocks(a, b)))
    }
}

/// Indices of the anchors reachable from `tag`.
pub fn reachable_anchors(
    tag: &Position,
    anchors: &[Position],
    walls: &[Wall],
    range: &RadioRange,
) -> Vec<usize> {
    anchors
        .iter()
        .enumerate()
        .filter(|(_, a)| range.reaches(tag, a, walls))
        .map(|(i, _)| i)
        .collect()
}

/// An axis-aligned floor region tags can be placed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Region {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: [x0, y0],
            max: [x1, y1],
        }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

/// Uniform point over a union of disjoint regions, at height `z`.
pub fn sample_floor<R: Rng + ?Sized>(regions: &[Region], z: f64, rng: &mut R) -> Position {
    let total: f64 = regions.iter().map(Region::area).sum();
    let mut pick = rng.random_range(0.0..total);
    let region = regions
        .iter()
        .find(|r| {
            if pick < r.area() {
                true
            } else {
                pick -= r.area();
                false
            }
        })
        .unwrap_or(&regions[regions.len() - 1]);
    Position::new(
        rng.random_range(region.min[0]..region.max[0]),
        rng.random_range(region.min[1]..region.max[1]),
        z,
    )
}

/// A timed point of a waypoint path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub minute: u64,
    pub position: [f64; 3],
}

/// How a tag moves.
#[derive(Debug, Clone, PartialEq)]
pub enum Mobility {
    Static(Position),
    /// Piecewise-linear between waypoints sorted by minute; held constant
    /// before the first and after the last.
    Path(Vec<Waypoint>),
}

impl Mobility {
    pub fn position_at(&self, minute: u64) -> Position {
        match self {
            Mobility::Static(p) => *p,
            Mobility::Path(points) => {
                let first = &points[0];
                if minute <= first.minute {
                    return first.position.into();
                }
                for w in points.windows(2) {
                    let (a, b) = (&w[0], &w[1]);
                    if minute <= b.minute {
                        let t = (minute - a.minute) as f64 / (b.minute - a.minute) as f64;
                        return Position::from(a.position).lerp(&b.position.into(), t);
                    }
                }
                points[points.len() - 1].position.into()
            }
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Mobility::Static(_)) || matches!(self, Mobility::Path(p) if p.len() == 1)
    }
}

/// The bundled floor plan: two 55 x 57 m halls joined by a 20 x 5.6 m
/// corridor, about 6382 m^2 in total, with 89 ceiling anchors.
pub mod two_rooms {
    use super::*;

    pub const ANCHOR_HEIGHT: f64 = 2.5;
    const HALL_W: f64 = 55.0;
    const HALL_H: f64 = 57.0;
    const CORRIDOR_LEN: f64 = 20.0;
    const CORRIDOR_Y0: f64 = 26.0;
    const CORRIDOR_Y1: f64 = 31.6;
    const GRID_X: usize = 6;
    const GRID_Y: usize = 7;
    const CORRIDOR_ANCHORS: usize = 5;

    pub fn regions() -> Vec<Region> {
        let bx = HALL_W + CORRIDOR_LEN;
        vec![
            Region::new(0.0, 0.0, HALL_W, HALL_H),
            Region::new(HALL_W, CORRIDOR_Y0, bx, CORRIDOR_Y1),
            Region::new(bx, 0.0, bx + HALL_W, HALL_H),
        ]
    }

    pub fn walls() -> Vec<Wall> {
        let ax = HALL_W;
        let bx = HALL_W + CORRIDOR_LEN;
        let ex = bx + HALL_W;
        vec![
            // hall A
            Wall::new(0.0, 0.0, ax, 0.0),
            Wall::new(0.0, HALL_H, ax, HALL_H),
            Wall::new(0.0, 0.0, 0.0, HALL_H),
            Wall::new(ax, 0.0, ax, CORRIDOR_Y0),
            Wall::new(ax, CORRIDOR_Y1, ax, HALL_H),
            // corridor
            Wall::new(ax, CORRIDOR_Y0, bx, CORRIDOR_Y0),
            Wall::new(ax, CORRIDOR_Y1, bx, CORRIDOR_Y1),
            // hall B
            Wall::new(bx, 0.0, bx, CORRIDOR_Y0),
            Wall::new(bx, CORRIDOR_Y1, bx, HALL_H),
            Wall::new(bx, 0.0, ex, 0.0),
            Wall::new(bx, HALL_H, ex, HALL_H),
            Wall::new(ex, 0.0, ex, HALL_H),
        ]
    }

    /// Anchor positions in slot order: a 6 x 7 grid in each hall, then the
    /// corridor line.
    pub fn anchors() -> Vec<Position> {
        let mut out = Vec::with_capacity(2 * GRID_X * GRID_Y + CORRIDOR_ANCHORS);
        for x0 in [0.0, HALL_W + CORRIDOR_LEN] {
            for j in 0..GRID_Y {
                for i in 0..GRID_X {
                    out.push(Position::new(
                        x0 + (i as f64 + 0.5) * HALL_W / GRID_X as f64,
                        (j as f64 + 0.5) * HALL_H / GRID_Y as f64,
                        ANCHOR_HEIGHT,
                    ));
                }
            }
        }
        let mid_y = (CORRIDOR_Y0 + CORRIDOR_Y1) / 2.0;
        for i in 0..CORRIDOR_ANCHORS {
            out.push(Position::new(
                HALL_W + (i as f64 + 0.5) * CORRIDOR_LEN / CORRIDOR_ANCHORS as f64,
                mid_y,
                ANCHOR_HEIGHT,
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reachability_examples() {
        let range = RadioRange::default();
        let tag = Position::new(0.0, 0.0, 1.0);
        let a10 = Position::new(10.0, 0.0, 1.0);
        let a4 = Position::new(4.0, 0.0, 1.0);
        let a20 = Position::new(20.0, 0.0, 1.0);
        let anchors = [a10, a4, a20];
        assert_eq!(reachable_anchors(&tag, &anchors, &[], &range), vec![0, 1, 2]);
        let wall = [Wall::new(2.0, -5.0, 2.0, 5.0)];
        assert_eq!(reachable_anchors(&tag, &anchors, &wall, &range), vec![1]);
        let beyond = Position::new(20.000001, 0.0, 1.0);
        assert!(!range.reaches(&tag, &beyond, &[]));
    }

    #[test]
    fn segment_intersection_cases() {
        assert!(segments_intersect([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
        // touching an endpoint counts
        assert!(segments_intersect([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 1.0]));
        // collinear but disjoint
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]));
    }

    #[test]
    fn bundled_plan_dimensions() {
        let area: f64 = two_rooms::regions().iter().map(Region::area).sum();
        assert!((area - 6382.0).abs() < 1e-9);
        assert_eq!(two_rooms::anchors().len(), 89);
        // Anchors sit inside the floor area, away from the walls.
        for a in two_rooms::anchors() {
            assert!(two_rooms::regions()
                .iter()
                .any(|r| a.x > r.min[0] && a.x < r.max[0] && a.y > r.min[1] && a.y < r.max[1]));
        }
    }

    #[test]
    fn walls_separate_the_halls() {
        let range = RadioRange {
            los_range_m: 1000.0,
            nlos_range_m: 5.0,
        };
        let walls = two_rooms::walls();
        let a = Position::new(50.0, 10.0, 1.0);
        let b = Position::new(80.0, 10.0, 1.0);
        assert!(!range.reaches(&a, &b, &walls));
        // straight through the corridor
        let c = Position::new(50.0, 28.8, 1.0);
        let d = Position::new(80.0, 28.8, 1.0);
        assert!(range.reaches(&c, &d, &walls));
    }

    #[test]
    fn waypoint_interpolation() {
        let m = Mobility::Path(vec![
            Waypoint {
                minute: 10,
                position: [0.0, 0.0, 1.0],
            },
            Waypoint {
                minute: 20,
                position: [10.0, 0.0, 1.0],
            },
        ]);
        assert_eq!(m.position_at(0), Position::new(0.0, 0.0, 1.0));
        assert_eq!(m.position_at(15), Position::new(5.0, 0.0, 1.0));
        assert_eq!(m.position_at(99), Position::new(10.0, 0.0, 1.0));
        assert!(!m.is_static());
    }
}
