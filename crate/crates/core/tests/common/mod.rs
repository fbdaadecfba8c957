#![allow(dead_code)]

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rtls_core::solvers::{compute_gdop, MultilaterationProblem};
use rtls_core::Position;

/// A random office-like scene: anchors in a 10 x 10 x 3 m box, the tag well
/// inside it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub anchors: Vec<Position>,
    pub truth: Position,
}

impl Instance {
    pub fn exact(&self) -> MultilaterationProblem {
        MultilaterationProblem::exact(self.anchors.clone(), &self.truth)
    }

    pub fn noisy(&self, sigma: f64, rng: &mut ChaCha8Rng) -> MultilaterationProblem {
        let normal = Normal::new(0.0, sigma).unwrap();
        let distances = self
            .anchors
            .iter()
            .map(|a| (a.distance(&self.truth) + normal.sample(rng)).abs())
            .collect();
        MultilaterationProblem::new(self.anchors.clone(), distances)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws scenes until one has GDOP < 2 with the tag inside the convex hull
/// of the anchors.
pub fn well_conditioned(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let n = rng.random_range(5..=10);
        let anchors: Vec<Position> = (0..n)
            .map(|_| {
                Position::new(
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..3.0),
                )
            })
            .collect();
        let truth = Position::new(
            rng.random_range(2.0..8.0),
            rng.random_range(2.0..8.0),
            rng.random_range(0.5..2.5),
        );
        let good = matches!(compute_gdop(&anchors, &truth), Ok(g) if g < 2.0);
        if good && inside_hull(&anchors, &truth) {
            return Instance { anchors, truth };
        }
    }
}

pub fn suite(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count).map(|_| well_conditioned(&mut r)).collect()
}

/// A point lies in the convex hull of a 3D point set iff it lies in some
/// tetrahedron spanned by four of the points.
pub fn inside_hull(points: &[Position], p: &Position) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    if in_tetrahedron([points[i], points[j], points[k], points[l]], p) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

fn in_tetrahedron(t: [Position; 4], p: &Position) -> bool {
    let o = t[0].to_vector();
    let m = Matrix3::from_columns(&[
        t[1].to_vector() - o,
        t[2].to_vector() - o,
        t[3].to_vector() - o,
    ]);
    match m.try_inverse() {
        Some(inv) => {
            let b = inv * (p.to_vector() - o);
            b.iter().all(|&x| x >= 0.0) && b.sum() <= 1.0
        }
        None => false,
    }
}

/// Minimum of `f` over a cube of half-width `half` around `center`, sampled
/// on a grid of the given pitch.
pub fn grid_minimum(f: impl Fn(&Position) -> f64, center: &Position, half: f64, pitch: f64) -> (Position, f64) {
    let steps = (2.0 * half / pitch).round() as i64;
    let mut best = (*center, f64::INFINITY);
    for i in 0..=steps {
        let x = center.x - half + i as f64 * pitch;
        for j in 0..=steps {
            let y = center.y - half + j as f64 * pitch;
            for k in 0..=steps {
                let z = center.z - half + k as f64 * pitch;
                let q = Position::new(x, y, z);
                let v = f(&q);
                if v < best.1 {
                    best = (q, v);
                }
            }
        }
    }
    best
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// A config with no floor plan: the given anchors (slots 1, 2, ...) and
/// static tags, every node on `profile`.
pub fn small_world(anchors: &[[f64; 3]], tags: &[[f64; 3]], profile: &str) -> rtls_core::sim::SimConfig {
    use rtls_core::sim::config::{AnchorSpec, RandomTags, TagSpec};
    use rtls_core::sim::{Layout, SimConfig, WorldConfig};
    SimConfig {
        world: WorldConfig {
            layout: Layout::Empty,
            anchor_profile: profile.into(),
            anchors: anchors
                .iter()
                .enumerate()
                .map(|(i, p)| AnchorSpec {
                    id: format!("A{}", i + 1),
                    position: *p,
                    slot_index: i as u32 + 1,
                    profile: profile.into(),
                })
                .collect(),
            tags: tags
                .iter()
                .enumerate()
                .map(|(i, p)| TagSpec {
                    id: format!("T{}", i + 1),
                    position: Some(*p),
                    waypoints: Vec::new(),
                    profile: profile.into(),
                })
                .collect(),
            random_tags: RandomTags {
                count: 0,
                ..RandomTags::default()
            },
            ..WorldConfig::default()
        },
        ..SimConfig::default()
    }
}

/// Anchors on a 4 x 4 m square at two heights around the origin.
pub fn ring(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            [4.0 * a.cos(), 4.0 * a.sin(), if i % 2 == 0 { 2.5 } else { 0.5 }]
        })
        .collect()
}
