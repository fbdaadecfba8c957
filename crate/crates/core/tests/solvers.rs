mod common;

use common::{rng, suite, Instance};
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::Rng;
use rtls_core::solvers::lm::minimize;
use rtls_core::solvers::{
    compute_gdop, larsson_multilaterate, lm_multilaterate, lm_tdoa, MultilaterationProblem, SolverConfig,
    SolverError, TdoaProblem,
};
use rtls_core::Position;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn five_anchor_noise_free_examples() {
    let anchors = vec![
        Position::new(0.0, 0.0, 2.8),
        Position::new(9.0, 0.5, 2.7),
        Position::new(0.4, 8.5, 2.9),
        Position::new(8.8, 9.1, 0.2),
        Position::new(4.5, 4.0, 0.1),
    ];
    let truth = Position::new(3.3, 6.1, 1.2);
    let problem = MultilaterationProblem::exact(anchors.clone(), &truth);
    let lm = lm_multilaterate(&problem, problem.centroid(), &cfg()).unwrap();
    let gl = larsson_multilaterate(&problem, &cfg()).unwrap();
    assert!(lm.converged && gl.converged);
    assert!(lm.position.distance(&truth) < 1e-6);
    assert!(gl.position.distance(&truth) < 1e-6);

    let q = Position::new(6.0, 2.0, 1.0);
    let tdoa = TdoaProblem::exact(anchors, &q, &truth, q);
    let r = lm_tdoa(&tdoa, tdoa.centroid(), &cfg()).unwrap();
    assert!(r.converged);
    assert!(r.position.distance(&truth) < 1e-6);
}

#[test]
fn tdoa_with_perturbed_initiator_matches_grid_minimum() {
    let mut r = rng(77);
    for inst in suite(78, 5) {
        let q = Position::new(r.random_range(2.0..8.0), r.random_range(2.0..8.0), 1.0);
        let exact = TdoaProblem::exact(inst.anchors.clone(), &q, &inst.truth, q);
        let shifted = TdoaProblem {
            initiator: Position::new(q.x + 0.02, q.y, q.z),
            ..exact
        };
        let result = lm_tdoa(&shifted, shifted.centroid(), &cfg().with_tolerance(1e-8)).unwrap();
        assert!(result.position.distance(&inst.truth) > 0.0);
        let (_, best) = common::grid_minimum(|p| shifted.objective(p), &inst.truth, 0.1, 0.005);
        assert!(shifted.objective(&result.position) <= best + 1e-12, "{inst:?}");
    }
}

#[test]
fn regular_tetrahedron_gdop() {
    // Unit vectors to the vertices of a regular tetrahedron give H'H = (4/3) I,
    // so GDOP = sqrt(3 * 3/4) = 1.5.
    let tag = Position::new(1.0, 2.0, 3.0);
    let s = 2.0;
    let anchors: Vec<Position> = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .iter()
        .map(|v| Position::new(tag.x + s * v[0], tag.y + s * v[1], tag.z + s * v[2]))
        .collect();
    let g = compute_gdop(&anchors, &tag).unwrap();
    assert!((g - 1.5).abs() < 1e-12, "{g}");

    let doubled: Vec<Position> = anchors.iter().chain(&anchors).copied().collect();
    let g2 = compute_gdop(&doubled, &tag).unwrap();
    assert!((g2 - g / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn collinear_geometry_is_singular() {
    let anchors: Vec<Position> = (1..=5).map(|i| Position::new(i as f64, 0.0, 0.0)).collect();
    assert_eq!(
        compute_gdop(&anchors, &Position::new(0.0, 0.0, 0.0)),
        Err(SolverError::SingularGeometry)
    );
}

#[test]
fn solvers_reject_three_anchors() {
    let inst = &suite(3, 1)[0];
    let p = MultilaterationProblem::exact(inst.anchors[..3].to_vec(), &inst.truth);
    assert!(matches!(
        lm_multilaterate(&p, p.centroid(), &cfg()),
        Err(SolverError::InsufficientAnchors { .. })
    ));
    assert!(larsson_multilaterate(&p, &cfg()).is_err());
}

fn rigid(inst: &Instance, rot: &Rotation3<f64>, shift: &Vector3<f64>) -> Instance {
    let t = |p: &Position| Position::from(rot * p.to_vector() + shift);
    Instance {
        anchors: inst.anchors.iter().map(t).collect(),
        truth: t(&inst.truth),
    }
}

fn noisy_pair(seed: u64) -> (Instance, Vec<f64>) {
    let inst = suite(seed, 1).remove(0);
    let p = inst.noisy(0.1, &mut rng(seed ^ 0xA5A5));
    (inst, p.distances)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rigid_motion_equivariance(
        seed in 0u64..10_000,
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in prop::array::uniform3(-50.0f64..50.0),
    ) {
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 0.1);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let shift = Vector3::from(shift);
        let (inst, d) = noisy_pair(seed);
        let moved = rigid(&inst, &rot, &shift);
        let a = MultilaterationProblem::new(inst.anchors.clone(), d.clone());
        let b = MultilaterationProblem::new(moved.anchors.clone(), d);
        let config = cfg().with_tolerance(1e-8);
        let map = |p: Position| Position::from(rot * p.to_vector() + shift);

        let ra = lm_multilaterate(&a, a.centroid(), &config).unwrap();
        let rb = lm_multilaterate(&b, b.centroid(), &config).unwrap();
        prop_assert!(map(ra.position).distance(&rb.position) < 1e-9);

        let ga = larsson_multilaterate(&a, &config).unwrap();
        let gb = larsson_multilaterate(&b, &config).unwrap();
        prop_assert!(map(ga.position).distance(&gb.position) < 1e-9);

        let q = Position::new(5.0, 5.0, 1.0);
        let ta = TdoaProblem::exact(inst.anchors.clone(), &q, &inst.truth, q);
        let tb = TdoaProblem::exact(moved.anchors.clone(), &map(q), &moved.truth, map(q));
        let sa = lm_tdoa(&ta, ta.centroid(), &config).unwrap();
        let sb = lm_tdoa(&tb, tb.centroid(), &config).unwrap();
        prop_assert!(map(sa.position).distance(&sb.position) < 1e-9);
    }

    #[test]
    fn accepted_steps_never_increase_cost(seed in 0u64..10_000, sigma in 0.0f64..0.5) {
        let inst = suite(seed, 1).remove(0);
        let p = inst.noisy(sigma, &mut rng(seed));
        let mut r = rng(seed + 1);
        let start = Position::new(r.random_range(-5.0..15.0), r.random_range(-5.0..15.0), r.random_range(-2.0..5.0));
        let report = minimize(&p, start, &cfg().with_tolerance(1e-8), 20);
        for w in report.accepted_costs.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn cutoff_iff_not_converged(seed in 0u64..10_000, sigma in 0.0f64..2.0, cutoff in 1usize..25) {
        let inst = suite(seed, 1).remove(0);
        let p = inst.noisy(sigma, &mut rng(seed));
        let config = SolverConfig { max_lm_iterations: cutoff, max_power_iterations: cutoff * 3, ..cfg().with_tolerance(1e-10) };
        let lm = lm_multilaterate(&p, p.centroid(), &config).unwrap();
        prop_assert_eq!(lm.iterations == cutoff, !lm.converged);
        prop_assert!(lm.iterations <= cutoff);
        let gl = larsson_multilaterate(&p, &config).unwrap();
        prop_assert_eq!(gl.iterations == config.max_power_iterations, !gl.converged);
    }
}
