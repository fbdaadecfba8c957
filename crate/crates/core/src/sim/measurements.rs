//! Synthetic ranging data for successful exchanges.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::Position;
use crate::solvers::{tdoa_model, MultilaterationProblem, TdoaProblem};

/// Geometry of one successful exchange.
#[derive(Debug, Clone)]
pub struct Exchange {
    pub initiator: Position,
    /// Positions of the anchors that responded.
    pub responders: Vec<Position>,
    /// Passive listeners: true position and the indices into `responders`
    /// they heard.
    pub listeners: Vec<(Position, Vec<usize>)>,
}

#[derive(Debug, Clone)]
pub struct Measurements {
    pub active: MultilaterationProblem,
    /// One problem per listener, in listener order. The initiator field holds
    /// the true initiator position; callers substitute an estimate when
    /// modelling the broadcast of the active tag's own fix.
    pub passive: Vec<TdoaProblem>,
}

/// Ranges and range differences with zero-mean Gaussian noise of standard
/// deviation `sigma` (metres). Ranges are clamped at zero.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    exchange: &Exchange,
    sigma: f64,
    rng: &mut R,
) -> Measurements {
    let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let noise = |rng: &mut R| normal.as_ref().map_or(0.0, |n| n.sample(rng));
    let q = exchange.initiator;
    let distances = exchange
        .responders
        .iter()
        .map(|a| (a.distance(&q) + noise(rng)).max(0.0))
        .collect();
    let active = MultilaterationProblem::new(exchange.responders.clone(), distances);
    let passive = exchange
        .listeners
        .iter()
        .map(|(p, heard)| {
            let anchors: Vec<Position> = heard.iter().map(|&i| exchange.responders[i]).collect();
            let m = anchors
                .iter()
                .map(|a| tdoa_model(a, &q, p) + noise(rng))
                .collect();
            TdoaProblem::new(q, anchors, m)
        })
        .collect();
    Measurements { active, passive }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noise_free_data_is_exact() {
        let responders = vec![
            Position::new(0.0, 0.0, 2.5),
            Position::new(9.0, 0.0, 2.5),
            Position::new(0.0, 9.0, 2.5),
            Position::new(9.0, 9.0, 2.5),
            Position::new(4.5, 4.5, 0.0),
        ];
        let q = Position::new(3.0, 4.0, 1.0);
        let p = Position::new(6.0, 2.0, 1.0);
        let ex = Exchange {
            initiator: q,
            responders: responders.clone(),
            listeners: vec![(p, vec![0, 1, 2, 3, 4])],
        };
        let m = synthesize_measurements(&ex, 0.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(m.active, MultilaterationProblem::exact(responders.clone(), &q));
        assert!(m.passive[0].objective(&p) < 1e-24);
    }
}
