//! Globally optimal multilateration through a 7x7 eigenvalue problem.
//!
//! With anchors centred at their centroid and rotated into the eigenbasis of
//! their scatter matrix, the stationary points of the squared-range cost
//! `sum_i (|p - a_i|^2 - d_i^2)^2` are the real eigenvalues of a companion
//! matrix `C`, and the global optimum belongs to the rightmost one. That
//! eigenvalue is located by shifted power iteration, sharpened by inverse
//! iteration, and the resulting point is polished with a short LM run on the
//! range cost so both multilateration solvers minimize the same objective.

use nalgebra::{Matrix3, SMatrix, SVector, Schur, SymmetricEigen, Vector3};

use super::lm::minimize;
use super::{MultilaterationProblem, SolverConfig, SolverError, SolverResult};

type Mat7 = SMatrix<f64, 7, 7>;
type Vec7 = SVector<f64, 7>;

/// Relative residual `|Sv - lambda v| <= SETTLE * |lambda|` that ends the
/// power phase. The inverse iteration does the fine work.
const POWER_SETTLE: f64 = 1e-4;
const MAX_INVERSE_ITERATIONS: usize = 100;
const POLISH_TOLERANCE: f64 = 1e-12;
const POLISH_ITERATIONS: usize = 50;
/// Anchors whose smallest scatter eigenvalue is below this fraction of the
/// largest are treated as coplanar.
const FLAT: f64 = 1e-12;
const SCHUR_ITERATIONS: usize = 500;
/// Noise can merge two stationary points into a complex pair; pairs this
/// close to the real axis still mark a basin worth polishing.
const NEAR_REAL: f64 = 0.1;

/// The reduced problem in the rotated, centred frame.
struct Reduction {
    /// Eigenvector basis of the anchor scatter matrix.
    q: Matrix3<f64>,
    centroid: Vector3<f64>,
    m: Vector3<f64>,
    bt: Vector3<f64>,
    /// Axis normal to the anchors when they are coplanar.
    flat: Option<usize>,
}

impl Reduction {
    fn new(problem: &MultilaterationProblem) -> Self {
        let n = problem.anchors.len() as f64;
        let centroid = problem.centroid().to_vector();
        let mut a = Matrix3::zeros();
        let mut b = Vector3::zeros();
        let mut r_bar = 0.0;
        for (anchor, d) in problem.anchors.iter().zip(&problem.distances) {
            let s = anchor.to_vector() - centroid;
            let r = s.norm_squared() - d * d;
            a += s * s.transpose() / n;
            b += s * (r / n);
            r_bar += r / n;
        }
        let eig = SymmetricEigen::new(a);
        let spread = eig.eigenvalues.max();
        let flat = eig.eigenvalues.imin();
        let flat = (eig.eigenvalues[flat] <= FLAT * spread).then_some(flat);
        let m = eig.eigenvalues.map(|e| 2.0 * e + r_bar);
        let bt = eig.eigenvectors.transpose() * b;
        Self {
            q: eig.eigenvectors,
            centroid,
            m,
            bt,
            flat,
        }
    }

    /// Coplanar anchors are the hard case: the optimal eigenvalue is `-m_k`
    /// for the normal axis `k`, and the optimum is a pair of mirror images
    /// off the plane. Returns the one on the negative side of the plane
    /// normal (below ceiling anchors), or None when the optimum lies in the
    /// plane and the regular solution applies.
    fn off_plane(&self) -> Option<Vector3<f64>> {
        let k = self.flat?;
        let lambda = -self.m[k];
        let mut y = Vector3::zeros();
        for j in (0..3).filter(|&j| j != k) {
            y[j] = self.bt[j] / guard(self.m[j] + lambda);
        }
        let h2 = lambda - y.norm_squared();
        if !(h2 > 0.0) {
            return None;
        }
        let normal = self.q.column(k);
        let up = [2, 1, 0].into_iter().map(|i| normal[i]).find(|c| c.abs() > 1e-9).unwrap_or(1.0);
        y[k] = -h2.sqrt().copysign(up);
        Some(self.q * y + self.centroid)
    }

    // Eigenvectors have the form [u; y; 1] with y = (M + lambda) u.
    fn companion(&self) -> Mat7 {
        let mut c = Mat7::zeros();
        for k in 0..3 {
            c[(k, k)] = -self.m[k];
            c[(k, k + 3)] = 1.0;
            c[(k + 3, k + 3)] = -self.m[k];
            c[(k + 3, 6)] = self.bt[k];
            c[(6, k)] = self.bt[k];
        }
        c
    }

    /// Secular function whose largest root is the optimal eigenvalue.
    /// `g(s) <= 0` for real `s > -min(M)` means `s` is at or right of it.
    fn secular(&self, s: f64) -> f64 {
        (0..3)
            .map(|k| (self.bt[k] / (self.m[k] + s)).powi(2))
            .sum::<f64>()
            - s
    }

    /// An upper bound on the optimal eigenvalue.
    fn upper_bound(&self) -> f64 {
        (-self.m.min()).max(0.0) + self.bt.norm().powf(2.0 / 3.0)
    }

    fn structured_vector(&self, s: f64) -> Vec7 {
        let mut v = Vec7::zeros();
        for k in 0..3 {
            let den = guard(self.m[k] + s);
            let y = self.bt[k] / den;
            v[k + 3] = y;
            v[k] = y / den;
        }
        v[6] = 1.0;
        v
    }

    /// Points belonging to the real (or nearly real) eigenvalues of `C` other
    /// than `optimal`.
    fn other_stationary_points(&self, c: &Mat7, optimal: f64) -> Vec<Vector3<f64>> {
        let scale = optimal.abs().max(1.0);
        // Plain Schur iteration has no cap and can spin on some inputs.
        let Some(schur) = Schur::try_new(*c, f64::EPSILON, SCHUR_ITERATIONS) else {
            return Vec::new();
        };
        schur
            .complex_eigenvalues()
            .iter()
            .filter(|e| e.im >= 0.0 && e.im <= NEAR_REAL * e.re.abs() && (e.re - optimal).abs() > 1e-6 * scale)
            .map(|e| {
                let y = Vector3::from_fn(|k, _| self.bt[k] / guard(self.m[k] + e.re));
                self.q * y + self.centroid
            })
            .filter(|p| p.iter().all(|x| x.is_finite()))
            .collect()
    }

    fn position(&self, v: &Vec7, lambda: f64) -> Vector3<f64> {
        let scale = v.norm();
        let y = if v[6].abs() > 1e-12 * scale {
            Vector3::new(v[3], v[4], v[5]) / v[6]
        } else {
            // Hard case: the last component vanishes, fall back to the
            // secular form of y.
            Vector3::from_fn(|k, _| self.bt[k] / guard(self.m[k] + lambda))
        };
        self.q * y + self.centroid
    }
}

fn guard(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1e-300_f64.copysign(x)
    } else {
        x
    }
}

struct PowerOutcome {
    vector: Vec7,
    lambda: f64,
    iterations: usize,
    settled: bool,
}

/// Power iteration on `C + sigma I`, where `sigma` puts the rightmost
/// eigenvalue of `C` furthest from the origin.
fn power_phase(c: &Mat7, red: &Reduction, cap: usize) -> PowerOutcome {
    let sigma = (red.m.max() + red.m.min()) / 2.0 + red.bt.norm().powf(2.0 / 3.0);
    let s = c + Mat7::identity() * sigma;
    let mut v = red.structured_vector(red.upper_bound()).normalize();
    let mut lambda = 0.0;
    for iteration in 1..=cap {
        let w = s * v;
        lambda = v.dot(&w);
        if (w - v * lambda).norm() <= POWER_SETTLE * lambda.abs() {
            return PowerOutcome {
                vector: v,
                lambda: lambda - sigma,
                iterations: iteration,
                // Settling on the last allowed iteration still counts as
                // hitting the cap, as for LM.
                settled: iteration < cap,
            };
        }
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        v = w / norm;
    }
    PowerOutcome {
        vector: v,
        lambda: lambda - sigma,
        iterations: cap,
        settled: false,
    }
}

/// Inverse iteration with a shift placed just right of the optimal
/// eigenvalue, so the nearest eigenvalue is the one sought.
fn inverse_phase(c: &Mat7, red: &Reduction, start: Vec7, estimate: f64, tol: f64) -> (Vec7, f64) {
    let upper = red.upper_bound();
    let mut delta = (estimate.abs() * 1e-6).max(1e-12);
    let mut shift = (estimate + delta).min(upper);
    while red.secular(shift) > 0.0 && shift < upper {
        delta *= 4.0;
        shift = (estimate + delta).min(upper);
    }

    let lu = (c - Mat7::identity() * shift).lu();
    let mut v = start.normalize();
    for _ in 0..MAX_INVERSE_ITERATIONS {
        let Some(w) = lu.solve(&v) else {
            // The shift hit the eigenvalue exactly; v is already the vector.
            break;
        };
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let mut next = w / norm;
        if next.dot(&v) < 0.0 {
            next = -next;
        }
        let change = (next - v).norm();
        v = next;
        if change <= tol {
            break;
        }
    }
    let lambda = v.dot(&(c * v));
    (v, lambda)
}

/// Globally optimal range multilateration.
///
/// `iterations` counts power iterations and `converged` is false when the
/// power phase did not settle within `config.max_power_iterations`. A best
/// effort position is returned either way.
pub fn larsson_multilaterate(
    problem: &MultilaterationProblem,
    config: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    problem.validate()?;
    let red = Reduction::new(problem);
    let c = red.companion();
    let power = power_phase(&c, &red, config.max_power_iterations);
    let (v, lambda) = inverse_phase(&c, &red, power.vector, power.lambda, config.tolerance);
    let mut p = red.off_plane().unwrap_or_else(|| red.position(&v, lambda));
    if !p.iter().all(|x| x.is_finite()) {
        p = red.centroid;
    }

    let polish_config = SolverConfig {
        tolerance: POLISH_TOLERANCE,
        ..*config
    };
    // With noise the squared-range optimum can sit in a different basin
    // from the range optimum, so every real stationary point is polished
    // and the best kept. The optimal eigenvalue's point wins ties.
    let mut polished = minimize(problem, p.into(), &polish_config, POLISH_ITERATIONS).result;
    let mut best = problem.objective(&polished.position);
    for start in red.other_stationary_points(&c, lambda) {
        let r = minimize(problem, start.into(), &polish_config, POLISH_ITERATIONS).result;
        let f = problem.objective(&r.position);
        if f < best {
            best = f;
            polished = r;
        }
    }
    Ok(SolverResult {
        position: polished.position,
        converged: power.settled,
        iterations: power.iterations,
        residual_norm: polished.residual_norm,
    })
}
