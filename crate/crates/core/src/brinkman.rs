//! Discrete Brinkman equation `-mu Lap_h W + W = p` and the face velocities
//! derived from its solution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{face_gradient, laplacian, BoundaryCondition, FaceVelocities, GridSpec, ScalarField};

/// Largest grid the dense oracle will assemble (`n^2 x n^2` matrix).
pub const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticSolverConfig {
    /// Stop once `|A W - p|_2 <= rel_tolerance * |p|_2`.
    pub rel_tolerance: f64,
    /// `None` means `10 * n_cells^2`.
    pub max_iterations: Option<usize>,
}

impl Default for EllipticSolverConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-12,
            max_iterations: None,
        }
    }
}

impl EllipticSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::Config(format!(
                "elliptic rel_tolerance must lie in (0, 1), got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("elliptic max_iterations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn iteration_limit(&self, grid: &GridSpec) -> usize {
        self.max_iterations.unwrap_or(10 * grid.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub w: ScalarField,
    pub iterations: usize,
    /// Euclidean norm of the final residual `p - A W`.
    pub final_residual: f64,
}

/// `-mu Lap_h W + W`.
pub fn apply_helmholtz(w: &ScalarField, mu: f64, bc: BoundaryCondition) -> ScalarField {
    laplacian(w, bc).zip_map(w, |lap, v| -mu * lap + v)
}

fn apply_into(x: &[f64], out: &mut [f64], grid: &GridSpec, mu: f64, bc: BoundaryCondition) {
    let n = grid.n_cells();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let coef = mu * inv_h2;
    for j in 0..n {
        let jm = bc.ghost_index(j as isize - 1, n) * n;
        let jp = bc.ghost_index(j as isize + 1, n) * n;
        let row = j * n;
        for i in 0..n {
            let im = bc.ghost_index(i as isize - 1, n);
            let ip = bc.ghost_index(i as isize + 1, n);
            let c = x[row + i];
            let sum = x[row + ip] + x[row + im] + x[jp + i] + x[jm + i] - 4.0 * c;
            out[row + i] = c - coef * sum;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the Brinkman system from a zero initial guess.
pub fn solve_brinkman(
    p: &ScalarField,
    mu: f64,
    bc: BoundaryCondition,
    cfg: &EllipticSolverConfig,
) -> Result<EllipticSolution> {
    solve_brinkman_from(p, mu, bc, cfg, &ScalarField::zeros(*p.grid()))
}

/// Conjugate gradients on the symmetric positive definite operator
/// `I - mu Lap_h`, starting from `guess`.
pub fn solve_brinkman_from(
    p: &ScalarField,
    mu: f64,
    bc: BoundaryCondition,
    cfg: &EllipticSolverConfig,
    guess: &ScalarField,
) -> Result<EllipticSolution> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    debug_assert_eq!(p.grid(), guess.grid());
    let grid = *p.grid();
    let len = grid.len();
    let limit = cfg.iteration_limit(&grid);
    let target = (cfg.rel_tolerance * p.norm_l2()).max(1e-300 * grid.n_cells() as f64);

    let mut x = guess.values().to_vec();
    let mut ax = vec![0.0; len];
    apply_into(&x, &mut ax, &grid, mu, bc);
    let mut r: Vec<f64> = p.values().iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut rr = dot(&r, &r);
    let mut d = r.clone();
    let mut ad = ax;
    let mut iterations = 0;

    while rr.sqrt() > target {
        if iterations == limit {
            return Err(Error::IterationLimitExceeded {
                iterations,
                residual: rr.sqrt(),
            });
        }
        apply_into(&d, &mut ad, &grid, mu, bc);
        let alpha = rr / dot(&d, &ad);
        for k in 0..len {
            x[k] += alpha * d[k];
            r[k] -= alpha * ad[k];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for k in 0..len {
            d[k] = r[k] + beta * d[k];
        }
        rr = rr_next;
        iterations += 1;
    }

    // recompute the true residual so the reported value is not the recursive estimate
    let w = ScalarField::from_values(grid, x)?;
    let mut ax = vec![0.0; len];
    apply_into(w.values(), &mut ax, &grid, mu, bc);
    let final_residual = p
        .values()
        .iter()
        .zip(&ax)
        .map(|(b, a)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt();
    if !w.is_finite() {
        return Err(Error::IterationLimitExceeded {
            iterations,
            residual: f64::NAN,
        });
    }
    Ok(EllipticSolution {
        w,
        iterations,
        final_residual,
    })
}

/// Direct dense LU solve of the same system, assembled column by column from
/// [`apply_helmholtz`]. Intended as a test oracle for small grids.
pub fn solve_brinkman_dense(p: &ScalarField, mu: f64, bc: BoundaryCondition) -> Result<ScalarField> {
    let grid = *p.grid();
    if grid.n_cells() > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            n_cells: grid.n_cells(),
            limit: DENSE_LIMIT,
        });
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
    }
    let len = grid.len();
    let mut matrix = DMatrix::<f64>::zeros(len, len);
    let mut unit = ScalarField::zeros(grid);
    for col in 0..len {
        unit.values_mut()[col] = 1.0;
        let image = apply_helmholtz(&unit, mu, bc);
        matrix.column_mut(col).copy_from_slice(image.values());
        unit.values_mut()[col] = 0.0;
    }
    let rhs = DVector::from_column_slice(p.values());
    let solution = matrix.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    ScalarField::from_values(grid, solution.as_slice().to_vec())
}

/// `u_{i+1/2,j} = D_1^+ W_{i,j}` and `v_{i,j+1/2} = D_2^+ W_{i,j}`.
pub fn face_velocities(w: &ScalarField, bc: BoundaryCondition) -> FaceVelocities {
    face_gradient(w, bc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Neumann, BoundaryCondition::Periodic];

    #[test]
    fn helmholtz_of_constant_is_identity() {
        let g = GridSpec::new(0.0, 1.0, 6).unwrap();
        let c = ScalarField::constant(g, 3.5);
        for bc in BCS {
            assert_eq!(apply_helmholtz(&c, 2.0, bc), c);
        }
    }

    #[test]
    fn helmholtz_of_delta() {
        let g = GridSpec::new(0.0, 3.0, 3).unwrap();
        let mut d = ScalarField::zeros(g);
        d[(1, 1)] = 1.0;
        let out = apply_helmholtz(&d, 1.0, BoundaryCondition::Periodic);
        let expected = [[0.0, -1.0, 0.0], [-1.0, 5.0, -1.0], [0.0, -1.0, 0.0]];
        for j in 0..3 {
            for i in 0..3 {
                assert_eq!(out[(i, j)], expected[j][i]);
            }
        }
    }

    #[test]
    fn helmholtz_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = GridSpec::new(0.0, 1.0, 7).unwrap();
        for bc in BCS {
            let w1 = ScalarField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let w2 = ScalarField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let (a, b) = (0.7, -1.3);
            let lhs = apply_helmholtz(&w1.zip_map(&w2, |x, y| a * x + b * y), 0.4, bc);
            let rhs = apply_helmholtz(&w1, 0.4, bc)
                .zip_map(&apply_helmholtz(&w2, 0.4, bc), |x, y| a * x + b * y);
            let diff = lhs.zip_map(&rhs, |x, y| x - y).max_abs();
            assert!(diff < 1e-12 * rhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn matrix_free_apply_matches_field_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = GridSpec::new(-1.0, 2.0, 9).unwrap();
        for bc in BCS {
            let w = ScalarField::from_fn(g, |_, _| rng.gen_range(-1.0..1.0));
            let mut out = vec![0.0; g.len()];
            apply_into(w.values(), &mut out, &g, 0.3, bc);
            let reference = apply_helmholtz(&w, 0.3, bc);
            for (a, b) in out.iter().zip(reference.values()) {
                assert!((a - b).abs() < 1e-12 * reference.max_abs());
            }
        }
    }

    #[test]
    fn constant_pressure_gives_constant_potential() {
        let g = GridSpec::new(0.0, 1.0, 8).unwrap();
        let p = ScalarField::constant(g, 1.0);
        for bc in BCS {
            for mu in [0.1, 1.0, 10.0] {
                let sol = solve_brinkman(&p, mu, bc, &EllipticSolverConfig::default()).unwrap();
                assert!(sol.w.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
                let dense = solve_brinkman_dense(&p, mu, bc).unwrap();
                assert!(dense.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn iterative_matches_dense_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [12, 16] {
            let g = GridSpec::new(0.0, 1.0, n).unwrap();
            for bc in BCS {
                let p = ScalarField::from_fn(g, |_, _| rng.gen_range(0.0..1.0));
                let it = solve_brinkman(&p, 1.0, bc, &EllipticSolverConfig::default()).unwrap();
                let dense = solve_brinkman_dense(&p, 1.0, bc).unwrap();
                let err = it.w.zip_map(&dense, |a, b| a - b).max_abs();
                assert!(err < 1e-10, "n={n} {bc}: {err:e}");
                assert!(it.final_residual <= 1e-12 * p.norm_l2());
                let resid = apply_helmholtz(&dense, 1.0, bc).zip_map(&p, |a, b| a - b).norm_l2();
                assert!(resid <= 1e-12 * p.norm_l2(), "{resid:e}");
            }
        }
    }

    #[test]
    fn potential_respects_maximum_principle() {
        let g = GridSpec::new(-1.0, 1.0, 16).unwrap();
        let p = ScalarField::from_fn(g, |i, j| {
            let (x, y) = (g.midpoint(i), g.midpoint(j));
            (-8.0 * (x * x + y * y)).exp()
        });
        for bc in BCS {
            let sol = solve_brinkman(&p, 1.0, bc, &EllipticSolverConfig::default()).unwrap();
            assert!(sol.w.min() >= p.min() - 1e-12);
            assert!(sol.w.max() <= p.max() + 1e-12);
        }
    }

    #[test]
    fn warm_start_at_solution_takes_no_iterations() {
        let g = GridSpec::new(0.0, 1.0, 8).unwrap();
        let p = ScalarField::from_fn(g, |i, j| (i * j) as f64 / 49.0);
        let cfg = EllipticSolverConfig::default();
        let first = solve_brinkman(&p, 1.0, BoundaryCondition::Neumann, &cfg).unwrap();
        let again = solve_brinkman_from(&p, 1.0, BoundaryCondition::Neumann, &cfg, &first.w).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn iteration_limit_is_an_error() {
        let g = GridSpec::new(0.0, 1.0, 16).unwrap();
        let p = ScalarField::from_fn(g, |i, j| ((i + 3 * j) % 5) as f64);
        let cfg = EllipticSolverConfig {
            rel_tolerance: 1e-12,
            max_iterations: Some(2),
        };
        let err = solve_brinkman(&p, 10.0, BoundaryCondition::Periodic, &cfg).unwrap_err();
        assert!(matches!(err, Error::IterationLimitExceeded { iterations: 2, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn zero_pressure_is_solved_immediately() {
        let g = GridSpec::new(0.0, 1.0, 4).unwrap();
        let sol = solve_brinkman(
            &ScalarField::zeros(g),
            1.0,
            BoundaryCondition::Neumann,
            &EllipticSolverConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.w.max_abs(), 0.0);
    }

    #[test]
    fn dense_refuses_large_grids() {
        let g = GridSpec::new(0.0, 1.0, DENSE_LIMIT + 1).unwrap();
        let err = solve_brinkman_dense(&ScalarField::zeros(g), 1.0, BoundaryCondition::Neumann);
        assert!(matches!(err, Err(Error::DenseTooLarge { .. })));
    }

    #[test]
    fn face_velocities_of_simple_potentials() {
        let g = GridSpec::new(0.0, 2.0, 4).unwrap();
        let c = ScalarField::constant(g, 1.2);
        assert_eq!(face_velocities(&c, BoundaryCondition::Periodic).max_abs(), 0.0);

        let ramp = ScalarField::from_fn(g, |i, _| (i + 1) as f64 * g.h());
        let per = face_velocities(&ramp, BoundaryCondition::Periodic);
        for j in 0..4 {
            for f in 1..4 {
                assert!((per.x_face(f, j) - 1.0).abs() < 1e-15);
            }
        }
        let neu = face_velocities(&ramp, BoundaryCondition::Neumann);
        for j in 0..4 {
            assert_eq!(neu.x_face(0, j), 0.0);
            assert_eq!(neu.x_face(4, j), 0.0);
        }
    }
}
