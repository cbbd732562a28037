//! Checks against dense brute-force computations done with nalgebra.

use bm_admm::certify::{brute_force_maxcut, dual_certificate, oracle_sdp};
use bm_admm::curvature::{hess_apply, negative_curvature_direction, objective, riemannian_grad, ProbeOptions};
use bm_admm::io::random::random_symmetric;
use bm_admm::linalg::{inf_norm, two_norm_estimate};
use bm_admm::manifold::{project_block, random_point};
use bm_admm::{solve, FactorMatrix, Graph, Problem, SolverOptions, SparseSymMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn dense(c: &SparseSymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(c.n(), c.n(), &c.to_dense())
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let qr = gaussian(rng, d, d).qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|x| x.signum()));
    q * signs
}

#[test]
fn norms_match_dense() {
    for seed in 0..20u64 {
        let n = 2 + (seed as usize * 7) % 29;
        let c = random_symmetric(n, if seed % 2 == 0 { 1.0 } else { 0.3 }, seed).unwrap();
        let m = dense(&c);
        let inf = m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
        assert!((inf_norm(&c) - inf).abs() <= 1e-12 * (1.0 + inf));
        let two = SymmetricEigen::new(m).eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let est = two_norm_estimate(&c, 1e-10, 10_000, seed).unwrap();
        assert!((est - two).abs() <= 1e-8 * (1.0 + two), "n={n}: {est} vs {two}");
    }
}

#[test]
fn block_projection_is_nearest_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2usize, 3] {
        for _ in 0..3 {
            let g = gaussian(&mut rng, d, d);
            let p = project_block(&FactorMatrix::from_vec(d, d, g.transpose().as_slice().to_vec()).unwrap()).unwrap();
            let p = DMatrix::from_row_slice(d, d, p.as_slice());
            let best = (&g - &p).norm();
            for _ in 0..100_000 {
                let q = random_orthogonal(&mut rng, d);
                assert!((&g - &q).norm() >= best - 1e-12);
            }
        }
    }
}

/// Orthonormal basis of the tangent space at `sigma` (sphere rows), one column per direction.
fn tangent_basis(sigma: &FactorMatrix) -> Vec<FactorMatrix> {
    let (n, r) = (sigma.rows(), sigma.cols());
    let mut basis = Vec::new();
    for i in 0..n {
        let s = nalgebra::DVector::from_row_slice(sigma.row(i));
        let proj = DMatrix::<f64>::identity(r, r) - &s * s.transpose();
        let eig = SymmetricEigen::new(proj);
        for k in 0..r {
            if eig.eigenvalues[k] > 0.5 {
                let mut u = FactorMatrix::zeros(n, r);
                u.row_mut(i).copy_from_slice(eig.eigenvectors.column(k).as_slice());
                basis.push(u);
            }
        }
    }
    basis
}

fn tangent_hessian_min_eig(p: &Problem, sigma: &FactorMatrix) -> f64 {
    let basis = tangent_basis(sigma);
    let m = basis.len();
    let images: Vec<FactorMatrix> = basis.iter().map(|b| hess_apply(p, sigma, b).unwrap()).collect();
    let h = DMatrix::from_fn(m, m, |a, b| 0.5 * (basis[a].dot(&images[b]) + basis[b].dot(&images[a])));
    SymmetricEigen::new(h).eigenvalues.min()
}

#[test]
fn probe_finds_half_of_most_negative_curvature() {
    let eps = 1e-2;
    let (mut eligible, mut hits) = (0, 0);
    for seed in 0..120u64 {
        let n = 4 + (seed as usize % 37);
        let r = 2 + (seed as usize % 4);
        if n * r > 400 {
            continue;
        }
        let p = Problem::sphere(random_symmetric(n, 0.5, 900 + seed).unwrap(), Some(r)).unwrap();
        let sigma = random_point(p.manifold(), seed).unwrap();
        let lmin = tangent_hessian_min_eig(&p, &sigma);
        if lmin >= -eps {
            continue;
        }
        eligible += 1;
        let rep = negative_curvature_direction(&p, &sigma, eps, &ProbeOptions { seed, ..Default::default() }).unwrap();
        if rep.lambda_h <= lmin / 2.0 + 1e-6 {
            hits += 1;
        }
    }
    assert!(eligible >= 50, "only {eligible} trials had negative curvature");
    assert!(hits * 100 >= eligible * 99, "{hits}/{eligible}");
}

#[test]
fn certified_value_bounds_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..4u64 {
        let n = 10 + 12 * seed as usize;
        let p = Problem::sphere(random_symmetric(n, 0.4, 40 + seed).unwrap(), None).unwrap();
        let out = solve(&p, &SolverOptions { seed, ..Default::default() }).unwrap();
        let cert = dual_certificate(&p, out.state.sigma_tilde(), 1e-6).unwrap();
        assert!(cert.certified, "seed {seed}");
        for _ in 0..1000 {
            let width = rng.gen_range(1..=n);
            let other = Problem::sphere(p.cost().clone(), Some(width)).unwrap();
            let s = random_point(other.manifold(), rng.gen()).unwrap();
            assert!(objective(&other, &s).unwrap() >= cert.objective - cert.duality_gap - 1e-6);
        }
    }
}

#[test]
fn converged_points_are_stationary() {
    for seed in 0..6u64 {
        let n = 30 + 20 * seed as usize;
        let p = Problem::sphere(random_symmetric(n, 0.3, 70 + seed).unwrap(), None).unwrap();
        let opts = SolverOptions { seed, ..Default::default() };
        let out = solve(&p, &opts).unwrap();
        assert_eq!(out.status, bm_admm::SolveStatus::Converged);
        let sigma = out.state.sigma_tilde();
        let grad = riemannian_grad(&p, sigma).unwrap().norm();
        assert!(grad <= 10.0 * opts.tol_primal * out.rho * (n as f64).sqrt(), "seed {seed}: grad {grad}");
        let cert = dual_certificate(&p, sigma, 1e-6).unwrap();
        assert!(cert.duality_gap.abs() <= 10.0 * opts.tol_primal, "seed {seed}: gap {}", cert.duality_gap);
    }
}

#[test]
fn relaxation_dominates_max_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for trial in 0..25u64 {
        let n = rng.gen_range(2..=16);
        let p_edge = rng.gen_range(0.2..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p_edge) {
                    edges.push((i, j, if trial % 3 == 0 { rng.gen_range(0.5..2.0) } else { 1.0 }));
                }
            }
        }
        let g = Graph::new(n, edges).unwrap();
        let (cut, _) = brute_force_maxcut(&g).unwrap();
        let sdp = oracle_sdp(&g.maxcut_cost().unwrap(), 1, 2, trial).unwrap();
        assert!(sdp.certified());
        assert!(-sdp.value >= cut - 1e-6, "n={n}: relaxation {} < cut {cut}", -sdp.value);
        assert!(-4.0 * sdp.value >= cut - 1e-6);
    }
}
