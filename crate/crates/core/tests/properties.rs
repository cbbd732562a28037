use bm_admm::admm::{AdmmSolver, Penalty, SolverOptions};
use bm_admm::certify::dual_certificate;
use bm_admm::curvature::{escape_step, negative_curvature_direction, objective, ProbeOptions};
use bm_admm::io::gset::{parse_gset, serialize_gset, GraphInstance};
use bm_admm::io::random::random_symmetric;
use bm_admm::io::so3::generate_so3;
use bm_admm::linalg::spmm;
use bm_admm::manifold::{
    geodesic_step, manifold_violation, normalize_rows, project, project_block, random_point, tangent_project,
};
use bm_admm::rgd::{rgd_step, RgdOptions};
use bm_admm::{FactorMatrix, Graph, ManifoldSpec, Problem, SparseSymMatrix};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = FactorMatrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| FactorMatrix::from_vec(rows, cols, v).unwrap())
}

/// A random sparse symmetric instance together with three factors of matching shape.
fn instance() -> impl Strategy<Value = (SparseSymMatrix, FactorMatrix, FactorMatrix, FactorMatrix)> {
    (2usize..30, 1usize..6, 0.1f64..1.0, any::<u64>()).prop_flat_map(|(n, r, density, seed)| {
        let c = random_symmetric(n, density, seed).unwrap();
        (Just(c), matrix(n, r), matrix(n, r), matrix(n, r))
    })
}

fn sphere_point() -> impl Strategy<Value = (Problem, FactorMatrix)> {
    (3usize..25, 2usize..6, any::<u64>()).prop_map(|(n, r, seed)| {
        let p = Problem::sphere(random_symmetric(n, 0.6, seed).unwrap(), Some(r)).unwrap();
        let s = random_point(p.manifold(), seed ^ 0x5eed).unwrap();
        (p, s)
    })
}

fn stiefel_point() -> impl Strategy<Value = (ManifoldSpec, FactorMatrix, FactorMatrix)> {
    (1usize..6, 1usize..4, 0usize..3, any::<u64>()).prop_flat_map(|(q, d, extra, seed)| {
        let spec = ManifoldSpec::new(q, d, d + extra).unwrap();
        let s = random_point(&spec, seed).unwrap();
        (Just(spec), Just(s), matrix(q * d, d + extra))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spmm_is_linear((c, u, v, _) in instance(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = spmm(&c, &FactorMatrix::lin_comb(a, &u, b, &v)).unwrap();
        let rhs = FactorMatrix::lin_comb(a, &spmm(&c, &u).unwrap(), b, &spmm(&c, &v).unwrap());
        let scale = 1.0 + c.values().iter().map(|x| x.abs()).sum::<f64>() * (u.norm() + v.norm()) * 3.0;
        prop_assert!(lhs.distance(&rhs) <= 1e-13 * scale);
    }

    #[test]
    fn spmm_is_self_adjoint((c, u, v, _) in instance()) {
        let two = bm_admm::CostNorms::compute(&c).unwrap().two;
        let a = u.dot(&spmm(&c, &v).unwrap());
        let b = spmm(&c, &u).unwrap().dot(&v);
        prop_assert!((a - b).abs() <= 1e-12 * (two * u.norm() * v.norm()).max(1e-300));
    }

    #[test]
    fn normalize_rows_ignores_scale(g in matrix(6, 3), c in 0.01f64..100.0) {
        prop_assume!((0..6).all(|i| g.row(i).iter().any(|x| x.abs() > 1e-6)));
        let a = normalize_rows(&g).unwrap();
        let b = normalize_rows(&g.scaled(c)).unwrap();
        prop_assert!(a.distance(&b) <= 1e-14);
    }

    #[test]
    fn block_projection_is_idempotent((spec, _, g) in stiefel_point()) {
        if let Ok(p) = project(&spec, &g) {
            prop_assert!(manifold_violation(&spec, &p) <= 1e-12);
            let again = project(&spec, &p).unwrap();
            prop_assert!(again.distance(&p) <= 1e-12);
        }
    }

    #[test]
    fn single_block_projection_is_orthonormal(g in matrix(2, 3)) {
        if let Ok(b) = project_block(&g) {
            let spec = ManifoldSpec::new(1, 2, 3).unwrap();
            prop_assert!(manifold_violation(&spec, &b) <= 1e-12);
        }
    }

    #[test]
    fn tangent_projection_is_orthogonal((spec, s, g) in stiefel_point()) {
        let t = tangent_project(&spec, &s, &g).unwrap();
        let rest = FactorMatrix::lin_comb(1.0, &g, -1.0, &t);
        prop_assert!(rest.dot(&t).abs() <= 1e-10 * g.norm().powi(2));
        let tt = tangent_project(&spec, &s, &t).unwrap();
        prop_assert!(tt.distance(&t) <= 1e-12 * (1.0 + t.norm()));
    }

    #[test]
    fn geodesic_stays_on_sphere((p, s) in sphere_point(), t in -10.0f64..10.0, seed in any::<u64>()) {
        let spec = p.manifold();
        let raw = random_point(spec, seed).unwrap();
        let u = tangent_project(spec, &s, &raw).unwrap();
        let moved = geodesic_step(spec, &s, &u, t).unwrap();
        prop_assert!(manifold_violation(spec, &moved) <= 1e-12);
    }

    #[test]
    fn weak_duality_at_any_point((p, s) in sphere_point()) {
        let cert = dual_certificate(&p, &s, 1e-6).unwrap();
        prop_assert!(cert.duality_gap >= -1e-9 * (1.0 + cert.objective.abs()));
    }

    #[test]
    fn escape_step_does_not_increase_f((p, s) in sphere_point()) {
        let eps = 1e-2;
        let rep = negative_curvature_direction(&p, &s, eps, &ProbeOptions::default()).unwrap();
        if rep.lambda_h < -eps / 2.0 {
            let next = escape_step(&p, &s, &rep).unwrap();
            prop_assert!(objective(&p, &next).unwrap() <= objective(&p, &s).unwrap() + 1e-9);
        }
    }

    #[test]
    fn rgd_step_descends_on_manifold((p, s) in sphere_point()) {
        let step = rgd_step(&p, &s, &RgdOptions::default()).unwrap();
        prop_assert!(step.objective <= objective(&p, &s).unwrap() + 1e-12);
        prop_assert!(manifold_violation(p.manifold(), &step.sigma) <= 1e-12);
    }

    #[test]
    fn admm_link_and_floor_hold((p, _) in sphere_point(), seed in 0u64..1000) {
        let opts = SolverOptions { rho: Penalty::Practice, seed, ..Default::default() };
        let mut solver = AdmmSolver::new(&p, opts).unwrap();
        let n = p.n() as f64;
        for _ in 0..50 {
            let rep = solver.step().unwrap();
            prop_assert!(rep.link_residual <= 1e-10 * p.norms().two.max(1e-300) * n.sqrt());
            prop_assert!(rep.lagrangian >= -n * p.norms().inf - 1e-9);
        }
    }

    #[test]
    fn gset_round_trip(n in 2usize..40, raw in prop::collection::vec((0usize..40, 0usize..40, -5i32..6), 0..80)) {
        let edges: Vec<(usize, usize, f64)> =
            raw.into_iter().map(|(i, j, w)| (i % n, j % n, w as f64)).filter(|&(i, j, _)| i != j).collect();
        let inst = GraphInstance { name: "g".into(), graph: Graph::new(n, edges).unwrap() };
        let text = serialize_gset(&inst);
        let back = parse_gset(&text, "g").unwrap();
        prop_assert_eq!(back.graph.edges(), inst.graph.edges());
        prop_assert_eq!(serialize_gset(&back), text);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(n in 2usize..30, raw in prop::collection::vec((0usize..30, 0usize..30, 0.1f64..3.0), 1..60)) {
        let edges: Vec<_> = raw.into_iter().map(|(i, j, w)| (i % n, j % n, w)).collect();
        let g = Graph::new(n, edges).unwrap();
        let c = g.maxcut_cost().unwrap();
        for i in 0..n {
            let sum: f64 = c.row(i).map(|(_, v)| -4.0 * v).sum();
            let deg: f64 = g.edges().iter().filter(|e| e.0 == i || e.1 == i).map(|e| e.2.abs()).sum();
            prop_assert!(sum.abs() <= 1e-12 * deg.max(1.0));
        }
    }

    #[test]
    fn so3_blocks_mirror_exactly(q in 2usize..30, s in 0.0f64..=1.0, seed in any::<u64>()) {
        let c = generate_so3(q, s, seed).unwrap().cost;
        for i in 0..c.n() {
            for (j, v) in c.row(i) {
                prop_assert_eq!(c.get(j, i).map(f64::to_bits), Some(v.to_bits()));
            }
            prop_assert!(c.get(i, i).is_none_or(|v| v == 0.0));
        }
    }
}
