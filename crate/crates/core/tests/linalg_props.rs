use cutiga::assembly::{assemble, basis_energy_norms, MethodParams, SystemMatrices, Variant, ZeroData};
use cutiga::geometry::make_unit_circle_domain;
use cutiga::harness::ManufacturedProblem;
use cutiga::linalg::{
    basis_removal, dense_extremes, relative_residual, restrict_system, solve_spd, sym_eigen_extremes, CsrMatrix,
};
use cutiga::TensorSplineSpace;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)].powi(2)).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

#[test]
fn extremes_match_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..50 {
        let n = 1 + k * 59 / 49;
        let d = random_symmetric(&mut rng, n);
        let ev = jacobi_eigenvalues(d.clone());
        let scale = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let got = sym_eigen_extremes(&CsrMatrix::from_dense(&d), 4000).unwrap();
        assert!((got.min - ev[0]).abs() <= 1e-9 * scale, "n = {n}");
        assert!((got.max - ev[n - 1]).abs() <= 1e-9 * scale, "n = {n}");
    }
}

#[test]
fn lanczos_path_agrees_with_dense() {
    let dom = make_unit_circle_domain(0.13, 0.42, 4096).unwrap();
    let space = TensorSplineSpace::new(&dom, 2).unwrap();
    let params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
    let sys = assemble(&space, &dom, &params, &ZeroData).unwrap();
    let norms = basis_energy_norms(&space, &dom, &params).unwrap();
    let rep = basis_removal(&norms, 0.01, dom.grid().h, 2);
    let red = restrict_system(&sys, &rep).unwrap();
    let dense = dense_extremes(&red.a.to_dense());
    let iter = sym_eigen_extremes(&red.a, 10).unwrap();
    assert!((iter.max - dense.max).abs() <= 1e-8 * dense.max);
    assert!((iter.min - dense.min).abs() <= 1e-6 * dense.min, "{iter:?} vs {dense:?}");
}

fn circle_system(t: f64) -> (SystemMatrices, Vec<f64>, f64) {
    let dom = make_unit_circle_domain(0.26, t, 4096).unwrap();
    let space = TensorSplineSpace::new(&dom, 2).unwrap();
    let params = MethodParams::new(dom.grid().h, 0.1, Variant::LsStabilized);
    let sys = assemble(&space, &dom, &params, &ManufacturedProblem).unwrap();
    let norms = basis_energy_norms(&space, &dom, &params).unwrap();
    (sys, norms, dom.grid().h)
}

#[test]
fn removal_interlaces_spectrum() {
    for k in 0..6 {
        let (sys, norms, h) = circle_system(k as f64 / 5.0);
        // a generous constant so that several functions go
        let rep = basis_removal(&norms, 1.0, h, 2);
        assert!(!rep.removed.is_empty());
        let full = dense_extremes(&sys.a.to_dense());
        let red = restrict_system(&sys, &rep).unwrap();
        let sub = dense_extremes(&red.a.to_dense());
        assert!(sub.max <= full.max * (1.0 + 1e-12));
        assert!(sub.min >= full.min - 1e-12 * full.max);
    }
}

#[test]
fn restricted_solve_reembeds() {
    let (sys, norms, h) = circle_system(0.61);
    let rep = basis_removal(&norms, 0.01, h, 2);
    let red = restrict_system(&sys, &rep).unwrap();
    let x = solve_spd(&red.a, &red.b).unwrap();
    assert!(relative_residual(&red.a, &x, &red.b) < 1e-10);
    let full = red.embed(&x);
    assert_eq!(full.len(), sys.n_dofs());
    for &i in &rep.removed {
        assert_eq!(full[i], 0.0);
    }
    for (k, &i) in rep.kept.iter().enumerate() {
        assert_eq!(full[i], x[k]);
    }
}

#[test]
fn random_spd_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let m = DMatrix::from_fn(50, 50, |_, _| rng.gen_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(50, 50) * 0.5;
        let x_true: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let csr = CsrMatrix::from_dense(&a);
        let b = csr.mul_vec(&x_true);
        let x = solve_spd(&csr, &b).unwrap();
        assert!(relative_residual(&csr, &x, &b) < 1e-13);
        let err = x.iter().zip(&x_true).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }
}

proptest! {
    #[test]
    fn removal_prefix_rule(norms in prop::collection::vec(0.0f64..1e-3, 1..60), c in 0.0f64..0.2, h in 0.01f64..0.5) {
        let rep = basis_removal(&norms, c, h, 2);
        let tol2 = (c * h * h).powi(2);
        let removed: f64 = rep.removed.iter().map(|&i| norms[i] * norms[i]).sum();
        prop_assert!(removed <= tol2);
        prop_assert_eq!(rep.removed.len() + rep.kept.len(), norms.len());
        // every removed norm is at most every kept norm
        let max_removed = rep.removed.iter().map(|&i| norms[i]).fold(f64::NEG_INFINITY, f64::max);
        let min_kept = rep.kept.iter().map(|&i| norms[i]).fold(f64::INFINITY, f64::min);
        prop_assert!(max_removed <= min_kept);
        // the next candidate would break the bound
        let next = rep
            .kept
            .iter()
            .copied()
            .min_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));
        if let Some(i) = next {
            prop_assert!(removed + norms[i] * norms[i] > tol2);
        }
    }
}
