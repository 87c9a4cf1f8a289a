use super::*;
use crate::numerics::{sample_gaussian_vector, CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-8;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn scalar_sdp() {
    let mut p = ConicProblem::new();
    let x = p.add_psd_block("X", 1);
    p.set_objective_matrix(x, CMatrix::identity(1));
    let mut k = p.constraint("tr", Sense::Ge, 1.0);
    k.add_matrix(x, &CMatrix::identity(1), 1.0);
    p.push(k);
    let s = solve(&p, TOL, 200).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective_value - 1.0).abs() < 1e-7);
    assert!((s.psd("X").unwrap()[(0, 0)].re - 1.0).abs() < 1e-7);
}

#[test]
fn lp_box() {
    let mut p = ConicProblem::new();
    let y = p.add_scalar("y", Some(3.0), None);
    p.set_objective_scalar(y, 1.0);
    let s = solve(&p, TOL, 200).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.scalar("y").unwrap() - 3.0).abs() < 1e-7);
}

/// Pure states `½(I + r·σ)` on a θ/φ grid; linear objectives attain their
/// minimum over density matrices at pure states.
fn bloch_grid_min(cm: &CMatrix, step: f64) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let nt = (core::f64::consts::PI / step).ceil() as usize;
    let np = (2.0 * core::f64::consts::PI / step).ceil() as usize;
    let (a, d) = (cm[(0, 0)].re, cm[(1, 1)].re);
    let b = cm[(0, 1)];
    for i in 0..=nt {
        let th = (i as f64 * step).min(core::f64::consts::PI);
        let (st, ct) = th.sin_cos();
        for j in 0..np {
            let ph = j as f64 * step;
            let (sp, cp) = ph.sin_cos();
            let (rx, ry, rz) = (st * cp, st * sp, ct);
            // Tr(C ρ) with ρ = ½[[1+rz, rx - i ry], [rx + i ry, 1 - rz]]
            let v = 0.5 * (a * (1.0 + rz) + d * (1.0 - rz))
                + (b * C64::new(rx, ry)).re;
            if v < best.0 {
                best = (v, th, ph);
            }
        }
    }
    best
}

#[test]
fn two_by_two_density_matrix() {
    let cm = CMatrix::diag_real(&[1.0, 2.0]);
    let mut p = ConicProblem::new();
    let x = p.add_psd_block("X", 2);
    p.set_objective_matrix(x, cm.clone());
    let mut k = p.constraint("unit trace", Sense::Eq, 1.0);
    k.add_matrix(x, &CMatrix::identity(2), 1.0);
    p.push(k);
    let s = solve(&p, TOL, 200).unwrap();
    let (oracle, _, _) = bloch_grid_min(&cm, 1e-3);
    assert!((oracle - 1.0).abs() < 1e-9);
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective_value - oracle).abs() < 1e-6);
    let xs = s.psd("X").unwrap();
    let e1 = CMatrix::outer(&[c(1.0), c(0.0)]);
    assert!((xs - &e1).max_abs() < 1e-6);
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| sample_gaussian_vector(1, rng)[0]);
    (&g + &g.adjoint()).scaled(0.5)
}

/// Closed-form smallest eigenvalue of a 2x2 Hermitian matrix.
fn lambda_min_2x2(m: &CMatrix) -> f64 {
    let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
    let b = m[(0, 1)].norm();
    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
}

/// `min Tr(C1 X1) + Tr(C2 X2)` with `Tr X1 + Tr X2 = 1` equals the smaller
/// of the two minimum eigenvalues.
#[test]
fn random_two_block_eigenvalue_sdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let c1 = random_hermitian(2, &mut rng);
        let c2 = random_hermitian(2, &mut rng);
        let mut p = ConicProblem::new();
        let b1 = p.add_psd_block("X1", 2);
        let b2 = p.add_psd_block("X2", 2);
        p.set_objective_matrix(b1, c1.clone());
        p.set_objective_matrix(b2, c2.clone());
        let mut k = p.constraint("budget", Sense::Eq, 1.0);
        k.add_matrix(b1, &CMatrix::identity(2), 1.0);
        k.add_matrix(b2, &CMatrix::identity(2), 1.0);
        p.push(k);
        let s = solve(&p, TOL, 200).unwrap();
        let closed = lambda_min_2x2(&c1).min(lambda_min_2x2(&c2));
        let grid = bloch_grid_min(&c1, 1e-3).0.min(bloch_grid_min(&c2, 1e-3).0);
        assert!((closed - grid).abs() < 1e-5);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - closed).abs() < 1e-5, "{} vs {closed}", s.objective_value);
    }
}

/// `min Tr X1 + Tr X2` with `a1ᴴX1a1 ≥ r1`, `a2ᴴX2a2 ≥ r2` has optimum
/// `r1/‖a1‖² + r2/‖a2‖²` at `X_i = r_i a_i a_iᴴ / ‖a_i‖⁴`.
#[test]
fn random_two_block_matched_filter_sdps() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let n = rng.random_range(2..=4);
        let a1 = sample_gaussian_vector(n, &mut rng);
        let a2 = sample_gaussian_vector(n, &mut rng);
        let r1: f64 = rng.random_range(0.5..2.0);
        let r2: f64 = rng.random_range(0.5..2.0);
        let mut p = ConicProblem::new();
        let b1 = p.add_psd_block("X1", n);
        let b2 = p.add_psd_block("X2", n);
        p.set_objective_matrix(b1, CMatrix::identity(n));
        p.set_objective_matrix(b2, CMatrix::identity(n));
        let mut k1 = p.constraint("gain1", Sense::Ge, r1);
        k1.add_outer(b1, &a1, 1.0);
        p.push(k1);
        let mut k2 = p.constraint("gain2", Sense::Ge, r2);
        k2.add_outer(b2, &a2, 1.0);
        p.push(k2);
        let s = solve(&p, TOL, 200).unwrap();
        let n1 = crate::numerics::norm_sqr(&a1);
        let n2 = crate::numerics::norm_sqr(&a2);
        let want = r1 / n1 + r2 / n2;
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - want).abs() < 1e-5 * want.max(1.0));
        let x1 = CMatrix::outer(&a1).scaled(r1 / (n1 * n1));
        assert!((s.psd("X1").unwrap() - &x1).max_abs() < 1e-5);
    }
}

#[test]
fn lp_with_bounds_and_free_variable() {
    // min y1 + y2 - z  s.t.  y1 + 2 y2 ≥ 4,  z ≤ 5 (upper only),  y ∈ [0, 3],  w free, w = y1 - 1
    let mut p = ConicProblem::new();
    let y1 = p.add_scalar("y1", Some(0.0), Some(3.0));
    let y2 = p.add_scalar("y2", Some(0.0), Some(3.0));
    let z = p.add_scalar("z", None, Some(5.0));
    let w = p.add_scalar("w", None, None);
    p.set_objective_scalar(y1, 1.0);
    p.set_objective_scalar(y2, 1.0);
    p.set_objective_scalar(z, -1.0);
    let mut k = p.constraint("cover", Sense::Ge, 4.0);
    k.add_scalar(y1, 1.0);
    k.add_scalar(y2, 2.0);
    p.push(k);
    let mut k = p.constraint("link", Sense::Eq, -1.0);
    k.add_scalar(w, 1.0);
    k.add_scalar(y1, -1.0);
    p.push(k);
    let s = solve(&p, TOL, 200).unwrap();
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective_value - (2.0 - 5.0)).abs() < 1e-6);
    assert!((s.scalar("y2").unwrap() - 2.0).abs() < 1e-6);
    assert!((s.scalar("w").unwrap() + 1.0).abs() < 1e-6);
    assert!(s.max_constraint_violation < 1e-6);
}

#[test]
fn infeasible_problems_are_flagged() {
    let mut p = ConicProblem::new();
    let x = p.add_psd_block("X", 2);
    p.set_objective_matrix(x, CMatrix::identity(2));
    let mut k = p.constraint("neg", Sense::Le, -1.0);
    k.add_matrix(x, &CMatrix::identity(2), 1.0);
    p.push(k);
    assert_eq!(solve(&p, TOL, 200).unwrap().status, SolveStatus::Infeasible);

    let mut p = ConicProblem::new();
    let y = p.add_scalar("y", Some(0.0), None);
    p.set_objective_scalar(y, 1.0);
    let mut k = p.constraint("lo", Sense::Ge, 2.0);
    k.add_scalar(y, 1.0);
    p.push(k);
    let mut k = p.constraint("hi", Sense::Le, 1.0);
    k.add_scalar(y, 1.0);
    p.push(k);
    assert_eq!(solve(&p, TOL, 200).unwrap().status, SolveStatus::Infeasible);

    // two mutually interfering links that would each need a gain above one
    let mut p = ConicProblem::new();
    let x = p.add_scalar("x1", Some(0.0), None);
    let y = p.add_scalar("x2", Some(0.0), None);
    p.set_objective_scalar(x, 1.0);
    p.set_objective_scalar(y, 1.0);
    let mut k = p.constraint("sinr1", Sense::Ge, 1.0);
    k.add_scalar(x, 1.0);
    k.add_scalar(y, -1.0);
    p.push(k);
    let mut k = p.constraint("sinr2", Sense::Ge, 1.0);
    k.add_scalar(y, 1.0);
    k.add_scalar(x, -1.0);
    p.push(k);
    assert_eq!(solve(&p, TOL, 200).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn errors() {
    let mut p = ConicProblem::new();
    let x = p.add_psd_block("X", 2);
    let mut k = p.constraint("bad", Sense::Ge, 1.0);
    k.coeff_matrices[x] = Some(CMatrix::identity(3));
    p.push(k);
    assert!(matches!(solve(&p, TOL, 200), Err(ConicError::DimensionMismatch(_))));

    let mut p = ConicProblem::new();
    let x = p.add_psd_block("X", 2);
    let mut a = CMatrix::identity(2);
    a[(0, 1)] = c(1.0);
    let mut k = p.constraint("asym", Sense::Ge, 1.0);
    k.coeff_matrices[x] = Some(a);
    p.push(k);
    assert!(matches!(solve(&p, TOL, 200), Err(ConicError::NotHermitian(_))));

    assert!(matches!(
        solve(&ConicProblem::new(), 1e-2, 10),
        Err(ConicError::InvalidTolerance(_))
    ));
}

fn beam_problem(rng: &mut ChaCha8Rng, obj_scale: f64) -> (ConicProblem, Vec<CMatrix>) {
    let n = 3;
    let h1 = sample_gaussian_vector(n, rng);
    let h2 = sample_gaussian_vector(n, rng);
    let mut p = ConicProblem::new();
    let b1 = p.add_psd_block("W1", n);
    let b2 = p.add_psd_block("W2", n);
    p.set_objective_matrix(b1, CMatrix::identity(n).scaled(obj_scale));
    p.set_objective_matrix(b2, CMatrix::identity(n).scaled(obj_scale));
    let g = 0.5;
    let mut k = p.constraint("sinr1", Sense::Ge, g);
    k.add_outer(b1, &h1, 1.0);
    k.add_outer(b2, &h1, -g);
    p.push(k);
    let mut k = p.constraint("sinr2", Sense::Ge, g);
    k.add_outer(b2, &h2, 1.0);
    k.add_outer(b1, &h2, -g);
    p.push(k);
    // zero-forcing directions give a feasible point
    let zf = |h: &[C64], other: &[C64]| {
        let proj = crate::numerics::dot(other, h) / crate::numerics::norm_sqr(other);
        let v: Vec<C64> = h.iter().zip(other).map(|(a, b)| a - b * proj).collect();
        let gain = crate::numerics::dot(h, &v).norm_sqr();
        CMatrix::outer(&v).scaled(g / gain)
    };
    let feasible = vec![zf(&h1, &h2), zf(&h2, &h1)];
    (p, feasible)
}

#[test]
fn weak_duality_against_feasible_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let (p, feas) = beam_problem(&mut rng, 1.0);
        assert!(p.max_violation(&feas, &[]) < 1e-10);
        let s = solve(&p, TOL, 200).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        let at_feasible = p.objective(&feas, &[]);
        assert!(s.objective_value <= at_feasible + TOL * (1.0 + at_feasible.abs()));
        assert!(s.min_relative_eigenvalue() >= -1e-7);
        assert!(s.max_constraint_violation <= 1e-6);
    }
}

#[test]
fn argmin_invariant_to_objective_scaling() {
    let tol = 1e-8;
    for seed in 0..5 {
        let (p1, _) = beam_problem(&mut ChaCha8Rng::seed_from_u64(seed), 1.0);
        let (p2, _) = beam_problem(&mut ChaCha8Rng::seed_from_u64(seed), 37.5);
        let s1 = solve(&p1, tol, 200).unwrap();
        let s2 = solve(&p2, tol, 200).unwrap();
        for (a, b) in s1.blocks().iter().zip(s2.blocks()) {
            assert!((a - &b).max_abs() <= 10.0 * tol * (1.0 + a.max_abs()));
        }
    }
}

#[test]
fn dump_lists_blocks_and_triplets() {
    let mut p = ConicProblem::new();
    let x = p.add_psd_block("W", 2);
    let y = p.add_scalar("C", Some(0.0), None);
    let mut k = p.constraint("row0", Sense::Ge, 1.5);
    k.add_matrix(x, &CMatrix::identity(2), 2.0);
    k.add_scalar(y, -1.0);
    p.push(k);
    let text = p.dump();
    assert!(text.contains("block W 2"));
    assert!(text.contains("scalar C 0e0 none"));
    assert!(text.contains("constraint row0 >= 1.5e0"));
    assert!(text.contains("  0 1 1 2e0 0e0"));
    assert!(text.contains("  scalar 0 -1e0"));
}
