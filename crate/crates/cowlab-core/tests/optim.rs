use approx::assert_abs_diff_eq;
use cowlab_core::optim::*;
use cowlab_core::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn lp_unit_interval() {
    let lp = LinearProgram::new(Sense::Maximize, vec![1.0]).bounds(vec![(0.0, 1.0)]);
    let s = solve_lp(&lp).unwrap();
    assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.objective, 1.0, epsilon = 1e-12);
}

#[test]
fn lp_simplex_picks_cheapest_vertex() {
    let c = vec![3.0, -1.0, 2.5, 0.5, -0.75];
    let lp = LinearProgram::new(Sense::Minimize, c.clone()).eq(vec![1.0; 5], 1.0);
    let s = solve_lp(&lp).unwrap();
    assert_abs_diff_eq!(s.objective, -1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
}

#[test]
fn lp_reports_infeasible_and_unbounded() {
    let lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0])
        .eq(vec![1.0, 1.0], 1.0)
        .eq(vec![1.0, 1.0], 2.0);
    assert!(matches!(solve_lp(&lp), Err(Error::Infeasible)));
    let lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0]).eq(vec![1.0, -1.0], 0.0);
    assert!(matches!(solve_lp(&lp), Err(Error::Unbounded)));
}

#[test]
fn lp_handles_redundant_rows_and_shifted_bounds() {
    let lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0, 3.0])
        .eq(vec![1.0, 1.0, 1.0], 3.0)
        .eq(vec![2.0, 2.0, 2.0], 6.0)
        .bounds(vec![(0.5, 1.0), (-1.0, 4.0), (1.0, 2.0)]);
    let s = solve_lp(&lp).unwrap();
    // x0 at its cap, x2 at its floor, x1 takes the rest.
    assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.x[1], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.x[2], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.objective, s.dual_objective, epsilon = 1e-9);
}

#[test]
fn lp_rejects_bad_shapes() {
    let lp = LinearProgram::new(Sense::Minimize, vec![1.0, 1.0]).eq(vec![1.0], 1.0);
    assert!(matches!(solve_lp(&lp), Err(Error::InvalidParams(_))));
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over all basic feasible points of
/// `min c'x, Ax = b, 0 <= x <= u`.
fn vertex_oracle(c: &[f64], a: &DMatrix<f64>, b: &DVector<f64>, u: &[f64]) -> Option<f64> {
    let (m, n) = a.shape();
    let mut best: Option<f64> = None;
    for basic in combinations(n, m) {
        let others: Vec<usize> = (0..n).filter(|j| !basic.contains(j)).collect();
        for mask in 0u32..(1 << others.len()) {
            let mut x = vec![0.0; n];
            for (i, &j) in others.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    x[j] = u[j];
                }
            }
            let mut rhs = b.clone();
            for &j in &others {
                for r in 0..m {
                    rhs[r] -= a[(r, j)] * x[j];
                }
            }
            let bm = DMatrix::from_fn(m, m, |r, k| a[(r, basic[k])]);
            let Some(sol) = bm.lu().solve(&rhs) else { continue };
            if sol.iter().zip(&basic).any(|(&v, &j)| v < -1e-9 || v > u[j] + 1e-9) {
                continue;
            }
            for (k, &j) in basic.iter().enumerate() {
                x[j] = sol[k];
            }
            let val: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            best = Some(best.map_or(val, |b: f64| b.min(val)));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>(), n in 4usize..=12, m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let x0 = DVector::from_fn(n, |j, _| rng.random_range(0.0..u[j]));
        let b = &a * &x0;
        let mut lp = LinearProgram::new(Sense::Minimize, c.clone())
            .bounds(u.iter().map(|&h| (0.0, h)).collect());
        for r in 0..m {
            lp = lp.eq(a.row(r).iter().copied().collect(), b[r]);
        }
        let s = solve_lp(&lp).unwrap();
        let oracle = vertex_oracle(&c, &a, &b, &u).unwrap();
        prop_assert!((s.objective - oracle).abs() <= 1e-10, "{} vs {}", s.objective, oracle);
        prop_assert!((s.objective - s.dual_objective).abs() <= 1e-9);
        for r in 0..m {
            let lhs: f64 = (0..n).map(|j| a[(r, j)] * s.x[j]).sum();
            prop_assert!((lhs - b[r]).abs() <= 1e-9);
        }
    }
}

#[test]
fn find_root_basics() {
    let r = find_root(|x| x - 0.5, 0.0, 1.0, 1e-14).unwrap();
    assert_abs_diff_eq!(r.x, 0.5, epsilon = 1e-14);
    let r = find_root(|x| (x).exp() - 3.0, -5.0, 5.0, 1e-14).unwrap();
    assert_abs_diff_eq!(r.x, 3f64.ln(), epsilon = 1e-13);
    assert!(r.iterations <= 60);
    assert!(matches!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(Error::NoSignChange { .. })));
}

#[test]
fn maximize_1d_basics() {
    let (x, v) = maximize_1d(|_| 2.0, -1.0, 3.0, 11, 20);
    assert_eq!((x, v), (-1.0, 2.0));
    let (x, _) = maximize_1d(|x| -(x - 0.3137).powi(2), 0.0, 1.0, 21, 60);
    assert!((x - 0.3137).abs() < 1e-6, "{x}");
}

#[test]
fn maximize_1d_dominates_its_grid() {
    let f = |x: f64| (7.0 * x).sin() * (-x).exp() + 0.1 * x;
    let (lo, hi, n) = (0.0, 3.0, 31);
    let (_, best) = maximize_1d(f, lo, hi, n, 40);
    for i in 0..n {
        assert!(best >= f(lo + (hi - lo) * i as f64 / (n - 1) as f64));
    }
}

#[test]
fn sdp_with_scalar_blocks_matches_lp() {
    let c = vec![1.0, 2.0, -0.5, 0.3];
    let rows = [vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 2.0, 0.0]];
    let rhs = [1.0, 0.5];
    let mut lp = LinearProgram::new(Sense::Minimize, c.clone());
    let mut sdp = SdpProblem::new(vec![1; 4]);
    for j in 0..4 {
        sdp.objective[j][(0, 0)] = c[j];
    }
    for (row, &b) in rows.iter().zip(&rhs) {
        lp = lp.eq(row.clone(), b);
        let mut mats = sdp.zero_blocks();
        for j in 0..4 {
            mats[j][(0, 0)] = row[j];
        }
        sdp.constraints.push(SdpConstraint { matrices: mats, rhs: b });
    }
    let l = solve_lp(&lp).unwrap();
    let s = solve_sdp(&sdp, &SdpSettings::default()).unwrap();
    assert_abs_diff_eq!(s.primal_objective, l.objective, epsilon = 1e-8);
    assert!(s.rel_gap() <= 1e-7);
}

fn outer(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}

/// Equal-prior USD of two real pure states in dimension `n`. Conclusive
/// elements are `c_j |d_j><d_j|` with `d_j` orthogonal to the other state, so
/// the SDP has two scalar blocks plus the `n x n` inconclusive block. `rot` is
/// applied to all problem data.
fn two_state_usd(theta: f64, n: usize, rot: &DMatrix<f64>) -> SdpSolution {
    let unit = |i: usize, a: f64, j: usize, b: f64| {
        let mut v = DVector::zeros(n);
        v[i] = a;
        v[j] += b;
        rot * v
    };
    let (cos, sin) = (theta.cos(), theta.sin());
    let psi0 = unit(0, 1.0, 1, 0.0);
    let psi1 = unit(0, cos, 1, sin);
    let d0 = unit(0, sin, 1, -cos);
    let d1 = unit(1, 1.0, 0, 0.0);
    let mut p = SdpProblem::new(vec![1, 1, n]);
    p.objective[0][(0, 0)] = -0.5 * d0.dot(&psi0).powi(2);
    p.objective[1][(0, 0)] = -0.5 * d1.dot(&psi1).powi(2);
    let (dd0, dd1) = (outer(&d0), outer(&d1));
    for i in 0..n {
        for j in i..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = if i == j { 1.0 } else { 0.5 };
            e[(j, i)] = e[(i, j)];
            let pick = |m: &DMatrix<f64>| DMatrix::from_element(1, 1, m.dot(&e));
            p.constraints.push(SdpConstraint {
                matrices: vec![pick(&dd0), pick(&dd1), e],
                rhs: if i == j { 1.0 } else { 0.0 },
            });
        }
    }
    solve_sdp(&p, &SdpSettings::default()).unwrap()
}

fn random_rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn sdp_two_state_usd_matches_analytic() {
    for theta in [0.2, 0.7, 1.2] {
        let s = two_state_usd(theta, 2, &DMatrix::identity(2, 2));
        let p_c = -s.primal_objective;
        assert_abs_diff_eq!(p_c, 1.0 - f64::cos(theta).abs(), epsilon = 1e-8);
        assert!(s.rel_gap() <= 1e-7);
        for x in &s.x {
            assert!(x.clone().symmetric_eigenvalues().min() >= -1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn sdp_objective_rotation_invariant(seed in any::<u64>(), theta in 0.1f64..1.4, n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = two_state_usd(theta, n, &DMatrix::identity(n, n));
        let rot = random_rotation(n, &mut rng);
        let turned = two_state_usd(theta, n, &rot);
        prop_assert!((base.primal_objective - turned.primal_objective).abs() <= 1e-8);
        prop_assert!((-turned.primal_objective - (1.0 - theta.cos())).abs() <= 1e-8);
        prop_assert!(turned.primal_residual <= 1e-9);
    }
}

#[test]
fn sdp_is_deterministic() {
    let a = two_state_usd(0.5, 3, &DMatrix::identity(3, 3));
    let b = two_state_usd(0.5, 3, &DMatrix::identity(3, 3));
    assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
}

#[test]
fn sdp_iteration_limit() {
    let strict = SdpSettings { max_iterations: 3, ..SdpSettings::default() };
    let base = two_state_usd(0.5, 2, &DMatrix::identity(2, 2));
    let mut p = SdpProblem::new(vec![1, 1]);
    p.objective[0][(0, 0)] = 1.0;
    p.objective[1][(0, 0)] = 2.0;
    let mut m = p.zero_blocks();
    m[0][(0, 0)] = 1.0;
    m[1][(0, 0)] = 1.0;
    p.constraints.push(SdpConstraint { matrices: m, rhs: 1.0 });
    assert!(matches!(solve_sdp(&p, &strict), Err(Error::NotConverged { .. })));
    // A loose acceptance threshold hands back the best iterate instead.
    let loose = SdpSettings { acceptable_tol: 1.0, ..strict };
    let s = solve_sdp(&p, &loose).unwrap();
    assert!(s.iterations <= 3);
    assert!(s.primal_objective > 0.9 && base.iterations > s.iterations);
}
