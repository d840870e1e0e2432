use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use magicdecay::wigner::{self, PhasePoint, QuditHypergraph, QuditSystem};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn state_from(raw: &[(f64, f64)]) -> Vec<Complex64> {
    let v: Vec<Complex64> = raw.iter().map(|&(a, b)| c(a, b)).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt().max(1e-3);
    v.into_iter().map(|a| a / norm).collect()
}

fn kron(a: &[Complex64], da: usize, b: &[Complex64], db: usize) -> Vec<Complex64> {
    let d = da * db;
    let mut out = vec![c(0.0, 0.0); d * d];
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k) * d + j * db + l] = a[i * da + j] * b[k * db + l];
                }
            }
        }
    }
    out
}

fn matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                out[i * d + j] += a[i * d + k] * b[k * d + j];
            }
        }
    }
    out
}

fn dagger(a: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j].conj();
        }
    }
    out
}

/// `A_(z,x) = D A_0 D†` with `D = τ^{-zx} Z^z X^x` and `A_0|j⟩ = |−j⟩`,
/// assembled from scratch for one qudit.
fn oracle_phase_point(d: usize, z: usize, x: usize) -> Vec<Complex64> {
    let w = |k: i64| {
        let t = 2.0 * std::f64::consts::PI * k.rem_euclid(d as i64) as f64 / d as f64;
        c(t.cos(), t.sin())
    };
    let mut xm = vec![c(0.0, 0.0); d * d];
    let mut zm = vec![c(0.0, 0.0); d * d];
    let mut par = vec![c(0.0, 0.0); d * d];
    for j in 0..d {
        xm[((j + 1) % d) * d + j] = c(1.0, 0.0);
        zm[j * d + j] = w(j as i64);
        par[((d - j) % d) * d + j] = c(1.0, 0.0);
    }
    let mut disp = vec![c(0.0, 0.0); d * d];
    for j in 0..d {
        disp[j * d + j] = c(1.0, 0.0);
    }
    for _ in 0..z {
        disp = matmul(&disp, &zm, d);
    }
    for _ in 0..x {
        disp = matmul(&disp, &xm, d);
    }
    // τ = ω^{(d+1)/2}, so τ^{-zx} = ω^{-(d+1)/2·zx}
    let ph = w(-(((d + 1) / 2 * z * x) as i64));
    let disp: Vec<Complex64> = disp.iter().map(|v| v * ph).collect();
    matmul(&matmul(&disp, &par, d), &dagger(&disp, d), d)
}

fn oracle_wigner(d: usize, n: usize, rho: &[Complex64]) -> Vec<f64> {
    let sys = QuditSystem::new(d as u32, n).unwrap();
    let dim = d.pow(n as u32);
    (0..dim * dim)
        .map(|idx| {
            let u = PhasePoint::from_table_index(&sys, idx);
            // qudit 0 is the least significant digit, so it sits rightmost
            let mut a = vec![c(1.0, 0.0)];
            let mut da = 1;
            for q in 0..n {
                let f = oracle_phase_point(d, u.z[q] as usize, u.x[q] as usize);
                a = kron(&f, d, &a, da);
                da *= d;
            }
            let mut tr = c(0.0, 0.0);
            for i in 0..dim {
                for j in 0..dim {
                    tr += a[i * dim + j] * rho[j * dim + i];
                }
            }
            tr.re / dim as f64
        })
        .collect()
}

fn arb_state(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("nonzero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-2)
        .prop_map(|v| state_from(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_matrix_oracle_d3(psi in arb_state(9)) {
        let sys = QuditSystem::new(3, 2).unwrap();
        let table = wigner::wigner_pure(&sys, &psi).unwrap();
        let want = oracle_wigner(3, 2, &wigner::density_from_pure(&psi));
        for (a, b) in table.values().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_matrix_oracle_d5(psi in arb_state(5)) {
        let sys = QuditSystem::new(5, 1).unwrap();
        let table = wigner::wigner_pure(&sys, &psi).unwrap();
        let want = oracle_wigner(5, 1, &wigner::density_from_pure(&psi));
        for (a, b) in table.values().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_and_overlap_rule(psi in arb_state(9), phi in arb_state(9)) {
        let sys = QuditSystem::new(3, 2).unwrap();
        let wp = wigner::wigner_pure(&sys, &psi).unwrap();
        let wf = wigner::wigner_pure(&sys, &phi).unwrap();
        prop_assert!((wp.total() - 1.0).abs() < 1e-12);
        let overlap: Complex64 = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
        let by_table: f64 = wp.values().iter().zip(wf.values()).map(|(a, b)| a * b).sum();
        prop_assert!((9.0 * by_table - overlap.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn weyl_covariance(psi in arb_state(9), z in prop::array::uniform2(0u32..3), x in prop::array::uniform2(0u32..3)) {
        let sys = QuditSystem::new(3, 2).unwrap();
        let v = PhasePoint::new(&sys, &z, &x).unwrap();
        let w = wigner::wigner_pure(&sys, &psi).unwrap();
        let moved = wigner::wigner_pure(&sys, &wigner::apply_weyl(&sys, &v, &psi)).unwrap();
        for idx in 0..sys.phase_points() {
            let u = PhasePoint::from_table_index(&sys, idx);
            prop_assert!((moved.get(&u) - w.get(&u.sub(&v, &sys))).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_table_matches_dense_channel(psi in arb_state(9), lambda in 0.0f64..1.0) {
        let sys = QuditSystem::new(3, 2).unwrap();
        let fast = wigner::noisy_wigner_pure(&sys, &psi, lambda).unwrap();
        let rho = wigner::depolarize_density(&sys, &wigner::density_from_pure(&psi), lambda);
        let want = oracle_wigner(3, 2, &rho);
        for (a, b) in fast.values().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn qudit_graph_states_are_nonnegative(
        d in prop::sample::select(vec![3u32, 5]),
        m in prop::collection::vec(0u32..5, 6),
        shift in prop::collection::vec(0u32..5, 6),
    ) {
        let edges = vec![
            (vec![1], m[0]), (vec![2], m[1]), (vec![3], m[2]),
            (vec![1, 2], m[3]), (vec![2, 3], m[4]), (vec![1, 3], m[5]),
        ];
        let h = QuditHypergraph::new(3, d, &edges).unwrap();
        let sys = h.system().unwrap();
        let v = PhasePoint::new(&sys, &shift[..3], &shift[3..]).unwrap();
        let psi = wigner::apply_weyl(&sys, &v, &h.state_vector().unwrap());
        let w = wigner::wigner_pure(&sys, &psi).unwrap();
        prop_assert!(w.min() > -1e-12);
        prop_assert!(w.sn().abs() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_dense(
        d in prop::sample::select(vec![3u32, 5]),
        alpha in 1u32..5,
        beta in 1u32..5,
        traced in prop::sample::subsequence(vec![1usize, 2, 3], 1..3),
    ) {
        let h = QuditHypergraph::new(3, d, &[(vec![1, 2, 3], alpha), (vec![1, 2], beta)]).unwrap();
        let sys = h.system().unwrap();
        let rho = wigner::reduced_density_pure(&sys, &h.state_vector().unwrap(), &traced).unwrap();
        let kept = QuditSystem::new(d, 3 - traced.len()).unwrap();
        let dense = wigner::wigner_density(&kept, &rho).unwrap();
        let mut mixed = vec![0.0; kept.phase_points()];
        let mut weight = 0.0;
        for (w, child) in h.partial_trace(&traced).unwrap() {
            weight += w;
            for (acc, v) in mixed.iter_mut().zip(child.wigner().unwrap().values()) {
                *acc += w * v;
            }
        }
        prop_assert!((weight - 1.0).abs() < 1e-12);
        for (a, b) in dense.values().iter().zip(&mixed) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn multiplicity_and_its_negative_share_negativity() {
    for d in [3u32, 5, 7] {
        for n in 2..=4 {
            for a in 1..d {
                let s1 = QuditHypergraph::cnz(n, d, a).unwrap().wigner().unwrap().sn();
                let s2 = QuditHypergraph::cnz(n, d, d - a).unwrap().wigner().unwrap().sn();
                assert_abs_diff_eq!(s1, s2, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn noise_threshold_is_tight_for_single_qudits() {
    for d in [3u32, 5, 7, 11] {
        let sys = QuditSystem::new(d, 1).unwrap();
        let psi = wigner::threshold_witness_state(&sys).unwrap();
        let lstar = wigner::max_negativity_threshold(d);
        let below = wigner::noisy_wigner_pure(&sys, &psi, lstar - 1e-3).unwrap();
        let at = wigner::noisy_wigner_pure(&sys, &psi, lstar).unwrap();
        assert!(below.get(&PhasePoint::origin(&sys)) < 0.0);
        assert!(at.min() > -1e-14);
        let (_, minus) = wigner::noisy_parity_eigenvalues(d, lstar);
        assert_abs_diff_eq!(minus, 0.0, epsilon = 1e-14);
    }
}

#[test]
fn negativity_limit_and_bounds() {
    let limit = wigner::qutrit_cnz_negativity_limit();
    assert_abs_diff_eq!(limit, 1.0 - 1.0 / 3f64.sqrt(), epsilon = 1e-12);
    for n in [3usize, 7] {
        let h = QuditHypergraph::cnz(n, 3, 1).unwrap();
        let exact = h.wigner().unwrap().negativity_vanishing_point(1e-10).unwrap();
        assert!(exact >= wigner::qutrit_cnz_negativity_bound(n) - 1e-9, "n={n}");
        if n >= 7 {
            assert!(exact <= wigner::max_negativity_threshold(3) + 1e-9);
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    assert_eq!(QuditSystem::new(4, 2).unwrap_err().code(), "E_INPUT");
    assert_eq!(QuditSystem::new(3, 17).unwrap_err().code(), "E_CAPACITY");
    assert_eq!(QuditHypergraph::from_text("n=2 d=2\n1 2\n").unwrap_err().code(), "E_INPUT");
    let sys = QuditSystem::new(3, 1).unwrap();
    let unnormalized = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
    assert!(wigner::wigner_pure(&sys, &unnormalized).is_err());
    assert!(wigner::qutrit_cnz_w10(4, 0.1).is_err());
}
