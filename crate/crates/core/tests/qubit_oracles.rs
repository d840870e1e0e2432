use std::collections::HashSet;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magicdecay::bounds::{self, Family};
use magicdecay::pauli::{self, PauliVector};
use magicdecay::rom::{self, RomSolver};
use magicdecay::stabilizer::{self, StabilizerBasis};
use magicdecay::{Hypergraph, NoiseModel};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense `I, X, Y, Z` tensor product for label `(z, x)`, qubit 0 rightmost.
fn dense_pauli(n: usize, z: usize, x: usize) -> Vec<Complex64> {
    let i = Complex64::i();
    let mut m = vec![c(1.0)];
    let mut dim = 1;
    for q in 0..n {
        let f = match (z >> q & 1, x >> q & 1) {
            (0, 0) => [c(1.0), c(0.0), c(0.0), c(1.0)],
            (0, 1) => [c(0.0), c(1.0), c(1.0), c(0.0)],
            (1, 1) => [c(0.0), -i, i, c(0.0)],
            _ => [c(1.0), c(0.0), c(0.0), c(-1.0)],
        };
        let nd = dim * 2;
        let mut out = vec![c(0.0); nd * nd];
        for a in 0..2 {
            for b in 0..2 {
                for r in 0..dim {
                    for s in 0..dim {
                        out[(a * dim + r) * nd + b * dim + s] = f[a * 2 + b] * m[r * dim + s];
                    }
                }
            }
        }
        m = out;
        dim = nd;
    }
    m
}

fn expectation(n: usize, z: usize, x: usize, psi: &[f64]) -> f64 {
    let p = dense_pauli(n, z, x);
    let dim = psi.len();
    let mut acc = c(0.0);
    for r in 0..dim {
        for s in 0..dim {
            acc += psi[r] * p[r * dim + s] * psi[s];
        }
    }
    acc.re
}

fn arb_hypergraph(max_n: usize) -> impl Strategy<Value = Hypergraph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(1u32..(1 << n), 0..6)
            .prop_map(move |masks| Hypergraph::from_masks(n, masks).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pauli_vector_matches_dense_expectations(h in arb_hypergraph(4)) {
        let n = h.n();
        let psi = h.state_vector().unwrap();
        let pv = h.pauli_vector().unwrap();
        for z in 0..1usize << n {
            for x in 0..1usize << n {
                let want = expectation(n, z, x, &psi);
                prop_assert!((pv.coeff(z as u32, x as u32) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dense_round_trip(h in arb_hypergraph(5)) {
        let pv = h.pauli_vector().unwrap();
        let back = PauliVector::from_dense(h.n(), &pv.to_dense()).unwrap();
        for (a, b) in pv.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_matches_dense_kraus(h in arb_hypergraph(3), lambda in 0.0f64..1.0) {
        let n = h.n();
        let dim = 1usize << n;
        let rho = h.pauli_vector().unwrap();
        let mut dense = rho.to_dense();
        // per-qubit channel (1-λ)ρ + (λ/4) Σ_P PρP
        for q in 0..n {
            let mut next: Vec<Complex64> = dense.iter().map(|v| v * (1.0 - lambda)).collect();
            for (z, x) in [(0, 0), (0, 1), (1, 1), (1, 0)] {
                let p = dense_pauli(n, z << q, x << q);
                for r in 0..dim {
                    for s in 0..dim {
                        let mut acc = c(0.0);
                        for a in 0..dim {
                            for b in 0..dim {
                                acc += p[r * dim + a] * dense[a * dim + b] * p[b * dim + s];
                            }
                        }
                        next[r * dim + s] += acc * (lambda / 4.0);
                    }
                }
            }
            dense = next;
        }
        let fast = rho.apply_noise(&NoiseModel::Depolarizing(lambda)).unwrap();
        let want = PauliVector::from_dense(n, &dense).unwrap();
        for (a, b) in fast.coeffs().iter().zip(want.coeffs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_profile_reproduces_noisy_norm(h in arb_hypergraph(6), lambda in 0.0f64..1.0) {
        let direct = h.pauli_vector().unwrap()
            .apply_noise(&NoiseModel::Depolarizing(lambda)).unwrap()
            .stabilizer_norm();
        let profile = pauli::hypergraph_weight_profile(&h).unwrap();
        prop_assert!((pauli::depolarized_norm_from_profile(&profile, lambda) - direct).abs() < 1e-12);
    }

    #[test]
    fn relabeling_vertices_keeps_robustness(h in arb_hypergraph(3), seed in 0u64..1000) {
        let mut perm: Vec<usize> = (0..h.n()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let basis = stabilizer::shared_basis(h.n()).unwrap();
        let a = rom::rom(&h.pauli_vector().unwrap(), basis).unwrap().value;
        let b = rom::rom(&h.permute(&perm).unwrap().pauli_vector().unwrap(), basis).unwrap().value;
        prop_assert!((a - b).abs() < 1e-7);
    }
}

#[test]
fn stabilizer_bases_are_pure_and_distinct() {
    for n in 1..=3 {
        let basis = StabilizerBasis::enumerate(n).unwrap();
        assert_eq!(basis.len() as u64, stabilizer::stabilizer_count(n));
        let mut seen = HashSet::new();
        for j in 0..basis.len() {
            let s = basis.state(j);
            assert_abs_diff_eq!(s.trace(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.sum_squares(), (1u64 << n) as f64, epsilon = 1e-12);
            let key: Vec<i64> = s.coeffs().iter().map(|v| v.round() as i64).collect();
            assert!(seen.insert(key), "duplicate state {j} at n={n}");
            assert_eq!(basis.index_of(&s), Some(j));
        }
    }
}

#[test]
fn basis_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b3.stbb");
    let basis = StabilizerBasis::enumerate(3).unwrap();
    basis.save(&path).unwrap();
    let back = StabilizerBasis::load(&path).unwrap();
    assert_eq!(back.len(), basis.len());
    assert_eq!(back.checksum(), basis.checksum());
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&path, &bytes).unwrap();
    assert_eq!(StabilizerBasis::load(&path).unwrap_err().code(), "E_FORMAT");
}

#[test]
fn decomposition_reconstructs_state() {
    let basis = stabilizer::shared_basis(3).unwrap();
    for noise in [0.0, 0.1, 0.25] {
        let rho = Hypergraph::ccz()
            .pauli_vector()
            .unwrap()
            .apply_noise(&NoiseModel::Depolarizing(noise))
            .unwrap();
        let r = rom::rom(&rho, basis).unwrap();
        let mut sum = PauliVector::zeros(3).unwrap();
        let mut l1 = 0.0;
        for &(j, w) in &r.decomposition {
            sum.add_scaled(&basis.state(j), w);
            l1 += w.abs();
        }
        for (a, b) in sum.coeffs().iter().zip(rho.coeffs()) {
            assert!((a - b).abs() < 1e-8);
        }
        assert_abs_diff_eq!(l1, r.value, epsilon = 1e-8);
        assert!(r.lower_bound <= r.value + 1e-12);
        assert!(r.value >= rho.stabilizer_norm() - 1e-9);
    }
}

#[test]
fn stabilizer_states_have_unit_robustness() {
    let basis = stabilizer::shared_basis(3).unwrap();
    let solver = RomSolver::new(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let j = rng.gen_range(0..basis.len());
        assert_abs_diff_eq!(solver.rom(&basis.state(j)).unwrap().value, 1.0, epsilon = 1e-8);
    }
    for h in [Hypergraph::empty(3).unwrap(), Hypergraph::new(3, &[vec![1, 2], vec![2, 3]]).unwrap()] {
        assert!(h.is_stabilizer());
        assert_abs_diff_eq!(solver.rom(&h.pauli_vector().unwrap()).unwrap().value, 1.0, epsilon = 1e-8);
    }
}

#[test]
fn robustness_decreases_under_noise() {
    let solver = RomSolver::new(stabilizer::shared_basis(3).unwrap());
    let rho = Hypergraph::ccz().pauli_vector().unwrap();
    for noise in ["dep", "deph"] {
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let l = k as f64 / 10.0;
            let model = NoiseModel::parse(&format!("{noise}:{l}")).unwrap();
            let v = solver.rom(&rho.apply_noise(&model).unwrap()).unwrap().value;
            assert!(v <= last + 1e-7, "{noise} at {l}");
            last = v;
        }
        assert_abs_diff_eq!(last, 1.0, epsilon = 1e-7);
    }
}

#[test]
fn threshold_of_stabilizer_state_is_zero() {
    let solver = RomSolver::new(stabilizer::shared_basis(2).unwrap());
    let rho = Hypergraph::empty(2).unwrap().pauli_vector().unwrap();
    let t = rom::threshold(&solver, &rho, &NoiseModel::Depolarizing(0.0), 0.0, 1e-4).unwrap();
    assert_eq!(t.lambda_star, 0.0);
}

#[test]
fn cnz_closed_forms_at_the_ends() {
    for n in 3..=10 {
        let d0 = pauli::closed_form_d_cnz(n, 0.0);
        let h = Hypergraph::cnz(n).unwrap();
        let profile = pauli::hypergraph_weight_profile(&h).unwrap();
        assert_abs_diff_eq!(pauli::depolarized_norm_from_profile(&profile, 0.0), d0, epsilon = 1e-10);
        assert_abs_diff_eq!(pauli::closed_form_d_cnz(n, 1.0), 2f64.powi(-(n as i32)), epsilon = 1e-12);
    }
    assert!(pauli::closed_form_d_3complete(4, 0.1).is_err());
}

#[test]
fn sweep_columns_are_ordered() {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let prof = bounds::sweep(
        &Family::parse("cnz:6").unwrap(),
        &grid,
        &bounds::SweepOptions { exact: false, max_lp_qubits: 4 },
    )
    .unwrap();
    let lb = prof.column("lb_D").unwrap();
    let ub = prof.column("ub_family_specific").unwrap();
    assert!(prof.column("ub_convexity").unwrap().values.iter().all(Option::is_none));
    for i in 0..grid.len() {
        let (l, u) = (lb.values[i].unwrap(), ub.values[i].unwrap());
        assert!(l <= u + 1e-12, "λ={}", grid[i]);
    }
}
