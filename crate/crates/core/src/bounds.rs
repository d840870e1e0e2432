//! Analytic upper and lower bounds on the robustness of noisy hypergraph
//! states, usable far beyond the sizes the LP can reach.
//!
//! Upper bounds come from convexity of the noise decomposition, from the
//! stabilizer-rank style estimates for `C^{n-1}Z`, 3-complete and
//! edge-augmented states, and from local-magic arguments. The lower bound is
//! the stabilizer norm `D`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::pauli::{
    closed_form_d_3complete, closed_form_d_cnz, depolarized_norm_from_profile,
    hypergraph_weight_profile, NoiseModel, PauliVector, PAULI_CUTOFF,
};
use crate::rom::RomSolver;
use crate::stabilizer::shared_basis;

/// Largest exponent evaluated with `powi` directly; above it powers go
/// through `exp(n ln b)`, which saturates to `inf` or `0` instead of
/// producing garbage from repeated multiplication.
const POW_DIRECT_LIMIT: usize = 512;

/// Largest number of added edges accepted by [`added_edges_bound`].
pub const MAX_ADDED_EDGES: usize = 20;

/// `base^n` with a log-domain fallback for large `n`.
pub fn pow_n(base: f64, n: usize) -> f64 {
    if n <= POW_DIRECT_LIMIT {
        base.powi(n as i32)
    } else if base == 0.0 {
        0.0
    } else if base < 0.0 {
        let m = (n as f64 * (-base).ln()).exp();
        if n % 2 == 0 {
            m
        } else {
            -m
        }
    } else {
        (n as f64 * base.ln()).exp()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::input(format!("λ = {lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// Bound valid for every `n`-qubit state:
/// `(2-λ)^n + ((1+λ)/2)^n / 2`.
pub fn ub_general(n: usize, lambda: f64) -> f64 {
    pow_n(2.0 - lambda, n) + 0.5 * pow_n((1.0 + lambda) / 2.0, n)
}

/// `1 + 4(1-λ/2)^n` for the depolarized `C^{n-1}Z` state.
pub fn ub_cnz(n: usize, lambda: f64) -> f64 {
    1.0 + 4.0 * pow_n(1.0 - lambda / 2.0, n)
}

/// Noise level above which [`ub_cnz`] is at most `1+ε`:
/// `2(1-(ε/4)^{1/n})`. Values above 1 mean the bound is vacuous.
pub fn ub_cnz_threshold(n: usize, epsilon: f64) -> f64 {
    2.0 * (1.0 - (epsilon / 4.0).powf(1.0 / n as f64))
}

/// Closed form of the convexity bound for CCZ, `1 + (14/9)(1-λ)^3`.
pub fn ub_convexity_ccz(lambda: f64) -> f64 {
    1.0 + 14.0 / 9.0 * (1.0 - lambda).powi(3)
}

/// Threshold implied by [`ub_convexity_ccz`]: `1 - (9ε/14)^{1/3}`.
pub fn ub_convexity_ccz_threshold(epsilon: f64) -> f64 {
    1.0 - (9.0 * epsilon / 14.0).cbrt()
}

/// `1 + 2(2 - (2-2^{-1/2})λ)^n` for the 3-complete state.
pub fn ub_3complete(n: usize, lambda: f64) -> f64 {
    1.0 + 2.0 * pow_n(2.0 - (2.0 - 0.5f64.sqrt()) * lambda, n)
}

/// Smallest λ with [`ub_3complete`] `<= 1+ε`, or 1 when none exists in
/// `[0, 1]`.
pub fn ub_3complete_threshold(n: usize, epsilon: f64) -> f64 {
    if epsilon <= 0.0 {
        return 1.0;
    }
    let l = (2.0 - (epsilon / 2.0).powf(1.0 / n as f64)) / (2.0 - 0.5f64.sqrt());
    l.clamp(0.0, 1.0)
}

/// Smallest λ at which the 3-complete stabilizer norm drops to `1+ε`; the
/// true threshold can be no smaller. Only odd `n` has a closed form.
pub fn lb_3complete_threshold(n: usize, epsilon: f64) -> Result<f64> {
    let d = |l: f64| closed_form_d_3complete(n, l);
    let level = 1.0 + epsilon;
    if d(0.0)? <= level {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if d(mid)? <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `[lower, upper]` bracket of the 3-complete ε-threshold from the
/// stabilizer norm and [`ub_3complete`].
pub fn threshold_bracket_3complete(n: usize, epsilon: f64) -> Result<(f64, f64)> {
    Ok((lb_3complete_threshold(n, epsilon)?, ub_3complete_threshold(n, epsilon)))
}

/// `1 + 2^{1 + 3K/2 - n/2}`, a bound on every `K`-qubit marginal of the
/// 3-complete state.
pub fn local_magic_3complete_ub(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return Err(Error::input(format!("K = {k} exceeds n = {n}")));
    }
    Ok(1.0 + 2f64.powf(1.0 + 1.5 * k as f64 - 0.5 * n as f64))
}

/// `Σ_I (1-λ)^{n-|I|} λ^{|I|} R(Tr_I ρ)` with the robustness of every
/// marginal precomputed; the marginals do not depend on λ.
#[derive(Clone, Debug, Serialize)]
pub struct ConvexityBound {
    n: usize,
    /// `sums[k]` is the total robustness of all marginals with `k` traced
    /// qubits.
    sums: Vec<f64>,
}

impl ConvexityBound {
    pub fn new(h: &Hypergraph, oracle: &ExactOracle) -> Result<Self> {
        let n = h.n();
        if n > 20 {
            return Err(Error::capacity(format!(
                "the convexity bound enumerates 2^n marginals; n = {n} is too large"
            )));
        }
        let mut sums = vec![0.0; n + 1];
        for kept in 0u32..1 << n {
            let keep: Vec<usize> = (0..n).filter(|v| kept >> v & 1 == 1).map(|v| v + 1).collect();
            let r = if keep.is_empty() {
                1.0
            } else {
                oracle.rom_mixture(&h.reduced_mixture(&keep)?)?
            };
            sums[n - keep.len()] += r;
        }
        Ok(ConvexityBound { n, sums })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.sums
            .iter()
            .enumerate()
            .map(|(k, s)| s * pow_n(1.0 - lambda, self.n - k) * pow_n(lambda, k))
            .sum()
    }
}

/// Convenience wrapper building the marginal table on each call.
pub fn ub_convexity(h: &Hypergraph, lambda: f64, oracle: &ExactOracle) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ConvexityBound::new(h, oracle)?.eval(lambda))
}

/// Exact robustness of hypergraph-state mixtures: `1` without an LP when
/// every component is a stabilizer state (all edges of degree at most 2),
/// otherwise the LP over the cached stabilizer basis. Results are memoized.
pub struct ExactOracle {
    max_qubits: usize,
    memo: Mutex<HashMap<Vec<(u64, Hypergraph)>, f64>>,
}

impl Default for ExactOracle {
    fn default() -> Self {
        Self::new(4)
    }
}

impl ExactOracle {
    pub fn new(max_qubits: usize) -> Self {
        ExactOracle {
            max_qubits: max_qubits.min(4),
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// An oracle that never runs an LP, only the stabilizer shortcut.
    pub fn shortcut_only() -> Self {
        ExactOracle {
            max_qubits: 0,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn rom_mixture(&self, mix: &[(f64, Hypergraph)]) -> Result<f64> {
        if mix.iter().all(|(_, h)| h.is_stabilizer()) {
            return Ok(1.0);
        }
        let n = mix[0].1.n();
        if n > self.max_qubits {
            return Err(Error::capacity(format!(
                "no exact robustness available for a {n}-qubit non-stabilizer marginal"
            )));
        }
        let key: Vec<(u64, Hypergraph)> = mix.iter().map(|(w, h)| (w.to_bits(), h.clone())).collect();
        if let Some(&r) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(r);
        }
        let rho = mixture_pauli(mix)?;
        let solver = RomSolver::new(shared_basis(n)?);
        let r = solver.rom(&rho)?.value;
        self.memo.lock().expect("memo lock").insert(key, r);
        Ok(r)
    }
}

/// Pauli vector of `Σ w_i |Ψ_i⟩⟨Ψ_i|`.
pub fn mixture_pauli(mix: &[(f64, Hypergraph)]) -> Result<PauliVector> {
    let first = mix.first().ok_or_else(|| Error::input("empty mixture"))?;
    let mut acc = PauliVector::zeros(first.1.n())?;
    for (w, h) in mix {
        if h.n() != first.1.n() {
            return Err(Error::input("mixture components differ in size"));
        }
        acc.add_scaled(&h.pauli_vector()?, *w);
    }
    Ok(acc)
}

/// `C_Ψ = max_{I,s} R(Ψ^{(I,s)})` over every partial-trace branch,
/// including `I = ∅`.
pub fn cpsi(h: &Hypergraph, oracle: &ExactOracle) -> Result<f64> {
    let n = h.n();
    let mut children: Vec<Hypergraph> = vec![h.clone()];
    for traced in 1u32..1 << n {
        let tr: Vec<usize> = (0..n).filter(|v| traced >> v & 1 == 1).map(|v| v + 1).collect();
        if tr.len() == n {
            continue;
        }
        children.extend(h.partial_trace_decomposition(&tr)?.into_iter().map(|t| t.child));
    }
    children.sort();
    children.dedup();
    let mut best = 1.0f64;
    for c in children {
        best = best.max(oracle.rom_mixture(&[(1.0, c)])?);
    }
    Ok(best)
}

/// Bound for `Ψ` with extra edges `e_1..e_K` added:
/// `R(E(Ψ)) + C_Ψ Σ_{∅≠J⊆[K]} (5^{|J|}+1)(1-λ/2)^{|∪_{j∈J} e_j|}`.
pub fn added_edges_bound(
    rom_noisy_psi: f64,
    added: &[u32],
    lambda: f64,
    c_psi: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let k = added.len();
    if k > MAX_ADDED_EDGES {
        return Err(Error::capacity(format!(
            "{k} added edges exceeds the limit of {MAX_ADDED_EDGES}"
        )));
    }
    let mut distinct = added.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != k || added.contains(&0) {
        return Err(Error::input("added edges must be distinct and nonempty"));
    }
    let base = 1.0 - lambda / 2.0;
    let mut sum = 0.0;
    for j in 1u32..1 << k {
        let union = (0..k)
            .filter(|i| j >> i & 1 == 1)
            .fold(0u32, |acc, i| acc | added[i]);
        let size = j.count_ones() as i32;
        sum += (5f64.powi(size) + 1.0) * pow_n(base, union.count_ones() as usize);
    }
    Ok(rom_noisy_psi + c_psi * sum)
}

/// Bound for adding edges of degree `m_i >= n - c` to `Ψ`:
/// `R(E(Ψ)) + Σ_i 4·2^{n-m_i}(1-λ/2)^n`.
pub fn near_n_edge_bound(
    rom_noisy_psi: f64,
    n: usize,
    degrees: &[usize],
    c: usize,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let envelope = pow_n(1.0 - lambda / 2.0, n);
    let mut sum = 0.0;
    for &m in degrees {
        if m > n || m + c < n {
            return Err(Error::input(format!(
                "edge degree {m} is outside [n-c, n] = [{}, {n}]",
                n.saturating_sub(c)
            )));
        }
        sum += 4.0 * pow_n(2.0, n - m) * envelope;
    }
    Ok(rom_noisy_psi + sum)
}

/// Smallest number of copies `K` with `(1+4(1-λ/2)^n)^K >= target`.
pub fn distillation_copy_lb(n: usize, lambda: f64, target: f64) -> Result<u64> {
    check_lambda(lambda)?;
    if target.is_nan() {
        return Err(Error::input("target robustness is NaN"));
    }
    if target <= 1.0 {
        return Ok(0);
    }
    let per_copy = (4.0 * pow_n(1.0 - lambda / 2.0, n)).ln_1p();
    if per_copy == 0.0 {
        return Err(Error::capacity(
            "per-copy robustness rounds to 1; the copy count overflows",
        ));
    }
    let k = (target.ln() / per_copy).ceil();
    if k > u64::MAX as f64 {
        return Err(Error::capacity("copy count overflows u64"));
    }
    Ok(k as u64)
}

/// `2^{-m} Σ_j C(m,j) [j ≡ l mod 4]` for `l = 0..3`, from the
/// `((1±i)/2)^m` power sums. The `(1-1)^m` term of the roots-of-unity
/// filter only survives at `m = 0`.
pub fn mod4_weights(m: usize) -> [f64; 4] {
    if m == 0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let p = Complex64::new(0.5, 0.5).powi(m as i32);
    let q = p.conj();
    let i = Complex64::i();
    [
        0.25 * (p + q + 1.0).re,
        0.25 * (-i * p + i * q + 1.0).re,
        0.25 * (-p - q + 1.0).re,
        0.25 * (i * p - i * q + 1.0).re,
    ]
}

/// The four `K`-qubit states `Φ_l` whose mixture is every `K`-qubit
/// marginal of the 3-complete state: `Γ_K` with all 2-edges added when `l`
/// is odd and all 1-edges added when `l ∈ {2, 3}`.
pub fn three_complete_marginal_states(k: usize) -> Result<[Hypergraph; 4]> {
    if k == 0 {
        return Err(Error::input("K must be positive"));
    }
    let base: Vec<u32> = if k >= 3 {
        Hypergraph::complete(k, 3)?.edges().to_vec()
    } else {
        Vec::new()
    };
    let twos: Vec<u32> = (0u32..1 << k).filter(|m| m.count_ones() == 2).collect();
    let ones: Vec<u32> = (0..k).map(|v| 1u32 << v).collect();
    let build = |with2: bool, with1: bool| {
        let mut e = base.clone();
        if with2 {
            e.extend(&twos);
        }
        if with1 {
            e.extend(&ones);
        }
        Hypergraph::from_masks(k, e)
    };
    Ok([
        build(false, false)?,
        build(true, false)?,
        build(false, true)?,
        build(true, true)?,
    ])
}

/// `K`-qubit marginal of the `n`-qubit 3-complete state as a mixture.
pub fn three_complete_marginal(n: usize, k: usize) -> Result<Vec<(f64, Hypergraph)>> {
    if k > n {
        return Err(Error::input(format!("K = {k} exceeds n = {n}")));
    }
    let w = mod4_weights(n - k);
    Ok(w.into_iter()
        .zip(three_complete_marginal_states(k)?)
        .filter(|(w, _)| *w > 1e-15)
        .collect())
}

/// The four 3-qubit states of the 4-complete marginal: `|+³⟩`, CCZ, all
/// CZs, and all Zs with all CZs and CCZ.
pub fn four_complete_marginal_states() -> [Hypergraph; 4] {
    let all2 = [0b011u32, 0b101, 0b110];
    let mk = |m: &[u32]| Hypergraph::from_masks(3, m.iter().copied()).expect("valid");
    [
        mk(&[]),
        mk(&[0b111]),
        mk(&all2),
        mk(&[0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]),
    ]
}

/// 3-qubit marginal of the `n`-qubit 4-complete state. Tracing `j` ones
/// out of the other `n-3` qubits leaves edges with multiplicities
/// `C(j,1)`, `C(j,2)`, `C(j,3)` of degree 3, 2, 1, which are periodic in `j`
/// mod 4.
pub fn four_complete_marginal(n: usize) -> Result<Vec<(f64, Hypergraph)>> {
    if n < 3 {
        return Err(Error::input("the 4-complete marginal needs n >= 3"));
    }
    let w = mod4_weights(n - 3);
    Ok(w.into_iter()
        .zip(four_complete_marginal_states())
        .filter(|(w, _)| *w > 1e-15)
        .collect())
}

/// 3-qubit marginal of the `C^{n-1}Z` state:
/// `(1-2^{3-n})|+³⟩⟨+³| + 2^{3-n}|CCZ⟩⟨CCZ|`.
pub fn cnz_marginal(n: usize) -> Result<Vec<(f64, Hypergraph)>> {
    if n < 3 {
        return Err(Error::input("the C^{n-1}Z marginal needs n >= 3"));
    }
    let q = 0.5f64.powi(n as i32 - 3);
    Ok(vec![(1.0 - q, Hypergraph::empty(3)?), (q, Hypergraph::ccz())])
}

/// Stabilizer norm of [`cnz_marginal`], `1 + 7/2^n`.
pub fn cnz_marginal_d(n: usize) -> f64 {
    1.0 + 7.0 * 0.5f64.powi(n as i32)
}

/// Convexity bound on [`cnz_marginal`], `1 + (14/9)·2^{3-n}`, from
/// `R(CCZ) = 23/9`. The LP attains it exactly.
pub fn cnz_marginal_ub(n: usize) -> f64 {
    1.0 + 14.0 / 9.0 * 0.5f64.powi(n as i32 - 3)
}

/// CCZ weight of the 3-qubit limit state reached by adding `2^m` edges of
/// degree `m`: `(1 - e^{-2})/2`.
pub fn high_degree_limit_q() -> f64 {
    (1.0 - (-2.0f64).exp()) / 2.0
}

pub fn high_degree_limit_state() -> Vec<(f64, Hypergraph)> {
    let q = high_degree_limit_q();
    vec![
        (1.0 - q, Hypergraph::empty(3).expect("valid")),
        (q, Hypergraph::ccz()),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureCheck {
    pub k: usize,
    pub rom: f64,
    pub is_stabilizer: bool,
}

/// LP check that `¼ Σ_l Φ_l` is a stabilizer mixture for `K <= 4`.
pub fn stabilizer_mixture_check_3complete(k: usize, tol: f64) -> Result<MixtureCheck> {
    stabilizer_mixture_check_weights(k, [0.25; 4], tol)
}

/// As [`stabilizer_mixture_check_3complete`] with arbitrary weights.
pub fn stabilizer_mixture_check_weights(k: usize, w: [f64; 4], tol: f64) -> Result<MixtureCheck> {
    if k == 0 || k > 4 {
        return Err(Error::capacity(format!("mixture check needs 1 <= K <= 4, got {k}")));
    }
    let states = three_complete_marginal_states(k)?;
    let mix: Vec<(f64, Hypergraph)> = w.into_iter().zip(states).collect();
    let rom = RomSolver::new(shared_basis(k)?).rom(&mixture_pauli(&mix)?)?.value;
    Ok(MixtureCheck {
        k,
        rom,
        is_stabilizer: (rom - 1.0).abs() <= tol,
    })
}

/// Stabilizer norm of `E_λ^{⊗n}(Ψ)`, using a closed form when one exists,
/// the Pauli vector up to the cutoff, or the streamed weight profile.
pub fn stabilizer_norm_noisy(h: &Hypergraph, family: &Family, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = h.n();
    match family {
        Family::Ccz | Family::Cnz(_) => return Ok(closed_form_d_cnz(n, lambda)),
        Family::ThreeComplete(_) if n % 2 == 1 && n >= 3 => {
            return closed_form_d_3complete(n, lambda)
        }
        _ => {}
    }
    if n <= PAULI_CUTOFF {
        Ok(h.pauli_vector()?
            .apply_noise(&NoiseModel::Depolarizing(lambda))?
            .stabilizer_norm())
    } else {
        Ok(depolarized_norm_from_profile(&hypergraph_weight_profile(h)?, lambda))
    }
}

/// Built-in state families of the sweep command.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Ccz,
    Cnz(usize),
    ThreeComplete(usize),
    FourComplete(usize),
    Custom(Hypergraph),
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let size = || -> Result<usize> {
            arg.ok_or_else(|| Error::input(format!("family `{name}` needs a size, e.g. `{name}:5`")))?
                .parse()
                .map_err(|_| Error::input(format!("bad size in `{s}`")))
        };
        Ok(match name {
            "ccz" => Family::Ccz,
            "cnz" => Family::Cnz(size()?),
            "3complete" => Family::ThreeComplete(size()?),
            "4complete" => Family::FourComplete(size()?),
            _ => return Err(Error::input(format!("unknown family `{s}`"))),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Family::Ccz => "ccz".into(),
            Family::Cnz(n) => format!("cnz:{n}"),
            Family::ThreeComplete(n) => format!("3complete:{n}"),
            Family::FourComplete(n) => format!("4complete:{n}"),
            Family::Custom(h) => format!("custom:{}", h.n()),
        }
    }

    pub fn hypergraph(&self) -> Result<Hypergraph> {
        match self {
            Family::Ccz => Ok(Hypergraph::ccz()),
            Family::Cnz(n) => Hypergraph::cnz(*n),
            Family::ThreeComplete(n) => Hypergraph::complete(*n, 3),
            Family::FourComplete(n) => Hypergraph::complete(*n, 4),
            Family::Custom(h) => Ok(h.clone()),
        }
    }

    /// Family-specific upper bound and its provenance tag.
    pub fn specific_ub(&self, lambda: f64) -> Result<(f64, &'static str)> {
        let n = self.hypergraph()?.n();
        Ok(match self {
            Family::Ccz | Family::Cnz(_) => (ub_cnz(n, lambda), "ub_cnz"),
            Family::ThreeComplete(_) => (ub_3complete(n, lambda), "ub_3complete"),
            _ => (ub_general(n, lambda), "ub_general"),
        })
    }
}

/// Column of a [`BoundProfile`].
#[derive(Clone, Debug, Serialize)]
pub struct BoundColumn {
    pub name: String,
    pub provenance: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundProfile {
    pub family: String,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub columns: Vec<BoundColumn>,
}

/// Options of [`sweep`].
#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Compute the exact LP column (needs `n <= 4`).
    pub exact: bool,
    /// Largest marginal size handed to the LP inside the convexity bound.
    pub max_lp_qubits: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            exact: true,
            max_lp_qubits: 4,
        }
    }
}

/// Evaluates `lb_D`, `ub_convexity`, `ub_family_specific` and `rom_exact`
/// over `lambdas`. Columns that cannot be evaluated at this size are left
/// blank.
pub fn sweep(family: &Family, lambdas: &[f64], opts: &SweepOptions) -> Result<BoundProfile> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let h = family.hypergraph()?;
    let n = h.n();

    let lb_prov = match family {
        Family::Ccz | Family::Cnz(_) => "closed-form stabilizer norm of C^{n-1}Z",
        Family::ThreeComplete(_) if n % 2 == 1 => "closed-form stabilizer norm of the 3-complete state",
        _ if n <= PAULI_CUTOFF => "stabilizer norm from the Pauli vector",
        _ => "stabilizer norm from the streamed Pauli weight profile",
    };
    let closed = matches!(family, Family::Ccz | Family::Cnz(_))
        || (matches!(family, Family::ThreeComplete(_)) && n % 2 == 1);
    // The streamed profile costs 4^n sign products.
    let lb = if closed || n <= PAULI_CUTOFF {
        lambdas
            .iter()
            .map(|&l| stabilizer_norm_noisy(&h, family, l).map(Some))
            .collect::<Result<Vec<_>>>()?
    } else if n <= 14 {
        let hist = hypergraph_weight_profile(&h)?;
        lambdas
            .iter()
            .map(|&l| Some(depolarized_norm_from_profile(&hist, l)))
            .collect()
    } else {
        vec![None; lambdas.len()]
    };

    let oracle = ExactOracle::new(opts.max_lp_qubits);
    let convexity = match ConvexityBound::new(&h, &oracle) {
        Ok(c) => Some(c),
        Err(Error::Capacity(msg)) => {
            log::info!("convexity bound unavailable: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    let conv: Vec<Option<f64>> = lambdas
        .iter()
        .map(|&l| convexity.as_ref().map(|c| c.eval(l)))
        .collect();

    let mut family_tag = "";
    let family_ub: Vec<Option<f64>> = lambdas
        .iter()
        .map(|&l| {
            family.specific_ub(l).map(|(v, tag)| {
                family_tag = tag;
                Some(v)
            })
        })
        .collect::<Result<_>>()?;

    let exact: Vec<Option<f64>> = if opts.exact && n <= 4 {
        let solver = RomSolver::new(shared_basis(n)?);
        let rho = h.pauli_vector()?;
        lambdas
            .iter()
            .map(|&l| {
                solver
                    .rom(&rho.apply_noise(&NoiseModel::Depolarizing(l))?)
                    .map(|r| Some(r.value))
            })
            .collect::<Result<_>>()?
    } else {
        vec![None; lambdas.len()]
    };

    Ok(BoundProfile {
        family: family.name(),
        n,
        lambdas: lambdas.to_vec(),
        columns: vec![
            BoundColumn {
                name: "lb_D".into(),
                provenance: lb_prov.into(),
                values: lb,
            },
            BoundColumn {
                name: "ub_convexity".into(),
                provenance: "sum over traced sets of (1-λ)^{n-|I|} λ^{|I|} R(Tr_I ρ)".into(),
                values: conv,
            },
            BoundColumn {
                name: "ub_family_specific".into(),
                provenance: family_tag.into(),
                values: family_ub,
            },
            BoundColumn {
                name: "rom_exact".into(),
                provenance: "LP over all pure stabilizer states".into(),
                values: exact,
            },
        ],
    })
}

impl BoundProfile {
    pub fn column(&self, name: &str) -> Option<&BoundColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// CSV with provenance lines (`# column: source`) ahead of the header.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# family: {}", self.family)?;
        writeln!(w, "# n: {}", self.n)?;
        for c in &self.columns {
            writeln!(w, "# {}: {}", c.name, c.provenance)?;
        }
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["lambda".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        out.write_record(&header).map_err(csv_err)?;
        for (i, l) in self.lambdas.iter().enumerate() {
            let mut row = vec![format!("{l}")];
            row.extend(self.columns.iter().map(|c| match c.values[i] {
                Some(v) => format!("{v:.12}"),
                None => String::new(),
            }));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// One sampled family member in [`local_magic_prop_check`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalMagicRow {
    pub family: String,
    pub n: usize,
    pub k: usize,
    /// Exact robustness of the marginal.
    pub marginal_rom: f64,
    /// Stabilizer norm of the marginal.
    pub marginal_d: f64,
    /// Analytic upper bound on the marginal, when the family has one.
    pub marginal_ub: Option<f64>,
    /// Depolarizing 0-threshold of the marginal, a lower bound on that of
    /// the whole state.
    pub marginal_threshold: f64,
    /// `marginal_rom > 1` implies `marginal_threshold > 0`.
    pub implication_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalMagicReport {
    pub rows: Vec<LocalMagicRow>,
}

impl LocalMagicReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.implication_holds)
    }
}

fn local_magic_row(
    family: &str,
    n: usize,
    mix: &[(f64, Hypergraph)],
    marginal_ub: Option<f64>,
) -> Result<LocalMagicRow> {
    let k = mix[0].1.n();
    let solver = RomSolver::new(shared_basis(k)?);
    let rho = mixture_pauli(mix)?;
    let marginal_rom = solver.rom(&rho)?.value;
    let th = crate::rom::threshold(&solver, &rho, &NoiseModel::Depolarizing(0.0), 0.0, 1e-4)?;
    let above = marginal_rom > 1.0 + crate::rom::THRESHOLD_SLACK;
    Ok(LocalMagicRow {
        family: family.into(),
        n,
        k,
        marginal_rom,
        marginal_d: rho.stabilizer_norm(),
        marginal_ub,
        marginal_threshold: th.lambda_star,
        implication_holds: !above || th.lambda_star > 0.0,
    })
}

/// Samples the `C^{n-1}Z`, 3-complete and 4-complete families (and the
/// high-degree limit mixture) and checks that marginal magic comes with a
/// positive marginal threshold.
pub fn local_magic_prop_check(ns: &[usize]) -> Result<LocalMagicReport> {
    let mut rows = Vec::new();
    for &n in ns {
        if n >= 3 {
            rows.push(local_magic_row("cnz", n, &cnz_marginal(n)?, Some(cnz_marginal_ub(n)))?);
            rows.push(local_magic_row(
                "3complete",
                n,
                &three_complete_marginal(n, 3)?,
                Some(local_magic_3complete_ub(n, 3)?),
            )?);
            rows.push(local_magic_row("4complete", n, &four_complete_marginal(n)?, None)?);
        }
    }
    rows.push(local_magic_row("4complete-limit", 0, &four_complete_marginal_limit(), None)?);
    rows.push(local_magic_row("high-degree-limit", 0, &high_degree_limit_state(), None)?);
    Ok(LocalMagicReport { rows })
}

/// `n → ∞` limit of [`four_complete_marginal`], the equal mixture.
pub fn four_complete_marginal_limit() -> Vec<(f64, Hypergraph)> {
    four_complete_marginal_states().into_iter().map(|h| (0.25, h)).collect()
}

/// 4-qubit marginal of the Union Jack patch on its first four qubits.
pub fn union_jack_marginal() -> Result<PauliVector> {
    Hypergraph::union_jack_patch().reduced_density(&[1, 2, 3, 4])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::full_mask;

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn mod4_weights_match_binomial_sums() {
        for m in 0..30 {
            let w = mod4_weights(m);
            for (l, wl) in w.iter().enumerate() {
                let direct: f64 = (0..=m).filter(|j| j % 4 == l).map(|j| binom(m, j)).sum::<f64>()
                    / 2f64.powi(m as i32);
                assert!((wl - direct).abs() < 1e-12, "m={m} l={l}");
            }
        }
    }

    #[test]
    fn three_complete_marginal_matches_partial_trace() {
        for n in 4..=7 {
            let h = Hypergraph::complete(n, 3).unwrap();
            let direct = h.reduced_density(&[1, 2, 3]).unwrap();
            let closed = mixture_pauli(&three_complete_marginal(n, 3).unwrap()).unwrap();
            for (a, b) in direct.coeffs().iter().zip(closed.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_complete_marginal_matches_partial_trace() {
        for n in 4..=8 {
            let h = Hypergraph::complete(n, 4).unwrap();
            let direct = h.reduced_density(&[1, 2, 3]).unwrap();
            let closed = mixture_pauli(&four_complete_marginal(n).unwrap()).unwrap();
            for (a, b) in direct.coeffs().iter().zip(closed.coeffs()) {
                assert!((a - b).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn cnz_marginal_matches_partial_trace() {
        for n in 3..=8 {
            let direct = Hypergraph::cnz(n).unwrap().reduced_density(&[1, 2, 3]).unwrap();
            let closed = mixture_pauli(&cnz_marginal(n).unwrap()).unwrap();
            for (a, b) in direct.coeffs().iter().zip(closed.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((closed.stabilizer_norm() - cnz_marginal_d(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_values() {
        assert!((ub_general(1, 1.0) - 1.5).abs() < 1e-15);
        assert!((ub_general(3, 0.0) - 8.0625).abs() < 1e-15);
        assert!((ub_cnz(3, 1.0 / 3.0) - (1.0 + 4.0 * (5.0f64 / 6.0).powi(3))).abs() < 1e-12);
        assert!((local_magic_3complete_ub(16, 3).unwrap() - (1.0 + 2f64.powf(-2.5))).abs() < 1e-15);
        assert_eq!(ub_3complete(5, 0.0), 1.0 + 64.0);
        assert_eq!(distillation_copy_lb(10, 0.5, 1.0).unwrap(), 0);
        let k = distillation_copy_lb(10, 0.5, 2.0).unwrap();
        let expect = (2f64.ln() / (1.0 + 4.0 * 0.75f64.powi(10)).ln()).ceil() as u64;
        assert_eq!(k, expect);
    }

    #[test]
    fn pow_guard_saturates() {
        assert!(pow_n(2.0, 2000).is_infinite());
        assert_eq!(pow_n(0.5, 5000), 0.0);
        assert!((pow_n(1.001, 600) - 1.001f64.powi(600)).abs() < 1e-9);
        assert!(ub_general(4000, 0.1).is_infinite());
        assert!((ub_cnz(5000, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn added_full_edge() {
        let n = 6;
        for l in [0.0, 0.3, 1.0] {
            let b = added_edges_bound(1.0, &[full_mask(n)], l, 1.0).unwrap();
            assert!((b - (1.0 + 6.0 * (1.0 - l / 2.0).powi(n as i32))).abs() < 1e-12);
        }
        assert_eq!(added_edges_bound(1.7, &[], 0.4, 3.0).unwrap(), 1.7);
        assert!(added_edges_bound(1.0, &[3, 3], 0.1, 1.0).is_err());
    }

    #[test]
    fn near_n_edges() {
        let l = 0.2f64;
        let b = near_n_edge_bound(1.0, 8, &[8], 0, l).unwrap();
        assert!((b - (1.0 + 4.0 * (1.0 - l / 2.0).powi(8))).abs() < 1e-12);
        let b = near_n_edge_bound(1.0, 8, &[6, 6, 6], 2, l).unwrap();
        assert!((b - (1.0 + 48.0 * (1.0 - l / 2.0).powi(8))).abs() < 1e-12);
        assert!(near_n_edge_bound(1.0, 8, &[5], 2, l).is_err());
    }

    #[test]
    fn family_parse() {
        assert_eq!(Family::parse("cnz:7").unwrap(), Family::Cnz(7));
        assert_eq!(Family::parse("ccz").unwrap(), Family::Ccz);
        assert!(Family::parse("3complete").is_err());
        assert!(Family::parse("triangle:4").is_err());
    }
}
