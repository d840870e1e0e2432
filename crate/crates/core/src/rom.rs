//! Exact robustness of magic by linear programming over the stabilizer
//! states, noise thresholds and the magic capacity of diagonal gates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::lp::{solve_l1, ColumnMatrix, L1Solution, LpOptions};
use crate::pauli::{NoiseModel, PauliVector};
use crate::stabilizer::StabilizerBasis;

/// Entries with magnitude below this are dropped from reported
/// decompositions.
const DECOMPOSITION_CUTOFF: f64 = 1e-12;
/// Slack used when comparing a robustness value with `1 + ε`.
pub const THRESHOLD_SLACK: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct RomResult {
    /// `||x||_1` of the optimal signed decomposition.
    pub value: f64,
    /// Certified lower bound from the rescaled dual witness.
    pub lower_bound: f64,
    /// Signed weights over basis indices, `Σ c_i σ_i = ρ`.
    pub decomposition: Vec<(usize, f64)>,
    /// Dual witness `A`, stored by its Pauli coefficients `Tr(A P)`.
    #[serde(skip)]
    pub witness: Option<PauliVector>,
    /// `||Σ c_i σ_i - ρ||_∞` over Pauli coefficients.
    pub residual: f64,
    pub iterations: usize,
}

impl RomResult {
    /// Negative mass `a` in `ρ = (1+a) σ - a τ`.
    pub fn negative_mass(&self) -> f64 {
        self.decomposition.iter().filter(|c| c.1 < 0.0).fold(0.0, |a, c| a - c.1)
    }

    pub fn gap(&self) -> f64 {
        self.value - self.lower_bound
    }
}

/// LP front end bound to one stabilizer basis.
pub struct RomSolver<'a> {
    basis: &'a StabilizerBasis,
    matrix: ColumnMatrix,
    options: LpOptions,
}

impl<'a> RomSolver<'a> {
    pub fn new(basis: &'a StabilizerBasis) -> Self {
        let n = basis.n();
        let mut matrix = ColumnMatrix::new(1 << (2 * n));
        for j in 0..basis.len() {
            matrix.push_column(basis.column(j));
        }
        RomSolver {
            basis,
            matrix,
            options: LpOptions::default(),
        }
    }

    pub fn with_options(mut self, options: LpOptions) -> Self {
        self.options = options;
        self
    }

    pub fn basis(&self) -> &StabilizerBasis {
        self.basis
    }

    pub fn options(&self) -> &LpOptions {
        &self.options
    }

    pub fn rom(&self, rho: &PauliVector) -> Result<RomResult> {
        let n = self.basis.n();
        if rho.n() != n {
            return Err(Error::input(format!(
                "state has {} qubits, basis has {n}",
                rho.n()
            )));
        }
        if (rho.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!(
                "not a density operator: trace coefficient {}",
                rho.trace()
            )));
        }
        let sol = solve_l1(&self.matrix, rho.coeffs(), &self.options)?;
        Ok(self.to_result(sol))
    }

    fn to_result(&self, sol: L1Solution) -> RomResult {
        let n = self.basis.n();
        let decomposition = sol
            .x
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > DECOMPOSITION_CUTOFF)
            .map(|(i, c)| (i, *c))
            .collect();
        let dim = (1u64 << n) as f64;
        let witness = PauliVector::from_coeffs(n, sol.y.iter().map(|y| y * dim).collect()).ok();
        RomResult {
            value: sol.primal,
            lower_bound: sol.dual,
            decomposition,
            witness,
            residual: sol.residual,
            iterations: sol.iterations,
        }
    }

    pub fn rom_noisy(&self, h: &Hypergraph, noise: &NoiseModel) -> Result<RomResult> {
        let rho = h.pauli_vector()?.apply_noise(noise)?;
        self.rom(&rho)
    }
}

pub fn rom(rho: &PauliVector, basis: &StabilizerBasis) -> Result<RomResult> {
    RomSolver::new(basis).rom(rho)
}

pub fn rom_noisy(h: &Hypergraph, noise: &NoiseModel, basis: &StabilizerBasis) -> Result<RomResult> {
    RomSolver::new(basis).rom_noisy(h, noise)
}

/// Pauli vector of a pure state given by complex amplitudes, for callers
/// building states by hand.
pub fn pure_state(psi: &[Complex64]) -> Result<PauliVector> {
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if norm <= 0.0 {
        return Err(Error::input("zero state vector"));
    }
    let s = 1.0 / norm.sqrt();
    let v: Vec<Complex64> = psi.iter().map(|a| a * s).collect();
    PauliVector::from_amplitudes(&v)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdResult {
    pub lambda_star: f64,
    pub epsilon: f64,
    /// Final interval `[λ⁻, λ⁺]` with `R(λ⁻) > 1+ε >= R(λ⁺)`.
    pub bracket: (f64, f64),
    /// Number of LP solves.
    pub evaluations: usize,
    /// Set when the evaluated profile was not monotone and the grid search
    /// fallback produced the answer.
    pub fallback: bool,
}

/// Smallest `λ` in `[0, 1]` with `R(noise_λ(ρ)) <= 1 + ε`, found by
/// bisection to within `tol`.
pub fn threshold(
    solver: &RomSolver,
    rho: &PauliVector,
    noise: &NoiseModel,
    epsilon: f64,
    tol: f64,
) -> Result<ThresholdResult> {
    if epsilon < 0.0 || tol <= 0.0 {
        return Err(Error::input("ε must be >= 0 and the tolerance positive"));
    }
    let mut evaluations = 0;
    let mut eval = |l: f64| -> Result<f64> {
        evaluations += 1;
        Ok(solver.rom(&rho.apply_noise(&noise.with_lambda(l))?)?.value)
    };
    let level = 1.0 + epsilon + THRESHOLD_SLACK;
    let r0 = eval(0.0)?;
    if r0 <= level {
        return Ok(ThresholdResult {
            lambda_star: 0.0,
            epsilon,
            bracket: (0.0, 0.0),
            evaluations,
            fallback: false,
        });
    }
    let mut history = vec![(0.0, r0)];
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let r = eval(mid)?;
        history.push((mid, r));
        if r <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    history.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = history.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-6);
    if monotone {
        return Ok(ThresholdResult {
            lambda_star: hi,
            epsilon,
            bracket: (lo, hi),
            evaluations,
            fallback: false,
        });
    }
    log::warn!("robustness is not monotone along the noise path; falling back to a grid scan");
    let grid = 64;
    let mut first = None;
    for i in 0..=grid {
        let l = i as f64 / grid as f64;
        if eval(l)? <= level {
            first = Some(l);
            break;
        }
    }
    let hi0 = first.unwrap_or(1.0);
    let (mut lo, mut hi) = ((hi0 - 1.0 / grid as f64).max(0.0), hi0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        lambda_star: hi,
        epsilon,
        bracket: (lo, hi),
        evaluations,
        fallback: true,
    })
}

/// A gate diagonal in the computational basis, `U|s> = (-1)^{g(s)} |s>`
/// with `g` the characteristic function of a hypergraph (so `C^{n-1}Z`
/// powers and products of controlled-Z gates).
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalGate {
    pub phases: Hypergraph,
}

impl DiagonalGate {
    pub fn cnz(n: usize) -> Result<Self> {
        Ok(DiagonalGate {
            phases: Hypergraph::cnz(n)?,
        })
    }

    pub fn from_hypergraph(h: Hypergraph) -> Self {
        DiagonalGate { phases: h }
    }

    pub fn n(&self) -> usize {
        self.phases.n()
    }

    /// Conjugates a state by the gate: `P_(z,x)` picks up the diagonal
    /// factor `(-1)^{g(t) + g(t ^ x)}` in the dense picture, so the action
    /// is applied to the dense matrix.
    pub fn apply(&self, rho: &PauliVector) -> Result<PauliVector> {
        let n = self.n();
        if rho.n() != n {
            return Err(Error::input("gate and state sizes differ"));
        }
        let signs = self.phases.signs()?;
        let mut m = rho.to_dense();
        let dim = 1usize << n;
        for r in 0..dim {
            for c in 0..dim {
                if signs[r] != signs[c] {
                    m[r * dim + c] = -m[r * dim + c];
                }
            }
        }
        PauliVector::from_dense(n, &m)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityResult {
    pub value: f64,
    /// Basis index of a maximizing input.
    pub argmax: usize,
    /// Number of distinct output states solved.
    pub distinct_outputs: usize,
}

/// Magic capacity of a diagonal gate: the largest robustness of
/// `noise(U σ U†)` over pure stabilizer inputs `σ`. No ancilla is needed
/// for diagonal gates. Inputs with identical outputs are solved once.
pub fn magic_capacity_diagonal(
    solver: &RomSolver,
    gate: &DiagonalGate,
    noise: Option<&NoiseModel>,
) -> Result<CapacityResult> {
    let basis = solver.basis();
    if gate.n() != basis.n() {
        return Err(Error::input("gate and basis sizes differ"));
    }
    let mut outputs: Vec<(Vec<i64>, usize, PauliVector)> = (0..basis.len())
        .into_par_iter()
        .map(|j| {
            let mut out = gate.apply(&basis.state(j))?;
            if let Some(nm) = noise {
                out = out.apply_noise(nm)?;
            }
            let key = out.coeffs().iter().map(|c| (c * 1e9).round() as i64).collect();
            Ok((key, j, out))
        })
        .collect::<Result<_>>()?;
    outputs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    outputs.dedup_by(|a, b| a.0 == b.0);
    let values: Vec<(usize, f64)> = outputs
        .par_iter()
        .map(|(_, j, rho)| {
            // Outputs that are still stabilizer states need no LP.
            if basis.n() <= 4 && basis.index_of(rho).is_some() {
                return Ok((*j, 1.0));
            }
            Ok((*j, solver.rom(rho)?.value))
        })
        .collect::<Result<_>>()?;
    let value = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    // Smallest basis index among the (numerically) tied maximizers.
    let argmax = values
        .iter()
        .filter(|v| v.1 >= value - 1e-9)
        .map(|v| v.0)
        .min()
        .unwrap_or(0);
    Ok(CapacityResult {
        value,
        argmax,
        distinct_outputs: values.len(),
    })
}

/// Noise rate at which the capacity of `gate` under the given noise family
/// first drops to `1 + ε`, by bisection.
pub fn capacity_threshold(
    solver: &RomSolver,
    gate: &DiagonalGate,
    noise: &NoiseModel,
    epsilon: f64,
    tol: f64,
) -> Result<ThresholdResult> {
    let level = 1.0 + epsilon + THRESHOLD_SLACK;
    let mut evaluations = 0;
    let mut eval = |l: f64| -> Result<f64> {
        evaluations += 1;
        Ok(magic_capacity_diagonal(solver, gate, Some(&noise.with_lambda(l)))?.value)
    };
    if eval(0.0)? <= level {
        return Ok(ThresholdResult {
            lambda_star: 0.0,
            epsilon,
            bracket: (0.0, 0.0),
            evaluations,
            fallback: false,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? <= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        lambda_star: hi,
        epsilon,
        bracket: (lo, hi),
        evaluations,
        fallback: false,
    })
}
