//! Discrete Wigner functions for qudits of odd prime dimension.
//!
//! Single-qudit operators follow `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j|j⟩` and
//! `T_(z,x) = τ^{-zx} Z^z X^x` with `τ = exp((d+1)πi/d) = ω^{(d+1)/2}`, so
//! every phase is an exact power of `ω` and is tracked as an integer
//! exponent mod `d`. The phase-point operator acts as
//! `A_(z,x)|j⟩ = ω^{2z(x-j)}|2x-j⟩`.
//!
//! Multi-qudit indices put qudit `i` at digit `i` (weight `d^i`). Wigner
//! tables are stored x-major: entry `x·dⁿ + z`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::csv_err;
use crate::error::{Error, Result};
use crate::hypergraph::EdgeList;

/// Largest Wigner table (number of phase points) we allocate: `3^16`.
pub const MAX_PHASE_POINTS: usize = 43_046_721;

/// Imaginary residue tolerated on a Wigner entry before the input is
/// rejected as non-Hermitian.
pub const IMAG_TOLERANCE: f64 = 1e-10;

fn is_odd_prime(d: u32) -> bool {
    d >= 3 && d % 2 == 1 && (3..).step_by(2).take_while(|p| p * p <= d).all(|p| d % p != 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QuditSystem {
    d: u32,
    n: usize,
}

impl QuditSystem {
    pub fn new(d: u32, n: usize) -> Result<Self> {
        if !is_odd_prime(d) {
            return Err(Error::input(format!("d={d} is not an odd prime")));
        }
        if n == 0 {
            return Err(Error::input("need at least one qudit"));
        }
        let points = (d as u128).checked_pow(2 * n as u32);
        if points.map_or(true, |p| p > MAX_PHASE_POINTS as u128) {
            return Err(Error::capacity(format!(
                "d={d}, n={n} has more than {MAX_PHASE_POINTS} phase points"
            )));
        }
        Ok(QuditSystem { d, n })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension `dⁿ`.
    pub fn dim(&self) -> usize {
        (self.d as usize).pow(self.n as u32)
    }

    pub fn phase_points(&self) -> usize {
        self.dim() * self.dim()
    }

    /// `ω^k` for any integer `k`.
    pub fn omega_pow(&self, k: i64) -> Complex64 {
        let d = self.d as i64;
        let r = k.rem_euclid(d) as f64;
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r / d as f64)
    }

    pub fn omega(&self) -> Complex64 {
        self.omega_pow(1)
    }

    pub fn tau(&self) -> Complex64 {
        Complex64::from_polar(1.0, (self.d as f64 + 1.0) * std::f64::consts::PI / self.d as f64)
    }

    /// Exponent `e` with `τ = ω^e`.
    fn tau_exponent(&self) -> i64 {
        (self.d as i64 + 1) / 2
    }

    /// Base-`d` digits of a basis index, qudit 0 first.
    pub fn digits(&self, mut idx: usize) -> Vec<u32> {
        let d = self.d as usize;
        (0..self.n)
            .map(|_| {
                let r = idx % d;
                idx /= d;
                r as u32
            })
            .collect()
    }

    pub fn index(&self, digits: &[u32]) -> usize {
        digits
            .iter()
            .rev()
            .fold(0usize, |acc, &v| acc * self.d as usize + (v % self.d) as usize)
    }

    /// Single-qudit shift `X` as a row-major `d×d` matrix.
    pub fn shift(&self) -> Vec<Complex64> {
        let d = self.d as usize;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            m[((j + 1) % d) * d + j] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Single-qudit clock `Z` as a row-major `d×d` matrix.
    pub fn clock(&self) -> Vec<Complex64> {
        let d = self.d as usize;
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            m[j * d + j] = self.omega_pow(j as i64);
        }
        m
    }

    /// Single-qudit Heisenberg-Weyl operator `T_(z,x)`.
    pub fn weyl(&self, z: u32, x: u32) -> Vec<Complex64> {
        let d = self.d as usize;
        let (z, x) = ((z % self.d) as i64, (x % self.d) as i64);
        let mut m = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d as i64 {
            let row = ((j + x) % d as i64) as usize;
            m[row * d + j as usize] = self.omega_pow(z * (j + x) - self.tau_exponent() * z * x);
        }
        m
    }
}

/// A point `u = (z, x)` of the discrete phase space `Z_dⁿ × Z_dⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PhasePoint {
    pub z: Vec<u32>,
    pub x: Vec<u32>,
}

impl PhasePoint {
    pub fn new(sys: &QuditSystem, z: &[u32], x: &[u32]) -> Result<Self> {
        if z.len() != sys.n || x.len() != sys.n {
            return Err(Error::input(format!(
                "phase point needs {} components in z and x",
                sys.n
            )));
        }
        Ok(PhasePoint {
            z: z.iter().map(|v| v % sys.d).collect(),
            x: x.iter().map(|v| v % sys.d).collect(),
        })
    }

    pub fn origin(sys: &QuditSystem) -> Self {
        PhasePoint {
            z: vec![0; sys.n],
            x: vec![0; sys.n],
        }
    }

    /// Position of this point in a [`WignerTable`].
    pub fn table_index(&self, sys: &QuditSystem) -> usize {
        sys.index(&self.x) * sys.dim() + sys.index(&self.z)
    }

    pub fn from_table_index(sys: &QuditSystem, idx: usize) -> Self {
        PhasePoint {
            z: sys.digits(idx % sys.dim()),
            x: sys.digits(idx / sys.dim()),
        }
    }

    pub fn sub(&self, other: &PhasePoint, sys: &QuditSystem) -> PhasePoint {
        let d = sys.d;
        PhasePoint {
            z: self.z.iter().zip(&other.z).map(|(a, b)| (a + d - b) % d).collect(),
            x: self.x.iter().zip(&other.x).map(|(a, b)| (a + d - b) % d).collect(),
        }
    }
}

fn mat_mul(d: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

fn dagger(d: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j].conj();
        }
    }
    out
}

/// `A_(0,0) = Σ_j |−j⟩⟨j|` for one qudit.
pub fn parity_operator(sys: &QuditSystem) -> Vec<Complex64> {
    let d = sys.d as usize;
    let mut m = vec![Complex64::new(0.0, 0.0); d * d];
    for j in 0..d {
        m[((d - j) % d) * d + j] = Complex64::new(1.0, 0.0);
    }
    m
}

/// `A_u` as one row-major `d×d` factor per qudit, built as `T_u A_0 T_u†`.
pub fn phase_point_operator(sys: &QuditSystem, u: &PhasePoint) -> Vec<Vec<Complex64>> {
    let d = sys.d as usize;
    let a0 = parity_operator(sys);
    u.z.iter()
        .zip(&u.x)
        .map(|(&z, &x)| {
            let t = sys.weyl(z, x);
            mat_mul(d, &mat_mul(d, &t, &a0), &dagger(d, &t))
        })
        .collect()
}

/// Real quasiprobabilities `W_ρ(u)` over all `d^{2n}` phase points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerTable {
    sys: QuditSystem,
    values: Vec<f64>,
}

impl WignerTable {
    pub fn system(&self) -> &QuditSystem {
        &self.sys
    }

    /// Entries in x-major order, see [`PhasePoint::table_index`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, u: &PhasePoint) -> f64 {
        self.values[u.table_index(&self.sys)]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Wigner negativity, the total negative mass.
    pub fn sn(&self) -> f64 {
        self.values.iter().filter(|v| **v < 0.0).fold(0.0, |a, v| a - v)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rom_lb(&self) -> f64 {
        1.0 + 2.0 * self.sn()
    }

    /// Table of `E_λ^{⊗n}(ρ)`. Because `I/d = d^{-2} Σ_u A_u` on one qudit,
    /// the channel acts on the table one qudit at a time as
    /// `W ↦ (1−λ)W + λ/d² · Σ_{(z_i,x_i)} W`.
    pub fn depolarize(&self, lambda: f64) -> Result<WignerTable> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::input(format!("noise rate {lambda} outside [0, 1]")));
        }
        let d = self.sys.d as usize;
        let dim = self.sys.dim();
        let mut w = self.values.clone();
        let mix = lambda / (d * d) as f64;
        for q in 0..self.sys.n {
            let step = d.pow(q as u32);
            let offsets: Vec<usize> = (0..d)
                .flat_map(|xi| (0..d).map(move |zi| xi * step * dim + zi * step))
                .collect();
            let block = d * step * dim;
            w.par_chunks_mut(block).for_each(|chunk| {
                let mut buf = vec![0.0; d * d];
                for base in 0..step * dim {
                    if (base / step) % d != 0 || (base / dim) % (d * step) >= step {
                        continue;
                    }
                    let mut sum = 0.0;
                    for (b, &o) in buf.iter_mut().zip(&offsets) {
                        *b = chunk[base + o];
                        sum += *b;
                    }
                    for (b, &o) in buf.iter().zip(&offsets) {
                        chunk[base + o] = (1.0 - lambda) * b + mix * sum;
                    }
                }
            });
        }
        Ok(WignerTable {
            sys: self.sys,
            values: w,
        })
    }

    /// Smallest `λ` on a bisection down to `tol` at which the noisy table
    /// has no entry below `-1e-12`.
    pub fn negativity_vanishing_point(&self, tol: f64) -> Result<f64> {
        let positive = |l: f64| -> Result<bool> { Ok(self.depolarize(l)?.min() >= -1e-12) };
        if positive(0.0)? {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, max_negativity_threshold(self.sys.d));
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if positive(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Computes `W(z,x) = d^{-n} Σ_s ω^{2z·(x−s)} g_x(s)` where
/// `g_x(s) = ⟨s|ρ|2x−s⟩`, one x-slice at a time. The sum over `s` is a
/// per-qudit discrete Fourier transform evaluated at `k = 2z`.
fn wigner_from_pairs<F>(sys: &QuditSystem, pair: F) -> Result<WignerTable>
where
    F: Fn(usize, usize) -> Complex64 + Sync,
{
    let d = sys.d as usize;
    let dim = sys.dim();
    let n = sys.n;
    let digits: Vec<Vec<u32>> = (0..dim).map(|i| sys.digits(i)).collect();
    let powers: Vec<usize> = (0..n).map(|q| d.pow(q as u32)).collect();
    // DFT kernel ω^{-ks}
    let kernel: Vec<Complex64> = (0..d * d)
        .map(|i| sys.omega_pow(-(((i / d) * (i % d)) as i64)))
        .collect();
    // k = 2z mod d
    let double: Vec<usize> = (0..dim)
        .map(|z| {
            let dz: Vec<u32> = digits[z].iter().map(|v| (2 * v) % sys.d).collect();
            sys.index(&dz)
        })
        .collect();
    let scale = 1.0 / dim as f64;
    let mut values = vec![0.0f64; dim * dim];
    let residue = values
        .par_chunks_mut(dim)
        .enumerate()
        .map(|(x, out)| {
            let xd = &digits[x];
            let mut g: Vec<Complex64> = (0..dim)
                .map(|s| {
                    let t: usize = digits[s]
                        .iter()
                        .zip(xd)
                        .zip(&powers)
                        .map(|((&sv, &xv), &p)| ((2 * xv + sys.d - sv) % sys.d) as usize * p)
                        .sum();
                    pair(s, t)
                })
                .collect();
            let mut fiber = vec![Complex64::new(0.0, 0.0); d];
            for &p in &powers {
                for base in (0..dim).filter(|i| (i / p) % d == 0) {
                    for (k, f) in fiber.iter_mut().enumerate() {
                        *f = (0..d).map(|s| kernel[k * d + s] * g[base + s * p]).sum();
                    }
                    for (k, f) in fiber.iter().enumerate() {
                        g[base + k * p] = *f;
                    }
                }
            }
            let mut worst = 0.0f64;
            for (z, o) in out.iter_mut().enumerate() {
                let e: i64 = digits[z].iter().zip(xd).map(|(&a, &b)| (a * b) as i64).sum();
                let v = sys.omega_pow(2 * e) * g[double[z]] * scale;
                worst = worst.max(v.im.abs());
                *o = v.re;
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    if residue > IMAG_TOLERANCE {
        return Err(Error::input(format!(
            "Wigner entries have imaginary part {residue:.3e}; state is not Hermitian"
        )));
    }
    Ok(WignerTable { sys: *sys, values })
}

fn check_len(sys: &QuditSystem, len: usize, what: &str) -> Result<()> {
    if len != sys.dim() {
        return Err(Error::input(format!(
            "{what} has length {len}, expected {}",
            sys.dim()
        )));
    }
    Ok(())
}

/// Wigner table of a normalized pure state.
pub fn wigner_pure(sys: &QuditSystem, psi: &[Complex64]) -> Result<WignerTable> {
    check_len(sys, psi.len(), "amplitude vector")?;
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::input(format!("state has norm² {norm}, expected 1")));
    }
    wigner_from_pairs(sys, |s, t| psi[s] * psi[t].conj())
}

/// Wigner table of a row-major `dⁿ×dⁿ` density matrix.
pub fn wigner_density(sys: &QuditSystem, rho: &[Complex64]) -> Result<WignerTable> {
    check_len(sys, (rho.len() as f64).sqrt().round() as usize, "density matrix side")?;
    if rho.len() != sys.dim() * sys.dim() {
        return Err(Error::input("density matrix is not square"));
    }
    let dim = sys.dim();
    wigner_from_pairs(sys, |s, t| rho[s * dim + t])
}

pub fn noisy_wigner_pure(sys: &QuditSystem, psi: &[Complex64], lambda: f64) -> Result<WignerTable> {
    wigner_pure(sys, psi)?.depolarize(lambda)
}

pub fn noisy_wigner_density(
    sys: &QuditSystem,
    rho: &[Complex64],
    lambda: f64,
) -> Result<WignerTable> {
    wigner_density(sys, rho)?.depolarize(lambda)
}

/// `|ψ⟩⟨ψ|` as a row-major matrix.
pub fn density_from_pure(psi: &[Complex64]) -> Vec<Complex64> {
    let dim = psi.len();
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    for s in 0..dim {
        for t in 0..dim {
            rho[s * dim + t] = psi[s] * psi[t].conj();
        }
    }
    rho
}

/// Dense `E_λ^{⊗n}(ρ)`, one qudit at a time:
/// `ρ ↦ (1−λ)ρ + λ Tr_i(ρ) ⊗ I/d`.
pub fn depolarize_density(sys: &QuditSystem, rho: &[Complex64], lambda: f64) -> Vec<Complex64> {
    let d = sys.d as usize;
    let dim = sys.dim();
    let mut out = rho.to_vec();
    for q in 0..sys.n {
        let p = d.pow(q as u32);
        let cur = out.clone();
        for s in 0..dim {
            for t in 0..dim {
                let (sq, tq) = ((s / p) % d, (t / p) % d);
                let mut v = (1.0 - lambda) * cur[s * dim + t];
                if sq == tq {
                    let (s0, t0) = (s - sq * p, t - tq * p);
                    let tr: Complex64 = (0..d).map(|j| cur[(s0 + j * p) * dim + t0 + j * p]).sum();
                    v += tr * (lambda / d as f64);
                }
                out[s * dim + t] = v;
            }
        }
    }
    out
}

/// Applies `T_v` to a pure state.
pub fn apply_weyl(sys: &QuditSystem, v: &PhasePoint, psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = psi.to_vec();
    let d = sys.d as usize;
    for q in 0..sys.n {
        let t = sys.weyl(v.z[q], v.x[q]);
        let p = d.pow(q as u32);
        let cur = out.clone();
        for (s, o) in out.iter_mut().enumerate() {
            let sq = (s / p) % d;
            let base = s - sq * p;
            *o = (0..d).map(|j| t[sq * d + j] * cur[base + j * p]).sum();
        }
    }
    out
}

/// Partial trace of a pure state over the 1-based qudits in `traced`,
/// returned as a row-major density matrix on the remaining qudits in
/// increasing order.
pub fn reduced_density_pure(
    sys: &QuditSystem,
    psi: &[Complex64],
    traced: &[usize],
) -> Result<Vec<Complex64>> {
    check_len(sys, psi.len(), "amplitude vector")?;
    let mut is_traced = vec![false; sys.n];
    for &v in traced {
        if v == 0 || v > sys.n {
            return Err(Error::input(format!("qudit {v} outside 1..={}", sys.n)));
        }
        is_traced[v - 1] = true;
    }
    let d = sys.d as usize;
    let keep: Vec<usize> = (0..sys.n).filter(|q| !is_traced[*q]).collect();
    let kdim = d.pow(keep.len() as u32);
    let mut rho = vec![Complex64::new(0.0, 0.0); kdim * kdim];
    let split = |s: usize| -> (usize, usize) {
        let dg = sys.digits(s);
        let k = keep.iter().rev().fold(0, |a, &q| a * d + dg[q] as usize);
        let r = (0..sys.n)
            .filter(|q| is_traced[*q])
            .rev()
            .fold(0, |a, q| a * d + dg[q] as usize);
        (k, r)
    };
    let parts: Vec<(usize, usize)> = (0..psi.len()).map(split).collect();
    let rdim = psi.len() / kdim;
    let mut by_rest = vec![Vec::new(); rdim];
    for (s, &(k, r)) in parts.iter().enumerate() {
        by_rest[r].push((k, psi[s]));
    }
    for group in &by_rest {
        for &(a, va) in group {
            for &(b, vb) in group {
                rho[a * kdim + b] += va * vb.conj();
            }
        }
    }
    Ok(rho)
}

/// Computational-basis state `|j⟩`.
pub fn basis_state(sys: &QuditSystem, j: usize) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(0.0, 0.0); sys.dim()];
    psi[j % sys.dim()] = Complex64::new(1.0, 0.0);
    psi
}

/// Single-qudit state `(|1⟩ − |d−1⟩)/√2`, negative at the origin for every
/// noise rate below `d/(d+1)`.
pub fn threshold_witness_state(sys: &QuditSystem) -> Result<Vec<Complex64>> {
    if sys.n != 1 {
        return Err(Error::input("the witness state is a single qudit"));
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); sys.dim()];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    psi[1] = Complex64::new(h, 0.0);
    psi[sys.d as usize - 1] = Complex64::new(-h, 0.0);
    Ok(psi)
}

/// Noise rate `d/(d+1)` at which `E_λ(A_0)` turns positive semidefinite.
pub fn max_negativity_threshold(d: u32) -> f64 {
    d as f64 / (d as f64 + 1.0)
}

/// Eigenvalues of `E_λ(A_(0,0))`: `1 − (d−1)λ/d` on the +1 space and
/// `(d+1)λ/d − 1` on the −1 space.
pub fn noisy_parity_eigenvalues(d: u32, lambda: f64) -> (f64, f64) {
    let d = d as f64;
    (1.0 - (d - 1.0) * lambda / d, (d + 1.0) * lambda / d - 1.0)
}

/// Qudit hypergraph with edge multiplicities in `1..d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuditHypergraph {
    n: usize,
    d: u32,
    /// Sorted `(vertex mask, multiplicity)` pairs.
    edges: Vec<(u32, u32)>,
}

impl QuditHypergraph {
    /// Builds from 1-based vertex lists. Repeated edges add their
    /// multiplicities mod `d`; edges left at zero are dropped.
    pub fn new(n: usize, d: u32, edges: &[(Vec<usize>, u32)]) -> Result<Self> {
        if !is_odd_prime(d) {
            return Err(Error::input(format!("d={d} is not an odd prime")));
        }
        if n > 32 {
            return Err(Error::capacity("at most 32 qudits"));
        }
        let mut acc: std::collections::BTreeMap<u32, u32> = Default::default();
        for (verts, mult) in edges {
            let mut mask = 0u32;
            for &v in verts {
                if v == 0 || v > n {
                    return Err(Error::input(format!("vertex {v} outside 1..={n}")));
                }
                if mask & (1 << (v - 1)) != 0 {
                    return Err(Error::input(format!("vertex {v} repeated in an edge")));
                }
                mask |= 1 << (v - 1);
            }
            if mask == 0 {
                return Err(Error::input("empty edge"));
            }
            let e = acc.entry(mask).or_insert(0);
            *e = (*e + mult % d) % d;
        }
        Ok(QuditHypergraph {
            n,
            d,
            edges: acc.into_iter().filter(|(_, m)| *m != 0).collect(),
        })
    }

    /// `(C^{n-1}Z)^α |+ⁿ⟩`.
    pub fn cnz(n: usize, d: u32, alpha: u32) -> Result<Self> {
        Self::new(n, d, &[((1..=n).collect(), alpha)])
    }

    pub fn empty(n: usize, d: u32) -> Result<Self> {
        Self::new(n, d, &[])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = EdgeList::parse(text)?;
        if parsed.d == 2 {
            return Err(Error::input("header says d=2; use the qubit loader"));
        }
        Self::new(parsed.n, parsed.d, &parsed.edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n={} d={}\n", self.n, self.d);
        for (verts, m) in self.edge_lists() {
            let parts: Vec<String> = verts.iter().map(|v| v.to_string()).collect();
            s.push_str(&parts.join(" "));
            if m != 1 {
                s.push_str(&format!(" *{m}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn system(&self) -> Result<QuditSystem> {
        QuditSystem::new(self.d, self.n)
    }

    /// Edges as 1-based vertex lists with multiplicities.
    pub fn edge_lists(&self) -> Vec<(Vec<usize>, u32)> {
        self.edges
            .iter()
            .map(|&(mask, m)| ((0..self.n).filter(|q| mask >> q & 1 == 1).map(|q| q + 1).collect(), m))
            .collect()
    }

    /// `f(s) = Σ_e α_e Π_{i∈e} s_i mod d`.
    pub fn characteristic(&self, s: &[u32]) -> u32 {
        let d = self.d as u64;
        let mut f = 0u64;
        for &(mask, m) in &self.edges {
            let mut prod = m as u64;
            for (q, &v) in s.iter().enumerate() {
                if mask >> q & 1 == 1 {
                    prod = prod * v as u64 % d;
                }
            }
            f = (f + prod) % d;
        }
        f as u32
    }

    /// Amplitudes `d^{-n/2} ω^{f(s)}`.
    pub fn state_vector(&self) -> Result<Vec<Complex64>> {
        let sys = self.system()?;
        let amp = (sys.dim() as f64).sqrt().recip();
        Ok((0..sys.dim())
            .into_par_iter()
            .map(|s| sys.omega_pow(self.characteristic(&sys.digits(s)) as i64) * amp)
            .collect())
    }

    pub fn wigner(&self) -> Result<WignerTable> {
        wigner_pure(&self.system()?, &self.state_vector()?)
    }

    pub fn noisy_wigner(&self, lambda: f64) -> Result<WignerTable> {
        self.wigner()?.depolarize(lambda)
    }

    /// Reduced state after tracing out the 1-based qudits in `traced`, as
    /// a mixture `d^{-|I|} Σ_b Ψ^{(I,b)}`. Each label `b` removes the traced
    /// qudits and scales the multiplicity of every edge through them by
    /// the product of their labels. Identical children are merged and
    /// their weights added; remaining qudits are renumbered in order.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<Vec<(f64, QuditHypergraph)>> {
        let mut tmask = 0u32;
        for &v in traced {
            if v == 0 || v > self.n {
                return Err(Error::input(format!("vertex {v} outside 1..={}", self.n)));
            }
            tmask |= 1 << (v - 1);
        }
        let tq: Vec<usize> = (0..self.n).filter(|q| tmask >> q & 1 == 1).collect();
        let keep: Vec<usize> = (0..self.n).filter(|q| tmask >> q & 1 == 0).collect();
        let d = self.d as usize;
        let k = tq.len();
        let count = d.checked_pow(k as u32).filter(|c| *c <= 1 << 24).ok_or_else(|| {
            Error::capacity(format!("{k} traced qudits give too many labels"))
        })?;
        let weight = 1.0 / count as f64;
        let mut acc: std::collections::BTreeMap<Vec<(u32, u32)>, f64> = Default::default();
        for label in 0..count {
            let mut b = vec![0u64; self.n];
            let mut rest = label;
            for &q in &tq {
                b[q] = (rest % d) as u64;
                rest /= d;
            }
            let mut child: std::collections::BTreeMap<u32, u32> = Default::default();
            for &(mask, m) in &self.edges {
                let mut mult = m as u64;
                for &q in &tq {
                    if mask >> q & 1 == 1 {
                        mult = mult * b[q] % d as u64;
                    }
                }
                let new_mask = keep
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| mask >> q & 1 == 1)
                    .fold(0u32, |a, (i, _)| a | 1 << i);
                if mult != 0 && new_mask != 0 {
                    let e = child.entry(new_mask).or_insert(0);
                    *e = (*e + mult as u32) % self.d;
                }
            }
            let edges: Vec<(u32, u32)> = child.into_iter().filter(|(_, m)| *m != 0).collect();
            *acc.entry(edges).or_insert(0.0) += weight;
        }
        Ok(acc
            .into_iter()
            .map(|(edges, w)| {
                (
                    w,
                    QuditHypergraph {
                        n: keep.len(),
                        d: self.d,
                        edges,
                    },
                )
            })
            .collect())
    }
}

/// Closed form for `W_{E_λ^{⊗n}(Φ_n)}(1, 0)` of the qutrit `C^{n-1}Z`
/// state, valid for `n ≡ 3 mod 4`:
/// `3^{-2n}[−½·3^{(n+1)/2}(1−λ)ⁿ + λⁿ + ¾(1−λ/3)ⁿ + ¾(1−5λ/3)ⁿ]`.
pub fn qutrit_cnz_w10(n: usize, lambda: f64) -> Result<f64> {
    if n % 4 != 3 {
        return Err(Error::input(format!("n={n} is not 3 mod 4")));
    }
    let nf = n as i32;
    let v = -0.5 * 3f64.powf((n as f64 + 1.0) / 2.0) * (1.0 - lambda).powi(nf)
        + lambda.powi(nf)
        + 0.75 * (1.0 - lambda / 3.0).powi(nf)
        + 0.75 * (1.0 - 5.0 * lambda / 3.0).powi(nf);
    Ok(v / 9f64.powi(nf))
}

/// `λ_n = 1 − 5^{1/n} 3^{-(n+1)/(2n)}`, below which `W(1,0)` is certified
/// negative by the bound `λⁿ + ¾(…)ⁿ + ¾(…)ⁿ ≤ 5/2`.
pub fn qutrit_cnz_negativity_bound(n: usize) -> f64 {
    let nf = n as f64;
    1.0 - 5f64.powf(1.0 / nf) * 3f64.powf(-(nf + 1.0) / (2.0 * nf))
}

/// Large-`n` limit `1 − 3^{-1/2}` of [`qutrit_cnz_negativity_bound`].
pub fn qutrit_cnz_negativity_limit() -> f64 {
    1.0 - 3f64.sqrt().recip()
}

/// `1 + 4M_d(d−1)ⁿ(1 − (d−1)λ/d)ⁿ`, with `m_d` the largest single-qudit
/// robustness, supplied by the caller.
pub fn ub_qudit_cnz(n: usize, d: u32, lambda: f64, m_d: f64) -> f64 {
    let d = d as f64;
    1.0 + 4.0 * m_d * ((d - 1.0) * (1.0 - (d - 1.0) * lambda / d)).powi(n as i32)
}

/// Bound on any `k`-qudit marginal of the noiseless `C^{n-1}Z` state:
/// `1 + 4M_d d^k ((d−1)/d)ⁿ`.
pub fn ub_qudit_cnz_marginal(n: usize, k: usize, d: u32, m_d: f64) -> f64 {
    let d = d as f64;
    1.0 + 4.0 * m_d * d.powi(k as i32) * ((d - 1.0) / d).powi(n as i32)
}

/// Noise rate `d(d−2)/(d−1)²` above which [`ub_qudit_cnz`] tends to one.
pub fn ub_qudit_cnz_crossover(d: u32) -> f64 {
    let d = d as f64;
    d * (d - 2.0) / ((d - 1.0) * (d - 1.0))
}

pub fn rom_lb_from_sn(sn: f64) -> Result<f64> {
    if sn < -1e-12 || !sn.is_finite() {
        return Err(Error::input(format!("negativity {sn} must be non-negative")));
    }
    Ok(1.0 + 2.0 * sn.max(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct SnRow {
    pub n: usize,
    pub d: u32,
    pub lambda: f64,
    pub sn: f64,
    pub rom_lb: f64,
}

/// Negativity of the noisy `C^{n-1}Z` state for every `n` and `λ`. The
/// noiseless table is built once per `n`.
pub fn cnz_sn_rows(d: u32, ns: &[usize], lambdas: &[f64]) -> Result<Vec<SnRow>> {
    let mut rows = Vec::with_capacity(ns.len() * lambdas.len());
    for &n in ns {
        let w = QuditHypergraph::cnz(n, d, 1)?.wigner()?;
        for &l in lambdas {
            let sn = w.depolarize(l)?.sn();
            rows.push(SnRow {
                n,
                d,
                lambda: l,
                sn,
                rom_lb: rom_lb_from_sn(sn)?,
            });
        }
    }
    Ok(rows)
}

/// Writes the `wigner-sn` CSV: `#` provenance lines, then
/// `n,d,lambda,sn,1+2sn`.
pub fn write_sn_csv(rows: &[SnRow], provenance: &[(&str, String)], mut w: impl Write) -> Result<()> {
    for (k, v) in provenance {
        writeln!(w, "# {k}: {v}")?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "d", "lambda", "sn", "1+2sn"]).map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.n.to_string(),
            r.d.to_string(),
            format!("{}", r.lambda),
            format!("{:.12}", r.sn),
            format!("{:.12}", r.rom_lb),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn primes() {
        assert!(QuditSystem::new(3, 1).is_ok());
        assert!(QuditSystem::new(7, 2).is_ok());
        assert!(QuditSystem::new(9, 1).is_err());
        assert!(QuditSystem::new(2, 1).is_err());
        assert!(matches!(QuditSystem::new(3, 9), Err(Error::Capacity(_))));
    }

    #[test]
    fn parity_for_qutrit() {
        let sys = QuditSystem::new(3, 1).unwrap();
        let a = parity_operator(&sys);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(a[0], one);
        assert_eq!(a[2 * 3 + 1], one);
        assert_eq!(a[3 + 2], one);
        let u = phase_point_operator(&sys, &PhasePoint::origin(&sys));
        for (p, q) in u[0].iter().zip(&a) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn weyl_commutation() {
        // ZX = ωXZ
        let sys = QuditSystem::new(5, 1).unwrap();
        let zx = mat_mul(5, &sys.clock(), &sys.shift());
        let xz = mat_mul(5, &sys.shift(), &sys.clock());
        for (a, b) in zx.iter().zip(&xz) {
            assert!((a - sys.omega() * b).norm() < 1e-12);
        }
        assert!((sys.tau() - sys.omega_pow(3)).norm() < 1e-12);
    }

    #[test]
    fn closed_form_action_matches_conjugation() {
        for d in [3u32, 5, 7] {
            let sys = QuditSystem::new(d, 1).unwrap();
            for z in 0..d {
                for x in 0..d {
                    let u = PhasePoint::new(&sys, &[z], &[x]).unwrap();
                    let a = &phase_point_operator(&sys, &u)[0];
                    let du = d as usize;
                    for j in 0..du {
                        let row = (2 * x as usize + du - j) % du;
                        let want = sys.omega_pow(2 * z as i64 * (x as i64 - j as i64));
                        assert!((a[row * du + j] - want).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn plus_state_table_is_nonnegative() {
        let h = QuditHypergraph::empty(2, 3).unwrap();
        let w = h.wigner().unwrap();
        assert!(close(w.total(), 1.0, 1e-12));
        assert!(w.sn() < 1e-12);
    }

    #[test]
    fn witness_state_at_origin() {
        for d in [3u32, 5] {
            let sys = QuditSystem::new(d, 1).unwrap();
            let psi = threshold_witness_state(&sys).unwrap();
            let w = wigner_pure(&sys, &psi).unwrap();
            for l in [0.0, 0.3, 0.6, 0.9] {
                let got = w.depolarize(l).unwrap().get(&PhasePoint::origin(&sys));
                let df = d as f64;
                assert!(close(got, ((df + 1.0) * l - df) / (df * df), 1e-12));
            }
        }
    }

    #[test]
    fn partial_trace_counts() {
        let h = QuditHypergraph::cnz(5, 3, 1).unwrap();
        let terms = h.partial_trace(&[1, 2]).unwrap();
        // b-products: 0 five times, 1 and 2 twice each
        assert_eq!(terms.len(), 3);
        let mut weights: Vec<f64> = terms.iter().map(|t| t.0).collect();
        weights.sort_by(f64::total_cmp);
        assert!(close(weights[0], 2.0 / 9.0, 1e-15));
        assert!(close(weights[2], 5.0 / 9.0, 1e-15));
    }

    #[test]
    fn text_round_trip() {
        let h = QuditHypergraph::from_text("n=3 d=5\n1 2 3 *2\n1 2\n1 2 *4\n").unwrap();
        assert_eq!(h.edge_lists(), vec![(vec![1, 2, 3], 2)]);
        assert_eq!(QuditHypergraph::from_text(&h.to_text()).unwrap(), h);
    }

    #[test]
    fn closed_form_residue_check() {
        assert!(qutrit_cnz_w10(5, 0.1).is_err());
        assert!(close(qutrit_cnz_negativity_limit(), 0.42265, 1e-5));
    }
}
