//! Operators in the Pauli basis.
//!
//! The Pauli operator with label `(z, x)` is `P = i^{|z & x|} X^x Z^z`,
//! which is Hermitian and equals the tensor product of `I, X, Y, Z` factors
//! with no extra sign. Coefficients are stored at flat index `z * 2^n + x`
//! with qubit `i` at bit `i` of both `z` and `x`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

/// Largest qubit count for which full Pauli vectors are materialized.
pub const PAULI_CUTOFF: usize = 8;

const PVEC_MAGIC: &[u8; 4] = b"PVEC";
const PVEC_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct PauliVector {
    n: usize,
    coeffs: Vec<f64>,
}

pub fn pauli_weight(z: u32, x: u32) -> u32 {
    (z | x).count_ones()
}

/// In-place unnormalized Walsh–Hadamard transform.
pub fn fwht(a: &mut [f64]) {
    let len = a.len();
    let mut h = 1;
    while h < len {
        for i in (0..len).step_by(2 * h) {
            for j in i..i + h {
                let (u, v) = (a[j], a[j + h]);
                a[j] = u + v;
                a[j + h] = u - v;
            }
        }
        h *= 2;
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > PAULI_CUTOFF {
        return Err(Error::capacity(format!(
            "Pauli vectors are limited to {PAULI_CUTOFF} qubits, got {n}"
        )));
    }
    Ok(())
}

/// Real part of `i^k * w` for real `w`.
fn rotate_real(w: f64, k: u32) -> f64 {
    match k % 4 {
        0 => w,
        2 => -w,
        _ => 0.0,
    }
}

/// Per-`x` column of coefficients `Tr(P_{(z,x)} |psi><psi|)` for a real
/// state, indexed by `z`.
fn real_column(psi: &[f64], x: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..psi.len()).map(|s| psi[s ^ x] * psi[s]).collect();
    fwht(&mut v);
    for (z, w) in v.iter_mut().enumerate() {
        *w = rotate_real(*w, (z & x).count_ones());
    }
    v
}

impl PauliVector {
    pub fn zeros(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(PauliVector {
            n,
            coeffs: vec![0.0; 1 << (2 * n)],
        })
    }

    /// The 0-qubit operator `1`.
    pub fn scalar_one() -> Self {
        PauliVector {
            n: 0,
            coeffs: vec![1.0],
        }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        let mut p = Self::zeros(n)?;
        p.coeffs[0] = 1.0;
        Ok(p)
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if coeffs.len() != 1 << (2 * n) {
            return Err(Error::input(format!(
                "expected {} coefficients, got {}",
                1usize << (2 * n),
                coeffs.len()
            )));
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Pauli vector of a real pure state given by its amplitudes.
    pub fn from_real_state(psi: &[f64]) -> Result<Self> {
        let n = log2_len(psi.len())?;
        check_n(n)?;
        let dim = psi.len();
        let cols: Vec<Vec<f64>> = (0..dim).into_par_iter().map(|x| real_column(psi, x)).collect();
        let mut coeffs = vec![0.0; dim * dim];
        for (x, col) in cols.into_iter().enumerate() {
            for (z, w) in col.into_iter().enumerate() {
                coeffs[z * dim + x] = w;
            }
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Pauli vector of the hypergraph-type state with amplitudes
    /// `2^{-n/2} signs[s]`.
    pub fn from_signs(n: usize, signs: &[i8]) -> Result<Self> {
        check_n(n)?;
        if signs.len() != 1 << n {
            return Err(Error::input("sign vector must have 2^n entries"));
        }
        // Products of signs are exact small integers; scaling by 2^{-n} at
        // the end keeps the result exact.
        let dim = signs.len();
        let norm = 1.0 / dim as f64;
        let psi: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
        let cols: Vec<Vec<f64>> = (0..dim).into_par_iter().map(|x| real_column(&psi, x)).collect();
        let mut coeffs = vec![0.0; dim * dim];
        for (x, col) in cols.into_iter().enumerate() {
            for (z, w) in col.into_iter().enumerate() {
                coeffs[z * dim + x] = w * norm;
            }
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Pauli vector of an arbitrary pure state (not necessarily normalized).
    pub fn from_amplitudes(psi: &[Complex64]) -> Result<Self> {
        let n = log2_len(psi.len())?;
        check_n(n)?;
        let dim = psi.len();
        let cols: Vec<Vec<f64>> = (0..dim)
            .into_par_iter()
            .map(|x| {
                let mut re = vec![0.0; dim];
                let mut im = vec![0.0; dim];
                for s in 0..dim {
                    let v = psi[s ^ x].conj() * psi[s];
                    re[s] = v.re;
                    im[s] = v.im;
                }
                fwht(&mut re);
                fwht(&mut im);
                (0..dim)
                    .map(|z| {
                        let w = Complex64::new(re[z], im[z]);
                        (w * Complex64::i().powu((z & x).count_ones())).re
                    })
                    .collect()
            })
            .collect();
        let mut coeffs = vec![0.0; dim * dim];
        for (x, col) in cols.into_iter().enumerate() {
            for (z, w) in col.into_iter().enumerate() {
                coeffs[z * dim + x] = w;
            }
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Pauli vector of a dense row-major `2^n x 2^n` operator.
    pub fn from_dense(n: usize, m: &[Complex64]) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << n;
        if m.len() != dim * dim {
            return Err(Error::input("dense matrix has the wrong size"));
        }
        let mut coeffs = vec![0.0; dim * dim];
        for z in 0..dim {
            for x in 0..dim {
                // Tr(P ρ) = Σ_t phase(t) ρ[t][t xor x]
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..dim {
                    let s = t ^ x;
                    acc += pauli_action_phase(z, x, t) * m[t * dim + s];
                }
                coeffs[z * dim + x] = acc.re;
            }
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Dense row-major matrix `sum_P c_P P / 2^n`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = 1usize << self.n;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        let norm = 1.0 / dim as f64;
        for z in 0..dim {
            for x in 0..dim {
                let c = self.coeffs[z * dim + x];
                if c == 0.0 {
                    continue;
                }
                for t in 0..dim {
                    // P|t> = phase(t) |t xor x>
                    m[(t ^ x) * dim + t] += pauli_action_phase(z, x, t) * c * norm;
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, z: u32, x: u32) -> f64 {
        self.coeffs[((z as usize) << self.n) | x as usize]
    }

    /// Trace of the operator (the identity coefficient).
    pub fn trace(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn add_scaled(&mut self, other: &PauliVector, w: f64) {
        assert_eq!(self.n, other.n, "qubit count mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += w * b;
        }
    }

    pub fn scaled(&self, w: f64) -> PauliVector {
        PauliVector {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * w).collect(),
        }
    }

    /// Convex (or any linear) combination of equally sized vectors.
    pub fn combine(terms: &[(f64, &PauliVector)]) -> Result<PauliVector> {
        let first = terms.first().ok_or_else(|| Error::input("empty combination"))?;
        let mut acc = PauliVector::zeros(first.1.n)?;
        for (w, p) in terms {
            if p.n != acc.n {
                return Err(Error::input("qubit count mismatch"));
            }
            acc.add_scaled(p, *w);
        }
        Ok(acc)
    }

    /// `Tr(AB)` for the operators represented by `self` and `other`.
    pub fn hs_inner(&self, other: &PauliVector) -> f64 {
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum();
        s / (1u64 << self.n) as f64
    }

    pub fn sum_squares(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `self ⊗ other`, with `self` on the low qubits.
    pub fn tensor(&self, other: &PauliVector) -> Result<PauliVector> {
        let n = self.n + other.n;
        check_n(n)?;
        let (da, db) = (1usize << self.n, 1usize << other.n);
        let dim = da * db;
        let mut coeffs = vec![0.0; dim * dim];
        for za in 0..da {
            for xa in 0..da {
                let ca = self.coeffs[za * da + xa];
                if ca == 0.0 {
                    continue;
                }
                for zb in 0..db {
                    for xb in 0..db {
                        let z = za | zb << self.n;
                        let x = xa | xb << self.n;
                        coeffs[z * dim + x] = ca * other.coeffs[zb * db + xb];
                    }
                }
            }
        }
        Ok(PauliVector { n, coeffs })
    }

    /// Traces out the qubits not in `keep` (0-based, kept in the given order
    /// which must be increasing).
    pub fn partial_trace_keep(&self, keep: &[usize]) -> Result<PauliVector> {
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&q| q >= self.n) {
            return Err(Error::input("keep must be increasing qubit indices"));
        }
        let k = keep.len();
        let dk = 1usize << k;
        let mut out = vec![0.0; dk * dk];
        for zs in 0..dk {
            for xs in 0..dk {
                let mut z = 0usize;
                let mut x = 0usize;
                for (j, &q) in keep.iter().enumerate() {
                    z |= (zs >> j & 1) << q;
                    x |= (xs >> j & 1) << q;
                }
                out[zs * dk + xs] = self.coeffs[(z << self.n) | x];
            }
        }
        Ok(PauliVector {
            n: k,
            coeffs: out,
        })
    }

    pub fn apply_noise(&self, noise: &NoiseModel) -> Result<PauliVector> {
        noise.validate()?;
        let mut out = self.clone();
        match noise {
            NoiseModel::Depolarizing(l) => {
                let dim = 1usize << self.n;
                let powers: Vec<f64> = (0..=self.n).map(|k| (1.0 - l).powi(k as i32)).collect();
                for z in 0..dim {
                    for x in 0..dim {
                        out.coeffs[z * dim + x] *= powers[pauli_weight(z as u32, x as u32) as usize];
                    }
                }
            }
            _ => {
                let t = noise.transfer_matrix();
                for q in 0..self.n {
                    apply_local_transfer(&mut out.coeffs, self.n, q, &t);
                }
            }
        }
        Ok(out)
    }

    /// `D(ρ) = 2^{-n} sum_P |Tr(P ρ)|`.
    pub fn stabilizer_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.abs()).sum();
        s / (1u64 << self.n) as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(PVEC_MAGIC)?;
        f.write_all(&PVEC_VERSION.to_le_bytes())?;
        f.write_all(&[self.n as u8])?;
        for c in &self.coeffs {
            f.write_all(&c.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PauliVector> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        if buf.len() < 7 || &buf[..4] != PVEC_MAGIC {
            return Err(Error::Format("not a Pauli vector file".into()));
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != PVEC_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = buf[6] as usize;
        check_n(n)?;
        let len = 1usize << (2 * n);
        if buf.len() != 7 + 8 * len {
            return Err(Error::Format("truncated or oversized Pauli vector file".into()));
        }
        let coeffs = buf[7..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(PauliVector { n, coeffs })
    }
}

/// Phase `c` with `P_{(z,x)} |t> = c |t xor x>`.
fn pauli_action_phase(z: usize, x: usize, t: usize) -> Complex64 {
    // Z^z first, then X^x, then the Hermitian phase i^{|z & x|}.
    let sign = if (z & t).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    Complex64::i().powu((z & x).count_ones()) * sign
}

fn log2_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::input("state length must be a power of two"));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Local Pauli order used by per-qubit transfer matrices: I, X, Z, Y
/// (local index `2 z + x`).
fn apply_local_transfer(coeffs: &mut [f64], n: usize, q: usize, t: &[[f64; 4]; 4]) {
    let xbit = 1usize << q;
    let zbit = 1usize << (n + q);
    for base in 0..coeffs.len() {
        if base & (xbit | zbit) != 0 {
            continue;
        }
        let idx = [base, base | xbit, base | zbit, base | zbit | xbit];
        let old = idx.map(|i| coeffs[i]);
        for r in 0..4 {
            coeffs[idx[r]] = (0..4).map(|c| t[r][c] * old[c]).sum();
        }
    }
}

/// Local noise acting identically on every qubit.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    /// `ρ -> (1-λ) ρ + λ Tr(ρ) I/2` on each qubit.
    Depolarizing(f64),
    /// Amplitude-damping-like dephasing with Kraus operators
    /// `|0><0| + sqrt(1-λ)|1><1|` and `sqrt(λ)|1><1|`.
    Dephasing(f64),
    /// `ρ -> (1-λ) ρ + λ Tr(ρ) ρ_g` with `ρ_g` a single-qubit stabilizer
    /// mixture, given by its Bloch vector `(x, y, z)`.
    Replacement { lambda: f64, bloch: [f64; 3] },
}

impl NoiseModel {
    pub fn lambda(&self) -> f64 {
        match self {
            NoiseModel::Depolarizing(l) | NoiseModel::Dephasing(l) => *l,
            NoiseModel::Replacement { lambda, .. } => *lambda,
        }
    }

    pub fn with_lambda(&self, l: f64) -> NoiseModel {
        match self {
            NoiseModel::Depolarizing(_) => NoiseModel::Depolarizing(l),
            NoiseModel::Dephasing(_) => NoiseModel::Dephasing(l),
            NoiseModel::Replacement { bloch, .. } => NoiseModel::Replacement {
                lambda: l,
                bloch: *bloch,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NoiseModel::Depolarizing(_) => "dep",
            NoiseModel::Dephasing(_) => "deph",
            NoiseModel::Replacement { .. } => "repl",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.lambda();
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::input(format!("noise rate {l} outside [0, 1]")));
        }
        if let NoiseModel::Replacement { bloch, .. } = self {
            let l1: f64 = bloch.iter().map(|b| b.abs()).sum();
            if l1 > 1.0 + 1e-12 {
                return Err(Error::input(
                    "replacement state must be a stabilizer mixture (|x|+|y|+|z| <= 1)",
                ));
            }
        }
        Ok(())
    }

    /// Action on one qubit's Pauli coefficients in the local order I, X, Z, Y.
    pub fn transfer_matrix(&self) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        match *self {
            NoiseModel::Depolarizing(l) => {
                t[0][0] = 1.0;
                for (i, row) in t.iter_mut().enumerate().skip(1) {
                    row[i] = 1.0 - l;
                }
            }
            NoiseModel::Dephasing(l) => {
                let s = (1.0 - l).sqrt();
                t[0][0] = 1.0;
                t[1][1] = s;
                t[2][2] = 1.0;
                t[3][3] = s;
            }
            NoiseModel::Replacement { lambda, bloch } => {
                t[0][0] = 1.0;
                for (i, row) in t.iter_mut().enumerate().skip(1) {
                    row[i] = 1.0 - lambda;
                }
                // local order I, X, Z, Y
                t[1][0] = lambda * bloch[0];
                t[2][0] = lambda * bloch[2];
                t[3][0] = lambda * bloch[1];
            }
        }
        t
    }

    /// Parses `dep:0.2`, `deph:0.2` or `repl:0.2:x,y,z`.
    pub fn parse(s: &str) -> Result<NoiseModel> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let l: f64 = parts
            .next()
            .ok_or_else(|| Error::input(format!("noise `{s}` needs a rate, e.g. dep:0.1")))?
            .parse()
            .map_err(|_| Error::input(format!("bad noise rate in `{s}`")))?;
        let model = match kind {
            "dep" | "depolarizing" => NoiseModel::Depolarizing(l),
            "deph" | "dephasing" => NoiseModel::Dephasing(l),
            "repl" | "replacement" => {
                let b = parts
                    .next()
                    .ok_or_else(|| Error::input("replacement noise needs a Bloch vector x,y,z"))?;
                let v: Vec<f64> = b
                    .split(',')
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::input(format!("bad Bloch vector `{b}`")))?;
                if v.len() != 3 {
                    return Err(Error::input("Bloch vector needs three components"));
                }
                NoiseModel::Replacement {
                    lambda: l,
                    bloch: [v[0], v[1], v[2]],
                }
            }
            _ => return Err(Error::input(format!("unknown noise kind `{kind}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

/// `|<C^{n-1}Z| P_{(z,x)} |C^{n-1}Z>|` from the five-case formula.
pub fn cnz_pauli_spectrum(n: usize, z: u32, x: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::input("the C^{n-1}Z spectrum formula needs n >= 2"));
    }
    let q = 0.5f64.powi(n as i32 - 2);
    Ok(match (x == 0, z == 0) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        (false, true) => 1.0 - q,
        (false, false) => {
            if (z & x).count_ones() % 2 == 0 {
                q
            } else {
                0.0
            }
        }
    })
}

/// Stabilizer norm of the depolarized `C^{n-1}Z` state.
pub fn closed_form_d_cnz(n: usize, lambda: f64) -> f64 {
    let nf = n as i32;
    (8.0 + 2.0 * (4.0 - 3.0 * lambda).powi(nf) + (4.0 - 2.0 * lambda).powi(nf)
        - 10.0 * (2.0 - lambda).powi(nf))
        * 0.25f64.powi(nf)
}

/// Stabilizer norm of the depolarized 3-complete hypergraph state, odd `n`.
pub fn closed_form_d_3complete(n: usize, lambda: f64) -> Result<f64> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "the 3-complete closed form is available for odd n >= 3 only, got {n}"
        )));
    }
    let nf = n as f64;
    let a = 2f64.powf(-nf);
    let c = 2f64.powf(-1.5 - 1.5 * nf);
    Ok((0.5 - a) * (1.0 - lambda).powf(nf)
        + 0.5 * a * (2.0 - lambda).powf(nf)
        + (0.5 * a - c) * lambda.powf(nf)
        + c * (4.0 - 3.0 * lambda).powf(nf))
}

/// Histogram of `sum |Tr(P ψ)|` over Paulis grouped by weight, for the
/// hypergraph state `h`. The stabilizer norm under depolarizing noise is
/// `2^{-n} sum_k hist[k] (1-λ)^k`. Memory is `O(2^n)`, so this reaches
/// beyond the materialized Pauli-vector cutoff.
pub fn hypergraph_weight_profile(h: &Hypergraph) -> Result<Vec<f64>> {
    let n = h.n();
    let signs = h.signs()?;
    let dim = 1usize << n;
    let norm = 1.0 / dim as f64;
    // Fixed chunks, combined in order, keep the floating-point sum
    // independent of scheduling.
    let xs: Vec<usize> = (0..dim).collect();
    let parts: Vec<Vec<f64>> = xs
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = vec![0.0; n + 1];
            let mut v = vec![0.0; dim];
            for &x in chunk {
                for (s, o) in v.iter_mut().enumerate() {
                    *o = (signs[s ^ x] * signs[s]) as f64;
                }
                fwht(&mut v);
                for (z, w) in v.iter().enumerate() {
                    if *w != 0.0 {
                        acc[(z | x).count_ones() as usize] += w.abs() * norm;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n + 1];
    for part in parts {
        for (o, p) in out.iter_mut().zip(part) {
            *o += p;
        }
    }
    Ok(out)
}

/// Weight histogram of `|Tr(P ρ)|` for a materialized Pauli vector.
pub fn weight_profile(rho: &PauliVector) -> Vec<f64> {
    let n = rho.n();
    let dim = 1usize << n;
    let mut out = vec![0.0; n + 1];
    for z in 0..dim {
        for x in 0..dim {
            out[pauli_weight(z as u32, x as u32) as usize] += rho.coeffs[z * dim + x].abs();
        }
    }
    out
}

/// Evaluates `2^{-n} sum_k hist[k] (1-λ)^k`.
pub fn depolarized_norm_from_profile(hist: &[f64], lambda: f64) -> f64 {
    let n = hist.len() - 1;
    let s: f64 = hist
        .iter()
        .enumerate()
        .map(|(k, h)| h * (1.0 - lambda).powi(k as i32))
        .sum();
    s / 2f64.powi(n as i32)
}

/// Truth table of a Boolean function on `n` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacteristicFunction {
    n: usize,
    table: Vec<u8>,
}

impl CharacteristicFunction {
    pub fn from_hypergraph(h: &Hypergraph) -> Result<Self> {
        if h.n() > crate::hypergraph::DENSE_CUTOFF {
            return Err(Error::capacity("truth table too large"));
        }
        let table = (0u32..1 << h.n()).map(|x| h.eval_mask(x)).collect();
        Ok(CharacteristicFunction { n: h.n(), table })
    }

    pub fn from_table(n: usize, table: Vec<u8>) -> Result<Self> {
        if table.len() != 1 << n || table.iter().any(|&b| b > 1) {
            return Err(Error::input("truth table must have 2^n entries in {0,1}"));
        }
        Ok(CharacteristicFunction { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: u32) -> u8 {
        self.table[x as usize]
    }

    pub fn weight(&self) -> usize {
        self.table.iter().filter(|&&b| b == 1).count()
    }
}

/// `min over quadratic g of wt(f + g)`, by exhaustive search (n <= 4).
pub fn second_order_nonlinearity(f: &CharacteristicFunction) -> Result<usize> {
    let n = f.n;
    if n > 4 {
        return Err(Error::capacity(format!(
            "exhaustive nonlinearity search is limited to n <= 4, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut monomials: Vec<u32> = vec![0];
    monomials.extend((0..n).map(|i| 1u32 << i));
    for i in 0..n {
        for j in i + 1..n {
            monomials.push(1 << i | 1 << j);
        }
    }
    let tables: Vec<Vec<u8>> = monomials
        .iter()
        .map(|&m| (0..dim as u32).map(|x| (x & m == m) as u8).collect())
        .collect();
    let mut best = usize::MAX;
    for choice in 0u64..1 << monomials.len() {
        let mut g = vec![0u8; dim];
        for (j, t) in tables.iter().enumerate() {
            if choice >> j & 1 == 1 {
                for (a, b) in g.iter_mut().zip(t) {
                    *a ^= b;
                }
            }
        }
        let w = g.iter().zip(&f.table).filter(|(a, b)| a != b).count();
        best = best.min(w);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(pauli_weight(0, 0), 0);
        assert_eq!(pauli_weight(0b101, 0b011), 3);
        assert_eq!(pauli_weight(0b0011, 0), 2);
    }

    #[test]
    fn single_qubit_matrices() {
        // P(z=1,x=1) must be Y = [[0,-i],[i,0]].
        let mut c = vec![0.0; 4];
        c[3] = 2.0;
        let m = PauliVector::from_coeffs(1, c).unwrap().to_dense();
        assert!((m[1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((m[2] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn dense_round_trip() {
        let h = Hypergraph::ccz();
        let p = h.pauli_vector().unwrap();
        let back = PauliVector::from_dense(3, &p.to_dense()).unwrap();
        for (a, b) in p.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((p.sum_squares() - 8.0).abs() < 1e-12);
        assert!((p.stabilizer_norm() - 1.875).abs() < 1e-12);
    }

    #[test]
    fn complex_and_real_paths_agree() {
        let v = Hypergraph::complete(4, 3).unwrap().state_vector().unwrap();
        let c: Vec<Complex64> = v.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        let a = PauliVector::from_real_state(&v).unwrap();
        let b = PauliVector::from_amplitudes(&c).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_limits() {
        let p = Hypergraph::ccz().pauli_vector().unwrap();
        assert_eq!(p.apply_noise(&NoiseModel::Depolarizing(0.0)).unwrap(), p);
        let q = p.apply_noise(&NoiseModel::Depolarizing(1.0)).unwrap();
        assert_eq!(q.coeffs()[0], 1.0);
        assert!(q.coeffs()[1..].iter().all(|&c| c == 0.0));
        assert!(NoiseModel::Depolarizing(1.5).validate().is_err());
    }

    #[test]
    fn spectrum_cases() {
        assert_eq!(cnz_pauli_spectrum(3, 0, 0).unwrap(), 1.0);
        assert_eq!(cnz_pauli_spectrum(3, 0, 0b101).unwrap(), 0.5);
        assert_eq!(cnz_pauli_spectrum(4, 0b0011, 0b0100).unwrap(), 0.25);
    }

    #[test]
    fn nonlinearity_examples() {
        let cz = CharacteristicFunction::from_hypergraph(&Hypergraph::new(3, &[vec![1, 2]]).unwrap())
            .unwrap();
        assert_eq!(second_order_nonlinearity(&cz).unwrap(), 0);
        let ccz = CharacteristicFunction::from_hypergraph(&Hypergraph::ccz()).unwrap();
        assert_eq!(second_order_nonlinearity(&ccz).unwrap(), 1);
    }

    #[test]
    fn noise_parse() {
        assert_eq!(NoiseModel::parse("dep:0.2").unwrap(), NoiseModel::Depolarizing(0.2));
        assert!(NoiseModel::parse("repl:0.1:1,0,0").is_ok());
        assert!(NoiseModel::parse("repl:0.1:1,1,0").is_err());
        assert!(NoiseModel::parse("foo:0.1").is_err());
    }
}
