//! Enumeration of all pure n-qubit stabilizer states.
//!
//! Every stabilizer state is `|K,q,b> ∝ sum_{x in K} i^{b·x} (-1)^{q(x)} |x>`
//! for an affine subspace `K`, a quadratic form `q` on the subspace
//! coordinates and a phase vector `b`. Subspaces are walked in reduced
//! row-echelon form and offsets are taken with zeros on the pivot
//! coordinates, so each state appears exactly once; a dedup pass guards that
//! claim anyway.

use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pauli::{fwht, PauliVector};

pub const MAX_QUBITS: usize = 5;
const MAGIC: &[u8; 4] = b"STBB";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8;
const NEG: u16 = 0x8000;

/// Label `(K, q, b)` of a stabilizer state. `basis` rows span the linear
/// part of `K`; `q` holds the upper-triangular coefficients `q_{jl}` (j <= l)
/// of the quadratic form in the subspace coordinates, row by row, with the
/// diagonal playing the role of the linear part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerLabel {
    pub n: usize,
    pub offset: u32,
    pub basis: Vec<u32>,
    pub q: u32,
    pub b: u32,
}

fn pair_index(k: usize, j: usize, l: usize) -> usize {
    // position of (j, l), j <= l, in row-major upper-triangular order
    j * k - j * (j + 1) / 2 + l
}

fn rank(vectors: &[u32]) -> usize {
    let mut rows: Vec<u32> = vectors.to_vec();
    let mut r = 0;
    for bit in 0..32 {
        if let Some(p) = (r..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) {
            rows.swap(r, p);
            for i in 0..rows.len() {
                if i != r && rows[i] >> bit & 1 == 1 {
                    rows[i] ^= rows[r];
                }
            }
            r += 1;
        }
    }
    r
}

impl StabilizerLabel {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "stabilizer labels support 1..={MAX_QUBITS} qubits"
            )));
        }
        let full = (1u32 << self.n) - 1;
        if self.offset & !full != 0 || self.b & !full != 0 || self.basis.iter().any(|v| v & !full != 0)
        {
            return Err(Error::input("label vector outside F_2^n"));
        }
        if rank(&self.basis) != self.basis.len() {
            return Err(Error::input("subspace basis vectors are linearly dependent"));
        }
        let k = self.basis.len();
        if k * (k + 1) / 2 < 32 && self.q >> (k * (k + 1) / 2) != 0 {
            return Err(Error::input("quadratic form has bits beyond the subspace dimension"));
        }
        Ok(())
    }

    fn quadratic(&self, c: u32) -> u32 {
        let k = self.basis.len();
        let mut acc = 0;
        for j in 0..k {
            if c >> j & 1 == 0 {
                continue;
            }
            for l in j..k {
                if c >> l & 1 == 1 && self.q >> pair_index(k, j, l) & 1 == 1 {
                    acc ^= 1;
                }
            }
        }
        acc
    }

    /// Unnormalized amplitudes as `(x, p)` meaning `i^p |x>`, one per
    /// subspace coordinate vector `c` in increasing order.
    pub fn phases(&self) -> Vec<(u32, u8)> {
        let k = self.basis.len();
        (0u32..1 << k)
            .map(|c| {
                let x = (0..k)
                    .filter(|&j| c >> j & 1 == 1)
                    .fold(self.offset, |acc, j| acc ^ self.basis[j]);
                let p = ((self.b & x).count_ones() + 2 * self.quadratic(c)) % 4;
                (x, p as u8)
            })
            .collect()
    }

    /// Exact Pauli vector of the labelled state.
    pub fn to_pauli_vector(&self) -> Result<PauliVector> {
        self.validate()?;
        let sparse = sparse_from_phases(self.n, self.basis.len(), &self.phases());
        let dim4 = 1usize << (2 * self.n);
        let mut coeffs = vec![0.0; dim4];
        for e in sparse {
            let (idx, sign) = decode(e);
            coeffs[idx] = sign as f64;
        }
        PauliVector::from_coeffs(self.n, coeffs)
    }
}

pub fn state_from_label(label: &StabilizerLabel) -> Result<PauliVector> {
    label.to_pauli_vector()
}

fn encode(idx: usize, sign: i8) -> u16 {
    idx as u16 | if sign < 0 { NEG } else { 0 }
}

fn decode(e: u16) -> (usize, i8) {
    ((e & !NEG) as usize, if e & NEG != 0 { -1 } else { 1 })
}

/// Nonzero Pauli coefficients (all ±1) of the state `sum i^{p_x} |x>` over a
/// `k`-dimensional affine subspace, sorted by flat index.
///
/// For a shift `d` in the linear part, `Tr(P_{(z,d)} ψ) = 2^{-k} i^{|z&d|}
/// sum_s (-1)^{z·s} conj(a(s+d)) a(s)`. All sums are Gaussian integers, so
/// the transform is carried out exactly in `f64` with integer values.
fn sparse_from_phases(n: usize, k: usize, amps: &[(u32, u8)]) -> Vec<u16> {
    let dim = 1usize << n;
    let mut phase = vec![u8::MAX; dim];
    for &(x, p) in amps {
        phase[x as usize] = p;
    }
    let scale = (1u64 << k) as f64;
    let mut out = Vec::with_capacity(dim);
    let mut re = vec![0.0f64; dim];
    let mut im = vec![0.0f64; dim];
    let origin = amps[0].0;
    for &(xd, _) in amps {
        let d = (xd ^ origin) as usize;
        for s in 0..dim {
            let (ps, pt) = (phase[s], phase[s ^ d]);
            let (r, i) = if ps == u8::MAX || pt == u8::MAX {
                (0.0, 0.0)
            } else {
                match (ps + 4 - pt) % 4 {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    2 => (-1.0, 0.0),
                    _ => (0.0, -1.0),
                }
            };
            re[s] = r;
            im[s] = i;
        }
        fwht(&mut re);
        fwht(&mut im);
        for z in 0..dim {
            // real part of i^{|z & d|} (re + i im)
            let v = match (z & d).count_ones() % 4 {
                0 => re[z],
                1 => -im[z],
                2 => -re[z],
                _ => im[z],
            };
            if v != 0.0 {
                let c = v / scale;
                debug_assert!(c == 1.0 || c == -1.0, "non-unit stabilizer coefficient {c}");
                out.push(encode(z * dim + d, if c > 0.0 { 1 } else { -1 }));
            }
        }
    }
    out.sort_unstable_by_key(|&e| e & !NEG);
    out
}

/// All pure stabilizer states of `n` qubits, stored sparsely: each state
/// has exactly `2^n` nonzero Pauli coefficients, all ±1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerBasis {
    n: usize,
    entries: Vec<u16>,
}

/// Expected number of pure stabilizer states, `2^n prod_{k=1..n} (2^k + 1)`.
pub fn stabilizer_count(n: usize) -> u64 {
    (1..=n as u32).fold(1u64 << n, |acc, k| acc * ((1u64 << k) + 1))
}

fn echelon_bases(n: usize, k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut pivots: Vec<usize> = (0..k).collect();
    loop {
        let pmask = pivots.iter().fold(0u32, |m, &p| m | 1 << p);
        let slots: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(j, &p)| {
                (p + 1..n)
                    .filter(move |&c| pmask >> c & 1 == 0)
                    .map(move |c| (j, c))
            })
            .collect();
        for fill in 0u64..1 << slots.len() {
            let mut rows: Vec<u32> = pivots.iter().map(|&p| 1u32 << p).collect();
            for (t, &(j, c)) in slots.iter().enumerate() {
                if fill >> t & 1 == 1 {
                    rows[j] |= 1 << c;
                }
            }
            out.push(rows);
        }
        // next k-combination of 0..n
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pivots[i] < n - k + i {
                pivots[i] += 1;
                for j in i + 1..k {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

fn pivot_mask(basis: &[u32]) -> u32 {
    basis.iter().fold(0, |m, r| m | 1 << r.trailing_zeros())
}

/// Labels of one echelon subspace, in the order offsets, q, b.
fn labels_for_subspace(n: usize, basis: &[u32]) -> Vec<StabilizerLabel> {
    let k = basis.len();
    let pmask = pivot_mask(basis);
    let free: Vec<usize> = (0..n).filter(|&c| pmask >> c & 1 == 0).collect();
    let pivots: Vec<usize> = basis.iter().map(|r| r.trailing_zeros() as usize).collect();
    let nq = k * (k + 1) / 2;
    let mut out = Vec::new();
    for o in 0u32..1 << free.len() {
        let offset = free
            .iter()
            .enumerate()
            .filter(|(t, _)| o >> t & 1 == 1)
            .fold(0u32, |m, (_, &c)| m | 1 << c);
        for q in 0u32..1 << nq {
            for bb in 0u32..1 << k {
                let b = (0..k)
                    .filter(|&j| bb >> j & 1 == 1)
                    .fold(0u32, |m, j| m | 1 << pivots[j]);
                out.push(StabilizerLabel {
                    n,
                    offset,
                    basis: basis.to_vec(),
                    q,
                    b,
                });
            }
        }
    }
    out
}

/// Every label produced by the enumeration, in enumeration order.
pub fn enumerate_labels(n: usize) -> Result<Vec<StabilizerLabel>> {
    check_n(n)?;
    Ok((0..=n)
        .flat_map(|k| echelon_bases(n, k))
        .flat_map(|b| labels_for_subspace(n, &b))
        .collect())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "stabilizer enumeration supports 1..={MAX_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

/// Global-phase-free fingerprint of a state with at most 5 qubits: 3 bits
/// per basis string (0 = absent, 1 + relative phase otherwise).
fn amplitude_key(n: usize, amps: &[(u32, u8)]) -> u128 {
    let base = amps.iter().min_by_key(|a| a.0).expect("nonempty").1;
    let mut key = 0u128;
    for &(x, p) in amps {
        key |= ((1 + (p + 4 - base) % 4) as u128) << (3 * x as usize);
    }
    debug_assert!(3 << n <= 128);
    key
}

fn subspace_states(n: usize, basis: &[u32]) -> Vec<(u128, Vec<u16>)> {
    let labels = labels_for_subspace(n, basis);
    labels
        .par_iter()
        .map(|l| {
            let amps = l.phases();
            (amplitude_key(n, &amps), sparse_from_phases(n, l.basis.len(), &amps))
        })
        .collect()
}

impl StabilizerBasis {
    /// Enumerates, deduplicates and sorts all stabilizer states for
    /// `n <= 4`. Larger `n` must go through [`enumerate_to_file`].
    pub fn enumerate(n: usize) -> Result<Self> {
        check_n(n)?;
        if n > 4 {
            return Err(Error::capacity(
                "n = 5 holds 2.4 million states; use the streaming enumeration",
            ));
        }
        let dim = 1usize << n;
        let dim4 = dim * dim;
        let mut states: Vec<Vec<u16>> = Vec::new();
        for k in 0..=n {
            for basis in echelon_bases(n, k) {
                states.extend(subspace_states(n, &basis).into_iter().map(|(_, s)| s));
            }
        }
        let mut dense: Vec<Vec<i8>> = states
            .par_iter()
            .map(|s| {
                let mut d = vec![0i8; dim4];
                for &e in s {
                    let (i, sg) = decode(e);
                    d[i] = sg;
                }
                d
            })
            .collect();
        dense.par_sort_unstable();
        dense.dedup();
        Self::from_dense_rows(n, dense.iter().map(|r| r.as_slice()))
    }

    fn from_dense_rows<'a>(n: usize, rows: impl Iterator<Item = &'a [i8]>) -> Result<Self> {
        let mut entries = Vec::new();
        for r in rows {
            push_dense_record(n, r, &mut entries)?;
        }
        Ok(StabilizerBasis { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len() >> self.n
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Encoded nonzeros of state `j` (flat index in the low 15 bits, sign in
    /// the top bit).
    pub fn raw_column(&self, j: usize) -> &[u16] {
        let w = 1usize << self.n;
        &self.entries[j * w..(j + 1) * w]
    }

    /// `(flat index, ±1)` pairs of state `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.raw_column(j).iter().map(|&e| {
            let (i, s) = decode(e);
            (i, s as f64)
        })
    }

    pub fn dense_row(&self, j: usize) -> Vec<i8> {
        let mut d = vec![0i8; 1 << (2 * self.n)];
        for &e in self.raw_column(j) {
            let (i, s) = decode(e);
            d[i] = s;
        }
        d
    }

    pub fn state(&self, j: usize) -> PauliVector {
        let d = self.dense_row(j);
        PauliVector::from_coeffs(self.n, d.into_iter().map(f64::from).collect()).expect("n <= 5")
    }

    /// Index of `rho` when it equals a member exactly (coefficients rounded
    /// to the nearest integer first). Requires the sorted order of `n <= 4`.
    pub fn index_of(&self, rho: &PauliVector) -> Option<usize> {
        if rho.n() != self.n {
            return None;
        }
        let key: Vec<i8> = rho.coeffs().iter().map(|c| c.round() as i8).collect();
        if rho.coeffs().iter().zip(&key).any(|(c, k)| (c - *k as f64).abs() > 1e-9) {
            return None;
        }
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.dense_row(mid).cmp(&key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// SHA-256 of the serialized records, as lowercase hex.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update([self.n as u8]);
        for j in 0..self.len() {
            let row: Vec<u8> = self.dense_row(j).into_iter().map(|v| v as u8).collect();
            h.update(&row);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        write_header(&mut w, self.n, self.len() as u64)?;
        for j in 0..self.len() {
            let row: Vec<u8> = self.dense_row(j).into_iter().map(|v| v as u8).collect();
            w.write_all(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let size = file.metadata()?.len();
        let mut r = BufReader::new(file);
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("file shorter than the basis header".into()))?;
        if &header[..4] != MAGIC {
            return Err(Error::Format("bad magic bytes, not a stabilizer basis file".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported basis file version {version}")));
        }
        let n = header[6] as usize;
        check_n(n).map_err(|_| Error::Format(format!("basis file declares n = {n}")))?;
        let count = u64::from_le_bytes(header[7..15].try_into().expect("8 bytes"));
        let rec = 1u64 << (2 * n);
        if size != HEADER_LEN as u64 + count * rec {
            return Err(Error::Format(format!(
                "basis file length {size} does not match {count} records of {rec} bytes"
            )));
        }
        let mut entries = Vec::with_capacity((count as usize) << n);
        let mut buf = vec![0u8; rec as usize];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            let row: Vec<i8> = buf.iter().map(|&b| b as i8).collect();
            push_dense_record(n, &row, &mut entries)?;
        }
        Ok(StabilizerBasis { n, entries })
    }
}

fn push_dense_record(n: usize, row: &[i8], entries: &mut Vec<u16>) -> Result<()> {
    if row.first() != Some(&1) {
        return Err(Error::Format("record without unit trace".into()));
    }
    let before = entries.len();
    for (i, &v) in row.iter().enumerate() {
        match v {
            0 => {}
            1 | -1 => entries.push(encode(i, v)),
            _ => return Err(Error::Format(format!("coefficient {v} is not in {{-1, 0, 1}}"))),
        }
    }
    if entries.len() - before != 1 << n {
        return Err(Error::Format("record does not describe a pure stabilizer state".into()));
    }
    Ok(())
}

fn write_header(w: &mut impl Write, n: usize, count: u64) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[n as u8])?;
    w.write_all(&count.to_le_bytes())?;
    Ok(())
}

/// Streams the enumeration straight to a basis file, deduplicating on the
/// fly, without holding the states in memory. Records appear in
/// enumeration order. Returns the number of states written.
pub fn enumerate_to_file(n: usize, path: &Path) -> Result<u64> {
    check_n(n)?;
    let dim4 = 1usize << (2 * n);
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, n, 0)?;
    let mut seen: HashSet<u128> = HashSet::with_capacity(stabilizer_count(n) as usize);
    let mut count = 0u64;
    let mut row = vec![0u8; dim4];
    for k in 0..=n {
        for basis in echelon_bases(n, k) {
            for (key, sparse) in subspace_states(n, &basis) {
                if !seen.insert(key) {
                    continue;
                }
                row.iter_mut().for_each(|b| *b = 0);
                for &e in &sparse {
                    let (i, s) = decode(e);
                    row[i] = s as u8;
                }
                w.write_all(&row)?;
                count += 1;
            }
            log::debug!("n={n} k={k}: {count} states so far");
        }
    }
    w.flush()?;
    let mut f = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    f.seek(SeekFrom::Start(7))?;
    f.write_all(&count.to_le_bytes())?;
    f.sync_all()?;
    Ok(count)
}

/// Counts the distinct states of the streaming enumeration without
/// writing them anywhere.
pub fn count_distinct(n: usize) -> Result<u64> {
    check_n(n)?;
    let mut seen: HashSet<u128> = HashSet::new();
    for k in 0..=n {
        for basis in echelon_bases(n, k) {
            for (key, _) in subspace_states(n, &basis) {
                seen.insert(key);
            }
        }
    }
    Ok(seen.len() as u64)
}

/// Cache directory from the `MAGICDECAY_CACHE` environment variable.
pub fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os("MAGICDECAY_CACHE").map(PathBuf::from)
}

pub fn cache_file(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("stab_n{n}.stbb"))
}

/// Loads the basis from `dir` if a valid cache file exists, otherwise
/// enumerates it and writes the cache.
pub fn load_or_enumerate(n: usize, dir: Option<&Path>) -> Result<StabilizerBasis> {
    if let Some(dir) = dir {
        let path = cache_file(dir, n);
        if path.exists() {
            match StabilizerBasis::load(&path) {
                Ok(b) if b.n() == n && b.len() as u64 == stabilizer_count(n) => return Ok(b),
                Ok(_) => log::warn!("ignoring incomplete basis cache {}", path.display()),
                Err(e) => log::warn!("ignoring unreadable basis cache {}: {e}", path.display()),
            }
        }
        let basis = StabilizerBasis::enumerate(n)?;
        std::fs::create_dir_all(dir)?;
        basis.save(&path)?;
        return Ok(basis);
    }
    StabilizerBasis::enumerate(n)
}

/// Process-wide shared basis for `n <= 4`, using the environment cache
/// directory when set.
pub fn shared_basis(n: usize) -> Result<&'static StabilizerBasis> {
    static CELLS: [OnceLock<StabilizerBasis>; 5] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    if n == 0 || n > 4 {
        return Err(Error::capacity(format!("shared bases cover 1..=4 qubits, got {n}")));
    }
    if let Some(b) = CELLS[n].get() {
        return Ok(b);
    }
    let b = load_or_enumerate(n, env_cache_dir().as_deref())?;
    Ok(CELLS[n].get_or_init(|| b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_small() {
        for n in 1..=3 {
            let b = StabilizerBasis::enumerate(n).unwrap();
            assert_eq!(b.len() as u64, stabilizer_count(n));
        }
        assert_eq!(stabilizer_count(4), 36720);
        assert_eq!(stabilizer_count(5), 2_423_520);
    }

    #[test]
    fn label_examples() {
        let zero = StabilizerLabel { n: 1, offset: 0, basis: vec![], q: 0, b: 0 };
        assert_eq!(zero.to_pauli_vector().unwrap().coeffs(), &[1.0, 0.0, 1.0, 0.0]);
        let y = StabilizerLabel { n: 1, offset: 0, basis: vec![1], q: 0, b: 1 };
        // +Y eigenstate: coefficients at I and Y (flat index z*2+x = 3)
        assert_eq!(y.to_pauli_vector().unwrap().coeffs(), &[1.0, 0.0, 0.0, 1.0]);
        let bad = StabilizerLabel { n: 2, offset: 0, basis: vec![3, 3], q: 0, b: 0 };
        assert!(bad.to_pauli_vector().is_err());
    }

    #[test]
    fn echelon_counts_are_gaussian_binomials() {
        // [4,2]_2 = 35
        assert_eq!(echelon_bases(4, 2).len(), 35);
        assert_eq!(echelon_bases(4, 0).len(), 1);
        assert_eq!(echelon_bases(4, 4).len(), 1);
        assert_eq!(echelon_bases(5, 1).len(), 31);
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.stbb");
        std::fs::write(&p, b"NOPE\x01\x00\x01\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(StabilizerBasis::load(&p), Err(Error::Format(_))));
    }
}
