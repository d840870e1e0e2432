//! Qubit hypergraphs, their characteristic functions, hypergraph states and
//! the exact rewrite rules for partial traces.
//!
//! Vertices are numbered `1..=n` at the public boundary and stored as bit
//! positions `0..n` internally. An edge is a `u32` mask.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::PauliVector;

pub const MAX_VERTICES: usize = 24;
pub const DENSE_CUTOFF: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<u32>,
}

/// One branch of a partial trace: the traced qubits measured in the
/// computational basis with outcome `label` leave the remaining qubits in the
/// hypergraph state of `child`, up to the global sign `(-1)^phase`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceTerm {
    pub weight: f64,
    pub child: Hypergraph,
    pub label: u32,
    pub phase: u8,
}

fn toggle(set: &mut Vec<u32>, mask: u32) {
    match set.binary_search(&mask) {
        Ok(pos) => {
            set.remove(pos);
        }
        Err(pos) => set.insert(pos, mask),
    }
}

fn compress(mask: u32, keep: &[usize]) -> u32 {
    keep.iter()
        .enumerate()
        .filter(|(_, &v)| mask >> v & 1 == 1)
        .fold(0, |acc, (j, _)| acc | 1 << j)
}

impl Hypergraph {
    /// Builds a hypergraph from edge masks. Repeated edges cancel in pairs.
    pub fn from_masks(n: usize, masks: impl IntoIterator<Item = u32>) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::capacity(format!(
                "{n} vertices exceeds the limit of {MAX_VERTICES}"
            )));
        }
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut edges = Vec::new();
        for m in masks {
            if m == 0 {
                return Err(Error::input("edges must be nonempty"));
            }
            if m & !full != 0 {
                return Err(Error::input(format!(
                    "edge mask {m:#b} references a vertex outside 1..={n}"
                )));
            }
            toggle(&mut edges, m);
        }
        Ok(Hypergraph { n, edges })
    }

    /// Builds a hypergraph from 1-based vertex lists.
    pub fn new(n: usize, edges: &[Vec<usize>]) -> Result<Self> {
        let mut masks = Vec::with_capacity(edges.len());
        for e in edges {
            let mut m = 0u32;
            for &v in e {
                if v == 0 || v > n {
                    return Err(Error::input(format!("vertex {v} outside 1..={n}")));
                }
                if m >> (v - 1) & 1 == 1 {
                    return Err(Error::input(format!("vertex {v} repeated in an edge")));
                }
                m |= 1 << (v - 1);
            }
            masks.push(m);
        }
        Self::from_masks(n, masks)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::from_masks(n, [])
    }

    /// The state with one edge on all `n` vertices.
    pub fn cnz(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("C^nZ needs at least one vertex"));
        }
        Self::from_masks(n, [full_mask(n)])
    }

    pub fn ccz() -> Self {
        Self::cnz(3).expect("valid")
    }

    /// All `k`-subsets of `n` vertices as edges.
    pub fn complete(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::input(format!("{k}-complete needs 1 <= k <= n = {n}")));
        }
        if n > MAX_VERTICES {
            return Err(Error::capacity(format!("{n} vertices")));
        }
        let masks = (0u32..1 << n).filter(|m| m.count_ones() as usize == k);
        Self::from_masks(n, masks)
    }

    /// The 14-qubit patch of the Union Jack lattice that fully determines
    /// the reduced state of qubits 1..4. Qubits 1, 2 are neighbouring lattice
    /// corners and 3, 4 are the centres of the two squares sharing that side;
    /// every triangle touching them carries a CCZ.
    pub fn union_jack_patch() -> Self {
        // Coordinates doubled so that square centres are integral.
        let sites: [(i32, i32); 14] = [
            (0, 0),
            (2, 0),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
            (-2, 0),
            (0, 2),
            (0, -2),
            (3, 1),
            (3, -1),
            (4, 0),
            (2, 2),
            (2, -2),
        ];
        let index = |p: (i32, i32)| sites.iter().position(|&q| q == p);
        let mut masks = Vec::new();
        for &(cx, cy) in &[(-1, 1), (-1, -1), (1, 1), (1, -1), (3, 1), (3, -1)] {
            let corners = [
                (cx - 1, cy - 1),
                (cx + 1, cy - 1),
                (cx + 1, cy + 1),
                (cx - 1, cy + 1),
            ];
            for k in 0..4 {
                let tri = [(cx, cy), corners[k], corners[(k + 1) % 4]];
                let idx: Vec<usize> = tri.iter().filter_map(|&p| index(p)).collect();
                if idx.len() == 3 && idx.iter().any(|&i| i < 4) {
                    masks.push(idx.iter().fold(0u32, |m, &i| m | 1 << i));
                }
            }
        }
        Self::from_masks(14, masks).expect("valid patch")
    }

    /// Resolves the named built-in states `plus`, `ccz`, `cnz:n`,
    /// `3complete:n`, `4complete:n` and `unionjack`. `n` is used for `plus`.
    pub fn named(name: &str, n: Option<usize>) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => {
                let v: usize = a
                    .parse()
                    .map_err(|_| Error::input(format!("bad size in state name `{name}`")))?;
                (h, Some(v))
            }
            None => (name, n),
        };
        let need = |a: Option<usize>| {
            a.ok_or_else(|| Error::input(format!("state `{head}` needs a size (e.g. {head}:4)")))
        };
        match head {
            "plus" => Self::empty(need(arg)?),
            "ccz" => Ok(Self::ccz()),
            "cnz" => Self::cnz(need(arg)?),
            "3complete" => Self::complete(need(arg)?, 3),
            "4complete" => Self::complete(need(arg)?, 4),
            "unionjack" => Ok(Self::union_jack_patch()),
            _ => Err(Error::input(format!("unknown state `{name}`"))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    /// Edges as sorted 1-based vertex lists.
    pub fn edge_lists(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|&m| (0..self.n).filter(|&v| m >> v & 1 == 1).map(|v| v + 1).collect())
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        self.edges.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    /// True when every edge has degree at most two, so the state is prepared
    /// by a Clifford circuit and is a stabilizer state.
    pub fn is_stabilizer(&self) -> bool {
        self.max_degree() <= 2
    }

    /// `f(x)` for `x` given as a bitmask (bit `i` is vertex `i+1`).
    pub fn eval_mask(&self, x: u32) -> u8 {
        self.edges.iter().fold(0u8, |acc, &e| acc ^ ((x & e == e) as u8))
    }

    pub fn characteristic_eval(&self, x: &[u8]) -> Result<u8> {
        if x.len() != self.n {
            return Err(Error::input(format!(
                "bit string has length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        let mut mask = 0u32;
        for (i, &b) in x.iter().enumerate() {
            match b {
                0 => {}
                1 => mask |= 1 << i,
                _ => return Err(Error::input("bit strings contain only 0 and 1")),
            }
        }
        Ok(self.eval_mask(mask))
    }

    /// `(-1)^{f(s)}` for every basis string `s`.
    pub fn signs(&self) -> Result<Vec<i8>> {
        if self.n > DENSE_CUTOFF {
            return Err(Error::capacity(format!(
                "dense vectors are limited to {DENSE_CUTOFF} qubits, got {}",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut s = vec![1i8; dim];
        for &e in &self.edges {
            let e = e as usize;
            for (x, v) in s.iter_mut().enumerate() {
                if x & e == e {
                    *v = -*v;
                }
            }
        }
        Ok(s)
    }

    /// Normalized real amplitudes `2^{-n/2} (-1)^{f(s)}`.
    pub fn state_vector(&self) -> Result<Vec<f64>> {
        let amp = (0.5f64).powf(self.n as f64 / 2.0);
        Ok(self.signs()?.into_iter().map(|s| s as f64 * amp).collect())
    }

    pub fn pauli_vector(&self) -> Result<PauliVector> {
        PauliVector::from_signs(self.n, &self.signs()?)
    }

    /// Relabels vertex `v` to `perm[v]` (0-based permutation).
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::input("permutation length mismatch"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::input("not a permutation"));
            }
        }
        let masks = self.edges.iter().map(|&m| {
            (0..self.n)
                .filter(|&v| m >> v & 1 == 1)
                .fold(0u32, |acc, v| acc | 1 << perm[v])
        });
        Self::from_masks(self.n, masks)
    }

    fn vertex_mask(&self, vertices: &[usize]) -> Result<u32> {
        let mut m = 0u32;
        for &v in vertices {
            if v == 0 || v > self.n {
                return Err(Error::input(format!("vertex {v} outside 1..={}", self.n)));
            }
            m |= 1 << (v - 1);
        }
        Ok(m)
    }

    fn child_for_label(&self, traced: &[usize], kept: &[usize], label: u32) -> (Hypergraph, u8) {
        let mut ones = 0u32;
        let mut tmask = 0u32;
        for (j, &v) in traced.iter().enumerate() {
            tmask |= 1 << v;
            if label >> j & 1 == 1 {
                ones |= 1 << v;
            }
        }
        let mut edges = Vec::new();
        let mut phase = 0u8;
        for &e in &self.edges {
            let inside = e & tmask;
            if inside & !ones != 0 {
                continue;
            }
            let rest = compress(e & !tmask, kept);
            if rest == 0 {
                phase ^= 1;
            } else {
                toggle(&mut edges, rest);
            }
        }
        (
            Hypergraph {
                n: kept.len(),
                edges,
            },
            phase,
        )
    }

    /// Splits `Tr_I` of the state into `2^{|I|}` equally weighted hypergraph
    /// states on the remaining vertices, one per computational-basis label
    /// of the traced qubits (bit `j` of the label belongs to the `j`-th
    /// smallest traced vertex).
    pub fn partial_trace_decomposition(&self, traced: &[usize]) -> Result<Vec<TraceTerm>> {
        if traced.is_empty() {
            return Err(Error::input("the traced set must be nonempty"));
        }
        let tmask = self.vertex_mask(traced)?;
        let (tr, kept) = self.split(tmask);
        let k = tr.len();
        let weight = 0.5f64.powi(k as i32);
        Ok((0u32..1 << k)
            .map(|label| {
                let (child, phase) = self.child_for_label(&tr, &kept, label);
                TraceTerm {
                    weight,
                    child,
                    label,
                    phase,
                }
            })
            .collect())
    }

    fn split(&self, tmask: u32) -> (Vec<usize>, Vec<usize>) {
        (0..self.n).partition(|&v| tmask >> v & 1 == 1)
    }

    /// Distinct children of the trace over the complement of `keep`, with
    /// their total weights, in canonical order.
    pub fn reduced_mixture(&self, keep: &[usize]) -> Result<Vec<(f64, Hypergraph)>> {
        let kmask = self.vertex_mask(keep)?;
        let (kept, tr) = self.split(kmask);
        if tr.is_empty() {
            return Ok(vec![(1.0, self.clone())]);
        }
        let mut counts: BTreeMap<Hypergraph, u64> = BTreeMap::new();
        for label in 0u32..1 << tr.len() {
            let (child, _) = self.child_for_label(&tr, &kept, label);
            *counts.entry(child).or_default() += 1;
        }
        let total = (1u64 << tr.len()) as f64;
        Ok(counts
            .into_iter()
            .map(|(h, c)| (c as f64 / total, h))
            .collect())
    }

    /// Pauli vector of the reduced state on `keep` (1-based vertices, kept in
    /// increasing order). An empty `keep` gives the 0-qubit scalar 1.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<PauliVector> {
        if keep.is_empty() {
            return Ok(PauliVector::scalar_one());
        }
        let mix = self.reduced_mixture(keep)?;
        let mut acc = PauliVector::zeros(mix[0].1.n)?;
        for (w, h) in &mix {
            acc.add_scaled(&h.pauli_vector()?, *w);
        }
        Ok(acc)
    }

    /// Parses the text format: a header line `n=<int> d=<int>` followed by
    /// one edge per line, vertices separated by spaces and an optional
    /// `*<mult>` suffix. Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let parsed = EdgeList::parse(text)?;
        if parsed.d != 2 {
            return Err(Error::input(format!(
                "qubit hypergraph expected, header says d={}",
                parsed.d
            )));
        }
        let mut lists = Vec::new();
        for (e, mult) in parsed.edges {
            if mult % 2 == 1 {
                lists.push(e);
            }
        }
        Self::new(parsed.n, &lists)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n={} d=2\n", self.n);
        for e in self.edge_lists() {
            let parts: Vec<String> = e.iter().map(|v| v.to_string()).collect();
            s.push_str(&parts.join(" "));
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Hypergraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .edge_lists()
            .into_iter()
            .map(|e| e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(""))
            .collect();
        write!(f, "n={} {{{}}}", self.n, parts.join(","))
    }
}

pub(crate) fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Raw contents of a hypergraph text file, before reduction modulo `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeList {
    pub n: usize,
    pub d: u32,
    pub edges: Vec<(Vec<usize>, u32)>,
}

impl EdgeList {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::input("empty hypergraph file"))?;
        let mut n = None;
        let mut d = 2u32;
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("n", v)) => {
                    n = Some(v.parse().map_err(|_| Error::input(format!("bad n `{v}`")))?)
                }
                Some(("d", v)) => d = v.parse().map_err(|_| Error::input(format!("bad d `{v}`")))?,
                _ => return Err(Error::input(format!("unexpected header token `{tok}`"))),
            }
        }
        let n = n.ok_or_else(|| Error::input("header must contain n=<int>"))?;
        if d < 2 {
            return Err(Error::input("d must be at least 2"));
        }
        let mut edges = Vec::new();
        for line in lines {
            let (verts, mult) = match line.split_once('*') {
                Some((v, m)) => (
                    v,
                    m.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::input(format!("bad multiplicity in `{line}`")))?,
                ),
                None => (line, 1),
            };
            let vs = verts
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::input(format!("bad vertex `{t}` in `{line}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vs.is_empty() {
                return Err(Error::input(format!("edge line without vertices: `{line}`")));
            }
            edges.push((vs, mult % d));
        }
        Ok(EdgeList { n, d, edges })
    }
}

/// Representatives of all 4-vertex hypergraphs whose edges have degree at
/// least three, one per orbit under vertex permutations.
pub fn four_qubit_scan_classes() -> Vec<Hypergraph> {
    let candidates: Vec<u32> = (1u32..16).filter(|m| m.count_ones() >= 3).collect();
    let perms = permutations(4);
    let mut reps = std::collections::BTreeSet::new();
    for subset in 1u32..1 << candidates.len() {
        let masks: Vec<u32> = (0..candidates.len())
            .filter(|&j| subset >> j & 1 == 1)
            .map(|j| candidates[j])
            .collect();
        let h = Hypergraph::from_masks(4, masks).expect("valid");
        let canon = perms
            .iter()
            .map(|p| h.permute(p).expect("valid"))
            .min()
            .expect("nonempty");
        reps.insert(canon);
    }
    reps.into_iter().collect()
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2() -> Hypergraph {
        Hypergraph::new(4, &[vec![1, 2, 3, 4], vec![1, 2, 3], vec![2, 3, 4], vec![3, 4]]).unwrap()
    }

    #[test]
    fn characteristic_examples() {
        let h = Hypergraph::ccz();
        assert_eq!(h.characteristic_eval(&[1, 1, 1]).unwrap(), 1);
        assert_eq!(fig2().characteristic_eval(&[1, 1, 1, 1]).unwrap(), 0);
        assert!(h.characteristic_eval(&[1, 1]).is_err());
    }

    #[test]
    fn three_complete_on_five_weight_four() {
        let h = Hypergraph::complete(5, 3).unwrap();
        for x in 0u32..32 {
            if x.count_ones() == 4 {
                // brute force over all 3-subsets
                let mut c = 0;
                for a in 0..5 {
                    for b in a + 1..5 {
                        for d in b + 1..5 {
                            let m = 1 << a | 1 << b | 1 << d;
                            if x & m == m {
                                c += 1;
                            }
                        }
                    }
                }
                assert_eq!(c % 2, 0);
                assert_eq!(h.eval_mask(x), 0);
            }
        }
    }

    #[test]
    fn ccz_amplitudes() {
        let v = Hypergraph::ccz().state_vector().unwrap();
        let a = 0.5f64.powf(1.5);
        for (s, x) in v.iter().enumerate() {
            let want = if s == 7 { -a } else { a };
            assert!((x - want).abs() < 1e-15);
        }
        let plus = Hypergraph::empty(1).unwrap().state_vector().unwrap();
        assert!((plus[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn three_complete_four_signs() {
        let s = Hypergraph::complete(4, 3).unwrap().signs().unwrap();
        for x in 0usize..16 {
            let w = x.count_ones() as usize;
            let binom = if w >= 3 { (w * (w - 1) * (w - 2)) / 6 } else { 0 };
            assert_eq!(s[x], if binom % 2 == 1 { -1 } else { 1 });
        }
    }

    #[test]
    fn figure_two_trace() {
        let terms = fig2().partial_trace_decomposition(&[1]).unwrap();
        assert_eq!(terms.len(), 2);
        let want0 = Hypergraph::new(3, &[vec![1, 2, 3], vec![2, 3]]).unwrap();
        let want1 = Hypergraph::new(3, &[vec![1, 2], vec![2, 3]]).unwrap();
        assert_eq!(terms[0].child, want0);
        assert_eq!(terms[1].child, want1);
        assert_eq!(terms[0].weight, 0.5);
    }

    #[test]
    fn full_edge_survives_only_all_ones() {
        let h = Hypergraph::cnz(6).unwrap();
        let terms = h.partial_trace_decomposition(&[2, 4, 5]).unwrap();
        for t in &terms {
            let keeps = !t.child.edges().is_empty();
            assert_eq!(keeps, t.label == 0b111);
        }
        for t in Hypergraph::empty(5).unwrap().partial_trace_decomposition(&[1, 3]).unwrap() {
            assert!(t.child.edges().is_empty());
        }
    }

    #[test]
    fn scan_classes() {
        let classes = four_qubit_scan_classes();
        assert_eq!(classes.len(), 9);
        assert!(classes.contains(&Hypergraph::cnz(4).unwrap()));
        assert!(classes.contains(&Hypergraph::complete(4, 3).unwrap()));
    }

    #[test]
    fn union_jack_patch_shape() {
        let h = Hypergraph::union_jack_patch();
        assert_eq!(h.n(), 14);
        assert_eq!(h.edges().len(), 16);
        assert!(h.edges().iter().all(|e| e.count_ones() == 3 && e & 0b1111 != 0));
    }

    #[test]
    fn text_round_trip() {
        let h = fig2();
        assert_eq!(Hypergraph::from_text(&h.to_text()).unwrap(), h);
        let h2 = Hypergraph::from_text("n=3 d=2\n1 2 3 *3\n1 2 *2\n").unwrap();
        assert_eq!(h2, Hypergraph::ccz());
        assert!(Hypergraph::from_text("n=3 d=3\n1 2\n").is_err());
        assert!(Hypergraph::from_text("n=3\n1 4\n").is_err());
    }

    #[test]
    fn named_states() {
        assert_eq!(Hypergraph::named("ccz", None).unwrap(), Hypergraph::ccz());
        assert_eq!(Hypergraph::named("cnz:5", None).unwrap().n(), 5);
        assert_eq!(Hypergraph::named("plus", Some(3)).unwrap().edges().len(), 0);
        assert!(Hypergraph::named("plus", None).is_err());
        assert!(Hypergraph::named("bogus", None).is_err());
    }
}
