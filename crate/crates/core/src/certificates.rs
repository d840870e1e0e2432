//! Published dual witnesses for the noisy CCZ state and their verification
//! against the LP.
//!
//! The table lists `(1/8) Tr(A_j P)` for permutation-symmetric three-qubit
//! witnesses `A_j`, one row per multiset of single-qubit Paulis (digits
//! `0,1,2,3` for `I,X,Y,Z`). Loading expands every row to all distinct
//! qubit orderings.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypergraph::{permutations, Hypergraph};
use crate::pauli::{NoiseModel, PauliVector};
use crate::rom::RomSolver;

/// The witness table shipped with the crate.
pub const CCZ_WITNESS_TABLE: &str = include_str!("../data/ccz_witnesses.csv");

#[derive(Clone, Debug)]
pub struct WitnessTable {
    names: Vec<String>,
    /// One Pauli vector per witness, coefficients `Tr(A_j P)`.
    witnesses: Vec<PauliVector>,
}

/// `(z, x)` bits of a single-qubit Pauli digit.
fn digit_bits(d: u8) -> Result<(usize, usize)> {
    Ok(match d {
        b'0' => (0, 0),
        b'1' => (0, 1),
        b'2' => (1, 1),
        b'3' => (1, 0),
        _ => return Err(Error::Format(format!("bad Pauli digit `{}`", d as char))),
    })
}

impl WitnessTable {
    pub fn builtin() -> Self {
        Self::parse(CCZ_WITNESS_TABLE).expect("shipped table parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::Format(format!("witness table header: {e}")))?
            .clone();
        if headers.len() < 2 {
            return Err(Error::Format("witness table needs a label and at least one column".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut coeffs = vec![vec![0.0f64; 64]; names.len()];
        let mut seen = vec![false; 64];
        let perms = permutations(3);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Format(format!("witness table row: {e}")))?;
            let label = rec.get(0).unwrap_or_default().as_bytes();
            if label.len() != 3 {
                return Err(Error::Format(format!(
                    "row label `{}` is not three digits",
                    String::from_utf8_lossy(label)
                )));
            }
            if rec.len() != names.len() + 1 {
                return Err(Error::Format("row length differs from the header".into()));
            }
            let bits = [digit_bits(label[0])?, digit_bits(label[1])?, digit_bits(label[2])?];
            let values: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad number `{v}`")))
                })
                .collect::<Result<_>>()?;
            for p in &perms {
                let (mut z, mut x) = (0usize, 0usize);
                for (q, &src) in p.iter().enumerate() {
                    z |= bits[src].0 << q;
                    x |= bits[src].1 << q;
                }
                let idx = z * 8 + x;
                seen[idx] = true;
                for (j, v) in values.iter().enumerate() {
                    coeffs[j][idx] = 8.0 * v;
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!(
                "witness table does not cover Pauli index {missing}"
            )));
        }
        let witnesses = coeffs
            .into_iter()
            .map(|c| PauliVector::from_coeffs(3, c))
            .collect::<Result<_>>()?;
        Ok(WitnessTable { names, witnesses })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn witnesses(&self) -> &[PauliVector] {
        &self.witnesses
    }

    /// `α_j = Tr(ρ A_j)` for every witness.
    pub fn alphas(&self, rho: &PauliVector) -> Vec<f64> {
        self.witnesses.iter().map(|a| rho.hs_inner(a)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateRow {
    pub lambda: f64,
    pub max_alpha: f64,
    /// 1-based index of the attaining witness.
    pub argmax: usize,
    pub rom: f64,
    pub difference: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityRow {
    pub witness: String,
    /// `max_σ |Tr(σ A_j)|` over pure stabilizer states.
    pub max_overlap: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub tolerance: f64,
    pub rows: Vec<CertificateRow>,
    pub feasibility: Vec<FeasibilityRow>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.ok) && self.feasibility.iter().all(|f| f.ok)
    }
}

/// Compares `max_j Tr(E_λ(CCZ) A_j)` with the LP value on each grid point
/// and checks dual feasibility of every witness.
pub fn verify_certificates(
    table: &WitnessTable,
    grid: &[f64],
    solver: &RomSolver,
    tolerance: f64,
) -> Result<CertificateReport> {
    let basis = solver.basis();
    if basis.n() != 3 {
        return Err(Error::input("certificates are for three qubits"));
    }
    let ccz = Hypergraph::ccz().pauli_vector()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &l in grid {
        let rho = ccz.apply_noise(&NoiseModel::Depolarizing(l))?;
        let alphas = table.alphas(&rho);
        let (argmax, max_alpha) = alphas
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let rom = solver.rom(&rho)?.value;
        let difference = max_alpha - rom;
        rows.push(CertificateRow {
            lambda: l,
            max_alpha,
            argmax: argmax + 1,
            rom,
            difference,
            ok: difference.abs() <= tolerance,
        });
    }
    let feasibility = table
        .names
        .iter()
        .zip(&table.witnesses)
        .map(|(name, a)| {
            let max_overlap = (0..basis.len())
                .map(|j| basis.column(j).map(|(i, s)| s * a.coeffs()[i]).sum::<f64>().abs() / 8.0)
                .fold(0.0, f64::max);
            FeasibilityRow {
                witness: name.clone(),
                max_overlap,
                ok: max_overlap <= 1.0 + tolerance,
            }
        })
        .collect();
    Ok(CertificateReport {
        tolerance,
        rows,
        feasibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_expands_to_all_paulis() {
        let t = WitnessTable::builtin();
        assert_eq!(t.names().len(), 9);
        // IXZ-type entries of A1 share one value across all 6 orderings
        let a1 = &t.witnesses()[0];
        let ixz = a1.coeff(0b100, 0b010);
        let zxi = a1.coeff(0b001, 0b010);
        assert!((ixz - 8.0 * 0.22222).abs() < 1e-12);
        assert_eq!(ixz, zxi);
    }

    #[test]
    fn identity_witness() {
        let t = WitnessTable::builtin();
        let rho = PauliVector::maximally_mixed(3).unwrap();
        assert!((t.alphas(&rho)[8] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(WitnessTable::parse("label,A\n00,1\n").is_err());
        assert!(WitnessTable::parse("label,A\n000,1\n").is_err());
        assert!(WitnessTable::parse("label,A\n004,1\n").is_err());
    }
}
