//! Minimum ℓ₁-norm solutions of `A x = b` by a primal–dual interior point
//! method.
//!
//! The problem `min ||x||_1 s.t. A x = b` is solved in the split form
//! `x = u - v`, `u, v >= 0`, whose dual is `max b·y s.t. |Aᵀy| <= 1`.
//! The method is Mehrotra's predictor–corrector with normal equations
//! `A diag(d) Aᵀ Δy = r`, formed densely (the row count is small) and
//! factored by Cholesky.
//!
//! Instances whose optimal face is large (states on the boundary of the
//! stabilizer polytope) can stall the interior point iteration; those are
//! re-solved with the `microlp` simplex on both the primal and the dual.

use crate::error::{Error, Result};

/// Sparse matrix stored column by column.
#[derive(Clone, Debug)]
pub struct ColumnMatrix {
    rows: usize,
    colptr: Vec<usize>,
    rowidx: Vec<u32>,
    vals: Vec<f64>,
}

impl ColumnMatrix {
    pub fn new(rows: usize) -> Self {
        ColumnMatrix {
            rows,
            colptr: vec![0],
            rowidx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn push_column(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        for (r, v) in entries {
            assert!(r < self.rows, "row index out of range");
            self.rowidx.push(r as u32);
            self.vals.push(v);
        }
        self.colptr.push(self.rowidx.len());
    }

    pub fn from_dense_columns(rows: usize, cols: &[Vec<f64>]) -> Self {
        let mut m = Self::new(rows);
        for c in cols {
            m.push_column(c.iter().copied().enumerate().filter(|(_, v)| *v != 0.0));
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.colptr.len() - 1
    }

    fn col(&self, j: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.colptr[j], self.colptr[j + 1]);
        (&self.rowidx[a..b], &self.vals[a..b])
    }

    /// `out = A x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let (ri, rv) = self.col(j);
            for (r, v) in ri.iter().zip(rv) {
                out[*r as usize] += v * xj;
            }
        }
        out
    }

    /// `out = Aᵀ y`.
    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols())
            .map(|j| {
                let (ri, rv) = self.col(j);
                ri.iter().zip(rv).map(|(r, v)| v * y[*r as usize]).sum()
            })
            .collect()
    }

    /// Dense lower triangle of `A diag(d) Aᵀ` (row-major, full storage).
    fn normal_matrix(&self, d: &[f64]) -> Vec<f64> {
        let m = self.rows;
        let mut out = vec![0.0; m * m];
        for (j, &dj) in d.iter().enumerate() {
            if dj == 0.0 {
                continue;
            }
            let (ri, rv) = self.col(j);
            for (a, (&ra, &va)) in ri.iter().zip(rv).enumerate() {
                let w = dj * va;
                let row = &mut out[ra as usize * m..ra as usize * m + m];
                for (&rb, &vb) in ri[..=a].iter().zip(&rv[..=a]) {
                    row[rb as usize] += w * vb;
                }
            }
        }
        out
    }
}

/// Cholesky factor of a dense symmetric positive (semi)definite matrix.
/// Pivots that collapse to rounding level are lifted to a small multiple of
/// the largest diagonal entry; iterative refinement against the assembled
/// matrix recovers the accuracy lost there.
struct Cholesky {
    m: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn factor(mut a: Vec<f64>, m: usize) -> Self {
        let maxdiag = (0..m).map(|i| a[i * m + i]).fold(0.0f64, f64::max).max(1e-300);
        for j in 0..m {
            let mut djj = a[j * m + j];
            for k in 0..j {
                djj -= a[j * m + k] * a[j * m + k];
            }
            if djj <= 1e-14 * maxdiag {
                djj = 1e-14 * maxdiag;
            }
            let ljj = djj.sqrt();
            a[j * m + j] = ljj;
            for i in j + 1..m {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s -= a[i * m + k] * a[j * m + k];
                }
                a[i * m + j] = s / ljj;
            }
        }
        Cholesky { m, l: a }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = b.to_vec();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * m + k] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..m {
                s -= self.l[k * m + i] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        y
    }
}

fn sym_mul(a: &[f64], m: usize, x: &[f64]) -> Vec<f64> {
    // `a` holds the lower triangle; use symmetry.
    let mut out = vec![0.0; m];
    for i in 0..m {
        let row = &a[i * m..i * m + m];
        for j in 0..i {
            out[i] += row[j] * x[j];
            out[j] += row[j] * x[i];
        }
        out[i] += row[i] * x[i];
    }
    out
}

#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Relative tolerance on primal residual, dual residual and gap.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            tol: 1e-11,
            max_iter: 120,
        }
    }
}

#[derive(Clone, Debug)]
pub struct L1Solution {
    /// Signed primal solution.
    pub x: Vec<f64>,
    /// Dual vector scaled so that `max |Aᵀy| <= 1` holds exactly.
    pub y: Vec<f64>,
    /// `||x||_1`.
    pub primal: f64,
    /// `b·y` for the scaled dual, a certified lower bound on the optimum.
    pub dual: f64,
    /// `||A x - b||_∞`.
    pub residual: f64,
    /// `max |Aᵀy|` before scaling.
    pub dual_violation: f64,
    pub iterations: usize,
}

impl L1Solution {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(1.0f64, f64::min)
}

struct Direction {
    du: Vec<f64>,
    dv: Vec<f64>,
    dy: Vec<f64>,
    dsu: Vec<f64>,
    dsv: Vec<f64>,
}

struct State<'a> {
    a: &'a ColumnMatrix,
    b: &'a [f64],
    u: Vec<f64>,
    v: Vec<f64>,
    y: Vec<f64>,
    su: Vec<f64>,
    sv: Vec<f64>,
}

impl State<'_> {
    fn residuals(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let diff: Vec<f64> = self.u.iter().zip(&self.v).map(|(u, v)| u - v).collect();
        let ax = self.a.mul(&diff);
        let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = self.a.mul_t(&self.y);
        let rdu = aty.iter().zip(&self.su).map(|(t, s)| 1.0 - t - s).collect();
        let rdv = aty.iter().zip(&self.sv).map(|(t, s)| 1.0 + t - s).collect();
        (rp, rdu, rdv)
    }

    fn mu(&self) -> f64 {
        let s: f64 = self.u.iter().zip(&self.su).map(|(a, b)| a * b).sum::<f64>()
            + self.v.iter().zip(&self.sv).map(|(a, b)| a * b).sum::<f64>();
        s / (2 * self.u.len()) as f64
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        chol: &Cholesky,
        mat: &[f64],
        rp: &[f64],
        rdu: &[f64],
        rdv: &[f64],
        rcu: &[f64],
        rcv: &[f64],
    ) -> Direction {
        let nc = self.u.len();
        let mut t = vec![0.0; nc];
        for j in 0..nc {
            let du = self.u[j] / self.su[j];
            let dv = self.v[j] / self.sv[j];
            t[j] = rcu[j] / self.su[j] - du * rdu[j] - rcv[j] / self.sv[j] + dv * rdv[j];
        }
        let at = self.a.mul(&t);
        let rhs: Vec<f64> = rp.iter().zip(&at).map(|(r, a)| r - a).collect();
        let mut dy = chol.solve(&rhs);
        let rhs_norm = norm_inf(&rhs).max(1e-300);
        for _ in 0..4 {
            let mdy = sym_mul(mat, self.a.rows(), &dy);
            let res: Vec<f64> = rhs.iter().zip(&mdy).map(|(r, m)| r - m).collect();
            if norm_inf(&res) <= 1e-15 * rhs_norm {
                break;
            }
            let corr = chol.solve(&res);
            for (d, c) in dy.iter_mut().zip(corr) {
                *d += c;
            }
        }
        let atdy = self.a.mul_t(&dy);
        let mut dir = Direction {
            du: vec![0.0; nc],
            dv: vec![0.0; nc],
            dy,
            dsu: vec![0.0; nc],
            dsv: vec![0.0; nc],
        };
        for j in 0..nc {
            dir.dsu[j] = rdu[j] - atdy[j];
            dir.dsv[j] = rdv[j] + atdy[j];
            dir.du[j] = (rcu[j] - self.u[j] * dir.dsu[j]) / self.su[j];
            dir.dv[j] = (rcv[j] - self.v[j] * dir.dsv[j]) / self.sv[j];
        }
        dir
    }
}

/// Solves `min ||x||_1 s.t. A x = b`. `A` must have full row rank.
pub fn solve_l1(a: &ColumnMatrix, b: &[f64], opts: &LpOptions) -> Result<L1Solution> {
    let m = a.rows();
    let nc = a.cols();
    if b.len() != m {
        return Err(Error::input("right-hand side length mismatch"));
    }
    if nc == 0 {
        return Err(Error::input("no columns"));
    }
    let bnorm = norm_inf(b);

    // Mehrotra starting point: least-norm primal, zero dual.
    let ones = vec![1.0; nc];
    let gram = a.normal_matrix(&ones);
    let gram_chol = Cholesky::factor(gram, m);
    let t = gram_chol.solve(b);
    let x0 = a.mul_t(&t);
    let mut u: Vec<f64> = x0.iter().map(|x| x.max(0.0)).collect();
    let mut v: Vec<f64> = x0.iter().map(|x| (-x).max(0.0)).collect();
    let mut su = vec![1.0; nc];
    let mut sv = vec![1.0; nc];
    let shift = 0.5 * (bnorm.max(1e-3));
    for j in 0..nc {
        u[j] += shift;
        v[j] += shift;
    }
    let xs: f64 = u.iter().sum::<f64>() + v.iter().sum::<f64>();
    let ds = 0.5 * xs / (2 * nc) as f64;
    for j in 0..nc {
        su[j] += ds;
        sv[j] += ds;
    }
    let mut st = State {
        a,
        b,
        u,
        v,
        y: vec![0.0; m],
        su,
        sv,
    };

    let mut iterations = 0;
    let mut converged = false;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut saved = (st.u.clone(), st.v.clone(), st.y.clone());
    for it in 0..opts.max_iter {
        iterations = it;
        let (rp, rdu, rdv) = st.residuals();
        let pobj: f64 = st.u.iter().sum::<f64>() + st.v.iter().sum::<f64>();
        let dobj: f64 = b.iter().zip(&st.y).map(|(b, y)| b * y).sum();
        let pres = norm_inf(&rp) / (1.0 + bnorm);
        let dres = norm_inf(&rdu).max(norm_inf(&rdv));
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        log::trace!("ipm it={it} pobj={pobj:.14} dobj={dobj:.14} pres={pres:.2e} dres={dres:.2e}");
        if pres < opts.tol && dres < opts.tol && gap < opts.tol {
            converged = true;
            break;
        }
        let merit = pres.max(dres).max(gap);
        if !merit.is_finite() {
            log::debug!("interior point iterate became non-finite at iteration {it}");
            break;
        }
        if merit < best {
            saved = (st.u.clone(), st.v.clone(), st.y.clone());
        }
        if merit < 0.9 * best {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 15 {
                break;
            }
        }
        best = best.min(merit);
        let mu = st.mu();
        let d: Vec<f64> = (0..nc)
            .map(|j| st.u[j] / st.su[j] + st.v[j] / st.sv[j])
            .collect();
        let mat = a.normal_matrix(&d);
        let chol = Cholesky::factor(mat.clone(), m);

        // predictor
        let rcu: Vec<f64> = (0..nc).map(|j| -st.u[j] * st.su[j]).collect();
        let rcv: Vec<f64> = (0..nc).map(|j| -st.v[j] * st.sv[j]).collect();
        let aff = st.direction(&chol, &mat, &rp, &rdu, &rdv, &rcu, &rcv);
        let ap = max_step(&st.u, &aff.du).min(max_step(&st.v, &aff.dv));
        let ad = max_step(&st.su, &aff.dsu).min(max_step(&st.sv, &aff.dsv));
        let mut mu_aff = 0.0;
        for j in 0..nc {
            mu_aff += (st.u[j] + ap * aff.du[j]) * (st.su[j] + ad * aff.dsu[j]);
            mu_aff += (st.v[j] + ap * aff.dv[j]) * (st.sv[j] + ad * aff.dsv[j]);
        }
        mu_aff /= (2 * nc) as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // corrector
        let rcu: Vec<f64> = (0..nc)
            .map(|j| sigma * mu - st.u[j] * st.su[j] - aff.du[j] * aff.dsu[j])
            .collect();
        let rcv: Vec<f64> = (0..nc)
            .map(|j| sigma * mu - st.v[j] * st.sv[j] - aff.dv[j] * aff.dsv[j])
            .collect();
        let dir = st.direction(&chol, &mat, &rp, &rdu, &rdv, &rcu, &rcv);
        let eta = (1.0 - mu).clamp(0.9, 0.999_999);
        let ap = (eta * max_step(&st.u, &dir.du).min(max_step(&st.v, &dir.dv))).min(1.0);
        let ad = (eta * max_step(&st.su, &dir.dsu).min(max_step(&st.sv, &dir.dsv))).min(1.0);
        for j in 0..nc {
            st.u[j] += ap * dir.du[j];
            st.v[j] += ap * dir.dv[j];
            st.su[j] += ad * dir.dsu[j];
            st.sv[j] += ad * dir.dsv[j];
        }
        for (y, d) in st.y.iter_mut().zip(&dir.dy) {
            *y += ad * d;
        }
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        // Near degenerate optima the scaled normal equations lose primal
        // accuracy. Restore A(u - v) = b through the fixed Gram matrix,
        // pushing each correction into whichever half keeps it positive.
        let diff: Vec<f64> = st.u.iter().zip(&st.v).map(|(u, v)| u - v).collect();
        let ax = a.mul(&diff);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        if norm_inf(&r) > 1e-14 * (1.0 + bnorm) {
            let dx = a.mul_t(&gram_chol.solve(&r));
            for (j, d) in dx.into_iter().enumerate() {
                if d > 0.0 {
                    st.u[j] += d;
                } else {
                    st.v[j] -= d;
                }
            }
        }
    }

    if !converged {
        // Degenerate problems can drift after reaching their best point;
        // fall back to the best iterate seen.
        (st.u, st.v, st.y) = saved;
    }
    let mut x: Vec<f64> = st.u.iter().zip(&st.v).map(|(u, v)| u - v).collect();
    // Least-norm correction onto A x = b with the fixed Gram matrix, which
    // stays well conditioned when the interior point system does not.
    for _ in 0..2 {
        let ax = a.mul(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = a.mul_t(&gram_chol.solve(&r));
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    let ax = a.mul(&x);
    let residual = ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let primal: f64 = x.iter().map(|v| v.abs()).sum();
    let aty = a.mul_t(&st.y);
    let viol = norm_inf(&aty);
    let scale = if viol > 1.0 { 1.0 / viol } else { 1.0 };
    let y: Vec<f64> = st.y.iter().map(|v| v * scale).collect();
    let dual: f64 = b.iter().zip(&y).map(|(b, y)| b * y).sum();
    let sol = L1Solution {
        x,
        y,
        primal,
        dual,
        residual,
        dual_violation: viol,
        iterations,
    };
    let acceptable =
        |s: &L1Solution| s.residual <= 1e-9 * (1.0 + bnorm) && s.gap().abs() <= 1e-7 * (1.0 + s.primal);
    let sol = if converged {
        sol
    } else {
        let sol = with_single_row_dual(a, b, sol);
        if acceptable(&sol) {
            sol
        } else {
            crossover(a, b, sol).unwrap_or_else(|s| s)
        }
    };
    if !converged {
        if !acceptable(&sol) {
            return Err(Error::Solver {
                iterations,
                message: format!(
                    "no convergence: residual {:.2e}, gap {:.2e}",
                    sol.residual,
                    sol.gap()
                ),
            });
        }
        log::debug!(
            "interior point stopped before tolerance {:.1e}: residual {:.2e}, gap {:.2e}",
            opts.tol,
            sol.residual,
            sol.gap()
        );
    }
    Ok(sol)
}

/// Replaces the dual by `t e_r` when some single row gives a larger bound.
/// That dual is feasible for `|t| max_j |A_rj| <= 1`, so its bound is
/// `|b_r| / max_j |A_rj|`.
fn with_single_row_dual(a: &ColumnMatrix, b: &[f64], mut sol: L1Solution) -> L1Solution {
    let mut row_max = vec![0.0f64; a.rows()];
    for j in 0..a.cols() {
        let (ri, rv) = a.col(j);
        for (&r, &v) in ri.iter().zip(rv) {
            row_max[r as usize] = row_max[r as usize].max(v.abs());
        }
    }
    let best = row_max
        .iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (m, _))| **m > 0.0)
        .map(|(r, (m, bi))| (r, bi.abs() / m, bi.signum() / m))
        .max_by(|p, q| p.1.total_cmp(&q.1));
    if let Some((r, bound, t)) = best {
        if bound > sol.dual {
            sol.y = vec![0.0; a.rows()];
            sol.y[r] = t;
            sol.dual = bound;
            sol.dual_violation = 1.0;
        }
    }
    sol
}

/// Re-solves a stalled instance with the simplex method, which lands on a
/// vertex even when the optimal face is large, then repairs the interior
/// point dual by projecting it onto the complementary-slackness conditions
/// of that vertex.
fn crossover(a: &ColumnMatrix, b: &[f64], sol: L1Solution) -> std::result::Result<L1Solution, L1Solution> {
    use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
    let m = a.rows();
    let nc = a.cols();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..nc)
        .map(|_| {
            (
                p.add_var(1.0, (0.0, f64::INFINITY)),
                p.add_var(1.0, (0.0, f64::INFINITY)),
            )
        })
        .collect();
    let mut rows: Vec<LinearExpr> = (0..m).map(|_| LinearExpr::empty()).collect();
    for (j, &(u, v)) in vars.iter().enumerate() {
        let (ri, rv) = a.col(j);
        for (&r, &val) in ri.iter().zip(rv) {
            rows[r as usize].add(u, val);
            rows[r as usize].add(v, -val);
        }
    }
    for (row, &rhs) in rows.into_iter().zip(b) {
        p.add_constraint(row, ComparisonOp::Eq, rhs);
    }
    let simplex = match p.solve().map(|o| o.into_solution()) {
        Ok(Ok(s)) => s,
        Ok(Err(_)) => {
            log::debug!("simplex fallback interrupted");
            return Err(sol);
        }
        Err(e) => {
            log::debug!("simplex fallback failed: {e}");
            return Err(sol);
        }
    };
    let mut x: Vec<f64> = vars
        .iter()
        .map(|&(u, v)| simplex.var_value(u) - simplex.var_value(v))
        .collect();
    let ax = a.mul(&x);
    let residual = ax.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if residual > 1e-9 * (1.0 + norm_inf(b)) {
        log::debug!("simplex fallback residual {residual:.2e} rejected");
        return Err(sol);
    }
    for xi in x.iter_mut() {
        if xi.abs() < 1e-14 {
            *xi = 0.0;
        }
    }
    let primal: f64 = x.iter().map(|v| v.abs()).sum();

    // The dual `max b·y s.t. |Aᵀy| <= 1` at a vertex gives a certificate
    // matching the primal vertex.
    let mut d = Problem::new(OptimizationDirection::Maximize);
    let yv: Vec<_> = b
        .iter()
        .map(|&bi| d.add_var(bi, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for j in 0..nc {
        let (ri, rv) = a.col(j);
        let mut e = LinearExpr::empty();
        for (&r, &val) in ri.iter().zip(rv) {
            e.add(yv[r as usize], val);
        }
        d.add_constraint(e.clone(), ComparisonOp::Le, 1.0);
        d.add_constraint(e, ComparisonOp::Ge, -1.0);
    }
    let repaired = match d.solve().map(|o| o.into_solution()) {
        Ok(Ok(ds)) => {
            let y: Vec<f64> = yv.iter().map(|&v| ds.var_value(v)).collect();
            let viol = norm_inf(&a.mul_t(&y));
            let scale = if viol > 1.0 { 1.0 / viol } else { 1.0 };
            let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
            let dual: f64 = b.iter().zip(&y).map(|(b, y)| b * y).sum();
            Some((y, dual, viol))
        }
        _ => None,
    };
    let (y, dual, dual_violation) = match repaired {
        Some(r) if r.1 > sol.dual || !sol.dual.is_finite() => r,
        _ => (sol.y.clone(), sol.dual, sol.dual_violation),
    };
    log::debug!("simplex fallback: primal {primal:.15} dual {dual:.15}");
    Ok(L1Solution {
        x,
        y,
        primal,
        dual,
        residual,
        dual_violation,
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_columns() {
        // min |x1|+|x2| s.t. x1 = 0.3, x2 = -2
        let a = ColumnMatrix::from_dense_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let s = solve_l1(&a, &[0.3, -2.0], &LpOptions::default()).unwrap();
        assert!((s.primal - 2.3).abs() < 1e-9);
        assert!((s.dual - 2.3).abs() < 1e-9);
    }

    #[test]
    fn redundant_columns() {
        // b = (1, 1): column (1,1) alone costs 1.
        let a = ColumnMatrix::from_dense_columns(
            2,
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
        );
        let s = solve_l1(&a, &[1.0, 1.0], &LpOptions::default()).unwrap();
        assert!((s.primal - 1.0).abs() < 1e-9, "{}", s.primal);
        assert!(s.x[2] > 0.999);
    }
}
