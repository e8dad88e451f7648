//! Active-set nonnegative least squares (Lawson–Hanson).
//!
//! Solves `min ‖Σ_k λ_k g_k − b‖₂` over `λ ≥ 0`. The solver works on the
//! Gram form `Q = GᵀG`, `c = Gᵀb`, which keeps the cost independent of the
//! ambient dimension when the columns are sparse constraint gradients.
//! On return every passive column is orthogonal to the residual and every
//! other column has a nonpositive inner product with it (exact KKT up to
//! rounding).

use crate::error::NnlsError;
use crate::geom::Vec3;
use crate::gradients::SparseGradient;

/// Symmetric matrix plus right-hand side of the normal equations.
#[derive(Debug, Clone)]
pub struct GramSystem {
    n: usize,
    q: Vec<f64>,
    c: Vec<f64>,
    /// The sparse columns `Q` was built from, kept so that `Qλ` can be
    /// formed as `Gᵀ(Gλ)` in time proportional to the nonzeros.
    sparse: Option<SparseColumns>,
}

#[derive(Debug, Clone)]
struct SparseColumns {
    columns: Vec<SparseGradient>,
    n_vertices: usize,
}

impl GramSystem {
    pub fn new(n: usize) -> Self {
        GramSystem { n, q: vec![0.0; n * n], c: vec![0.0; n], sparse: None }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.q(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.sparse = None;
        self.q[i * self.n + j] = v;
        self.q[j * self.n + i] = v;
    }

    pub fn set_rhs(&mut self, i: usize, v: f64) {
        self.c[i] = v;
    }

    /// Gram system of dense columns against a dense target.
    pub fn from_dense(columns: &[Vec<f64>], target: &[f64]) -> Result<Self, NnlsError> {
        let mut g = GramSystem::new(columns.len());
        for (i, a) in columns.iter().enumerate() {
            if a.len() != target.len() {
                return Err(NnlsError::Dimension { expected: target.len(), got: a.len() });
            }
            for (j, b) in columns.iter().enumerate().skip(i) {
                g.set(i, j, dot(a, b));
            }
            g.c[i] = dot(a, target);
        }
        Ok(g)
    }

    /// Gram system of sparse per-vertex columns against a per-vertex target.
    pub fn from_sparse(columns: &[SparseGradient], target: &[Vec3]) -> Self {
        let m = columns.len();
        let mut g = GramSystem::new(m);
        // columns touching each vertex
        let mut touching: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
        for (k, col) in columns.iter().enumerate() {
            for &(v, _) in &col.entries {
                let list = touching.entry(v).or_default();
                if list.last() != Some(&k) {
                    list.push(k);
                }
            }
        }
        for (k, col) in columns.iter().enumerate() {
            if !target.is_empty() {
                g.c[k] = col.dot_dense(target);
            }
            let mut partners: Vec<usize> =
                col.entries.iter().flat_map(|(v, _)| touching[v].iter().copied()).filter(|&l| l >= k).collect();
            partners.sort_unstable();
            partners.dedup();
            for l in partners {
                g.set(k, l, col.dot(&columns[l]));
            }
        }
        let n_vertices = touching.keys().max().map_or(0, |&v| v + 1);
        g.sparse = Some(SparseColumns { columns: columns.to_vec(), n_vertices });
        g
    }

    /// `c − Qλ`: the inner products of the columns with the residual.
    pub fn dual(&self, lambda: &[f64]) -> Vec<f64> {
        if let Some(sp) = &self.sparse {
            let mut combo = vec![Vec3::zeros(); sp.n_vertices];
            for (col, &l) in sp.columns.iter().zip(lambda) {
                if l != 0.0 {
                    col.add_to(&mut combo, l);
                }
            }
            return sp.columns.iter().zip(&self.c).map(|(col, &ci)| ci - col.dot_dense(&combo)).collect();
        }
        let support: Vec<usize> = (0..self.n).filter(|&j| lambda[j] != 0.0).collect();
        (0..self.n)
            .map(|i| {
                let row = &self.q[i * self.n..(i + 1) * self.n];
                self.c[i] - support.iter().map(|&j| row[j] * lambda[j]).sum::<f64>()
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of `Q` restricted to an ordered passive set, grown one
/// column at a time and rebuilt from scratch after removals.
struct PassiveFactor {
    set: Vec<usize>,
    /// Row-major lower triangle, row `i` has `i + 1` entries.
    rows: Vec<Vec<f64>>,
}

impl PassiveFactor {
    fn empty() -> Self {
        PassiveFactor { set: Vec::new(), rows: Vec::new() }
    }

    /// Appends column `j`; returns false (leaving the factor unchanged) when
    /// `j` is numerically dependent on the current set.
    fn push(&mut self, sys: &GramSystem, j: usize) -> bool {
        let p = self.set.len();
        let mut row = Vec::with_capacity(p + 1);
        for i in 0..p {
            let mut s = sys.q(self.set[i], j);
            let ri = &self.rows[i];
            for k in 0..i {
                s -= ri[k] * row[k];
            }
            row.push(s / ri[i]);
        }
        let diag = sys.q(j, j);
        let d = diag - row.iter().map(|x| x * x).sum::<f64>();
        if !(d > 1e-13 * diag) {
            return false;
        }
        row.push(d.sqrt());
        self.set.push(j);
        self.rows.push(row);
        true
    }

    /// Deletes the member at `pos`, restoring triangularity with Givens
    /// rotations on adjacent column pairs.
    fn remove(&mut self, pos: usize) {
        self.set.remove(pos);
        self.rows.remove(pos);
        let p = self.set.len();
        for j in pos..p {
            let (a, b) = (self.rows[j][j], self.rows[j][j + 1]);
            let r = a.hypot(b);
            let (c, s) = (a / r, b / r);
            for i in j..p {
                let (x, y) = (self.rows[i][j], self.rows[i][j + 1]);
                self.rows[i][j] = c * x + s * y;
                self.rows[i][j + 1] = c * y - s * x;
            }
            self.rows[j].pop();
        }
    }

    fn rebuild(sys: &GramSystem, set: &[usize]) -> Self {
        let mut f = PassiveFactor::empty();
        for &j in set {
            // dependent members are dropped; the caller zeroes them
            f.push(sys, j);
        }
        f
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let p = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..p {
            let ri = &self.rows[i];
            let mut s = y[i];
            for k in 0..i {
                s -= ri[k] * y[k];
            }
            y[i] = s / ri[i];
        }
        for i in (0..p).rev() {
            let ri = &self.rows[i];
            y[i] /= ri[i];
            let yi = y[i];
            for (yk, r) in y[..i].iter_mut().zip(ri) {
                *yk -= r * yi;
            }
        }
        y
    }

    /// Least-squares coefficients on the passive set, with one round of
    /// iterative refinement.
    fn coefficients(&self, sys: &GramSystem) -> Vec<f64> {
        let rhs: Vec<f64> = self.set.iter().map(|&i| sys.c[i]).collect();
        let mut z = self.solve(&rhs);
        {
            let r: Vec<f64> = if sys.sparse.is_some() {
                let mut full = vec![0.0; sys.n];
                for (&i, &zi) in self.set.iter().zip(&z) {
                    full[i] = zi;
                }
                let dual = sys.dual(&full);
                self.set.iter().map(|&i| dual[i]).collect()
            } else {
                (0..self.set.len())
                    .map(|a| {
                        let row = self.set[a];
                        rhs[a] - self.set.iter().zip(&z).map(|(&b, zb)| sys.q(row, b) * zb).sum::<f64>()
                    })
                    .collect()
            };
            let dz = self.solve(&r);
            for (zi, d) in z.iter_mut().zip(dz) {
                *zi += d;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub lambda: Vec<f64>,
    /// Inner product of each column with the residual `b − Σ λ_k g_k`.
    pub dual: Vec<f64>,
    pub iterations: usize,
}

impl NnlsSolution {
    pub fn positive_set(&self) -> Vec<bool> {
        self.lambda.iter().map(|&l| l > 0.0).collect()
    }
}

/// Solves the NNLS problem given in Gram form. `warm` optionally marks
/// columns to start in the passive set.
pub fn nnls_gram(sys: &GramSystem, warm: Option<&[bool]>) -> Result<NnlsSolution, NnlsError> {
    let m = sys.n;
    let mut lambda = vec![0.0; m];
    if m == 0 {
        return Ok(NnlsSolution { lambda, dual: vec![], iterations: 0 });
    }
    let scale = (0..m).map(|i| sys.q(i, i)).fold(0.0, f64::max).sqrt();
    let norms: Vec<f64> = (0..m).map(|i| sys.q(i, i).sqrt()).collect();
    // lower bound on ‖b‖ from its projections onto single columns
    let target = (0..m).filter(|&i| norms[i] > 0.0).map(|i| sys.c[i].abs() / norms[i]).fold(0.0, f64::max);
    let tol: Vec<f64> = norms.iter().map(|&g| g * (1e-12 * target + 1e-15 * g)).collect();
    let lambda_floor = 1e-15 * scale.max(1.0);

    let dual_of = |lambda: &[f64]| sys.dual(lambda);

    let warm_set: Vec<usize> = match warm {
        Some(w) if w.len() == m => (0..m).filter(|&i| w[i]).collect(),
        _ => Vec::new(),
    };
    let mut factor = PassiveFactor::rebuild(sys, &warm_set);
    let mut excluded = vec![false; m];
    let max_iter = 3 * m + 30;
    let mut iterations = 0;
    let mut pending = !factor.set.is_empty();
    let mut last_added = None;

    loop {
        if !pending {
            let dual = dual_of(&lambda);
            let in_set: Vec<bool> = {
                let mut v = vec![false; m];
                factor.set.iter().for_each(|&i| v[i] = true);
                v
            };
            let cand = (0..m)
                .filter(|&j| !in_set[j] && !excluded[j] && dual[j] > tol[j])
                .max_by(|&a, &b| dual[a].total_cmp(&dual[b]).then(b.cmp(&a)));
            let Some(j) = cand else { break };
            if !factor.push(sys, j) {
                excluded[j] = true;
                continue;
            }
            last_added = Some(j);
        }
        pending = false;
        iterations += 1;
        if iterations > max_iter {
            let dual = dual_of(&lambda);
            return Err(NnlsError::NoConvergence {
                iterations,
                residual: residual_norm2(sys, &lambda).max(0.0).sqrt(),
                max_dual: dual.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            });
        }
        // move toward the passive-set solution, dropping columns whose
        // coefficients would turn negative
        loop {
            if factor.set.is_empty() {
                break;
            }
            let z = factor.coefficients(sys);
            if z.iter().all(|&x| x > 0.0) {
                for (&i, &x) in factor.set.iter().zip(&z) {
                    lambda[i] = x;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&i, &x) in factor.set.iter().zip(&z) {
                if x <= 0.0 {
                    alpha = alpha.min(lambda[i] / (lambda[i] - x));
                }
            }
            let mut drop = Vec::new();
            for (pos, (&i, &x)) in factor.set.iter().zip(&z).enumerate() {
                let hits_zero = x <= 0.0 && lambda[i] / (lambda[i] - x) <= alpha;
                lambda[i] += alpha * (x - lambda[i]);
                if hits_zero || lambda[i] <= lambda_floor {
                    lambda[i] = 0.0;
                    drop.push(pos);
                }
            }
            for &pos in drop.iter().rev() {
                factor.remove(pos);
            }
        }
        // a column dropped right after entering would be picked again
        // forever; keep it out until some other column enters
        match last_added.take() {
            Some(j) if !factor.set.contains(&j) => excluded[j] = true,
            Some(_) => excluded.iter_mut().for_each(|e| *e = false),
            None => {}
        }
    }
    let dual = dual_of(&lambda);
    Ok(NnlsSolution { lambda, dual, iterations })
}

fn residual_norm2(sys: &GramSystem, lambda: &[f64]) -> f64 {
    // ‖Gλ − b‖² − ‖b‖² = λᵀQλ − 2cᵀλ; reported relative to the unknown ‖b‖²
    let m = sys.n;
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += lambda[i] * sys.q(i, j) * lambda[j];
        }
    }
    quad - 2.0 * dot(&sys.c, lambda)
}

/// Dense convenience wrapper. Returns the solution and the residual
/// `b − Σ λ_k g_k`.
pub fn nnls_dense(columns: &[Vec<f64>], target: &[f64]) -> Result<(NnlsSolution, Vec<f64>), NnlsError> {
    let sys = GramSystem::from_dense(columns, target)?;
    let sol = nnls_gram(&sys, None)?;
    let mut r = target.to_vec();
    for (col, &l) in columns.iter().zip(&sol.lambda) {
        for (ri, ci) in r.iter_mut().zip(col) {
            *ri -= l * ci;
        }
    }
    Ok((sol, r))
}
