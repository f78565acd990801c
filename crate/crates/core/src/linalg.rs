//! Dense symmetric linear algebra: Cholesky and symmetric-indefinite
//! factorizations, a cyclic Jacobi eigensolver, the symmetric-definite
//! generalized eigensolver, and inertia-based spectral counting.
//!
//! Everything is dense and single-threaded; target pencil orders are a few
//! thousand at most. All functions are pure in their inputs.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// A nonpositive pivot was met while factoring a matrix that must be
    /// positive definite. For assembled pencils this signals a non-conforming
    /// basis or an assembly bug.
    #[error("matrix not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    /// The symmetric-indefinite factorization found no acceptable pivot
    /// (non-finite data or a matrix singular beyond tolerance handling).
    #[error("symmetric factorization breakdown at step {step}")]
    Breakdown { step: usize },
    /// The Jacobi sweep budget was exhausted before the off-diagonal norm
    /// vanished.
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    /// The shift λ sits on the pencil spectrum within the zero tolerance.
    /// The strictly-below count is still reported so the caller may decide
    /// whether to nudge λ.
    #[error(
        "shift is an eigenvalue within tolerance ({n_zero} zero pivots; {n_minus} strictly below)"
    )]
    OnEigenvalue { n_minus: usize, n_zero: usize },
}

/// Symmetric matrix with packed lower-triangle storage.
///
/// `get`/`set` address the logical full matrix; symmetry holds by
/// construction since `(i, j)` and `(j, i)` share a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        SymMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from a callback over the lower triangle (`i >= j`).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        r * (r + 1) / 2 + c
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Largest entry magnitude (the max-norm over the logical full matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `self - shift * other`, entrywise on the packed triangles.
    pub fn shifted_by(&self, other: &SymMatrix, shift: f64) -> SymMatrix {
        assert_eq!(self.n, other.n, "order mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - shift * b)
            .collect();
        SymMatrix { n: self.n, data }
    }

    /// Quadratic form `uᵀ M u`.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n, "vector length mismatch");
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.get(i, i) * u[i] * u[i];
            for j in 0..i {
                acc += 2.0 * self.get(i, j) * u[i] * u[j];
            }
        }
        acc
    }

    /// `y = M u` on the logical full matrix.
    pub fn mul_vec(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n, "vector length mismatch");
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for j in 0..self.n {
                acc += self.get(i, j) * u[j];
            }
            y[i] = acc;
        }
        y
    }

    fn to_full(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                a.set(i, j, self.get(i, j));
            }
        }
        a
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Minimal dense rectangular matrix, row-major. Used for eigenvector columns
/// and intermediate products; not part of the numerical contracts.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }
}

/// Signature of a factored symmetric matrix: pivot counts below, at, and
/// above the zero tolerance. By Sylvester's law of inertia these equal the
/// eigenvalue counts of the original matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

/// Eigendecomposition with values in nondecreasing order. Vector columns are
/// orthonormal for [`sym_eig`] and B-orthonormal for [`gen_eig`].
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Lower-triangular Cholesky factor, packed like the source matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j);
        i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.n
    }

    /// Entry of `L` (zero above the diagonal).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_transposed(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..self.n {
                acc -= self.get(j, i) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
    }

    /// Reconstructs `L Lᵀ` (diagnostic).
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| {
            (0..=j.min(i))
                .map(|k| self.get(i, k) * self.get(j, k))
                .sum()
        })
    }
}

/// Cholesky factorization `M = L Lᵀ` of a symmetric positive definite matrix.
///
/// Fails with [`LinalgError::NotPositiveDefinite`] on the first nonpositive
/// pivot.
pub fn cholesky(m: &SymMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = m.order();
    let mut l = CholeskyFactor {
        n,
        data: vec![0.0; n * (n + 1) / 2],
    };
    for i in 0..n {
        for j in 0..=i {
            let mut acc = m.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite {
                        index: i,
                        pivot: acc,
                    });
                }
                let idx = l.idx(i, i);
                l.data[idx] = acc.sqrt();
            } else {
                let idx = l.idx(i, j);
                l.data[idx] = acc / l.get(j, j);
            }
        }
    }
    Ok(l)
}

// Bunch-Kaufman pivot threshold.
const BK_ALPHA: f64 = 0.6403882032022076; // (1 + sqrt(17)) / 8

/// Inertia of a symmetric matrix through an LDLᵀ factorization with
/// symmetric 1x1/2x2 pivoting (Bunch-Kaufman pivot selection).
///
/// Pivots of magnitude at most `zero_tol` count as zero. A column whose
/// trailing entries all sit below `zero_tol` contributes one zero pivot and
/// is skipped without elimination.
pub fn ldlt_inertia(m: &SymMatrix, zero_tol: f64) -> Result<Inertia, LinalgError> {
    assert!(zero_tol >= 0.0, "zero_tol must be nonnegative");
    if !m.is_finite() {
        return Err(LinalgError::Breakdown { step: 0 });
    }
    let n = m.order();
    let mut a = m.to_full();
    let mut inertia = Inertia {
        n_minus: 0,
        n_zero: 0,
        n_plus: 0,
    };

    let classify_1x1 = |inertia: &mut Inertia, d: f64| {
        if d.abs() <= zero_tol {
            inertia.n_zero += 1;
        } else if d > 0.0 {
            inertia.n_plus += 1;
        } else {
            inertia.n_minus += 1;
        }
    };

    let mut k = 0;
    while k < n {
        if k == n - 1 {
            classify_1x1(&mut inertia, a.get(k, k));
            break;
        }

        // Largest off-diagonal magnitude in column k of the trailing block.
        let mut lambda_r = 0.0;
        let mut r = k + 1;
        for i in (k + 1)..n {
            let v = a.get(i, k).abs();
            if v > lambda_r {
                lambda_r = v;
                r = i;
            }
        }
        let akk = a.get(k, k);

        if akk.abs().max(lambda_r) <= zero_tol {
            // Numerically null column: one zero eigenvalue, nothing to eliminate.
            inertia.n_zero += 1;
            k += 1;
            continue;
        }

        let use_2x2;
        if akk.abs() >= BK_ALPHA * lambda_r {
            use_2x2 = false;
        } else {
            // sigma: largest off-diagonal magnitude in column r.
            let mut sigma = 0.0f64;
            for i in k..n {
                if i != r {
                    sigma = sigma.max(a.get(i, r).abs());
                }
            }
            if akk.abs() * sigma >= BK_ALPHA * lambda_r * lambda_r {
                use_2x2 = false;
            } else if a.get(r, r).abs() >= BK_ALPHA * sigma {
                swap_sym(&mut a, k, r);
                use_2x2 = false;
            } else {
                swap_sym(&mut a, k + 1, r);
                use_2x2 = true;
            }
        }

        if !use_2x2 {
            let d = a.get(k, k);
            if d == 0.0 || !d.is_finite() {
                return Err(LinalgError::Breakdown { step: k });
            }
            for i in (k + 1)..n {
                let li = a.get(i, k) / d;
                for j in (k + 1)..=i {
                    let v = a.get(i, j) - li * a.get(j, k);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            classify_1x1(&mut inertia, d);
            k += 1;
        } else {
            let d11 = a.get(k, k);
            let d21 = a.get(k + 1, k);
            let d22 = a.get(k + 1, k + 1);
            let det = d11 * d22 - d21 * d21;
            if det == 0.0 || !det.is_finite() {
                return Err(LinalgError::Breakdown { step: k });
            }
            for i in (k + 2)..n {
                let b1 = a.get(i, k);
                let b2 = a.get(i, k + 1);
                // [l1 l2] = [b1 b2] * inv([[d11 d21],[d21 d22]])
                let l1 = (b1 * d22 - b2 * d21) / det;
                let l2 = (b2 * d11 - b1 * d21) / det;
                for j in (k + 2)..=i {
                    let v = a.get(i, j) - l1 * a.get(j, k) - l2 * a.get(j, k + 1);
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
            // Eigenvalues of the 2x2 pivot block.
            let half_tr = 0.5 * (d11 + d22);
            let disc = (0.5 * (d11 - d22)).hypot(d21);
            classify_1x1(&mut inertia, half_tr + disc);
            classify_1x1(&mut inertia, half_tr - disc);
            k += 2;
        }
    }

    debug_assert_eq!(inertia.total(), n);
    Ok(inertia)
}

fn swap_sym(a: &mut Matrix, p: usize, q: usize) {
    if p == q {
        return;
    }
    let n = a.nrows();
    for j in 0..n {
        let t = a.get(p, j);
        a.set(p, j, a.get(q, j));
        a.set(q, j, t);
    }
    for i in 0..n {
        let t = a.get(i, p);
        a.set(i, p, a.get(i, q));
        a.set(i, q, t);
    }
}

/// Sweep budget for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 50;

/// Symmetric eigendecomposition via cyclic Jacobi rotations.
///
/// Returns eigenvalues in nondecreasing order with orthonormal eigenvector
/// columns. Jacobi is chosen for its high relative accuracy on the modest
/// orders handled here.
pub fn sym_eig(m: &SymMatrix) -> Result<EigDecomp, LinalgError> {
    let n = m.order();
    if !m.is_finite() {
        return Err(LinalgError::Breakdown { step: 0 });
    }
    let mut a = m.to_full();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let mut d: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    let mut converged = false;
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        if off == 0.0 {
            converged = true;
            break;
        }
        let thresh = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a.set(p, q, 0.0);
                    continue;
                }
                if apq.abs() <= thresh {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                a.set(p, q, 0.0);

                let rot = |a: &mut Matrix, i: usize, j: usize, k: usize, l: usize| {
                    let g = a.get(i, j);
                    let h = a.get(k, l);
                    a.set(i, j, g - s * (h + g * tau));
                    a.set(k, l, h + s * (g - h * tau));
                };
                for j in 0..p {
                    rot(&mut a, j, p, j, q);
                }
                for j in (p + 1)..q {
                    rot(&mut a, p, j, j, q);
                }
                for j in (q + 1)..n {
                    rot(&mut a, p, j, q, j);
                }
                for j in 0..n {
                    rot(&mut v, j, p, j, q);
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    if !converged {
        // One last look: the threshold trick may have zeroed everything on
        // the final sweep.
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        if off != 0.0 {
            return Err(LinalgError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }
    }

    // Sort ascending, carrying columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("non-finite eigenvalue"));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_j, v.get(i, old_j));
        }
    }
    Ok(EigDecomp { values, vectors })
}

/// Generalized symmetric-definite eigendecomposition of `A x = λ B x`.
///
/// Reduces through `B = L Lᵀ` to a standard symmetric problem on
/// `L⁻¹ A L⁻ᵀ`; the returned vector columns are B-orthonormal. Requires `B`
/// positive definite and propagates [`LinalgError::NotPositiveDefinite`]
/// otherwise.
pub fn gen_eig(a: &SymMatrix, b: &SymMatrix) -> Result<EigDecomp, LinalgError> {
    let n = a.order();
    assert_eq!(n, b.order(), "pencil order mismatch");
    let l = cholesky(b)?;

    // C = L⁻¹ A L⁻ᵀ, formed column by column.
    // First Y = A L⁻ᵀ (solve rows), then C = L⁻¹ Y (solve columns).
    let mut y = a.to_full();
    // Y = A L⁻ᵀ  <=>  Yᵀ = L⁻¹ Aᵀ = L⁻¹ A: forward-solve each column of A,
    // writing the result into the corresponding row of Y.
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = a.get(i, j);
        }
        l.solve_lower(&mut col);
        for i in 0..n {
            y.set(j, i, col[i]);
        }
    }
    // C = L⁻¹ Y: forward-solve each column of Y.
    let mut c_full = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            col[i] = y.get(i, j);
        }
        l.solve_lower(&mut col);
        for i in 0..n {
            c_full.set(i, j, col[i]);
        }
    }
    // Symmetrize against roundoff before the Jacobi solve.
    let c = SymMatrix::from_fn(n, |i, j| 0.5 * (c_full.get(i, j) + c_full.get(j, i)));

    let std = sym_eig(&c)?;

    // Back-transform eigenvectors: x = L⁻ᵀ y.
    let mut vectors = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            col[i] = std.vectors.get(i, j);
        }
        l.solve_upper_transposed(&mut col);
        for i in 0..n {
            vectors.set(i, j, col[i]);
        }
    }
    Ok(EigDecomp {
        values: std.values,
        vectors,
    })
}

/// Scale-relative default zero tolerance for inertia-based counting.
pub fn default_zero_tol(shifted: &SymMatrix) -> f64 {
    1e-10 * shifted.max_abs()
}

/// Number of pencil eigenvalues of `A x = λ B x` strictly below `lambda`,
/// through the inertia of `A - λ B` (Sylvester's law).
///
/// When zero pivots appear, λ lies on the spectrum within `zero_tol`; the
/// strictly-below count is reported inside [`LinalgError::OnEigenvalue`]
/// rather than silently perturbing λ.
pub fn pencil_count_below(
    a: &SymMatrix,
    b: &SymMatrix,
    lambda: f64,
    zero_tol: f64,
) -> Result<usize, LinalgError> {
    let shifted = a.shifted_by(b, lambda);
    let inertia = ldlt_inertia(&shifted, zero_tol)?;
    if inertia.n_zero > 0 {
        return Err(LinalgError::OnEigenvalue {
            n_minus: inertia.n_minus,
            n_zero: inertia.n_zero,
        });
    }
    Ok(inertia.n_minus)
}
