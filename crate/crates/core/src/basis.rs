//! Conforming trial spaces of tensor-product B-splines on uniform knots.
//!
//! Trial functions vanish on the boundary together with their derivatives up
//! to order `2m - 1`, which places them in the zero-trace Sobolev space of
//! order `2m` and makes every discrete eigenvalue an upper bound (min-max).
//! On intervals and boxes this is the *maximal* such spline space: interior
//! splines plus, per side, the `degree - 2m` combinations of boundary-crossing
//! splines that vanish to exactly order `2m - 1`. On cell unions only splines
//! whose full support lies inside the union are kept; that inner approximation
//! is what keeps computed counts certified on rough geometry.
//!
//! Derivative inner products are exact: integrands are piecewise polynomial
//! on the knot grid and integrated per span with a Gauss-Legendre rule of
//! matching degree.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum BasisError {
    /// No spline fits the domain; the grid is too coarse for the degree.
    #[error("no interior spline exists (degree {degree}, grid too coarse)")]
    EmptyBasis { degree: usize },
    /// A requested derivative order exceeds the polynomial degree.
    #[error("derivative order {requested} exceeds spline degree {degree}")]
    DerivativeTooHigh { requested: usize, degree: usize },
    /// Degree too low for the trial space to sit inside the form domain.
    #[error("degree {degree} below conformity requirement 2m = {required}")]
    NonConforming { degree: usize, required: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}

/// A finite-volume open set: an interval, an axis-aligned box, or a union of
/// congruent grid cells (the sole mechanism for non-box geometry; curved
/// domains are approximated from inside by cells so that computed counts
/// stay certified lower bounds).
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    CellUnion { h: f64, cells: Vec<Vec<i64>> },
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Box { lo, .. } => lo.len(),
            DomainSpec::CellUnion { cells, .. } => cells.first().map_or(0, |c| c.len()),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
            DomainSpec::CellUnion { h, cells } => {
                cells.len() as f64 * h.powi(self.dimension() as i32)
            }
        }
    }

    pub fn validate(&self) -> Result<(), BasisError> {
        match self {
            DomainSpec::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(BasisError::InvalidDomain(format!(
                        "interval requires a < b, got a={a}, b={b}"
                    )));
                }
            }
            DomainSpec::Box { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(BasisError::InvalidDomain(
                        "box bounds must be nonempty and of equal dimension".into(),
                    ));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !(l.is_finite() && h.is_finite() && l < h) {
                        return Err(BasisError::InvalidDomain(format!(
                            "box requires lo < hi componentwise, got {l} vs {h}"
                        )));
                    }
                }
            }
            DomainSpec::CellUnion { h, cells } => {
                if !(h.is_finite() && *h > 0.0) {
                    return Err(BasisError::InvalidDomain(format!(
                        "cell width must be positive, got {h}"
                    )));
                }
                if cells.is_empty() {
                    return Err(BasisError::InvalidDomain("cell union is empty".into()));
                }
                let dim = cells[0].len();
                if dim == 0 {
                    return Err(BasisError::InvalidDomain("cells have dimension 0".into()));
                }
                let mut seen = HashSet::new();
                for c in cells {
                    if c.len() != dim {
                        return Err(BasisError::InvalidDomain(
                            "cells have mixed dimensions".into(),
                        ));
                    }
                    if !seen.insert(c.clone()) {
                        return Err(BasisError::InvalidDomain(format!("duplicate cell {c:?}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parameters of the trial space. `cells_per_axis` is the per-axis knot-cell
/// count for intervals and boxes; for cell unions it is the number of knot
/// subdivisions per domain cell per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub degree: usize,
    pub cells_per_axis: usize,
    pub order: usize,
}

impl BasisSpec {
    /// Default degree `2m + 1`: one above the conformity minimum.
    pub fn with_default_degree(order: usize, cells_per_axis: usize) -> Self {
        BasisSpec {
            degree: 2 * order + 1,
            cells_per_axis,
            order,
        }
    }
}

/// Uniform knot line along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    pub origin: f64,
    pub step: f64,
    pub n_cells: usize,
}

impl AxisGrid {
    #[inline]
    pub fn upper(&self) -> f64 {
        self.origin + self.step * self.n_cells as f64
    }
}

/// One-dimensional trial function along an axis: a weighted combination of
/// consecutive uniform B-splines. Interior functions have a single component;
/// boundary functions combine the splines crossing one end so that the
/// derivatives up to order `2m - 1` vanish there.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisMode {
    /// `(start, weight)` pairs over underlying cardinal splines; `start` is
    /// the first knot cell of that spline (negative for boundary-crossing
    /// components).
    pub comps: Vec<(i64, f64)>,
    /// Knot cells of the support intersected with the domain, inclusive.
    pub lo_cell: i64,
    pub hi_cell: i64,
}

/// Trial space of tensor-product splines conforming to order `2m`.
#[derive(Debug, Clone)]
pub struct Basis {
    dim: usize,
    degree: usize,
    axes: Vec<AxisGrid>,
    axis_modes: Vec<Vec<AxisMode>>,
    /// Per function: index into `axis_modes[ax]` for each axis.
    functions: Vec<Vec<usize>>,
    gauss_nodes: Vec<f64>,
    gauss_weights: Vec<f64>,
}

/// Builds the conforming trial space for `(-Δ)^m`, requiring
/// `degree >= 2 * order`.
pub fn build_basis(dom: &DomainSpec, spec: &BasisSpec) -> Result<Basis, BasisError> {
    if spec.degree < 2 * spec.order {
        return Err(BasisError::NonConforming {
            degree: spec.degree,
            required: 2 * spec.order,
        });
    }
    Basis::build(dom, spec.degree, spec.cells_per_axis, spec.order)
}

impl Basis {
    /// Geometric construction; [`build_basis`] is the spec-facing entry
    /// point that also enforces `degree >= 2 * order`. Boundary modes are
    /// added only when `degree > 2 * order` (at the minimum degree the
    /// interior splines already form the maximal conforming space).
    pub fn build(
        dom: &DomainSpec,
        degree: usize,
        cells_per_axis: usize,
        order: usize,
    ) -> Result<Self, BasisError> {
        dom.validate()?;
        if degree < 1 {
            return Err(BasisError::InvalidDomain(
                "degree must be at least 1".into(),
            ));
        }
        if cells_per_axis < 1 {
            return Err(BasisError::InvalidDomain(
                "cells_per_axis must be at least 1".into(),
            ));
        }
        if order < 1 {
            return Err(BasisError::InvalidDomain("order must be at least 1".into()));
        }
        let p = degree;
        let (axes, axis_modes, functions) = match dom {
            DomainSpec::Interval { a, b } => {
                if cells_per_axis <= p {
                    return Err(BasisError::EmptyBasis { degree: p });
                }
                let axis = AxisGrid {
                    origin: *a,
                    step: (b - a) / cells_per_axis as f64,
                    n_cells: cells_per_axis,
                };
                let modes = axis_mode_list(cells_per_axis, p, order);
                let functions = (0..modes.len()).map(|k| vec![k]).collect();
                (vec![axis], vec![modes], functions)
            }
            DomainSpec::Box { lo, hi } => {
                if cells_per_axis <= p {
                    return Err(BasisError::EmptyBasis { degree: p });
                }
                let axes: Vec<AxisGrid> = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| AxisGrid {
                        origin: *l,
                        step: (h - l) / cells_per_axis as f64,
                        n_cells: cells_per_axis,
                    })
                    .collect();
                let modes = axis_mode_list(cells_per_axis, p, order);
                let axis_modes: Vec<Vec<AxisMode>> = axes.iter().map(|_| modes.clone()).collect();
                let per_axis: Vec<Vec<usize>> =
                    axis_modes.iter().map(|m| (0..m.len()).collect()).collect();
                (axes, axis_modes, cartesian_product(&per_axis))
            }
            DomainSpec::CellUnion { h, cells } => {
                let dim = cells[0].len();
                let r = cells_per_axis as i64;
                let mins: Vec<i64> = (0..dim)
                    .map(|ax| cells.iter().map(|c| c[ax]).min().unwrap())
                    .collect();
                let maxs: Vec<i64> = (0..dim)
                    .map(|ax| cells.iter().map(|c| c[ax]).max().unwrap())
                    .collect();
                let axes: Vec<AxisGrid> = (0..dim)
                    .map(|ax| AxisGrid {
                        origin: *h * mins[ax] as f64,
                        step: *h / cells_per_axis as f64,
                        n_cells: ((maxs[ax] - mins[ax] + 1) * r) as usize,
                    })
                    .collect();
                let members: HashSet<&[i64]> = cells.iter().map(|c| c.as_slice()).collect();
                // Interior splines only; the scan below keeps a tensor spline
                // exactly when all its support cells map into the union.
                let axis_modes: Vec<Vec<AxisMode>> = axes
                    .iter()
                    .map(|a| {
                        (0..a.n_cells.saturating_sub(p))
                            .map(|s| interior_mode(s as i64, p))
                            .collect()
                    })
                    .collect();
                let per_axis: Vec<Vec<usize>> =
                    axis_modes.iter().map(|m| (0..m.len()).collect()).collect();
                let candidates = cartesian_product(&per_axis);
                let mut functions = Vec::new();
                let mut domain_cell = vec![0i64; dim];
                'cand: for start in candidates {
                    let mut offsets = vec![0usize; dim];
                    loop {
                        for ax in 0..dim {
                            let fine = start[ax] as i64 + offsets[ax] as i64;
                            domain_cell[ax] = mins[ax] + fine / r;
                        }
                        if !members.contains(domain_cell.as_slice()) {
                            continue 'cand;
                        }
                        let mut ax = 0;
                        loop {
                            offsets[ax] += 1;
                            if offsets[ax] <= p {
                                break;
                            }
                            offsets[ax] = 0;
                            ax += 1;
                            if ax == dim {
                                functions.push(start);
                                continue 'cand;
                            }
                        }
                    }
                }
                (axes, axis_modes, functions)
            }
        };
        if functions.is_empty() {
            return Err(BasisError::EmptyBasis { degree: p });
        }
        let (gauss_nodes, gauss_weights) = gauss_legendre(p + 1);
        Ok(Basis {
            dim: axes.len(),
            degree: p,
            axes,
            axis_modes,
            functions,
            gauss_nodes,
            gauss_weights,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn axis(&self, ax: usize) -> &AxisGrid {
        &self.axes[ax]
    }

    /// Axis-mode indices of function `i`.
    pub fn function_modes(&self, i: usize) -> &[usize] {
        &self.functions[i]
    }

    pub fn axis_mode(&self, ax: usize, k: usize) -> &AxisMode {
        &self.axis_modes[ax][k]
    }

    pub fn axis_mode_count(&self, ax: usize) -> usize {
        self.axis_modes[ax].len()
    }

    /// Pointwise value of `∂^d b_i(x)`; zero outside the domain closure and
    /// outside the support.
    pub fn eval(&self, i: usize, x: &[f64], d: &[usize]) -> Result<f64, BasisError> {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        assert_eq!(d.len(), self.dim, "derivative dimension mismatch");
        let mut prod = 1.0;
        for ax in 0..self.dim {
            if d[ax] > self.degree {
                return Err(BasisError::DerivativeTooHigh {
                    requested: d[ax],
                    degree: self.degree,
                });
            }
            let grid = &self.axes[ax];
            if x[ax] < grid.origin || x[ax] > grid.upper() {
                return Ok(0.0);
            }
            let u = (x[ax] - grid.origin) / grid.step;
            let mode = &self.axis_modes[ax][self.functions[i][ax]];
            let v = mode_deriv(mode, self.degree, d[ax], u) / grid.step.powi(d[ax] as i32);
            if v == 0.0 {
                return Ok(0.0);
            }
            prod *= v;
        }
        Ok(prod)
    }

    /// Exact inner product `∫ ∂^{d1} b_i · ∂^{d2} b_j` over the domain.
    ///
    /// Factorizes across axes; each axis factor is integrated per knot span
    /// with the `degree + 1`-point Gauss rule, exact for the product of two
    /// spline derivatives.
    pub fn inner(&self, i: usize, j: usize, d1: &[usize], d2: &[usize]) -> Result<f64, BasisError> {
        assert_eq!(d1.len(), self.dim, "derivative dimension mismatch");
        assert_eq!(d2.len(), self.dim, "derivative dimension mismatch");
        for ax in 0..self.dim {
            let worst = d1[ax].max(d2[ax]);
            if worst > self.degree {
                return Err(BasisError::DerivativeTooHigh {
                    requested: worst,
                    degree: self.degree,
                });
            }
        }
        let mut prod = 1.0;
        for ax in 0..self.dim {
            let ma = &self.axis_modes[ax][self.functions[i][ax]];
            let mb = &self.axis_modes[ax][self.functions[j][ax]];
            let f = self.mode_pair_inner(ax, ma, mb, d1[ax], d2[ax]);
            if f == 0.0 {
                return Ok(0.0);
            }
            prod *= f;
        }
        Ok(prod)
    }

    /// True when the supports of `i` and `j` share no knot cell.
    pub fn supports_disjoint(&self, i: usize, j: usize) -> bool {
        (0..self.dim).any(|ax| {
            let ma = &self.axis_modes[ax][self.functions[i][ax]];
            let mb = &self.axis_modes[ax][self.functions[j][ax]];
            ma.hi_cell < mb.lo_cell || mb.hi_cell < ma.lo_cell
        })
    }

    fn mode_pair_inner(
        &self,
        ax: usize,
        ma: &AxisMode,
        mb: &AxisMode,
        d1: usize,
        d2: usize,
    ) -> f64 {
        let lo = ma.lo_cell.max(mb.lo_cell);
        let hi = ma.hi_cell.min(mb.hi_cell);
        if lo > hi {
            return 0.0;
        }
        let p = self.degree;
        let grid = &self.axes[ax];
        let mut acc = 0.0;
        for cell in lo..=hi {
            let mut cell_acc = 0.0;
            for (gx, gw) in self.gauss_nodes.iter().zip(&self.gauss_weights) {
                let u = cell as f64 + 0.5 * (gx + 1.0);
                cell_acc += gw * mode_deriv(ma, p, d1, u) * mode_deriv(mb, p, d2, u);
            }
            acc += cell_acc;
        }
        acc * 0.5 * grid.step * grid.step.powi(-((d1 + d2) as i32))
    }

    /// Diagnostic partition-of-unity sum at `x`: sums raw splines on the
    /// extended knot grid, including ones whose support crosses the
    /// boundary, so it equals 1 wherever the grid covers the neighborhood
    /// of `x`.
    pub fn partition_sum_diagnostic(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let p = self.degree as i64;
        let mut prod = 1.0;
        for ax in 0..self.dim {
            let grid = &self.axes[ax];
            let u = (x[ax] - grid.origin) / grid.step;
            let cell = u.floor() as i64;
            let mut axis_sum = 0.0;
            for start in (cell - p)..=cell {
                axis_sum += bspline_deriv(self.degree, 0, u - start as f64);
            }
            prod *= axis_sum;
        }
        prod
    }
}

fn interior_mode(start: i64, degree: usize) -> AxisMode {
    AxisMode {
        comps: vec![(start, 1.0)],
        lo_cell: start,
        hi_cell: start + degree as i64,
    }
}

/// Per-axis mode list on `c` cells: boundary modes of the left end, interior
/// splines, mirrored boundary modes of the right end.
fn axis_mode_list(c: usize, p: usize, order: usize) -> Vec<AxisMode> {
    let mut modes = Vec::new();
    let boundary = boundary_mode_coefficients(p, 2 * order);
    for coeffs in &boundary {
        // Left-end mode over crossing splines with starts -p..=-1.
        let comps: Vec<(i64, f64)> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &w)| (-(i as i64 + 1), w))
            .collect();
        modes.push(AxisMode {
            comps,
            lo_cell: 0,
            hi_cell: p as i64 - 1,
        });
    }
    for s in 0..=(c - p - 1) {
        modes.push(interior_mode(s as i64, p));
    }
    for coeffs in &boundary {
        // Mirror image: the cardinal spline is symmetric, so reflecting
        // start s to c - p - 1 - s reproduces the left mode at the right end.
        let comps: Vec<(i64, f64)> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &w)| (c as i64 - p as i64 + i as i64, w))
            .collect();
        modes.push(AxisMode {
            comps,
            lo_cell: (c - p) as i64,
            hi_cell: c as i64 - 1,
        });
    }
    modes
}

/// Coefficient vectors (over the `p` boundary-crossing splines, nearest
/// first) spanning the combinations whose derivatives of order
/// `0..bc_order-1` vanish at the boundary knot: the null space of the
/// spline collocation matrix at that knot. Empty when `p <= bc_order`.
fn boundary_mode_coefficients(p: usize, bc_order: usize) -> Vec<Vec<f64>> {
    if p <= bc_order {
        return Vec::new();
    }
    // rows: derivative orders, cols: crossing splines B_{-(i+1)};
    // the boundary knot sits at parameter i + 1 of the cardinal spline.
    let rows = bc_order;
    let cols = p;
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|i| bspline_deriv(p, r, (i + 1) as f64))
                .collect()
        })
        .collect();

    // Row-reduce with partial pivoting to find pivot columns.
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let piv =
            (row..rows).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap());
        let piv = piv.unwrap();
        if m[piv][col].abs() < 1e-12 {
            continue;
        }
        m.swap(row, piv);
        let scale = m[row][col];
        for v in m[row].iter_mut() {
            *v /= scale;
        }
        for r in 0..rows {
            if r != row {
                let factor = m[r][col];
                for cidx in 0..cols {
                    m[r][cidx] -= factor * m[row][cidx];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    assert_eq!(
        row, rows,
        "boundary collocation matrix is rank deficient (degree {p}, order {bc_order})"
    );

    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis_vecs: Vec<Vec<f64>> = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![0.0; cols];
        v[fc] = 1.0;
        for (r, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[r][fc];
        }
        basis_vecs.push(v);
    }
    // Orthonormalize the coefficient vectors.
    for i in 0..basis_vecs.len() {
        for j in 0..i {
            let dot: f64 = basis_vecs[i]
                .iter()
                .zip(&basis_vecs[j])
                .map(|(a, b)| a * b)
                .sum();
            for k in 0..cols {
                basis_vecs[i][k] -= dot * basis_vecs[j][k];
            }
        }
        let norm: f64 = basis_vecs[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in basis_vecs[i].iter_mut() {
            *v /= norm;
        }
    }
    basis_vecs
}

fn mode_deriv(mode: &AxisMode, p: usize, d: usize, u: f64) -> f64 {
    mode.comps
        .iter()
        .map(|&(s, w)| w * bspline_deriv(p, d, u - s as f64))
        .sum()
}

fn cartesian_product(per_axis: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for axis_vals in per_axis {
        let mut next = Vec::with_capacity(out.len() * axis_vals.len());
        for prefix in &out {
            for &v in axis_vals {
                let mut item = prefix.clone();
                item.push(v);
                next.push(item);
            }
        }
        out = next;
    }
    out
}

/// Value of the cardinal B-spline of degree `q` (knots `0..=q+1`) at `u`,
/// by the Cox-de Boor recursion.
fn cardinal_bspline(q: usize, u: f64) -> f64 {
    if u < 0.0 || u >= (q + 1) as f64 {
        return 0.0;
    }
    // Degree-0 layer: indicators of [r, r+1).
    let mut vals = vec![0.0; q + 1];
    let cell = u.floor() as usize;
    if cell <= q {
        vals[cell] = 1.0;
    }
    for k in 1..=q {
        for r in 0..=(q - k) {
            let left = (u - r as f64) / k as f64 * vals[r];
            let right = ((r + 1 + k) as f64 - u) / k as f64 * vals[r + 1];
            vals[r] = left + right;
        }
    }
    vals[0]
}

/// `d`-th derivative of the cardinal degree-`q` B-spline at `u` (unit knots):
/// the binomial difference of degree `q - d` splines.
fn bspline_deriv(q: usize, d: usize, u: f64) -> f64 {
    debug_assert!(d <= q);
    if d == 0 {
        return cardinal_bspline(q, u);
    }
    let mut acc = 0.0;
    let mut binom = 1.0f64;
    for r in 0..=d {
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * cardinal_bspline(q - d, u - r as f64);
        binom = binom * (d - r) as f64 / (r + 1) as f64;
    }
    acc
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n_points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n_points >= 1);
    let n = n_points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval() -> DomainSpec {
        DomainSpec::Interval { a: 0.0, b: 1.0 }
    }

    #[test]
    fn interval_mode_count() {
        // c + p - 4m: interior splines plus p - 2m boundary modes per side.
        let basis = Basis::build(&unit_interval(), 3, 8, 1).unwrap();
        assert_eq!(basis.len(), 7);
        let basis = Basis::build(&unit_interval(), 5, 8, 1).unwrap();
        assert_eq!(basis.len(), 9);
        let basis = Basis::build(&unit_interval(), 5, 8, 2).unwrap();
        assert_eq!(basis.len(), 5);
    }

    #[test]
    fn minimal_degree_coincides_with_interior_count() {
        // At p = 2m the boundary modes vanish and the count is c - p.
        let basis = Basis::build(&unit_interval(), 2, 8, 1).unwrap();
        assert_eq!(basis.len(), 6);
        assert!(basis.axis_modes[0]
            .iter()
            .all(|m| m.comps.len() == 1 && m.comps[0].1 == 1.0));
        let basis = Basis::build(&unit_interval(), 4, 12, 2).unwrap();
        assert_eq!(basis.len(), 8);
    }

    #[test]
    fn box_mode_count_is_per_axis_product() {
        let dom = DomainSpec::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        let basis = Basis::build(&dom, 3, 8, 1).unwrap();
        assert_eq!(basis.len(), 49); // (8 + 3 - 4)²
        let basis = Basis::build(&dom, 2, 8, 1).unwrap();
        assert_eq!(basis.len(), 36); // (8 - 2)²
    }

    #[test]
    fn l_shape_support_scan() {
        // 3x3 grid of cells minus the (2,2) corner, refined twice per cell.
        // Degree 2 splines span 3 fine cells per axis; per-axis starts 0..=3.
        // A start (i, j) is blocked exactly when both supports reach the
        // missing fine cells {4,5}, i.e. i >= 2 and j >= 2: 16 - 4 = 12.
        let cells: Vec<Vec<i64>> = (0..3)
            .flat_map(|i| (0..3).map(move |j| vec![i, j]))
            .filter(|c| c != &vec![2, 2])
            .collect();
        let dom = DomainSpec::CellUnion {
            h: 1.0 / 3.0,
            cells,
        };
        let basis = build_basis(
            &dom,
            &BasisSpec {
                degree: 2,
                cells_per_axis: 2,
                order: 1,
            },
        )
        .unwrap();
        assert_eq!(basis.len(), 12);
        assert!((dom.volume() - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn too_coarse_grid_is_empty() {
        match Basis::build(&unit_interval(), 3, 3, 1) {
            Err(BasisError::EmptyBasis { .. }) => {}
            other => panic!("expected EmptyBasis, got {other:?}"),
        }
    }

    #[test]
    fn conformity_requires_degree_at_least_2m() {
        let err = build_basis(
            &unit_interval(),
            &BasisSpec {
                degree: 2,
                cells_per_axis: 16,
                order: 2,
            },
        )
        .unwrap_err();
        assert!(matches!(err, BasisError::NonConforming { .. }));
    }

    #[test]
    fn boundary_modes_vanish_to_exactly_the_conformity_order() {
        // Every basis function must vanish at the boundary with derivatives
        // up to 2m - 1; the boundary modes must have a live 2m-th derivative
        // (they exist precisely to avoid over-constraining the space).
        for (p, m) in [(3usize, 1usize), (5, 1), (5, 2), (4, 1)] {
            let basis = Basis::build(&unit_interval(), p, 16, m).unwrap();
            let mut max_low = 0.0f64;
            let mut max_at_2m = 0.0f64;
            for i in 0..basis.len() {
                for r in 0..2 * m {
                    let va = basis.eval(i, &[0.0], &[r]).unwrap();
                    let vb = basis.eval(i, &[1.0], &[r]).unwrap();
                    max_low = max_low.max(va.abs()).max(vb.abs());
                }
                let v = basis.eval(i, &[0.0], &[2 * m]).unwrap();
                max_at_2m = max_at_2m.max(v.abs());
            }
            // Scale of the 2m-th derivative is step^{-2m}.
            let scale = (1.0f64 / 16.0).powi(-(2 * m as i32));
            assert!(max_low <= 1e-11 * scale, "p={p}, m={m}: trace {max_low:e}");
            if p > 2 * m {
                assert!(
                    max_at_2m > 1e-3 * scale,
                    "p={p}, m={m}: space over-constrained"
                );
            }
        }
    }

    #[test]
    fn eval_outside_domain_and_support_is_exactly_zero() {
        let basis = Basis::build(&unit_interval(), 3, 8, 1).unwrap();
        for i in 0..basis.len() {
            assert_eq!(basis.eval(i, &[1.2], &[0]).unwrap(), 0.0);
            assert_eq!(basis.eval(i, &[-0.1], &[2]).unwrap(), 0.0);
        }
        // An interior function is zero beyond its own support as well.
        let modes = basis.function_modes(1); // first interior spline
        let mode = basis.axis_mode(0, modes[0]);
        assert_eq!(mode.comps.len(), 1);
        assert_eq!(basis.eval(1, &[0.9], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn hat_function_peaks_at_center_knot() {
        // Degree 1 with m = 1 has no boundary modes; plain interior hats.
        let basis = Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        assert_eq!(basis.len(), 7);
        let v = basis.eval(0, &[1.0 / 8.0], &[0]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    /// Repeated numeric convolution of unit-interval indicators: the
    /// independent oracle for pointwise B-spline values.
    fn convolution_bspline(q: usize, u: f64) -> f64 {
        let steps_per_unit = 8192usize;
        let len = (q + 1) * steps_per_unit + 1;
        let dt = 1.0 / steps_per_unit as f64;
        let mut f = vec![0.0; len];
        for (idx, v) in f.iter_mut().enumerate() {
            let t = idx as f64 * dt;
            if t < 1.0 {
                *v = 1.0;
            }
        }
        for _ in 0..q {
            // g(x) = ∫_0^1 f(x - t) dt via trapezoid in t.
            let mut g = vec![0.0; len];
            for (idx, gv) in g.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..=steps_per_unit {
                    let w = if s == 0 || s == steps_per_unit {
                        0.5
                    } else {
                        1.0
                    };
                    if idx >= s {
                        acc += w * f[idx - s];
                    }
                }
                *gv = acc * dt;
            }
            f = g;
        }
        let pos = u / dt;
        let i0 = pos.floor() as usize;
        if pos < 0.0 || i0 + 1 >= len {
            return 0.0;
        }
        let frac = pos - i0 as f64;
        f[i0] * (1.0 - frac) + f[i0 + 1] * frac
    }

    #[test]
    fn cubic_value_matches_convolution_oracle() {
        for &u in &[2.0, 1.5, 0.7, 3.2] {
            let got = cardinal_bspline(3, u);
            let want = convolution_bspline(3, u);
            assert!((got - want).abs() < 2e-4, "u={u}: got {got}, oracle {want}");
        }
        // Center value of the cardinal cubic.
        assert!((cardinal_bspline(3, 2.0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for d in 1..=3usize {
            for &u in &[0.4, 1.3, 2.1, 3.7] {
                let exact = bspline_deriv(3, d, u);
                let lo = bspline_deriv(3, d - 1, u - 0.5 * h);
                let hi = bspline_deriv(3, d - 1, u + 0.5 * h);
                let approx = (hi - lo) / h;
                assert!(
                    (exact - approx).abs() < 1e-5 * (1.0 + exact.abs()),
                    "d={d}, u={u}: {exact} vs {approx}"
                );
            }
        }
    }

    #[test]
    fn partition_of_unity_in_the_deep_interior() {
        let basis = Basis::build(&unit_interval(), 3, 16, 1).unwrap();
        for &x in &[0.3, 0.41, 0.55, 0.68] {
            let s = basis.partition_sum_diagnostic(&[x]);
            assert!((s - 1.0).abs() < 1e-12, "x={x}: sum {s}");
        }
        let dom2 = DomainSpec::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 2.0],
        };
        let basis2 = Basis::build(&dom2, 3, 12, 1).unwrap();
        let s = basis2.partition_sum_diagnostic(&[0.5, 1.1]);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hat_mass_entries() {
        // Degree-1 hats, 8 cells: diagonal 2h/3, neighbors h/6.
        let basis = Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        let h = 1.0 / 8.0;
        let diag = basis.inner(0, 0, &[0], &[0]).unwrap();
        let off = basis.inner(0, 1, &[0], &[0]).unwrap();
        assert!((diag - 2.0 * h / 3.0).abs() < 1e-14);
        assert!((off - h / 6.0).abs() < 1e-14);
    }

    #[test]
    fn disjoint_supports_integrate_to_zero() {
        let basis = Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        assert!(basis.supports_disjoint(0, 4));
        assert_eq!(basis.inner(0, 4, &[0], &[0]).unwrap(), 0.0);
    }

    /// Composite trapezoid on a knot-aligned fine grid; brute-force oracle
    /// for the exact Gauss integrals.
    fn trapezoid_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = 0.5 * (f(a) + f(b));
        for k in 1..n {
            acc += f(a + k as f64 * h);
        }
        acc * h
    }

    #[test]
    fn cubic_bending_energy_matches_dense_trapezoid() {
        let basis = Basis::build(&unit_interval(), 3, 8, 1).unwrap();
        // Pick an interior function and integrate its squared second
        // derivative by brute force over its support.
        let i = 2;
        let mode = basis.axis_mode(0, basis.function_modes(i)[0]);
        assert_eq!(mode.comps.len(), 1, "expected an interior spline");
        let step = 1.0 / 8.0;
        let (lo, hi) = (mode.lo_cell as f64 * step, (mode.hi_cell + 1) as f64 * step);
        let f = |x: f64| {
            let v = basis.eval(i, &[x], &[2]).unwrap();
            v * v
        };
        let exact = basis.inner(i, i, &[2], &[2]).unwrap();
        let oracle = trapezoid_oracle(f, lo, hi, 1 << 21);
        assert!(
            ((exact - oracle) / oracle).abs() < 1e-9,
            "exact {exact}, oracle {oracle}"
        );
    }

    #[test]
    fn boundary_mode_energy_matches_dense_trapezoid() {
        let basis = Basis::build(&unit_interval(), 3, 8, 1).unwrap();
        // Function 0 is the left boundary mode.
        let mode = basis.axis_mode(0, basis.function_modes(0)[0]);
        assert!(mode.comps.len() > 1, "expected a boundary combination");
        let f = |x: f64| {
            let v = basis.eval(0, &[x], &[2]).unwrap();
            v * v
        };
        let exact = basis.inner(0, 0, &[2], &[2]).unwrap();
        let oracle = trapezoid_oracle(f, 0.0, 3.0 / 8.0, 1 << 21);
        assert!(
            ((exact - oracle) / oracle).abs() < 1e-9,
            "exact {exact}, oracle {oracle}"
        );
    }

    #[test]
    fn inner_symmetry_and_integration_by_parts() {
        let basis = Basis::build(&unit_interval(), 3, 12, 1).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let a = basis.inner(i, j, &[1], &[0]).unwrap();
                let b = basis.inner(j, i, &[0], &[1]).unwrap();
                assert!((a - b).abs() < 1e-13, "symmetry: {a} vs {b}");
                let c = basis.inner(i, j, &[0], &[1]).unwrap();
                assert!((a + c).abs() < 1e-12, "integration by parts: {a} vs {c}");
            }
        }
    }

    #[test]
    fn derivative_above_degree_is_rejected() {
        let basis = Basis::build(&unit_interval(), 2, 8, 1).unwrap();
        assert!(matches!(
            basis.eval(0, &[0.2], &[3]),
            Err(BasisError::DerivativeTooHigh {
                requested: 3,
                degree: 2
            })
        ));
        assert!(matches!(
            basis.inner(0, 0, &[3], &[0]),
            Err(BasisError::DerivativeTooHigh { .. })
        ));
    }

    #[test]
    fn gauss_rule_integrates_high_degree_monomials() {
        let (nodes, weights) = gauss_legendre(4);
        // Exact through degree 7 on [-1, 1].
        for deg in 0..=7usize {
            let got: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            let want = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!((got - want).abs() < 1e-14, "degree {deg}");
        }
    }
}
