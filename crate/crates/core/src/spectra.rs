//! Discrete spectra of the buckling pencil and the Friedrichs problem,
//! inertia-based counting curves, and independent one-dimensional oracles.
//!
//! On a conforming trial space every discrete pencil eigenvalue is an upper
//! bound for the corresponding continuous one (min-max on the Rayleigh
//! quotient), so every discrete count is a certified lower bound for the
//! true counting function. That one-sided structure is what the counting
//! bound certification rests on.

use thiserror::Error;

use crate::basis::BasisError;
use crate::bounds::{krein_bound, weyl_leading, BoundParams};
use crate::forms::AssembledForms;
use crate::linalg::{default_zero_tol, gen_eig, ldlt_inertia, LinalgError, Matrix};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    /// The root scan missed a sign change even after halving the bracket
    /// width once.
    #[error("root bracketing failed: {0}")]
    BracketingFailure(String),
    #[error("invalid lambda grid: {0}")]
    InvalidLambdaGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    KreinBuckling,
    Friedrichs,
}

/// Eigenvalues of a symmetric-definite pencil solve in ascending order,
/// with coefficient columns (B-orthonormal for the buckling pencil,
/// mass-orthonormal for the Friedrichs problem).
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub kind: SpectrumKind,
    pub eigenvalues: Vec<f64>,
    pub vectors: Matrix,
    pub trial_dim: usize,
}

/// Positive Krein spectrum through the discrete buckling pencil
/// `A x = λ B x`. All returned eigenvalues are strictly positive since both
/// matrices are positive definite on a conforming basis.
pub fn krein_positive_spectrum(forms: &AssembledForms) -> Result<SpectrumResult, SpectraError> {
    let eig = gen_eig(&forms.a_mat, &forms.b_mat)?;
    Ok(SpectrumResult {
        kind: SpectrumKind::KreinBuckling,
        trial_dim: forms.trial_dim(),
        eigenvalues: eig.values,
        vectors: eig.vectors,
    })
}

/// Friedrichs spectrum through `B x = μ M x` on the same trial space. The
/// trial space sits inside the order-`m` form domain, so discrete values are
/// upper bounds for the Friedrichs eigenvalues.
pub fn friedrichs_spectrum(forms: &AssembledForms) -> Result<SpectrumResult, SpectraError> {
    let eig = gen_eig(&forms.b_mat, &forms.mass_mat)?;
    Ok(SpectrumResult {
        kind: SpectrumKind::Friedrichs,
        trial_dim: forms.trial_dim(),
        eigenvalues: eig.values,
        vectors: eig.vectors,
    })
}

/// Counting data on a λ grid: inertia counts of the shifted pencil, the
/// closed-form bound, the Weyl leading term, and optionally the Friedrichs
/// counts. A grid point sitting on the discrete spectrum (within the
/// scale-relative zero tolerance) is flagged; its strictly-below count is
/// still reported.
#[derive(Debug, Clone)]
pub struct CountingCurve {
    pub lambdas: Vec<f64>,
    pub counts: Vec<usize>,
    pub on_eigenvalue: Vec<bool>,
    pub bound_values: Vec<f64>,
    pub weyl_values: Vec<f64>,
    pub friedrichs_counts: Option<Vec<usize>>,
}

impl CountingCurve {
    /// Grid indices where the certified bound is violated (must be empty;
    /// a violation is a build bug, not a tolerance issue).
    pub fn bound_violations(&self) -> Vec<usize> {
        (0..self.lambdas.len())
            .filter(|&i| self.counts[i] as f64 > self.bound_values[i])
            .collect()
    }
}

pub fn counting_curve(
    forms: &AssembledForms,
    lambdas: &[f64],
    params: &BoundParams,
    with_friedrichs: bool,
) -> Result<CountingCurve, SpectraError> {
    if lambdas.is_empty() {
        return Err(SpectraError::InvalidLambdaGrid("empty grid".into()));
    }
    for w in lambdas.windows(2) {
        if w[0] >= w[1] {
            return Err(SpectraError::InvalidLambdaGrid(format!(
                "grid not strictly ascending at {} >= {}",
                w[0], w[1]
            )));
        }
    }
    if lambdas[0] <= 0.0 {
        return Err(SpectraError::InvalidLambdaGrid(format!(
            "grid must be positive, starts at {}",
            lambdas[0]
        )));
    }

    let mut counts = Vec::with_capacity(lambdas.len());
    let mut flags = Vec::with_capacity(lambdas.len());
    let mut bound_values = Vec::with_capacity(lambdas.len());
    let mut weyl_values = Vec::with_capacity(lambdas.len());
    let mut fr_counts = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let shifted = forms.a_mat.shifted_by(&forms.b_mat, lambda);
        let inertia = ldlt_inertia(&shifted, default_zero_tol(&shifted))?;
        counts.push(inertia.n_minus);
        flags.push(inertia.n_zero > 0);
        bound_values.push(krein_bound(params, lambda));
        weyl_values.push(weyl_leading(params, lambda));
        if with_friedrichs {
            let shifted = forms.b_mat.shifted_by(&forms.mass_mat, lambda);
            let inertia = ldlt_inertia(&shifted, default_zero_tol(&shifted))?;
            fr_counts.push(inertia.n_minus);
        }
    }
    Ok(CountingCurve {
        lambdas: lambdas.to_vec(),
        counts,
        on_eigenvalue: flags,
        bound_values,
        weyl_values,
        friedrichs_counts: with_friedrichs.then_some(fr_counts),
    })
}

/// Geometric λ grid from `min` up to (at most) `max`.
pub fn geometric_grid(min: f64, max: f64, ratio: f64) -> Vec<f64> {
    assert!(
        min > 0.0 && max >= min && ratio > 1.0,
        "bad grid parameters"
    );
    let mut grid = Vec::new();
    let mut v = min;
    while v <= max * (1.0 + 1e-12) {
        grid.push(v);
        v *= ratio;
    }
    grid
}

/// Default counting grid: geometric with the given ratio from half the first
/// discrete eigenvalue up to the `N/2`-th one. Upper discrete eigenvalues
/// are discretization artifacts, so counting is only asked for where the
/// pencil is resolved.
pub fn default_lambda_grid(eigenvalues: &[f64], ratio: f64) -> Vec<f64> {
    assert!(
        !eigenvalues.is_empty(),
        "no eigenvalues to build a grid from"
    );
    let min = 0.5 * eigenvalues[0];
    let top_index = (eigenvalues.len() / 2).max(1) - 1;
    let max = eigenvalues[top_index].max(min);
    geometric_grid(min, max, ratio)
}

// -------------------------------------------------------------------------
// One-dimensional oracles
// -------------------------------------------------------------------------

/// Characteristic function of the 1D, order-1 buckling problem on an
/// interval of length `len`, in the variable `theta = k * len`:
/// `f(θ) = 2(1 - cos θ) - θ sin θ`. Its positive roots split into the
/// families `θ = 2πj` and `tan(θ/2) = θ/2`, interleaved.
fn buckling_characteristic(theta: f64) -> f64 {
    2.0 * (1.0 - theta.cos()) - theta * theta.sin()
}

/// Scans `f` on brackets of width `width` starting from `start`, bisecting
/// every sign change, until `stop(root)` is true, `cap` roots are found, or
/// the abscissa passes `limit`.
fn scan_roots(
    f: impl Fn(f64) -> f64,
    start: f64,
    width: f64,
    limit: f64,
    cap: usize,
    stop: impl Fn(f64) -> bool,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut lo = start;
    let mut f_lo = f(lo);
    while lo <= limit {
        let hi = lo + width;
        let f_hi = f(hi);
        if f_hi == 0.0 {
            roots.push(hi);
        } else if f_lo != 0.0 && f_lo.signum() != f_hi.signum() {
            let root = bisect(&f, lo, hi);
            // A root recorded at an exact grid hit must not be re-counted.
            if roots.last().is_none_or(|&r| root - r > 0.25 * width) {
                roots.push(root);
            }
        }
        if let Some(&last) = roots.last() {
            if stop(last) || roots.len() >= cap {
                break;
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo.signum() != f_mid.signum() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
}

/// Validates the interleaved root pattern: the first root sits at `2π` and
/// consecutive gaps stay below `1.2π` (they tend to `π` from both sides).
fn roots_plausible(roots: &[f64], width: f64) -> bool {
    match roots.first() {
        None => false,
        Some(&first) => {
            if (first - 2.0 * std::f64::consts::PI).abs() > width {
                return false;
            }
            roots
                .windows(2)
                .all(|w| w[1] - w[0] > 0.5 && w[1] - w[0] < 1.2 * std::f64::consts::PI)
        }
    }
}

fn oracle_1d_scan(len: f64, cap: usize, stop_theta: f64) -> Result<Vec<f64>, SpectraError> {
    let full_width = 0.5 * std::f64::consts::PI;
    for attempt in 0..2 {
        let width = full_width / (attempt + 1) as f64;
        let roots = scan_roots(
            buckling_characteristic,
            0.5 * width,
            width,
            stop_theta + 4.0 * std::f64::consts::PI,
            cap,
            |theta| theta > stop_theta,
        );
        if roots_plausible(&roots, width) {
            return Ok(roots
                .into_iter()
                .map(|theta| (theta / len).powi(2))
                .collect());
        }
    }
    Err(SpectraError::BracketingFailure(
        "interleaved root families violated after retry".into(),
    ))
}

/// First `how_many` strictly positive eigenvalues of the order-1 Krein
/// problem on `(a, b)`, from the buckling characteristic equation by
/// bracketed bisection. The leading values on the unit interval are
/// `4π², 80.76…, 16π², …`.
pub fn oracle_1d_krein(a: f64, b: f64, how_many: usize) -> Result<Vec<f64>, SpectraError> {
    assert!(b > a, "interval requires a < b");
    assert!(how_many >= 1);
    // Roots sit near π apart in θ, starting at 2π.
    let stop_theta = (how_many as f64 + 3.0) * std::f64::consts::PI + 4.0;
    let mut vals = oracle_1d_scan(b - a, how_many, stop_theta)?;
    if vals.len() < how_many {
        return Err(SpectraError::BracketingFailure(format!(
            "found only {} of {} requested roots",
            vals.len(),
            how_many
        )));
    }
    vals.truncate(how_many);
    Ok(vals)
}

/// Number of order-1 Krein eigenvalues on `(a, b)` strictly below `lambda`,
/// by the same scan.
pub fn oracle_1d_krein_count_below(a: f64, b: f64, lambda: f64) -> Result<usize, SpectraError> {
    assert!(b > a, "interval requires a < b");
    if lambda <= 0.0 {
        return Ok(0);
    }
    let len = b - a;
    let theta_top = len * lambda.sqrt();
    if theta_top <= 2.0 * std::f64::consts::PI {
        return Ok(0);
    }
    let vals = oracle_1d_scan(len, usize::MAX, theta_top + 0.1)?;
    Ok(vals.iter().filter(|&&v| v < lambda).count())
}

/// Boundary-condition reconstruction residual for a computed 1D buckling
/// eigenpair `(λ, u)`: recovers `v = λ⁻¹ (-u'')` pointwise and measures how
/// far `v` is from satisfying `v'(a) = v'(b) = (v(b) - v(a))/(b - a)`.
///
/// Boundary traces are one-sided limits: the basis functions vanish at the
/// boundary to high order while `v` does not, so `v` and `v'` are sampled at
/// `a + δ, a + 2δ` (and mirrored at `b`) with `δ = h/100` and Richardson-
/// extrapolated to the endpoint. The residual is normalized by the sup of
/// `|v|`, making it invariant under rescaling of `u`.
///
/// Requires a 1D order-1 problem with degree at least 3 (third derivatives
/// of the trial functions are sampled).
pub fn krein_bc_check(forms: &AssembledForms, lambda: f64, coeffs: &[f64]) -> f64 {
    assert_eq!(forms.basis.dim(), 1, "reconstruction check is 1D only");
    assert_eq!(forms.order, 1, "reconstruction check requires order m = 1");
    assert!(
        forms.basis.degree() >= 3,
        "reconstruction check needs degree >= 3 for third derivatives"
    );
    assert_eq!(
        coeffs.len(),
        forms.trial_dim(),
        "coefficient length mismatch"
    );
    assert!(lambda > 0.0);

    let axis = forms.basis.axis(0);
    let (a, b) = (axis.origin, axis.upper());
    let delta = axis.step / 100.0;

    let eval_sum = |x: f64, d: usize| -> f64 {
        let mut acc = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            acc += c * forms
                .basis
                .eval(i, &[x], &[d])
                .expect("derivative order checked above");
        }
        acc
    };
    let v = |x: f64| -eval_sum(x, 2) / lambda;
    let v_prime = |x: f64| -eval_sum(x, 3) / lambda;
    let richardson =
        |f: &dyn Fn(f64) -> f64, x0: f64, step: f64| 2.0 * f(x0 + step) - f(x0 + 2.0 * step);

    let v_a = richardson(&v, a, delta);
    let v_b = richardson(&v, b, -delta);
    let vp_a = richardson(&v_prime, a, delta);
    let vp_b = richardson(&v_prime, b, -delta);
    let slope = (v_b - v_a) / (b - a);
    let raw = (vp_a - slope).abs().max((vp_b - slope).abs());

    // Scale by the sup of |v| on a sample grid so the residual is
    // homogeneous of degree zero in the eigenvector.
    let samples = 256;
    let mut scale = 0.0f64;
    for k in 0..samples {
        let x = a + (k as f64 + 0.5) / samples as f64 * (b - a);
        scale = scale.max(v(x).abs());
    }
    if scale == 0.0 {
        return raw;
    }
    raw / scale
}

/// Exploratory oracle for the order-2 Krein problem on an interval: roots
/// `k` of the 8x8 boundary determinant for `u⁽⁸⁾ = k⁴ u⁽⁴⁾` with clamped-
/// to-order-3 conditions, returned as eigenvalues `λ = k⁴`. No closed-form
/// reference values exist; treat the output as a diagnostic cross-check
/// against the assembled spectrum, not a validated table.
pub fn oracle_1d_krein_m2(a: f64, b: f64, how_many: usize) -> Result<Vec<f64>, SpectraError> {
    assert!(b > a, "interval requires a < b");
    assert!(how_many >= 1);
    let len = b - a;
    // Solution basis of u⁽⁸⁾ = k⁴u⁽⁴⁾: cubic polynomials plus
    // cosh/sinh/cos/sin of kx. Rows are u, u', u'', u''' at both endpoints.
    let det_sign = |k: f64| -> f64 {
        let mut m = [[0.0f64; 8]; 8];
        for (row_block, x) in [(0usize, 0.0f64), (4, len)] {
            for r in 0..4 {
                // Polynomial columns x^j.
                for j in 0..4usize {
                    m[row_block + r][j] = if r > j {
                        0.0
                    } else {
                        let mut c = 1.0;
                        for t in 0..r {
                            c *= (j - t) as f64;
                        }
                        c * x.powi((j - r) as i32)
                    };
                }
                let kr = k.powi(r as i32);
                let (ch, sh) = ((k * x).cosh(), (k * x).sinh());
                let (co, si) = ((k * x).cos(), (k * x).sin());
                m[row_block + r][4] = kr * if r % 2 == 0 { ch } else { sh };
                m[row_block + r][5] = kr * if r % 2 == 0 { sh } else { ch };
                m[row_block + r][6] = kr
                    * match r % 4 {
                        0 => co,
                        1 => -si,
                        2 => -co,
                        _ => si,
                    };
                m[row_block + r][7] = kr
                    * match r % 4 {
                        0 => si,
                        1 => co,
                        2 => -si,
                        _ => -co,
                    };
            }
        }
        // Column normalization keeps the determinant in range; positive
        // scalings preserve its sign.
        for j in 0..8 {
            let mx = (0..8).map(|i| m[i][j].abs()).fold(0.0, f64::max);
            if mx > 0.0 {
                for row in m.iter_mut() {
                    row[j] /= mx;
                }
            }
        }
        // Gaussian elimination with partial pivoting; sign of determinant.
        let mut sign = 1.0f64;
        for col in 0..8 {
            let mut piv = col;
            for i in (col + 1)..8 {
                if m[i][col].abs() > m[piv][col].abs() {
                    piv = i;
                }
            }
            if m[piv][col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                m.swap(piv, col);
                sign = -sign;
            }
            sign *= m[col][col].signum();
            for i in (col + 1)..8 {
                let factor = m[i][col] / m[col][col];
                for j in col..8 {
                    m[i][j] -= factor * m[col][j];
                }
            }
        }
        sign
    };

    // First root lies above the clamped-beam value k ≈ 4.73/len by the
    // Friedrichs-Krein ordering; scanning from 1/len stays clear of the
    // k → 0 degeneracy of the solution basis. Roots arrive about π/len
    // apart, so the scan limit leaves generous headroom.
    let width = 0.02 / len;
    let limit = (6.0 + (how_many as f64 + 4.0) * 4.0) / len;
    let roots = scan_roots(det_sign, 1.0 / len, width, limit, how_many, |_| false);
    if roots.len() < how_many {
        return Err(SpectraError::BracketingFailure(format!(
            "determinant scan found only {} of {} roots",
            roots.len(),
            how_many
        )));
    }
    Ok(roots
        .into_iter()
        .take(how_many)
        .map(|k| k.powi(4))
        .collect())
}
