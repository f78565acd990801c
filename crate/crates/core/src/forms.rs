//! Assembly of the discrete buckling-pencil matrices.
//!
//! The matrix of the form `(S f, S g)` with `S = (-Δ)^m` is assembled through
//! the multinomial expansion of `|ξ|^{4m}`: only mixed partial derivatives of
//! order `2m` per axis are needed, never the pointwise operator itself. The
//! same expansion at order `m` yields the matrix of `(f, S g)`, and the plain
//! L² Gram matrix completes the triple used by the Friedrichs eigenproblem.

use std::io::{self, Write};

use crate::basis::{Basis, BasisError, DomainSpec};
use crate::fmt_sig12;
use crate::linalg::SymMatrix;

/// Multinomial weights `k!/α!` over all multi-indices `α` of length `n` with
/// `|α| = k`. Their sum is `n^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialWeights {
    pub k: usize,
    pub n: usize,
    pub entries: Vec<(Vec<usize>, u64)>,
}

impl MultinomialWeights {
    pub fn weight_sum(&self) -> u64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }
}

pub fn multinomial_weights(k: usize, n: usize) -> MultinomialWeights {
    assert!(k >= 1 && n >= 1, "order and dimension must be positive");
    let mut entries = Vec::new();
    let mut alpha = vec![0usize; n];
    enumerate_compositions(k, 0, &mut alpha, &mut entries);
    MultinomialWeights { k, n, entries }
}

fn enumerate_compositions(
    remaining: usize,
    axis: usize,
    alpha: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, u64)>,
) {
    let n = alpha.len();
    if axis == n - 1 {
        alpha[axis] = remaining;
        let k: usize = alpha.iter().sum();
        let w = factorial(k) / alpha.iter().map(|&a| factorial(a)).product::<u64>();
        out.push((alpha.clone(), w));
        return;
    }
    for take in (0..=remaining).rev() {
        alpha[axis] = take;
        enumerate_compositions(remaining - take, axis + 1, alpha, out);
    }
}

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product::<u64>().max(1)
}

/// Weighted sum of derivative Gram matrices: entry `(i, j)` is
/// `Σ_{|α|=k} k!/α! ∫ ∂^α b_i ∂^α b_j`.
fn assemble_weighted(basis: &Basis, k: usize) -> Result<SymMatrix, BasisError> {
    let n = basis.len();
    let weights = multinomial_weights(k, basis.dim());
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            if basis.supports_disjoint(i, j) {
                continue;
            }
            let mut acc = 0.0;
            for (alpha, w) in &weights.entries {
                acc += *w as f64 * basis.inner(i, j, alpha, alpha)?;
            }
            m.set(i, j, acc);
        }
    }
    Ok(m)
}

/// Matrix of the form `(S f, S g)` with `S = (-Δ)^m`, via the order-`2m`
/// multinomial expansion. Requires `basis.degree() >= 2m`; positive definite
/// on a conforming basis.
pub fn assemble_a(basis: &Basis, m: usize) -> Result<SymMatrix, BasisError> {
    assert!(m >= 1, "operator order must be positive");
    if basis.degree() < 2 * m {
        return Err(BasisError::DerivativeTooHigh {
            requested: 2 * m,
            degree: basis.degree(),
        });
    }
    assemble_weighted(basis, 2 * m)
}

/// Matrix of the form `(f, S g)`, via the order-`m` expansion (for `m = 1`
/// this is the stiffness matrix). Requires `basis.degree() >= m`.
pub fn assemble_b(basis: &Basis, m: usize) -> Result<SymMatrix, BasisError> {
    assert!(m >= 1, "operator order must be positive");
    if basis.degree() < m {
        return Err(BasisError::DerivativeTooHigh {
            requested: m,
            degree: basis.degree(),
        });
    }
    assemble_weighted(basis, m)
}

/// L² Gram (mass) matrix of the basis.
pub fn assemble_mass(basis: &Basis) -> SymMatrix {
    let n = basis.len();
    let zero = vec![0usize; basis.dim()];
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            if basis.supports_disjoint(i, j) {
                continue;
            }
            let v = basis
                .inner(i, j, &zero, &zero)
                .expect("order-0 derivatives are always valid");
            m.set(i, j, v);
        }
    }
    m
}

/// The assembled discrete problem: pencil matrices, mass matrix, and the
/// trial space they were built on.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub a_mat: SymMatrix,
    pub b_mat: SymMatrix,
    pub mass_mat: SymMatrix,
    pub order: usize,
    pub basis: Basis,
    pub domain: DomainSpec,
}

impl AssembledForms {
    pub fn assemble(domain: DomainSpec, basis: Basis, m: usize) -> Result<Self, BasisError> {
        let a_mat = assemble_a(&basis, m)?;
        let b_mat = assemble_b(&basis, m)?;
        let mass_mat = assemble_mass(&basis);
        Ok(AssembledForms {
            a_mat,
            b_mat,
            mass_mat,
            order: m,
            basis,
            domain,
        })
    }

    pub fn trial_dim(&self) -> usize {
        self.basis.len()
    }
}

/// Plain-text matrix dump for external verification: first line `N`, then
/// `N` lines of `N` space-separated entries, row-major.
pub fn dump_matrix(m: &SymMatrix, w: &mut impl Write) -> io::Result<()> {
    let n = m.order();
    writeln!(w, "{n}")?;
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_sig12(m.get(i, j))).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, BasisSpec};
    use crate::linalg::{cholesky, sym_eig};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_interval() -> DomainSpec {
        DomainSpec::Interval { a: 0.0, b: 1.0 }
    }

    fn unit_square() -> DomainSpec {
        DomainSpec::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        }
    }

    #[test]
    fn multinomial_k2_n2() {
        let w = multinomial_weights(2, 2);
        let mut got = w.entries.clone();
        got.sort();
        assert_eq!(
            got,
            vec![(vec![0, 2], 1), (vec![1, 1], 2), (vec![2, 0], 1),]
        );
    }

    #[test]
    fn multinomial_k1_all_ones() {
        for n in 1..=4 {
            let w = multinomial_weights(1, n);
            assert_eq!(w.entries.len(), n);
            assert!(w.entries.iter().all(|(_, wt)| *wt == 1));
        }
    }

    #[test]
    fn multinomial_weight_sum_is_n_to_k() {
        assert_eq!(multinomial_weights(3, 3).weight_sum(), 27);
        assert_eq!(multinomial_weights(4, 2).weight_sum(), 16);
        assert_eq!(multinomial_weights(2, 5).weight_sum(), 25);
    }

    #[test]
    fn stiffness_entries_for_hats() {
        // Degree-1 hats, m = 1: diagonal 2/h, neighbor -1/h.
        let basis = crate::basis::Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        let b = assemble_b(&basis, 1).unwrap();
        let h = 1.0 / 8.0;
        assert!((b.get(0, 0) - 2.0 / h).abs() < 1e-11);
        assert!((b.get(0, 1) + 1.0 / h).abs() < 1e-11);
    }

    #[test]
    fn mass_entries_for_hats() {
        let basis = crate::basis::Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        let m = assemble_mass(&basis);
        let h = 1.0 / 8.0;
        assert!((m.get(0, 0) - 2.0 * h / 3.0).abs() < 1e-14);
        assert!((m.get(0, 1) - h / 6.0).abs() < 1e-14);
        assert_eq!(m.get(0, 4), 0.0);
    }

    #[test]
    fn mass_gram_is_positive_definite() {
        let basis = build_basis(
            &unit_interval(),
            &BasisSpec {
                degree: 3,
                cells_per_axis: 16,
                order: 1,
            },
        )
        .unwrap();
        let m = assemble_mass(&basis);
        let eig = sym_eig(&m).unwrap();
        assert!(
            eig.values[0] > 0.0,
            "smallest Gram eigenvalue {}",
            eig.values[0]
        );
    }

    #[test]
    fn one_dimensional_a_collapses_to_single_term() {
        let basis = build_basis(
            &unit_interval(),
            &BasisSpec {
                degree: 3,
                cells_per_axis: 12,
                order: 1,
            },
        )
        .unwrap();
        let a = assemble_a(&basis, 1).unwrap();
        for i in 0..basis.len() {
            for j in 0..=i {
                let direct = basis.inner(i, j, &[2], &[2]).unwrap();
                assert!((a.get(i, j) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn assembled_a_passes_cholesky() {
        for (dom, m, p, c) in [
            (unit_interval(), 1usize, 3usize, 16usize),
            (unit_interval(), 2, 5, 16),
            (unit_square(), 1, 3, 8),
        ] {
            let basis = build_basis(
                &dom,
                &BasisSpec {
                    degree: p,
                    cells_per_axis: c,
                    order: m,
                },
            )
            .unwrap();
            let a = assemble_a(&basis, m).unwrap();
            assert!(cholesky(&a).is_ok(), "A not SPD for m={m}, p={p}");
        }
    }

    #[test]
    fn b_form_is_positive_on_random_vectors() {
        let basis = build_basis(
            &unit_interval(),
            &BasisSpec {
                degree: 3,
                cells_per_axis: 16,
                order: 1,
            },
        )
        .unwrap();
        let b = assemble_b(&basis, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let u: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if u.iter().all(|&x| x == 0.0) {
                continue;
            }
            assert!(b.quad_form(&u) > 0.0);
        }
    }

    #[test]
    fn cauchy_schwarz_chain_between_forms() {
        // (uᵀB u)² ≤ (uᵀM u)(uᵀA u): the discrete mirror of
        // (u, Su) ≤ ‖u‖·‖Su‖, which forces the Friedrichs-Krein ordering.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (dom, m, p, c) in [
            (unit_interval(), 1usize, 3usize, 16usize),
            (unit_interval(), 2, 5, 12),
            (unit_square(), 1, 3, 7),
        ] {
            let basis = build_basis(
                &dom,
                &BasisSpec {
                    degree: p,
                    cells_per_axis: c,
                    order: m,
                },
            )
            .unwrap();
            let forms = AssembledForms::assemble(dom, basis, m).unwrap();
            for _ in 0..500 {
                let u: Vec<f64> = (0..forms.trial_dim())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                let bq = forms.b_mat.quad_form(&u);
                let mq = forms.mass_mat.quad_form(&u);
                let aq = forms.a_mat.quad_form(&u);
                assert!(bq * bq <= mq * aq * (1.0 + 1e-12), "{bq} {mq} {aq}");
            }
        }
    }

    #[test]
    fn diagonals_are_positive_in_all_three_matrices() {
        let dom = unit_square();
        let basis = build_basis(
            &dom,
            &BasisSpec {
                degree: 3,
                cells_per_axis: 7,
                order: 1,
            },
        )
        .unwrap();
        let forms = AssembledForms::assemble(dom, basis, 1).unwrap();
        for i in 0..forms.trial_dim() {
            assert!(forms.a_mat.get(i, i) > 0.0);
            assert!(forms.b_mat.get(i, i) > 0.0);
            assert!(forms.mass_mat.get(i, i) > 0.0);
        }
    }

    #[test]
    fn low_degree_basis_cannot_carry_high_order_form() {
        let basis = crate::basis::Basis::build(&unit_interval(), 1, 8, 1).unwrap();
        assert!(matches!(
            assemble_a(&basis, 1),
            Err(BasisError::DerivativeTooHigh { .. })
        ));
    }

    #[test]
    fn dump_format_round_trips_by_eye() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, 1.5);
        m.set(1, 0, -0.25);
        m.set(1, 1, 2.0);
        let mut buf = Vec::new();
        dump_matrix(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("2"));
        let row0: Vec<&str> = lines.next().unwrap().split(' ').collect();
        assert_eq!(row0.len(), 2);
        assert!(row0[0].starts_with("1.5"));
    }
}
