//! Stochastic Galerkin projection onto a chaos basis.
//!
//! Projecting `-div(a grad u) = f` onto `Phi_j` gives, for `j = 0..=m`,
//!
//! ```text
//! sum_t sum_i C_t[j][i] * (-div(a_t grad u_i)) = F_j
//! ```
//!
//! with `a_0` the mean field, `C_0 = I`, `C_k[j][i] = b0 <xi_k Phi_i, Phi_j>`
//! and `F_j = f <1, Phi_j> = f delta_{j0}`.

use nalgebra::DMatrix;

use crate::chaos::{ChaosBasis, TripleTensor};
use crate::error::{Error, Result};
use crate::model::expr::Expr;
use crate::model::problem::{Domain, SpdeProblem};

/// One divergence-form operator `div(field grad .)` with its block coupling.
#[derive(Clone, Debug)]
pub struct CouplingTerm {
    pub field: Expr,
    /// `coupling[(j, i)]` multiplies the term acting on `u_i` in equation `j`.
    pub coupling: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub domain: Domain,
    /// Term 0 is the mean field with identity coupling.
    pub terms: Vec<CouplingTerm>,
    pub forcing: Expr,
    /// `F_j = rhs_weights[j] * forcing`.
    pub rhs_weights: Vec<f64>,
}

impl CoupledSystem {
    /// Number of coupled equations `m + 1`.
    pub fn blocks(&self) -> usize {
        self.rhs_weights.len()
    }

    /// Weight of the mean-field operator in block `(j, i)`.
    pub fn laplacian_weight(&self, j: usize, i: usize) -> f64 {
        self.terms[0].coupling[(j, i)]
    }

    /// Nonzero `(term, coefficient)` pairs of block `(j, i)`.
    pub fn block_terms(&self, j: usize, i: usize) -> Vec<(usize, f64)> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(t, term)| {
                let c = term.coupling[(j, i)];
                (c != 0.0).then_some((t, c))
            })
            .collect()
    }

    pub fn block_is_zero(&self, j: usize, i: usize) -> bool {
        self.terms.iter().all(|t| t.coupling[(j, i)] == 0.0)
    }

    /// Stochastic operator matrix for constant fields:
    /// `G[(j, i)] = sum_t value_t * C_t[(j, i)]`.
    pub fn constant_coefficient_matrix(&self) -> Option<DMatrix<f64>> {
        let b = self.blocks();
        let mut g = DMatrix::zeros(b, b);
        for term in &self.terms {
            g += &term.coupling * term.field.constant_value()?;
        }
        Some(g)
    }
}

pub fn galerkin_assemble(p: &SpdeProblem, basis: &ChaosBasis, tensor: &TripleTensor) -> Result<CoupledSystem> {
    if p.dimension() != basis.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "problem has {} random variables, basis has {}",
            p.dimension(),
            basis.dimension()
        )));
    }
    if tensor.dimension() != basis.dimension() || tensor.size() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "tensor of shape {} x {} x {} for a basis of {} functions in {} variables",
            tensor.dimension(),
            tensor.size(),
            tensor.size(),
            basis.len(),
            basis.dimension()
        )));
    }
    let m1 = basis.len();
    let mut terms = vec![CouplingTerm { field: p.a0.clone(), coupling: DMatrix::identity(m1, m1) }];
    for (k, field) in p.a.iter().enumerate() {
        let coupling = DMatrix::from_fn(m1, m1, |j, i| p.b0 * tensor.get(k, i, j));
        terms.push(CouplingTerm { field: field.clone(), coupling });
    }
    let mut rhs_weights = vec![0.0; m1];
    rhs_weights[0] = 1.0;
    Ok(CoupledSystem { domain: p.domain, terms, forcing: p.f.clone(), rhs_weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn example1() -> SpdeProblem {
        SpdeProblem::new(Domain::square(-1.0, 1.0).unwrap(), e("2"), 1.0, vec![e("1")], e("-1")).unwrap()
    }

    fn example2() -> SpdeProblem {
        let a = [
            "1/4 * cos(2*pi*x)",
            "1/4 * cos(2*pi*y)",
            "1/16 * cos(4*pi*x)",
            "1/16 * cos(4*pi*y)",
            "1/8 * cos(2*pi*x) * cos(2*pi*y)",
        ];
        SpdeProblem::new(Domain::square(0.0, 1.0).unwrap(), e("1"), 0.5, a.iter().map(|s| e(s)).collect(), e("1"))
            .unwrap()
    }

    fn assemble(p: &SpdeProblem, degree: usize) -> CoupledSystem {
        let basis = ChaosBasis::total_degree(p.dimension(), degree).unwrap();
        let tensor = TripleTensor::new(&basis).unwrap();
        galerkin_assemble(p, &basis, &tensor).unwrap()
    }

    #[test]
    fn example1_stochastic_matrix() {
        let sys = assemble(&example1(), 3);
        let g = sys.constant_coefficient_matrix().unwrap();
        // oracle: 4-node Gauss quadrature of Phi_j (xi + 2) Phi_i
        let rule = crate::chaos::gauss_legendre(8).unwrap();
        for j in 0..4 {
            for i in 0..4 {
                let q = rule.integrate(|xi| {
                    crate::chaos::legendre_orthonormal(j, xi).unwrap()
                        * (xi + 2.0)
                        * crate::chaos::legendre_orthonormal(i, xi).unwrap()
                });
                assert!((g[(j, i)] - q).abs() < 1e-13, "({j},{i}) {} vs {q}", g[(j, i)]);
            }
        }
        let off = [1.0 / 3f64.sqrt(), 2.0 / 15f64.sqrt(), 3.0 / 35f64.sqrt()];
        for (i, o) in off.iter().enumerate() {
            assert_eq!(g[(i, i)], 2.0);
            assert!((g[(i, i + 1)] - o).abs() < 1e-13);
        }
        assert_eq!(g[(0, 2)], 0.0);
        assert_eq!(sys.rhs_weights, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mean_only_problem() {
        let sys = assemble(&example2(), 0);
        assert_eq!(sys.blocks(), 1);
        assert_eq!(sys.block_terms(0, 0), vec![(0, 1.0)]);
    }

    #[test]
    fn example2_first_row() {
        let sys = assemble(&example2(), 3);
        assert_eq!(sys.blocks(), 56);
        let c = 0.5 / 3f64.sqrt();
        for i in 1..56 {
            let terms = sys.block_terms(0, i);
            if (1..=5).contains(&i) {
                assert_eq!(terms.len(), 1);
                let (t, v) = terms[0];
                assert_eq!(t, i);
                assert!((v - c).abs() < 1e-14);
            } else {
                assert!(terms.is_empty());
            }
        }
    }

    #[test]
    fn block_symmetry_and_zero_input() {
        let sys = assemble(&example2(), 2);
        for t in &sys.terms {
            assert_eq!(t.coupling, t.coupling.transpose());
        }
        let mut p = example2();
        p.a.iter_mut().for_each(|a| *a = e("0"));
        let sys = assemble(&p, 2);
        let b = sys.blocks();
        for j in 0..b {
            for i in 0..b {
                assert_eq!(sys.laplacian_weight(j, i), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(sys.rhs_weights.iter().filter(|&&w| w != 0.0).count(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let basis = ChaosBasis::total_degree(2, 2).unwrap();
        let tensor = TripleTensor::new(&basis).unwrap();
        assert!(matches!(galerkin_assemble(&example1(), &basis, &tensor), Err(Error::DimensionMismatch(_))));
        let other = ChaosBasis::total_degree(1, 2).unwrap();
        let basis = ChaosBasis::total_degree(1, 3).unwrap();
        let tensor = TripleTensor::new(&other).unwrap();
        assert!(galerkin_assemble(&example1(), &basis, &tensor).is_err());
    }
}
