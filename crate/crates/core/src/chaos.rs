//! Legendre polynomial chaos for independent uniform variables on `[-1, 1]`.
//!
//! Inner products are taken against the probability density `(1/2)^K`, so the
//! basis is orthonormal and `Phi_0 = 1`.

use std::io::Write;

use crate::error::{Error, Result};

/// Default upper bound on the number of basis functions.
pub const DEFAULT_BASIS_CAP: usize = 10_000;

/// Entries of the triple tensor below this magnitude vanish by orthogonality
/// and are stored as exact zeros.
pub const TENSOR_ZERO: f64 = 1e-13;

/// Orthonormal Legendre polynomial `sqrt(2d + 1) L_d(xi)` on `[-1, 1]`.
pub fn legendre_orthonormal(degree: usize, xi: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(Error::Domain(format!("xi = {xi} lies outside [-1, 1]")));
    }
    Ok(legendre_orthonormal_any(degree, xi))
}

/// Same as [`legendre_orthonormal`] without the range check, for diagnostics.
pub fn legendre_orthonormal_any(degree: usize, xi: f64) -> f64 {
    legendre_classical(degree, xi) * ((2 * degree + 1) as f64).sqrt()
}

/// Classical Legendre polynomial by `(n+1) L_{n+1} = (2n+1) xi L_n - n L_{n-1}`.
fn legendre_classical(degree: usize, xi: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, xi);
    if degree == 0 {
        return prev;
    }
    for n in 1..degree {
        let n = n as f64;
        let next = ((2.0 * n + 1.0) * xi * cur - n * prev) / (n + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal values for degrees `0..=max_degree`.
pub fn legendre_orthonormal_all(max_degree: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    let (mut prev, mut cur) = (1.0, xi);
    out.push(1.0);
    if max_degree >= 1 {
        out.push(xi * 3f64.sqrt());
    }
    for n in 1..max_degree {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * xi * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        out.push(cur * ((2 * n + 3) as f64).sqrt());
    }
    out
}

/// Gauss–Legendre rule normalized to the uniform density on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `q`-point Gauss–Legendre nodes (ascending) with weights summing to one.
pub fn gauss_legendre(q: usize) -> Result<QuadratureRule> {
    if q == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    let qf = q as f64;
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Total-degree multi-index set, graded, zero tuple first.
///
/// Within one degree the tuples are ordered by descending lexicographic
/// order, so the first-degree indices follow the variable order
/// `(1,0,..), (0,1,..), ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    dimension: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn new(dimension: usize, degree: usize) -> Result<Self> {
        Self::with_cap(dimension, degree, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(dimension: usize, degree: usize, cap: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Domain("stochastic dimension K must be at least 1".into()));
        }
        let count = basis_count(dimension, degree).unwrap_or(usize::MAX);
        if count > cap {
            return Err(Error::BasisOverflow { count, cap });
        }
        let mut indices = Vec::with_capacity(count);
        let mut scratch = vec![0usize; dimension];
        for d in 0..=degree {
            compositions(d, 0, &mut scratch, &mut indices);
        }
        debug_assert_eq!(indices.len(), count);
        Ok(MultiIndexSet { dimension, degree, indices })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    pub fn total_degree(&self, i: usize) -> usize {
        self.indices[i].iter().sum()
    }
}

fn compositions(remaining: usize, pos: usize, scratch: &mut [usize], out: &mut Vec<Vec<usize>>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(scratch.to_vec());
        return;
    }
    for v in (0..=remaining).rev() {
        scratch[pos] = v;
        compositions(remaining - v, pos + 1, scratch, out);
    }
}

/// `(K + P)! / (K! P!)`, or `None` on overflow.
pub fn basis_count(dimension: usize, degree: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 1..=degree.min(dimension) as u128 {
        let big = dimension.max(degree) as u128;
        acc = acc.checked_mul(big + i)? / i;
    }
    usize::try_from(acc).ok()
}

/// Orthonormal multivariate Legendre basis `Phi_i = prod_r phi_{i_r}(xi_r)`.
#[derive(Clone, Debug)]
pub struct ChaosBasis {
    index_set: MultiIndexSet,
}

impl ChaosBasis {
    pub fn new(index_set: MultiIndexSet) -> Self {
        ChaosBasis { index_set }
    }

    pub fn total_degree(dimension: usize, degree: usize) -> Result<Self> {
        Ok(Self::new(MultiIndexSet::new(dimension, degree)?))
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.index_set.dimension
    }

    pub fn degree(&self) -> usize {
        self.index_set.degree
    }

    /// Values of every basis function at `theta`.
    pub fn eval(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "parameter of length {} for K = {}",
                theta.len(),
                self.dimension()
            )));
        }
        if let Some(bad) = theta.iter().find(|t| !(-1.0..=1.0).contains(*t)) {
            return Err(Error::Domain(format!("parameter component {bad} lies outside [-1, 1]")));
        }
        let tables: Vec<Vec<f64>> = theta
            .iter()
            .map(|&t| legendre_orthonormal_all(self.degree(), t))
            .collect();
        Ok(self
            .index_set
            .indices
            .iter()
            .map(|idx| idx.iter().zip(&tables).map(|(&d, t)| t[d]).product())
            .collect())
    }
}

/// `T[k][i][j] = <xi_k Phi_i, Phi_j>` for `k < K` and basis indices `i, j`.
#[derive(Clone, Debug)]
pub struct TripleTensor {
    dimension: usize,
    size: usize,
    entries: Vec<f64>,
}

impl TripleTensor {
    /// Builds the tensor with a `P + 2` point rule per variable.
    pub fn new(basis: &ChaosBasis) -> Result<Self> {
        Self::with_quadrature(basis, basis.degree() + 2)
    }

    pub fn with_quadrature(basis: &ChaosBasis, q: usize) -> Result<Self> {
        let p = basis.degree();
        if q < p + 2 {
            return Err(Error::Domain(format!("quadrature size {q} is below P + 2 = {}", p + 2)));
        }
        let rule = gauss_legendre(q)?;
        // univariate tables: mass[a][b] = <phi_a phi_b>, first[a][b] = <xi phi_a phi_b>
        let vals: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre_orthonormal_all(p, x)).collect();
        let mut mass = vec![vec![0.0; p + 1]; p + 1];
        let mut first = vec![vec![0.0; p + 1]; p + 1];
        for a in 0..=p {
            for b in a..=p {
                for (s, v) in vals.iter().enumerate() {
                    let w = rule.weights[s] * v[a] * v[b];
                    mass[a][b] += w;
                    first[a][b] += w * rule.nodes[s];
                }
                // mirrored so the tensor is exactly symmetric in (i, j)
                mass[b][a] = mass[a][b];
                first[b][a] = first[a][b];
            }
        }
        let dimension = basis.dimension();
        let size = basis.len();
        let idx = basis.index_set.indices();
        let mut entries = vec![0.0; dimension * size * size];
        for k in 0..dimension {
            for i in 0..size {
                for j in 0..size {
                    let mut v = 1.0;
                    for r in 0..dimension {
                        let (a, b) = (idx[i][r], idx[j][r]);
                        v *= if r == k { first[a][b] } else { mass[a][b] };
                        if v.abs() < TENSOR_ZERO {
                            break;
                        }
                    }
                    if v.abs() >= TENSOR_ZERO {
                        entries[(k * size + i) * size + j] = v;
                    }
                }
            }
        }
        Ok(TripleTensor { dimension, size, entries })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of basis functions, `m + 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.entries[(k * self.size + i) * self.size + j]
    }

    /// Row-major `(m+1) x (m+1)` slice for variable `k`.
    pub fn slice(&self, k: usize) -> &[f64] {
        let s = self.size * self.size;
        &self.entries[k * s..(k + 1) * s]
    }

    /// Nonzero entries as `(k, i, j, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for k in 0..self.dimension {
            for i in 0..self.size {
                for j in 0..self.size {
                    let v = self.get(k, i, j);
                    if v != 0.0 {
                        out.push((k, i, j, v));
                    }
                }
            }
        }
        out
    }

    /// Writes the nonzeros as `k,i,j,value` lines after a header line.
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,i,j,value")?;
        for (k, i, j, v) in self.nonzeros() {
            writeln!(w, "{k},{i},{j},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Mean of a chaos expansion: the coefficient field of `Phi_0`.
pub fn pce_mean(coeffs: &[Vec<f64>]) -> Result<Vec<f64>> {
    coeffs
        .first()
        .cloned()
        .ok_or_else(|| Error::DimensionMismatch("empty coefficient list".into()))
}

/// Variance of an orthonormal chaos expansion: `sum_{i >= 1} u_i^2`.
pub fn pce_variance(coeffs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let len = check_fields(coeffs)?;
    let mut out = vec![0.0; len];
    for field in &coeffs[1..] {
        for (o, v) in out.iter_mut().zip(field) {
            *o += v * v;
        }
    }
    Ok(out)
}

/// Pointwise realization `sum_i u_i Phi_i(theta)`.
pub fn pce_realize(coeffs: &[Vec<f64>], basis: &ChaosBasis, theta: &[f64]) -> Result<Vec<f64>> {
    let len = check_fields(coeffs)?;
    if coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient fields for {} basis functions",
            coeffs.len(),
            basis.len()
        )));
    }
    let phi = basis.eval(theta)?;
    let mut out = vec![0.0; len];
    for (field, p) in coeffs.iter().zip(phi) {
        for (o, v) in out.iter_mut().zip(field) {
            *o += p * v;
        }
    }
    Ok(out)
}

fn check_fields(coeffs: &[Vec<f64>]) -> Result<usize> {
    let len = coeffs
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty coefficient list".into()))?
        .len();
    if coeffs.iter().any(|c| c.len() != len) {
        return Err(Error::DimensionMismatch("coefficient fields differ in length".into()));
    }
    Ok(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_counts() {
        assert_eq!(MultiIndexSet::new(5, 3).unwrap().len(), 56);
        assert_eq!(MultiIndexSet::new(1, 3).unwrap().len(), 4);
        let s = MultiIndexSet::new(3, 0).unwrap();
        assert_eq!(s.indices(), &[vec![0, 0, 0]]);
        assert_eq!(basis_count(5, 3), Some(56));
        assert_eq!(basis_count(2, 10), Some(66));
    }

    #[test]
    fn univariate_index_order() {
        let s = MultiIndexSet::new(1, 3).unwrap();
        assert_eq!(s.indices(), &[vec![0], vec![1], vec![2], vec![3]]);
        let s = MultiIndexSet::new(3, 1).unwrap();
        assert_eq!(s.indices(), &[vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn overflow_guard() {
        assert!(matches!(MultiIndexSet::new(20, 10), Err(Error::BasisOverflow { .. })));
        assert!(MultiIndexSet::with_cap(5, 3, 55).is_err());
        assert!(MultiIndexSet::new(0, 2).is_err());
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_orthonormal(0, 0.3).unwrap(), 1.0);
        assert!((legendre_orthonormal(1, 1.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((legendre_orthonormal(2, 0.0).unwrap() + 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(legendre_orthonormal(2, 1.5).is_err());
        assert!(legendre_orthonormal_any(2, 1.5).is_finite());
        let all = legendre_orthonormal_all(6, 0.37);
        for (d, v) in all.iter().enumerate() {
            assert!((v - legendre_orthonormal(d, 0.37).unwrap()).abs() < 1e-14);
        }
        let rule = gauss_legendre(5).unwrap();
        let n2 = rule.integrate(|x| legendre_orthonormal(2, x).unwrap().powi(2));
        assert!((n2 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_rules() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 0.5).abs() < 1e-15 && (r.weights[1] - 0.5).abs() < 1e-15);
        assert!((r.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-15);
        assert!(gauss_legendre(0).is_err());
        for q in 1..=30 {
            let r = gauss_legendre(q).unwrap();
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            let odd = r.integrate(|x| x.powi(2 * q as i32 - 1));
            let even = r.integrate(|x| x.powi(2 * q as i32 - 2));
            assert!(odd.abs() < 1e-12, "q={q}");
            assert!((even - 1.0 / (2 * q - 1) as f64).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn univariate_tensor_entries() {
        let basis = ChaosBasis::total_degree(1, 3).unwrap();
        let t = TripleTensor::new(&basis).unwrap();
        assert_eq!(t.get(0, 0, 0), 0.0);
        let expected = [1.0 / 3f64.sqrt(), 2.0 / 15f64.sqrt(), 3.0 / 35f64.sqrt()];
        for (i, e) in expected.iter().enumerate() {
            assert!((t.get(0, i, i + 1) - e).abs() < 1e-12);
            assert!((t.get(0, i + 1, i) - e).abs() < 1e-12);
        }
        assert!(TripleTensor::with_quadrature(&basis, 5).is_ok());
        assert!(TripleTensor::with_quadrature(&basis, 4).is_err());
    }

    #[test]
    fn moments() {
        let c = vec![vec![1.0, 2.0], vec![0.0, 0.0]];
        assert_eq!(pce_mean(&c).unwrap(), vec![1.0, 2.0]);
        assert_eq!(pce_variance(&c).unwrap(), vec![0.0, 0.0]);
        let c = vec![vec![0.0], vec![3.0]];
        assert_eq!(pce_variance(&c).unwrap(), vec![9.0]);
        assert!(pce_mean(&[]).is_err());
    }

    #[test]
    fn realization_at_zero() {
        let basis = ChaosBasis::total_degree(1, 3).unwrap();
        let c = vec![vec![1.5], vec![2.0], vec![0.7], vec![-4.0]];
        let r = pce_realize(&c, &basis, &[0.0]).unwrap();
        assert!((r[0] - (1.5 - 5f64.sqrt() / 2.0 * 0.7)).abs() < 1e-14);
        assert!(pce_realize(&c, &basis, &[1.1]).is_err());
    }

    proptest! {
        #[test]
        fn tensor_symmetric_and_sparse(k in 1usize..5, p in 0usize..5) {
            let basis = ChaosBasis::total_degree(k, p).unwrap();
            let t = TripleTensor::new(&basis).unwrap();
            let set = basis.index_set();
            for kk in 0..k {
                for i in 0..basis.len() {
                    for j in 0..basis.len() {
                        let (a, b) = (set.get(i), set.get(j));
                        let adjacent = (0..k).all(|r| if r == kk { a[r].abs_diff(b[r]) == 1 } else { a[r] == b[r] });
                        prop_assert_eq!(t.get(kk, i, j), t.get(kk, j, i));
                        prop_assert_eq!(adjacent, t.get(kk, i, j) != 0.0);
                    }
                }
            }
        }

        #[test]
        fn gram_is_identity(k in 1usize..4, p in 0usize..5) {
            let basis = ChaosBasis::total_degree(k, p).unwrap();
            let rule = gauss_legendre(p + 1).unwrap();
            let q = rule.nodes.len();
            let m = basis.len();
            let mut g = vec![0.0; m * m];
            for idx in 0..q.pow(k as u32) {
                let (mut theta, mut w, mut rest) = (Vec::new(), 1.0, idx);
                for _ in 0..k {
                    theta.push(rule.nodes[rest % q]);
                    w *= rule.weights[rest % q];
                    rest /= q;
                }
                let phi = basis.eval(&theta).unwrap();
                for i in 0..m {
                    for j in 0..m {
                        g[i * m + j] += w * phi[i] * phi[j];
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    let e = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g[i * m + j] - e).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn variance_nonnegative(c in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 1..8)) {
            prop_assert!(pce_variance(&c).unwrap().iter().all(|&v| v >= 0.0));
        }
    }
}
