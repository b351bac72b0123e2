use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Domain, Field2};

pub const DEFAULT_LATTICE: usize = 201;

/// Uniform evaluation lattice including the boundary.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub domain: Domain,
    pub n: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Lattice {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("lattice needs n >= 2, got {n}")));
        }
        let axis = |lo: f64, hi: f64| -> Vec<f64> {
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
                .collect()
        };
        Ok(Lattice { domain, n, xs: axis(domain.x_lo, domain.x_hi), ys: axis(domain.y_lo, domain.y_hi) })
    }

    pub fn default_for(domain: Domain) -> Self {
        Lattice::new(domain, DEFAULT_LATTICE).expect("default lattice size is valid")
    }

    /// Samples a field; rows follow `xs`.
    pub fn sample(&self, f: &dyn Field2) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| f.at(self.xs[i], self.ys[j]))
    }

    fn trapezoid(&self, lo: f64, hi: f64) -> Vec<f64> {
        let h = (hi - lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i == 0 || i == self.n - 1 { h / 2.0 } else { h }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub l2: f64,
    pub sup: f64,
    /// Points per axis of the lattice used.
    pub lattice: usize,
}

/// L2 (tensor trapezoidal rule) and sup norms of `a - b` on the lattice.
pub fn error_norms_values(a: &DMatrix<f64>, b: &DMatrix<f64>, lattice: &Lattice) -> Result<ErrorReport> {
    let shape = (lattice.n, lattice.n);
    if a.shape() != shape || b.shape() != shape {
        return Err(Error::DimensionMismatch(format!(
            "fields of shape {:?} and {:?} on a {} x {} lattice",
            a.shape(),
            b.shape(),
            lattice.n,
            lattice.n
        )));
    }
    let wx = lattice.trapezoid(lattice.domain.x_lo, lattice.domain.x_hi);
    let wy = lattice.trapezoid(lattice.domain.y_lo, lattice.domain.y_hi);
    let (mut sq, mut sup) = (0.0, 0.0f64);
    for i in 0..lattice.n {
        let mut row = 0.0;
        for j in 0..lattice.n {
            let d = a[(i, j)] - b[(i, j)];
            row += wy[j] * d * d;
            sup = sup.max(d.abs());
        }
        sq += wx[i] * row;
    }
    if !sq.is_finite() || !sup.is_finite() {
        return Err(Error::NonFinite("error norm".into()));
    }
    Ok(ErrorReport { l2: sq.sqrt(), sup, lattice: lattice.n })
}

pub fn error_norms(a: &dyn Field2, b: &dyn Field2, lattice: &Lattice) -> Result<ErrorReport> {
    error_norms_values(&lattice.sample(a), &lattice.sample(b), lattice)
}

/// Fits `maxima[i] ~ alpha * exp(-beta * i)` by least squares on `ln maxima`.
/// Non-positive or non-finite entries are skipped.
pub fn decay_fit(maxima: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .filter(|(_, m)| m.is_finite() && **m > 0.0)
        .map(|(i, m)| (i as f64, m.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Domain(format!("decay fit needs 3 positive maxima, got {}", pts.len())));
    }
    let (slope, intercept) = linear_fit(&pts);
    Ok((intercept.exp(), -slope))
}

/// Least-squares line `y = slope * x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of the least-squares line.
pub fn r_squared(pts: &[(f64, f64)]) -> f64 {
    let (slope, intercept) = linear_fit(pts);
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

/// Writes `nx,ny,x_lo,x_hi,y_lo,y_hi` followed by one row of values per x.
pub fn write_grid_csv(mut w: impl Write, domain: &Domain, values: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(w, "nx,ny,x_lo,x_hi,y_lo,y_hi")?;
    writeln!(
        w,
        "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
        values.nrows(),
        values.ncols(),
        domain.x_lo,
        domain.x_hi,
        domain.y_lo,
        domain.y_hi
    )?;
    for i in 0..values.nrows() {
        let row: Vec<String> = (0..values.ncols()).map(|j| format!("{:.16e}", values[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
