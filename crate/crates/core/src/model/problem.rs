use crate::error::{Error, Result};
use crate::model::expr::Expr;

/// Axis-aligned rectangle `(x_lo, x_hi) x (y_lo, y_hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Domain {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(x_lo, x_hi) || !ok(y_lo, y_hi) {
            return Err(Error::Domain(format!(
                "invalid rectangle ({x_lo}, {x_hi}) x ({y_lo}, {y_hi})"
            )));
        }
        Ok(Domain { x_lo, x_hi, y_lo, y_hi })
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Domain::new(lo, hi, lo, hi)
    }

    pub fn area(&self) -> f64 {
        (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && y >= self.y_lo && y <= self.y_hi
    }
}

/// `-div(a grad u) = f` on a rectangle with `u = 0` on the boundary and
/// `a(x, y, theta) = a0 + b0 * sum_k theta_k a_k`, `theta` uniform on `[-1, 1]^K`.
#[derive(Clone, Debug)]
pub struct SpdeProblem {
    pub domain: Domain,
    pub a0: Expr,
    pub b0: f64,
    pub a: Vec<Expr>,
    pub f: Expr,
    /// Smallest admissible worst-case value of the diffusion coefficient.
    pub coercivity_floor: f64,
}

pub const DEFAULT_COERCIVITY_FLOOR: f64 = 1e-8;
pub const DEFAULT_COERCIVITY_SAMPLES: usize = 200;

impl SpdeProblem {
    pub fn new(domain: Domain, a0: Expr, b0: f64, a: Vec<Expr>, f: Expr) -> Result<Self> {
        if !b0.is_finite() {
            return Err(Error::Domain(format!("b0 = {b0} is not finite")));
        }
        Ok(SpdeProblem { domain, a0, b0, a, f, coercivity_floor: DEFAULT_COERCIVITY_FLOOR })
    }

    /// Stochastic dimension `K`.
    pub fn dimension(&self) -> usize {
        self.a.len()
    }

    /// Diffusion coefficient at one realization.
    pub fn coefficient(&self, x: f64, y: f64, theta: &[f64]) -> f64 {
        let s: f64 = self.a.iter().zip(theta).map(|(a, t)| t * a.eval(x, y)).sum();
        self.a0.eval(x, y) + self.b0 * s
    }

    /// Worst case of `a0 - |b0| sum |a_k|` over a `(density + 1)^2` lattice.
    /// Fails with [`Error::NonCoercive`] at the minimizing point when the
    /// bound falls below `coercivity_floor`.
    pub fn validate_coercivity(&self, density: usize) -> Result<f64> {
        if density == 0 {
            return Err(Error::Domain("coercivity sample density must be positive".into()));
        }
        let d = &self.domain;
        let mut worst = (f64::INFINITY, d.x_lo, d.y_lo);
        for i in 0..=density {
            let x = d.x_lo + (d.x_hi - d.x_lo) * i as f64 / density as f64;
            for j in 0..=density {
                let y = d.y_lo + (d.y_hi - d.y_lo) * j as f64 / density as f64;
                let spread: f64 = self.a.iter().map(|a| a.eval(x, y).abs()).sum();
                let v = self.a0.eval(x, y) - self.b0.abs() * spread;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("diffusion coefficient at ({x}, {y})")));
                }
                if v < worst.0 {
                    worst = (v, x, y);
                }
            }
        }
        let (floor, x, y) = worst;
        if floor <= 0.0 || floor < self.coercivity_floor {
            return Err(Error::NonCoercive { floor, x, y });
        }
        Ok(floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    pub(crate) fn example2() -> SpdeProblem {
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

    #[test]
    fn example2_floor() {
        let p = example2();
        assert_eq!(p.dimension(), 5);
        let floor = p.validate_coercivity(200).unwrap();
        // triangle bound, attained at the corners where every cosine is 1
        assert!((floor - 0.625).abs() < 1e-12, "{floor}");
    }

    #[test]
    fn deterministic_floor() {
        let p = SpdeProblem::new(Domain::square(0.0, 1.0).unwrap(), e("1"), 0.5, vec![], e("1")).unwrap();
        assert_eq!(p.validate_coercivity(10).unwrap(), 1.0);
    }

    #[test]
    fn rejects_non_coercive() {
        let p = SpdeProblem::new(Domain::square(0.0, 1.0).unwrap(), e("1"), 1.0, vec![e("1.5")], e("1")).unwrap();
        match p.validate_coercivity(10) {
            Err(Error::NonCoercive { floor, x, y }) => {
                assert!((floor + 0.5).abs() < 1e-15);
                assert!(p.domain.contains(x, y));
            }
            other => panic!("{other:?}"),
        }
        let p = SpdeProblem::new(Domain::square(-1.0, 1.0).unwrap(), e("x"), 0.0, vec![], e("1")).unwrap();
        match p.validate_coercivity(10) {
            Err(Error::NonCoercive { x, .. }) => assert_eq!(x, -1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn realization() {
        let p = example2();
        let v = p.coefficient(0.0, 0.0, &[1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!((v - 1.375).abs() < 1e-14);
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Domain::new(0.0, f64::NAN, 0.0, 1.0).is_err());
        assert_eq!(Domain::square(-1.0, 1.0).unwrap().area(), 4.0);
    }
}
