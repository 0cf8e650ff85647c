//! 1-D radial grid on a ball with Dirichlet condition at `r = rho` and even
//! symmetry across `r = 0`.
//!
//! Interior nodes sit at `r_i = i*h`, `i = 1..n-1`, with `h = rho/n`. The
//! Laplacian `u'' + (N-1)/r u'` is discretized with central differences,
//! which for dimensions 1..3 coincide with the conservative flux form with
//! face weight `s_i = r_i^{N-1} + (N-1)(h/2) r_i^{N-2}` between nodes `i` and
//! `i+1`. The flux through the symmetry face at `r = h/2` vanishes (ghost
//! reflection), so the weighted operator matrix is exactly symmetric and the
//! discrete Dirichlet integral below is its quadratic form.

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `dim` dimensions; dimension 1 counts
/// both half-lines.
pub fn unit_sphere_area(dim: u32) -> f64 {
    match dim {
        1 => 2.0,
        2 => std::f64::consts::TAU,
        3 => 4.0 * std::f64::consts::PI,
        _ => unreachable!("dimension validated at grid build"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    rho: f64,
    n: usize,
    h: f64,
    /// Quadrature weight per interior node: `area * r_i^{N-1} * h`.
    weights: Vec<f64>,
    /// Face weight between node `i` and `i+1` (1-based), scaled by `area/h`.
    face: Vec<f64>,
}

impl RadialGrid {
    /// Build the radial grid for a ball of radius `rho` in dimension `dim`
    /// with `n` subintervals (`n - 1` interior nodes).
    pub fn build(dim: u32, rho: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if !(rho > 0.0) {
            return Err(Error::invalid("rho", format!("must be positive, got {rho}")));
        }
        if n < 3 {
            return Err(Error::invalid("n", format!("need at least 3 subintervals, got {n}")));
        }
        let h = rho / n as f64;
        let area = unit_sphere_area(dim);
        let nm1 = dim as i32 - 1;
        let weights = (1..n)
            .map(|i| {
                let r = i as f64 * h;
                area * r.powi(nm1) * h
            })
            .collect();
        // face i connects node i to node i+1; node n is the Dirichlet boundary.
        let face = (1..n)
            .map(|i| {
                let r = i as f64 * h;
                let s = r.powi(nm1) + nm1 as f64 * (h / 2.0) * r.powi(nm1 - 1);
                area / h * s
            })
            .collect();
        Ok(RadialGrid {
            dim,
            rho,
            n,
            h,
            weights,
            face,
        })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes (`n - 1`).
    pub fn len(&self) -> usize {
        self.n - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radius of interior node `k` (0-based: `r = (k+1) h`).
    pub fn radius(&self, k: usize) -> f64 {
        (k + 1) as f64 * self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Midpoint quadrature `sum f(r_i) * area * r_i^{N-1} * h`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(f.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }

    /// `Δu = u'' + (N-1)/r u'` by central differences, with the boundary
    /// value `u(rho) = 0` and zero flux through the symmetry face at `r = h/2`.
    pub fn laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let m = self.len();
        let mut out = vec![0.0; m];
        for k in 0..m {
            let up = if k + 1 < m { u[k + 1] } else { 0.0 };
            let mut flux = self.face[k] * (up - u[k]);
            if k > 0 {
                flux -= self.face[k - 1] * (u[k] - u[k - 1]);
            }
            out[k] = flux / self.weights[k];
        }
        Ok(out)
    }

    /// Discrete Dirichlet integral `∫ |∇u|²`: the quadratic form of the
    /// (negated) weighted Laplacian, i.e. a face-midpoint quadrature
    /// `sum_faces s_i (u_{i+1} - u_i)² * area / h`.
    pub fn dirichlet(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let m = self.len();
        let mut acc = 0.0;
        for k in 0..m {
            let up = if k + 1 < m { u[k + 1] } else { 0.0 };
            let d = up - u[k];
            acc += self.face[k] * d * d;
        }
        Ok(acc)
    }

    /// Bilinear Dirichlet form `∫ ∇u·∇v` over the same faces as
    /// [`dirichlet`](Self::dirichlet).
    pub fn dirichlet_bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let m = self.len();
        let mut acc = 0.0;
        for k in 0..m {
            let (up, vp) = if k + 1 < m {
                (u[k + 1], v[k + 1])
            } else {
                (0.0, 0.0)
            };
            acc += self.face[k] * (up - u[k]) * (vp - v[k]);
        }
        Ok(acc)
    }

    /// Linear interpolation of nodal values at radius `r`, extended evenly
    /// across 0 and by zero beyond `rho`.
    pub fn interp(&self, u: &[f64], r: f64) -> f64 {
        let r = r.abs();
        if r >= self.rho {
            return 0.0;
        }
        let m = self.len();
        if r <= self.h {
            // between the axis and the first node: flat by even symmetry
            return u[0];
        }
        let t = r / self.h;
        let i = t.floor() as usize; // node index (1-based radius i*h)
        let frac = t - i as f64;
        let lo = u[i - 1];
        let hi = if i < m { u[i] } else { 0.0 };
        lo + frac * (hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn build_examples() {
        let g = RadialGrid::build(2, 8.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.03125);
        let g = RadialGrid::build(3, 1.0, 4).unwrap();
        let nodes: Vec<f64> = (0..g.len()).map(|k| g.radius(k)).collect();
        assert_eq!(nodes, vec![0.25, 0.5, 0.75]);
        assert!(RadialGrid::build(2, -1.0, 10).is_err());
        assert!(RadialGrid::build(4, 1.0, 10).is_err());
        assert!(RadialGrid::build(2, 1.0, 2).is_err());
    }

    #[test]
    fn laplacian_quadratic_dim1() {
        // u = r (rho - r) has u'' = -2; central differences are exact away
        // from the symmetry row (the even extension of this u has a kink at 0).
        let rho = 2.0;
        let g = RadialGrid::build(1, rho, 64).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|k| g.radius(k) * (rho - g.radius(k))).collect();
        let lap = g.laplacian(&u).unwrap();
        for k in 1..g.len() {
            assert!((lap[k] + 2.0).abs() < 1e-9, "node {k}: {}", lap[k]);
        }
    }

    #[test]
    fn laplacian_quadratic_dim3() {
        // u = 1 - r^2/rho^2 satisfies the boundary condition and has
        // Δu = u'' + 2u'/r = -6/rho^2 at every node, including the first.
        let rho = 1.5;
        let g = RadialGrid::build(3, rho, 48).unwrap();
        let u: Vec<f64> = (0..g.len())
            .map(|k| 1.0 - g.radius(k) * g.radius(k) / (rho * rho))
            .collect();
        let lap = g.laplacian(&u).unwrap();
        for (k, v) in lap.iter().enumerate() {
            assert!((v + 6.0 / (rho * rho)).abs() < 1e-9, "node {k}: {v}");
        }
    }

    #[test]
    fn laplacian_zero() {
        let g = RadialGrid::build(2, 1.0, 16).unwrap();
        let lap = g.laplacian(&vec![0.0; g.len()]).unwrap();
        assert!(lap.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrate_disk_area() {
        // f = 1 on the unit disk: integral pi within 2% at n = 256
        // (midpoint rule on r gives pi * (1 - 1/n) exactly).
        let g = RadialGrid::build(2, 1.0, 256).unwrap();
        let area = g.integrate(&vec![1.0; g.len()]).unwrap();
        assert!((area - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI);
        assert_eq!(g.integrate(&vec![0.0; g.len()]).unwrap(), 0.0);
    }

    #[test]
    fn weighted_laplacian_symmetric() {
        // <(-Δu), v>_w = <u, (-Δv)>_w for random pairs, all dimensions.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let g = RadialGrid::build(dim, 3.0, 40).unwrap();
            for _ in 0..20 {
                let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let lu = g.laplacian(&u).unwrap();
                let lv = g.laplacian(&v).unwrap();
                let a: f64 = lu.iter().zip(&v).zip(g.weights()).map(|((x, y), w)| -x * y * w).sum();
                let b: f64 = lv.iter().zip(&u).zip(g.weights()).map(|((x, y), w)| -x * y * w).sum();
                assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "dim {dim}: {a} vs {b}");
                // positive semidefinite: <-Δu, u>_w = dirichlet(u) >= 0
                let quad: f64 =
                    lu.iter().zip(&u).zip(g.weights()).map(|((x, y), w)| -x * y * w).sum();
                assert!(quad >= -1e-12);
                let dir = g.dirichlet(&u).unwrap();
                assert!((quad - dir).abs() <= 1e-10 * (1.0 + dir.abs()));
            }
        }
    }

    #[test]
    fn interp_roundtrip() {
        let g = RadialGrid::build(2, 2.0, 32).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|k| (-g.radius(k)).exp()).collect();
        for k in 0..g.len() {
            assert_eq!(g.interp(&u, g.radius(k)), u[k]);
        }
        assert_eq!(g.interp(&u, 5.0), 0.0);
        assert_eq!(g.interp(&u, 0.0), u[0]);
    }
}
