//! Masked Cartesian grid: a boolean lattice mask over a bounding box with
//! homogeneous Dirichlet data on everything outside the mask.
//!
//! Nodes are cell-centered at `origin + ((i+1/2)h, (j+1/2)h)`. The Laplacian
//! is the 5-point stencil with outside neighbors contributing 0, and the
//! Dirichlet integral counts every lattice edge with at least one inside
//! endpoint exactly once, so it is exactly the quadratic form of the stencil.

use crate::error::{Error, Result};

const OUTSIDE: usize = usize::MAX;

/// Direction order used for neighbor tables: west, east, south, north.
const DIRS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    /// Lattice mask, row-major `j * nx + i`.
    inside: Vec<bool>,
    /// Lattice cell of each inside node, row-major order.
    cells: Vec<(usize, usize)>,
    /// Lattice index -> dense node index (or OUTSIDE).
    node_of_cell: Vec<usize>,
    /// Dense node index -> [W, E, S, N] dense neighbor index (or OUTSIDE).
    neighbors: Vec<[usize; 4]>,
}

impl MaskedGrid {
    /// Build from an explicit lattice mask. Fails when the mask is empty or
    /// splits into several 4-connected components.
    pub fn from_mask(
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        inside: Vec<bool>,
    ) -> Result<Self> {
        let grid = Self::from_mask_unchecked(nx, ny, h, origin, inside)?;
        let components = grid.component_count();
        if components != 1 {
            return Err(Error::MaskNotConnected { components });
        }
        Ok(grid)
    }

    /// As [`from_mask`](Self::from_mask) but tolerating disconnected masks;
    /// erosions of multiply-lobed domains are legitimately disconnected.
    pub fn from_mask_unchecked(
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        inside: Vec<bool>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || inside.len() != nx * ny {
            return Err(Error::invalid("mask", "mask dimensions do not match data"));
        }
        if !(h > 0.0) {
            return Err(Error::invalid("h", format!("spacing must be positive, got {h}")));
        }
        let mut cells = Vec::new();
        let mut node_of_cell = vec![OUTSIDE; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if inside[j * nx + i] {
                    node_of_cell[j * nx + i] = cells.len();
                    cells.push((i, j));
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::invalid("mask", "mask has no inside cells"));
        }
        let neighbors = cells
            .iter()
            .map(|&(i, j)| {
                let mut nbr = [OUTSIDE; 4];
                for (d, &(di, dj)) in DIRS.iter().enumerate() {
                    let ii = i as i64 + di;
                    let jj = j as i64 + dj;
                    if ii >= 0 && jj >= 0 && (ii as usize) < nx && (jj as usize) < ny {
                        nbr[d] = node_of_cell[jj as usize * nx + ii as usize];
                    }
                }
                nbr
            })
            .collect();
        Ok(MaskedGrid {
            nx,
            ny,
            h,
            origin,
            inside,
            cells,
            node_of_cell,
            neighbors,
        })
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.cells.len()];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.cells.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(k) = stack.pop() {
                for &nb in &self.neighbors[k] {
                    if nb != OUTSIDE && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
        components
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn mask(&self) -> &[bool] {
        &self.inside
    }

    /// Number of inside nodes.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Position of inside node `k` (cell center).
    pub fn position(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.cells[k];
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    /// Dense node index at lattice cell `(i, j)`, if inside.
    pub fn node_at(&self, i: usize, j: usize) -> Option<usize> {
        if i < self.nx && j < self.ny {
            let k = self.node_of_cell[j * self.nx + i];
            (k != OUTSIDE).then_some(k)
        } else {
            None
        }
    }

    /// Dense node index containing point `p`, if inside the mask.
    pub fn node_containing(&self, p: [f64; 2]) -> Option<usize> {
        let i = ((p[0] - self.origin[0]) / self.h).floor();
        let j = ((p[1] - self.origin[1]) / self.h).floor();
        if i < 0.0 || j < 0.0 {
            return None;
        }
        self.node_at(i as usize, j as usize)
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

    /// Cell-area quadrature `sum f * h^2`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(f.iter().sum::<f64>() * self.h * self.h)
    }

    /// 5-point stencil `(u_E + u_W + u_N + u_S - 4 u) / h^2`, outside
    /// neighbors contributing 0.
    pub fn laplacian(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let h2 = self.h * self.h;
        let out = (0..self.len())
            .map(|k| {
                let mut acc = -4.0 * u[k];
                for &nb in &self.neighbors[k] {
                    if nb != OUTSIDE {
                        acc += u[nb];
                    }
                }
                acc / h2
            })
            .collect();
        Ok(out)
    }

    /// Discrete Dirichlet integral `∫ |∇u|²`: one `(u_a - u_b)²` term per
    /// lattice edge touching the mask (in 2-D the h factors cancel). This is
    /// exactly `<-Δu, u>` in the cell-area quadrature.
    pub fn dirichlet(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let mut acc = 0.0;
        for k in 0..self.len() {
            let nbr = self.neighbors[k];
            // forward edges (E, N) once per inside pair; boundary edges in
            // all four directions are owned by the inside endpoint.
            for d in [1, 3] {
                let nb = nbr[d];
                let d_val = if nb == OUTSIDE { -u[k] } else { u[nb] - u[k] };
                acc += d_val * d_val;
            }
            for d in [0, 2] {
                if nbr[d] == OUTSIDE {
                    acc += u[k] * u[k];
                }
            }
        }
        Ok(acc)
    }

    /// Bilinear Dirichlet form `∫ ∇u·∇v` over the same edge set as
    /// [`dirichlet`](Self::dirichlet).
    pub fn dirichlet_bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(v)?;
        let mut acc = 0.0;
        for k in 0..self.len() {
            let nbr = self.neighbors[k];
            for d in [1, 3] {
                let nb = nbr[d];
                let (du, dv) = if nb == OUTSIDE {
                    (-u[k], -v[k])
                } else {
                    (u[nb] - u[k], v[nb] - v[k])
                };
                acc += du * dv;
            }
            for d in [0, 2] {
                if nbr[d] == OUTSIDE {
                    acc += u[k] * v[k];
                }
            }
        }
        Ok(acc)
    }

    /// Forward-difference gradient magnitude squared per cell, used by the
    /// barycenter moment.
    pub fn forward_grad_sq(&self, u: &[f64], k: usize) -> f64 {
        let nbr = self.neighbors[k];
        let de = if nbr[1] == OUTSIDE { -u[k] } else { u[nbr[1]] - u[k] };
        let dn = if nbr[3] == OUTSIDE { -u[k] } else { u[nbr[3]] - u[k] };
        (de * de + dn * dn) / (self.h * self.h)
    }

    pub fn neighbors(&self, k: usize) -> [usize; 4] {
        self.neighbors[k]
    }

    pub const fn outside() -> usize {
        OUTSIDE
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_grid(n: usize, h: f64) -> MaskedGrid {
        MaskedGrid::from_mask(n, n, h, [0.0, 0.0], vec![true; n * n]).unwrap()
    }

    #[test]
    fn laplacian_zero_and_linear() {
        let g = square_grid(16, 0.25);
        let zero = vec![0.0; g.len()];
        assert!(g.laplacian(&zero).unwrap().iter().all(|&v| v == 0.0));

        // u = x is harmonic; check away from the boundary coupling.
        let u: Vec<f64> = (0..g.len()).map(|k| g.position(k)[0]).collect();
        let lap = g.laplacian(&u).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.cells()[k];
            if (2..14).contains(&i) && (2..14).contains(&j) {
                assert!(lap[k].abs() < 1e-10, "cell ({i},{j}): {}", lap[k]);
            }
        }
    }

    #[test]
    fn laplacian_quadratic() {
        let g = square_grid(20, 0.1);
        let u: Vec<f64> = (0..g.len())
            .map(|k| {
                let p = g.position(k);
                p[0] * p[0] + p[1] * p[1]
            })
            .collect();
        let lap = g.laplacian(&u).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.cells()[k];
            if (2..18).contains(&i) && (2..18).contains(&j) {
                assert!((lap[k] - 4.0).abs() < 1e-9, "cell ({i},{j}): {}", lap[k]);
            }
        }
    }

    #[test]
    fn integrate_unit_square() {
        // 1x1 box fully masked: measure exactly 1 when 1/h is an integer.
        let g = square_grid(16, 1.0 / 16.0);
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_is_stencil_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // an L-shaped mask to exercise irregular boundaries
        let n = 12;
        let mask: Vec<bool> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx % n, idx / n);
                i < 8 || j < 5
            })
            .collect();
        let g = MaskedGrid::from_mask(n, n, 0.5, [0.0, 0.0], mask).unwrap();
        for _ in 0..10 {
            let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lap = g.laplacian(&u).unwrap();
            let h2 = g.spacing() * g.spacing();
            let quad: f64 = lap.iter().zip(&u).map(|(l, v)| -l * v * h2).sum();
            let dir = g.dirichlet(&u).unwrap();
            assert!((quad - dir).abs() <= 1e-10 * (1.0 + dir.abs()));
        }
    }

    #[test]
    fn disconnected_mask_rejected() {
        let n = 5;
        let mask: Vec<bool> = (0..n * n)
            .map(|idx| {
                let i = idx % n;
                i != 2 // two vertical strips
            })
            .collect();
        match MaskedGrid::from_mask(n, n, 1.0, [0.0, 0.0], mask) {
            Err(Error::MaskNotConnected { components }) => assert_eq!(components, 2),
            other => panic!("expected MaskNotConnected, got {other:?}"),
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = square_grid(4, 1.0);
        assert!(g.laplacian(&[0.0; 3]).is_err());
        assert!(g.integrate(&[0.0; 3]).is_err());
    }
}
