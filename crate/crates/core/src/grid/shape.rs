//! Domain shapes, their signed-distance tests and the morphological sets
//! D^- (2r-erosion) and D^+ (r-dilation) used for start placement and
//! barycenter localization checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::masked::MaskedGrid;

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Geometric shape of a 2-D domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Ball {
        center: [f64; 2],
        rho: f64,
    },
    /// Annulus `B_{gamma*rho}(center) \ B_rho(center)`, `gamma > 1`.
    Annulus {
        center: [f64; 2],
        rho: f64,
        gamma: f64,
    },
    /// Axis-aligned rectangle spanned by two opposite corners.
    Rectangle {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    /// Two balls of radius `lobe_rho` centered at `center ± (separation/2, 0)`
    /// joined by a horizontal neck of half-width `neck_halfwidth`.
    Dumbbell {
        center: [f64; 2],
        lobe_rho: f64,
        separation: f64,
        neck_halfwidth: f64,
    },
    /// Arbitrary rasterized domain loaded from a mask file.
    Mask {
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        inside: Vec<bool>,
    },
}

impl Shape {
    /// Standard dumbbell: two unit balls centered 4 apart with a neck of
    /// half-width 0.3 (all parameters remain config-visible).
    pub fn default_dumbbell() -> Shape {
        Shape::Dumbbell {
            center: [0.0, 0.0],
            lobe_rho: 1.0,
            separation: 4.0,
            neck_halfwidth: 0.3,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Ball { center, rho } => dist2(p, *center) <= rho * rho,
            Shape::Annulus { center, rho, gamma } => {
                let d2 = dist2(p, *center);
                d2 >= rho * rho && d2 <= (gamma * rho) * (gamma * rho)
            }
            Shape::Rectangle { lo, hi } => {
                p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
            }
            Shape::Dumbbell {
                center,
                lobe_rho,
                separation,
                neck_halfwidth,
            } => {
                let c1 = [center[0] - separation / 2.0, center[1]];
                let c2 = [center[0] + separation / 2.0, center[1]];
                dist2(p, c1) <= lobe_rho * lobe_rho
                    || dist2(p, c2) <= lobe_rho * lobe_rho
                    || (p[0] >= c1[0]
                        && p[0] <= c2[0]
                        && (p[1] - center[1]).abs() <= *neck_halfwidth)
            }
            Shape::Mask {
                nx,
                ny,
                h,
                origin,
                inside,
            } => {
                let i = ((p[0] - origin[0]) / h).floor();
                let j = ((p[1] - origin[1]) / h).floor();
                if i < 0.0 || j < 0.0 || i as usize >= *nx || j as usize >= *ny {
                    return false;
                }
                inside[j as usize * nx + i as usize]
            }
        }
    }

    /// Bounding box `(lo, hi)` of the shape.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape::Ball { center, rho } => (
                [center[0] - rho, center[1] - rho],
                [center[0] + rho, center[1] + rho],
            ),
            Shape::Annulus { center, rho, gamma } => {
                let out = gamma * rho;
                (
                    [center[0] - out, center[1] - out],
                    [center[0] + out, center[1] + out],
                )
            }
            Shape::Rectangle { lo, hi } => (*lo, *hi),
            Shape::Dumbbell {
                center,
                lobe_rho,
                separation,
                ..
            } => {
                let half = separation / 2.0 + lobe_rho;
                (
                    [center[0] - half, center[1] - lobe_rho],
                    [center[0] + half, center[1] + lobe_rho],
                )
            }
            Shape::Mask {
                nx, ny, h, origin, ..
            } => (
                *origin,
                [origin[0] + *nx as f64 * h, origin[1] + *ny as f64 * h],
            ),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Ball { rho, .. } => 2.0 * rho,
            Shape::Annulus { rho, gamma, .. } => 2.0 * gamma * rho,
            Shape::Rectangle { lo, hi } => dist2(*lo, *hi).sqrt(),
            Shape::Dumbbell {
                lobe_rho,
                separation,
                ..
            } => separation + 2.0 * lobe_rho,
            Shape::Mask { .. } => {
                let (lo, hi) = self.bounding_box();
                dist2(lo, hi).sqrt()
            }
        }
    }

    /// A designated interior point around which an inscribed ball fits;
    /// the role the origin plays after the usual "assume 0 in D" recentering.
    pub fn anchor(&self) -> [f64; 2] {
        match self {
            Shape::Ball { center, .. } => *center,
            Shape::Annulus { center, rho, gamma } => {
                [center[0] + 0.5 * (1.0 + gamma) * rho, center[1]]
            }
            Shape::Rectangle { lo, hi } => [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
            Shape::Dumbbell {
                center, separation, ..
            } => [center[0] + separation / 2.0, center[1]],
            Shape::Mask { .. } => self.deepest_point(),
        }
    }

    /// Point of (approximately) maximal distance to the complement, found by
    /// brute force over the raster for mask shapes.
    fn deepest_point(&self) -> [f64; 2] {
        if let Shape::Mask {
            nx,
            ny,
            h,
            origin,
            inside,
        } = self
        {
            let mut best = [origin[0], origin[1]];
            let mut best_d = -1.0;
            for j in 0..*ny {
                for i in 0..*nx {
                    if !inside[j * nx + i] {
                        continue;
                    }
                    let p = [
                        origin[0] + (i as f64 + 0.5) * h,
                        origin[1] + (j as f64 + 0.5) * h,
                    ];
                    let d = self.distance_to_complement(p);
                    if d > best_d {
                        best_d = d;
                        best = p;
                    }
                }
            }
            best
        } else {
            unreachable!()
        }
    }

    /// Distance from a point of D to the complement of D (0 outside D).
    /// Exact for ball/annulus/rectangle; sampled boundary for the dumbbell;
    /// brute force against outside cells for masks.
    pub fn distance_to_complement(&self, p: [f64; 2]) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        match self {
            Shape::Ball { center, rho } => rho - dist2(p, *center).sqrt(),
            Shape::Annulus { center, rho, gamma } => {
                let d = dist2(p, *center).sqrt();
                (d - rho).min(gamma * rho - d)
            }
            Shape::Rectangle { lo, hi } => (p[0] - lo[0])
                .min(hi[0] - p[0])
                .min(p[1] - lo[1])
                .min(hi[1] - p[1]),
            Shape::Dumbbell { .. } => {
                let samples = self.boundary_samples(2048);
                samples
                    .iter()
                    .map(|&q| dist2(p, q).sqrt())
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Mask {
                nx,
                ny,
                h,
                origin,
                inside,
            } => {
                // distance to the nearest outside cell center, or to the box edge
                let mut best = (p[0] - origin[0])
                    .min(origin[0] + *nx as f64 * h - p[0])
                    .min(p[1] - origin[1])
                    .min(origin[1] + *ny as f64 * h - p[1]);
                for j in 0..*ny {
                    for i in 0..*nx {
                        if inside[j * nx + i] {
                            continue;
                        }
                        let q = [
                            origin[0] + (i as f64 + 0.5) * h,
                            origin[1] + (j as f64 + 0.5) * h,
                        ];
                        best = best.min(dist2(p, q).sqrt());
                    }
                }
                best.max(0.0)
            }
        }
    }

    /// Distance from a point to the shape (0 inside). Exact for all analytic
    /// shapes; the dumbbell is a union so the minimum over members is exact.
    pub fn distance_to_shape(&self, p: [f64; 2]) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        match self {
            Shape::Ball { center, rho } => dist2(p, *center).sqrt() - rho,
            Shape::Annulus { center, rho, gamma } => {
                let d = dist2(p, *center).sqrt();
                if d < *rho {
                    rho - d
                } else {
                    d - gamma * rho
                }
            }
            Shape::Rectangle { lo, hi } => {
                let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
                let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
                (dx * dx + dy * dy).sqrt()
            }
            Shape::Dumbbell {
                center,
                lobe_rho,
                separation,
                neck_halfwidth,
            } => {
                let c1 = [center[0] - separation / 2.0, center[1]];
                let c2 = [center[0] + separation / 2.0, center[1]];
                let d1 = dist2(p, c1).sqrt() - lobe_rho;
                let d2 = dist2(p, c2).sqrt() - lobe_rho;
                let neck = Shape::Rectangle {
                    lo: [c1[0], center[1] - neck_halfwidth],
                    hi: [c2[0], center[1] + neck_halfwidth],
                };
                d1.min(d2).min(neck.distance_to_shape(p)).max(0.0)
            }
            Shape::Mask {
                nx,
                ny,
                h,
                origin,
                inside,
            } => {
                let mut best = f64::INFINITY;
                for j in 0..*ny {
                    for i in 0..*nx {
                        if !inside[j * nx + i] {
                            continue;
                        }
                        let q = [
                            origin[0] + (i as f64 + 0.5) * h,
                            origin[1] + (j as f64 + 0.5) * h,
                        ];
                        best = best.min(dist2(p, q).sqrt());
                    }
                }
                best
            }
        }
    }

    /// Points sampled along the topological boundary of the shape (samples
    /// of member boundaries that are not interior to another member).
    fn boundary_samples(&self, per_part: usize) -> Vec<[f64; 2]> {
        match self {
            Shape::Dumbbell {
                center,
                lobe_rho,
                separation,
                neck_halfwidth,
            } => {
                let c1 = [center[0] - separation / 2.0, center[1]];
                let c2 = [center[0] + separation / 2.0, center[1]];
                let mut samples = Vec::new();
                let interior = |q: [f64; 2]| {
                    let eps = 1e-9;
                    dist2(q, c1).sqrt() < lobe_rho - eps
                        || dist2(q, c2).sqrt() < lobe_rho - eps
                        || (q[0] > c1[0] + eps
                            && q[0] < c2[0] - eps
                            && (q[1] - center[1]).abs() < neck_halfwidth - eps)
                };
                for c in [c1, c2] {
                    for k in 0..per_part {
                        let t = std::f64::consts::TAU * k as f64 / per_part as f64;
                        let q = [c[0] + lobe_rho * t.cos(), c[1] + lobe_rho * t.sin()];
                        if !interior(q) {
                            samples.push(q);
                        }
                    }
                }
                // the two horizontal neck walls
                for k in 0..=per_part {
                    let x = c1[0] + (c2[0] - c1[0]) * k as f64 / per_part as f64;
                    for y in [center[1] - neck_halfwidth, center[1] + neck_halfwidth] {
                        let q = [x, y];
                        if !interior(q) && self.contains(q) {
                            samples.push(q);
                        }
                    }
                }
                samples
            }
            _ => unreachable!("boundary sampling is only needed for union shapes"),
        }
    }

    /// Membership in the eroded set `{x in D : d(x, ∂D) >= dist}`.
    pub fn contains_eroded(&self, p: [f64; 2], dist: f64) -> bool {
        self.contains(p) && self.distance_to_complement(p) >= dist
    }

    /// Membership in the dilated set `{x : d(x, D) <= dist}`.
    pub fn contains_dilated(&self, p: [f64; 2], dist: f64) -> bool {
        self.distance_to_shape(p) <= dist
    }
}

/// A shape together with the localization radius `r` and the user-supplied
/// topology hint (the number of solutions the multiplicity experiment is
/// compared against).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shape: Shape,
    /// Localization radius used for D^+ = dilate(D, r) and D^- = erode(D, 2r).
    pub r: f64,
    /// Lusternik-Schnirelmann category of the shape, supplied per shape.
    pub cat_hint: u32,
}

impl Domain {
    pub fn new(shape: Shape, r: f64, cat_hint: u32) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid("r", format!("must be positive, got {r}")));
        }
        if let Shape::Annulus { rho, gamma, .. } = &shape {
            if !(*rho > 0.0) {
                return Err(Error::invalid("rho", "annulus inner radius must be positive"));
            }
            if !(*gamma > 1.0) {
                return Err(Error::invalid("gamma", format!("must exceed 1, got {gamma}")));
            }
        }
        let domain = Domain { shape, r, cat_hint };
        if domain.gamma() <= 1.0 {
            return Err(Error::invalid(
                "r",
                "localization radius too large: gamma = 2 diam/r must exceed 1",
            ));
        }
        // the inscribed ball at the anchor must fit with radius r
        let anchor = domain.shape.anchor();
        if domain.shape.distance_to_complement(anchor) < domain.r {
            return Err(Error::invalid(
                "r",
                format!(
                    "no ball of radius {} fits inside the shape at its anchor {:?}",
                    domain.r, anchor
                ),
            ));
        }
        Ok(domain)
    }

    /// `gamma = 2 diam(D) / r`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.shape.diameter() / self.r
    }

    /// Rasterize D at spacing `h`.
    pub fn grid(&self, h: f64) -> Result<MaskedGrid> {
        self.masked(h, 0.0, Morph::None)
    }

    /// Rasterize D^- = erode(D, 2r).
    pub fn dminus_grid(&self, h: f64) -> Result<MaskedGrid> {
        self.masked(h, 2.0 * self.r, Morph::Erode)
    }

    /// Rasterize an eroded/dilated copy at an arbitrary distance.
    pub fn eroded_grid(&self, dist: f64, h: f64) -> Result<MaskedGrid> {
        self.masked(h, dist, Morph::Erode)
    }

    pub fn dilated_grid(&self, dist: f64, h: f64) -> Result<MaskedGrid> {
        self.masked(h, dist, Morph::Dilate)
    }

    fn masked(&self, h: f64, dist: f64, morph: Morph) -> Result<MaskedGrid> {
        if !(h > 0.0) {
            return Err(Error::invalid("h", format!("must be positive, got {h}")));
        }
        if dist < 0.0 {
            return Err(Error::invalid("dist", format!("must be nonnegative, got {dist}")));
        }
        let (lo, hi) = self.shape.bounding_box();
        let pad = match morph {
            Morph::Dilate => dist + h,
            _ => 0.0,
        };
        // snap the origin to the spacing so translated shapes stay on-lattice
        let ox = ((lo[0] - pad) / h).floor() * h;
        let oy = ((lo[1] - pad) / h).floor() * h;
        let nx = (((hi[0] + pad) - ox) / h).ceil() as usize + 1;
        let ny = (((hi[1] + pad) - oy) / h).ceil() as usize + 1;
        let mut inside = vec![false; nx * ny];
        let mut any = false;
        for j in 0..ny {
            for i in 0..nx {
                let p = [ox + (i as f64 + 0.5) * h, oy + (j as f64 + 0.5) * h];
                let hit = match morph {
                    Morph::None => self.shape.contains(p),
                    Morph::Erode => self.shape.contains_eroded(p, dist),
                    Morph::Dilate => self.shape.contains_dilated(p, dist),
                };
                if hit {
                    inside[j * nx + i] = true;
                    any = true;
                }
            }
        }
        if !any {
            return Err(Error::EmptyErosion { dist });
        }
        match morph {
            // the PDE domain itself must be a single component
            Morph::None => MaskedGrid::from_mask(nx, ny, h, [ox, oy], inside),
            // D^- / D^+ are point sets and may fall apart (dumbbell erosion)
            _ => MaskedGrid::from_mask_unchecked(nx, ny, h, [ox, oy], inside),
        }
    }
}

enum Morph {
    None,
    Erode,
    Dilate,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_erode_is_smaller_ball() {
        let shape = Shape::Ball {
            center: [0.0, 0.0],
            rho: 1.0,
        };
        let smaller = Shape::Ball {
            center: [0.0, 0.0],
            rho: 0.75,
        };
        let dom = Domain::new(shape, 0.1, 1).unwrap();
        let g = dom.eroded_grid(0.25, 1.0 / 32.0).unwrap();
        for k in 0..g.len() {
            assert!(smaller.contains(g.position(k)));
        }
        assert!(g.len() > 0);
    }

    #[test]
    fn annulus_dilate_exact() {
        let shape = Shape::Annulus {
            center: [0.0, 0.0],
            rho: 1.0,
            gamma: 2.0,
        };
        let dom = Domain::new(shape, 0.2, 2).unwrap();
        let g = dom.dilated_grid(0.1, 0.05).unwrap();
        let widened = Shape::Annulus {
            center: [0.0, 0.0],
            rho: 0.9,
            gamma: 2.1 / 0.9,
        };
        for k in 0..g.len() {
            assert!(widened.contains(g.position(k)), "{:?}", g.position(k));
        }
    }

    #[test]
    fn erode_too_far_is_error() {
        let dom = Domain::new(
            Shape::Ball {
                center: [0.0, 0.0],
                rho: 1.0,
            },
            0.1,
            1,
        )
        .unwrap();
        match dom.eroded_grid(1.5, 0.05) {
            Err(Error::EmptyErosion { .. }) => {}
            other => panic!("expected EmptyErosion, got {other:?}"),
        }
    }

    #[test]
    fn erode_subset_shape_subset_dilate() {
        let dom = Domain::new(Shape::default_dumbbell(), 0.25, 2).unwrap();
        let h = 0.1;
        let eroded = dom.eroded_grid(0.3, h).unwrap();
        let dilated = dom.dilated_grid(0.3, h).unwrap();
        for k in 0..eroded.len() {
            let p = eroded.position(k);
            assert!(dom.shape.contains(p), "eroded point {p:?} not in shape");
        }
        let plain = dom.grid(h).unwrap();
        for k in 0..plain.len() {
            let p = plain.position(k);
            assert!(dom.shape.contains_dilated(p, 0.3), "{p:?} not in dilation");
        }
        assert!(eroded.len() < plain.len());
        assert!(plain.len() < dilated.len());
    }

    #[test]
    fn dumbbell_neck_keeps_mask_connected() {
        let dom = Domain::new(Shape::default_dumbbell(), 0.25, 2).unwrap();
        let g = dom.grid(1.0 / 16.0).unwrap();
        assert!(g.len() > 0);
        // anchor ball fits
        let anchor = dom.shape.anchor();
        assert!(dom.shape.distance_to_complement(anchor) >= dom.r);
    }

    #[test]
    fn refinement_consistency_for_lipschitz_integrand() {
        // integrate f = |x| over the unit ball at h and h/2: difference O(h)
        let dom = Domain::new(
            Shape::Ball {
                center: [0.0, 0.0],
                rho: 1.0,
            },
            0.1,
            1,
        )
        .unwrap();
        let eval = |h: f64| {
            let g = dom.grid(h).unwrap();
            let f: Vec<f64> = (0..g.len())
                .map(|k| {
                    let p = g.position(k);
                    (p[0] * p[0] + p[1] * p[1]).sqrt()
                })
                .collect();
            g.integrate(&f).unwrap()
        };
        let h = 0.05;
        let coarse = eval(h);
        let fine = eval(h / 2.0);
        assert!((coarse - fine).abs() <= 4.0 * h, "{coarse} vs {fine}");
    }
}
