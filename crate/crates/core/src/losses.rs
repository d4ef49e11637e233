//! Objective terms and their combination.
//!
//! Paths are indexed `(j, k)`: `j` selects the geometry/material path
//! (0 = source, 1 = symmetry-transformed) and `k` the lighting path. The total
//! is `Σ_{j,k} (1 + (λλ − 1) j) (L^col_jk + λ^d L^diff_jk + λ^l L^light_jk + λ^e L^eik_j)`,
//! so the eikonal term of path `j` appears once per lighting index.

use core::fmt;

use thiserror::Error;

use crate::math::Vec3;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("symmetricity must lie in [0, 1], got {0}")]
    Symmetricity(f64),
    #[error("loss weight `{0}` must be non-negative")]
    NegativeWeight(&'static str),
    #[error("unknown loss term `{0}`")]
    UnknownTerm(alloc::string::String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub symmetricity: f64,
    pub diffuse: f64,
    pub lighting: f64,
    pub eikonal: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { symmetricity: 0.1, diffuse: 0.01, lighting: 0.001, eikonal: 0.1 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        if !(0.0..=1.0).contains(&self.symmetricity) {
            return Err(LossError::Symmetricity(self.symmetricity));
        }
        for (name, v) in [("diffuse", self.diffuse), ("lighting", self.lighting), ("eikonal", self.eikonal)] {
            if !(v >= 0.0) {
                return Err(LossError::NegativeWeight(name));
            }
        }
        Ok(())
    }

    /// `1` for the source path, `λλ` for the transformed path.
    pub fn path_factor(&self, j: usize) -> f64 {
        1.0 + (self.symmetricity - 1.0) * j as f64
    }
}

/// Per-term enable flags. `transformed = false` drops every term that needs
/// the symmetry-transformed path (everything except `L^col_00`,
/// `L^diff_00` and `L^eik_0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LossSwitches {
    pub colour01: bool,
    pub colour10: bool,
    pub colour11: bool,
    pub diffuse: bool,
    pub lighting: bool,
    pub transformed: bool,
}

impl Default for LossSwitches {
    fn default() -> Self {
        LossSwitches { colour01: true, colour10: true, colour11: true, diffuse: true, lighting: true, transformed: true }
    }
}

impl LossSwitches {
    /// Disables a term by its command-line name.
    pub fn disable(&mut self, term: &str) -> Result<(), LossError> {
        match term {
            "colour01" => self.colour01 = false,
            "colour10" => self.colour10 = false,
            "colour11" => self.colour11 = false,
            "diffuse" => self.diffuse = false,
            "lighting" => self.lighting = false,
            other => return Err(LossError::UnknownTerm(other.into())),
        }
        Ok(())
    }

    pub fn colour(&self, j: usize, k: usize) -> bool {
        let on = match (j, k) {
            (0, 0) => true,
            (0, 1) => self.colour01,
            (1, 0) => self.colour10,
            _ => self.colour11,
        };
        on && self.path_available(j, k)
    }

    pub fn diffuse_on(&self, j: usize, k: usize) -> bool {
        self.diffuse && self.path_available(j, k)
    }

    /// The lighting term always feeds the source lighting heads transformed
    /// inputs (or vice versa), so it needs the transformed path.
    pub fn lighting_on(&self) -> bool {
        self.lighting && self.transformed
    }

    pub fn eikonal_on(&self, j: usize) -> bool {
        j == 0 || self.transformed
    }

    fn path_available(&self, j: usize, k: usize) -> bool {
        self.transformed || (j == 0 && k == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossTerm {
    Colour,
    Diffuse,
    Lighting,
    Eikonal,
}

/// Batch-averaged term values; disabled terms are zero. `eikonal[j]` is shared
/// by both lighting indices.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub colour: [[f64; 2]; 2],
    pub diffuse: [[f64; 2]; 2],
    pub lighting: [[f64; 2]; 2],
    pub eikonal: [f64; 2],
    pub total: f64,
}

impl LossReport {
    pub fn term(&self, term: LossTerm, j: usize, k: usize) -> f64 {
        match term {
            LossTerm::Colour => self.colour[j][k],
            LossTerm::Diffuse => self.diffuse[j][k],
            LossTerm::Lighting => self.lighting[j][k],
            LossTerm::Eikonal => self.eikonal[j],
        }
    }

    /// Recomputes `total` from the stored terms.
    pub fn finish(&mut self, w: &LossWeights) {
        self.total = total_loss(self, w);
    }

    /// Column names matching `csv_values`.
    pub fn csv_header() -> &'static str {
        "colour00,colour01,colour10,colour11,diffuse00,diffuse01,diffuse10,diffuse11,lighting00,lighting01,lighting10,lighting11,eikonal0,eikonal1,total"
    }

    pub fn csv_values(&self) -> [f64; 15] {
        let c = &self.colour;
        let d = &self.diffuse;
        let l = &self.lighting;
        [
            c[0][0], c[0][1], c[1][0], c[1][1], d[0][0], d[0][1], d[1][0], d[1][1], l[0][0], l[0][1], l[1][0], l[1][1], self.eikonal[0],
            self.eikonal[1], self.total,
        ]
    }
}

impl fmt::Display for LossReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total {:.5} | col {:.4} {:.4} {:.4} {:.4} | diff {:.4} | light {:.4} | eik {:.4} {:.4}",
            self.total,
            self.colour[0][0],
            self.colour[0][1],
            self.colour[1][0],
            self.colour[1][1],
            self.diffuse[0][0],
            self.lighting[0][0],
            self.eikonal[0],
            self.eikonal[1]
        )
    }
}

/// `(1/3) ‖ĉ − c‖₁`.
pub fn colour_loss(pred: Vec3, target: Vec3) -> f64 {
    (pred - target).abs().dot(Vec3::splat(1.0)) / 3.0
}

/// Gradient of `colour_loss` with respect to `pred` (zero at ties).
pub fn colour_loss_grad(pred: Vec3, target: Vec3) -> Vec3 {
    let s = |v: f64| {
        if v > 0.0 {
            1.0 / 3.0
        } else if v < 0.0 {
            -1.0 / 3.0
        } else {
            0.0
        }
    };
    (pred - target).map(s)
}

/// Colour loss of a render that drops the specular component:
/// `Σ w_i clamp(γ^d_i c^a_i) + (1 − Σw) c_bg`.
pub fn diffuse_loss(weights: &[f64], diffuse: &[f64], albedo: &[Vec3], background: Vec3, target: Vec3) -> f64 {
    let colours: alloc::vec::Vec<Vec3> = diffuse.iter().zip(albedo).map(|(g, a)| (*a * *g).map(|v| v.clamp(0.0, 1.0))).collect();
    colour_loss(crate::render::render_pixel(weights, &colours, background), target)
}

/// `(1/n) Σ (‖∇φ(x_i)‖ − 1)²`.
pub fn eikonal_loss(gradients: &[Vec3]) -> f64 {
    if gradients.is_empty() {
        return 0.0;
    }
    gradients.iter().map(|g| (g.norm() - 1.0).powi(2)).sum::<f64>() / gradients.len() as f64
}

/// Weighted combination of the report's terms.
pub fn total_loss(r: &LossReport, w: &LossWeights) -> f64 {
    let mut total = 0.0;
    for j in 0..2 {
        let f = w.path_factor(j);
        for k in 0..2 {
            total += f * (r.colour[j][k] + w.diffuse * r.diffuse[j][k] + w.lighting * r.lighting[j][k] + w.eikonal * r.eikonal[j]);
        }
    }
    total
}
