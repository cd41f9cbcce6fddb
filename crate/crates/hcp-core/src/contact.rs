//! Penalty contact against horizontal planes with optional rectangular
//! hole cut-outs.
//!
//! Normal force is a clamped spring-damper on penetration depth;
//! tangential force is Coulomb friction smoothed with tanh. Points whose
//! footprint lies inside the hole feel nothing, which is what lets a peg
//! pass through. Penetration depth saturates at `max_penetration` so a
//! point that ends up far below the plane cannot produce unbounded
//! forces.

use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContactModel {
    /// Normal spring stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N·s/m).
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction_coeff: f64,
    /// Tangential smoothing velocity (m/s).
    pub smoothing_velocity: f64,
    /// Penetration depth at which the spring saturates (m).
    pub max_penetration: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        ContactModel {
            stiffness: 1e4,
            damping: 100.0,
            friction_coeff: 1.0,
            smoothing_velocity: 0.01,
            max_penetration: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectHole {
    pub center_x: f64,
    pub center_y: f64,
    pub half_x: f64,
    pub half_y: f64,
}

/// Horizontal plane at `height`, optionally with a hole cut out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surface {
    pub height: f64,
    pub hole: Option<RectHole>,
    pub model: ContactModel,
}

impl Surface {
    pub fn plane(height: f64, model: ContactModel) -> Surface {
        Surface {
            height,
            hole: None,
            model,
        }
    }

    pub fn with_hole(height: f64, hole: RectHole, model: ContactModel) -> Surface {
        Surface {
            height,
            hole: Some(hole),
            model,
        }
    }

    /// Whether a sphere of `radius` centered at (x, y) fits inside the
    /// hole footprint.
    fn in_hole(&self, x: f64, y: f64, radius: f64) -> bool {
        match self.hole {
            Some(h) => {
                (x - h.center_x).abs() < h.half_x - radius
                    && (y - h.center_y).abs() < h.half_y - radius
            }
            None => false,
        }
    }
}

/// Contact force on a sphere of `radius` at `point` moving at `velocity`.
///
/// Returns `None` when there is no contact.
pub fn contact_force(
    point: &Vec3,
    velocity: &Vec3,
    surface: &Surface,
    radius: f64,
) -> Option<Vec3> {
    let depth = surface.height - (point.z - radius);
    if depth <= 0.0 || surface.in_hole(point.x, point.y, radius) {
        return None;
    }
    let m = &surface.model;
    let normal = (m.stiffness * depth.min(m.max_penetration) - m.damping * velocity.z).max(0.0);
    if normal == 0.0 {
        return None;
    }
    let vt = Vec3::new(velocity.x, velocity.y, 0.0);
    let speed = vt.norm();
    let tangential = if speed > 1e-12 {
        let mag = m.friction_coeff * normal * crate::fmath::tanh(speed / m.smoothing_velocity);
        -vt * (mag / speed)
    } else {
        Vec3::zeros()
    };
    Some(Vec3::new(tangential.x, tangential.y, normal))
}
