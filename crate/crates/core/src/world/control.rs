//! Parallel position/force control with a diagonal selection matrix.
//!
//! ```text
//! x_c = S (Kp_x x_e + Kd_x dx_e) + a_x + (I - S)(Kp_f F_e + Ki_f int F_e dt)
//! ```
//!
//! Only the translational axes `(y, z)` are commanded; rotation is left to
//! the alignment policy.

use crate::error::{Error, Result};

pub const AXES: usize = 2;
pub type Vec2 = [f64; AXES];

/// Diagonal gain matrices, one entry per translational axis `(y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ControllerGains {
    pub kp_x: Vec2,
    pub kd_x: Vec2,
    pub kp_f: Vec2,
    pub ki_f: Vec2,
    /// Diagonal of `S`, each entry in `[0, 1]`: 1 is pure position control.
    pub selection: Vec2,
    /// Residual position action added to the command.
    pub a_x: Vec2,
}

impl Default for ControllerGains {
    /// Position control laterally, force control along the insertion axis.
    fn default() -> Self {
        ControllerGains {
            kp_x: [1.5, 1.5],
            kd_x: [0.1, 0.1],
            kp_f: [0.4, 0.4],
            ki_f: [0.05, 0.05],
            selection: [1.0, 0.0],
            a_x: [0.0, 0.0],
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        if self.selection.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::config("selection matrix entries must lie in [0, 1]"));
        }
        let all = [self.kp_x, self.kd_x, self.kp_f, self.ki_f, self.a_x];
        if all.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("controller gains must be finite"));
        }
        Ok(())
    }
}

/// The control law, evaluated componentwise.
pub fn hybrid_command(
    gains: &ControllerGains,
    position_error: Vec2,
    position_error_rate: Vec2,
    force_error: Vec2,
    force_error_integral: Vec2,
) -> Vec2 {
    let mut x_c = [0.0; AXES];
    for i in 0..AXES {
        let s = gains.selection[i];
        let position = gains.kp_x[i] * position_error[i] + gains.kd_x[i] * position_error_rate[i];
        let force = gains.kp_f[i] * force_error[i] + gains.ki_f[i] * force_error_integral[i];
        x_c[i] = s * position + gains.a_x[i] + (1.0 - s) * force;
    }
    x_c
}
