//! Quasi-static peg-in-hole world.
//!
//! Coordinates are millimetres in the plane of the tilt: `y` lateral, `z`
//! height of the peg tip above the hole's top surface. The peg tilt relative
//! to the end effector (`mu_true`) and the end-effector rotation (`phi_ee`)
//! are in degrees; the peg-to-hole angle is always `mu_true + phi_ee`.

mod control;
mod footprint;

use rand::Rng;

pub use control::{hybrid_command, ControllerGains, Vec2, AXES};
pub use footprint::{render_clean, render_tactile, Footprint, PegKind, PegSpec};

use crate::error::{Error, Result};
use crate::image::TiltRange;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoleSpec {
    pub clearance_mm: f64,
    pub depth_mm: f64,
    /// `(y, z)` of the hole entry; `z` is the top surface.
    pub entry: Vec2,
}

impl HoleSpec {
    pub fn new(clearance_mm: f64, depth_mm: f64) -> Self {
        HoleSpec {
            clearance_mm,
            depth_mm,
            entry: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clearance_mm > 0.0) || !(self.depth_mm > 0.0) {
            return Err(Error::config("hole clearance and depth must be positive"));
        }
        if self.entry.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("hole entry must be finite"));
        }
        Ok(())
    }
}

/// Largest peg-to-hole angle (degrees) that still fits: the clearance over
/// an engagement length equal to the peg width.
pub fn angular_tolerance_deg(hole: &HoleSpec, peg: &PegSpec) -> f64 {
    libm::atan(hole.clearance_mm / peg.width_mm).to_degrees()
}

/// Plant and contact constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WorldParams {
    /// First-order response time constant of the commanded position.
    pub time_constant: f64,
    /// Contact stiffness of surfaces and hole walls (N/mm).
    pub stiffness: f64,
    /// Lateral wrench (N) above which the grasped peg may slip.
    pub slip_force_threshold: f64,
    /// Probability per tick of a slip while the wrench exceeds the threshold.
    pub slip_probability: f64,
    /// In-contact slip magnitude distribution (degrees).
    pub slip_jitter_deg: TiltRange,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            time_constant: 1.0,
            stiffness: 2.0,
            slip_force_threshold: 0.3,
            slip_probability: 0.2,
            slip_jitter_deg: TiltRange::new(-2.0, 2.0),
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_constant > 0.0) || !(self.stiffness > 0.0) {
            return Err(Error::config("time constant and stiffness must be positive"));
        }
        if !(self.slip_force_threshold >= 0.0) || !(0.0..=1.0).contains(&self.slip_probability) {
            return Err(Error::config("slip threshold must be non-negative and probability in [0, 1]"));
        }
        if self.slip_jitter_deg.lo > self.slip_jitter_deg.hi {
            return Err(Error::config("slip jitter range must have lo <= hi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    mu_true: f64,
    phi_ee: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub insertion_depth: f64,
    pub in_contact: bool,
    /// Contact reaction on the peg `(F_y, F_z)` in newtons.
    pub wrench: Vec2,
    pub force_error_integral: Vec2,
}

impl WorldState {
    pub fn new(position: Vec2, mu_true: f64) -> Self {
        WorldState {
            mu_true,
            phi_ee: 0.0,
            position,
            velocity: [0.0; AXES],
            insertion_depth: 0.0,
            in_contact: false,
            wrench: [0.0; AXES],
            force_error_integral: [0.0; AXES],
        }
    }

    pub fn mu_true(&self) -> f64 {
        self.mu_true
    }

    pub fn phi_ee(&self) -> f64 {
        self.phi_ee
    }

    /// Peg-to-hole angle.
    pub fn theta(&self) -> f64 {
        self.mu_true + self.phi_ee
    }

    pub fn set_mu_true(&mut self, mu_true: f64) {
        self.mu_true = mu_true;
    }

    pub fn set_phi_ee(&mut self, phi_ee: f64) {
        self.phi_ee = phi_ee;
    }
}

/// Tilt-correcting action: rotate the end effector about the tool center
/// point so that it cancels the believed tilt.
pub fn apply_alignment(state: &WorldState, mu_hat: f64) -> WorldState {
    let mut next = state.clone();
    next.phi_ee = -mu_hat;
    next
}

/// Draws a slip of the grasped peg from `range` and adds it to `mu_true`.
pub fn slip<R: Rng>(state: &WorldState, range: TiltRange, rng: &mut R) -> WorldState {
    let mut next = state.clone();
    next.mu_true += range.sample(rng);
    next
}

/// In-contact slip: only valid while the peg touches the environment.
pub fn slippage_event<R: Rng>(
    state: &WorldState,
    params: &WorldParams,
    rng: &mut R,
) -> Result<WorldState> {
    if !state.in_contact {
        return Err(Error::usage("in-contact slippage requested while not in contact"));
    }
    Ok(slip(state, params.slip_jitter_deg, rng))
}

pub fn check_success(state: &WorldState, hole: &HoleSpec, peg: &PegSpec) -> bool {
    state.insertion_depth >= hole.depth_mm
        && state.theta().abs() <= angular_tolerance_deg(hole, peg)
}

/// One control tick: evaluate the control law, move the tip with a
/// first-order response, then resolve contact against the surface, the
/// hole walls and the hole bottom.
///
/// Force errors are `measured - target`, so a positive target along `z`
/// presses the peg down onto the environment.
#[allow(clippy::too_many_arguments)]
pub fn control_step(
    state: &WorldState,
    gains: &ControllerGains,
    target_pose: Vec2,
    target_force: Vec2,
    dt: f64,
    hole: &HoleSpec,
    peg: &PegSpec,
    params: &WorldParams,
) -> Result<(Vec2, WorldState)> {
    if !(dt > 0.0) {
        return Err(Error::precondition("control dt must be positive"));
    }
    let mut x_e = [0.0; AXES];
    let mut x_e_rate = [0.0; AXES];
    let mut f_e = [0.0; AXES];
    for i in 0..AXES {
        x_e[i] = target_pose[i] - state.position[i];
        x_e_rate[i] = -state.velocity[i];
        f_e[i] = state.wrench[i] - target_force[i];
    }
    let x_c = hybrid_command(gains, x_e, x_e_rate, f_e, state.force_error_integral);

    let mut next = state.clone();
    for i in 0..AXES {
        next.force_error_integral[i] += f_e[i] * dt;
        let step = x_c[i] * dt / params.time_constant;
        next.position[i] += step;
        next.velocity[i] = step / dt;
    }
    resolve_contact(&mut next, hole, peg, params);
    Ok((x_c, next))
}

fn resolve_contact(state: &mut WorldState, hole: &HoleSpec, peg: &PegSpec, params: &WorldParams) {
    let surface = hole.entry[1];
    let lateral = state.position[0] - hole.entry[0];
    let over_hole = lateral.abs() <= hole.clearance_mm;
    let aligned = state.theta().abs() <= angular_tolerance_deg(hole, peg);
    let tip_depth = surface - state.position[1];

    // The tip may move below `floor`; penetration produces a spring reaction.
    let floor_depth = if state.insertion_depth > 0.0 || over_hole {
        if aligned {
            state.insertion_depth = tip_depth.clamp(0.0, hole.depth_mm);
            hole.depth_mm
        } else {
            // A tilted peg wedges at the depth it has already reached.
            state.insertion_depth
        }
    } else {
        0.0
    };
    let penetration = tip_depth - floor_depth;
    let f_z = if penetration > 0.0 {
        params.stiffness * penetration
    } else {
        0.0
    };
    let wedged = !aligned && (state.insertion_depth > 0.0 || over_hole) && f_z > 0.0;
    let mut f_y = if wedged {
        -f_z * libm::tan(state.theta().to_radians())
    } else {
        0.0
    };
    if state.insertion_depth > 0.0 && lateral.abs() > hole.clearance_mm {
        let overlap = lateral.abs() - hole.clearance_mm;
        f_y -= lateral.signum() * params.stiffness * overlap;
    }
    state.wrench = [f_y, f_z];
    state.in_contact = f_z > 0.0 || f_y != 0.0;
}

/// Applies a seeded in-contact slip when the lateral wrench exceeds the
/// threshold. Returns the new state and whether a slip happened.
pub fn maybe_slip<R: Rng>(state: &WorldState, params: &WorldParams, rng: &mut R) -> (WorldState, bool) {
    let trigger = rng.gen::<f64>() < params.slip_probability;
    if state.in_contact && state.wrench[0].abs() > params.slip_force_threshold && trigger {
        // in_contact holds, so this cannot fail.
        let next = slippage_event(state, params, rng).expect("in contact");
        (next, true)
    } else {
        (state.clone(), false)
    }
}
