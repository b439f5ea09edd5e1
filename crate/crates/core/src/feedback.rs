//! Phase-locking feedback on the drive gain.
//!
//! The controller compares the monitored state with the backaction-free
//! evolution in the y–z Bloch plane, which is the plane the `σ_x` drive
//! rotates, and scales the gain as `g_t = (1 − f Δφ_t) g`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::Silent;
use crate::qubit::{DensityMatrix, DriveProtocol};
use crate::sme::{integrate_trajectory, Controller, DetectorModel, Scheme};

/// Projections shorter than this carry no phase.
pub const PHASE_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    pub f: f64,
    pub enabled: bool,
}

impl FeedbackParams {
    pub fn new(f: f64, enabled: bool) -> Result<Self> {
        let fp = Self { f, enabled };
        fp.validate()?;
        Ok(fp)
    }

    pub fn off() -> Self {
        Self { f: 0.0, enabled: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f >= 0.0 && self.f.is_finite()) {
            return Err(Error::Domain {
                what: "feedback strength f",
                value: self.f,
                domain: "[0, ∞)".into(),
            });
        }
        Ok(())
    }
}

/// Backaction-free evolution on the grid of a monitored run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    /// `steps + 1` states.
    pub states: Vec<DensityMatrix>,
}

pub fn reference_trajectory(init: &DensityMatrix, protocol: &DriveProtocol, steps: usize) -> Result<ReferenceTrajectory> {
    let rec = integrate_trajectory(
        init,
        protocol,
        &DetectorModel::disconnected(),
        &Silent,
        Scheme::default(),
        steps,
        None,
    )?;
    Ok(ReferenceTrajectory { states: rec.states })
}

fn yz_phase(rho: &DensityMatrix) -> Option<f64> {
    let [_, y, z] = rho.bloch();
    (y.hypot(z) >= PHASE_NORM_FLOOR).then(|| y.atan2(z))
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * (a / TAU).round();
    if w <= -PI {
        w + TAU
    } else if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Rabi-phase lead of `actual` over `desired`.
pub fn phase_error(actual: &DensityMatrix, desired: &DensityMatrix) -> f64 {
    match (yz_phase(actual), yz_phase(desired)) {
        (Some(a), Some(d)) => wrap_angle(a - d),
        _ => 0.0,
    }
}

pub fn controlled_gain(g: f64, fp: &FeedbackParams, dphi: f64) -> f64 {
    (1.0 - fp.f * dphi) * g
}

/// Per-trajectory controller holding the shared reference series.
#[derive(Debug, Clone)]
pub struct FeedbackController<'a> {
    pub params: FeedbackParams,
    pub reference: &'a ReferenceTrajectory,
    /// Phase errors seen so far, one per step.
    pub phase_errors: Vec<f64>,
}

impl<'a> FeedbackController<'a> {
    pub fn new(params: FeedbackParams, reference: &'a ReferenceTrajectory) -> Self {
        Self {
            params,
            reference,
            phase_errors: Vec::with_capacity(reference.states.len()),
        }
    }
}

impl Controller for FeedbackController<'_> {
    fn gain(&mut self, k: usize, rho: &DensityMatrix, nominal: f64) -> f64 {
        let dphi = match self.reference.states.get(k) {
            Some(desired) => phase_error(rho, desired),
            None => 0.0,
        };
        self.phase_errors.push(dphi);
        if self.params.enabled {
            controlled_gain(nominal, &self.params, dphi)
        } else {
            nominal
        }
    }
}
