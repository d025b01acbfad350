//! Virtual lead vehicle travelling at a constant speed.

use serde::{Deserialize, Serialize};

use crate::coach::{compute_time_gap, CoachError, GapState};

pub const DEFAULT_GHOST_SPEED: f64 = 29.0;
/// Virtual gap after initialisation and after every reset, meters.
pub const GHOST_BASE_GAP: f64 = 65.0;
pub const GHOST_MAX_GAP: f64 = 100.0;
pub const GHOST_MIN_GAP: f64 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostState {
    pub virtual_gap: f64,
    pub v_ghost: f64,
    pub reset_count: u32,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GhostError {
    #[error("ghost speed must be positive, got {0}")]
    Speed(f64),
}

impl GhostState {
    pub fn new(v_ghost: f64) -> Result<Self, GhostError> {
        if !(v_ghost > 0.0) || !v_ghost.is_finite() {
            return Err(GhostError::Speed(v_ghost));
        }
        Ok(Self {
            virtual_gap: GHOST_BASE_GAP,
            v_ghost,
            reset_count: 0,
        })
    }

    /// Forward-Euler gap update followed by the bounds check.
    ///
    /// Returns `true` when the gap was reset.
    pub fn step(&mut self, v_ego: f64, dt: f64) -> bool {
        let next = self.virtual_gap + (self.v_ghost - v_ego) * dt;
        if !(GHOST_MIN_GAP..=GHOST_MAX_GAP).contains(&next) {
            self.virtual_gap = GHOST_BASE_GAP;
            self.reset_count += 1;
            true
        } else {
            self.virtual_gap = next;
            false
        }
    }

    pub fn gap_state(&self, v_ego: f64) -> Result<GapState, CoachError> {
        Ok(GapState {
            s: self.virtual_gap,
            delta_v: self.v_ghost - v_ego,
            tau: compute_time_gap(self.virtual_gap, v_ego)?,
        })
    }
}

impl Default for GhostState {
    fn default() -> Self {
        Self {
            virtual_gap: GHOST_BASE_GAP,
            v_ghost: DEFAULT_GHOST_SPEED,
            reset_count: 0,
        }
    }
}
