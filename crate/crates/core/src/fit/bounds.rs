//! The nonlinear search box and its normalized coordinates.

use std::f64::consts::PI;

use crate::model::NonlinearParams;

/// Closed parameter box for the nonlinear search:
/// `tc in [t2, t2 + 0.375 (t2 - t1)]`, `m in [1e-5, 1 - 1e-5]`,
/// `omega in [0.01, 40]`, `phi in [0, 2 pi - 1e-5]`.
///
/// The critical time must come after the window end, but not so far beyond it
/// that predictive power is lost (about a third of the window length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBounds {
    pub tc: (f64, f64),
    pub m: (f64, f64),
    pub omega: (f64, f64),
    pub phi: (f64, f64),
}

/// Box for a fit window `[t1, t2]` in trading days.
pub fn search_bounds(t1: i64, t2: i64) -> SearchBounds {
    assert!(t2 > t1, "search_bounds requires t2 > t1");
    let w = (t2 - t1) as f64;
    SearchBounds {
        tc: (t2 as f64, t2 as f64 + 0.375 * w),
        m: (1e-5, 1.0 - 1e-5),
        omega: (0.01, 40.0),
        phi: (0.0, 2.0 * PI - 1e-5),
    }
}

// Unit coordinates stay this far inside [0, 1] so tc never collides with t2
// (the basis is singular there).
const UNIT_MARGIN: f64 = 1e-12;

impl SearchBounds {
    fn axis(&self, k: usize) -> (f64, f64) {
        match k {
            0 => self.tc,
            1 => self.m,
            2 => self.omega,
            _ => self.phi,
        }
    }

    pub fn contains(&self, nl: &NonlinearParams) -> bool {
        let v = [nl.tc, nl.m, nl.omega, nl.phi];
        (0..4).all(|k| {
            let (lo, hi) = self.axis(k);
            v[k] >= lo && v[k] <= hi
        })
    }

    /// Map parameters to unit-box coordinates.
    pub(crate) fn to_unit(&self, nl: &NonlinearParams) -> [f64; 4] {
        let v = [nl.tc, nl.m, nl.omega, nl.phi];
        std::array::from_fn(|k| {
            let (lo, hi) = self.axis(k);
            ((v[k] - lo) / (hi - lo)).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN)
        })
    }

    /// Map unit-box coordinates back to parameters, keeping them strictly
    /// inside the box.
    pub(crate) fn from_unit(&self, u: [f64; 4]) -> NonlinearParams {
        let v: [f64; 4] = std::array::from_fn(|k| {
            let (lo, hi) = self.axis(k);
            lo + (hi - lo) * u[k].clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN)
        });
        NonlinearParams { tc: v[0], m: v[1], omega: v[2], phi: v[3] }
    }
}
