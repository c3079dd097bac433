//! Connectivity-radius schedules of the form eps_n = n^(-delta).

use crate::error::{Error, Result};

/// The radius for a given n, plus validity flags for the rate window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleCheck {
    pub epsilon: f64,
    pub delta: f64,
    /// delta < 1/d, the basic decay requirement.
    pub satisfies_rate: bool,
    /// Extra p=1 window delta > max{1/((2-a^2) eta + d), 1/(a(d-1)+1)},
    /// present when (alpha, eta) were supplied.
    pub satisfies_p1_window: Option<bool>,
}

/// Compute eps_n = n^(-delta) together with its validity flags. The value is
/// never clamped; callers decide what to do with an out-of-window schedule.
pub fn epsilon_for(
    n: usize,
    delta: f64,
    d: usize,
    p1_params: Option<(f64, f64)>,
) -> Result<ScheduleCheck> {
    if n == 0 {
        return Err(Error::config("n must be at least 1"));
    }
    if d == 0 {
        return Err(Error::config("dimension must be at least 1"));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::config(format!(
            "delta must be finite and positive, got {}",
            delta
        )));
    }
    let epsilon = (n as f64).powf(-delta);
    let satisfies_rate = delta < 1.0 / d as f64;
    let satisfies_p1_window = p1_params.map(|(alpha, eta)| {
        let d = d as f64;
        let t1 = reciprocal_or_inf((2.0 - alpha * alpha) * eta + d);
        let t2 = reciprocal_or_inf(alpha * (d - 1.0) + 1.0);
        delta > t1.max(t2)
    });
    Ok(ScheduleCheck {
        epsilon,
        delta,
        satisfies_rate,
        satisfies_p1_window,
    })
}

fn reciprocal_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}
