//! Closed-form diversity-multiplexing tradeoff curves.

use crate::error::{Error, Result};

/// Piecewise-linear DMT curve through `(r, d)` breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct DmtCurve {
    breakpoints: Vec<(f64, f64)>,
}

impl DmtCurve {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Config(
                "DMT curve needs at least one breakpoint".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            let ((r0, d0), (r1, d1)) = (w[0], w[1]);
            if !(r1 > r0) {
                return Err(Error::Config(format!(
                    "breakpoints must increase strictly in r ({r0} then {r1})"
                )));
            }
            if d1 > d0 {
                return Err(Error::Config(format!(
                    "diversity must not increase along the curve ({d0} then {d1})"
                )));
            }
        }
        if breakpoints
            .iter()
            .any(|&(r, d)| !(d >= 0.0) || !r.is_finite())
        {
            return Err(Error::Config(
                "breakpoints must be finite with d >= 0".into(),
            ));
        }
        Ok(DmtCurve { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn max_multiplexing(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].0
    }

    /// Linear interpolation between breakpoints; zero beyond the last one.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let (r_first, d_first) = self.breakpoints[0];
        if !(r >= r_first) {
            return Err(Error::domain("r", r, "[first breakpoint, inf)"));
        }
        if r == r_first {
            return Ok(d_first);
        }
        for w in self.breakpoints.windows(2) {
            let ((r0, d0), (r1, d1)) = (w[0], w[1]);
            if r <= r1 {
                if r == r1 {
                    return Ok(d1);
                }
                return Ok(d0 + (d1 - d0) * (r - r0) / (r1 - r0));
            }
        }
        Ok(0.0)
    }

    /// Curve sampled every `step` from the first breakpoint up to the last,
    /// with the endpoint always included.
    pub fn sample(&self, step: f64) -> Vec<(f64, f64)> {
        assert!(step > 0.0);
        let r0 = self.breakpoints[0].0;
        let r_max = self.max_multiplexing();
        let count = ((r_max - r0) / step + 1e-9).floor() as usize;
        let mut out: Vec<(f64, f64)> = (0..=count)
            .map(|k| {
                // round away accumulated binary noise, e.g. 0.07 * 3
                let r = ((r0 + k as f64 * step) * 1e9).round() / 1e9;
                (r, self.eval(r).expect("sample point inside curve"))
            })
            .collect();
        if out.last().map(|p| p.0) != Some(r_max) {
            out.push((r_max, self.eval(r_max).expect("endpoint inside curve")));
        }
        out
    }
}

/// Point-to-point `nt × nr` Rayleigh MIMO tradeoff through
/// `(k, (nt − k)(nr − k))`, `k = 0..min(nt, nr)`.
pub fn mimo_dmt_curve(nt: usize, nr: usize) -> Result<DmtCurve> {
    if nt == 0 || nr == 0 {
        return Err(Error::Config("antenna counts must be positive".into()));
    }
    let points = (0..=nt.min(nr))
        .map(|k| (k as f64, ((nt - k) * (nr - k)) as f64))
        .collect();
    DmtCurve::new(points)
}

pub fn mimo_dmt(nt: usize, nr: usize, r: f64) -> Result<f64> {
    let max = nt.min(nr) as f64;
    if !(0.0..=max).contains(&r) {
        return Err(Error::domain("r", r, "[0, min(nt, nr)]"));
    }
    mimo_dmt_curve(nt, nr)?.eval(r)
}

/// General half-duplex bound for this network, `4 (1 − r)⁺`.
pub fn upper_bound_dmt(r: f64) -> f64 {
    4.0 * (1.0 - r).max(0.0)
}

pub fn upper_bound_curve() -> DmtCurve {
    DmtCurve::new(vec![(0.0, 4.0), (1.0, 0.0)]).expect("static curve")
}

/// Tradeoff of the two-slot space-time coding protocol with a perfect relay.
pub fn stc_dmt(r: f64) -> Result<f64> {
    if !(0.0..=1.5).contains(&r) {
        return Err(Error::domain("r", r, "[0, 3/2]"));
    }
    Ok(if r <= 0.5 {
        6.0 - 6.0 * r
    } else if r <= 1.0 {
        5.0 - 4.0 * r
    } else {
        3.0 - 2.0 * r
    })
}

pub fn stc_curve() -> DmtCurve {
    DmtCurve::new(vec![(0.0, 6.0), (0.5, 3.0), (1.0, 1.0), (1.5, 0.0)]).expect("static curve")
}

/// Outage bound `2 P − P²` of successive relaying in terms of the 2×2 MIMO
/// outage probability `P`.
pub fn outage_lower_bound(p22: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p22) {
        return Err(Error::domain("p22", p22, "[0, 1]"));
    }
    Ok(2.0 * p22 - p22 * p22)
}

/// Tradeoff implied by the `2 P − P²` bound. Since `2P − P² ≍ 2P` as `P → 0`
/// the exponent equals that of the 2×2 MIMO curve.
pub fn lower_bound_transform_curve() -> DmtCurve {
    mimo_dmt_curve(2, 2).expect("static curve")
}
