//! Gaussian mutual information, per-scheme outage events, and the SNR
//! thresholds below which the relay can decode reliably.

use crate::channel::{
    assemble_stc_matrix, assemble_successive_matrix, ChannelRealization, FrameSpec,
};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Gram};

/// Per-antenna transmit power over unit noise variance.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct SnrPoint {
    eta: f64,
}

impl SnrPoint {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain("eta", eta, "(0, inf)"));
        }
        Ok(SnrPoint { eta })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.eta
    }

    pub fn db(&self) -> f64 {
        10.0 * self.eta.log10()
    }
}

/// `log2 det(I + η H Hᴴ)` via a Cholesky factorization of the Gram on the
/// smaller side of `H`.
pub fn mutual_information(h: &ComplexMatrix, eta: SnrPoint) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::NonFinite("channel matrix"));
    }
    Gram::of(h).mutual_information(eta.linear(), &mut Vec::new())
}

/// 1×2 SIMO outage of direct source-destination transmission.
pub fn direct_outage_event(ch: &ChannelRealization, eta: SnrPoint, rate: f64) -> bool {
    direct_mutual_information(ch, eta.linear()) < rate
}

pub(crate) fn direct_mutual_information(ch: &ChannelRealization, eta: f64) -> f64 {
    (eta * ch.source_dest_gain()).ln_1p() / std::f64::consts::LN_2
}

/// Joint-decoding outage of successive relaying: the frame mutual information
/// falls short of `R (L+1)` bits. Assumes the relay decoded every message.
pub fn successive_outage_event(
    ch: &ChannelRealization,
    frame: &FrameSpec,
    eta: SnrPoint,
    rate: f64,
) -> Result<bool> {
    let h = assemble_successive_matrix(ch, frame);
    Ok(mutual_information(&h, eta)? < rate * frame.slots() as f64)
}

/// Outage of the two-slot space-time coding protocol: one message per two
/// slots, so the target is `2R` bits. Assumes the relay decoded the message.
pub fn stc_outage_event(ch: &ChannelRealization, eta: SnrPoint, rate: f64) -> Result<bool> {
    let h = assemble_stc_matrix(ch);
    Ok(mutual_information(&h, eta)? < 2.0 * rate)
}

/// Outage of a point-to-point 2×2 MIMO channel at `R` bits.
pub fn mimo22_outage_event(h22: &ComplexMatrix, eta: SnrPoint, rate: f64) -> Result<bool> {
    if h22.shape() != (2, 2) {
        return Err(Error::Shape {
            expected_rows: 2,
            expected_cols: 2,
            rows: h22.rows(),
            cols: h22.cols(),
        });
    }
    Ok(mutual_information(h22, eta)? < rate)
}

/// Largest η at which the relay of the successive scheme is guaranteed to
/// decode: `(a − b − c) / (b c)` with
/// `a = min_i |h_{s,r_i}|²`, `b = |h_{s,d_1}|² + |h_{s,d_2}|²`,
/// `c = min_i (|h_{r_i,d_1}|² + |h_{r_i,d_2}|²)`.
///
/// The condition holds at η iff η is at most the returned value, which may be
/// negative (never holds) or `+inf` (always holds, when `b c = 0`).
pub fn constraint_threshold_successive(ch: &ChannelRealization) -> Result<f64> {
    let a = ch.h_sr[0].norm_sqr().min(ch.h_sr[1].norm_sqr());
    let b = ch.source_dest_gain();
    let c = ch.relay_antenna_gain(0).min(ch.relay_antenna_gain(1));
    let numerator = a - b - c;
    let denominator = b * c;
    if denominator > 0.0 {
        return Ok(numerator / denominator);
    }
    // η·b·c ≤ a − b − c with b·c = 0 holds for every η or for none
    if a == 0.0 && b == 0.0 && c == 0.0 {
        Err(Error::DegenerateConstraint)
    } else if numerator >= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(f64::NEG_INFINITY)
    }
}

/// Threshold of the space-time coding scheme: `p / (q z)` with
/// `p = |h_{s,r_1}|² + |h_{s,r_2}|²` (path loss included),
/// `q = |h_{s,d_1}|² + |h_{s,d_2}|²`, `z = Σ_{i,j} |h_{r_i,d_j}|²`.
///
/// This is an approximate bound; it is evaluated as an equality threshold.
pub fn constraint_threshold_stc(ch: &ChannelRealization) -> Result<f64> {
    let p = ch.h_sr[0].norm_sqr() + ch.h_sr[1].norm_sqr();
    let q = ch.source_dest_gain();
    let z = ch.relay_antenna_gain(0) + ch.relay_antenna_gain(1);
    let denominator = q * z;
    if denominator > 0.0 {
        Ok(p / denominator)
    } else if p > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::DegenerateConstraint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    const ZERO: C64 = C64::new(0.0, 0.0);

    fn realization(a: [f64; 2], b: [f64; 2], c: [[f64; 2]; 2]) -> ChannelRealization {
        // real-valued coefficients with the given squared magnitudes
        let r = |x: f64| C64::new(x.sqrt(), 0.0);
        ChannelRealization {
            h_sd: [r(b[0]), r(b[1])],
            h_sr: [r(a[0]), r(a[1])],
            h_rd: [[r(c[0][0]), r(c[0][1])], [r(c[1][0]), r(c[1][1])]],
        }
    }

    #[test]
    fn snr_point_validation() {
        assert!(SnrPoint::new(0.0).is_err());
        assert!(SnrPoint::new(-1.0).is_err());
        assert!(SnrPoint::new(f64::INFINITY).is_err());
        let p = SnrPoint::from_db(10.0).unwrap();
        assert!((p.linear() - 10.0).abs() < 1e-12);
        assert!((p.db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_information() {
        let eta = SnrPoint::new(123.0).unwrap();
        for (r, c) in [(1, 1), (3, 2), (2, 5), (42, 40)] {
            assert_eq!(
                mutual_information(&ComplexMatrix::zeros(r, c), eta).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn scalar_channel_closed_form() {
        let h = ComplexMatrix::from_row_major(1, 1, vec![C64::new(1.0, 0.0)]).unwrap();
        let mi = mutual_information(&h, SnrPoint::new(3.0).unwrap()).unwrap();
        assert!((mi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_matrix_is_an_error() {
        let mut h = ComplexMatrix::zeros(2, 2);
        h.set(0, 1, C64::new(f64::NAN, 0.0));
        assert!(mutual_information(&h, SnrPoint::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn direct_event_edges() {
        let eta = SnrPoint::new(10.0).unwrap();
        let ch = realization([1.0, 1.0], [0.1, 0.2], [[1.0; 2]; 2]);
        // 1 + 10 * 0.3 = 4, so the threshold sits at 2 bits
        assert!(!direct_outage_event(&ch, eta, 0.0));
        assert!(!direct_outage_event(&ch, eta, 2.0 - 1e-9));
        assert!(direct_outage_event(&ch, eta, 2.0 + 1e-9));
        let dead = realization([1.0, 1.0], [0.0, 0.0], [[1.0; 2]; 2]);
        assert!(direct_outage_event(&dead, eta, 1e-6));
    }

    #[test]
    fn zero_rate_never_outage_and_zero_channel_always() {
        let eta = SnrPoint::from_db(10.0).unwrap();
        let frame = FrameSpec::new(5).unwrap();
        let ch = realization([1.0, 2.0], [0.3, 0.4], [[0.5, 0.6], [0.7, 0.8]]);
        assert!(!successive_outage_event(&ch, &frame, eta, 0.0).unwrap());
        assert!(!stc_outage_event(&ch, eta, 0.0).unwrap());
        let zero = ChannelRealization {
            h_sd: [ZERO; 2],
            h_sr: [ZERO; 2],
            h_rd: [[ZERO; 2]; 2],
        };
        assert!(successive_outage_event(&zero, &frame, eta, 0.01).unwrap());
        assert!(stc_outage_event(&zero, eta, 0.01).unwrap());
    }

    #[test]
    fn stc_without_relay_links_is_simo_at_double_rate() {
        let eta = SnrPoint::new(10.0).unwrap();
        let mut ch = realization([1.0, 1.0], [0.1, 0.2], [[0.0; 2]; 2]);
        ch.h_rd = [[ZERO; 2]; 2];
        // SIMO MI is exactly 2 bits here, so the STC threshold is R = 1
        assert!(!stc_outage_event(&ch, eta, 1.0 - 1e-9).unwrap());
        assert!(stc_outage_event(&ch, eta, 1.0 + 1e-9).unwrap());
        for rate in [0.3, 0.9, 1.7] {
            assert_eq!(
                stc_outage_event(&ch, eta, rate).unwrap(),
                direct_outage_event(&ch, eta, 2.0 * rate)
            );
        }
    }

    #[test]
    fn mimo22_identity_threshold() {
        let h = ComplexMatrix::identity(2);
        let eta = SnrPoint::new(1.0).unwrap();
        assert!(!mimo22_outage_event(&h, eta, 2.0 - 1e-9).unwrap());
        assert!(mimo22_outage_event(&h, eta, 2.0 + 1e-9).unwrap());
        assert!(mimo22_outage_event(&ComplexMatrix::zeros(2, 2), eta, 0.1).unwrap());
        assert!(matches!(
            mimo22_outage_event(&ComplexMatrix::zeros(2, 3), eta, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn successive_threshold_arithmetic() {
        // a = 3, b = 1, c = 1
        let ch = realization([3.0, 5.0], [0.5, 0.5], [[0.25, 0.75], [1.0, 1.0]]);
        assert!((constraint_threshold_successive(&ch).unwrap() - 1.0).abs() < 1e-12);
        // a < b + c: negative, fails for every η > 0
        let weak = realization([1.0, 5.0], [0.5, 0.5], [[0.25, 0.75], [1.0, 1.0]]);
        assert!(constraint_threshold_successive(&weak).unwrap() < 0.0);
    }

    #[test]
    fn successive_threshold_degenerate_cases() {
        let no_direct = realization([3.0, 5.0], [0.0, 0.0], [[1.0; 2]; 2]);
        assert_eq!(
            constraint_threshold_successive(&no_direct).unwrap(),
            f64::INFINITY
        );
        let starved = realization([1.0, 5.0], [0.0, 0.0], [[1.0; 2]; 2]);
        assert_eq!(
            constraint_threshold_successive(&starved).unwrap(),
            f64::NEG_INFINITY
        );
        let zero = realization([0.0; 2], [0.0; 2], [[0.0; 2]; 2]);
        assert!(matches!(
            constraint_threshold_successive(&zero),
            Err(Error::DegenerateConstraint)
        ));
    }

    #[test]
    fn stc_threshold_arithmetic() {
        // p = 4, q = 1, z = 2
        let ch = realization([1.0, 3.0], [0.5, 0.5], [[0.5; 2]; 2]);
        assert!((constraint_threshold_stc(&ch).unwrap() - 2.0).abs() < 1e-12);
        let silent = realization([0.0, 0.0], [0.5, 0.5], [[0.5; 2]; 2]);
        assert_eq!(constraint_threshold_stc(&silent).unwrap(), 0.0);
        let no_dest = realization([1.0, 0.0], [0.0, 0.0], [[0.5; 2]; 2]);
        assert_eq!(constraint_threshold_stc(&no_dest).unwrap(), f64::INFINITY);
        let zero = realization([0.0; 2], [0.0; 2], [[0.0; 2]; 2]);
        assert!(constraint_threshold_stc(&zero).is_err());
    }
}
