//! Block-fading channel draws for the one-antenna source, two-antenna relay,
//! two-antenna destination network, and the per-frame transfer matrices of
//! each transmission scheme.
//!
//! Matrices are assembled without the `√η` transmit amplitude; consumers apply
//! it, so a single realization serves a whole SNR sweep.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Source-relay separation and path-loss exponent. Source and relay both sit
/// at unit distance from the destination, so only the source-relay links are
/// attenuated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    rtilde: f64,
    pathloss_exponent: f64,
}

impl Geometry {
    pub const DEFAULT_PATHLOSS_EXPONENT: f64 = 4.0;

    pub fn new(rtilde: f64, pathloss_exponent: f64) -> Result<Self> {
        if !(rtilde > 0.0) || !rtilde.is_finite() {
            return Err(Error::domain("rtilde", rtilde, "(0, inf)"));
        }
        if !(pathloss_exponent > 0.0) || !pathloss_exponent.is_finite() {
            return Err(Error::domain(
                "pathloss_exponent",
                pathloss_exponent,
                "(0, inf)",
            ));
        }
        Ok(Geometry {
            rtilde,
            pathloss_exponent,
        })
    }

    /// Geometry with the default exponent of 4.
    pub fn with_distance(rtilde: f64) -> Result<Self> {
        Self::new(rtilde, Self::DEFAULT_PATHLOSS_EXPONENT)
    }

    pub fn rtilde(&self) -> f64 {
        self.rtilde
    }

    pub fn pathloss_exponent(&self) -> f64 {
        self.pathloss_exponent
    }

    /// Power gain `r̃^{-exponent}` of the source-relay links.
    pub fn source_relay_power_gain(&self) -> f64 {
        self.rtilde.powf(-self.pathloss_exponent)
    }

    /// Amplitude gain `r̃^{-exponent/2}` applied to each `h_{s,r_i}`.
    pub fn source_relay_amplitude_gain(&self) -> f64 {
        self.rtilde.powf(-self.pathloss_exponent / 2.0)
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            rtilde: 1.0,
            pathloss_exponent: Self::DEFAULT_PATHLOSS_EXPONENT,
        }
    }
}

/// One block-fading draw of every coefficient in the network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelRealization {
    /// `h_{s,d_j}`, j = 1, 2.
    pub h_sd: [C64; 2],
    /// `h_{s,r_i}`, i = 1, 2, path loss already applied.
    pub h_sr: [C64; 2],
    /// `h_rd[i][j] = h_{r_i,d_j}`.
    pub h_rd: [[C64; 2]; 2],
}

impl ChannelRealization {
    /// `|h_{s,d_1}|² + |h_{s,d_2}|²`.
    pub fn source_dest_gain(&self) -> f64 {
        self.h_sd[0].norm_sqr() + self.h_sd[1].norm_sqr()
    }

    /// `|h_{r_i,d_1}|² + |h_{r_i,d_2}|²` for relay antenna `i` (0-based).
    pub fn relay_antenna_gain(&self, antenna: usize) -> f64 {
        self.h_rd[antenna][0].norm_sqr() + self.h_rd[antenna][1].norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.h_sd
            .iter()
            .chain(self.h_sr.iter())
            .chain(self.h_rd.iter().flatten())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Number of codewords `L` carried by one frame; the frame spans `L + 1` slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSpec {
    codewords: usize,
}

impl FrameSpec {
    pub fn new(codewords: usize) -> Result<Self> {
        if codewords == 0 {
            return Err(Error::EmptyFrame);
        }
        Ok(FrameSpec { codewords })
    }

    pub fn codewords(&self) -> usize {
        self.codewords
    }

    pub fn slots(&self) -> usize {
        self.codewords + 1
    }
}

/// Relay antenna (0-based) that receives and later forwards message `l`
/// (1-based). Odd messages go through antenna 1, even ones through antenna 2.
pub fn relay_antenna_for_message(l: usize) -> usize {
    if l % 2 == 1 {
        0
    } else {
        1
    }
}

/// Independent random stream for one Monte Carlo trial.
///
/// ChaCha keyed by the master seed with the trial index as stream id, so the
/// stream of a trial never depends on which worker runs it or in what order.
pub fn trial_stream(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    // CN(0, 1): each quadrature carries half the power
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws every coefficient i.i.d. CN(0, 1), then scales the source-relay
/// pair by the geometry's amplitude gain. Draw order is fixed:
/// `h_sd`, `h_sr`, then `h_rd` row-major.
pub fn sample_realization<R: Rng + ?Sized>(rng: &mut R, geometry: &Geometry) -> ChannelRealization {
    let h_sd = [complex_gaussian(rng), complex_gaussian(rng)];
    let amp = geometry.source_relay_amplitude_gain();
    let h_sr = [complex_gaussian(rng) * amp, complex_gaussian(rng) * amp];
    let h_rd = [
        [complex_gaussian(rng), complex_gaussian(rng)],
        [complex_gaussian(rng), complex_gaussian(rng)],
    ];
    ChannelRealization { h_sd, h_sr, h_rd }
}

/// The `2(L+1) × 2L` transfer matrix of successive relaying.
///
/// Column `2l-1` (1-based) carries the source codeword `x_l` in slot `l`;
/// column `2l` carries the relay's re-encoded `x'_l` in slot `l+1` through the
/// relay antenna that received it. Rows `2i-1, 2i` are the two destination
/// antennas in slot `i`.
pub fn assemble_successive_matrix(ch: &ChannelRealization, frame: &FrameSpec) -> ComplexMatrix {
    let l_count = frame.codewords();
    let mut h = ComplexMatrix::zeros(2 * frame.slots(), 2 * l_count);
    for l in 1..=l_count {
        let src_col = 2 * (l - 1);
        let relay_col = src_col + 1;
        let src_row = 2 * (l - 1);
        let relay_row = src_row + 2;
        let antenna = relay_antenna_for_message(l);
        for j in 0..2 {
            h.set(src_row + j, src_col, ch.h_sd[j]);
            h.set(relay_row + j, relay_col, ch.h_rd[antenna][j]);
        }
    }
    h
}

/// The `4 × 3` transfer matrix of the two-slot space-time coding protocol:
/// the source broadcasts in slot 1, both relay antennas forward independent
/// re-encodings in slot 2.
pub fn assemble_stc_matrix(ch: &ChannelRealization) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(4, 3);
    for j in 0..2 {
        h.set(j, 0, ch.h_sd[j]);
        h.set(2 + j, 1, ch.h_rd[0][j]);
        h.set(2 + j, 2, ch.h_rd[1][j]);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled() -> ChannelRealization {
        // distinct values so positions are identifiable
        ChannelRealization {
            h_sd: [C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
            h_sr: [C64::new(3.0, 0.0), C64::new(4.0, 0.0)],
            h_rd: [
                [C64::new(11.0, 0.0), C64::new(12.0, 0.0)],
                [C64::new(21.0, 0.0), C64::new(22.0, 0.0)],
            ],
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(0.0, 4.0).is_err());
        assert!(Geometry::new(-1.0, 4.0).is_err());
        assert!(Geometry::new(0.1, 0.0).is_err());
        assert!(Geometry::new(f64::NAN, 4.0).is_err());
        let g = Geometry::with_distance(0.1).unwrap();
        assert!((g.source_relay_power_gain() - 1e4).abs() < 1e-8);
        assert!((g.source_relay_amplitude_gain() - 100.0).abs() < 1e-10);
        assert_eq!(
            Geometry::with_distance(1.0)
                .unwrap()
                .source_relay_power_gain(),
            1.0
        );
    }

    #[test]
    fn frame_rejects_zero() {
        assert!(matches!(FrameSpec::new(0), Err(Error::EmptyFrame)));
        assert_eq!(FrameSpec::new(20).unwrap().slots(), 21);
    }

    #[test]
    fn smallest_frame_matrix() {
        let ch = labelled();
        let h = assemble_successive_matrix(&ch, &FrameSpec::new(1).unwrap());
        assert_eq!(h.shape(), (4, 2));
        let z = C64::new(0.0, 0.0);
        assert_eq!(h.column(0), vec![ch.h_sd[0], ch.h_sd[1], z, z]);
        assert_eq!(h.column(1), vec![z, z, ch.h_rd[0][0], ch.h_rd[0][1]]);
    }

    #[test]
    fn two_codeword_frame_matches_displayed_pattern() {
        let ch = labelled();
        let h = assemble_successive_matrix(&ch, &FrameSpec::new(2).unwrap());
        assert_eq!(h.shape(), (6, 4));
        let z = 0.0;
        #[rustfmt::skip]
        let expected = [
            [1.0, z,    z,   z   ],
            [2.0, z,    z,   z   ],
            [z,   11.0, 1.0, z   ],
            [z,   12.0, 2.0, z   ],
            [z,   z,    z,   21.0],
            [z,   z,    z,   22.0],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(h.get(r, c), C64::new(*v, 0.0), "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn last_relay_column_alternates_with_parity() {
        let ch = labelled();
        for l in 1..=9 {
            let h = assemble_successive_matrix(&ch, &FrameSpec::new(l).unwrap());
            let last = 2 * l - 1;
            let expect = if l % 2 == 1 { 11.0 } else { 21.0 };
            assert_eq!(h.get(2 * l, last).re, expect, "L = {l}");
        }
    }

    #[test]
    fn stc_matrix_layout() {
        let ch = labelled();
        let h = assemble_stc_matrix(&ch);
        let z = C64::new(0.0, 0.0);
        assert_eq!(h.column(0), vec![ch.h_sd[0], ch.h_sd[1], z, z]);
        assert_eq!(h.column(1), vec![z, z, ch.h_rd[0][0], ch.h_rd[0][1]]);
        assert_eq!(h.column(2), vec![z, z, ch.h_rd[1][0], ch.h_rd[1][1]]);
    }

    #[test]
    fn stc_all_ones_column_norms() {
        let one = C64::new(1.0, 0.0);
        let ch = ChannelRealization {
            h_sd: [one; 2],
            h_sr: [one; 2],
            h_rd: [[one; 2]; 2],
        };
        let h = assemble_stc_matrix(&ch);
        for c in 0..3 {
            assert!((h.column_norm(c) - 2f64.sqrt()).abs() < 1e-15);
        }
        // first slot rows see nothing from the relay columns
        for r in 0..2 {
            for c in 1..3 {
                assert_eq!(h.get(r, c), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn unit_distance_leaves_source_relay_unscaled() {
        let g = Geometry::with_distance(1.0).unwrap();
        let mut a = trial_stream(9, 3);
        let mut b = trial_stream(9, 3);
        let ch = sample_realization(&mut a, &g);
        // replay the raw draws: h_sd (2), then h_sr (2)
        let raw: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut b)).collect();
        assert_eq!(ch.h_sr, [raw[2], raw[3]]);
    }

    #[test]
    fn sampling_is_deterministic_per_trial() {
        let g = Geometry::with_distance(0.3).unwrap();
        let a = sample_realization(&mut trial_stream(42, 17), &g);
        let b = sample_realization(&mut trial_stream(42, 17), &g);
        assert_eq!(a, b);
        let c = sample_realization(&mut trial_stream(42, 18), &g);
        assert_ne!(a, c);
        assert!(a.is_finite());
    }
}
