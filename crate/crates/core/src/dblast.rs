//! Distributed D-BLAST: each message is spread diagonally over a source slot
//! and the following relay slot, and the destination peels the layers off
//! with block MMSE successive interference cancellation.

use crate::channel::{
    assemble_successive_matrix, relay_antenna_for_message, ChannelRealization, FrameSpec,
};
use crate::error::{Error, Result};
use crate::matrix::{
    cholesky_band_in_place, forward_subst_band, ComplexMatrix, HermitianAccumulator, C64,
};
use crate::mimo_info::SnrPoint;

/// One diagonal layer: message `l` (1-based) sent by the source in slot `l`
/// and forwarded by the relay in slot `l + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layer {
    pub message: usize,
    pub source_slot: usize,
    pub relay_slot: usize,
    /// Relay antenna, 1 or 2.
    pub relay_antenna: usize,
    /// 0-based columns of the layer in the successive transfer matrix.
    pub columns: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSchedule {
    layers: Vec<Layer>,
}

impl LayerSchedule {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

pub fn layer_schedule(codewords: usize) -> Result<LayerSchedule> {
    if codewords == 0 {
        return Err(Error::EmptyFrame);
    }
    let layers = (1..=codewords)
        .map(|l| Layer {
            message: l,
            source_slot: l,
            relay_slot: l + 1,
            relay_antenna: relay_antenna_for_message(l) + 1,
            columns: [2 * l - 2, 2 * l - 1],
        })
        .collect();
    Ok(LayerSchedule { layers })
}

/// Achievable rate of each layer in bits per frame, indexed by message.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerRates {
    pub rates: Vec<f64>,
}

impl LayerRates {
    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Per-layer MMSE-SIC rates decoding messages in order `1..=L`.
pub fn mmse_sic_layer_rates(
    h: &ComplexMatrix,
    eta: SnrPoint,
    schedule: &LayerSchedule,
) -> Result<LayerRates> {
    let order: Vec<usize> = (0..schedule.len()).collect();
    mmse_sic_layer_rates_in_order(h, eta, schedule, &order)
}

/// Per-layer MMSE-SIC rates for an arbitrary decoding order.
///
/// `order` lists layer indices (0-based) in the sequence they are decoded.
/// When layer `l` is decoded, earlier layers are cancelled and later ones
/// are Gaussian interference with covariance `K_l = I + η Σ_{later} H_j H_jᴴ`;
/// its rate is `log2 det(I_2 + η H_lᴴ K_l⁻¹ H_l)`. Rates come back indexed by
/// layer, not by decoding position.
pub fn mmse_sic_layer_rates_in_order(
    h: &ComplexMatrix,
    eta: SnrPoint,
    schedule: &LayerSchedule,
    order: &[usize],
) -> Result<LayerRates> {
    SicDecoder::new(h, schedule)?.rates_in_order(eta, order)
}

/// MMSE-SIC rate evaluation bound to one channel matrix, reusable across
/// SNR points without reallocating.
pub struct SicDecoder<'a> {
    h: &'a ComplexMatrix,
    schedule: &'a LayerSchedule,
    nonzeros: Vec<Vec<(usize, C64)>>,
    interference: HermitianAccumulator,
    factor: Vec<C64>,
    w: [Vec<C64>; 2],
}

impl<'a> SicDecoder<'a> {
    pub fn new(h: &'a ComplexMatrix, schedule: &'a LayerSchedule) -> Result<Self> {
        let expected_cols = 2 * schedule.len();
        if h.cols() != expected_cols {
            return Err(Error::Shape {
                expected_rows: h.rows(),
                expected_cols,
                rows: h.rows(),
                cols: h.cols(),
            });
        }
        if !h.is_finite() {
            return Err(Error::NonFinite("channel matrix"));
        }
        let n = h.rows();
        let nonzeros = (0..h.cols())
            .map(|c| {
                (0..n)
                    .map(|r| (r, h.get(r, c)))
                    .filter(|(_, z)| *z != C64::new(0.0, 0.0))
                    .collect()
            })
            .collect();
        Ok(SicDecoder {
            h,
            schedule,
            nonzeros,
            interference: HermitianAccumulator::identity(n),
            factor: vec![C64::new(0.0, 0.0); n * n],
            w: [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]],
        })
    }

    /// Rates for decoding order `1..=L`.
    pub fn rates(&mut self, eta: SnrPoint) -> Result<LayerRates> {
        let order: Vec<usize> = (0..self.schedule.len()).collect();
        self.rates_in_order(eta, &order)
    }

    pub fn rates_in_order(&mut self, eta: SnrPoint, order: &[usize]) -> Result<LayerRates> {
        let layers = self.schedule.len();
        let mut seen = vec![false; layers];
        let permutation = order.len() == layers
            && order
                .iter()
                .all(|&k| k < layers && !std::mem::replace(&mut seen[k], true));
        if !permutation {
            return Err(Error::Config(format!(
                "decoding order must be a permutation of 0..{layers}"
            )));
        }

        let eta = eta.linear();
        self.interference.reset_identity();
        let mut rates = vec![0.0; layers];
        // Walk the order backwards so K only ever grows by one layer's outer products.
        for &k in order.iter().rev() {
            let layer = &self.schedule.layers[k];
            rates[k] = block_rate(
                &self.interference,
                self.h,
                layer,
                eta,
                &mut self.factor,
                &mut self.w,
            )?;
            for &c in &layer.columns {
                self.interference.add_outer(&self.nonzeros[c], eta);
            }
        }
        Ok(LayerRates { rates })
    }
}

fn block_rate(
    k: &HermitianAccumulator,
    h: &ComplexMatrix,
    layer: &Layer,
    eta: f64,
    factor: &mut [C64],
    w: &mut [Vec<C64>; 2],
) -> Result<f64> {
    let n = k.n;
    let band = k.band;
    // the factorization reads nothing outside the band
    for i in 0..n {
        for j in i.saturating_sub(band)..=i {
            factor[i * n + j] = k.data[i * n + j];
        }
    }
    cholesky_band_in_place(factor, n, band)?;
    // W = L⁻¹ H_l, so H_lᴴ K⁻¹ H_l = Wᴴ W
    for (wc, &c) in w.iter_mut().zip(layer.columns.iter()) {
        for (r, slot) in wc.iter_mut().enumerate() {
            *slot = h.get(r, c);
        }
        forward_subst_band(factor, n, band, wc);
    }
    let g00: f64 = w[0].iter().map(|z| z.norm_sqr()).sum();
    let g11: f64 = w[1].iter().map(|z| z.norm_sqr()).sum();
    let g01: C64 = w[0]
        .iter()
        .zip(w[1].iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let det = (1.0 + eta * g00) * (1.0 + eta * g11) - eta * eta * g01.norm_sqr();
    let rate = det.log2();
    if !rate.is_finite() {
        return Err(Error::NonFinite("layer rate"));
    }
    Ok(rate.max(0.0))
}

/// Per-message target for D-BLAST at `rate` bits per slot: the frame carries
/// `R (L+1)` bits split evenly over `L` messages.
pub fn per_message_bits(rate: f64, frame: &FrameSpec) -> f64 {
    rate * frame.slots() as f64 / frame.codewords() as f64
}

/// Frame outage under D-BLAST decoding: some layer cannot carry its message.
pub fn dblast_frame_outage(
    ch: &ChannelRealization,
    frame: &FrameSpec,
    eta: SnrPoint,
    rate: f64,
) -> Result<bool> {
    let h = assemble_successive_matrix(ch, frame);
    let schedule = layer_schedule(frame.codewords())?;
    let rates = mmse_sic_layer_rates(&h, eta, &schedule)?;
    let target = per_message_bits(rate, frame);
    Ok(rates.rates.iter().any(|&r| r < target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_realization, trial_stream, Geometry};
    use crate::mimo_info::mutual_information;

    #[test]
    fn schedule_shapes() {
        assert!(matches!(layer_schedule(0), Err(Error::EmptyFrame)));
        let one = layer_schedule(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.layers()[0].columns, [0, 1]);
        assert_eq!(one.layers()[0].relay_antenna, 1);

        let four = layer_schedule(4).unwrap();
        let antennas: Vec<usize> = four.layers().iter().map(|l| l.relay_antenna).collect();
        assert_eq!(antennas, vec![1, 2, 1, 2]);

        let twenty = layer_schedule(20).unwrap();
        let mut cols: Vec<usize> = twenty.layers().iter().flat_map(|l| l.columns).collect();
        cols.sort_unstable();
        assert_eq!(cols, (0..40).collect::<Vec<_>>());
        for l in twenty.layers() {
            assert_eq!(l.relay_slot, l.source_slot + 1);
        }
    }

    #[test]
    fn zero_channel_gives_zero_rates() {
        let schedule = layer_schedule(3).unwrap();
        let h = ComplexMatrix::zeros(8, 6);
        let rates = mmse_sic_layer_rates(&h, SnrPoint::new(100.0).unwrap(), &schedule).unwrap();
        assert_eq!(rates.rates, vec![0.0; 3]);
    }

    #[test]
    fn single_layer_is_full_information() {
        let g = Geometry::default();
        let frame = FrameSpec::new(1).unwrap();
        let eta = SnrPoint::from_db(10.0).unwrap();
        for t in 0..20 {
            let ch = sample_realization(&mut trial_stream(5, t), &g);
            let h = assemble_successive_matrix(&ch, &frame);
            let rates = mmse_sic_layer_rates(&h, eta, &layer_schedule(1).unwrap()).unwrap();
            let mi = mutual_information(&h, eta).unwrap();
            assert!((rates.rates[0] - mi).abs() <= 1e-12 * mi.max(1.0));
        }
    }

    #[test]
    fn rejects_mismatched_shape_and_bad_order() {
        let eta = SnrPoint::new(1.0).unwrap();
        let schedule = layer_schedule(2).unwrap();
        assert!(matches!(
            mmse_sic_layer_rates(&ComplexMatrix::zeros(6, 6), eta, &schedule),
            Err(Error::Shape { .. })
        ));
        let h = ComplexMatrix::zeros(6, 4);
        assert!(mmse_sic_layer_rates_in_order(&h, eta, &schedule, &[0, 0]).is_err());
        assert!(mmse_sic_layer_rates_in_order(&h, eta, &schedule, &[1]).is_err());
        assert!(mmse_sic_layer_rates_in_order(&h, eta, &schedule, &[1, 0]).is_ok());
    }

    #[test]
    fn outage_edges() {
        let frame = FrameSpec::new(4).unwrap();
        let eta = SnrPoint::from_db(10.0).unwrap();
        let ch = sample_realization(&mut trial_stream(1, 1), &Geometry::default());
        assert!(!dblast_frame_outage(&ch, &frame, eta, 0.0).unwrap());
        let zero = ChannelRealization {
            h_sd: [C64::new(0.0, 0.0); 2],
            h_sr: [C64::new(0.0, 0.0); 2],
            h_rd: [[C64::new(0.0, 0.0); 2]; 2],
        };
        assert!(dblast_frame_outage(&zero, &frame, eta, 0.01).unwrap());
    }

    #[test]
    fn per_message_target() {
        let frame = FrameSpec::new(20).unwrap();
        assert!((per_message_bits(2.0, &frame) - 2.1).abs() < 1e-12);
    }
}
