//! Unit-average-power rectangular M-QAM constellations.
//!
//! Points are stored on the product grid `real_levels x imag_levels`, in
//! lexicographic order of (real level, imag level), so the point index is
//! `real_index * imag_levels.len() + imag_index`.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Real,
    Imag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// Level strictly inside the level range; its detection interval is bounded.
    Interior,
    /// Outermost level on the axis; its detection interval is unbounded outward.
    Extreme,
}

/// Classification of one coordinate of a constellation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoordinateClass {
    pub axis: Axis,
    pub placement: Placement,
    /// +1 or -1. Coordinates are never zero on these grids.
    pub sign: i8,
}

impl CoordinateClass {
    pub fn is_extreme(&self) -> bool {
        self.placement == Placement::Extreme
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    order: usize,
    points: Vec<Complex64>,
    real_levels: Vec<f64>,
    imag_levels: Vec<f64>,
    scale: f64,
    bits_per_symbol: u32,
}

impl ConstellationSpec {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Result<Complex64> {
        self.points
            .get(index)
            .copied()
            .ok_or(Error::PointIndexOutOfRange {
                index,
                order: self.order,
            })
    }

    pub fn real_levels(&self) -> &[f64] {
        &self.real_levels
    }

    pub fn imag_levels(&self) -> &[f64] {
        &self.imag_levels
    }

    /// Normalization applied to the raw `{±1, ±3}/√2` grid.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    fn index_of(&self, real_index: usize, imag_index: usize) -> usize {
        real_index * self.imag_levels.len() + imag_index
    }

    fn split_index(&self, index: usize) -> (usize, usize) {
        let n_imag = self.imag_levels.len();
        (index / n_imag, index % n_imag)
    }

    /// Per-axis classes `(real, imag)` of the point at `index`.
    pub fn classify(&self, index: usize) -> Result<(CoordinateClass, CoordinateClass)> {
        if index >= self.order {
            return Err(Error::PointIndexOutOfRange {
                index,
                order: self.order,
            });
        }
        let (ri, ii) = self.split_index(index);
        Ok((
            classify_level(Axis::Real, &self.real_levels, ri),
            classify_level(Axis::Imag, &self.imag_levels, ii),
        ))
    }

    /// Hard decision: index of the nearest constellation point.
    ///
    /// Implemented as independent per-axis slicing at level midpoints; a
    /// sample exactly on a midpoint resolves to the lower level.
    pub fn detect(&self, sample: Complex64) -> Result<usize> {
        if !sample.re.is_finite() || !sample.im.is_finite() {
            return Err(Error::NonFiniteSample(sample));
        }
        let ri = slice_axis(&self.real_levels, sample.re);
        let ii = slice_axis(&self.imag_levels, sample.im);
        Ok(self.index_of(ri, ii))
    }

    /// Half the distance between adjacent levels on each axis `(real, imag)`.
    pub fn half_spacing(&self) -> (f64, f64) {
        let half = |levels: &[f64]| (levels[1] - levels[0]) / 2.0;
        (half(&self.real_levels), half(&self.imag_levels))
    }

    /// Exact symbol error rate of this constellation on an AWGN channel when
    /// the received sample is `d + n`, `n ~ CN(0, 1/snr)`, with `d` drawn
    /// uniformly from the points.
    pub fn awgn_ser(&self, snr: f64) -> f64 {
        let per_axis_sigma = (1.0 / (2.0 * snr)).sqrt();
        let (hr, hi) = self.half_spacing();
        let qr = q_function(hr / per_axis_sigma);
        let qi = q_function(hi / per_axis_sigma);
        let success: f64 = (0..self.order)
            .map(|k| {
                let (ri, ii) = self.split_index(k);
                let pr = axis_error(&self.real_levels, ri, qr);
                let pi = axis_error(&self.imag_levels, ii, qi);
                (1.0 - pr) * (1.0 - pi)
            })
            .sum::<f64>()
            / self.order as f64;
        1.0 - success
    }
}

fn axis_error(levels: &[f64], index: usize, q: f64) -> f64 {
    if index == 0 || index + 1 == levels.len() {
        q
    } else {
        2.0 * q
    }
}

/// Gaussian tail probability `Q(x) = P[N(0,1) > x]`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn classify_level(axis: Axis, levels: &[f64], index: usize) -> CoordinateClass {
    let level = levels[index];
    let max_abs = levels.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let placement = if level.abs() == max_abs {
        Placement::Extreme
    } else {
        Placement::Interior
    };
    CoordinateClass {
        axis,
        placement,
        sign: if level > 0.0 { 1 } else { -1 },
    }
}

fn slice_axis(levels: &[f64], value: f64) -> usize {
    levels
        .windows(2)
        .position(|w| value <= 0.5 * (w[0] + w[1]))
        .unwrap_or(levels.len() - 1)
}

/// Builds the unit-average-power constellation of the given order.
pub fn build_constellation(order: usize) -> Result<ConstellationSpec> {
    let (raw_real, raw_imag, scale): (&[f64], &[f64], f64) = match order {
        4 => (&[-1.0, 1.0], &[-1.0, 1.0], 1.0),
        8 => (&[-3.0, -1.0, 1.0, 3.0], &[-1.0, 1.0], 1.0 / 3f64.sqrt()),
        16 => (
            &[-3.0, -1.0, 1.0, 3.0],
            &[-3.0, -1.0, 1.0, 3.0],
            1.0 / 5f64.sqrt(),
        ),
        other => return Err(Error::UnsupportedOrder(other)),
    };
    let level = |raw: &f64| raw * scale / std::f64::consts::SQRT_2;
    let real_levels: Vec<f64> = raw_real.iter().map(level).collect();
    let imag_levels: Vec<f64> = raw_imag.iter().map(level).collect();
    let points = real_levels
        .iter()
        .flat_map(|&re| imag_levels.iter().map(move |&im| Complex64::new(re, im)))
        .collect();
    Ok(ConstellationSpec {
        order,
        points,
        real_levels,
        imag_levels,
        scale,
        bits_per_symbol: order.trailing_zeros(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ORDERS: [usize; 3] = [4, 8, 16];

    fn raw(spec: &ConstellationSpec, index: usize) -> (f64, f64) {
        let p = spec.point(index).unwrap() * std::f64::consts::SQRT_2 / spec.scale();
        (p.re.round(), p.im.round())
    }

    fn index_of_raw(spec: &ConstellationSpec, re: f64, im: f64) -> usize {
        (0..spec.order()).find(|&k| raw(spec, k) == (re, im)).unwrap()
    }

    #[test]
    fn unit_average_power() {
        for order in ORDERS {
            let spec = build_constellation(order).unwrap();
            let mean = spec.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12, "{order}-QAM mean power {mean}");
            assert_eq!(spec.points().len(), order);
        }
    }

    #[test]
    fn scale_factors() {
        let qpsk = build_constellation(4).unwrap();
        assert_eq!(qpsk.scale(), 1.0);
        for p in qpsk.points() {
            assert_relative_eq!(p.norm_sqr(), 1.0, epsilon = 1e-15);
        }
        assert_relative_eq!(build_constellation(8).unwrap().scale(), 1.0 / 3f64.sqrt());
        assert_relative_eq!(build_constellation(16).unwrap().scale(), 1.0 / 5f64.sqrt());
    }

    #[test]
    fn eight_qam_is_four_by_two() {
        let spec = build_constellation(8).unwrap();
        assert_eq!(spec.real_levels().len(), 4);
        assert_eq!(spec.imag_levels().len(), 2);
        assert_eq!(spec.bits_per_symbol(), 3);
    }

    #[test]
    fn lexicographic_ordering() {
        for order in ORDERS {
            let spec = build_constellation(order).unwrap();
            for w in spec.points().windows(2) {
                assert!(w[0].re < w[1].re || (w[0].re == w[1].re && w[0].im < w[1].im));
            }
        }
    }

    #[test]
    fn unsupported_order() {
        let err = build_constellation(32).unwrap_err();
        assert!(err.to_string().contains("4, 8 and 16"));
        assert!(build_constellation(0).is_err());
    }

    #[test]
    fn classify_examples() {
        let qam16 = build_constellation(16).unwrap();
        let (r, i) = qam16.classify(index_of_raw(&qam16, 1.0, 1.0)).unwrap();
        assert_eq!((r.placement, i.placement), (Placement::Interior, Placement::Interior));

        let (r, i) = qam16.classify(index_of_raw(&qam16, 3.0, -3.0)).unwrap();
        assert_eq!((r.placement, r.sign), (Placement::Extreme, 1));
        assert_eq!((i.placement, i.sign), (Placement::Extreme, -1));

        let qam4 = build_constellation(4).unwrap();
        for k in 0..4 {
            let (r, i) = qam4.classify(k).unwrap();
            assert!(r.is_extreme() && i.is_extreme());
        }

        let qam8 = build_constellation(8).unwrap();
        let (r, i) = qam8.classify(index_of_raw(&qam8, 1.0, -1.0)).unwrap();
        assert_eq!(r.placement, Placement::Interior);
        assert_eq!((i.placement, i.sign), (Placement::Extreme, -1));

        assert!(qam8.classify(8).is_err());
    }

    #[test]
    fn class_counts() {
        for (order, both_interior, mixed, both_extreme) in [(4, 0, 0, 4), (8, 0, 4, 4), (16, 4, 8, 4)] {
            let spec = build_constellation(order).unwrap();
            let mut counts = [0usize; 3];
            for k in 0..order {
                let (r, i) = spec.classify(k).unwrap();
                counts[r.is_extreme() as usize + i.is_extreme() as usize] += 1;
            }
            assert_eq!(counts, [both_interior, mixed, both_extreme], "{order}-QAM");
        }
    }

    #[test]
    fn detect_round_trip() {
        for order in ORDERS {
            let spec = build_constellation(order).unwrap();
            for (k, p) in spec.points().iter().enumerate() {
                assert_eq!(spec.detect(*p).unwrap(), k);
            }
        }
    }

    #[test]
    fn detect_far_outside_maps_to_extreme() {
        let spec = build_constellation(16).unwrap();
        let max = spec.real_levels()[3];
        let interior_im = spec.imag_levels()[2];
        let k = spec.detect(Complex64::new(10.0 * max, interior_im)).unwrap();
        let (r, i) = spec.classify(k).unwrap();
        assert_eq!((r.placement, r.sign), (Placement::Extreme, 1));
        assert_eq!(i.placement, Placement::Interior);
        let k = spec.detect(Complex64::new(-10.0 * max, interior_im)).unwrap();
        assert_eq!(spec.classify(k).unwrap().0.sign, -1);
    }

    #[test]
    fn detect_midpoint_goes_low() {
        let spec = build_constellation(16).unwrap();
        let (l0, l1) = (spec.real_levels()[1], spec.real_levels()[2]);
        let im = spec.imag_levels()[0];
        let k = spec.detect(Complex64::new(0.5 * (l0 + l1), im)).unwrap();
        assert_eq!(k, spec.index_of(1, 0));
    }

    #[test]
    fn detect_rejects_non_finite() {
        let spec = build_constellation(4).unwrap();
        assert!(spec.detect(Complex64::new(f64::NAN, 0.0)).is_err());
        assert!(spec.detect(Complex64::new(0.0, f64::INFINITY)).is_err());
    }

    #[test]
    fn slicing_matches_nearest_point_search() {
        for order in ORDERS {
            let spec = build_constellation(order).unwrap();
            // offset grid so no sample lands on an exact midpoint
            let n = 401;
            for a in 0..n {
                for b in 0..n {
                    let s = Complex64::new(
                        -2.0 + 4.0 * (a as f64 + 0.37) / n as f64,
                        -2.0 + 4.0 * (b as f64 + 0.61) / n as f64,
                    );
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (k, p) in spec.points().iter().enumerate() {
                        let d = (s - p).norm_sqr();
                        if d < best_d {
                            best_d = d;
                            best = k;
                        }
                    }
                    assert_eq!(spec.detect(s).unwrap(), best, "{order}-QAM sample {s}");
                }
            }
        }
    }

    #[test]
    fn qpsk_ser_closed_form() {
        let spec = build_constellation(4).unwrap();
        for snr in [1.0, 4.0, 10.0] {
            let q = q_function(f64::sqrt(snr));
            assert_relative_eq!(spec.awgn_ser(snr), 2.0 * q - q * q, max_relative = 1e-12);
        }
    }

    #[test]
    fn q_function_values() {
        assert_relative_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        // Q(1.959963985) = 0.025
        assert_relative_eq!(q_function(1.959963984540054), 0.025, max_relative = 1e-9);
    }
}
