//! Random birefringence along the fiber.
//!
//! A realization is a contiguous run of segments, each with constant
//! birefringence `Δn`. Segment lengths are uniform on
//! `mean·[1 - spread, 1 + spread]` and `Δn ~ N(0, sigma_dn²)` independently.
//! The relative H/V phase over `[a, b]` is `(2π/λ) ∫ Δn(x) dx`, which for a
//! piecewise-constant profile is an exact finite sum.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::Substream;

/// Statistics of the birefringence process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Standard deviation of per-segment `Δn`.
    pub sigma_dn: f64,
    /// Mean segment length, meters.
    pub mean_segment_length: f64,
    /// Relative half-width of the uniform segment-length distribution, in `[0, 1)`.
    pub segment_length_spread: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
}

impl NoiseParams {
    pub fn new(
        sigma_dn: f64,
        mean_segment_length: f64,
        segment_length_spread: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let p = NoiseParams {
            sigma_dn,
            mean_segment_length,
            segment_length_spread,
            wavelength,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameterizes by the phase standard deviation of one mean-length segment:
    /// `sigma_dn = sigma_dphi·λ / (2π·mean)`.
    pub fn from_sigma_dphi(
        sigma_dphi: f64,
        mean_segment_length: f64,
        segment_length_spread: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if !(sigma_dphi.is_finite() && sigma_dphi >= 0.0) {
            return Err(Error::invalid(format!(
                "sigma_dphi must be >= 0, got {sigma_dphi}"
            )));
        }
        NoiseParams::new(
            sigma_dphi * wavelength / (TAU * mean_segment_length),
            mean_segment_length,
            segment_length_spread,
            wavelength,
        )
    }

    /// Phase standard deviation of one mean-length segment, radians.
    pub fn sigma_dphi(&self) -> f64 {
        self.sigma_dn * TAU * self.mean_segment_length / self.wavelength
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_dn.is_finite() && self.sigma_dn >= 0.0) {
            return Err(Error::invalid(format!(
                "sigma_dn must be >= 0, got {}",
                self.sigma_dn
            )));
        }
        if !(self.mean_segment_length.is_finite() && self.mean_segment_length > 0.0) {
            return Err(Error::invalid(format!(
                "mean_segment_length must be > 0, got {}",
                self.mean_segment_length
            )));
        }
        if !(self.segment_length_spread >= 0.0 && self.segment_length_spread < 1.0) {
            return Err(Error::invalid(format!(
                "segment_length_spread must be in [0, 1), got {}",
                self.segment_length_spread
            )));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::invalid(format!(
                "wavelength must be > 0, got {}",
                self.wavelength
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub delta_n: f64,
}

/// One birefringence realization covering `[0, total_length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    segments: Vec<Segment>,
    /// `starts[i]` is the left edge of segment `i`; `starts[len]` is the total length.
    starts: Vec<f64>,
}

impl PhaseProfile {
    /// Builds a profile from explicit segments laid end to end from 0.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("profile needs at least one segment"));
        }
        let mut starts = Vec::with_capacity(segments.len() + 1);
        let mut x = 0.0;
        starts.push(x);
        for (i, s) in segments.iter().enumerate() {
            if !(s.length.is_finite() && s.length > 0.0) || !s.delta_n.is_finite() {
                return Err(Error::invalid(format!("segment {i} is invalid: {s:?}")));
            }
            x += s.length;
            starts.push(x);
        }
        Ok(PhaseProfile { segments, starts })
    }

    /// Single segment of constant birefringence.
    pub fn constant(length: f64, delta_n: f64) -> Result<Self> {
        PhaseProfile::from_segments(vec![Segment { length, delta_n }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.starts[self.segments.len()]
    }

    /// Left edge of each segment.
    pub fn segment_starts(&self) -> &[f64] {
        &self.starts[..self.segments.len()]
    }

    /// Index of the segment containing `x` (half-open `[start, end)`, last one closed).
    pub fn segment_index_at(&self, x: f64) -> usize {
        let k = self.starts.partition_point(|&s| s <= x);
        k.saturating_sub(1).min(self.segments.len() - 1)
    }

    /// `Δn(x)`; zero outside `[0, total_length]`.
    pub fn delta_n_at(&self, x: f64) -> f64 {
        if !(0.0..=self.total_length()).contains(&x) {
            return 0.0;
        }
        self.segments[self.segment_index_at(x)].delta_n
    }

    /// Writes `segment_index,length_m,delta_n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "segment_index,length_m,delta_n")?;
        for (i, s) in self.segments.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{}",
                crate::output::real(s.length),
                crate::output::real(s.delta_n)
            )?;
        }
        Ok(())
    }
}

/// Draws one realization over `[0, total_length]` from the given substream seed.
///
/// Segments are drawn left to right: a uniform length, then a Box–Muller `Δn`.
/// The last segment is cut to end exactly at `total_length`.
pub fn generate_profile(
    params: &NoiseParams,
    total_length: f64,
    seed: u64,
) -> Result<PhaseProfile> {
    params.validate()?;
    if !(total_length.is_finite() && total_length > 0.0) {
        return Err(Error::invalid(format!(
            "total_length must be > 0, got {total_length}"
        )));
    }
    let mut rng = Substream::new(seed);
    let lo = params.mean_segment_length * (1.0 - params.segment_length_spread);
    let width = 2.0 * params.mean_segment_length * params.segment_length_spread;
    // remainders below this are folded into the previous segment
    let slack = 1e-9 * total_length;

    let mut segments = Vec::with_capacity((total_length / lo).ceil() as usize + 1);
    let mut starts = Vec::with_capacity(segments.capacity() + 1);
    let mut x = 0.0;
    starts.push(x);
    loop {
        let mut length = lo + width * rng.uniform();
        let delta_n = params.sigma_dn * rng.standard_normal();
        let last = x + length >= total_length - slack;
        if last {
            length = total_length - x;
        }
        segments.push(Segment { length, delta_n });
        if last {
            starts.push(total_length);
            break;
        }
        x += length;
        starts.push(x);
    }
    Ok(PhaseProfile { segments, starts })
}

/// `(2π/λ) Σ Δn_i · |segment_i ∩ [from, to]|`.
///
/// `to` may exceed the total length by a relative 1e-9 to absorb rounding in
/// callers that compute positions arithmetically.
pub fn accumulated_phase(
    profile: &PhaseProfile,
    from: f64,
    to: f64,
    wavelength: f64,
) -> Result<f64> {
    let total = profile.total_length();
    let slack = 1e-9 * total.max(1.0);
    if !(from.is_finite() && to.is_finite()) || from < 0.0 || from > to || to > total + slack {
        return Err(Error::invalid(format!(
            "phase interval [{from}, {to}] is not inside [0, {total}]"
        )));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::invalid(format!(
            "wavelength must be > 0, got {wavelength}"
        )));
    }
    Ok(TAU / wavelength * integrate_delta_n(profile, from, to.min(total)))
}

/// `∫ Δn dx` over `[from, to]`, assumed in range.
pub(crate) fn integrate_delta_n(profile: &PhaseProfile, from: f64, to: f64) -> f64 {
    if from >= to {
        return 0.0;
    }
    let first = profile.segment_index_at(from);
    let mut sum = 0.0;
    for i in first..profile.segments.len() {
        let a = profile.starts[i].max(from);
        let b = profile.starts[i + 1].min(to);
        if b > a {
            sum += profile.segments[i].delta_n * (b - a);
        }
        if profile.starts[i + 1] >= to {
            break;
        }
    }
    sum
}

/// Pooled lag-product estimate together with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrelationEstimate {
    pub value: f64,
    /// Sample standard deviation of the products divided by `√pairs`.
    pub std_error: f64,
    pub pairs: usize,
}

/// Estimates `E[Δn(x) Δn(x + lag·spacing)]` from a regular grid `x_j = j·spacing`
/// inside each profile, pooling all pairs.
pub fn autocorrelation_estimate(
    profiles: &[PhaseProfile],
    sample_spacing: f64,
    lag_index: usize,
) -> Result<AutocorrelationEstimate> {
    if profiles.is_empty() {
        return Err(Error::invalid("autocorrelation needs at least one profile"));
    }
    if !(sample_spacing.is_finite() && sample_spacing > 0.0) {
        return Err(Error::invalid(format!(
            "sample_spacing must be > 0, got {sample_spacing}"
        )));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut pairs = 0usize;
    for p in profiles {
        let total = p.total_length();
        let grid: Vec<f64> = (0..)
            .map(|j| j as f64 * sample_spacing)
            .take_while(|&x| x < total)
            .map(|x| p.delta_n_at(x))
            .collect();
        for j in 0..grid.len().saturating_sub(lag_index) {
            let v = grid[j] * grid[j + lag_index];
            sum += v;
            sum_sq += v * v;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::invalid(
            "profiles are too short for the requested lag",
        ));
    }
    let n = pairs as f64;
    let mean = sum / n;
    let var = if pairs > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(AutocorrelationEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        pairs,
    })
}

pub fn sample_autocorrelation(
    profiles: &[PhaseProfile],
    sample_spacing: f64,
    lag_index: usize,
) -> Result<f64> {
    Ok(autocorrelation_estimate(profiles, sample_spacing, lag_index)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LAMBDA: f64 = 1550e-9;

    fn params(sigma: f64, mean: f64, spread: f64) -> NoiseParams {
        NoiseParams::new(sigma, mean, spread, LAMBDA).unwrap()
    }

    fn assert_covers(p: &PhaseProfile, total: f64) {
        let sum: f64 = p.segments().iter().map(|s| s.length).sum();
        assert!(((sum - total) / total).abs() < 1e-9);
        assert_eq!(p.total_length(), total);
        assert!(p.segments().iter().all(|s| s.length > 0.0));
        for (i, w) in p.starts.windows(2).enumerate() {
            assert!(w[1] - w[0] > 0.0, "gap/overlap at segment {i}");
        }
    }

    #[test]
    fn zero_sigma_gives_zero_birefringence() {
        let p = generate_profile(&params(0.0, 10.0, 0.5), 1000.0, 5).unwrap();
        assert!(p.segments().iter().all(|s| s.delta_n == 0.0));
    }

    #[test]
    fn segment_count_bounds() {
        let prm = params(1e-6, 10.0, 0.5);
        for seed in 0..500 {
            let p = generate_profile(&prm, 100.0, seed).unwrap();
            assert!(
                (7..=20).contains(&p.len()),
                "seed {seed}: {} segments",
                p.len()
            );
            assert_covers(&p, 100.0);
        }
    }

    #[test]
    fn zero_spread_gives_exact_segments() {
        let p = generate_profile(&params(1e-6, 10.0, 0.0), 1000.0, 3).unwrap();
        assert_eq!(p.len(), 100);
        assert_covers(&p, 1000.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let prm = params(1e-6, 10.0, 0.5);
        assert!(generate_profile(&prm, 0.0, 1).is_err());
        assert!(generate_profile(&prm, -5.0, 1).is_err());
        assert!(NoiseParams::new(-1.0, 10.0, 0.5, LAMBDA).is_err());
        assert!(NoiseParams::new(1.0, 0.0, 0.5, LAMBDA).is_err());
        assert!(NoiseParams::new(1.0, 10.0, 1.0, LAMBDA).is_err());
        assert!(NoiseParams::new(1.0, 10.0, 0.5, 0.0).is_err());
        let p = generate_profile(&prm, 100.0, 1).unwrap();
        assert!(accumulated_phase(&p, 5.0, 4.0, LAMBDA).is_err());
        assert!(accumulated_phase(&p, -1.0, 4.0, LAMBDA).is_err());
        assert!(accumulated_phase(&p, 0.0, 101.0, LAMBDA).is_err());
        assert!(sample_autocorrelation(std::slice::from_ref(&p), 0.0, 1).is_err());
        assert!(sample_autocorrelation(&[], 1.0, 1).is_err());
    }

    #[test]
    fn delta_n_moments() {
        let sigma = 1e-6;
        let prm = params(sigma, 10.0, 0.5);
        let mut values = Vec::new();
        let mut seed = 0;
        while values.len() < 100_000 {
            let p = generate_profile(&prm, 10_000.0, seed).unwrap();
            values.extend(p.segments().iter().map(|s| s.delta_n));
            seed += 1;
        }
        values.truncate(100_000);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let sd = (m2 * n / (n - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
        assert!((sd / sigma - 1.0).abs() < 0.02, "sd {sd}");
        let skew = m3 / m2.powf(1.5);
        let kurt = m4 / (m2 * m2) - 3.0;
        assert!(skew.abs() < 0.1, "skewness {skew}");
        assert!(kurt.abs() < 0.1, "excess kurtosis {kurt}");
    }

    #[test]
    fn single_segment_phase() {
        let p = PhaseProfile::constant(1.0, 1e-6).unwrap();
        let phi = accumulated_phase(&p, 0.0, 1.0, LAMBDA).unwrap();
        assert!((phi - TAU / 1.55).abs() < 1e-12);
        assert!((phi - 4.05367).abs() < 5e-6);
        assert_eq!(accumulated_phase(&p, 0.4, 0.4, LAMBDA).unwrap(), 0.0);
    }

    #[test]
    fn partial_overlaps() {
        let p = PhaseProfile::from_segments(vec![
            Segment {
                length: 2.0,
                delta_n: 1.0,
            },
            Segment {
                length: 3.0,
                delta_n: -2.0,
            },
            Segment {
                length: 1.0,
                delta_n: 4.0,
            },
        ])
        .unwrap();
        // [1, 5.5]: 1·1 + 3·(-2) + 0.5·4
        let got = integrate_delta_n(&p, 1.0, 5.5);
        assert!((got - (1.0 - 6.0 + 2.0)).abs() < 1e-15);
        assert_eq!(p.delta_n_at(2.0), -2.0);
        assert_eq!(p.delta_n_at(6.0), 4.0);
        assert_eq!(p.delta_n_at(6.5), 0.0);
    }

    #[test]
    fn autocorrelation_of_silent_profiles_is_zero() {
        let prm = params(0.0, 10.0, 0.5);
        let ps: Vec<_> = (0..5)
            .map(|s| generate_profile(&prm, 1000.0, s).unwrap())
            .collect();
        assert_eq!(sample_autocorrelation(&ps, 1.0, 0).unwrap(), 0.0);
        assert_eq!(sample_autocorrelation(&ps, 1.0, 30).unwrap(), 0.0);
    }

    #[test]
    fn sigma_dphi_round_trip() {
        let p = NoiseParams::from_sigma_dphi(0.1, 10.0, 0.5, LAMBDA).unwrap();
        assert!((p.sigma_dphi() - 0.1).abs() < 1e-15);
        assert!((p.sigma_dn - 0.1 * LAMBDA / (TAU * 10.0)).abs() < 1e-24);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = generate_profile(&params(1e-6, 10.0, 0.5), 50.0, 2).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("segment_index,length_m,delta_n"));
        assert_eq!(lines.count(), p.len());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn coverage_holds(
            sigma in 0.0f64..1e-5,
            mean in 0.1f64..50.0,
            spread in 0.0f64..0.99,
            total in 0.5f64..2000.0,
            seed in any::<u64>(),
        ) {
            let p = generate_profile(&params(sigma, mean, spread), total, seed).unwrap();
            let sum: f64 = p.segments().iter().map(|s| s.length).sum();
            prop_assert!(((sum - total) / total).abs() < 1e-9);
            prop_assert!(p.segments().iter().all(|s| s.length > 0.0));
            prop_assert_eq!(p.total_length(), total);
        }
    }

    proptest! {
        #[test]
        fn generation_is_deterministic(seed in any::<u64>(), total in 1.0f64..500.0) {
            let prm = params(1e-6, 10.0, 0.5);
            let a = generate_profile(&prm, total, seed).unwrap();
            let b = generate_profile(&prm, total, seed).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.segments().iter().zip(b.segments()) {
                prop_assert_eq!(x.length.to_bits(), y.length.to_bits());
                prop_assert_eq!(x.delta_n.to_bits(), y.delta_n.to_bits());
            }
        }

        #[test]
        fn phase_is_additive(seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0, w in 0.0f64..1.0) {
            let total = 300.0;
            let p = generate_profile(&params(1e-6, 10.0, 0.5), total, seed).unwrap();
            let mut pts = [u * total, v * total, w * total];
            pts.sort_by(f64::total_cmp);
            let [a, b, c] = pts;
            let ac = accumulated_phase(&p, a, c, LAMBDA).unwrap();
            let ab = accumulated_phase(&p, a, b, LAMBDA).unwrap();
            let bc = accumulated_phase(&p, b, c, LAMBDA).unwrap();
            prop_assert!((ac - (ab + bc)).abs() < 1e-12 * (1.0 + ac.abs()));
        }

        #[test]
        fn full_phase_is_segment_sum(seed in any::<u64>(), total in 1.0f64..3000.0) {
            let p = generate_profile(&params(1e-6, 10.0, 0.5), total, seed).unwrap();
            let full = accumulated_phase(&p, 0.0, total, LAMBDA).unwrap();
            let direct: f64 = p.segments().iter().map(|s| TAU / LAMBDA * s.length * s.delta_n).sum();
            let scale: f64 = p.segments().iter().map(|s| (TAU / LAMBDA * s.length * s.delta_n).abs()).sum();
            prop_assert!((full - direct).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
