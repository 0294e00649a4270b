//! Gaussian-beam / MRR retro-link budget and scan scheduling.
//!
//! Double-pass model: the interrogating beam propagates to range L with
//! radius w(L); the MRR aperture captures a fraction of it; the return beam
//! leaves the aperture as a Gaussian with waist equal to the aperture radius
//! and is captured by the UAV's receive aperture. Pointing jitter displaces
//! the forward beam center by a Rayleigh-distributed radial error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamParams {
    /// Wavelength, meters.
    pub wavelength: f64,
    /// Transmit power, watts.
    pub transmit_power: f64,
    /// Waist radius, meters.
    pub w0: f64,
    /// Beam radius at interrogation range, meters.
    pub wz_target: f64,
    /// UAV receive-aperture radius for the return pass, meters.
    pub rx_aperture_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MrrParams {
    /// Retro-reflector aperture radius, meters.
    pub aperture_radius: f64,
    /// Round-trip reflectivity, (0,1].
    pub reflectivity: f64,
    /// Modulation depth, (0,1].
    pub modulation_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkNoise {
    /// Radial std-dev of beam-center error at the target plane, meters.
    pub pointing_jitter_sigma: f64,
    /// Minimum detectable received power, watts.
    pub detector_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Seconds per pointing direction.
    pub dwell_time: f64,
    pub num_uavs: u32,
    /// Square meters.
    pub region_area: f64,
    /// ≥ 1; fractional overlap between adjacent footprints.
    pub overlap_factor: f64,
}

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("beam radius {wz} m unreachable at range {range} m (minimum {min:.4} m)")]
    WaistUnreachable { wz: f64, range: f64, min: f64 },
    #[error("wz_values must be non-empty, positive, and strictly increasing")]
    BadSweep,
}

/// Rayleigh range L_R = π·w0²/λ.
pub fn rayleigh_range(beam: &BeamParams) -> f64 {
    std::f64::consts::PI * beam.w0 * beam.w0 / beam.wavelength
}

/// Gaussian beam radius w(L) = w0·√(1 + (L/L_R)²).
pub fn beam_radius_at(range_m: f64, beam: &BeamParams) -> f64 {
    debug_assert!(range_m >= 0.0);
    let ratio = range_m / rayleigh_range(beam);
    beam.w0 * (1.0 + ratio * ratio).sqrt()
}

/// Waist radius whose beam radius at `range_m` equals `wz`.
///
/// Two waists satisfy w(L) = wz; the smaller (strongly diverging) root is
/// returned. Unreachable when wz² < 2·L·λ/π.
pub fn waist_for_radius_at(wz: f64, range_m: f64, wavelength: f64) -> Result<f64, OpticsError> {
    let min_wz2 = 2.0 * range_m * wavelength / std::f64::consts::PI;
    let disc = wz.powi(4) - min_wz2 * min_wz2;
    if disc < 0.0 {
        return Err(OpticsError::WaistUnreachable {
            wz,
            range: range_m,
            min: min_wz2.sqrt(),
        });
    }
    // Small root via the product of roots (u₋·u₊ = (Lλ/π)²) to avoid
    // cancellation when wz ≫ w0.
    let u_plus = 0.5 * (wz * wz + disc.sqrt());
    let c = range_m * wavelength / std::f64::consts::PI;
    Ok((c * c / u_plus).sqrt())
}

/// Fraction of a centered Gaussian beam of radius `w` captured by a disc of
/// radius `a`: 1 − exp(−2a²/w²).
fn on_axis_capture(a: f64, w: f64) -> f64 {
    1.0 - (-2.0 * a * a / (w * w)).exp()
}

/// Exponentially scaled modified Bessel function e^{−x}·I₀(x), x ≥ 0
/// (Abramowitz & Stegun 9.8.1–9.8.2).
fn i0e(x: f64) -> f64 {
    if x < 3.75 {
        let t = x / 3.75;
        let t2 = t * t;
        let i0 = 1.0
            + t2 * (3.515_622_9
                + t2 * (3.089_942_4
                    + t2 * (1.206_749_2
                        + t2 * (0.265_973_2 + t2 * (0.036_076_8 + t2 * 0.004_581_3)))));
        i0 * (-x).exp()
    } else {
        let t = 3.75 / x;
        let p = 0.398_942_28
            + t * (0.013_285_92
                + t * (0.002_253_19
                    + t * (-0.001_575_65
                        + t * (0.009_162_81
                            + t * (-0.020_577_06
                                + t * (0.026_355_37 + t * (-0.016_476_33 + t * 0.003_923_77)))))));
        p / x.sqrt()
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fb: f64,
        fc: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let c = 0.5 * (a + b);
        let d = 0.5 * (a + c);
        let e = 0.5 * (c + b);
        let (fd, fe) = (f(d), f(e));
        let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
        let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
                + step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
        }
    }
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    step(f, a, b, fa, fb, fc, whole, tol, 24)
}

/// Fraction of a Gaussian beam (radius `w`) whose center is displaced `r`
/// from a disc of radius `a` that lands inside the disc.
///
/// Radial form: ∫₀ᵃ (4ρ/w²)·e^{−2(ρ−r)²/w²}·i0e(4ρr/w²) dρ.
fn offset_capture(a: f64, w: f64, r: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if r == 0.0 {
        return on_axis_capture(a, w);
    }
    let w2 = w * w;
    let integrand = move |rho: f64| {
        let d = rho - r;
        (4.0 * rho / w2) * (-2.0 * d * d / w2).exp() * i0e(4.0 * rho * r / w2)
    };
    adaptive_simpson(&integrand, 0.0, a, 1e-10).clamp(0.0, 1.0)
}

/// Capture fraction of the return pass: the retro beam leaves the MRR with
/// waist equal to the aperture radius and diverges by diffraction.
fn return_capture(range_m: f64, beam: &BeamParams, mrr: &MrrParams) -> f64 {
    let a = mrr.aperture_radius;
    let lr = std::f64::consts::PI * a * a / beam.wavelength;
    let ratio = range_m / lr;
    let w_back = a * (1.0 + ratio * ratio).sqrt();
    on_axis_capture(beam.rx_aperture_radius, w_back)
}

/// Mean received power for a perfectly pointed double-pass link.
pub fn received_power(range_m: f64, beam: &BeamParams, mrr: &MrrParams) -> f64 {
    received_power_at_offset(range_m, beam, mrr, 0.0)
}

fn received_power_at_offset(range_m: f64, beam: &BeamParams, mrr: &MrrParams, r: f64) -> f64 {
    debug_assert!(range_m > 0.0);
    let w = beam_radius_at(range_m, beam);
    beam.transmit_power
        * offset_capture(mrr.aperture_radius, w, r)
        * mrr.reflectivity
        * mrr.modulation_depth
        * return_capture(range_m, beam, mrr)
}

/// P(received power < detector threshold) under Rayleigh pointing jitter.
///
/// Received power is strictly decreasing in the radial pointing error, so
/// the outage is the Rayleigh tail beyond the critical offset where power
/// crosses the threshold; the crossing is located by bisection.
pub fn outage_probability(
    range_m: f64,
    beam: &BeamParams,
    mrr: &MrrParams,
    noise: &LinkNoise,
) -> f64 {
    let threshold = noise.detector_threshold;
    if threshold <= 0.0 {
        return 0.0;
    }
    let p0 = received_power_at_offset(range_m, beam, mrr, 0.0);
    if p0 <= threshold {
        return 1.0;
    }
    let sigma = noise.pointing_jitter_sigma;
    if sigma == 0.0 {
        return 0.0;
    }

    let power = |r: f64| received_power_at_offset(range_m, beam, mrr, r);
    let w = beam_radius_at(range_m, beam);
    let mut hi = w.max(sigma);
    while power(hi) >= threshold {
        hi *= 2.0;
        if hi > 1e9 {
            return 0.0;
        }
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    let r_crit = 0.5 * (lo + hi);
    (-r_crit * r_crit / (2.0 * sigma * sigma)).exp()
}

/// Total scan time: N = ceil(area·overlap/(π·wz²)) pointing directions,
/// split across UAVs, dwell seconds each.
pub fn scan_time(config: &ScanConfig, wz: f64) -> f64 {
    debug_assert!(wz > 0.0);
    let footprint = std::f64::consts::PI * wz * wz;
    let directions = (config.region_area * config.overlap_factor / footprint).ceil();
    (directions / config.num_uavs as f64).ceil() * config.dwell_time
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub wz_m: f64,
    pub scan_time_s: f64,
    pub outage_probability: f64,
}

/// Evaluates the Fig.-4 style tradeoff at each `wz`: the waist is re-solved
/// so the beam radius at `range_m` equals `wz`, and the pointing jitter
/// scales with the beam (σ = jitter_fraction × wz).
pub fn tradeoff_sweep(
    wz_values: &[f64],
    range_m: f64,
    beam: &BeamParams,
    mrr: &MrrParams,
    noise: &LinkNoise,
    config: &ScanConfig,
    jitter_fraction: f64,
) -> Result<Vec<TradeoffRow>, OpticsError> {
    if wz_values.is_empty()
        || wz_values.iter().any(|&w| !(w > 0.0))
        || wz_values.windows(2).any(|p| p[1] <= p[0])
    {
        return Err(OpticsError::BadSweep);
    }
    wz_values
        .iter()
        .map(|&wz| {
            let w0 = waist_for_radius_at(wz, range_m, beam.wavelength)?;
            let beam_i = BeamParams {
                w0,
                wz_target: wz,
                ..*beam
            };
            let noise_i = LinkNoise {
                pointing_jitter_sigma: jitter_fraction * wz,
                detector_threshold: noise.detector_threshold,
            };
            Ok(TradeoffRow {
                wz_m: wz,
                scan_time_s: scan_time(config, wz),
                outage_probability: outage_probability(range_m, &beam_i, mrr, &noise_i),
            })
        })
        .collect()
}
