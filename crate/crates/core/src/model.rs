//! XY-chain parameters, the single-particle dispersion and Bogoliubov mode functions.
//!
//! The chain Hamiltonian is
//!
//! ```text
//! H = -1/4 sum_l [ (1+gamma) X_l X_{l+1} + (1-gamma) Y_l Y_{l+1} + 2 lambda Z_l ]
//! ```
//!
//! and after Jordan-Wigner, Fourier and Bogoliubov transformations each wavenumber
//! `phi` carries energy `eps(phi) = sqrt((cos phi - lambda)^2 + gamma^2 sin^2 phi)`.
//! All phases in the correlators are of the form `phi x +- 2 eps t`, so packets move
//! at `d(2 eps)/d phi`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Modes with energy below this are treated as gapless: `C` and `S` are undefined there
/// and quadrature drops the node.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// The two control knobs of the chain: anisotropy `gamma` and transverse field `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XyParams {
    pub gamma: f64,
    pub lambda: f64,
}

impl XyParams {
    pub fn new(gamma: f64, lambda: f64) -> Result<Self> {
        if !gamma.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "parameters must be finite (gamma = {gamma}, lambda = {lambda})"
            )));
        }
        Ok(Self { gamma, lambda })
    }

    /// True when the spectrum closes somewhere on `[-pi, pi]`.
    pub fn is_gapless(&self) -> bool {
        (self.gamma == 0.0 && self.lambda.abs() <= 1.0) || self.lambda.abs() == 1.0
    }

    /// Linear interpolation `self + s (other - self)`.
    pub fn lerp(&self, other: &XyParams, s: f64) -> XyParams {
        XyParams {
            gamma: self.gamma + s * (other.gamma - self.gamma),
            lambda: self.lambda + s * (other.lambda - self.lambda),
        }
    }
}

/// Per-wavenumber bundle `(phi, eps, C, S)` entering every kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunctions {
    pub phi: f64,
    pub epsilon: f64,
    /// `(cos phi - lambda) / eps`
    pub c: f64,
    /// `gamma sin phi / eps`
    pub s: f64,
}

pub fn dispersion_epsilon(phi: f64, p: &XyParams) -> f64 {
    let (sin, cos) = phi.sin_cos();
    let a = cos - p.lambda;
    let b = p.gamma * sin;
    (a * a + b * b).sqrt()
}

pub fn mode_functions(phi: f64, p: &XyParams) -> Result<ModeFunctions> {
    let (sin, cos) = phi.sin_cos();
    let epsilon = dispersion_epsilon(phi, p);
    if epsilon < EPSILON_FLOOR {
        return Err(Error::GaplessMode { phi, epsilon });
    }
    Ok(ModeFunctions {
        phi,
        epsilon,
        c: (cos - p.lambda) / epsilon,
        s: p.gamma * sin / epsilon,
    })
}

/// Packet velocity `d(2 eps)/d phi` in sites per unit time.
pub fn group_velocity(phi: f64, p: &XyParams) -> Result<f64> {
    let epsilon = dispersion_epsilon(phi, p);
    if epsilon < EPSILON_FLOOR {
        return Err(Error::GaplessMode { phi, epsilon });
    }
    let (sin, cos) = phi.sin_cos();
    Ok(2.0 * sin * ((p.gamma * p.gamma - 1.0) * cos + p.lambda) / epsilon)
}

/// Fastest packet on a grid, used as the light-cone speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSpeed {
    pub velocity: f64,
    pub phi: f64,
}

/// Uniform grid of `n` points on `[-pi, pi]` (both ends included), exactly odd under
/// `j -> n - 1 - j`.
fn symmetric_grid(n: usize) -> impl Iterator<Item = f64> {
    let denom = (n - 1) as f64;
    (0..n).map(move |j| PI * (2.0 * j as f64 - denom) / denom)
}

/// Dense scan for `max |group_velocity|`. Gapless nodes are skipped.
pub fn max_packet_speed(p: &XyParams, grid_size: usize) -> Result<PacketSpeed> {
    if grid_size < 256 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 256, got {grid_size}"
        )));
    }
    let mut best = PacketSpeed { velocity: 0.0, phi: 0.0 };
    for phi in symmetric_grid(grid_size) {
        if let Ok(v) = group_velocity(phi, p) {
            if v.abs() > best.velocity {
                best = PacketSpeed { velocity: v.abs(), phi };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSample {
    pub phi: f64,
    pub epsilon: f64,
    pub group_velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionTable {
    pub params: XyParams,
    pub samples: Vec<DispersionSample>,
}

impl DispersionTable {
    pub fn max_abs_velocity(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.group_velocity.abs())
            .fold(0.0, f64::max)
    }
}

/// Tabulate `eps` and the packet velocity on a uniform grid over `[-pi, pi]`.
///
/// The velocity has a cusp where `eps` vanishes; such nodes report `0`, the mean of the
/// one-sided limits.
pub fn sample_dispersion(p: &XyParams, grid_size: usize) -> Result<DispersionTable> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    let samples = symmetric_grid(grid_size)
        .map(|phi| DispersionSample {
            phi,
            epsilon: dispersion_epsilon(phi, p),
            group_velocity: group_velocity(phi, p).unwrap_or(0.0),
        })
        .collect();
    Ok(DispersionTable { params: *p, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn epsilon_at_band_edges() {
        for gamma in [0.0, 0.3, 1.1, 10.0] {
            let p = XyParams::new(gamma, 2.0).unwrap();
            assert_abs_diff_eq!(dispersion_epsilon(0.0, &p), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(dispersion_epsilon(PI, &p), 3.0, epsilon = 1e-15);
        }
        let ising = XyParams::new(1.0, 0.0).unwrap();
        for phi in [-3.0, -1.2, 0.1, 0.7, 2.9] {
            assert_abs_diff_eq!(dispersion_epsilon(phi, &ising), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn mode_functions_direct_substitution() {
        let p = XyParams::new(1.1, 2.0).unwrap();
        let m = mode_functions(PI / 2.0, &p).unwrap();
        let eps = (4.0f64 + 1.21).sqrt();
        assert_abs_diff_eq!(m.epsilon, eps, epsilon = 1e-14);
        assert_abs_diff_eq!(m.c, -2.0 / eps, epsilon = 1e-14);
        assert_abs_diff_eq!(m.s, 1.1 / eps, epsilon = 1e-14);

        for lambda in [0.3, 2.0, -4.0] {
            let p = XyParams::new(0.7, lambda).unwrap();
            let m = mode_functions(0.0, &p).unwrap();
            assert_eq!(m.s, 0.0);
            assert_eq!(m.c, (1.0 - lambda).signum());
        }

        let m = mode_functions(1.0, &XyParams::new(1.1, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(m.c * m.c + m.s * m.s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gapless_mode_is_flagged() {
        let p = XyParams::new(0.0, 0.5).unwrap();
        let phi = 0.5f64.acos();
        assert!(matches!(mode_functions(phi, &p), Err(Error::GaplessMode { .. })));
        assert!(matches!(group_velocity(phi, &p), Err(Error::GaplessMode { .. })));
        assert!(p.is_gapless());
        assert!(XyParams::new(0.4, 1.0).unwrap().is_gapless());
        assert!(!XyParams::new(1.1, 2.0).unwrap().is_gapless());
    }

    #[test]
    fn non_finite_params_rejected() {
        assert!(XyParams::new(f64::NAN, 1.0).is_err());
        assert!(XyParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn group_velocity_vanishes_where_expected() {
        for p in [XyParams::new(1.1, 2.0).unwrap(), XyParams::new(10.0, 0.9).unwrap()] {
            assert_eq!(group_velocity(0.0, &p).unwrap(), 0.0);
        }
        let flat = XyParams::new(1.0, 0.0).unwrap();
        for phi in [-2.0, -0.5, 0.3, 1.9] {
            assert_abs_diff_eq!(group_velocity(phi, &flat).unwrap(), 0.0, epsilon = 1e-15);
        }
    }

    /// Oracle: maximizer and value of the packet speed found by a 200k-point scan with the
    /// derivative taken by central differences of `2 eps` (independent of the analytic formula).
    fn brute_force_speed(p: &XyParams) -> (f64, f64) {
        let n = 200_000;
        let h = 1e-6;
        let mut best = (0.0f64, 0.0f64);
        for j in 0..=n {
            let phi = -PI + 2.0 * PI * j as f64 / n as f64;
            let d = (2.0 * dispersion_epsilon(phi + h, p) - 2.0 * dispersion_epsilon(phi - h, p))
                / (2.0 * h);
            if d.abs() > best.0 {
                best = (d.abs(), phi);
            }
        }
        best
    }

    #[test]
    fn max_speed_matches_brute_force_scan() {
        // Frozen from `brute_force_speed`: (1.1, 2) -> 2.0591 at |phi| = 0.9674,
        // (10, 0.9) -> 19.7917, (0.9, 0.5) -> 0.97596.
        let cases = [
            ((1.1, 2.0), 2.059_08, 0.967),
            ((10.0, 0.9), 19.791_6, 0.101),
            ((0.9, 0.5), 0.975_96, 1.465),
        ];
        for ((g, l), v_ref, phi_ref) in cases {
            let p = XyParams::new(g, l).unwrap();
            let (v_bf, phi_bf) = brute_force_speed(&p);
            assert!((v_bf - v_ref).abs() / v_ref < 1e-4, "{v_bf} vs {v_ref}");
            assert!((phi_bf.abs() - phi_ref).abs() < 2e-3, "{phi_bf}");
            let fast = max_packet_speed(&p, 1024).unwrap();
            assert!((fast.velocity - v_bf).abs() / v_bf < 1e-3);
        }
        assert_eq!(
            max_packet_speed(&XyParams::new(1.0, 0.0).unwrap(), 1024)
                .unwrap()
                .velocity,
            0.0
        );
        assert!(max_packet_speed(&XyParams::new(1.0, 0.0).unwrap(), 100).is_err());
    }

    #[test]
    fn sample_dispersion_tables() {
        let flat = sample_dispersion(&XyParams::new(1.0, 0.0).unwrap(), 4).unwrap();
        assert_eq!(flat.samples.len(), 4);
        for s in &flat.samples {
            assert_abs_diff_eq!(s.epsilon, 1.0, epsilon = 1e-15);
        }

        let t = sample_dispersion(&XyParams::new(1.1, 2.0).unwrap(), 1024).unwrap();
        let n = t.samples.len();
        for j in 0..n {
            let (a, b) = (t.samples[j], t.samples[n - 1 - j]);
            assert_eq!(a.phi, -b.phi);
            assert_eq!(a.epsilon, b.epsilon);
            assert_eq!(a.group_velocity, -b.group_velocity);
        }

        let slow = sample_dispersion(&XyParams::new(0.9, 0.5).unwrap(), 1024).unwrap();
        assert!((slow.max_abs_velocity() - 0.976).abs() < 0.01);
        assert!(sample_dispersion(&XyParams::new(1.0, 0.0).unwrap(), 1).is_err());
    }

    proptest! {
        #[test]
        fn c_squared_plus_s_squared_is_one(
            phi in -PI..PI, gamma in -12.0f64..12.0, lambda in -12.0f64..12.0
        ) {
            let p = XyParams::new(gamma, lambda).unwrap();
            if let Ok(m) = mode_functions(phi, &p) {
                prop_assert!((m.c * m.c + m.s * m.s - 1.0).abs() < 1e-12);
                prop_assert!(m.epsilon >= 0.0);
            }
        }

        #[test]
        fn symmetry_under_phi_reflection(
            phi in -PI..PI, gamma in -12.0f64..12.0, lambda in -12.0f64..12.0
        ) {
            let p = XyParams::new(gamma, lambda).unwrap();
            prop_assert_eq!(dispersion_epsilon(phi, &p), dispersion_epsilon(-phi, &p));
            if let (Ok(a), Ok(b)) = (group_velocity(phi, &p), group_velocity(-phi, &p)) {
                prop_assert_eq!(a, -b);
            }
        }

        #[test]
        fn velocity_matches_central_difference(
            phi in -3.1f64..3.1, gamma in 0.1f64..10.0, lambda in 1.2f64..5.0
        ) {
            let p = XyParams::new(gamma, lambda).unwrap();
            let h = 1e-5;
            let fd = (2.0 * dispersion_epsilon(phi + h, &p) - 2.0 * dispersion_epsilon(phi - h, &p))
                / (2.0 * h);
            let v = group_velocity(phi, &p).unwrap();
            prop_assert!((v - fd).abs() <= 1e-6 * v.abs().max(1.0));
        }
    }
}
