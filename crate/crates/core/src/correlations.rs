//! String correlators, the connected `ZZ` correlator and space-time correlation fields.
//!
//! For sites `n < m` at distance `d = m - n` the pair block is `G_{-d}` (row `n`, column
//! `m`), and in terms of the packet integrals of [`crate::gaussian`]
//!
//! ```text
//! <X_n Z..Z Y_m> =  Gamma(x_n, x_m) = -A(d)
//! <X_n Z..Z X_m> = -Gamma(p_n, x_m) =  B(d) + D(d)
//! C_zz(n, m)     =  Gamma(x_n,p_m) Gamma(p_n,x_m) - Gamma(x_n,x_m) Gamma(p_n,p_m)
//!                =  A(d)^2 + B(d)^2 - D(d)^2
//! ```
//!
//! These signs were fixed against exact diagonalization of small rings.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gaussian::{check_time, BlockG, ClosedKernels, CovarianceMatrix, ModeEnsemble, Quadrature, TrigRow};
use crate::model::{mode_functions, XyParams};
use crate::protocols::{self, ParameterSchedule, ScheduleKind};

/// Which correlator a field holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Observable {
    /// Connected `<Z_n Z_m> - <Z_n><Z_m>`, signed.
    Zz,
    /// `<X_n (prod Z) Y_m>`.
    StringXy,
    /// `<X_n (prod Z) X_m>`.
    StringXx,
    /// `|C_zz|`, a lower bound on the localisable entanglement.
    LeBound,
}

impl Observable {
    pub const ALL: [Observable; 4] =
        [Observable::Zz, Observable::StringXy, Observable::StringXx, Observable::LeBound];

    pub fn tag(&self) -> &'static str {
        match self {
            Observable::Zz => "zz",
            Observable::StringXy => "string-xy",
            Observable::StringXx => "string-xx",
            Observable::LeBound => "le-bound",
        }
    }

    /// Value for sites `n < m` from their pair block (row `n`, column `m`).
    pub fn from_pair_block(&self, b: &BlockG) -> f64 {
        match self {
            Observable::Zz => b.g01 * b.g10 - b.g00 * b.g11,
            Observable::StringXy => b.g00,
            Observable::StringXx => -b.g10,
            Observable::LeBound => (b.g01 * b.g10 - b.g00 * b.g11).abs(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!(
                "unknown observable {s:?} (expected zz, string-xy, string-xx or le-bound)"
            )))
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

/// Space-time grid: separations `1..=x_max` and times `0, dt, ..., t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldGrid {
    pub x_max: usize,
    pub t_max: f64,
    pub dt: f64,
}

impl FieldGrid {
    pub fn new(x_max: usize, t_max: f64, dt: f64) -> Result<Self> {
        if x_max < 1 {
            return Err(Error::InvalidArgument("x_max must be at least 1".into()));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { x_max, t_max, dt })
    }

    /// `k dt` for `k = 0..=floor(t_max / dt)`, tolerating round-off in the ratio.
    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.dt).collect()
    }

    pub fn positions(&self) -> Vec<i64> {
        (1..=self.x_max as i64).collect()
    }
}

/// How a field was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMethod {
    ClosedForm,
    Quench,
    TimeOrdered,
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldMetadata {
    pub method: FieldMethod,
    pub schedule: ParameterSchedule,
    pub quadrature: Quadrature,
    /// Ordered-product step, for time-ordered fields.
    pub step: Option<f64>,
}

/// Correlator sampled on a grid; `values[i][j]` is at `times[i]`, `positions[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationField {
    pub observable: Observable,
    pub times: Vec<f64>,
    pub positions: Vec<i64>,
    pub values: Vec<Vec<f64>>,
    pub metadata: FieldMetadata,
}

impl CorrelationField {
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Largest difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &CorrelationField) -> Result<f64> {
        if self.times != other.times || self.positions != other.positions {
            return Err(Error::InvalidArgument("fields are on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() < 1e-9)
    }
}

fn check_separation(x: i64) -> Result<()> {
    if x == 0 {
        return Err(Error::InvalidArgument("separation must be nonzero".into()));
    }
    Ok(())
}

/// Sum over the positive nodes of `f(phi, eps, C, S)`, times the half-range weight.
/// Gapless nodes contribute nothing.
fn mode_integral(p: &XyParams, q: &Quadrature, f: impl Fn(f64, f64, f64, f64) -> f64) -> f64 {
    let sum: f64 = q
        .positive_nodes()
        .into_iter()
        .filter_map(|phi| mode_functions(phi, p).ok())
        .map(|m| f(m.phi, m.epsilon, m.c, m.s))
        .sum();
    sum * q.half_weight()
}

/// Two-packet integral `sum_s s <S cos(phi x + 2 s eps t)> / 2`.
fn two_packet(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> f64 {
    let xf = x as f64;
    mode_integral(p, q, |phi, eps, _c, s| {
        0.5 * s * ((phi * xf + 2.0 * eps * t).cos() - (phi * xf - 2.0 * eps * t).cos())
    })
}

/// `<X_n (prod Z) Y_{n+x}>` in the infinite chain.
pub fn string_xy(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> Result<f64> {
    check_time(t)?;
    Ok(two_packet(x, t, p, q))
}

/// `<X_n (prod Z) X_{n+x}>` in the infinite chain.
pub fn string_xx(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> Result<f64> {
    check_time(t)?;
    check_separation(x)?;
    let i = ClosedKernels::new(t, p, q).integrals(x);
    Ok(i.b + i.d)
}

/// Connected `ZZ` correlator at separation `x` from the three packet integrals,
/// `I1^2 + I2^2 - I3^2`. The result is the signed correlator itself.
pub fn czz_closed(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> Result<f64> {
    check_time(t)?;
    check_separation(x)?;
    let xf = x as f64;
    let i1 = two_packet(x, t, p, q);
    let i2 = mode_integral(p, q, |phi, eps, c, s| {
        let half: f64 = [1.0, -1.0]
            .iter()
            .map(|sg| (phi * xf + 2.0 * sg * eps * t).sin())
            .sum::<f64>()
            * 0.5;
        c * s * ((phi * xf).sin() - half)
    });
    let i3 = mode_integral(p, q, |phi, eps, c, s| {
        let half: f64 = [1.0, -1.0]
            .iter()
            .map(|sg| (phi * xf + 2.0 * sg * eps * t).cos())
            .sum::<f64>()
            * 0.5;
        c * c * (phi * xf).cos() + s * s * half
    });
    Ok(i1 * i1 + i2 * i2 - i3 * i3)
}

/// Wick contraction `<x_n p_m><p_n x_m> - <x_n x_m><p_n p_m>` of a covariance matrix.
pub fn czz_wick(cov: &CovarianceMatrix, n: usize, m: usize) -> Result<f64> {
    if n == m {
        return Err(Error::InvalidArgument("czz_wick needs two distinct sites".into()));
    }
    let b = cov.block_between(n, m).ok_or(Error::SiteOutOfRange {
        site: n.max(m),
        n_sites: cov.range() + 1,
    })?;
    Ok(Observable::Zz.from_pair_block(&b))
}

/// `|C_zz|` on the same grid, tagged `le-bound`.
pub fn le_lower_bound(field: &CorrelationField) -> Result<CorrelationField> {
    if field.observable != Observable::Zz {
        return Err(Error::WrongObservable { expected: "zz", found: field.observable.to_string() });
    }
    let mut out = field.clone();
    out.observable = Observable::LeBound;
    for v in out.values.iter_mut().flatten() {
        *v = v.abs();
    }
    Ok(out)
}

/// Trig tables for the pair blocks `G_{-x}` over the given separations.
pub(crate) fn pair_trig_rows(q: &Quadrature, positions: &[i64]) -> Vec<TrigRow> {
    let phis = q.positive_nodes();
    positions.par_iter().map(|&x| TrigRow::new(&phis, -x)).collect()
}

/// One field row from the closed-form kernels at `(t, p)`.
pub(crate) fn closed_row(
    observable: Observable,
    t: f64,
    p: &XyParams,
    q: &Quadrature,
    positions: &[i64],
    trig: &[TrigRow],
) -> Vec<f64> {
    let kernels = ClosedKernels::new(t, p, q);
    positions
        .iter()
        .zip(trig)
        .map(|(&x, row)| observable.from_pair_block(&kernels.integrals_with(row).to_block(-x)))
        .collect()
}

/// One field row from a per-mode ensemble.
pub(crate) fn ensemble_row(
    observable: Observable,
    ens: &ModeEnsemble,
    positions: &[i64],
    trig: &[TrigRow],
) -> Vec<f64> {
    positions
        .iter()
        .zip(trig)
        .map(|(&x, row)| observable.from_pair_block(&ens.block_with(-x, row)))
        .collect()
}

/// Constant-parameter field from the closed-form kernels.
pub fn constant_field(
    observable: Observable,
    p: &XyParams,
    grid: &FieldGrid,
    q: &Quadrature,
) -> Result<CorrelationField> {
    let times = grid.times();
    let positions = grid.positions();
    let trig = pair_trig_rows(q, &positions);
    let values = times
        .par_iter()
        .map(|&t| closed_row(observable, t, p, q, &positions, &trig))
        .collect();
    Ok(CorrelationField {
        observable,
        times,
        positions,
        values,
        metadata: FieldMetadata {
            method: FieldMethod::ClosedForm,
            schedule: ParameterSchedule::constant(*p, grid.t_max)?,
            quadrature: *q,
            step: None,
        },
    })
}

/// Field of `observable` under `schedule`, dispatching on the schedule kind.
///
/// Ramps use the ordered product with step `min(dt / 8, shortest segment / 10)`.
pub fn correlation_field(
    schedule: &ParameterSchedule,
    observable: Observable,
    grid: &FieldGrid,
    q: &Quadrature,
) -> Result<CorrelationField> {
    match schedule.kind() {
        ScheduleKind::Constant => {
            let mut f = constant_field(observable, &schedule.segments()[0].start, grid, q)?;
            f.metadata.schedule = schedule.clone();
            Ok(f)
        }
        ScheduleKind::Quench => protocols::quench_field(schedule, observable, grid, q),
        ScheduleKind::Ramp => {
            let h = protocols::default_step(schedule, grid);
            protocols::ramp_field(schedule, observable, grid, h, q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{covariance_at, finite_covariance, packet_integrals, vacuum_covariance};
    use proptest::prelude::*;

    fn slow() -> XyParams {
        XyParams::new(1.1, 2.0).unwrap()
    }

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn observable_tags_round_trip() {
        for o in Observable::ALL {
            assert_eq!(o.tag().parse::<Observable>().unwrap(), o);
        }
        assert!("xx".parse::<Observable>().is_err());
    }

    #[test]
    fn grid_times_include_endpoint() {
        let g = FieldGrid::new(3, 25.0, 0.25).unwrap();
        let t = g.times();
        assert_eq!(t.len(), 101);
        assert_eq!(*t.last().unwrap(), 25.0);
        assert_eq!(FieldGrid::new(2, 0.3, 0.1).unwrap().times().len(), 4);
        assert_eq!(g.positions(), vec![1, 2, 3]);
        assert!(FieldGrid::new(0, 1.0, 0.1).is_err());
        assert!(FieldGrid::new(1, 0.0, 0.1).is_err());
        assert!(FieldGrid::new(1, 1.0, -0.1).is_err());
    }

    #[test]
    fn everything_vanishes_at_t0() {
        for x in 1..6 {
            assert!(string_xy(x, 0.0, &slow(), &q()).unwrap().abs() < 1e-12);
            assert!(string_xx(x, 0.0, &slow(), &q()).unwrap().abs() < 1e-12);
            assert!(czz_closed(x, 0.0, &slow(), &q()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_chain_is_stationary() {
        let p = XyParams::new(0.0, 0.3).unwrap();
        for x in 1..6 {
            assert!(string_xy(x, 3.0, &p, &q()).unwrap().abs() < 1e-12);
            assert!(string_xx(x, 3.0, &p, &q()).unwrap().abs() < 1e-12);
            assert!(czz_closed(x, 3.0, &p, &q()).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn preconditions() {
        assert!(string_xx(0, 1.0, &slow(), &q()).is_err());
        assert!(czz_closed(0, 1.0, &slow(), &q()).is_err());
        assert!(czz_closed(1, -1.0, &slow(), &q()).is_err());
        let cov = vacuum_covariance(4).unwrap();
        assert!(czz_wick(&cov, 1, 1).is_err());
        assert!(matches!(czz_wick(&cov, 1, 4), Err(Error::SiteOutOfRange { site: 4, n_sites: 4 })));
    }

    #[test]
    fn vacuum_wick_is_zero() {
        let cov = vacuum_covariance(6).unwrap();
        for n in 0..6 {
            for m in 0..6 {
                if n != m {
                    assert_eq!(czz_wick(&cov, n, m).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn string_forms_match_covariance_elements() {
        let (p, t) = (slow(), 2.0);
        for d in 1..8 {
            let i = packet_integrals(d, t, &p, &q()).unwrap();
            assert!((string_xy(d, t, &p, &q()).unwrap() + i.a).abs() < 1e-12);
            let pair = i.to_block(d).mirrored();
            assert!((string_xy(d, t, &p, &q()).unwrap() - pair.g00).abs() < 1e-12);
            assert!((string_xx(d, t, &p, &q()).unwrap() + pair.g10).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_matches_wick_on_toeplitz() {
        let (p, t) = (slow(), 5.0);
        let cov = covariance_at(t, &p, 12, &q()).unwrap();
        let closed = czz_closed(10, t, &p, &q()).unwrap();
        let wick = czz_wick(&cov, 3, 13).unwrap();
        assert!((closed - wick).abs() < 1e-10, "{closed} vs {wick}");
        assert!((wick - czz_wick(&cov, 13, 3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn wick_is_swap_symmetric_on_finite_ring() {
        let p = XyParams::new(0.9, 0.5).unwrap();
        let cov = finite_covariance(10, 2.0, &p).unwrap();
        for (n, m) in [(1, 4), (0, 9), (2, 7)] {
            let a = czz_wick(&cov, n, m).unwrap();
            let b = czz_wick(&cov, m, n).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn field_matches_pointwise_evaluators() {
        let grid = FieldGrid::new(8, 3.0, 0.5).unwrap();
        let sched = ParameterSchedule::constant(slow(), 3.0).unwrap();
        for obs in [Observable::Zz, Observable::StringXy, Observable::StringXx] {
            let f = correlation_field(&sched, obs, &grid, &q()).unwrap();
            assert_eq!(f.values.len(), 7);
            for (i, &t) in f.times.iter().enumerate() {
                for (j, &x) in f.positions.iter().enumerate() {
                    let expect = match obs {
                        Observable::Zz => czz_closed(x, t, &slow(), &q()).unwrap(),
                        Observable::StringXy => string_xy(x, t, &slow(), &q()).unwrap(),
                        _ => string_xx(x, t, &slow(), &q()).unwrap(),
                    };
                    assert!((f.values[i][j] - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn le_bound_is_abs_and_checks_tag() {
        let grid = FieldGrid::new(10, 4.0, 0.5).unwrap();
        let f = constant_field(Observable::Zz, &slow(), &grid, &q()).unwrap();
        let b = le_lower_bound(&f).unwrap();
        assert_eq!(b.observable, Observable::LeBound);
        for (u, v) in f.values.iter().flatten().zip(b.values.iter().flatten()) {
            assert_eq!(*v, u.abs());
        }
        let direct = constant_field(Observable::LeBound, &slow(), &grid, &q()).unwrap();
        assert!(direct.max_abs_diff(&b).unwrap() < 1e-15);
        assert!(matches!(le_lower_bound(&b), Err(Error::WrongObservable { .. })));
    }

    #[test]
    fn light_cone_suppression() {
        let p = slow();
        let v = crate::model::max_packet_speed(&p, 1024).unwrap().velocity;
        let t = 5.0;
        let x0 = (2.0 * v * t + 10.0).ceil() as i64 + 1;
        for x in [x0, x0 + 5, x0 + 20] {
            assert!(czz_closed(x, t, &p, &q()).unwrap().abs() < 1e-3);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn closed_equals_wick_and_is_bounded(
            g in -3.0f64..3.0, l in -3.0f64..3.0, x in 1i64..30, t in 0.0f64..10.0
        ) {
            let p = XyParams::new(g, l).unwrap();
            let q = Quadrature::new(512).unwrap();
            let c = czz_closed(x, t, &p, &q).unwrap();
            let cov = covariance_at(t, &p, x as usize, &q).unwrap();
            let w = czz_wick(&cov, 0, x as usize).unwrap();
            prop_assert!((c - w).abs() < 1e-10);
            prop_assert!(c.abs() <= 1.0 + 1e-9);
            let s = string_xy(x, t, &p, &q).unwrap();
            prop_assert!(s.abs() <= 1.0 + 1e-9);
        }
    }
}
