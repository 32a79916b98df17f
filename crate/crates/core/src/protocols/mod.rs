//! Time-dependent control: sudden quenches, ramps through ordered products of per-mode
//! exponentials, and the averaged-Hamiltonian approximation.

mod schedule;

pub use schedule::{Interpolation, ParameterSchedule, QuenchParts, ScheduleKind, Segment};

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::{
    closed_row, ensemble_row, pair_trig_rows, CorrelationField, FieldGrid, FieldMetadata,
    FieldMethod, Observable,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    block_g, check_time, mode_propagator, BlockG, ModeCovariance, ModeEnsemble, Quadrature,
};
use crate::model::{mode_functions, XyParams};

/// Mode functions of one wavenumber before and after a quench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuenchModeFunctions {
    pub phi: f64,
    pub eps0: f64,
    pub c0: f64,
    pub s0: f64,
    pub eps1: f64,
    pub c1: f64,
    pub s1: f64,
}

impl QuenchModeFunctions {
    pub fn new(phi: f64, p0: &XyParams, p1: &XyParams) -> Result<Self> {
        let a = mode_functions(phi, p0)?;
        let b = mode_functions(phi, p1)?;
        Ok(Self { phi, eps0: a.epsilon, c0: a.c, s0: a.s, eps1: b.epsilon, c1: b.c, s1: b.s })
    }

    /// `C0 S1 - C1 S0`, the sine of the Bogoliubov angle change.
    pub fn mixing(&self) -> f64 {
        self.c0 * self.s1 - self.c1 * self.s0
    }
}

/// Two hold segments; identical parameters on both sides are accepted as a trivial quench.
fn require_quench(sched: &ParameterSchedule) -> Result<QuenchParts> {
    match sched.segments() {
        [a, b] if a.interpolation == Interpolation::Hold && b.interpolation == Interpolation::Hold => {
            Ok(QuenchParts { p0: a.start, p1: b.start, t1: b.t_start })
        }
        _ => Err(Error::InvalidArgument(format!(
            "expected a quench schedule (two hold segments), got {:?}",
            sched.kind()
        ))),
    }
}

fn quench_ensemble(parts: &QuenchParts, t: f64, q: &Quadrature) -> ModeEnsemble {
    ModeEnsemble::from_propagators(q.node_count, |phi| {
        mode_propagator(phi, &parts.p1, t - parts.t1) * mode_propagator(phi, &parts.p0, parts.t1)
    })
}

/// Block `G_x(t)` after evolving with `p0` up to `t1` and with `p1` afterwards.
/// Before the quench this is the closed-form block of `p0`.
pub fn quench_covariance(x: i64, t: f64, sched: &ParameterSchedule, q: &Quadrature) -> Result<BlockG> {
    let parts = require_quench(sched)?;
    check_time(t)?;
    if t <= parts.t1 {
        return block_g(x, t, &parts.p0, q);
    }
    Ok(quench_ensemble(&parts, t, q).block(x))
}

/// Time-independent part of `C_zz^2` for `t > t1`: the packets whose phase stopped
/// advancing at the quench,
///
/// ```text
/// T1 = 1/2 < S0 S1 K sum_s sin(phi x + 2 s t1 eps0) >
/// T2 = 1/2 < S0 C1 K sum_s cos(phi x + 2 s t1 eps0) >     K = C0 S1 - C1 S0
/// ```
///
/// returned as `T1^2 - T2^2`. The value is signed; it is negative wherever the
/// second family dominates.
pub fn frozen_component(x: i64, sched: &ParameterSchedule, q: &Quadrature) -> Result<f64> {
    let parts = require_quench(sched)?;
    let xf = x as f64;
    let (mut t1, mut t2) = (0.0, 0.0);
    for phi in q.positive_nodes() {
        let Ok(m) = QuenchModeFunctions::new(phi, &parts.p0, &parts.p1) else { continue };
        let k = m.mixing();
        let (mut ss, mut sc) = (0.0, 0.0);
        for s in [1.0, -1.0] {
            let arg = phi * xf + 2.0 * s * parts.t1 * m.eps0;
            ss += arg.sin();
            sc += arg.cos();
        }
        t1 += 0.5 * m.s0 * m.s1 * k * ss;
        t2 += 0.5 * m.s0 * m.c1 * k * sc;
    }
    let w = q.half_weight();
    Ok((t1 * w).powi(2) - (t2 * w).powi(2))
}

fn field(
    observable: Observable,
    grid: &FieldGrid,
    values: Vec<Vec<f64>>,
    method: FieldMethod,
    sched: &ParameterSchedule,
    q: &Quadrature,
    step: Option<f64>,
) -> CorrelationField {
    CorrelationField {
        observable,
        times: grid.times(),
        positions: grid.positions(),
        values,
        metadata: FieldMetadata { method, schedule: sched.clone(), quadrature: *q, step },
    }
}

/// Field of `observable` under a quench: closed form for `t < t1`, two-stage per-mode
/// evolution afterwards.
pub fn quench_field(
    sched: &ParameterSchedule,
    observable: Observable,
    grid: &FieldGrid,
    q: &Quadrature,
) -> Result<CorrelationField> {
    let parts = require_quench(sched)?;
    let positions = grid.positions();
    let trig = pair_trig_rows(q, &positions);
    let values = grid
        .times()
        .par_iter()
        .map(|&t| {
            if t < parts.t1 {
                closed_row(observable, t, &parts.p0, q, &positions, &trig)
            } else {
                ensemble_row(observable, &quench_ensemble(&parts, t, q), &positions, &trig)
            }
        })
        .collect();
    Ok(field(observable, grid, values, FieldMethod::Quench, sched, q, None))
}

pub fn quench_czz_field(sched: &ParameterSchedule, grid: &FieldGrid, q: &Quadrature) -> Result<CorrelationField> {
    quench_field(sched, Observable::Zz, grid, q)
}

fn check_step(sched: &ParameterSchedule, h: f64) -> Result<()> {
    let min_segment = sched.min_segment_duration();
    if h.is_nan() || h <= 0.0 || !h.is_finite() || h > min_segment / 10.0 {
        return Err(Error::StepTooLarge { step: h, min_segment });
    }
    Ok(())
}

/// `dt / 8`, reduced to a tenth of the shortest segment when that is smaller.
pub fn default_step(sched: &ParameterSchedule, grid: &FieldGrid) -> f64 {
    (grid.dt / 8.0).min(sched.min_segment_duration() / 10.0)
}

fn ordered_product(phi: f64, sched: &ParameterSchedule, from: f64, to: f64, h: f64) -> Matrix4<f64> {
    sched
        .substeps(from, to, h)
        .into_iter()
        .fold(Matrix4::identity(), |o, (dt, p)| mode_propagator(phi, &p, dt) * o)
}

/// Per-mode evolution `O(t)` as an ordered product of exact exponentials over steps of at
/// most `h`, each using the parameters at the step midpoint; earlier steps act first.
pub fn ramp_evolution_mode(phi: f64, sched: &ParameterSchedule, t: f64, h: f64) -> Result<Matrix4<f64>> {
    check_step(sched, h)?;
    check_time(t)?;
    Ok(ordered_product(phi, sched, 0.0, t, h))
}

/// Field of `observable` under the time-ordered evolution with step `h`.
pub fn ramp_field(
    sched: &ParameterSchedule,
    observable: Observable,
    grid: &FieldGrid,
    h: f64,
    q: &Quadrature,
) -> Result<CorrelationField> {
    check_step(sched, h)?;
    let times = grid.times();
    let positions = grid.positions();
    let trig = pair_trig_rows(q, &positions);
    // Each node walks the time grid once; history[j][i] is node j at times[i].
    let history: Vec<Vec<ModeCovariance>> = q
        .positive_nodes()
        .into_par_iter()
        .map(|phi| {
            let mut o = Matrix4::identity();
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    o = ordered_product(phi, sched, prev, t, h) * o;
                    prev = t;
                    ModeCovariance::evolved(phi, &o)
                })
                .collect()
        })
        .collect();
    let values = (0..times.len())
        .into_par_iter()
        .map(|i| {
            let modes = history.iter().map(|h| h[i]).collect();
            let ens = ModeEnsemble::from_modes(modes, q.node_count);
            ensemble_row(observable, &ens, &positions, &trig)
        })
        .collect();
    Ok(field(observable, grid, values, FieldMethod::TimeOrdered, sched, q, Some(h)))
}

pub fn ramp_czz_field(
    sched: &ParameterSchedule,
    grid: &FieldGrid,
    h: f64,
    q: &Quadrature,
) -> Result<CorrelationField> {
    ramp_field(sched, Observable::Zz, grid, h, q)
}

/// `C_zz` with each time evolved for its full duration under the parameters averaged
/// over `[0, t]`. The generator is linear in the parameters, so this is the
/// constant-parameter closed form at the averaged point.
pub fn averaged_hamiltonian_field(
    sched: &ParameterSchedule,
    grid: &FieldGrid,
    q: &Quadrature,
) -> Result<CorrelationField> {
    let positions = grid.positions();
    let trig = pair_trig_rows(q, &positions);
    let values = grid
        .times()
        .par_iter()
        .map(|&t| closed_row(Observable::Zz, t, &sched.average_params(t), q, &positions, &trig))
        .collect();
    Ok(field(Observable::Zz, grid, values, FieldMethod::Averaged, sched, q, None))
}
