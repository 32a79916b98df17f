//! Self-checks behind `validate`. Each check is cheap enough to run on every build.

use spinwave::correlations::{czz_closed, czz_wick, FieldGrid, Observable};
use spinwave::gaussian::{block_distance, block_g, covariance_at, finite_covariance, mode_propagator, BlockG};
use spinwave::model::{dispersion_epsilon, group_velocity};
use spinwave::oracle::oracle_compare;
use spinwave::protocols::{frozen_component, quench_covariance, ramp_evolution_mode, ParameterSchedule};
use spinwave::{Quadrature, Result, XyParams};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Compare a measured deviation against a bound; errors count as failures.
fn within(name: &'static str, bound: f64, measured: Result<f64>) -> Check {
    match measured {
        Ok(v) => Check { name, passed: v <= bound, detail: format!("{v:.3e} (bound {bound:.0e})") },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

fn params() -> [XyParams; 3] {
    [(1.1, 2.0), (0.9, 0.5), (10.0, 0.9)].map(|(g, l)| XyParams { gamma: g, lambda: l })
}

const PHIS: [f64; 5] = [0.1, 0.7, 1.3, 2.2, 3.0];

pub fn invariants() -> Vec<Check> {
    let q = Quadrature { node_count: 1024 };
    vec![
        within("propagator-orthogonal", 1e-12, Ok(params().iter().flat_map(|p| {
            PHIS.map(|phi| {
                let o = mode_propagator(phi, p, 0.7);
                let g = o * o.transpose();
                (0..16).map(|k| (g[(k % 4, k / 4)] - f64::from(u8::from(k % 5 == 0))).abs()).fold(0.0, f64::max)
            })
        }).fold(0.0, f64::max))),
        within("vacuum-at-zero-time", 1e-12, (|| {
            let mut worst = 0.0f64;
            for p in params() {
                for x in -5..=5 {
                    worst = worst.max(block_distance(&block_g(x, 0.0, &p, &q)?, &BlockG::vacuum(x)));
                }
            }
            Ok(worst)
        })()),
        within("czz-closed-equals-wick", 1e-10, (|| {
            let mut worst = 0.0f64;
            for p in params() {
                let cov = covariance_at(1.5, &p, 12, &q)?;
                for x in 1..=12 {
                    worst = worst.max((czz_closed(x as i64, 1.5, &p, &q)? - czz_wick(&cov, 0, x)?).abs());
                }
            }
            Ok(worst)
        })()),
        within("finite-state-pure", 1e-10, (|| {
            let mut worst = 0.0f64;
            for p in params() {
                let cov = finite_covariance(32, 2.0, &p)?;
                worst = worst.max(cov.purity_defect().unwrap_or(f64::INFINITY)).max(cov.antisymmetry_defect());
            }
            Ok(worst)
        })()),
        within("dispersion-symmetric", 1e-12, (|| {
            let mut worst = 0.0f64;
            for p in params() {
                for phi in PHIS {
                    worst = worst
                        .max((dispersion_epsilon(phi, &p) - dispersion_epsilon(-phi, &p)).abs())
                        .max((group_velocity(phi, &p)? + group_velocity(-phi, &p)?).abs());
                }
            }
            Ok(worst)
        })()),
        within("trivial-quench", 1e-12, (|| {
            let p = params()[0];
            let sched = ParameterSchedule::quench(p, p, 1.0, 3.0)?;
            let mut worst = frozen_component(4, &sched, &q)?.abs();
            for x in [-3, 0, 2, 7] {
                worst = worst.max(block_distance(&quench_covariance(x, 2.5, &sched, &q)?, &block_g(x, 2.5, &p, &q)?));
            }
            Ok(worst)
        })()),
        within("constant-ramp-exact", 1e-10, (|| {
            let mut worst = 0.0f64;
            for p in params() {
                let sched = ParameterSchedule::constant(p, 10.0)?;
                for phi in PHIS {
                    let o = ramp_evolution_mode(phi, &sched, 5.0, 0.1)?;
                    worst = worst.max((o - mode_propagator(phi, &p, 5.0)).abs().max());
                }
            }
            Ok(worst)
        })()),
        schedule_round_trip(),
    ]
}

fn schedule_round_trip() -> Check {
    let text = "hold 0 20 0.9 0.5\nhold 20 40 0.1 10\n# ramp\n";
    let ramp = "hold 0 10 1.1 2\nlinear 10 20 1.1 2 10 0.9\nhold 20 30 10 0.9\n";
    let ok = [text, ramp].iter().all(|t| match ParameterSchedule::parse(t) {
        Ok(s) => ParameterSchedule::parse(&s.to_text()).as_ref() == Ok(&s),
        Err(_) => false,
    });
    Check { name: "schedule-round-trip", passed: ok, detail: "quench and ramp files".into() }
}

pub fn oracle() -> Vec<Check> {
    let q = Quadrature { node_count: 2048 };
    let cases: [(&'static str, XyParams, Observable); 4] = [
        ("state-vector-zz", XyParams { gamma: 1.1, lambda: 2.0 }, Observable::Zz),
        ("state-vector-string-xy", XyParams { gamma: 1.1, lambda: 2.0 }, Observable::StringXy),
        ("state-vector-string-xx", XyParams { gamma: 0.9, lambda: 0.5 }, Observable::StringXx),
        ("state-vector-zz-ordered", XyParams { gamma: 0.9, lambda: 0.5 }, Observable::Zz),
    ];
    let mut checks: Vec<Check> = cases
        .iter()
        .map(|(name, p, obs)| {
            within(name, 1e-8, (|| {
                let sched = ParameterSchedule::constant(*p, 1.0)?;
                Ok(oracle_compare(&sched, *obs, 12, &FieldGrid::new(11, 1.0, 0.25)?, &q)?.max_abs_error)
            })())
        })
        .collect();
    checks.push(within("state-vector-quench", 1e-8, (|| {
        let sched = ParameterSchedule::quench(
            XyParams { gamma: 0.9, lambda: 0.5 },
            XyParams { gamma: 1.1, lambda: 2.0 },
            0.5,
            1.0,
        )?;
        Ok(oracle_compare(&sched, Observable::Zz, 12, &FieldGrid::new(11, 1.0, 0.25)?, &q)?.max_abs_error)
    })()));
    checks.push(within("fermion-ring-ramp", 1e-8, (|| {
        let sched = ParameterSchedule::linear_ramp(
            XyParams { gamma: 1.1, lambda: 2.0 },
            XyParams { gamma: 0.9, lambda: 0.5 },
            0.0,
            1.0,
            1.5,
        )?;
        Ok(oracle_compare(&sched, Observable::StringXx, 64, &FieldGrid::new(10, 1.5, 0.25)?, &q)?.max_abs_error)
    })()));
    checks
}
