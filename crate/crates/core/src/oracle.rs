//! Exact reference engines for small rings.
//!
//! * State vectors of up to [`MAX_SITES`] spins evolved under the spin Hamiltonian with
//!   periodic boundaries. No fermion mapping is involved, so these settle every sign
//!   convention used elsewhere.
//! * A real-space free-fermion ring: the dense `2N x 2N` Majorana generator
//!   exponentiated directly.
//!
//! Basis states are bit strings with bit `l` set when spin `l` points up (`Z_l = +1`);
//! index 0 is the all-down state.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlations::{correlation_field, FieldGrid, Observable};
use crate::error::{Error, Result};
use crate::gaussian::{check_ring, check_time, mode_propagator, CovarianceMatrix, ModeCovariance, ModeEnsemble, Quadrature};
use crate::model::XyParams;
use crate::protocols::{default_step, ParameterSchedule, ScheduleKind};

pub const MAX_SITES: usize = 14;

/// Rings up to this size are evolved by full diagonalization; larger ones by a Chebyshev
/// expansion of the propagator converged to machine precision.
pub const DENSE_MAX_SITES: usize = 10;

/// Pure state of `n_sites` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: Vec<Complex64>,
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites > MAX_SITES {
        return Err(Error::DimensionTooLarge { n_sites, max: MAX_SITES });
    }
    if n_sites < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 sites, got {n_sites}")));
    }
    Ok(())
}

impl StateVector {
    pub fn all_down(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_sites];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_sites, amplitudes })
    }

    /// `(|down...down> + |up...up>) / sqrt 2`.
    pub fn ghz(n_sites: usize) -> Result<Self> {
        let mut s = Self::all_down(n_sites)?;
        s.amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        s.amplitudes[(1 << n_sites) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_sites(n_sites)?;
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::InvalidArgument(format!(
                "expected {} amplitudes, got {}",
                1usize << n_sites,
                amplitudes.len()
            )));
        }
        let s = Self { n_sites, amplitudes };
        s.check_finite()?;
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("state norm is {norm}, not 1")));
        }
        Ok(s)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_finite(&self) -> Result<()> {
        if self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("state amplitudes"))
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
        }
        Ok(())
    }
}

fn z_of(state: usize, site: usize) -> f64 {
    if state >> site & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Nonzero matrix elements of the chain Hamiltonian in the `Z` basis: the diagonal, and
/// for each bond the amplitude for flipping both of its spins.
struct SpinHamiltonian {
    n_sites: usize,
    diagonal: Vec<f64>,
    /// Flip amplitude when the two spins of a bond are equal / different.
    flip_equal: f64,
    flip_different: f64,
}

impl SpinHamiltonian {
    fn new(n_sites: usize, p: &XyParams) -> Self {
        let diagonal = (0..1usize << n_sites)
            .map(|s| -0.5 * p.lambda * (0..n_sites).map(|l| z_of(s, l)).sum::<f64>())
            .collect();
        // (1+g) XX + (1-g) YY flips both spins with weight 2g (equal) or 2 (different).
        Self { n_sites, diagonal, flip_equal: -0.5 * p.gamma, flip_different: -0.5 }
    }

    fn bonds(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sites).map(|l| (1usize << l) | (1usize << ((l + 1) % self.n_sites)))
    }

    fn flip_amplitude(&self, s: usize, mask: usize) -> f64 {
        let bits = (s & mask).count_ones();
        if bits == 1 {
            self.flip_different
        } else {
            self.flip_equal
        }
    }

    /// Upper bound on the spectral radius.
    fn spectral_bound(&self, p: &XyParams) -> f64 {
        self.n_sites as f64 / 4.0
            * ((1.0 + p.gamma).abs() + (1.0 - p.gamma).abs() + 2.0 * p.lambda.abs())
    }

    fn apply_scaled(&self, v: &[Complex64], scale: f64, out: &mut [Complex64]) {
        out.par_iter_mut().enumerate().for_each(|(s, o)| {
            let mut acc = v[s] * self.diagonal[s];
            for mask in self.bonds() {
                acc += v[s ^ mask] * self.flip_amplitude(s, mask);
            }
            *o = acc * scale;
        });
    }

    fn dense(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n_sites;
        let mut h = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            h[(s, s)] = self.diagonal[s];
            for mask in self.bonds() {
                h[(s ^ mask, s)] += self.flip_amplitude(s, mask);
            }
        }
        h
    }
}

/// `J_0(z) ..= J_kmax(z)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum J_2k = 1`.
pub(crate) fn bessel_j_sequence(z: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = kmax.max(z.ceil() as usize);
    let mut m = top + 30 + (40.0 * top as f64).sqrt() as usize;
    m += m % 2;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for k in (1..=m).rev() {
        let prev = 2.0 * k as f64 / z * cur - next;
        next = cur;
        cur = prev;
        // cur is now J_{k-1} up to scale
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 {
            norm += if k == 1 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            let r = 1e-250;
            cur *= r;
            next *= r;
            norm *= r;
            out.iter_mut().for_each(|v| *v *= r);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// `exp(-i H tau) psi` by Chebyshev expansion. Long times are split into chunks with
/// `R tau <= 40`; the series is truncated once the remaining Bessel weights fall below
/// machine precision.
fn chebyshev_evolve(h: &SpinHamiltonian, p: &XyParams, psi: &mut Vec<Complex64>, tau: f64) {
    let r = h.spectral_bound(p).max(1e-12);
    let chunks = (r * tau / 40.0).ceil().max(1.0) as usize;
    let z = r * tau / chunks as f64;
    let kmax = (z + 12.0 * z.cbrt() + 40.0).ceil() as usize;
    let bessel = bessel_j_sequence(z, kmax);
    let last = bessel.iter().rposition(|b| b.abs() > 1e-17).unwrap_or(0).max(1);
    let dim = psi.len();
    let mut t_prev = vec![Complex64::new(0.0, 0.0); dim];
    let mut t_cur = vec![Complex64::new(0.0, 0.0); dim];
    let mut t_next = vec![Complex64::new(0.0, 0.0); dim];
    let minus_i = Complex64::new(0.0, -1.0);
    for _ in 0..chunks {
        t_prev.copy_from_slice(psi);
        h.apply_scaled(&t_prev, 1.0 / r, &mut t_cur);
        let c1 = minus_i * (2.0 * bessel[1]);
        let mut acc: Vec<Complex64> = t_prev
            .iter()
            .zip(&t_cur)
            .map(|(a, b)| a * bessel[0] + b * c1)
            .collect();
        let mut phase = minus_i;
        for &bk in &bessel[2..=last] {
            phase *= minus_i;
            h.apply_scaled(&t_cur, 2.0 / r, &mut t_next);
            let c = phase * (2.0 * bk);
            t_next
                .par_iter_mut()
                .zip(acc.par_iter_mut())
                .zip(t_prev.par_iter())
                .for_each(|((n, a), pv)| {
                    *n -= pv;
                    *a += *n * c;
                });
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
        *psi = acc;
    }
}

/// Eigendecomposition of a constant Hamiltonian for repeated exact evolution.
struct DenseEvolution {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl DenseEvolution {
    fn new(h: &SpinHamiltonian) -> Self {
        let eig = SymmetricEigen::new(h.dense());
        Self { energies: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
    }

    fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let dim = psi.len();
        let v = &self.vectors;
        let coeffs: Vec<Complex64> = (0..dim)
            .into_par_iter()
            .map(|k| {
                let c: Complex64 = (0..dim).map(|s| psi[s] * v[(s, k)]).sum();
                c * Complex64::from_polar(1.0, -self.energies[k] * t)
            })
            .collect();
        (0..dim)
            .into_par_iter()
            .map(|s| (0..dim).map(|k| coeffs[k] * v[(s, k)]).sum())
            .collect()
    }
}

fn evolve_constant(psi: &mut StateVector, p: &XyParams, tau: f64) {
    if tau == 0.0 {
        return;
    }
    let h = SpinHamiltonian::new(psi.n_sites, p);
    if psi.n_sites <= DENSE_MAX_SITES {
        psi.amplitudes = DenseEvolution::new(&h).evolve(&psi.amplitudes, tau);
    } else {
        chebyshev_evolve(&h, p, &mut psi.amplitudes, tau);
    }
}

fn check_exact_step(sched: &ParameterSchedule, dt_exact: f64) -> Result<()> {
    if sched.kind() != ScheduleKind::Constant && !(dt_exact > 0.0 && dt_exact.is_finite()) {
        return Err(Error::InvalidArgument(format!("exact step must be positive, got {dt_exact}")));
    }
    Ok(())
}

/// State at time `t`. Constant schedules are evolved exactly; otherwise the schedule is
/// replaced by piecewise-constant parameters on steps of at most `dt_exact` (midpoint
/// values), each evolved exactly.
pub fn evolve_state(
    psi0: &StateVector,
    sched: &ParameterSchedule,
    t: f64,
    dt_exact: f64,
) -> Result<StateVector> {
    check_time(t)?;
    check_exact_step(sched, dt_exact)?;
    let mut psi = psi0.clone();
    if sched.kind() == ScheduleKind::Constant {
        evolve_constant(&mut psi, &sched.segments()[0].start, t);
    } else {
        for (tau, p) in sched.substeps(0.0, t, dt_exact) {
            evolve_constant(&mut psi, &p, tau);
        }
    }
    psi.check_finite()?;
    Ok(psi)
}

/// States at each of the ascending `times`, stepping from one to the next.
pub fn evolve_series(
    psi0: &StateVector,
    sched: &ParameterSchedule,
    times: &[f64],
    dt_exact: f64,
) -> Result<Vec<StateVector>> {
    check_exact_step(sched, dt_exact)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("times must be ascending and non-negative".into()));
    }
    let n = psi0.n_sites;
    let constant = sched.kind() == ScheduleKind::Constant;
    if constant && n <= DENSE_MAX_SITES {
        let dense = DenseEvolution::new(&SpinHamiltonian::new(n, &sched.segments()[0].start));
        return Ok(times
            .iter()
            .map(|&t| {
                let amplitudes = if t == 0.0 { psi0.amplitudes.clone() } else { dense.evolve(&psi0.amplitudes, t) };
                StateVector { n_sites: n, amplitudes }
            })
            .collect());
    }
    let mut out = Vec::with_capacity(times.len());
    let mut psi = psi0.clone();
    let mut prev = 0.0;
    for &t in times {
        if constant {
            evolve_constant(&mut psi, &sched.segments()[0].start, t - prev);
        } else {
            for (tau, p) in sched.substeps(prev, t, dt_exact) {
                evolve_constant(&mut psi, &p, tau);
            }
        }
        psi.check_finite()?;
        prev = t;
        out.push(psi.clone());
    }
    Ok(out)
}

fn z_expectations(psi: &StateVector) -> (Vec<f64>, Vec<f64>) {
    let n = psi.n_sites;
    let probs: Vec<f64> = psi.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let single = (0..n)
        .map(|l| probs.iter().enumerate().map(|(s, w)| w * z_of(s, l)).sum())
        .collect();
    (probs, single)
}

/// Connected `<Z_n Z_m> - <Z_n><Z_m>`.
pub fn czz_ed(psi: &StateVector, n: usize, m: usize) -> Result<f64> {
    psi.check_site(n)?;
    psi.check_site(m)?;
    if n == m {
        return Err(Error::InvalidArgument("czz_ed needs two distinct sites".into()));
    }
    let (probs, single) = z_expectations(psi);
    let zz: f64 = probs
        .iter()
        .enumerate()
        .map(|(s, w)| w * z_of(s, n) * z_of(s, m))
        .sum();
    Ok(zz - single[n] * single[m])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StringKind {
    /// `X_i (prod Z) X_j`
    Xx,
    /// `X_i (prod Z) Y_j`
    Xy,
}

/// `<X_i (prod_{i<k<j} Z_k) O_j>` with `O = X` or `Y`.
pub fn string_ed(psi: &StateVector, i: usize, j: usize, kind: StringKind) -> Result<f64> {
    psi.check_site(i)?;
    psi.check_site(j)?;
    if i >= j {
        return Err(Error::InvalidArgument(format!("string needs i < j, got ({i}, {j})")));
    }
    let mask = (1usize << i) | (1usize << j);
    let inner = ((1usize << j) - 1) & !((1usize << (i + 1)) - 1);
    let amps = &psi.amplitudes;
    let value: Complex64 = (0..amps.len())
        .into_par_iter()
        .map(|s| {
            // Z = -1 on every inner spin that is down.
            let down = inner.count_ones() - (s & inner).count_ones();
            let sign = if down.is_multiple_of(2) { 1.0 } else { -1.0 };
            // Y|up> = i|down>, Y|down> = -i|up>
            let end = match kind {
                StringKind::Xx => Complex64::new(1.0, 0.0),
                StringKind::Xy if s >> j & 1 == 1 => Complex64::new(0.0, 1.0),
                StringKind::Xy => Complex64::new(0.0, -1.0),
            };
            amps[s ^ mask].conj() * amps[s] * end * sign
        })
        .sum();
    Ok(value.re)
}

/// `<H>` for constant parameters.
pub fn energy(psi: &StateVector, p: &XyParams) -> f64 {
    let h = SpinHamiltonian::new(psi.n_sites, p);
    let mut hv = vec![Complex64::new(0.0, 0.0); psi.amplitudes.len()];
    h.apply_scaled(&psi.amplitudes, 1.0, &mut hv);
    psi.amplitudes.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Observable between sites `0` and `x` of a state vector.
pub fn observable_ed(psi: &StateVector, observable: Observable, x: usize) -> Result<f64> {
    match observable {
        Observable::Zz => czz_ed(psi, 0, x),
        Observable::LeBound => Ok(czz_ed(psi, 0, x)?.abs()),
        Observable::StringXy => string_ed(psi, 0, x, StringKind::Xy),
        Observable::StringXx => string_ed(psi, 0, x, StringKind::Xx),
    }
}

/// Real antisymmetric Majorana generator `h` of the `n`-site ring, `dr/dt = h r`, with
/// the antiperiodic boundary bond of the even-parity sector.
pub fn majorana_generator(n_sites: usize, p: &XyParams) -> Result<DMatrix<f64>> {
    check_ring(n_sites)?;
    let mut h = DMatrix::zeros(2 * n_sites, 2 * n_sites);
    let mut set = |a: usize, b: usize, v: f64| {
        h[(a, b)] += v;
        h[(b, a)] -= v;
    };
    for l in 0..n_sites {
        let (x, pm) = (2 * l, 2 * l + 1);
        set(x, pm, p.lambda);
        let next = (l + 1) % n_sites;
        let sign = if next == 0 { -1.0 } else { 1.0 };
        let (xn, pn) = (2 * next, 2 * next + 1);
        set(pm, xn, sign * 0.5 * (1.0 + p.gamma));
        set(x, pn, -sign * 0.5 * (1.0 - p.gamma));
    }
    Ok(h)
}

/// Covariance of the ring at time `t` from `exp(h t)` of the dense generator.
pub fn real_space_covariance(n_sites: usize, t: f64, p: &XyParams) -> Result<CovarianceMatrix> {
    check_time(t)?;
    let o = (majorana_generator(n_sites, p)? * t).exp();
    let g0 = match crate::gaussian::vacuum_covariance(n_sites)? {
        CovarianceMatrix::Dense { entries, .. } => entries,
        CovarianceMatrix::Toeplitz { .. } => unreachable!("vacuum is dense"),
    };
    Ok(CovarianceMatrix::Dense { n_sites, entries: &o * g0 * o.transpose() })
}

/// Per-mode ensemble of the `n`-site ring at each of `times` under `sched`, with the
/// same piecewise-constant stepping as the state-vector path.
fn ring_ensembles(n_sites: usize, sched: &ParameterSchedule, times: &[f64], h: f64) -> Vec<ModeEnsemble> {
    let q = Quadrature { node_count: n_sites };
    let history: Vec<Vec<ModeCovariance>> = q
        .positive_nodes()
        .into_par_iter()
        .map(|phi| {
            let mut o = nalgebra::Matrix4::identity();
            let mut prev = 0.0;
            times
                .iter()
                .map(|&t| {
                    for (tau, p) in sched.substeps(prev, t, h) {
                        o = mode_propagator(phi, &p, tau) * o;
                    }
                    prev = t;
                    ModeCovariance::evolved(phi, &o)
                })
                .collect()
        })
        .collect();
    (0..times.len())
        .map(|i| ModeEnsemble::from_modes(history.iter().map(|m| m[i]).collect(), n_sites))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    StateVector,
    FiniteFermion,
}

/// Region `x + 2 v_max t < N/2 - 2` free of wrap-around effects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SafeWindow {
    pub n_sites: usize,
    pub v_max: f64,
    pub bound: f64,
}

impl SafeWindow {
    pub fn new(n_sites: usize, v_max: f64) -> Self {
        Self { n_sites, v_max, bound: n_sites as f64 / 2.0 - 2.0 }
    }

    pub fn contains(&self, x: i64, t: f64) -> bool {
        (x.unsigned_abs() as f64) + 2.0 * self.v_max * t < self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OraclePoint {
    pub x: i64,
    pub t: f64,
    pub closed_form: f64,
    pub oracle: f64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub observable: Observable,
    pub oracle: OracleKind,
    pub schedule: ParameterSchedule,
    pub quadrature: Quadrature,
    pub boundary_safe_window: SafeWindow,
    pub points: Vec<OraclePoint>,
    /// Largest `|closed_form - oracle|` over points inside the window.
    pub max_abs_error: f64,
    /// Same over all points, for information.
    pub max_abs_error_all: f64,
}

impl OracleReport {
    pub fn window_points(&self) -> usize {
        self.points.iter().filter(|p| p.in_window).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}

/// Compare the infinite-chain evaluators with an exact finite ring of `n_sites` sites.
///
/// Rings up to [`MAX_SITES`] use state vectors; larger ones use the per-mode free-fermion
/// ring. Separations run over `1..=min(x_max, n_sites - 1)`.
pub fn oracle_compare(
    sched: &ParameterSchedule,
    observable: Observable,
    n_sites: usize,
    grid: &FieldGrid,
    q: &Quadrature,
) -> Result<OracleReport> {
    check_ring(n_sites)?;
    let window = SafeWindow::new(n_sites, sched.max_speed());
    let x_max = grid.x_max.min(n_sites - 1);
    let grid = FieldGrid::new(x_max, grid.t_max, grid.dt)?;
    let times = grid.times();
    if !grid.positions().iter().any(|&x| window.contains(x, 0.0)) {
        return Err(Error::EmptySafeWindow { n_sites, t_max: grid.t_max });
    }
    let reference = correlation_field(sched, observable, &grid, q)?;
    let h = default_step(sched, &grid);

    let oracle_kind;
    let oracle_values: Vec<Vec<f64>> = if n_sites <= MAX_SITES {
        oracle_kind = OracleKind::StateVector;
        let states = evolve_series(&StateVector::all_down(n_sites)?, sched, &times, h)?;
        states
            .par_iter()
            .map(|psi| {
                (1..=x_max)
                    .map(|x| observable_ed(psi, observable, x))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?
    } else {
        oracle_kind = OracleKind::FiniteFermion;
        if !n_sites.is_multiple_of(2) {
            return Err(Error::InvalidArgument("finite-fermion ring needs even N".into()));
        }
        ring_ensembles(n_sites, sched, &times, h)
            .par_iter()
            .map(|ens| {
                (1..=x_max as i64)
                    .map(|x| observable.from_pair_block(&ens.block(-x)))
                    .collect()
            })
            .collect()
    };

    let mut points = Vec::new();
    let (mut max_in, mut max_all) = (0.0f64, 0.0f64);
    for (i, &t) in times.iter().enumerate() {
        for (j, &x) in reference.positions.iter().enumerate() {
            let (c, o) = (reference.values[i][j], oracle_values[i][j]);
            let in_window = window.contains(x, t);
            let err = (c - o).abs();
            max_all = max_all.max(err);
            if in_window {
                max_in = max_in.max(err);
            }
            points.push(OraclePoint { x, t, closed_form: c, oracle: o, in_window });
        }
    }
    Ok(OracleReport {
        observable,
        oracle: oracle_kind,
        schedule: sched.clone(),
        quadrature: *q,
        boundary_safe_window: window,
        points,
        max_abs_error: max_in,
        max_abs_error_all: max_all,
    })
}
