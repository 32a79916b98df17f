//! Fermionic Gaussian states of the chain: covariance matrices, their block-Toeplitz
//! kernels, and the per-mode generator that evolves them.
//!
//! Majorana operators are ordered `r_{2l} = x_l`, `r_{2l+1} = p_l` (0-based sites), with
//! `x_l = (prod_{j<l} Z_j) X_l` and `p_l = (prod_{j<l} Z_j) Y_l`. The stored covariance
//! is the real antisymmetric matrix `Gamma_ab = (i/2) <[r_a, r_b]>`; for the all-down
//! state the only nonzero entries are `Gamma_{x_l, p_l} = +1`.
//!
//! A [`BlockG`] with separation `x` is the 2x2 block at row site `r` and column site `c`
//! with `x = r - c`. Its thermodynamic-limit entries are
//!
//! ```text
//! g00 = -g11 = A(x)        A = <S sin(phi x) sin(2 eps t)>
//! g01 = D(x) + B(x)        B = <2 C S sin(phi x) sin^2(eps t)>
//! g10 = B(x) - D(x)        D = <cos(phi x) (C^2 + S^2 cos(2 eps t))>
//! ```
//!
//! where `<f> = (1/2pi) int_{-pi}^{pi} f dphi`.
//!
//! The periodic spin chain restricted to the even-parity sector (which contains the
//! all-down state) maps to antiperiodic fermions, so a ring of `N` sites has modes at
//! `phi_k = 2pi (k + 1/2) / N`. [`Quadrature`] uses the same half-integer nodes: an
//! `M`-node quadrature is literally the `N = M` ring.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dispersion_epsilon, mode_functions, XyParams, EPSILON_FLOOR};

/// Equal-weight rule on `[-pi, pi]` with nodes at `pi (2j + 1) / M`.
///
/// For the smooth periodic integrands here this is the trapezoid rule on a half-shifted
/// grid; both converge geometrically and their only error is aliasing, i.e. the
/// finite-ring revivals of an `M`-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Quadrature {
    pub node_count: usize,
}

impl Quadrature {
    pub const MIN_NODES: usize = 64;
    pub const DEFAULT_NODES: usize = 2048;

    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < Self::MIN_NODES || !node_count.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs an even node count >= {}, got {node_count}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { node_count })
    }

    /// `max(2048, next even >= 16 (2 v_max t_max + x_max))`.
    pub fn default_for(v_max: f64, t_max: f64, x_max: usize) -> Self {
        let reach = 16.0 * (2.0 * v_max * t_max + x_max as f64);
        let mut m = reach.ceil() as usize;
        m += m % 2;
        Self { node_count: m.max(Self::DEFAULT_NODES) }
    }

    /// Nodes in `(0, pi)`; the rest of the grid is their mirror image.
    pub fn positive_nodes(&self) -> Vec<f64> {
        ring_nodes(self.node_count)
    }

    /// Weight applied to a sum over [`positive_nodes`](Self::positive_nodes) of an even
    /// integrand, including the `1/(2pi)` normalization.
    pub fn half_weight(&self) -> f64 {
        2.0 / self.node_count as f64
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { node_count: Self::DEFAULT_NODES }
    }
}

/// Positive half of the antiperiodic mode set of an `n`-site ring.
pub(crate) fn ring_nodes(n: usize) -> Vec<f64> {
    (0..n / 2)
        .map(|j| PI * (2 * j + 1) as f64 / n as f64)
        .collect()
}

/// 2x2 block of the covariance matrix between sites separated by `x = row - col`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockG {
    pub x: i64,
    /// `Gamma(x_r, x_c)`
    pub g00: f64,
    /// `Gamma(x_r, p_c)`
    pub g01: f64,
    /// `Gamma(p_r, x_c)`
    pub g10: f64,
    /// `Gamma(p_r, p_c)`
    pub g11: f64,
}

impl BlockG {
    pub fn vacuum(x: i64) -> Self {
        let d = if x == 0 { 1.0 } else { 0.0 };
        Self { x, g00: 0.0, g01: d, g10: -d, g11: 0.0 }
    }

    /// `G_{-x} = -G_x^T`.
    pub fn mirrored(&self) -> Self {
        Self {
            x: -self.x,
            g00: -self.g00,
            g01: -self.g10,
            g10: -self.g01,
            g11: -self.g11,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.g00
            .abs()
            .max(self.g01.abs())
            .max(self.g10.abs())
            .max(self.g11.abs())
    }

    fn max_diff(&self, other: &BlockG) -> f64 {
        (self.g00 - other.g00)
            .abs()
            .max((self.g01 - other.g01).abs())
            .max((self.g10 - other.g10).abs())
            .max((self.g11 - other.g11).abs())
    }
}

/// Largest entrywise difference between two blocks.
pub fn block_distance(a: &BlockG, b: &BlockG) -> f64 {
    a.max_diff(b)
}

/// Covariance matrix of a Gaussian state, either as an explicit finite matrix or as the
/// translation-invariant list of blocks `G_0 ..= G_R` of an infinite chain.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceMatrix {
    Dense { n_sites: usize, entries: DMatrix<f64> },
    Toeplitz { blocks: Vec<BlockG> },
}

impl CovarianceMatrix {
    /// Block between `row` and `col` sites, if representable.
    pub fn block_between(&self, row: usize, col: usize) -> Option<BlockG> {
        let x = row as i64 - col as i64;
        match self {
            CovarianceMatrix::Dense { n_sites, entries } => {
                if row >= *n_sites || col >= *n_sites {
                    return None;
                }
                let (i, j) = (2 * row, 2 * col);
                Some(BlockG {
                    x,
                    g00: entries[(i, j)],
                    g01: entries[(i, j + 1)],
                    g10: entries[(i + 1, j)],
                    g11: entries[(i + 1, j + 1)],
                })
            }
            CovarianceMatrix::Toeplitz { .. } => self.block(x),
        }
    }

    /// Toeplitz block at separation `x`; for a dense matrix, the block between sites
    /// `(x, 0)` or `(0, -x)`.
    pub fn block(&self, x: i64) -> Option<BlockG> {
        match self {
            CovarianceMatrix::Toeplitz { blocks } => {
                let b = *blocks.get(x.unsigned_abs() as usize)?;
                Some(if x >= 0 { b } else { b.mirrored() })
            }
            CovarianceMatrix::Dense { .. } => {
                if x >= 0 {
                    self.block_between(x as usize, 0)
                } else {
                    self.block_between(0, (-x) as usize)
                }
            }
        }
    }

    /// Largest stored separation (Toeplitz) or `n_sites - 1` (dense).
    pub fn range(&self) -> usize {
        match self {
            CovarianceMatrix::Dense { n_sites, .. } => n_sites - 1,
            CovarianceMatrix::Toeplitz { blocks } => blocks.len() - 1,
        }
    }

    /// Dense `2n x 2n` section; for a Toeplitz matrix `n` must not exceed `range + 1`.
    pub fn to_dense(&self, n_sites: usize) -> Result<DMatrix<f64>> {
        match self {
            CovarianceMatrix::Dense { n_sites: n, entries } if *n == n_sites => Ok(entries.clone()),
            CovarianceMatrix::Dense { n_sites: n, .. } => Err(Error::InvalidArgument(format!(
                "dense matrix has {n} sites, requested {n_sites}"
            ))),
            CovarianceMatrix::Toeplitz { blocks } => {
                if n_sites > blocks.len() {
                    return Err(Error::InvalidArgument(format!(
                        "Toeplitz range {} too short for {n_sites} sites",
                        blocks.len() - 1
                    )));
                }
                let mut m = DMatrix::zeros(2 * n_sites, 2 * n_sites);
                for r in 0..n_sites {
                    for c in 0..n_sites {
                        let b = self.block_between(r, c).expect("within range");
                        m[(2 * r, 2 * c)] = b.g00;
                        m[(2 * r, 2 * c + 1)] = b.g01;
                        m[(2 * r + 1, 2 * c)] = b.g10;
                        m[(2 * r + 1, 2 * c + 1)] = b.g11;
                    }
                }
                Ok(m)
            }
        }
    }

    /// `max |Gamma + Gamma^T|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        match self {
            CovarianceMatrix::Dense { entries, .. } => {
                (entries + entries.transpose()).abs().max()
            }
            CovarianceMatrix::Toeplitz { blocks } => {
                // G_{-x} is reconstructed from G_x, so only the diagonal block can break it.
                let b = blocks[0];
                (2.0 * b.g00)
                    .abs()
                    .max((2.0 * b.g11).abs())
                    .max((b.g01 + b.g10).abs())
            }
        }
    }

    /// `max |Gamma^2 + 1|` for a dense matrix; pure states have `Gamma^2 = -1`.
    pub fn purity_defect(&self) -> Option<f64> {
        match self {
            CovarianceMatrix::Dense { entries, .. } => {
                let n = entries.nrows();
                Some((entries * entries + DMatrix::<f64>::identity(n, n)).abs().max())
            }
            CovarianceMatrix::Toeplitz { .. } => None,
        }
    }
}

/// Covariance of the all-spins-down product state.
pub fn vacuum_covariance(n_sites: usize) -> Result<CovarianceMatrix> {
    if n_sites < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 sites, got {n_sites}")));
    }
    let mut entries = DMatrix::zeros(2 * n_sites, 2 * n_sites);
    for l in 0..n_sites {
        entries[(2 * l, 2 * l + 1)] = 1.0;
        entries[(2 * l + 1, 2 * l)] = -1.0;
    }
    Ok(CovarianceMatrix::Dense { n_sites, entries })
}

/// The three packet integrals `A`, `B`, `D` at separation `x` (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketIntegrals {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl PacketIntegrals {
    pub fn to_block(self, x: i64) -> BlockG {
        BlockG {
            x,
            g00: self.a,
            g01: self.d + self.b,
            g10: self.b - self.d,
            g11: -self.a,
        }
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Per-node kernels of the closed-form integrals at fixed `t`. Gapless nodes carry zeros.
pub(crate) struct ClosedKernels {
    pub phis: Vec<f64>,
    pub ka: Vec<f64>,
    pub kb: Vec<f64>,
    pub kd: Vec<f64>,
    pub weight: f64,
}

impl ClosedKernels {
    pub fn new(t: f64, p: &XyParams, q: &Quadrature) -> Self {
        let phis = q.positive_nodes();
        let n = phis.len();
        let (mut ka, mut kb, mut kd) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (j, &phi) in phis.iter().enumerate() {
            let Ok(m) = mode_functions(phi, p) else { continue };
            let (s2, c2) = (2.0 * m.epsilon * t).sin_cos();
            let s1 = (m.epsilon * t).sin();
            ka[j] = m.s * s2;
            kb[j] = 2.0 * m.c * m.s * s1 * s1;
            kd[j] = m.c * m.c + m.s * m.s * c2;
        }
        Self { phis, ka, kb, kd, weight: q.half_weight() }
    }

    pub fn integrals(&self, x: i64) -> PacketIntegrals {
        let xf = x as f64;
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for j in 0..self.phis.len() {
            let (s, c) = (self.phis[j] * xf).sin_cos();
            a += s * self.ka[j];
            b += s * self.kb[j];
            d += c * self.kd[j];
        }
        PacketIntegrals { a: a * self.weight, b: b * self.weight, d: d * self.weight }
    }

    /// Same as [`integrals`](Self::integrals) with `sin/cos(phi x)` taken from a table.
    pub fn integrals_with(&self, trig: &TrigRow) -> PacketIntegrals {
        let (mut a, mut b, mut d) = (0.0, 0.0, 0.0);
        for j in 0..self.phis.len() {
            a += trig.sin[j] * self.ka[j];
            b += trig.sin[j] * self.kb[j];
            d += trig.cos[j] * self.kd[j];
        }
        PacketIntegrals { a: a * self.weight, b: b * self.weight, d: d * self.weight }
    }
}

/// `sin(phi_j x)` and `cos(phi_j x)` over the positive nodes for one separation.
pub(crate) struct TrigRow {
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
}

impl TrigRow {
    pub fn new(phis: &[f64], x: i64) -> Self {
        let xf = x as f64;
        let (sin, cos) = phis.iter().map(|&phi| (phi * xf).sin_cos()).unzip();
        Self { sin, cos }
    }
}

/// Closed-form `A`, `B`, `D` at separation `x`.
pub fn packet_integrals(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> Result<PacketIntegrals> {
    check_time(t)?;
    Ok(ClosedKernels::new(t, p, q).integrals(x))
}

/// Thermodynamic-limit block `G_x(t)` from the closed-form kernels.
pub fn block_g(x: i64, t: f64, p: &XyParams, q: &Quadrature) -> Result<BlockG> {
    Ok(packet_integrals(x, t, p, q)?.to_block(x))
}

/// Block-Toeplitz covariance with blocks `G_0 ..= G_{x_range}`.
pub fn covariance_at(
    t: f64,
    p: &XyParams,
    x_range: usize,
    q: &Quadrature,
) -> Result<CovarianceMatrix> {
    if x_range < 1 {
        return Err(Error::InvalidArgument("x_range must be at least 1".into()));
    }
    check_time(t)?;
    let kernels = ClosedKernels::new(t, p, q);
    let blocks = (0..=x_range as i64)
        .into_par_iter()
        .map(|x| kernels.integrals(x).to_block(x))
        .collect();
    Ok(CovarianceMatrix::Toeplitz { blocks })
}

/// Real antisymmetric generator of the `(phi, -phi)` mode pair.
///
/// The basis is `(x_re, p_re, x_im, p_im)`: real and imaginary parts of the Fourier
/// components of the Majoranas, which does not depend on the parameters. With
/// `a = lambda - cos phi` and `b = gamma sin phi`,
///
/// ```text
/// A = [ a J   -b X ]      J = [0 1; -1 0],  X = [0 1; 1 0]
///     [ b X    a J ]
/// ```
///
/// so `A^2 = -eps^2` and the eigenvalues are `+-i eps`, each twice.
pub fn mode_generator(phi: f64, p: &XyParams) -> Matrix4<f64> {
    let a = p.lambda - phi.cos();
    let b = p.gamma * phi.sin();
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,  a,   0.0, -b,
        -a,   0.0, -b,  0.0,
        0.0,  b,   0.0, a,
        b,    0.0, -a,  0.0,
    );
    m
}

/// `exp(tau A)` in closed form, using `A^2 = -eps^2`.
pub fn mode_propagator(phi: f64, p: &XyParams, tau: f64) -> Matrix4<f64> {
    let eps = dispersion_epsilon(phi, p);
    let (s, c) = (eps * tau).sin_cos();
    let sinc = if eps * tau.abs() < 1e-8 { tau } else { s / eps };
    Matrix4::identity() * c + mode_generator(phi, p) * sinc
}

fn vacuum_mode_covariance() -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        0.0,  1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0,  0.0, 0.0, 1.0,
        0.0,  0.0, -1.0, 0.0,
    );
    m
}

/// Fourier-space covariance of one mode pair, stored as real and imaginary 2x2 parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCovariance {
    pub phi: f64,
    pub re: Matrix2<f64>,
    pub im: Matrix2<f64>,
}

impl ModeCovariance {
    /// State reached from the vacuum by the orthogonal per-mode evolution `o`.
    pub fn evolved(phi: f64, o: &Matrix4<f64>) -> Self {
        let g = o * vacuum_mode_covariance() * o.transpose();
        Self {
            phi,
            re: g.fixed_view::<2, 2>(0, 0).into_owned(),
            im: g.fixed_view::<2, 2>(2, 0).into_owned(),
        }
    }
}

/// Per-node Fourier covariances that assemble into real-space blocks.
#[derive(Debug, Clone)]
pub struct ModeEnsemble {
    pub modes: Vec<ModeCovariance>,
    weight: f64,
}

impl ModeEnsemble {
    /// Evolve every node of an `n`-node ring with its own orthogonal matrix.
    pub fn from_propagators<F>(n_nodes: usize, propagator: F) -> Self
    where
        F: Fn(f64) -> Matrix4<f64> + Sync,
    {
        let modes = ring_nodes(n_nodes)
            .into_par_iter()
            .map(|phi| ModeCovariance::evolved(phi, &propagator(phi)))
            .collect();
        Self { modes, weight: 2.0 / n_nodes as f64 }
    }

    pub fn from_modes(modes: Vec<ModeCovariance>, n_nodes: usize) -> Self {
        Self { modes, weight: 2.0 / n_nodes as f64 }
    }

    pub fn block(&self, x: i64) -> BlockG {
        let xf = x as f64;
        let mut acc = Matrix2::<f64>::zeros();
        for m in &self.modes {
            let (s, c) = (m.phi * xf).sin_cos();
            acc += m.re * c - m.im * s;
        }
        acc *= self.weight;
        BlockG { x, g00: acc[(0, 0)], g01: acc[(0, 1)], g10: acc[(1, 0)], g11: acc[(1, 1)] }
    }

    pub(crate) fn block_with(&self, x: i64, trig: &TrigRow) -> BlockG {
        let mut acc = Matrix2::<f64>::zeros();
        for (j, m) in self.modes.iter().enumerate() {
            acc += m.re * trig.cos[j] - m.im * trig.sin[j];
        }
        acc *= self.weight;
        BlockG { x, g00: acc[(0, 0)], g01: acc[(0, 1)], g10: acc[(1, 0)], g11: acc[(1, 1)] }
    }

    /// Dense covariance of the `n`-site ring; `n` must equal the node count.
    pub fn to_dense(&self, n_sites: usize) -> CovarianceMatrix {
        let blocks: Vec<BlockG> = (-(n_sites as i64 - 1)..n_sites as i64)
            .map(|x| self.block(x))
            .collect();
        let offset = n_sites - 1;
        let mut entries = DMatrix::zeros(2 * n_sites, 2 * n_sites);
        for r in 0..n_sites {
            for c in 0..n_sites {
                let b = blocks[r + offset - c];
                entries[(2 * r, 2 * c)] = b.g00;
                entries[(2 * r, 2 * c + 1)] = b.g01;
                entries[(2 * r + 1, 2 * c)] = b.g10;
                entries[(2 * r + 1, 2 * c + 1)] = b.g11;
            }
        }
        CovarianceMatrix::Dense { n_sites, entries }
    }
}

pub(crate) fn check_ring(n_sites: usize) -> Result<()> {
    if n_sites < 4 || !n_sites.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "finite ring needs an even number of sites >= 4, got {n_sites}"
        )));
    }
    Ok(())
}

pub(crate) fn check_ring_gap(n_sites: usize, p: &XyParams) -> Result<()> {
    for phi in ring_nodes(n_sites) {
        let epsilon = dispersion_epsilon(phi, p);
        if epsilon < EPSILON_FLOOR {
            return Err(Error::GaplessMode { phi, epsilon });
        }
    }
    Ok(())
}

/// Exact covariance of the `n`-site periodic chain (even-parity sector) at time `t`,
/// evolved mode by mode with the generator. The blocks satisfy `G_{x+N} = -G_x`.
pub fn finite_covariance(n_sites: usize, t: f64, p: &XyParams) -> Result<CovarianceMatrix> {
    check_ring(n_sites)?;
    check_time(t)?;
    check_ring_gap(n_sites, p)?;
    let ens = ModeEnsemble::from_propagators(n_sites, |phi| mode_propagator(phi, p, t));
    Ok(ens.to_dense(n_sites))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Complex;

    fn slow() -> XyParams {
        XyParams::new(1.1, 2.0).unwrap()
    }

    #[test]
    fn quadrature_validation() {
        assert!(Quadrature::new(63).is_err());
        assert!(Quadrature::new(66).is_ok());
        assert!(Quadrature::new(65).is_err());
        assert_eq!(Quadrature::default_for(2.0, 25.0, 60).node_count, 2560);
        assert_eq!(Quadrature::default_for(0.1, 1.0, 10).node_count, 2048);
        let q = Quadrature::new(64).unwrap();
        let nodes = q.positive_nodes();
        assert_eq!(nodes.len(), 32);
        assert!(nodes.iter().all(|&p| p > 0.0 && p < PI));
    }

    #[test]
    fn vacuum_is_pure_and_local() {
        for n in [2, 5, 8] {
            let v = vacuum_covariance(n).unwrap();
            assert_eq!(v.antisymmetry_defect(), 0.0);
            assert_eq!(v.purity_defect().unwrap(), 0.0);
            for r in 0..n {
                for c in 0..n {
                    let b = v.block_between(r, c).unwrap();
                    if r != c {
                        assert_eq!(b.max_abs(), 0.0);
                    } else {
                        assert_eq!(b, BlockG::vacuum(0));
                    }
                }
            }
        }
        assert!(vacuum_covariance(1).is_err());
    }

    #[test]
    fn block_g_at_time_zero_is_vacuum() {
        let q = Quadrature::default();
        for p in [slow(), XyParams::new(10.0, 0.9).unwrap(), XyParams::new(0.0, 0.3).unwrap()] {
            let b0 = block_g(0, 0.0, &p, &q).unwrap();
            assert!(block_distance(&b0, &BlockG::vacuum(0)) < 1e-13);
            let b5 = block_g(5, 0.0, &p, &q).unwrap();
            assert!(b5.max_abs() < 1e-13);
        }
        assert!(block_g(1, -1.0, &slow(), &q).is_err());
    }

    #[test]
    fn finite_covariance_at_zero_is_vacuum() {
        let p = XyParams::new(0.9, 0.5).unwrap();
        let f = finite_covariance(8, 0.0, &p).unwrap();
        let v = vacuum_covariance(8).unwrap();
        let (CovarianceMatrix::Dense { entries: a, .. }, CovarianceMatrix::Dense { entries: b, .. }) =
            (f, v)
        else {
            unreachable!()
        };
        assert!((a - b).abs().max() < 1e-14);
    }

    #[test]
    fn finite_covariance_stays_pure() {
        let p = XyParams::new(0.9, 0.5).unwrap();
        let f = finite_covariance(10, 2.0, &p).unwrap();
        assert!(f.antisymmetry_defect() < 1e-12);
        assert!(f.purity_defect().unwrap() < 1e-10);
        assert!(finite_covariance(7, 1.0, &p).is_err());
        assert!(matches!(
            finite_covariance(8, 1.0, &XyParams::new(0.0, (PI / 8.0).cos()).unwrap()),
            Err(Error::GaplessMode { .. })
        ));
    }

    #[test]
    fn finite_ring_blocks_are_antiperiodic() {
        let p = slow();
        let ens = ModeEnsemble::from_propagators(12, |phi| mode_propagator(phi, &p, 1.3));
        for x in 0..12 {
            let a = ens.block(x);
            let b = ens.block(x + 12);
            assert!((a.g01 + b.g01).abs() < 1e-12 && (a.g00 + b.g00).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_finite_ring_block() {
        // Oracle: the N = 1024 ring, built from the generator rather than the kernels.
        let p = slow();
        let f = finite_covariance(1024, 1.5, &p).unwrap();
        let b = block_g(3, 1.5, &p, &Quadrature::new(1024).unwrap()).unwrap();
        let r = f.block_between(3, 0).unwrap();
        assert!(block_distance(&b, &r) < 1e-8);
        // The thermodynamic limit is already reached at this range and time.
        let b_big = block_g(3, 1.5, &p, &Quadrature::new(8192).unwrap()).unwrap();
        assert!(block_distance(&b_big, &r) < 1e-8);
    }

    #[test]
    fn generator_assembly_reproduces_block_g() {
        let p = slow();
        let q = Quadrature::default();
        let ens =
            ModeEnsemble::from_propagators(q.node_count, |phi| mode_propagator(phi, &p, 3.0));
        for x in [-4, -2, 0, 2, 7] {
            let a = ens.block(x);
            let b = block_g(x, 3.0, &p, &q).unwrap();
            assert!(block_distance(&a, &b) < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn generator_exponential_identity_and_spectrum() {
        let p = XyParams::new(1.3, 0.4).unwrap();
        assert_eq!(mode_propagator(0.8, &p, 0.0), Matrix4::identity());
        let a = mode_generator(0.8, &p);
        assert_eq!(a, -a.transpose());
        let eps = dispersion_epsilon(0.8, &p);
        let eig = a.map(|v| Complex::new(v, 0.0)).eigenvalues().unwrap();
        let mut ims: Vec<f64> = eig.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        for (got, want) in ims.iter().zip([-eps, -eps, eps, eps]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
        for z in eig.iter() {
            assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-10);
        }
        // Closed-form propagator equals the series exponential.
        let o = mode_propagator(0.8, &p, 2.7);
        let series = (a * 2.7).exp();
        assert!((o - series).abs().max() < 1e-12);
        assert!((o.transpose() * o - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn toeplitz_structure() {
        let p = slow();
        let cov = covariance_at(10.0, &p, 60, &Quadrature::default()).unwrap();
        assert!(cov.antisymmetry_defect() < 1e-14);
        for x in 1..=60 {
            let b = cov.block(x).unwrap();
            let m = cov.block(-x).unwrap();
            assert_eq!(m, b.mirrored());
        }
        let dense = cov.to_dense(20).unwrap();
        assert!((&dense + dense.transpose()).abs().max() < 1e-14);
        assert!(cov.to_dense(62).is_err());
        assert!(covariance_at(1.0, &p, 0, &Quadrature::default()).is_err());
    }

    #[test]
    fn flat_band_does_not_propagate() {
        // Oracle: the 2048-site ring. With gamma = 1, lambda = 0 every mode has eps = 1,
        // so the state returns to the vacuum with period pi and never spreads past x = 2.
        let p = XyParams::new(1.0, 0.0).unwrap();
        let q = Quadrature::default();
        let cov = covariance_at(10.0, &p, 20, &q).unwrap();
        let ring = finite_covariance(2048, 10.0, &p).unwrap();
        for x in 0..=20 {
            let b = cov.block(x).unwrap();
            assert!(block_distance(&b, &ring.block_between(x as usize, 0).unwrap()) < 1e-12);
            if x > 2 {
                assert!(b.max_abs() < 1e-12, "x = {x}: {b:?}");
            }
        }
        let b0 = cov.block(0).unwrap();
        assert!((b0.g01 - 1.0).abs() > 0.1);
    }

    #[test]
    fn large_field_is_nearly_stationary() {
        let p = XyParams::new(1.0, 100.0).unwrap();
        let q = Quadrature::default();
        for t in [0.5, 3.0, 10.0] {
            let cov = covariance_at(t, &p, 5, &q).unwrap();
            for x in 1..=5 {
                assert!(cov.block(x).unwrap().max_abs() < 1e-2);
            }
        }
    }
}
