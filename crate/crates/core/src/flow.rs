//! The isomonodromic Hamiltonian flow in `(p, A)`, elliptic Painlevé VI
//! residuals, and companion flows used for cross-validation.

use crate::elliptic::{Lattice, Modulus};
use crate::error::{Error, Result};
use crate::lame::{weight_products, Weights};
use crate::numerics::uniform_derivatives;
use crate::ode::{dopri5, Control, OdeOptions, OdeStats};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Distance from a half period at which the flow stops with a branch-point error.
pub const BRANCH_RADIUS: f64 = 1e-4;
/// Admissible tolerance range for [`integrate_flow`].
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-6);
/// Output intervals per polyline segment unless configured otherwise.
pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 200;
/// Target number of stencil steps per sample span for finite differences.
pub const FD_DIVISIONS: f64 = 200.0;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub point: C64,
    pub residue: C64,
}

/// Right side `(dp/dtau, dA/dtau)` of the Hamiltonian system.
pub fn flow_rhs(lat: &Lattice, weights: &Weights, p: C64, a: C64) -> Result<(C64, C64)> {
    let eta1 = lat.eta1();
    let (wp2, wpp2, _) = lat.wp_triple(2.0 * p)?;
    let zeta2 = lat.zeta(2.0 * p)?;
    let w = weight_products(weights);
    let mut sum = C64::default();
    for k in 0..4 {
        if w[k] != C64::default() {
            sum += w[k] * lat.wp_prime(p + lat.half_period(k))?;
        }
    }
    let c = I / (4.0 * PI);
    Ok((
        -c * (2.0 * a - zeta2 + 2.0 * p * eta1),
        c * ((2.0 * wp2 + 2.0 * eta1) * a - 1.5 * wpp2 - sum),
    ))
}

/// A polyline in the upper half-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauPath {
    vertices: Vec<C64>,
}

impl TauPath {
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParams(
                "a path needs at least two vertices".into(),
            ));
        }
        for v in &vertices {
            Modulus::new(*v)?;
        }
        if vertices.windows(2).any(|w| (w[1] - w[0]).norm() == 0.0) {
            return Err(Error::InvalidParams(
                "path has a zero-length segment".into(),
            ));
        }
        Ok(TauPath { vertices })
    }

    pub fn segment(a: C64, b: C64) -> Result<Self> {
        TauPath::new(vec![a, b])
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn start(&self) -> C64 {
        self.vertices[0]
    }

    pub fn end(&self) -> C64 {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn reversed(&self) -> TauPath {
        let mut v = self.vertices.clone();
        v.reverse();
        TauPath { vertices: v }
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// A state sample along a path, with its arclength `s` and segment index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSample<const N: usize> {
    pub s: f64,
    pub tau: C64,
    pub y: [C64; N],
}

/// Output of [`integrate_along`].
#[derive(Clone, Debug)]
pub struct PathSolution<const N: usize> {
    pub samples: Vec<PathSample<N>>,
    /// Inclusive sample ranges of each segment; neighbours share the vertex sample.
    pub segments: Vec<(usize, usize)>,
    pub stats: OdeStats,
    pub stopped: bool,
}

/// Integrate `dy/dtau = rhs(tau, y)` along a polyline, recording
/// `samples_per_segment + 1` equally spaced samples on every segment.
///
/// `guard` is consulted after every accepted step and at every sample.
pub fn integrate_along<const N: usize, F, G>(
    path: &TauPath,
    y0: [C64; N],
    mut rhs: F,
    samples_per_segment: usize,
    opts: &OdeOptions,
    mut guard: G,
) -> Result<PathSolution<N>>
where
    F: FnMut(C64, &[C64; N]) -> Result<[C64; N]>,
    G: FnMut(C64, &[C64; N]) -> Result<Control>,
{
    let m = samples_per_segment.max(1);
    let mut samples = vec![PathSample {
        s: 0.0,
        tau: path.start(),
        y: y0,
    }];
    let mut segments = Vec::new();
    let mut stats = OdeStats::default();
    let mut y = y0;
    let mut s_base = 0.0;
    let mut h_carry = None;
    if guard(path.start(), &y0)? == Control::Stop {
        return Ok(PathSolution {
            samples,
            segments: vec![(0, 0)],
            stats,
            stopped: true,
        });
    }
    for w in path.vertices().windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let dir = (b - a) / len;
        let first = samples.len() - 1;
        for j in 0..m {
            let s0 = len * j as f64 / m as f64;
            let s1 = len * (j + 1) as f64 / m as f64;
            let local = OdeOptions {
                h_init: opts.h_init.or(h_carry),
                ..*opts
            };
            let out = dopri5(
                |s, y: &[C64; N]| {
                    let d = rhs(a + dir * s, y)?;
                    Ok(d.map(|v| v * dir))
                },
                s0,
                y,
                s1,
                &local,
                |s, y| guard(a + dir * s, y),
            )?;
            stats += out.stats;
            if out.stats.last_h > 0.0 {
                h_carry = Some(out.stats.last_h);
            }
            y = out.y;
            samples.push(PathSample {
                s: s_base + out.s,
                tau: a + dir * out.s,
                y,
            });
            if out.stopped {
                segments.push((first, samples.len() - 1));
                return Ok(PathSolution {
                    samples,
                    segments,
                    stats,
                    stopped: true,
                });
            }
        }
        segments.push((first, samples.len() - 1));
        s_base += len;
    }
    Ok(PathSolution {
        samples,
        segments,
        stats,
        stopped: false,
    })
}

/// Tolerances and sampling for [`integrate_flow`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    pub samples_per_segment: usize,
    /// Stop cleanly once the reduced `|p|` drops below this radius.
    pub stop_radius: Option<f64>,
    /// Fixed step length, disabling error control (used for order studies).
    pub fixed_step: Option<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-12,
            atol: 1e-13,
            samples_per_segment: DEFAULT_SAMPLES_PER_SEGMENT,
            stop_radius: None,
            fixed_step: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub tau: C64,
    pub point: C64,
    pub residue: C64,
}

/// Samples of `(tau, p, A)` along a polyline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub weights: Weights,
    pub samples: Vec<TrajectorySample>,
    /// Inclusive sample ranges of each straight segment.
    pub segments: Vec<(usize, usize)>,
    pub path: TauPath,
    pub rtol: f64,
    pub atol: f64,
    pub accepted_steps: usize,
    pub stopped_early: bool,
}

impl Trajectory {
    /// Trajectory from externally computed samples on a single straight segment.
    pub fn from_samples(weights: Weights, samples: Vec<TrajectorySample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientSamples(
                "a trajectory needs at least two samples".into(),
            ));
        }
        let path = TauPath::segment(samples[0].tau, samples[samples.len() - 1].tau)?;
        let n = samples.len();
        Ok(Trajectory {
            weights,
            samples,
            segments: vec![(0, n - 1)],
            path,
            rtol: 0.0,
            atol: 0.0,
            accepted_steps: 0,
            stopped_early: false,
        })
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories are non-empty")
    }

    pub fn lame_params(&self, lat: &Lattice, idx: usize) -> Result<crate::lame::LameParams> {
        let s = &self.samples[idx];
        crate::lame::LameParams::apparent(lat, self.weights, s.point, s.residue)
    }
}

fn check_tolerances(rtol: f64, atol: f64) -> Result<()> {
    let ok = |t: f64| (TOL_RANGE.0..=TOL_RANGE.1).contains(&t);
    if !ok(rtol) || !ok(atol) {
        return Err(Error::InvalidParams(format!(
            "tolerances ({rtol:e}, {atol:e}) outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// Smallest distance from `p` to a half period.
pub fn half_period_distance(lat: &Lattice, p: C64) -> f64 {
    (0..4)
        .map(|k| lat.lattice_distance(p, lat.half_period(k)))
        .fold(f64::INFINITY, f64::min)
}

/// Integrate the Hamiltonian system along `path`.
pub fn integrate_flow(
    initial: FlowState,
    weights: &Weights,
    path: &TauPath,
    opts: &FlowOptions,
) -> Result<Trajectory> {
    if opts.fixed_step.is_none() {
        check_tolerances(opts.rtol, opts.atol)?;
    }
    let start = Lattice::from_tau(path.start())?;
    crate::lame::validate(&start, weights, initial.point)?;
    let ode = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        fixed_step: opts.fixed_step,
        ..Default::default()
    };
    let sol = integrate_along(
        path,
        [initial.point, initial.residue],
        |tau, y| {
            let lat = Lattice::from_tau(tau)?;
            let (pd, ad) = flow_rhs(&lat, weights, y[0], y[1])?;
            Ok([pd, ad])
        },
        opts.samples_per_segment,
        &ode,
        |tau, y| {
            let lat = Lattice::from_tau(tau)?;
            let d = half_period_distance(&lat, y[0]);
            if let Some(r) = opts.stop_radius {
                if lat.reduce(y[0]).z.norm() < r {
                    return Ok(Control::Stop);
                }
            }
            if d < BRANCH_RADIUS {
                return Err(Error::BranchPoint {
                    tau,
                    p: y[0],
                    distance: d,
                });
            }
            Ok(Control::Continue)
        },
    )?;
    Ok(Trajectory {
        weights: *weights,
        samples: sol
            .samples
            .iter()
            .map(|s| TrajectorySample {
                tau: s.tau,
                point: s.y[0],
                residue: s.y[1],
            })
            .collect(),
        segments: sol.segments,
        path: path.clone(),
        rtol: opts.rtol,
        atol: opts.atol,
        accepted_steps: sol.stats.accepted,
        stopped_early: sol.stopped,
    })
}

/// Parameters of Painlevé VI in elliptic form and in the classical form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PainleveParams {
    /// Weights `alpha_0 .. alpha_3` of the elliptic form.
    pub elliptic: [C64; 4],
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl PainleveParams {
    pub fn from_elliptic(elliptic: [C64; 4]) -> Self {
        PainleveParams {
            elliptic,
            alpha: elliptic[0],
            beta: -elliptic[1],
            gamma: elliptic[2],
            delta: 0.5 - elliptic[3],
        }
    }

    /// `alpha_k = (n_k + 1/2)^2 / 2`.
    pub fn from_weights(n: &Weights) -> Self {
        PainleveParams::from_elliptic(n.map(|nk| 0.5 * (nk + 0.5) * (nk + 0.5)))
    }

    pub fn from_classical(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Self {
        PainleveParams {
            elliptic: [alpha, -beta, gamma, 0.5 - delta],
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    /// Classical parameters from the local exponent differences at `0, 1, t, infinity`.
    pub fn from_exponents(theta0: C64, theta1: C64, theta_t: C64, theta_inf: C64) -> Self {
        PainleveParams::from_classical(
            0.5 * theta_inf * theta_inf,
            -0.5 * theta0 * theta0,
            0.5 * theta1 * theta1,
            0.5 * (1.0 - theta_t * theta_t),
        )
    }

    /// Weights recovered with the principal square root, so that `Re n_k >= -1/2`.
    pub fn weights(&self) -> Weights {
        self.elliptic.map(|a| (2.0 * a).sqrt() - 0.5)
    }
}

/// Finite-difference first and second derivatives of a uniformly sampled
/// sequence, one entry per usable interior index.
fn sequence_derivatives(values: &[C64], h: f64) -> Vec<(usize, C64, C64)> {
    let n = values.len();
    let span = h * (n - 1) as f64;
    let stride = ((span / FD_DIVISIONS) / h).round().max(1.0) as usize;
    let mut out = Vec::new();
    if n > 8 * stride {
        for i in 0..n {
            if let Some((d1, d2)) = uniform_derivatives(values, h, i, stride) {
                out.push((i, d1, d2));
            }
        }
    } else if n >= 5 {
        for i in 2..n - 2 {
            let f = [
                values[i - 2],
                values[i - 1],
                values[i],
                values[i + 1],
                values[i + 2],
            ];
            out.push((
                i,
                crate::numerics::d1_five_point(f, h),
                crate::numerics::d2_five_point(f, h),
            ));
        }
    }
    out
}

/// Uniformly spaced part of a segment: its sample indices, direction and spacing.
fn uniform_run(traj: &Trajectory, seg: (usize, usize)) -> Option<(Vec<usize>, C64, f64)> {
    let (lo, mut hi) = seg;
    if hi <= lo {
        return None;
    }
    let step = (traj.samples[lo + 1].tau - traj.samples[lo].tau).norm();
    let dir = (traj.samples[lo + 1].tau - traj.samples[lo].tau) / step;
    let last_step = (traj.samples[hi].tau - traj.samples[hi - 1].tau).norm();
    if (last_step - step).abs() > 1e-9 * step && hi > lo + 1 {
        hi -= 1;
    }
    Some(((lo..=hi).collect(), dir, step))
}

/// For each segment, derivative data of `f(sample)` in `tau` at interior samples.
fn trajectory_derivatives<F>(traj: &Trajectory, mut f: F) -> Result<Vec<(usize, C64, C64)>>
where
    F: FnMut(&TrajectorySample) -> Result<C64>,
{
    if traj.samples.len() < 5 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples, at least 5 are needed",
            traj.samples.len()
        )));
    }
    let mut out = Vec::new();
    for &seg in &traj.segments {
        let Some((idx, dir, h)) = uniform_run(traj, seg) else {
            continue;
        };
        let values = idx
            .iter()
            .map(|&i| f(&traj.samples[i]))
            .collect::<Result<Vec<_>>>()?;
        for (j, d1, d2) in sequence_derivatives(&values, h) {
            out.push((idx[j], d1 / dir, d2 / (dir * dir)));
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientSamples(
            "no segment has enough uniform samples for a five-point stencil".into(),
        ));
    }
    Ok(out)
}

/// `-(1/4 pi^2) sum_k alpha_k wp'(p + omega_k/2)`, the elliptic-form acceleration.
pub fn elliptic_force(lat: &Lattice, alphas: &[C64; 4], p: C64) -> Result<C64> {
    let mut s = C64::default();
    for (k, a) in alphas.iter().enumerate() {
        s += a * lat.wp_prime(p + lat.half_period(k))?;
    }
    Ok(-s / (4.0 * PI * PI))
}

/// Maximum residual of `p'' = -(1/4 pi^2) sum alpha_k wp'(p + omega_k/2)` over
/// interior samples, with `p''` from finite differences.
pub fn elliptic_pvi_residual(traj: &Trajectory, params: &PainleveParams) -> Result<f64> {
    let derivs = trajectory_derivatives(traj, |s| Ok(s.point))?;
    let mut worst: f64 = 0.0;
    for (i, _, d2) in derivs {
        let s = &traj.samples[i];
        let lat = Lattice::from_tau(s.tau)?;
        let r = d2 - elliptic_force(&lat, &params.elliptic, s.point)?;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `A` recovered from the velocity of `p`.
pub fn residue_from_velocity(lat: &Lattice, p: C64, p_dot: C64) -> Result<C64> {
    Ok(2.0 * PI * I * p_dot + 0.5 * (lat.zeta(2.0 * p)? - 2.0 * p * lat.eta1()))
}

/// `F = A + (zeta(2p) - 2 zeta(p)) / 2`.
pub fn f_function(lat: &Lattice, p: C64, a: C64) -> Result<C64> {
    Ok(a + 0.5 * (lat.zeta(2.0 * p)? - 2.0 * lat.zeta(p)?))
}

/// Quantities derived from one interior trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedSample {
    pub tau: C64,
    pub residue_from_velocity: C64,
    pub f_value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub samples: Vec<DerivedSample>,
    pub params: PainleveParams,
}

/// `A` from finite-difference `dp/dtau`, `F`, and the Painlevé parameters.
pub fn derived_quantities(traj: &Trajectory) -> Result<DerivedQuantities> {
    let derivs = trajectory_derivatives(traj, |s| Ok(s.point))?;
    let mut samples = Vec::with_capacity(derivs.len());
    for (i, d1, _) in derivs {
        let s = &traj.samples[i];
        let lat = Lattice::from_tau(s.tau)?;
        samples.push(DerivedSample {
            tau: s.tau,
            residue_from_velocity: residue_from_velocity(&lat, s.point, d1)?,
            f_value: f_function(&lat, s.point, s.residue)?,
        });
    }
    Ok(DerivedQuantities {
        samples,
        params: PainleveParams::from_weights(&traj.weights),
    })
}

/// Maximum residual of
/// `dF/dtau = (i/2pi)(2 wp(2p) - wp(p) + eta1) F - (i/4pi) sum n_k(n_k+1) wp'(p + omega_k/2)`
/// divided by `|F|`; for zero weights this is the log-derivative identity.
pub fn f_log_derivative_residual(traj: &Trajectory) -> Result<f64> {
    let w = weight_products(&traj.weights);
    let mut fmax: f64 = 0.0;
    for s in &traj.samples {
        let lat = Lattice::from_tau(s.tau)?;
        fmax = fmax.max(f_function(&lat, s.point, s.residue)?.norm());
    }
    let derivs = trajectory_derivatives(traj, |s| {
        let lat = Lattice::from_tau(s.tau)?;
        f_function(&lat, s.point, s.residue)
    })?;
    let mut worst: f64 = 0.0;
    for (i, d1, _) in derivs {
        let s = &traj.samples[i];
        let lat = Lattice::from_tau(s.tau)?;
        let f = f_function(&lat, s.point, s.residue)?;
        if f.norm() < 1e-12 * fmax.max(1.0) {
            return Err(Error::ZeroCrossing { tau: s.tau });
        }
        let growth =
            I / (2.0 * PI) * (2.0 * lat.wp(2.0 * s.point)? - lat.wp(s.point)? + lat.eta1());
        let mut source = C64::default();
        for k in 0..4 {
            if w[k] != C64::default() {
                source += w[k] * lat.wp_prime(s.point + lat.half_period(k))?;
            }
        }
        let r = (d1 - growth * f + I / (4.0 * PI) * source) / f;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Right side of the second-order elliptic form written as a Hamiltonian
/// system with conjugate momentum `q = dp/dtau`.
pub fn manin_rhs(lat: &Lattice, alphas: &[C64; 4], p: C64, momentum: C64) -> Result<(C64, C64)> {
    Ok((momentum, elliptic_force(lat, alphas, p)?))
}

/// Right side of the reduced one-point Garnier system in `(b, mu)`.
pub fn kawai_rhs(lat: &Lattice, theta: C64, b: C64, mu: C64) -> Result<(C64, C64)> {
    let eta1 = lat.eta1();
    let (wp, wpp, _) = lat.wp_triple(b)?;
    let zeta = lat.zeta(b)?;
    Ok((
        -I / (2.0 * PI) * (2.0 * mu - zeta + b * eta1),
        I / (2.0 * PI) * (mu * wp + mu * eta1 - 0.25 * (theta * theta - 1.0) * wpp),
    ))
}

/// Local exponent differences on the projective line and the derived constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub theta0: C64,
    pub theta1: C64,
    pub theta_t: C64,
    pub theta_inf: C64,
}

impl Exponents {
    /// `alpha_hat = -(theta_t + theta_0 + theta_1 + theta_inf - 1) / 2`.
    pub fn alpha_hat(&self) -> C64 {
        -0.5 * (self.theta_t + self.theta0 + self.theta1 + self.theta_inf - 1.0)
    }

    pub fn kappa_hat(&self) -> C64 {
        let a = self.alpha_hat();
        a * (a + self.theta_inf)
    }
}

/// Hamiltonian of the sixth Painlevé equation in the apparent-singularity
/// coordinates `(lambda, mu)`.
pub fn cp1_hamiltonian(ex: &Exponents, lambda: C64, mu: C64, t: C64) -> C64 {
    let l = lambda;
    let bracket = ex.theta0 * (l - 1.0) * (l - t)
        + ex.theta1 * l * (l - t)
        + (ex.theta_t - 1.0) * l * (l - 1.0);
    (l * (l - 1.0) * (l - t) * mu * mu + ex.kappa_hat() * (l - t) - bracket * mu) / (t * (t - 1.0))
}

/// `(d lambda/dt, d mu/dt) = (dK/dmu, -dK/dlambda)`.
pub fn cp1_rhs(ex: &Exponents, lambda: C64, mu: C64, t: C64) -> Result<(C64, C64)> {
    let l = lambda;
    for (name, v) in [("0", C64::default()), ("1", C64::new(1.0, 0.0)), ("t", t)] {
        if (l - v).norm() < 1e-12 {
            return Err(Error::Pole {
                z: l,
                distance: (l - v).norm(),
            });
        }
        let _ = name;
    }
    let denom = t * (t - 1.0);
    let cubic = l * (l - 1.0) * (l - t);
    let bracket = ex.theta0 * (l - 1.0) * (l - t)
        + ex.theta1 * l * (l - t)
        + (ex.theta_t - 1.0) * l * (l - 1.0);
    let dcubic = 3.0 * l * l - 2.0 * (1.0 + t) * l + t;
    let dbracket = ex.theta0 * (2.0 * l - 1.0 - t)
        + ex.theta1 * (2.0 * l - t)
        + (ex.theta_t - 1.0) * (2.0 * l - 1.0);
    Ok((
        (2.0 * cubic * mu - bracket) / denom,
        -(dcubic * mu * mu + ex.kappa_hat() - dbracket * mu) / denom,
    ))
}

/// Residual of the sixth Painlevé equation at one point.
pub fn pvi_defect(params: &PainleveParams, t: C64, l: C64, dl: C64, ddl: C64) -> C64 {
    let rhs = 0.5 * (1.0 / l + 1.0 / (l - 1.0) + 1.0 / (l - t)) * dl * dl
        - (1.0 / t + 1.0 / (t - 1.0) + 1.0 / (l - t)) * dl
        + l * (l - 1.0) * (l - t) / (t * t * (t - 1.0) * (t - 1.0))
            * (params.alpha
                + params.beta * t / (l * l)
                + params.gamma * (t - 1.0) / ((l - 1.0) * (l - 1.0))
                + params.delta * t * (t - 1.0) / ((l - t) * (l - t)));
    ddl - rhs
}

/// Maximum PVI residual over samples `(t_j, lambda_j)` taken at equal steps
/// `h` of some path parameter; derivatives in `t` follow by the chain rule.
pub fn pvi_residual(samples: &[(C64, C64)], h: f64, params: &PainleveParams) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::InsufficientSamples(format!(
            "{} samples, at least 5 are needed",
            samples.len()
        )));
    }
    let ts: Vec<C64> = samples.iter().map(|s| s.0).collect();
    let ls: Vec<C64> = samples.iter().map(|s| s.1).collect();
    let dt = sequence_derivatives(&ts, h);
    let dl = sequence_derivatives(&ls, h);
    let mut worst: f64 = 0.0;
    for ((i, t1, t2), (_, l1, l2)) in dt.into_iter().zip(dl) {
        let lt = l1 / t1;
        let ltt = (l2 - lt * t2) / (t1 * t1);
        worst = worst.max(pvi_defect(params, ts[i], ls[i], lt, ltt).norm());
    }
    Ok(worst)
}

fn ode_options(rtol: f64, atol: f64) -> OdeOptions {
    OdeOptions::with_tol(rtol, atol)
}

/// Integrate the momentum form of the elliptic equation; samples hold `(p, q)`.
pub fn integrate_manin(
    point: C64,
    momentum: C64,
    alphas: &[C64; 4],
    path: &TauPath,
    opts: &FlowOptions,
) -> Result<PathSolution<2>> {
    integrate_along(
        path,
        [point, momentum],
        |tau, y| {
            let lat = Lattice::from_tau(tau)?;
            let (a, b) = manin_rhs(&lat, alphas, y[0], y[1])?;
            Ok([a, b])
        },
        opts.samples_per_segment,
        &ode_options(opts.rtol, opts.atol),
        |_, _| Ok(Control::Continue),
    )
}

/// Integrate the reduced Garnier system; samples hold `(b, mu)`.
pub fn integrate_kawai(
    b: C64,
    mu: C64,
    theta: C64,
    path: &TauPath,
    opts: &FlowOptions,
) -> Result<PathSolution<2>> {
    integrate_along(
        path,
        [b, mu],
        |tau, y| {
            let lat = Lattice::from_tau(tau)?;
            let (a, c) = kawai_rhs(&lat, theta, y[0], y[1])?;
            Ok([a, c])
        },
        opts.samples_per_segment,
        &ode_options(opts.rtol, opts.atol),
        |_, _| Ok(Control::Continue),
    )
}

/// Integrate the Painlevé Hamiltonian system along the image `t(tau)` of a
/// path in the upper half-plane; samples hold `(lambda, mu)`.
pub fn integrate_cp1(
    lambda: C64,
    mu: C64,
    exponents: &Exponents,
    path: &TauPath,
    opts: &FlowOptions,
) -> Result<PathSolution<2>> {
    integrate_along(
        path,
        [lambda, mu],
        |tau, y| {
            let cm = Lattice::from_tau(tau)?.curve_map();
            let (dl, dm) = cp1_rhs(exponents, y[0], y[1], cm.t)?;
            Ok([dl * cm.dt_dtau, dm * cm.dt_dtau])
        },
        opts.samples_per_segment,
        &ode_options(opts.rtol, opts.atol),
        |_, _| Ok(Control::Continue),
    )
}

/// A trajectory of `b / 2` from a reduced Garnier solution, for the elliptic residual.
pub fn kawai_half_trajectory(sol: &PathSolution<2>) -> Result<Trajectory> {
    let samples = sol
        .samples
        .iter()
        .map(|s| TrajectorySample {
            tau: s.tau,
            point: 0.5 * s.y[0],
            residue: C64::default(),
        })
        .collect();
    let mut traj = Trajectory::from_samples([C64::default(); 4], samples)?;
    traj.segments = sol.segments.clone();
    Ok(traj)
}
