//! Behaviour of the flow when `p(tau) -> 0` at some `tau0`.
//!
//! Near such a point `p^2 = c0^2 (tau - tau0) (1 + 2 h (tau - tau0) + ...)`
//! with `c0^2 = +-i (n0 + 1/2) / pi`, the residue behaves as `A = c/p + e p + O(p^3)`
//! and the potential converges to a classical Lamé potential with index `m = n0 +- 1`.
//! Fits work with `p^2` and `A p`, both single valued across the branch point.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::flow::{integrate_flow, FlowOptions, FlowState, TauPath, Trajectory};
use crate::lame::{apparent_accessory, potential, weight_products, LameParams, Weights};
use crate::numerics::{polyder, polyfit, polyval, slope};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Reduced `|p|` below which a trajectory counts as approaching a zero of `p`.
pub const APPROACH_RADIUS: f64 = 0.02;
/// Half width of the `tau` window used by [`fit_collapse`].
pub const FIT_WINDOW: f64 = 0.05;
/// Minimum number of samples inside the fit window.
pub const MIN_FIT_SAMPLES: usize = 8;
/// Minimum distance of a potential sample from the singular points of the limit.
pub const LIMIT_Z_CLEARANCE: f64 = 0.05;

const P2_DEGREE: usize = 5;
const AP_DEGREE: usize = 3;

/// Which of the two pole families the trajectory belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `c0^2 = i (n0 + 1/2) / pi`, `m = n0 + 1`.
    Plus,
    /// `c0^2 = -i (n0 + 1/2) / pi`, `m = n0 - 1`.
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseData {
    pub weights: Weights,
    pub tau0: C64,
    pub c0_squared: C64,
    pub h_tilde: C64,
    pub branch: Branch,
    pub m: C64,
    /// Leading constant of `A p`.
    pub c: C64,
    /// Accessory parameter of the limiting equation.
    pub b0: C64,
    /// Residue of the corresponding PVI pole at `t0 = t(tau0)`.
    pub beta: C64,
    pub t0: C64,
}

impl CollapseData {
    /// `m (m + 1)`.
    pub fn limit_weight(&self) -> C64 {
        self.m * (self.m + 1.0)
    }

    /// Coefficient `e = 4 pi i h - eta1(tau0)` of `A = c/p + e p + ...`.
    pub fn e_coefficient(&self, lat0: &Lattice) -> C64 {
        4.0 * PI * I * self.h_tilde - lat0.eta1()
    }

    /// Leading asymptotics `(p, A)` at `tau = tau0 + delta` on the principal square root.
    pub fn asymptotic_state(&self, lat0: &Lattice, delta: C64) -> FlowState {
        let c0 = self.c0_squared.sqrt();
        let p = c0 * delta.sqrt() * (1.0 + self.h_tilde * delta);
        FlowState {
            point: p,
            residue: self.c / p + self.e_coefficient(lat0) * p,
        }
    }

    /// Classical Lamé potential on `E_{tau0}`.
    pub fn limit_potential(&self, lat0: &Lattice, z: C64) -> Result<C64> {
        let w = weight_products(&self.weights);
        let mut v = self.limit_weight() * lat0.wp(z)? + self.b0;
        for k in 1..4 {
            if w[k] != C64::default() {
                v += w[k] * lat0.wp(z + lat0.half_period(k))?;
            }
        }
        Ok(v)
    }
}

/// Closed-form constants of the collapse at `tau0` for the given branch and `h_tilde`.
pub fn collapse_constants(
    weights: Weights,
    branch: Branch,
    h_tilde: C64,
    tau0: C64,
) -> Result<CollapseData> {
    let theta4 = weights[0] + 0.5;
    if theta4.norm() < 1e-12 {
        return Err(Error::ZeroTheta4);
    }
    let lat0 = Lattice::from_tau(tau0)?;
    let sign = branch.sign();
    let c0_squared = sign * I * theta4 / PI;
    let m = weights[0] + sign;
    let c = PI * I * c0_squared + 0.25;
    let w = weight_products(&weights);
    let e_sum: C64 = (1..4).map(|j| w[j] * lat0.data().e(j)).sum();
    let b0 = 2.0 * PI * I * c0_squared * (4.0 * PI * I * h_tilde - lat0.eta1()) - e_sum;
    let cm = lat0.curve_map();
    let t0 = cm.t;
    let beta = -sign * t0 * (t0 - 1.0) / theta4;
    Ok(CollapseData {
        weights,
        tau0,
        c0_squared,
        h_tilde,
        branch,
        m,
        c,
        b0,
        beta,
        t0,
    })
}

/// Result of [`fit_collapse`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub tau0: C64,
    pub c0_squared: C64,
    /// From the fit of `A p` against `p^2`.
    pub h_tilde: C64,
    /// From the quadratic term of the `p^2` fit.
    pub h_tilde_from_p2: C64,
    /// Fitted constant term of `A p`.
    pub c: C64,
    /// Relative RMS residual of the `p^2` fit.
    pub residual: f64,
    pub samples_used: usize,
    /// Branch whose `c0^2` is nearest to the fit.
    pub branch: Branch,
    /// Relative distance of the fitted `c0^2` from the nearest branch value.
    pub branch_deviation: f64,
}

impl CollapseFit {
    /// Collapse constants of the detected branch with the fitted `tau0` and `h_tilde`.
    pub fn constants(&self, weights: Weights) -> Result<CollapseData> {
        collapse_constants(weights, self.branch, self.h_tilde, self.tau0)
    }
}

fn reduced_point(s: &crate::flow::TrajectorySample) -> Result<C64> {
    Ok(Lattice::from_tau(s.tau)?.reduce(s.point).z)
}

/// Fit the local expansion of `p` near the end of a trajectory approaching a zero of `p`.
pub fn fit_collapse(traj: &Trajectory) -> Result<CollapseFit> {
    let points: Vec<C64> = traj
        .samples
        .iter()
        .map(reduced_point)
        .collect::<Result<_>>()?;
    let min_abs_p = points
        .iter()
        .map(|p| p.norm())
        .fold(f64::INFINITY, f64::min);
    if min_abs_p > APPROACH_RADIUS {
        return Err(Error::NonVanishingP { min_abs_p });
    }
    let end = traj.last().tau;
    // Samples near the end of the trajectory, in a window about its last point.
    let window: Vec<usize> = (0..traj.samples.len())
        .filter(|&i| (traj.samples[i].tau - end).norm() < 2.0 * FIT_WINDOW)
        .collect();
    if window.len() <= P2_DEGREE {
        return Err(Error::InsufficientSamples(format!(
            "{} samples near the end of the trajectory",
            window.len()
        )));
    }
    let first = fit_p2(traj, &points, &window, end)?;
    let inside: Vec<usize> = window
        .into_iter()
        .filter(|&i| (traj.samples[i].tau - first.0).norm() < FIT_WINDOW)
        .collect();
    if inside.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} samples within {FIT_WINDOW} of the fitted tau0, need {MIN_FIT_SAMPLES}",
            inside.len()
        )));
    }
    let (tau0, c0_squared, h_tilde_from_p2, residual) = fit_p2(traj, &points, &inside, first.0)?;

    let p2: Vec<C64> = inside.iter().map(|&i| points[i] * points[i]).collect();
    let ap: Vec<C64> = inside
        .iter()
        .map(|&i| points[i] * traj.samples[i].residue)
        .collect();
    let p2_scale = p2.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scaled: Vec<C64> = p2.iter().map(|v| v / p2_scale).collect();
    let coef = polyfit(&scaled, &ap, AP_DEGREE)?;
    let c = coef[0];
    let e = coef[1] / p2_scale;
    let lat0 = Lattice::from_tau(tau0)?;
    let h_tilde = (e + lat0.eta1()) / (4.0 * PI * I);

    let theta4 = traj.weights[0] + 0.5;
    if theta4.norm() < 1e-12 {
        return Err(Error::ZeroTheta4);
    }
    let (branch, branch_deviation) = [Branch::Plus, Branch::Minus]
        .into_iter()
        .map(|b| {
            let target = b.sign() * I * theta4 / PI;
            (b, (c0_squared - target).norm() / target.norm())
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two branches");
    Ok(CollapseFit {
        tau0,
        c0_squared,
        h_tilde,
        h_tilde_from_p2,
        c,
        residual,
        samples_used: inside.len(),
        branch,
        branch_deviation,
    })
}

/// Polynomial fit of `p^2` in `tau - center`; returns `(tau0, c0^2, h_tilde, relative residual)`.
fn fit_p2(
    traj: &Trajectory,
    points: &[C64],
    idx: &[usize],
    center: C64,
) -> Result<(C64, C64, C64, f64)> {
    let x: Vec<C64> = idx
        .iter()
        .map(|&i| (traj.samples[i].tau - center) / FIT_WINDOW)
        .collect();
    let y: Vec<C64> = idx.iter().map(|&i| points[i] * points[i]).collect();
    let coef = polyfit(&x, &y, P2_DEGREE)?;
    let d1 = polyder(&coef);
    let d2 = polyder(&d1);

    // The zero of the fitted polynomial closest to the window centre.
    let mut u = C64::default();
    let mut converged = false;
    for _ in 0..60 {
        let slope = polyval(&d1, u);
        if slope.norm() == 0.0 {
            break;
        }
        let step = polyval(&coef, u) / slope;
        u -= step;
        if step.norm() < 1e-15 * (1.0 + u.norm()) {
            converged = true;
            break;
        }
    }
    if !converged || u.norm() > 2.0 || !u.re.is_finite() {
        return Err(Error::IllConditioned(
            "no zero of p^2 near the end of the trajectory".into(),
        ));
    }
    let first = polyval(&d1, u) / FIT_WINDOW;
    let second = polyval(&d2, u) / (FIT_WINDOW * FIT_WINDOW);
    if first.norm() < 1e-12 {
        return Err(Error::IllConditioned("p^2 has a degenerate zero".into()));
    }
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let rms = (x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| (polyval(&coef, xi) - yi).norm_sqr())
        .sum::<f64>()
        / x.len() as f64)
        .sqrt();
    Ok((
        center + u * FIT_WINDOW,
        first,
        second / (4.0 * first),
        rms / scale,
    ))
}

/// Distance between the potential of a trajectory sample and its collapse limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// Max over the z-samples at the last trajectory sample.
    pub residual: f64,
    /// Residuals at the trailing samples, oldest first.
    pub recent: Vec<f64>,
    /// `(|p|, |B - B0|)` over the samples within the fit window.
    pub accessory_trend: Vec<(f64, f64)>,
    /// Log-log slope of `|B - B0|` against `|p|`.
    pub accessory_slope: f64,
}

impl LimitReport {
    pub fn recent_monotone(&self) -> bool {
        self.recent.windows(2).all(|w| w[1] < w[0])
    }
}

/// Number of trailing samples reported in [`LimitReport::recent`].
pub const RECENT_SAMPLES: usize = 4;

/// Max over `zs` of `|I(z; tau) - I_limit(z; tau0)|` at sample `idx`.
pub fn potential_gap(traj: &Trajectory, idx: usize, cd: &CollapseData, zs: &[C64]) -> Result<f64> {
    let s = &traj.samples[idx];
    let lat = Lattice::from_tau(s.tau)?;
    let lat0 = Lattice::from_tau(cd.tau0)?;
    let p = lat.reduce(s.point).z;
    let params = LameParams::apparent(&lat, traj.weights, p, s.residue)?;
    zs.iter().try_fold(0.0f64, |acc, &z| {
        let gap = potential(&lat, &params, z)? - cd.limit_potential(&lat0, z)?;
        Ok(acc.max(gap.norm()))
    })
}

/// Compare the potential near the end of `traj` with the classical limit described by `cd`.
pub fn limit_potential_residual(
    traj: &Trajectory,
    cd: &CollapseData,
    zs: &[C64],
) -> Result<LimitReport> {
    if zs.is_empty() {
        return Err(Error::InvalidParams("no z samples".into()));
    }
    let lat0 = Lattice::from_tau(cd.tau0)?;
    let w = weight_products(&traj.weights);
    for &z in zs {
        for k in 0..4 {
            if k != 0 && w[k] == C64::default() {
                continue;
            }
            let d = lat0.lattice_distance(z, lat0.half_period(k));
            if d < LIMIT_Z_CLEARANCE {
                return Err(Error::Pole { z, distance: d });
            }
        }
    }
    let n = traj.samples.len();
    let recent = (n.saturating_sub(RECENT_SAMPLES)..n)
        .map(|i| potential_gap(traj, i, cd, zs))
        .collect::<Result<Vec<_>>>()?;
    let residual = *recent.last().expect("non-empty trajectory");

    let mut accessory_trend = Vec::new();
    for s in &traj.samples {
        if (s.tau - cd.tau0).norm() >= FIT_WINDOW {
            continue;
        }
        let lat = Lattice::from_tau(s.tau)?;
        let p = lat.reduce(s.point).z;
        let b = apparent_accessory(&lat, &traj.weights, p, s.residue)?;
        accessory_trend.push((p.norm(), (b - cd.b0).norm()));
    }
    let usable: Vec<&(f64, f64)> = accessory_trend.iter().filter(|v| v.1 > 0.0).collect();
    let accessory_slope = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|v| v.0.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|v| v.1.ln()).collect();
        slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(LimitReport {
        residual,
        recent,
        accessory_trend,
        accessory_slope,
    })
}

/// Shape of a steered approach toward a zero of `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringOptions {
    /// Offset `tau - tau0` at which the asymptotic expansion seeds the flow.
    pub seed_offset: f64,
    /// Length of the outward leg.
    pub length: f64,
    /// Unit direction of departure from `tau0`.
    pub direction: C64,
    pub samples: usize,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions {
            seed_offset: 1e-4,
            length: 0.3,
            direction: I,
            samples: 600,
        }
    }
}

/// Flow trajectory running into the zero of `p` described by `cd`.
///
/// The asymptotic expansion seeds the flow close to `tau0`, the flow is integrated
/// outward, and the returned trajectory is the flow integrated back from the far end
/// until the reduced `|p|` drops below [`APPROACH_RADIUS`].
pub fn steered_trajectory(cd: &CollapseData, steer: &SteeringOptions) -> Result<Trajectory> {
    let dir = steer.direction / steer.direction.norm();
    let lat0 = Lattice::from_tau(cd.tau0)?;
    let seed_tau = cd.tau0 + dir * steer.seed_offset;
    let far = cd.tau0 + dir * steer.length;
    let seed = cd.asymptotic_state(&lat0, dir * steer.seed_offset);
    let out = integrate_flow(
        seed,
        &cd.weights,
        &TauPath::segment(seed_tau, far)?,
        &FlowOptions {
            samples_per_segment: 16,
            ..Default::default()
        },
    )?;
    let end = out.last();
    let back = TauPath::segment(far, cd.tau0 - dir * steer.length)?;
    let traj = integrate_flow(
        FlowState {
            point: end.point,
            residue: end.residue,
        },
        &cd.weights,
        &back,
        &FlowOptions {
            samples_per_segment: 2 * steer.samples,
            stop_radius: Some(APPROACH_RADIUS),
            ..Default::default()
        },
    )?;
    if !traj.stopped_early {
        let min_abs_p = traj
            .samples
            .iter()
            .map(|s| reduced_point(s).map(|p| p.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::NonVanishingP { min_abs_p });
    }
    Ok(traj)
}
