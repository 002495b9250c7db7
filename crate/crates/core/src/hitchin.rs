//! The explicit solution family of the elliptic form with all weights zero,
//! parametrized by a pair `(r, s)`.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::flow::{TauPath, Trajectory, TrajectorySample};
use crate::lame::{needs_flip, potential, LameParams, Weights};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);
const NEWTON_MAX_ITER: usize = 60;
const GRID: usize = 24;
/// Required distance of `(r, s)` from the half-integer pairs.
pub const SEED_CLEARANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitchinSeed {
    pub r: C64,
    pub s: C64,
}

impl HitchinSeed {
    pub fn new(r: C64, s: C64) -> Result<Self> {
        let off = |x: C64| {
            let near = (2.0 * x.re).round() / 2.0;
            (x - near).norm()
        };
        let d = off(r).hypot(off(s));
        if d <= SEED_CLEARANCE {
            return Err(Error::DegenerateSeed(format!(
                "(r, s) = ({r}, {s}) is within {d:e} of a half-integer pair"
            )));
        }
        Ok(HitchinSeed { r, s })
    }

    /// `a1 = r + s tau`.
    pub fn shift(&self, tau: C64) -> C64 {
        self.r + self.s * tau
    }

    /// `r eta1 + s eta2`.
    fn quasi_period(&self, lat: &Lattice) -> C64 {
        self.r * lat.eta1() + self.s * lat.eta2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitchinPoint {
    pub wp_p: C64,
    pub p: C64,
}

/// Solve `wp(p) = w` by Newton iteration from `guess`.
fn newton_wp(lat: &Lattice, w: C64, guess: C64) -> Option<C64> {
    let scale = w.norm().max(1.0);
    let mut p = guess;
    for _ in 0..NEWTON_MAX_ITER {
        let (f, df) = match (lat.wp(p), lat.wp_prime(p)) {
            (Ok(f), Ok(df)) => (f, df),
            _ => return None,
        };
        let r = f - w;
        if r.norm() <= 1e-14 * scale {
            return Some(p);
        }
        if df.norm() == 0.0 {
            return None;
        }
        let mut step = r / df;
        if step.norm() > 0.2 {
            step *= 0.2 / step.norm();
        }
        p -= step;
        if step.norm() <= 1e-16 * p.norm().max(1.0) {
            break;
        }
    }
    let r = lat.wp(p).ok()? - w;
    (r.norm() <= 1e-10 * scale).then_some(p)
}

/// Solve `wp(p) = w`; continuation from `guess` when given, otherwise a
/// coarse search over the fundamental cell seeds Newton's method.
pub fn invert_wp(lat: &Lattice, w: C64, guess: Option<C64>) -> Result<C64> {
    if let Some(g) = guess {
        if let Some(p) = newton_wp(lat, w, g) {
            return Ok(p);
        }
    }
    let tau = lat.tau();
    let mut starts: Vec<(f64, C64)> = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        for j in 0..GRID {
            let u = (i as f64 + 0.5) / GRID as f64 - 0.5;
            let v = (j as f64 + 0.5) / GRID as f64 - 0.5;
            let z = C64::new(u, 0.0) + tau * v;
            if let Ok(f) = lat.wp(z) {
                starts.push(((f - w).norm() / (1.0 + f.norm()), z));
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(_, z) in starts.iter().take(8) {
        if let Some(p) = newton_wp(lat, w, z) {
            return Ok(p);
        }
    }
    Err(Error::NewtonDivergence(format!(
        "no solution of wp(p) = {w} found at tau = {tau}"
    )))
}

/// Reduced-cell representative with `Im p >= 0`, ties broken by `Re p >= 0`.
pub fn canonical_point(lat: &Lattice, p: C64) -> C64 {
    let z = lat.reduce(p).z;
    if needs_flip(z) {
        -z
    } else {
        z
    }
}

/// The value of `wp(p)` prescribed by the seed.
pub fn hitchin_wp(seed: HitchinSeed, lat: &Lattice) -> Result<C64> {
    let a = seed.shift(lat.tau());
    let degenerate = |e: Error| Error::DegenerateSeed(format!("a1 = {a} is a lattice point ({e})"));
    let (wp, wpp, _) = lat.wp_triple(a).map_err(degenerate)?;
    let denom = lat.zeta(a).map_err(degenerate)? - seed.quasi_period(lat);
    if denom.norm() <= 1e-12 * wpp.norm().max(1.0) {
        return Err(Error::DegenerateSeed(format!(
            "zeta(a1) - r eta1 - s eta2 vanishes at tau = {}",
            lat.tau()
        )));
    }
    Ok(wp + wpp / (2.0 * denom))
}

/// `wp(p)` and the canonical `p` for the seed.
pub fn hitchin_p(seed: HitchinSeed, lat: &Lattice) -> Result<HitchinPoint> {
    let wp_p = hitchin_wp(seed, lat)?;
    let p = invert_wp(lat, wp_p, None)?;
    Ok(HitchinPoint {
        wp_p,
        p: canonical_point(lat, p),
    })
}

/// Lamé data of the explicit solution together with `a1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitchinData {
    pub params: LameParams,
    pub shift: C64,
    /// `|zeta(a1 + p) + zeta(a1 - p) - 2 (r eta1 + s eta2)|`.
    pub constraint_residual: f64,
}

fn lame_data_at(seed: HitchinSeed, lat: &Lattice, p: C64) -> Result<HitchinData> {
    let a1 = seed.shift(lat.tau());
    let zp = lat.zeta(p + a1)?;
    let zm = lat.zeta(p - a1)?;
    let residue = 0.5 * (zp + zm - lat.zeta(2.0 * p)?);
    let constraint = lat.zeta(a1 + p)? + lat.zeta(a1 - p)? - 2.0 * seed.quasi_period(lat);
    Ok(HitchinData {
        params: LameParams::apparent(lat, [C64::default(); 4], p, residue)?,
        shift: a1,
        constraint_residual: constraint.norm(),
    })
}

pub fn hitchin_lame_data(seed: HitchinSeed, lat: &Lattice) -> Result<HitchinData> {
    let hp = hitchin_p(seed, lat)?;
    lame_data_at(seed, lat, hp.p)
}

/// As [`hitchin_lame_data`], with `p` continued from a nearby value.
pub fn hitchin_lame_data_near(seed: HitchinSeed, lat: &Lattice, guess: C64) -> Result<HitchinData> {
    let w = hitchin_wp(seed, lat)?;
    let p = invert_wp(lat, w, Some(guess))?;
    let p = if (p - guess).norm() <= (-p - guess).norm() {
        p
    } else {
        -p
    };
    lame_data_at(seed, lat, p)
}

/// The explicit solution sampled on `samples_per_segment + 1` equally spaced
/// points of every segment, with `p` continued along the path.
pub fn hitchin_trajectory(
    seed: HitchinSeed,
    path: &TauPath,
    samples_per_segment: usize,
) -> Result<Trajectory> {
    let m = samples_per_segment.max(1);
    let first = hitchin_lame_data(seed, &Lattice::from_tau(path.start())?)?;
    let mut samples = vec![TrajectorySample {
        tau: path.start(),
        point: first.params.point,
        residue: first.params.residue,
    }];
    let mut segments = Vec::new();
    let mut prev = first.params.point;
    for w in path.vertices().windows(2) {
        let lo = samples.len() - 1;
        for j in 1..=m {
            let tau = w[0] + (w[1] - w[0]) * (j as f64 / m as f64);
            let d = hitchin_lame_data_near(seed, &Lattice::from_tau(tau)?, prev)?;
            prev = d.params.point;
            samples.push(TrajectorySample {
                tau,
                point: d.params.point,
                residue: d.params.residue,
            });
        }
        segments.push((lo, samples.len() - 1));
    }
    let mut traj = Trajectory::from_samples([C64::default(); 4], samples)?;
    traj.path = path.clone();
    traj.segments = segments;
    Ok(traj)
}

/// Monodromy matrices in the basis `(y_{a1}, y_{-a1})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedMonodromy {
    pub around_points: [[C64; 2]; 2],
    pub ell1: [[C64; 2]; 2],
    pub ell2: [[C64; 2]; 2],
}

pub fn expected_monodromy(seed: HitchinSeed) -> ExpectedMonodromy {
    let zero = C64::default();
    let phase = |x: C64| (2.0 * PI * I * x).exp();
    ExpectedMonodromy {
        around_points: [[C64::new(-1.0, 0.0), zero], [zero, C64::new(-1.0, 0.0)]],
        ell1: [[phase(-seed.s), zero], [zero, phase(seed.s)]],
        ell2: [[phase(seed.r), zero], [zero, phase(-seed.r)]],
    }
}

/// `{f; z} = f'''/f' - 3/2 (f''/f')^2` from the first three derivatives.
pub fn schwarzian_of_jet(d1: C64, d2: C64, d3: C64) -> C64 {
    let q = d2 / d1;
    d3 / d1 - 1.5 * q * q
}

/// Logarithmic derivative `g = f'/f` of the solution ratio and its first two
/// derivatives.
fn ratio_log_jet(seed: HitchinSeed, lat: &Lattice, a1: C64, z: C64) -> Result<[C64; 3]> {
    let (wm, wpm, _) = lat.wp_triple(z - a1)?;
    let (wq, wpq, _) = lat.wp_triple(z + a1)?;
    let g = 2.0 * a1 * lat.eta1() - 4.0 * PI * I * seed.s + lat.zeta(z - a1)? - lat.zeta(z + a1)?;
    Ok([g, wq - wm, wpq - wpm])
}

/// Schwarzian of the ratio `y_{a1} / y_{-a1}` at `z`.
pub fn ratio_schwarzian(seed: HitchinSeed, lat: &Lattice, z: C64) -> Result<C64> {
    let a1 = seed.shift(lat.tau());
    let [g, g1, g2] = ratio_log_jet(seed, lat, a1, z)?;
    if g.norm() < 1e-12 {
        return Err(Error::Pole {
            z,
            distance: g.norm(),
        });
    }
    Ok(schwarzian_of_jet(
        g,
        g * g + g1,
        g * g * g + 3.0 * g * g1 + g2,
    ))
}

fn check_sample(lat: &Lattice, params: &LameParams, shift: C64, z: C64) -> Result<()> {
    let p = params.point;
    for w in [p, -p, shift, -shift, C64::default()] {
        let d = lat.lattice_distance(z, w);
        if d < 1e-3 {
            return Err(Error::Pole { z, distance: d });
        }
    }
    Ok(())
}

/// `max |{f; z} + 2 I(z)|` over the samples.
pub fn schwarzian_residual(seed: HitchinSeed, lat: &Lattice, zs: &[C64]) -> Result<f64> {
    let data = hitchin_lame_data(seed, lat)?;
    let mut worst: f64 = 0.0;
    for &z in zs {
        check_sample(lat, &data.params, data.shift, z)?;
        let r = ratio_schwarzian(seed, lat, z)? + 2.0 * potential(lat, &data.params, z)?;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Logarithmic derivative of `y_{+-a1}` and `y''/y`.
pub fn explicit_solution_log_jet(
    data: &HitchinData,
    lat: &Lattice,
    z: C64,
    sign: f64,
) -> Result<(C64, C64)> {
    let p = data.params.point;
    let a = sign * data.shift;
    let half_sum = 0.5 * (lat.zeta(data.shift + p)? + lat.zeta(data.shift - p)?);
    let u = sign * half_sum + lat.zeta(z - a)? - 0.5 * (lat.zeta(z + p)? + lat.zeta(z - p)?);
    let du = -lat.wp(z - a)? + 0.5 * (lat.wp(z + p)? + lat.wp(z - p)?);
    Ok((u, du + u * u))
}

/// `y_{+-a1}(z)` and its derivative; the square root follows the principal
/// branch of `log sigma`.
pub fn explicit_solution(
    data: &HitchinData,
    lat: &Lattice,
    z: C64,
    sign: f64,
) -> Result<(C64, C64)> {
    let p = data.params.point;
    let a = sign * data.shift;
    let half_sum = 0.5 * (lat.zeta(data.shift + p)? + lat.zeta(data.shift - p)?);
    let log_y = sign * z * half_sum + lat.log_sigma(z - a)?
        - 0.5 * (lat.log_sigma(z + p)? + lat.log_sigma(z - p)?);
    let y = log_y.exp();
    let (u, _) = explicit_solution_log_jet(data, lat, z, sign)?;
    Ok((y, y * u))
}

/// `max |y''/y - I(z)|` for both explicit solutions.
pub fn explicit_solution_residual(seed: HitchinSeed, lat: &Lattice, zs: &[C64]) -> Result<f64> {
    let data = hitchin_lame_data(seed, lat)?;
    let mut worst: f64 = 0.0;
    for &z in zs {
        check_sample(lat, &data.params, data.shift, z)?;
        let target = potential(lat, &data.params, z)?;
        for sign in [1.0, -1.0] {
            let (_, ratio) = explicit_solution_log_jet(&data, lat, z, sign)?;
            worst = worst.max((ratio - target).norm());
        }
    }
    Ok(worst)
}

/// The weights of the explicit family.
pub const WEIGHTS: Weights = [C64::new(0.0, 0.0); 4];
