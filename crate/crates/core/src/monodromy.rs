//! Monodromy of `Y' = Q(z) Y`, `Q = [[0, 1], [I(z), 0]]`, by numerical
//! transport of a fundamental matrix along loops avoiding the singular set.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::hitchin::HitchinData;
use crate::lame::{potential, LameParams};
use crate::ode::{dopri5, Control, OdeOptions};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub type Matrix2 = [[C64; 2]; 2];

/// Geometry of the standard loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub radius: f64,
    pub segments: usize,
    pub clearance: f64,
    pub detour_radius: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            radius: 0.08,
            segments: 64,
            clearance: 0.03,
            detour_radius: 0.05,
            rtol: 1e-11,
            atol: 1e-13,
        }
    }
}

/// The default basepoint `0.11 + 0.13 tau`.
pub fn default_basepoint(tau: C64) -> C64 {
    C64::new(0.11, 0.0) + 0.13 * tau
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Generator {
    /// Loop around the half period `omega_k / 2`.
    HalfPeriod(usize),
    PointPlus,
    PointMinus,
    Ell1,
    Ell2,
}

impl Generator {
    pub const ALL: [Generator; 8] = [
        Generator::HalfPeriod(0),
        Generator::HalfPeriod(1),
        Generator::HalfPeriod(2),
        Generator::HalfPeriod(3),
        Generator::PointPlus,
        Generator::PointMinus,
        Generator::Ell1,
        Generator::Ell2,
    ];

    pub fn label(&self) -> String {
        match self {
            Generator::HalfPeriod(k) => format!("gamma{k}"),
            Generator::PointPlus => "gamma_plus".into(),
            Generator::PointMinus => "gamma_minus".into(),
            Generator::Ell1 => "ell1".into(),
            Generator::Ell2 => "ell2".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub vertices: Vec<C64>,
    pub kind: Generator,
    pub basepoint: C64,
}

/// The singular points `omega_k/2` and `+-p` in the reduced cell.
pub fn singular_points(lat: &Lattice, p: C64) -> [C64; 6] {
    [
        lat.half_period(0),
        lat.half_period(1),
        lat.half_period(2),
        lat.half_period(3),
        lat.reduce(p).z,
        lat.reduce(-p).z,
    ]
}

/// All lattice translates of the singular set near the segment `[a, b]`.
fn translates_near(lat: &Lattice, sing: &[C64], a: C64, b: C64, margin: f64) -> Vec<C64> {
    let tau = lat.tau();
    let lo_im = a.im.min(b.im) - margin;
    let hi_im = a.im.max(b.im) + margin;
    let n_lo = (lo_im / tau.im).floor() as i64 - 1;
    let n_hi = (hi_im / tau.im).ceil() as i64 + 1;
    let lo_re = a.re.min(b.re) - margin;
    let hi_re = a.re.max(b.re) + margin;
    let mut out = Vec::new();
    for &s in sing {
        for n in n_lo..=n_hi {
            let base = s + tau * n as f64;
            let m_lo = (lo_re - base.re).floor() as i64 - 1;
            let m_hi = (hi_re - base.re).ceil() as i64 + 1;
            for m in m_lo..=m_hi {
                let z = base + m as f64;
                if z.re >= lo_re && z.re <= hi_re && z.im >= lo_im && z.im <= hi_im {
                    out.push(z);
                }
            }
        }
    }
    out
}

/// Distance from `o` to the segment `[a, b]` and the projection parameter.
fn segment_distance(a: C64, b: C64, o: C64) -> (f64, f64) {
    let d = b - a;
    let len2 = d.norm_sqr();
    let t = (((o - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    ((a + d * t - o).norm(), t)
}

/// Minimum distance from a polyline to the singular set.
pub fn polyline_clearance(lat: &Lattice, p: C64, vertices: &[C64]) -> (f64, C64) {
    let sing = singular_points(lat, p);
    let mut best = (f64::INFINITY, C64::default());
    for w in vertices.windows(2) {
        for o in translates_near(lat, &sing, w[0], w[1], 1.0) {
            let (d, _) = segment_distance(w[0], w[1], o);
            if d < best.0 {
                best = (d, o);
            }
        }
    }
    best
}

fn check_clearance(lat: &Lattice, p: C64, vertices: &[C64], clearance: f64) -> Result<()> {
    let (d, o) = polyline_clearance(lat, p, vertices);
    if d < clearance {
        return Err(Error::ClearanceViolation {
            point: o,
            distance: d,
        });
    }
    Ok(())
}

/// Straight path from `a` to `b` with arc bumps around singular points
/// within `detour_radius`; each bump is the minor arc, so the detoured path
/// is homotopic to the straight one. Points in `skip` are ignored.
fn detoured_segment(
    lat: &Lattice,
    sing: &[C64],
    a: C64,
    b: C64,
    skip: &[C64],
    cfg: &LoopConfig,
) -> Result<Vec<C64>> {
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let mut hits: Vec<(f64, C64, f64)> = translates_near(lat, sing, a, b, cfg.detour_radius)
        .into_iter()
        .filter(|o| skip.iter().all(|s| (s - o).norm() > 1e-9))
        .filter_map(|o| {
            let (d, t) = segment_distance(a, b, o);
            (d < cfg.detour_radius).then_some((t * len, o, d))
        })
        .collect();
    hits.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = vec![a];
    let mut last_exit = 0.0;
    for (along, o, d) in hits {
        let half = (cfg.detour_radius * cfg.detour_radius - d * d).sqrt();
        let (enter, exit) = (along - half, along + half);
        if enter <= last_exit + 1e-9 || exit >= len - 1e-9 {
            return Err(Error::NoValidDetour(format!(
                "singular point {o} too close to the end of a connector or to another detour"
            )));
        }
        let p_in = a + dir * enter;
        let p_out = a + dir * exit;
        let start = (p_in - o).arg();
        let mut sweep = (p_out - o).arg() - start;
        // Minor arc; a point on the line goes counterclockwise.
        if sweep > PI {
            sweep -= 2.0 * PI;
        } else if sweep <= -PI {
            sweep += 2.0 * PI;
        }
        if d < 1e-12 {
            sweep = PI;
        }
        out.push(p_in);
        let pieces = 16;
        for j in 1..pieces {
            let ang = start + sweep * j as f64 / pieces as f64;
            out.push(o + C64::from_polar(cfg.detour_radius, ang));
        }
        out.push(p_out);
        last_exit = exit;
    }
    out.push(b);
    Ok(out)
}

/// Loops around the six singular points and the two period paths.
pub fn standard_loops(
    params: &LameParams,
    lat: &Lattice,
    basepoint: C64,
    cfg: &LoopConfig,
) -> Result<Vec<LoopPath>> {
    let p = params.point;
    let sing = singular_points(lat, p);
    let (d, o) = sing
        .iter()
        .flat_map(|&s| {
            let r = lat.lattice_distance(basepoint, s);
            std::iter::once((r, s))
        })
        .fold((f64::INFINITY, C64::default()), |acc, x| {
            if x.0 < acc.0 {
                x
            } else {
                acc
            }
        });
    if d < cfg.detour_radius.max(cfg.clearance) {
        return Err(Error::ClearanceViolation {
            point: o,
            distance: d,
        });
    }
    let mut loops = Vec::with_capacity(8);
    let centers = [
        (Generator::HalfPeriod(0), sing[0]),
        (Generator::HalfPeriod(1), sing[1]),
        (Generator::HalfPeriod(2), sing[2]),
        (Generator::HalfPeriod(3), sing[3]),
        (Generator::PointPlus, p),
        (Generator::PointMinus, -p),
    ];
    for (kind, c) in centers {
        // Translate nearest to the basepoint.
        let cell = lat.reduce(c - basepoint);
        let center = basepoint + cell.z;
        let toward = (basepoint - center) / (basepoint - center).norm();
        let entry = center + toward * cfg.radius;
        let connector = detoured_segment(lat, &sing, basepoint, entry, &[center], cfg)?;
        let mut v = connector.clone();
        let start = toward.arg();
        for j in 1..=cfg.segments {
            let ang = start + 2.0 * PI * j as f64 / cfg.segments as f64;
            v.push(center + C64::from_polar(cfg.radius, ang));
        }
        *v.last_mut().expect("circle has vertices") = entry;
        v.extend(connector.iter().rev().skip(1));
        check_clearance(lat, p, &v, cfg.clearance)?;
        loops.push(LoopPath {
            vertices: v,
            kind,
            basepoint,
        });
    }
    for (kind, period) in [
        (Generator::Ell1, C64::new(1.0, 0.0)),
        (Generator::Ell2, lat.tau()),
    ] {
        let v = detoured_segment(lat, &sing, basepoint, basepoint + period, &[], cfg)?;
        check_clearance(lat, p, &v, cfg.clearance)?;
        loops.push(LoopPath {
            vertices: v,
            kind,
            basepoint,
        });
    }
    Ok(loops)
}

/// Discrete winding number of a closed polyline about `c`.
pub fn winding_number(vertices: &[C64], c: C64) -> f64 {
    let mut total = 0.0;
    for w in vertices.windows(2) {
        total += ((w[1] - c) / (w[0] - c)).arg();
    }
    total / (2.0 * PI)
}

fn identity() -> Matrix2 {
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();
    [[one, zero], [zero, one]]
}

/// Fundamental matrix at the end of `path` for `Y(start) = identity`.
pub fn transport(
    params: &LameParams,
    lat: &Lattice,
    path: &[C64],
    cfg: &LoopConfig,
) -> Result<Matrix2> {
    check_clearance(lat, params.point, path, cfg.clearance)?;
    let opts = OdeOptions::with_tol(cfg.rtol, cfg.atol);
    let id = identity();
    let mut y = [id[0][0], id[0][1], id[1][0], id[1][1]];
    let mut h_carry = None;
    for w in path.windows(2) {
        let len = (w[1] - w[0]).norm();
        if len == 0.0 {
            continue;
        }
        let dir = (w[1] - w[0]) / len;
        let local = OdeOptions {
            h_init: h_carry,
            ..opts
        };
        let out = dopri5(
            |s, y: &[C64; 4]| {
                let pot = potential(lat, params, w[0] + dir * s)?;
                Ok([y[2] * dir, y[3] * dir, pot * y[0] * dir, pot * y[1] * dir])
            },
            0.0,
            y,
            len,
            &local,
            |_, _| Ok(Control::Continue),
        )?;
        h_carry = Some(out.stats.last_h.min(len).max(1e-6));
        y = out.y;
    }
    Ok([[y[0], y[1]], [y[2], y[3]]])
}

pub fn det(m: &Matrix2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Matrix2) -> C64 {
    m[0][0] + m[1][1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRep {
    pub matrices: BTreeMap<Generator, Matrix2>,
    pub basepoint: C64,
}

impl MonodromyRep {
    pub fn traces(&self) -> BTreeMap<Generator, C64> {
        self.matrices.iter().map(|(g, m)| (*g, trace(m))).collect()
    }

    pub fn max_det_defect(&self) -> f64 {
        self.matrices
            .values()
            .map(|m| (det(m) - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Monodromy matrices of all standard generators; loops run on separate threads.
pub fn monodromy_rep(
    params: &LameParams,
    lat: &Lattice,
    basepoint: C64,
    cfg: &LoopConfig,
) -> Result<MonodromyRep> {
    let loops = standard_loops(params, lat, basepoint, cfg)?;
    let results: Vec<Result<(Generator, Matrix2)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = loops
            .iter()
            .map(|l| {
                scope.spawn(move || transport(params, lat, &l.vertices, cfg).map(|m| (l.kind, m)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("transport thread panicked"))
            .collect()
    });
    let mut matrices = BTreeMap::new();
    for r in results {
        let (g, m) = r?;
        matrices.insert(g, m);
    }
    Ok(MonodromyRep {
        matrices,
        basepoint,
    })
}

/// Largest change of any generator trace along the trajectory, relative to
/// its first sample, with the basepoint `0.11 + 0.13 tau`.
pub fn isomonodromy_drift(
    traj: &Trajectory,
    sample_indices: &[usize],
    cfg: &LoopConfig,
) -> Result<f64> {
    let mut reference: Option<BTreeMap<Generator, C64>> = None;
    let mut worst: f64 = 0.0;
    for &i in sample_indices {
        let s = traj
            .samples
            .get(i)
            .ok_or_else(|| Error::InvalidParams(format!("sample index {i} out of range")))?;
        let lat = Lattice::from_tau(s.tau)?;
        let params = LameParams::apparent(&lat, traj.weights, s.point, s.residue)?;
        let rep = monodromy_rep(&params, &lat, default_basepoint(s.tau), cfg)?;
        let traces = rep.traces();
        match &reference {
            None => reference = Some(traces),
            Some(r) => {
                for (g, t) in &traces {
                    worst = worst.max((t - r[g]).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `k` equally spaced sample indices spanning the trajectory.
pub fn spread_indices(len: usize, k: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    if k <= 1 || len == 1 {
        return vec![0];
    }
    (0..k).map(|j| j * (len - 1) / (k - 1)).collect()
}

/// Sign acquired by the continuation of `(sigma(z+p) sigma(z-p))^(1/2)` along
/// `path`, relative to the quasi-periodicity factor of the translation `period`.
fn root_continuation_sign(lat: &Lattice, p: C64, path: &[C64], period_eta: C64) -> Result<f64> {
    let log_prod = |z: C64| -> Result<C64> { Ok(lat.log_sigma(z + p)? + lat.log_sigma(z - p)?) };
    let mut root = (0.5 * log_prod(path[0])?).exp();
    let start_root = root;
    for w in path.windows(2) {
        let pieces = (((w[1] - w[0]).norm() / 0.005).ceil() as usize).max(1);
        for j in 1..=pieces {
            let z = w[0] + (w[1] - w[0]) * (j as f64 / pieces as f64);
            let cand = (0.5 * log_prod(z)?).exp();
            root = if (cand - root).norm() <= (cand + root).norm() {
                cand
            } else {
                -cand
            };
        }
    }
    let z0 = path[0];
    let end = *path.last().expect("non-empty path");
    let factor = (period_eta * (z0 + 0.5 * (end - z0))).exp();
    let ratio = root / (start_root * factor);
    Ok(ratio.re.signum())
}

/// Traces of the period generators expected for the explicit solutions on
/// the given loops: `-eps_1 2cos(2 pi s)` and `-eps_2 2cos(2 pi r)`, where
/// `eps_j` is the sign picked up by the square-root factor.
pub fn explicit_period_traces(
    seed: crate::hitchin::HitchinSeed,
    data: &HitchinData,
    lat: &Lattice,
    loops: &[LoopPath],
) -> Result<(C64, C64)> {
    let p = data.params.point;
    let mut out = (C64::default(), C64::default());
    for l in loops {
        match l.kind {
            Generator::Ell1 => {
                let eps = root_continuation_sign(lat, p, &l.vertices, lat.eta1())?;
                out.0 = -eps * 2.0 * (2.0 * PI * seed.s).cos();
            }
            Generator::Ell2 => {
                let eps = root_continuation_sign(lat, p, &l.vertices, lat.eta2())?;
                out.1 = -eps * 2.0 * (2.0 * PI * seed.r).cos();
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hitchin::{hitchin_lame_data, HitchinSeed};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn generic(lat: &Lattice) -> LameParams {
        let n = [c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.7, 0.1)];
        LameParams::apparent(lat, n, c(0.21, 0.33), c(0.4, -0.25)).unwrap()
    }

    #[test]
    fn transport_basics() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let params = generic(&lat);
        let cfg = LoopConfig::default();
        let path = [c(0.11, 0.13), c(0.3, -0.1), c(-0.2, -0.2)];
        let m = transport(&params, &lat, &path, &cfg).unwrap();
        assert!((det(&m) - 1.0).norm() < 1e-8);
        let mut back = path.to_vec();
        back.extend(path.iter().rev().skip(1));
        let round = transport(&params, &lat, &back, &cfg).unwrap();
        assert!((round[0][0] - 1.0).norm() < 1e-8 && round[0][1].norm() < 1e-8);
        let small: Vec<C64> = (0..=32)
            .map(|j| c(-0.2, -0.2) + C64::from_polar(0.05, 2.0 * PI * j as f64 / 32.0))
            .collect();
        let id = transport(&params, &lat, &small, &cfg).unwrap();
        assert!((id[0][0] - 1.0).norm() < 1e-8 && id[1][0].norm() < 1e-8);
    }

    #[test]
    fn clearance_is_enforced() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let params = generic(&lat);
        let path = [c(0.11, 0.13), c(0.5, 0.01)];
        assert!(matches!(
            transport(&params, &lat, &path, &LoopConfig::default()),
            Err(Error::ClearanceViolation { .. })
        ));
    }

    #[test]
    fn loops_have_the_right_shape() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let seed = HitchinSeed::new(c(0.25, 0.0), c(0.25, 0.0)).unwrap();
        let data = hitchin_lame_data(seed, &lat).unwrap();
        let q0 = default_basepoint(lat.tau());
        let loops = standard_loops(&data.params, &lat, q0, &LoopConfig::default()).unwrap();
        assert_eq!(loops.len(), 8);
        let g0 = &loops[0];
        assert!((winding_number(&g0.vertices, c(0.0, 0.0)) - 1.0).abs() < 1e-9);
        let ell2 = loops.iter().find(|l| l.kind == Generator::Ell2).unwrap();
        let v = &ell2.vertices;
        assert!((v[v.len() - 1] - v[0] - lat.tau()).norm() < 1e-14);
    }

    #[test]
    fn generic_weights_give_expected_local_traces() {
        let lat = Lattice::from_tau(c(0.1, 1.1)).unwrap();
        let params = generic(&lat);
        let rep = monodromy_rep(
            &params,
            &lat,
            default_basepoint(lat.tau()),
            &LoopConfig::default(),
        )
        .unwrap();
        assert!(rep.max_det_defect() < 1e-8);
        let tr = rep.traces();
        for k in 0..4 {
            let expect = 2.0 * (2.0 * PI * params.weights[k]).cos();
            assert!(
                (tr[&Generator::HalfPeriod(k)] - expect).norm() < 1e-5,
                "k = {k}"
            );
        }
        let g2 = rep.matrices[&Generator::HalfPeriod(2)];
        assert!((g2[0][0] - 1.0).norm() < 1e-7 && g2[0][1].norm() < 1e-7);
        for g in [Generator::PointPlus, Generator::PointMinus] {
            let m = rep.matrices[&g];
            assert!(
                (m[0][0] + 1.0).norm() < 1e-6
                    && m[0][1].norm() < 1e-6
                    && (m[1][1] + 1.0).norm() < 1e-6
            );
        }
        let other = monodromy_rep(
            &params,
            &lat,
            c(-0.17, 0.05) + 0.21 * lat.tau(),
            &LoopConfig::default(),
        )
        .unwrap();
        for g in [
            Generator::HalfPeriod(0),
            Generator::HalfPeriod(3),
            Generator::PointPlus,
        ] {
            assert!((other.traces()[&g] - tr[&g]).norm() < 1e-6);
        }
    }

    #[test]
    fn explicit_family_traces() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        for (r, s) in [(0.25, 0.25), (0.3, 0.2)] {
            let seed = HitchinSeed::new(c(r, 0.0), c(s, 0.0)).unwrap();
            let data = hitchin_lame_data(seed, &lat).unwrap();
            let q0 = default_basepoint(lat.tau());
            let cfg = LoopConfig::default();
            let rep = monodromy_rep(&data.params, &lat, q0, &cfg).unwrap();
            let tr = rep.traces();
            let loops = standard_loops(&data.params, &lat, q0, &cfg).unwrap();
            let (e1, e2) = explicit_period_traces(seed, &data, &lat, &loops).unwrap();
            assert!(
                (tr[&Generator::Ell1] - e1).norm() < 1e-6,
                "{} vs {e1}",
                tr[&Generator::Ell1]
            );
            assert!(
                (tr[&Generator::Ell2] - e2).norm() < 1e-6,
                "{} vs {e2}",
                tr[&Generator::Ell2]
            );
            assert!((tr[&Generator::PointPlus] + 2.0).norm() < 1e-6);
            assert!((tr[&Generator::PointMinus] + 2.0).norm() < 1e-6);
        }
    }

    #[test]
    fn single_sample_has_no_drift() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let seed = HitchinSeed::new(c(0.25, 0.0), c(0.25, 0.0)).unwrap();
        let d = hitchin_lame_data(seed, &lat).unwrap();
        let sample = |tau: C64, point: C64, residue: C64| crate::flow::TrajectorySample {
            tau,
            point,
            residue,
        };
        let traj = Trajectory::from_samples(
            [C64::default(); 4],
            vec![
                sample(lat.tau(), d.params.point, d.params.residue),
                sample(c(0.0, 1.01), c(0.3, 0.3), c(0.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(
            isomonodromy_drift(&traj, &[0], &LoopConfig::default()).unwrap(),
            0.0
        );
    }
}
