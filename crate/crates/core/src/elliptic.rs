//! Jacobi theta and Weierstrass functions on the torus `C / (Z + tau Z)`.
//!
//! Everything is built from the odd theta function
//! `theta1(z) = 2 sum_{n>=0} (-1)^n exp(i pi tau (n+1/2)^2) sin((2n+1) pi z)`,
//! evaluated on the fundamental cell and carried elsewhere by its exact
//! quasi-periodicity factors. A [`Lattice`] caches the series coefficients and
//! the derived invariants for one modulus, so repeated evaluations at the same
//! `tau` are cheap.

use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Smallest admissible imaginary part of the modulus.
pub const MIN_IM_TAU: f64 = 0.05;
/// Distance below which an argument is treated as sitting on a pole.
pub const POLE_TOL: f64 = 1e-10;
const SERIES_REL_TOL: f64 = 1e-18;
const SERIES_MAX_TERMS: usize = 512;

const I: C64 = C64::new(0.0, 1.0);

/// A point of the upper half-plane with `Im tau >= MIN_IM_TAU`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "C64", into = "C64")]
pub struct Modulus(C64);

impl Modulus {
    pub fn new(tau: C64) -> Result<Self> {
        if tau.im.is_nan() || tau.im < MIN_IM_TAU || !tau.re.is_finite() {
            return Err(Error::Domain {
                tau,
                min_im: MIN_IM_TAU,
            });
        }
        Ok(Modulus(tau))
    }

    pub fn tau(self) -> C64 {
        self.0
    }

    /// Periods `omega_k`, k = 0..3: `0, 1, tau, 1 + tau`.
    pub fn period(self, k: usize) -> C64 {
        match k {
            0 => C64::new(0.0, 0.0),
            1 => C64::new(1.0, 0.0),
            2 => self.0,
            3 => self.0 + 1.0,
            _ => panic!("period index {k} out of range"),
        }
    }

    /// Half periods `omega_k / 2`.
    pub fn half_period(self, k: usize) -> C64 {
        self.period(k) * 0.5
    }

    /// `d(omega_k / 2)/d tau`: zero for k = 0, 1 and one half for k = 2, 3.
    pub fn half_period_velocity(k: usize) -> f64 {
        if k >= 2 {
            0.5
        } else {
            0.0
        }
    }
}

impl TryFrom<C64> for Modulus {
    type Error = Error;
    fn try_from(tau: C64) -> Result<Self> {
        Modulus::new(tau)
    }
}

impl From<Modulus> for C64 {
    fn from(m: Modulus) -> C64 {
        m.0
    }
}

/// A point split as `z = z_reduced + m + n tau` with the lattice coordinates of
/// `z_reduced` in `[-1/2, 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticePoint {
    pub z: C64,
    pub cell: (i64, i64),
}

/// Reduce `z` into the fundamental cell centred at the origin.
pub fn reduce_to_cell(z: C64, tau: Modulus) -> LatticePoint {
    let t = tau.tau();
    let n = (z.im / t.im + 0.5).floor();
    let z1 = z - t * n;
    let a = z1.re - (z1.im / t.im) * t.re;
    let m = (a + 0.5).floor();
    LatticePoint {
        z: z1 - m,
        cell: (m as i64, n as i64),
    }
}

/// Cached invariants of one torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeData {
    pub eta1: C64,
    pub eta2: C64,
    pub e1: C64,
    pub e2: C64,
    pub e3: C64,
    pub g2: C64,
    pub g3: C64,
    pub theta1_prime: C64,
    pub dedekind_eta: C64,
    pub theta2: C64,
    pub theta3: C64,
    pub theta4: C64,
}

impl LatticeData {
    pub fn e(&self, k: usize) -> C64 {
        match k {
            1 => self.e1,
            2 => self.e2,
            3 => self.e3,
            _ => panic!("e index {k} out of range"),
        }
    }
}

/// Values of the Weierstrass functions at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeierstrassSuite {
    pub sigma: C64,
    pub zeta: C64,
    pub wp: C64,
    pub wp_prime: C64,
    pub wp_prime2: C64,
}

/// Closed-form `tau`-derivatives at fixed `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauDerivatives {
    pub dlog_sigma: C64,
    pub dzeta: C64,
    pub dwp: C64,
    pub dwp_prime: C64,
    pub deta1: C64,
    pub dlog_theta1_prime: C64,
}

/// Evaluation context for one modulus.
#[derive(Clone, Debug)]
pub struct Lattice {
    modulus: Modulus,
    coeffs: Vec<C64>,
    data: LatticeData,
}

impl Lattice {
    pub fn new(modulus: Modulus) -> Result<Self> {
        let tau = modulus.tau();
        let coeffs = theta1_coefficients(tau)?;
        let mut lat = Lattice {
            modulus,
            coeffs,
            data: LatticeData {
                eta1: C64::default(),
                eta2: C64::default(),
                e1: C64::default(),
                e2: C64::default(),
                e3: C64::default(),
                g2: C64::default(),
                g3: C64::default(),
                theta1_prime: C64::default(),
                dedekind_eta: C64::default(),
                theta2: C64::default(),
                theta3: C64::default(),
                theta4: C64::default(),
            },
        };

        let (d1, d3) = lat.coeffs.iter().enumerate().fold(
            (C64::default(), C64::default()),
            |(d1, d3), (n, c)| {
                let k = (2 * n + 1) as f64 * PI;
                (d1 + c * k, d3 - c * k.powi(3))
            },
        );
        let eta1 = -d3 / (3.0 * d1);
        lat.data.theta1_prime = d1;
        lat.data.eta1 = eta1;
        lat.data.eta2 = tau * eta1 - 2.0 * PI * I;

        let mut e = [C64::default(); 3];
        for (k, ek) in e.iter_mut().enumerate() {
            let zr = reduce_to_cell(modulus.half_period(k + 1), modulus).z;
            let th = lat.theta_reduced(zr)?;
            let l1 = th[1] / th[0];
            *ek = -eta1 - (th[2] / th[0] - l1 * l1);
        }
        lat.data.e1 = e[0];
        lat.data.e2 = e[1];
        lat.data.e3 = e[2];
        lat.data.g2 = -4.0 * (e[0] * e[1] + e[0] * e[2] + e[1] * e[2]);
        lat.data.g3 = 4.0 * e[0] * e[1] * e[2];

        let (t2, t3, t4) = theta_constants(tau)?;
        lat.data.theta2 = t2;
        lat.data.theta3 = t3;
        lat.data.theta4 = t4;
        lat.data.dedekind_eta = dedekind_eta(tau)?;
        Ok(lat)
    }

    pub fn from_tau(tau: C64) -> Result<Self> {
        Lattice::new(Modulus::new(tau)?)
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn tau(&self) -> C64 {
        self.modulus.tau()
    }

    pub fn data(&self) -> &LatticeData {
        &self.data
    }

    pub fn eta1(&self) -> C64 {
        self.data.eta1
    }

    pub fn eta2(&self) -> C64 {
        self.data.eta2
    }

    pub fn half_period(&self, k: usize) -> C64 {
        self.modulus.half_period(k)
    }

    pub fn reduce(&self, z: C64) -> LatticePoint {
        reduce_to_cell(z, self.modulus)
    }

    /// Quasi-period `eta(omega)` for `omega = m + n tau`.
    pub fn eta_of(&self, cell: (i64, i64)) -> C64 {
        self.data.eta1 * cell.0 as f64 + self.data.eta2 * cell.1 as f64
    }

    /// Distance from `z` to the nearest point of `w + Z + tau Z`.
    pub fn lattice_distance(&self, z: C64, w: C64) -> f64 {
        let r = self.reduce(z - w).z;
        let t = self.tau();
        let mut best = f64::INFINITY;
        for m in -1..=1 {
            for n in -1..=1 {
                best = best.min((r - m as f64 - t * n as f64).norm());
            }
        }
        best
    }

    /// Theta series and its first three derivatives at a reduced argument.
    fn theta_reduced(&self, zr: C64) -> Result<[C64; 4]> {
        let mut out = [C64::default(); 4];
        let mut accumulated = 0.0;
        for (n, c) in self.coeffs.iter().enumerate() {
            let k = (2 * n + 1) as f64 * PI;
            let arg = zr * k;
            let bound = c.norm() * (k * zr.im.abs()).exp() * k.powi(3).max(1.0);
            accumulated += bound;
            let (s, co) = (arg.sin(), arg.cos());
            out[0] += c * s;
            out[1] += c * co * k;
            out[2] -= c * s * (k * k);
            out[3] -= c * co * (k * k * k);
            if bound < SERIES_REL_TOL * accumulated {
                return Ok(out);
            }
        }
        Err(Error::SeriesCap {
            cap: self.coeffs.len(),
        })
    }

    /// `d^deriv/dz^deriv theta1(z; tau)` for `deriv` in 0..=3.
    pub fn theta1(&self, z: C64, deriv: usize) -> Result<C64> {
        assert!(deriv <= 3, "theta1 derivative order {deriv} not supported");
        let lp = self.reduce(z);
        let th = self.theta_reduced(lp.z)?;
        let (m, n) = lp.cell;
        if n == 0 {
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            return Ok(th[deriv] * sign);
        }
        let nf = n as f64;
        let sign = if (m + n).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        let factor = (I * PI * (nf * nf) * self.tau() - 2.0 * PI * I * nf * z).exp() * sign;
        let slope = -2.0 * PI * I * nf;
        let mut acc = C64::default();
        for j in 0..=deriv {
            acc += th[j] * slope.powu((deriv - j) as u32) * binomial(deriv, j);
        }
        Ok(factor * acc)
    }

    fn check_pole(&self, z: C64, zr: C64) -> Result<()> {
        let d = zr.norm();
        if d < POLE_TOL {
            return Err(Error::Pole { z, distance: d });
        }
        Ok(())
    }

    /// Logarithmic derivatives `(log theta1)^(j)` for j = 1, 2, 3 at a reduced point.
    fn log_derivs(&self, z: C64, zr: C64) -> Result<(C64, C64, C64, [C64; 4])> {
        self.check_pole(z, zr)?;
        let th = self.theta_reduced(zr)?;
        let l1 = th[1] / th[0];
        let r2 = th[2] / th[0];
        let l2 = r2 - l1 * l1;
        let l3 = th[3] / th[0] - 3.0 * l1 * r2 + 2.0 * l1 * l1 * l1;
        Ok((l1, l2, l3, th))
    }

    pub fn wp(&self, z: C64) -> Result<C64> {
        let lp = self.reduce(z);
        let (_, l2, _, _) = self.log_derivs(z, lp.z)?;
        Ok(-self.data.eta1 - l2)
    }

    pub fn wp_prime(&self, z: C64) -> Result<C64> {
        let lp = self.reduce(z);
        let (_, _, l3, _) = self.log_derivs(z, lp.z)?;
        Ok(-l3)
    }

    pub fn zeta(&self, z: C64) -> Result<C64> {
        let lp = self.reduce(z);
        let (l1, _, _, _) = self.log_derivs(z, lp.z)?;
        Ok(self.data.eta1 * lp.z + l1 + self.eta_of(lp.cell))
    }

    /// `sigma`, `zeta`, `wp`, `wp'` and `wp''` at `z`.
    pub fn suite(&self, z: C64) -> Result<WeierstrassSuite> {
        let lp = self.reduce(z);
        let (l1, l2, l3, _) = self.log_derivs(z, lp.z)?;
        let eta1 = self.data.eta1;
        let wp = -eta1 - l2;
        let theta = self.theta1(z, 0)?;
        Ok(WeierstrassSuite {
            sigma: (eta1 * z * z * 0.5).exp() * theta / self.data.theta1_prime,
            zeta: eta1 * lp.z + l1 + self.eta_of(lp.cell),
            wp,
            wp_prime: -l3,
            wp_prime2: 6.0 * wp * wp - self.data.g2 * 0.5,
        })
    }

    /// `(wp, wp', wp'')` without the sigma function.
    pub fn wp_triple(&self, z: C64) -> Result<(C64, C64, C64)> {
        let lp = self.reduce(z);
        let (_, l2, l3, _) = self.log_derivs(z, lp.z)?;
        let wp = -self.data.eta1 - l2;
        Ok((wp, -l3, 6.0 * wp * wp - self.data.g2 * 0.5))
    }

    /// `log sigma(z)` on the principal branch of the logarithm of each factor.
    pub fn log_sigma(&self, z: C64) -> Result<C64> {
        let lp = self.reduce(z);
        self.check_pole(z, lp.z)?;
        let th = self.theta_reduced(lp.z)?;
        let (m, n) = lp.cell;
        let nf = n as f64;
        let mut log_factor = I * PI * nf * nf * self.tau() - 2.0 * PI * I * nf * z;
        if (m + n).rem_euclid(2) != 0 {
            log_factor += I * PI;
        }
        Ok(self.data.eta1 * z * z * 0.5 + log_factor + th[0].ln() - self.data.theta1_prime.ln())
    }

    /// Closed-form derivatives in `tau` at fixed `z`.
    pub fn tau_derivatives(&self, z: C64) -> Result<TauDerivatives> {
        let s = self.suite(z)?;
        let d = &self.data;
        let eta1 = d.eta1;
        let g2 = d.g2;
        let c = I / (4.0 * PI);
        let shifted = s.zeta - z * eta1;
        Ok(TauDerivatives {
            dlog_sigma: c
                * (s.wp - s.zeta * s.zeta + 2.0 * eta1 * (z * s.zeta - 1.0) - g2 * z * z / 12.0),
            dzeta: c * (s.wp_prime + 2.0 * shifted * s.wp + 2.0 * eta1 * s.zeta - z * g2 / 6.0),
            dwp: -c * (2.0 * shifted * s.wp_prime + 4.0 * (s.wp - eta1) * s.wp - g2 * (2.0 / 3.0)),
            dwp_prime: -c
                * (6.0 * (s.wp - eta1) * s.wp_prime + shifted * (12.0 * s.wp * s.wp - g2)),
            deta1: self.deta1(),
            dlog_theta1_prime: 3.0 * c * eta1,
        })
    }

    /// `d eta1 / d tau`.
    pub fn deta1(&self) -> C64 {
        let d = &self.data;
        I / (4.0 * PI) * (2.0 * d.eta1 * d.eta1 - d.g2 / 6.0)
    }

    /// `tau`-derivatives of `(zeta, wp, wp')` at fixed `z`, skipping sigma.
    pub fn tau_derivatives_light(&self, z: C64) -> Result<(C64, C64, C64)> {
        let lp = self.reduce(z);
        let (l1, l2, l3, _) = self.log_derivs(z, lp.z)?;
        let eta1 = self.data.eta1;
        let g2 = self.data.g2;
        let zeta = eta1 * lp.z + l1 + self.eta_of(lp.cell);
        let wp = -eta1 - l2;
        let wpp = -l3;
        let c = I / (4.0 * PI);
        let shifted = zeta - z * eta1;
        Ok((
            c * (wpp + 2.0 * shifted * wp + 2.0 * eta1 * zeta - z * g2 / 6.0),
            -c * (2.0 * shifted * wpp + 4.0 * (wp - eta1) * wp - g2 * (2.0 / 3.0)),
            -c * (6.0 * (wp - eta1) * wpp + shifted * (12.0 * wp * wp - g2)),
        ))
    }

    /// Cross-ratio `t` of the branch values and its `tau`-derivative.
    pub fn curve_map(&self) -> CurveMap {
        let d = &self.data;
        let t = (d.e3 - d.e1) / (d.e2 - d.e1);
        CurveMap {
            t,
            dt_dtau: -I * PI * t * d.theta2.powi(4),
        }
    }

    /// `lambda = (wp(p) - e1) / (e2 - e1)`.
    pub fn curve_map_point(&self, p: C64) -> Result<C64> {
        let d = &self.data;
        Ok((self.wp(p)? - d.e1) / (d.e2 - d.e1))
    }
}

/// Image of the modulus on the projective line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMap {
    pub t: C64,
    pub dt_dtau: C64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn theta1_coefficients(tau: C64) -> Result<Vec<C64>> {
    // Enough terms to meet the truncation rule anywhere in the reduced cell.
    let reach = 0.5 * tau.im + 1e-3;
    let mut coeffs = Vec::new();
    let mut accumulated = 0.0;
    for n in 0..SERIES_MAX_TERMS {
        let h = n as f64 + 0.5;
        let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
        let c = (I * PI * tau * (h * h)).exp() * sign;
        let k = 2.0 * h * PI;
        let bound = c.norm() * (k * reach).exp() * k.powi(3).max(1.0);
        accumulated += bound;
        coeffs.push(c);
        if bound < SERIES_REL_TOL * accumulated {
            return Ok(coeffs);
        }
    }
    Err(Error::SeriesCap {
        cap: SERIES_MAX_TERMS,
    })
}

/// Null values `(theta2, theta3, theta4)` from their `q`-series.
pub fn theta_constants(tau: C64) -> Result<(C64, C64, C64)> {
    let mut t2 = C64::default();
    let mut t3 = C64::new(1.0, 0.0);
    let mut t4 = C64::new(1.0, 0.0);
    let mut acc = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let h = n as f64 + 0.5;
        let a = (I * PI * tau * (h * h)).exp() * 2.0;
        let m = (n + 1) as f64;
        let b = (I * PI * tau * (m * m)).exp() * 2.0;
        t2 += a;
        t3 += b;
        t4 += if n % 2 == 0 { -b } else { b };
        acc += a.norm() + b.norm();
        if a.norm() < SERIES_REL_TOL * acc {
            return Ok((t2, t3, t4));
        }
    }
    Err(Error::SeriesCap {
        cap: SERIES_MAX_TERMS,
    })
}

/// Dedekind eta from its product expansion `q^(1/24) prod (1 - q^n)`, `q = e^{2 pi i tau}`.
pub fn dedekind_eta(tau: C64) -> Result<C64> {
    let q = (2.0 * PI * I * tau).exp();
    let mut prod = C64::new(1.0, 0.0);
    let mut qn = q;
    for _ in 0..SERIES_MAX_TERMS {
        prod *= C64::new(1.0, 0.0) - qn;
        if qn.norm() < SERIES_REL_TOL {
            return Ok((PI * I * tau / 12.0).exp() * prod);
        }
        qn *= q;
    }
    Err(Error::SeriesCap {
        cap: SERIES_MAX_TERMS,
    })
}

pub fn theta1(z: C64, tau: Modulus, deriv: usize) -> Result<C64> {
    Lattice::new(tau)?.theta1(z, deriv)
}

pub fn weierstrass_suite(z: C64, tau: Modulus) -> Result<WeierstrassSuite> {
    Lattice::new(tau)?.suite(z)
}

pub fn lattice_invariants(tau: Modulus) -> Result<LatticeData> {
    Ok(*Lattice::new(tau)?.data())
}

pub fn tau_derivative_suite(z: C64, tau: Modulus) -> Result<TauDerivatives> {
    Lattice::new(tau)?.tau_derivatives(z)
}

pub fn curve_map(tau: Modulus) -> Result<CurveMap> {
    Ok(Lattice::new(tau)?.curve_map())
}

pub fn curve_map_point(p: C64, tau: Modulus) -> Result<C64> {
    Lattice::new(tau)?.curve_map_point(p)
}

/// Brute-force lattice-sum values used to cross-check the theta route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSums {
    pub wp: C64,
    pub zeta: C64,
    pub eta1: C64,
}

/// Symmetric truncated lattice sums for `wp` and `zeta`.
///
/// The square truncation `|m|, |n| <= R` leaves a tail with an expansion in
/// even powers of `1 / (R + 1/2)`. Sums at `R`, `R/2` and `R/4` are combined to
/// cancel the first two tail terms. `eta1` is `2 zeta(1/2)`.
pub fn oracle_lattice_sums(z: C64, tau: Modulus, radius: usize) -> Result<OracleSums> {
    if radius < 20 {
        return Err(Error::InvalidParams(format!(
            "oracle radius {radius} below the minimum of 20"
        )));
    }
    let radii = [radius / 4, radius / 2, radius];
    let t = tau.tau();
    let eval = |f: &dyn Fn(i64) -> (C64, C64)| -> (C64, C64) {
        let mut raw = [(C64::default(), C64::default()); 3];
        for (slot, &r) in raw.iter_mut().zip(radii.iter()) {
            *slot = f(r as i64);
        }
        let h: Vec<f64> = radii.iter().map(|&r| 1.0 / (r as f64 + 0.5)).collect();
        (
            extrapolate3(&h, [raw[0].0, raw[1].0, raw[2].0]),
            extrapolate3(&h, [raw[0].1, raw[1].1, raw[2].1]),
        )
    };
    let sums = |w: C64| {
        move |r: i64| {
            let mut wp = (w * w).inv();
            let mut zeta = w.inv();
            for m in -r..=r {
                for n in -r..=r {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    let om = t * n as f64 + m as f64;
                    let d = w - om;
                    let oi = om.inv();
                    wp += (d * d).inv() - oi * oi;
                    zeta += d.inv() + oi + w * oi * oi;
                }
            }
            (wp, zeta)
        }
    };
    let (wp, zeta) = eval(&sums(z));
    let (_, zeta_half) = eval(&sums(C64::new(0.5, 0.0)));
    Ok(OracleSums {
        wp,
        zeta,
        eta1: zeta_half * 2.0,
    })
}

/// Value at `h = 0` of the quadratic in `h^2` through three samples.
fn extrapolate3(h: &[f64], v: [C64; 3]) -> C64 {
    let x: Vec<f64> = h.iter().map(|h| h * h).collect();
    let mut acc = C64::default();
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= x[j] / (x[j] - x[i]);
            }
        }
        acc += v[i] * w;
    }
    acc
}
