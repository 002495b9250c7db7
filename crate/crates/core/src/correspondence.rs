//! Correspondence between generalized Lamé equations on the torus and
//! second-order Fuchsian equations on the projective line with singular
//! points `0, 1, t, infinity` and an apparent singularity `lambda`.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::flow::{cp1_hamiltonian, integrate_cp1, Exponents, FlowOptions, Trajectory};
use crate::hitchin::{canonical_point, invert_wp};
use crate::lame::{potential, weight_products, LameParams, Weights};
use crate::numerics::{directional_derivatives, laurent_ring_fit};
use crate::C64;
use serde::{Deserialize, Serialize};

/// Agreement required between the two closed forms of `K`.
pub const K_CONSISTENCY_TOL: f64 = 1e-9;
/// Tolerance on `t` versus `t(tau)` in the inverse map.
pub const T_MATCH_TOL: f64 = 1e-8;
/// Minimum distance of `lambda` from `0, 1, t`.
pub const LAMBDA_CLEARANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuchsianParams {
    pub t: C64,
    pub lambda: C64,
    pub mu: C64,
    #[serde(rename = "K")]
    pub hamiltonian: C64,
    pub theta0: C64,
    pub theta1: C64,
    pub theta_t: C64,
    pub theta_inf: C64,
    pub kappa_hat: C64,
    pub alpha_hat: C64,
}

impl FuchsianParams {
    /// Parameters with `alpha_hat`, `kappa_hat` and `K` derived from the rest.
    pub fn new(t: C64, lambda: C64, mu: C64, ex: Exponents) -> Result<Self> {
        check_lambda(t, lambda)?;
        Ok(FuchsianParams {
            t,
            lambda,
            mu,
            hamiltonian: cp1_hamiltonian(&ex, lambda, mu, t),
            theta0: ex.theta0,
            theta1: ex.theta1,
            theta_t: ex.theta_t,
            theta_inf: ex.theta_inf,
            kappa_hat: ex.kappa_hat(),
            alpha_hat: ex.alpha_hat(),
        })
    }

    pub fn exponents(&self) -> Exponents {
        Exponents {
            theta0: self.theta0,
            theta1: self.theta1,
            theta_t: self.theta_t,
            theta_inf: self.theta_inf,
        }
    }

    /// Check the derived fields against their defining relations.
    pub fn check(&self) -> Result<()> {
        check_lambda(self.t, self.lambda)?;
        let ex = self.exponents();
        let scale = |v: C64| v.norm().max(1.0);
        if (ex.alpha_hat() - self.alpha_hat).norm() > 1e-12 * scale(self.alpha_hat)
            || (ex.kappa_hat() - self.kappa_hat).norm() > 1e-12 * scale(self.kappa_hat)
        {
            return Err(Error::InvalidParams(
                "alpha_hat or kappa_hat disagrees with the exponents".into(),
            ));
        }
        let k = cp1_hamiltonian(&ex, self.lambda, self.mu, self.t);
        let diff = (k - self.hamiltonian).norm();
        if diff > K_CONSISTENCY_TOL * scale(k) {
            return Err(Error::Inconsistency {
                what: "K versus the apparent-singularity form".into(),
                diff,
            });
        }
        Ok(())
    }
}

fn check_lambda(t: C64, lambda: C64) -> Result<()> {
    for v in [C64::default(), C64::new(1.0, 0.0), t] {
        let d = (lambda - v).norm();
        if d <= LAMBDA_CLEARANCE {
            return Err(Error::InvalidParams(format!(
                "lambda = {lambda} lies within {d:e} of the singular point {v}"
            )));
        }
    }
    Ok(())
}

/// `4 x (x - 1) (x - t)` and its derivative.
fn cubic(x: C64, t: C64) -> (C64, C64) {
    (
        4.0 * x * (x - 1.0) * (x - t),
        4.0 * (3.0 * x * x - 2.0 * (1.0 + t) * x + t),
    )
}

/// Exponents at `0, 1, t, infinity` for the weights `n_0 .. n_3`.
pub fn exponents_from_weights(n: &Weights) -> Exponents {
    Exponents {
        theta0: n[1] + 0.5,
        theta1: n[2] + 0.5,
        theta_t: n[3] + 0.5,
        theta_inf: n[0] + 0.5,
    }
}

pub fn weights_from_exponents(ex: &Exponents) -> Weights {
    [
        ex.theta_inf - 0.5,
        ex.theta0 - 0.5,
        ex.theta1 - 0.5,
        ex.theta_t - 0.5,
    ]
}

/// Quantities shared by both directions of the map.
struct Frame {
    t: C64,
    b: C64,
    e: [C64; 3],
}

impl Frame {
    fn new(lat: &Lattice) -> Frame {
        let d = lat.data();
        Frame {
            t: lat.curve_map().t,
            b: d.e2 - d.e1,
            e: [d.e1, d.e2, d.e3],
        }
    }

    /// Part of `mu` that does not involve `A`.
    fn mu_base(&self, n: &Weights, lambda: C64) -> C64 {
        let (pc, dpc) = cubic(lambda, self.t);
        (2.0 * n[3] - 1.0) / (4.0 * (lambda - self.t))
            + (2.0 * n[2] - 1.0) / (4.0 * (lambda - 1.0))
            + (2.0 * n[1] - 1.0) / (4.0 * lambda)
            + 0.375 * dpc / pc
    }

    /// Coefficient of `A` in `mu`.
    fn mu_slope(&self, lambda: C64, wp_prime: C64) -> C64 {
        wp_prime / (self.b * self.b * cubic(lambda, self.t).0)
    }
}

/// `K` as minus the residue at `x = t` of the transformed potential
/// coefficient, in closed form.
fn k_closed_form(
    frame: &Frame,
    params: &LameParams,
    lambda: C64,
    wp: C64,
    wpp: C64,
    zeta: C64,
) -> C64 {
    let Frame { t, b, e } = *frame;
    let n = params.weights;
    let w = weight_products(&n);
    let a = params.residue;
    let bracket = 1.5 * lambda * (lambda - 1.0) / (lambda - t) - 1.5 * (wp + e[2]) / b
        + a * wpp / ((lambda - t) * b * b)
        + w[0] * e[2] / b
        + w[1] * e[1] / b
        + w[2] * e[0] / b
        - 2.0 * w[3] * e[2] / b
        + 2.0 * a * zeta / b
        + params.accessory / b;
    -(2.0 * n[2] * n[3] - n[2] - n[3]) / (4.0 * (t - 1.0))
        - (2.0 * n[1] * n[3] - n[1] - n[3]) / (4.0 * t)
        - (2.0 * n[3] - 1.0) / (4.0 * (t - lambda))
        + bracket / (4.0 * t * (t - 1.0))
}

/// Map apparent Lamé data to the corresponding Fuchsian equation.
pub fn lame_to_fuchsian(params: &LameParams, lat: &Lattice) -> Result<FuchsianParams> {
    if !params.satisfies_apparent_condition(lat)? {
        return Err(Error::InvalidParams(
            "the map needs an apparent singularity at p".into(),
        ));
    }
    let frame = Frame::new(lat);
    let p = params.point;
    let (wp, wpp, _) = lat.wp_triple(p)?;
    let lambda = (wp - frame.e[0]) / frame.b;
    let mu = frame.mu_base(&params.weights, lambda) + params.residue * frame.mu_slope(lambda, wpp);
    let ex = exponents_from_weights(&params.weights);
    let mut fp = FuchsianParams::new(frame.t, lambda, mu, ex)?;
    let k = k_closed_form(&frame, params, lambda, wp, wpp, lat.zeta(p)?);
    let diff = (k - fp.hamiltonian).norm();
    if diff > K_CONSISTENCY_TOL * k.norm().max(1.0) {
        return Err(Error::Inconsistency {
            what: "K from the Lame data versus the apparent-singularity form".into(),
            diff,
        });
    }
    fp.hamiltonian = k;
    Ok(fp)
}

/// Both closed forms of `K` for the image of `params`.
pub fn k_pair(params: &LameParams, lat: &Lattice) -> Result<(C64, C64)> {
    let frame = Frame::new(lat);
    let p = params.point;
    let (wp, wpp, _) = lat.wp_triple(p)?;
    let lambda = (wp - frame.e[0]) / frame.b;
    let mu = frame.mu_base(&params.weights, lambda) + params.residue * frame.mu_slope(lambda, wpp);
    let ex = exponents_from_weights(&params.weights);
    Ok((
        k_closed_form(&frame, params, lambda, wp, wpp, lat.zeta(p)?),
        cp1_hamiltonian(&ex, lambda, mu, frame.t),
    ))
}

/// Map a Fuchsian equation back to Lamé data on the torus of modulus `tau`.
pub fn fuchsian_to_lame(fp: &FuchsianParams, lat: &Lattice) -> Result<LameParams> {
    fp.check()?;
    let frame = Frame::new(lat);
    if (fp.t - frame.t).norm() > T_MATCH_TOL * frame.t.norm().max(1.0) {
        return Err(Error::TMismatch {
            given: fp.t,
            expected: frame.t,
        });
    }
    let n = weights_from_exponents(&fp.exponents());
    let target = frame.e[0] + fp.lambda * frame.b;
    let p = canonical_point(lat, invert_wp(lat, target, None)?);
    let wpp = lat.wp_prime(p)?;
    let slope = frame.mu_slope(fp.lambda, wpp);
    if slope.norm() == 0.0 {
        return Err(Error::IllConditioned("wp'(p) vanishes".into()));
    }
    let residue = (fp.mu - frame.mu_base(&n, fp.lambda)) / slope;
    LameParams::apparent(lat, n, p, residue)
}

/// Coefficients `p1`, `p2` of `y'' + p1 y' + p2 y = 0` built from `(lambda, mu, K)`.
#[derive(Clone, Copy, Debug)]
pub struct FuchsianCoefficients {
    pub fp: FuchsianParams,
}

fn guard_pole(x: C64, poles: &[C64]) -> Result<()> {
    for &q in poles {
        let d = (x - q).norm();
        if d < 1e-12 {
            return Err(Error::Pole { z: x, distance: d });
        }
    }
    Ok(())
}

impl FuchsianCoefficients {
    fn poles(&self) -> [C64; 4] {
        [
            C64::default(),
            C64::new(1.0, 0.0),
            self.fp.t,
            self.fp.lambda,
        ]
    }

    pub fn p1(&self, x: C64) -> Result<C64> {
        guard_pole(x, &self.poles())?;
        let f = &self.fp;
        Ok(
            (1.0 - f.theta_t) / (x - f.t) + (1.0 - f.theta0) / x + (1.0 - f.theta1) / (x - 1.0)
                - 1.0 / (x - f.lambda),
        )
    }

    pub fn p2(&self, x: C64) -> Result<C64> {
        guard_pole(x, &self.poles())?;
        let f = &self.fp;
        let base = x * (x - 1.0);
        Ok(
            f.kappa_hat / base - f.t * (f.t - 1.0) * f.hamiltonian / (base * (x - f.t))
                + f.lambda * (f.lambda - 1.0) * f.mu / (base * (x - f.lambda)),
        )
    }
}

pub fn fuchsian_coefficients(fp: &FuchsianParams) -> FuchsianCoefficients {
    FuchsianCoefficients { fp: *fp }
}

/// Coefficients of the gauge-transformed equation, expressed through the
/// Lamé data.
#[derive(Clone, Copy, Debug)]
pub struct HattedCoefficients {
    params: LameParams,
    t: C64,
    b: C64,
    e: [C64; 3],
    lambda: C64,
    wp_p: C64,
    wpp_p: C64,
    zeta_p: C64,
}

impl HattedCoefficients {
    pub fn new(params: &LameParams, lat: &Lattice) -> Result<Self> {
        let frame = Frame::new(lat);
        let (wp_p, wpp_p, _) = lat.wp_triple(params.point)?;
        Ok(HattedCoefficients {
            params: *params,
            t: frame.t,
            b: frame.b,
            e: frame.e,
            lambda: (wp_p - frame.e[0]) / frame.b,
            wp_p,
            wpp_p,
            zeta_p: lat.zeta(params.point)?,
        })
    }

    fn poles(&self) -> [C64; 4] {
        [C64::default(), C64::new(1.0, 0.0), self.t, self.lambda]
    }

    pub fn p1(&self, x: C64) -> Result<C64> {
        guard_pole(x, &self.poles())?;
        let n = self.params.weights;
        Ok(
            (0.5 - n[1]) / x + (0.5 - n[2]) / (x - 1.0) + (0.5 - n[3]) / (x - self.t)
                - 1.0 / (x - self.lambda),
        )
    }

    pub fn p2(&self, x: C64) -> Result<C64> {
        guard_pole(x, &self.poles())?;
        let n = self.params.weights;
        let w = weight_products(&n);
        let (t, b, l) = (self.t, self.b, self.lambda);
        let e = self.e;
        let a = self.params.residue;
        let (px, _) = cubic(x, t);
        let (pl, _) = cubic(l, t);
        let bracket = w[0] * (x + e[0] / b)
            - w[1] * (x + 2.0 * e[0] / b)
            - w[2] * (x - e[2] / b)
            - w[3] * (x - e[1] / b)
            + 0.75
                * ((px + pl) / (2.0 * (x - l) * (x - l)) - 2.0 * x - 2.0 * (self.wp_p + e[0]) / b)
            + a * (2.0 * self.zeta_p / b - self.wpp_p / (b * b * (x - l)))
            + self.params.accessory / b;
        Ok(0.75 / ((x - l) * (x - l))
            + (2.0 * n[1] * n[2] - n[1] - n[2]) / (4.0 * x * (x - 1.0))
            + (2.0 * n[2] * n[3] - n[2] - n[3]) / (4.0 * (x - 1.0) * (x - t))
            + (2.0 * n[1] * n[3] - n[1] - n[3]) / (4.0 * x * (x - t))
            + (2.0 * n[1] - 1.0) / (4.0 * x * (x - l))
            + (2.0 * n[2] - 1.0) / (4.0 * (x - 1.0) * (x - l))
            + (2.0 * n[3] - 1.0) / (4.0 * (x - t) * (x - l))
            - bracket / px)
    }

    /// Logarithmic derivative `psi'/psi` of the gauge factor and its derivative.
    fn gauge_log_jet(&self, x: C64) -> (C64, C64) {
        let n = self.params.weights;
        let terms = [
            (C64::new(-0.5, 0.0), self.lambda),
            (-0.5 * n[1], C64::default()),
            (-0.5 * n[2], C64::new(1.0, 0.0)),
            (-0.5 * n[3], self.t),
        ];
        let mut d1 = C64::default();
        let mut d2 = C64::default();
        for (c, q) in terms {
            d1 += c / (x - q);
            d2 -= c / ((x - q) * (x - q));
        }
        (d1, d2)
    }

    /// `p2` recomputed from `I(z)` at a point `z` over `x` by the gauge
    /// transformation.
    pub fn p2_from_potential(&self, lat: &Lattice, z: C64) -> Result<C64> {
        let x = (lat.wp(z)? - self.e[0]) / self.b;
        let (px, dpx) = cubic(x, self.t);
        let r = -potential(lat, &self.params, z)? / (self.b * px);
        let half = dpx / (2.0 * px);
        let (l1, l2) = self.gauge_log_jet(x);
        Ok(r + half * l1 + l2 + l1 * l1)
    }

    /// `log psi(x)` on principal branches.
    pub fn log_gauge(&self, x: C64) -> C64 {
        let n = self.params.weights;
        -0.5 * (x - self.lambda).ln()
            - 0.5 * n[1] * x.ln()
            - 0.5 * n[2] * (x - 1.0).ln()
            - 0.5 * n[3] * (x - self.t).ln()
    }

    /// `log psi(x2) - log psi(x1)` along the straight segment, for `x2` near `x1`.
    fn log_gauge_increment(&self, x1: C64, x2: C64) -> C64 {
        let n = self.params.weights;
        let inc = |q: C64| ((x2 - q) / (x1 - q)).ln();
        -0.5 * inc(self.lambda)
            - 0.5 * n[1] * inc(C64::default())
            - 0.5 * n[2] * inc(C64::new(1.0, 0.0))
            - 0.5 * n[3] * inc(self.t)
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn t(&self) -> C64 {
        self.t
    }
}

/// Residue at `center` of a coefficient function, from a ring fit.
pub fn residue_at<F>(f: F, center: C64, radius: f64) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let c = laurent_ring_fit(f, center, radius, 40, -2, 12)?;
    Ok(c[1])
}

/// One transported sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSample {
    pub z: C64,
    pub x: C64,
    pub value: C64,
    /// Residual of the transformed equation relative to `|value|`.
    pub residual: f64,
    /// Set when a principal-branch cut of the gauge factor passes near `x`.
    pub near_cut: bool,
}

/// Solve `x(z) = target` by Newton's method from `z0`.
fn solve_x(lat: &Lattice, e1: C64, b: C64, target: C64, z0: C64) -> Result<C64> {
    let mut z = z0;
    for _ in 0..40 {
        let (wp, wpp, _) = lat.wp_triple(z)?;
        let r = (wp - e1) / b - target;
        if r.norm() < 1e-15 * target.norm().max(1.0) {
            return Ok(z);
        }
        z -= r * b / wpp;
    }
    let r = (lat.wp(z)? - e1) / b - target;
    if r.norm() < 1e-12 * target.norm().max(1.0) {
        Ok(z)
    } else {
        Err(Error::NewtonDivergence(format!(
            "x(z) = {target} from z = {z0}"
        )))
    }
}

/// Transport solution values `y(z)` to `y_hat(x) = y(z) / psi(x)` and check
/// the transformed equation by finite differences in `x` with step `h`.
pub fn gauge_transport<F>(
    params: &LameParams,
    lat: &Lattice,
    mut solution: F,
    zs: &[C64],
    h: f64,
) -> Result<Vec<GaugeSample>>
where
    F: FnMut(C64) -> Result<C64>,
{
    let hat = HattedCoefficients::new(params, lat)?;
    let e1 = lat.data().e1;
    let b = hat.b;
    let mut out = Vec::with_capacity(zs.len());
    for &z in zs {
        let x = (lat.wp(z)? - e1) / b;
        for q in hat.poles() {
            let d = (x - q).norm();
            if d < 50.0 * h {
                return Err(Error::Pole { z: x, distance: d });
            }
        }
        let near_cut = hat.poles().iter().any(|&q| {
            let u = x - q;
            u.re < 0.0 && u.im.abs() < 10.0 * h
        });
        let log_psi = hat.log_gauge(x);
        let y0 = solution(z)?;
        let mut prev = y0;
        let mut z_prev = z;
        let mut values = Vec::with_capacity(9);
        // March outward from the centre so the sign of each value follows its neighbour.
        let mut side = |dir: f64, values: &mut Vec<(i32, C64)>| -> Result<()> {
            prev = y0;
            z_prev = z;
            for j in 1..=4 {
                let xj = x + dir * h * j as f64;
                let zj = solve_x(lat, e1, b, xj, z_prev)?;
                let mut yj = solution(zj)?;
                if (yj + prev).norm() < (yj - prev).norm() {
                    yj = -yj;
                }
                let psi = (log_psi + hat.log_gauge_increment(x, xj)).exp();
                values.push(((dir as i32) * j, yj / psi));
                prev = yj;
                z_prev = zj;
            }
            Ok(())
        };
        side(1.0, &mut values)?;
        side(-1.0, &mut values)?;
        values.push((0, y0 / log_psi.exp()));
        values.sort_by_key(|v| v.0);
        let ordered: Vec<C64> = values.iter().map(|v| v.1).collect();
        let mut iter = ordered.iter().copied();
        let (d1, d2) = directional_derivatives(
            |_| Ok(iter.next().expect("nine stencil values")),
            x,
            C64::new(1.0, 0.0),
            h,
        )?;
        let value = ordered[4];
        let r = d2 + hat.p1(x)? * d1 + hat.p2(x)? * value;
        out.push(GaugeSample {
            z,
            x,
            value,
            residual: r.norm() / value.norm(),
            near_cut,
        });
    }
    Ok(out)
}

/// A table of local exponents at five singular points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannScheme {
    pub points: [String; 5],
    pub exponents: [[C64; 2]; 5],
}

impl RiemannScheme {
    pub fn exponent_sum(&self) -> C64 {
        self.exponents.iter().flatten().sum()
    }
}

fn labels(order: [&str; 5]) -> [String; 5] {
    order.map(String::from)
}

/// Scheme of the Fuchsian equation in the columns `t, 0, 1, infinity, lambda`.
pub fn fuchsian_scheme(fp: &FuchsianParams) -> RiemannScheme {
    let z = C64::default();
    RiemannScheme {
        points: labels(["t", "0", "1", "inf", "lambda"]),
        exponents: [
            [z, fp.theta_t],
            [z, fp.theta0],
            [z, fp.theta1],
            [fp.alpha_hat, fp.alpha_hat + fp.theta_inf],
            [z, C64::new(2.0, 0.0)],
        ],
    }
}

/// Scheme of the Lamé equation written in `x`, columns `0, 1, t, infinity, lambda`.
pub fn lame_x_scheme(n: &Weights) -> RiemannScheme {
    let col = |nk: C64| [-0.5 * nk, 0.5 * (nk + 1.0)];
    RiemannScheme {
        points: labels(["0", "1", "t", "inf", "lambda"]),
        exponents: [
            col(n[1]),
            col(n[2]),
            col(n[3]),
            col(n[0]),
            [C64::new(-0.5, 0.0), C64::new(1.5, 0.0)],
        ],
    }
}

/// Scheme after the gauge transformation, columns `0, 1, t, infinity, lambda`.
pub fn gauged_scheme(n: &Weights) -> RiemannScheme {
    let z = C64::default();
    let alpha = -0.5 * (1.0 + n.iter().sum::<C64>());
    RiemannScheme {
        points: labels(["0", "1", "t", "inf", "lambda"]),
        exponents: [
            [z, n[1] + 0.5],
            [z, n[2] + 0.5],
            [z, n[3] + 0.5],
            [alpha, alpha + n[0] + 0.5],
            [z, C64::new(2.0, 0.0)],
        ],
    }
}

/// Largest difference between the image of a torus trajectory and the
/// Painlevé Hamiltonian flow started from the image of its first sample.
pub fn cross_flow_difference(traj: &Trajectory, opts: &FlowOptions) -> Result<f64> {
    let images = traj
        .samples
        .iter()
        .map(|s| {
            let lat = Lattice::from_tau(s.tau)?;
            let params = LameParams::apparent(&lat, traj.weights, s.point, s.residue)?;
            lame_to_fuchsian(&params, &lat)
        })
        .collect::<Result<Vec<_>>>()?;
    let first = images[0];
    let per_segment = traj.segments.first().map(|(lo, hi)| hi - lo).unwrap_or(1);
    let sol = integrate_cp1(
        first.lambda,
        first.mu,
        &first.exponents(),
        &traj.path,
        &FlowOptions {
            samples_per_segment: per_segment,
            ..*opts
        },
    )?;
    let mut worst: f64 = 0.0;
    for (img, s) in images.iter().zip(&sol.samples) {
        if (s.tau - img.t).norm() >= 0.0 {
            worst = worst
                .max((s.y[0] - img.lambda).norm())
                .max((s.y[1] - img.mu).norm());
        }
    }
    Ok(worst)
}
