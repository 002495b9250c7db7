//! The generalized Lamé equation `y'' = I(z) y` with
//!
//! `I(z) = sum_k n_k (n_k + 1) wp(z + omega_k/2) + 3/4 (wp(z+p) + wp(z-p))
//!         + A (zeta(z+p) - zeta(z-p)) + B`,
//!
//! its apparent-singularity constraint, Hamiltonian, local expansions and the
//! isomonodromy obstruction built from the deformation datum `Omega`.

use crate::elliptic::{Lattice, Modulus};
use crate::error::{Error, Result};
use crate::numerics::laurent_ring_fit;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Minimum distance of `p` from the half periods.
pub const HALF_PERIOD_CLEARANCE: f64 = 1e-8;
/// Tolerance on the distance of a weight `n_k` from `1/2 + Z`.
pub const RESONANCE_TOL: f64 = 1e-10;
/// Tolerance used to classify a configuration as apparent.
pub const APPARENT_TOL: f64 = 1e-8;
/// Agreement required between the two evaluations of the obstruction.
pub const OBSTRUCTION_CROSSCHECK_TOL: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

/// Index weights `n_0 .. n_3` attached to the half periods.
pub type Weights = [C64; 4];

/// `n (n + 1)` for every weight.
pub fn weight_products(n: &Weights) -> [C64; 4] {
    n.map(|nk| nk * (nk + 1.0))
}

/// One generalized Lamé equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    pub weights: Weights,
    pub point: C64,
    pub residue: C64,
    pub accessory: C64,
    pub tau: Modulus,
    /// Set when `accessory` was produced by [`apparent_accessory`].
    pub apparent: bool,
}

impl LameParams {
    /// Parameters with the accessory value fixed by the apparent-singularity condition.
    pub fn apparent(lat: &Lattice, weights: Weights, point: C64, residue: C64) -> Result<Self> {
        validate(lat, &weights, point)?;
        Ok(LameParams {
            weights,
            point,
            residue,
            accessory: apparent_accessory(lat, &weights, point, residue)?,
            tau: lat.modulus(),
            apparent: true,
        })
    }

    /// Parameters with an arbitrary accessory value, flagged non-apparent.
    pub fn with_accessory(
        lat: &Lattice,
        weights: Weights,
        point: C64,
        residue: C64,
        accessory: C64,
    ) -> Result<Self> {
        validate(lat, &weights, point)?;
        Ok(LameParams {
            weights,
            point,
            residue,
            accessory,
            tau: lat.modulus(),
            apparent: false,
        })
    }

    /// Whether the accessory value satisfies the apparent-singularity condition.
    pub fn satisfies_apparent_condition(&self, lat: &Lattice) -> Result<bool> {
        let b = apparent_accessory(lat, &self.weights, self.point, self.residue)?;
        Ok((b - self.accessory).norm() <= APPARENT_TOL * b.norm().max(1.0))
    }

    /// Equivalent parameters with `p` in the reduced cell and `Im p >= 0`
    /// (ties broken by `Re p >= 0`). The potential is unchanged.
    pub fn canonical(&self, lat: &Lattice) -> LameParams {
        let lp = lat.reduce(self.point);
        let mut out = *self;
        out.point = lp.z;
        out.accessory = self.accessory + 2.0 * lat.eta_of(lp.cell) * self.residue;
        if needs_flip(out.point) {
            out.point = -out.point;
            out.residue = -out.residue;
        }
        out
    }
}

/// True when the sign representative `-p` is preferred over `p`.
pub fn needs_flip(p: C64) -> bool {
    p.im < 0.0 || (p.im == 0.0 && p.re < 0.0)
}

/// Check that `p` avoids the half periods and no weight is resonant.
pub fn validate(lat: &Lattice, weights: &Weights, point: C64) -> Result<()> {
    for k in 0..4 {
        let d = lat.lattice_distance(point, lat.half_period(k));
        if d <= HALF_PERIOD_CLEARANCE {
            return Err(Error::InvalidParams(format!(
                "p = {point} lies within {d:e} of the half period omega_{k}/2"
            )));
        }
    }
    for (k, n) in weights.iter().enumerate() {
        let shifted = n - 0.5;
        let d = (shifted - shifted.re.round()).norm();
        if d <= RESONANCE_TOL {
            return Err(Error::InvalidParams(format!(
                "weight n_{k} = {n} lies in 1/2 + Z"
            )));
        }
    }
    Ok(())
}

/// The accessory value `B` making `+-p` apparent singularities.
pub fn apparent_accessory(lat: &Lattice, weights: &Weights, p: C64, a: C64) -> Result<C64> {
    let w = weight_products(weights);
    let mut b = a * a - lat.zeta(2.0 * p)? * a - 0.75 * lat.wp(2.0 * p)?;
    for k in 0..4 {
        if w[k] != C64::default() {
            b -= w[k] * lat.wp(p + lat.half_period(k))?;
        }
    }
    Ok(b)
}

/// `I(z)`.
pub fn potential(lat: &Lattice, params: &LameParams, z: C64) -> Result<C64> {
    let w = weight_products(&params.weights);
    let p = params.point;
    let mut v = 0.75 * (lat.wp(z + p)? + lat.wp(z - p)?)
        + params.residue * (lat.zeta(z + p)? - lat.zeta(z - p)?)
        + params.accessory;
    for k in 0..4 {
        if w[k] != C64::default() {
            v += w[k] * lat.wp(z + lat.half_period(k))?;
        }
    }
    Ok(v)
}

/// `I'(z)`.
pub fn potential_derivative(lat: &Lattice, params: &LameParams, z: C64) -> Result<C64> {
    let w = weight_products(&params.weights);
    let p = params.point;
    let mut v = 0.75 * (lat.wp_prime(z + p)? + lat.wp_prime(z - p)?)
        - params.residue * (lat.wp(z + p)? - lat.wp(z - p)?);
    for k in 0..4 {
        if w[k] != C64::default() {
            v += w[k] * lat.wp_prime(z + lat.half_period(k))?;
        }
    }
    Ok(v)
}

/// The Hamiltonian `K(p, A; tau)` of the isomonodromic flow.
pub fn hamiltonian(lat: &Lattice, weights: &Weights, p: C64, a: C64) -> Result<C64> {
    let w = weight_products(weights);
    let shift = -lat.zeta(2.0 * p)? + 2.0 * p * lat.eta1();
    let mut inner = a * a + shift * a - 0.75 * lat.wp(2.0 * p)?;
    for k in 0..4 {
        if w[k] != C64::default() {
            inner -= w[k] * lat.wp(p + lat.half_period(k))?;
        }
    }
    Ok(-I / (4.0 * PI) * inner)
}

/// Laurent data of `I` at `p` (`H1`, `H2`) and constant terms at the half periods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    pub linear_at_point: C64,
    pub quadratic_at_point: C64,
    pub half_period_constants: [C64; 4],
}

/// Closed forms for the local expansions
/// `I = 3/4 u^-2 - A u^-1 + A^2 + H1 u + H2 u^2 + ...` at `z = p + u` and
/// `I = n_k (n_k + 1) u^-2 + Lambda_k + O(u^2)` at `z = omega_k/2 + u`.
pub fn expansion_coeffs(lat: &Lattice, params: &LameParams) -> Result<ExpansionCoeffs> {
    let w = weight_products(&params.weights);
    let p = params.point;
    let a = params.residue;
    let (wp2, wpp2, wppp2) = lat.wp_triple(2.0 * p)?;
    let mut h1 = 0.75 * wpp2 - a * wp2;
    let mut h2 = 0.75 * wppp2 + 0.075 * lat.data().g2 - a * wpp2;
    for k in 0..4 {
        if w[k] != C64::default() {
            let (_, d1, d2) = lat.wp_triple(p + lat.half_period(k))?;
            h1 += w[k] * d1;
            h2 += w[k] * d2;
        }
    }
    let mut lambdas = [C64::default(); 4];
    for (k, slot) in lambdas.iter_mut().enumerate() {
        let hk = lat.half_period(k);
        let mut v =
            1.5 * lat.wp(hk + p)? + a * (lat.zeta(hk + p)? - lat.zeta(hk - p)?) + params.accessory;
        for j in 0..4 {
            if j != k && w[j] != C64::default() {
                v += w[j] * lat.wp(hk + lat.half_period(j))?;
            }
        }
        *slot = v;
    }
    Ok(ExpansionCoeffs {
        linear_at_point: h1,
        quadratic_at_point: 0.5 * h2,
        half_period_constants: lambdas,
    })
}

/// The odd deformation datum `(-i/4pi)(zeta(z-p) + zeta(z+p) - 2 z eta1)`.
pub fn omega12(lat: &Lattice, z: C64, p: C64) -> Result<C64> {
    Ok(-I / (4.0 * PI) * (lat.zeta(z - p)? + lat.zeta(z + p)? - 2.0 * z * lat.eta1()))
}

/// `Omega_12` and its first three `z`-derivatives.
pub fn omega12_jet(lat: &Lattice, z: C64, p: C64) -> Result<[C64; 4]> {
    let c = -I / (4.0 * PI);
    let (wm, wpm, wppm) = lat.wp_triple(z - p)?;
    let (wq, wpq, wppq) = lat.wp_triple(z + p)?;
    Ok([
        omega12(lat, z, p)?,
        c * (-wm - wq - 2.0 * lat.eta1()),
        c * (-wpm - wpq),
        c * (-wppm - wppq),
    ])
}

/// The traceless 2x2 deformation matrix completed from `Omega_12`.
pub fn omega_matrix(lat: &Lattice, z: C64, params: &LameParams) -> Result<[[C64; 2]; 2]> {
    let jet = omega12_jet(lat, z, params.point)?;
    let pot = potential(lat, params, z)?;
    let o11 = -0.5 * jet[1];
    Ok([[o11, jet[0]], [-0.5 * jet[2] + jet[0] * pot, jet[1] + o11]])
}

/// Coefficients of the even elliptic obstruction
/// `U = L (wp'(z-p) - wp'(z+p)) + M (wp(z-p) + wp(z+p)) + N (zeta(z-p) - zeta(z+p)) + C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationCoeffs {
    pub cubic: C64,
    pub double: C64,
    pub simple: C64,
    /// Constant term of the Laurent expansion of `U` at `p`.
    pub constant: C64,
}

impl DeformationCoeffs {
    pub fn max_abs(&self) -> f64 {
        [self.cubic, self.double, self.simple, self.constant]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Sum of `n_k (n_k + 1) wp'(p + omega_k/2)`.
fn weighted_wp_prime_sum(lat: &Lattice, weights: &Weights, p: C64) -> Result<C64> {
    let w = weight_products(weights);
    let mut s = C64::default();
    for k in 0..4 {
        if w[k] != C64::default() {
            s += w[k] * lat.wp_prime(p + lat.half_period(k))?;
        }
    }
    Ok(s)
}

/// `L, M, N, C` for the velocities `(p_dot, A_dot)`; all vanish exactly on the flow.
pub fn deformation_coeffs(
    lat: &Lattice,
    weights: &Weights,
    p: C64,
    a: C64,
    p_dot: C64,
    a_dot: C64,
) -> Result<DeformationCoeffs> {
    let c = I / (4.0 * PI);
    let eta1 = lat.eta1();
    let (wp2, wpp2, _) = lat.wp_triple(2.0 * p)?;
    let shifted = lat.zeta(2.0 * p)? - 2.0 * p * eta1;
    let sum = weighted_wp_prime_sum(lat, weights, p)?;
    let h1 = sum + 0.75 * wpp2 - a * wp2;
    Ok(DeformationCoeffs {
        cubic: -0.5 * (3.0 * p_dot + c * (6.0 * a - 3.0 * shifted)),
        double: -2.0 * a * p_dot + c * (-4.0 * a * a + 2.0 * a * shifted),
        simple: -2.0 * a_dot + c * (4.0 * a * (wp2 + eta1) - 3.0 * wpp2 - 2.0 * sum),
        constant: 4.0 * a * a_dot - 2.0 * h1 * p_dot
            + c * (-4.0 * a * a * (wp2 + 2.0 * eta1) + 3.0 * a * wpp2 + 2.0 * h1 * shifted),
    })
}

/// Total `tau`-derivative of the accessory value along `(p_dot, A_dot)`.
fn accessory_rate(
    lat: &Lattice,
    weights: &Weights,
    p: C64,
    a: C64,
    p_dot: C64,
    a_dot: C64,
) -> Result<C64> {
    let w = weight_products(weights);
    let (dzeta2, dwp2, _) = lat.tau_derivatives_light(2.0 * p)?;
    let (wp2, wpp2, _) = lat.wp_triple(2.0 * p)?;
    let zeta2 = lat.zeta(2.0 * p)?;
    let mut rate = 2.0 * a * a_dot
        - (dzeta2 - 2.0 * wp2 * p_dot) * a
        - zeta2 * a_dot
        - 0.75 * (dwp2 + 2.0 * wpp2 * p_dot);
    for k in 0..4 {
        if w[k] != C64::default() {
            let x = p + lat.half_period(k);
            let (_, dwp, _) = lat.tau_derivatives_light(x)?;
            let speed = p_dot + Modulus::half_period_velocity(k);
            rate -= w[k] * (dwp + lat.wp_prime(x)? * speed);
        }
    }
    Ok(rate)
}

/// Total `tau`-derivative of `I(z)` at fixed `z`.
pub fn potential_tau_derivative(
    lat: &Lattice,
    params: &LameParams,
    z: C64,
    p_dot: C64,
    a_dot: C64,
) -> Result<C64> {
    let w = weight_products(&params.weights);
    let p = params.point;
    let a = params.residue;
    let (dzq, dwq, _) = lat.tau_derivatives_light(z + p)?;
    let (dzm, dwm, _) = lat.tau_derivatives_light(z - p)?;
    let (wq, wpq, _) = lat.wp_triple(z + p)?;
    let (wm, wpm, _) = lat.wp_triple(z - p)?;
    let mut v = 0.75 * (dwq + wpq * p_dot + dwm - wpm * p_dot)
        + a_dot * (lat.zeta(z + p)? - lat.zeta(z - p)?)
        + a * (dzq - wq * p_dot - dzm - wm * p_dot)
        + accessory_rate(lat, &params.weights, p, a, p_dot, a_dot)?;
    for k in 0..4 {
        if w[k] != C64::default() {
            let x = z + lat.half_period(k);
            let (_, dwp, _) = lat.tau_derivatives_light(x)?;
            v += w[k] * (dwp + lat.wp_prime(x)? * Modulus::half_period_velocity(k));
        }
    }
    Ok(v)
}

/// The obstruction `U(z) = Omega12''' - 4 I Omega12' - 2 I' Omega12 + 2 dI/dtau`.
///
/// Evaluated directly and again from [`deformation_coeffs`]; an
/// [`Error::Inconsistency`] is returned if the two differ.
pub fn integrability_residual(
    lat: &Lattice,
    params: &LameParams,
    z: C64,
    p_dot: C64,
    a_dot: C64,
) -> Result<C64> {
    let p = params.point;
    let jet = omega12_jet(lat, z, p)?;
    let pot = potential(lat, params, z)?;
    let dpot = potential_derivative(lat, params, z)?;
    let dtau = potential_tau_derivative(lat, params, z, p_dot, a_dot)?;
    let direct = jet[3] - 4.0 * pot * jet[1] - 2.0 * dpot * jet[0] + 2.0 * dtau;

    let dc = deformation_coeffs(lat, &params.weights, p, params.residue, p_dot, a_dot)?;
    let expanded = obstruction_from_coeffs(lat, &dc, p, z)?;
    let diff = (direct - expanded).norm();
    let scale = direct.norm().max(expanded.norm()).max(1.0);
    if diff > OBSTRUCTION_CROSSCHECK_TOL * scale {
        return Err(Error::Inconsistency {
            what: "obstruction: direct evaluation vs coefficient expansion".into(),
            diff,
        });
    }
    Ok(direct)
}

/// `U(z)` assembled from its pole coefficients and the Laurent constant at `p`.
pub fn obstruction_from_coeffs(
    lat: &Lattice,
    dc: &DeformationCoeffs,
    p: C64,
    z: C64,
) -> Result<C64> {
    let (w2, wp2, _) = lat.wp_triple(2.0 * p)?;
    let z2 = lat.zeta(2.0 * p)?;
    // The additive constant differs from the Laurent constant at p by the
    // regular parts of the three pole terms there.
    let additive = dc.constant + dc.cubic * wp2 - dc.double * w2 + dc.simple * z2;
    let (wm, wpm, _) = lat.wp_triple(z - p)?;
    let (wq, wpq, _) = lat.wp_triple(z + p)?;
    Ok(dc.cubic * (wpm - wpq)
        + dc.double * (wm + wq)
        + dc.simple * (lat.zeta(z - p)? - lat.zeta(z + p)?)
        + additive)
}

/// Result of the Frobenius recursion at `z = p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusData {
    /// Roots of the indicial equation, smaller real part first.
    pub exponents: [C64; 2],
    /// Coefficient whose vanishing rules out a logarithmic solution.
    pub obstruction: C64,
}

/// Run the Frobenius recursion for the smaller exponent at `p`, with the
/// Laurent coefficients of `I` fitted on a ring around `p`.
pub fn frobenius_log_coefficient(lat: &Lattice, params: &LameParams) -> Result<FrobeniusData> {
    let p = params.point;
    let mut nearest = f64::INFINITY;
    for k in 0..4 {
        nearest = nearest.min(lat.lattice_distance(p, lat.half_period(k)));
        nearest = nearest.min(lat.lattice_distance(p, -p + lat.half_period(k)));
    }
    let radius = (0.25 * nearest).min(1e-2);
    let kmax = 12;
    let laurent = laurent_ring_fit(|z| potential(lat, params, z), p, radius, 48, -2, kmax)?;
    let coeff = |k: i32| laurent[(k + 2) as usize];

    let root = (0.25 + coeff(-2)).sqrt();
    let mut exponents = [0.5 - root, 0.5 + root];
    if exponents[0].re > exponents[1].re {
        exponents.swap(0, 1);
    }
    let rho = exponents[0];
    let gap = (exponents[1] - exponents[0]).re.round() as i32;
    if gap < 1 || gap > kmax {
        return Err(Error::Inconsistency {
            what: "indicial roots do not differ by a small positive integer".into(),
            diff: (exponents[1] - exponents[0]).norm(),
        });
    }
    let mut a = vec![C64::new(1.0, 0.0)];
    for j in 1..=gap {
        let rhs: C64 = (0..j).map(|i| coeff(j - 2 - i) * a[i as usize]).sum();
        if j == gap {
            return Ok(FrobeniusData {
                exponents,
                obstruction: rhs,
            });
        }
        let jr = rho + j as f64;
        a.push(rhs / (jr * (jr - 1.0) - coeff(-2)));
    }
    unreachable!("loop returns at j == gap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_rhs;
    use crate::numerics::{laurent_ring_fit, richardson4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sample(lat: &Lattice) -> LameParams {
        let n = [c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.7, 0.1)];
        LameParams::apparent(lat, n, c(0.21, 0.33), c(0.4, -0.25)).unwrap()
    }

    #[test]
    fn zero_weights_reduce_to_hitchin_form() {
        let lat = Lattice::from_tau(c(0.1, 1.1)).unwrap();
        let p = c(0.2, 0.3);
        let a = c(0.5, 0.1);
        let b = apparent_accessory(&lat, &[C64::default(); 4], p, a).unwrap();
        let expect = a * a - lat.zeta(2.0 * p).unwrap() * a - 0.75 * lat.wp(2.0 * p).unwrap();
        assert!((b - expect).norm() < 1e-14);
    }

    #[test]
    fn accessory_and_hamiltonian_parity() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let n = [c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.7, 0.1)];
        let (p, a) = (c(0.21, 0.33), c(0.4, -0.25));
        let b1 = apparent_accessory(&lat, &n, p, a).unwrap();
        let b2 = apparent_accessory(&lat, &n, -p, -a).unwrap();
        assert!((b1 - b2).norm() < 1e-12);
        let k1 = hamiltonian(&lat, &n, p, a).unwrap();
        let k2 = hamiltonian(&lat, &n, -p, -a).unwrap();
        assert!((k1 - k2).norm() < 1e-12);
        let alt = -I / (4.0 * PI) * (b1 + 2.0 * p * lat.eta1() * a);
        assert!((k1 - alt).norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_gradient_is_the_flow() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let n = params.weights;
        let (p, a) = (params.point, params.residue);
        let h = 1e-5;
        let dk_da = (hamiltonian(&lat, &n, p, a + h).unwrap()
            - hamiltonian(&lat, &n, p, a - h).unwrap())
            / (2.0 * h);
        let dk_dp = (hamiltonian(&lat, &n, p + h, a).unwrap()
            - hamiltonian(&lat, &n, p - h, a).unwrap())
            / (2.0 * h);
        let (pd, ad) = flow_rhs(&lat, &n, p, a).unwrap();
        assert!((dk_da - pd).norm() < 1e-6 * pd.norm());
        assert!((-dk_dp - ad).norm() < 1e-6 * ad.norm());
    }

    #[test]
    fn potential_symmetries_and_laurent_data() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let z = c(0.37, -0.11);
        let v = potential(&lat, &params, z).unwrap();
        for w in [z + 1.0, z + lat.tau(), -z] {
            assert!((potential(&lat, &params, w).unwrap() - v).norm() < 1e-10 * v.norm());
        }
        let fit = laurent_ring_fit(
            |u| potential(&lat, &params, u),
            params.point,
            1e-2,
            32,
            -2,
            10,
        )
        .unwrap();
        assert!((fit[0] - 0.75).norm() < 1e-10);
        assert!((fit[1] + params.residue).norm() < 1e-10);
        assert!((fit[2] - params.residue * params.residue).norm() < 1e-9);
    }

    #[test]
    fn expansion_coefficients_match_fits() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let ex = expansion_coeffs(&lat, &params).unwrap();
        let fit = laurent_ring_fit(
            |u| potential(&lat, &params, u),
            params.point,
            1e-2,
            8,
            -2,
            5,
        )
        .unwrap();
        let h1 = ex.linear_at_point;
        assert!((fit[3] - h1).norm() < 1e-6 * h1.norm());
        assert!((fit[4] - ex.quadratic_at_point).norm() < 1e-4 * ex.quadratic_at_point.norm());
        for k in 0..4 {
            let hk = lat.half_period(k);
            let wk = weight_products(&params.weights)[k];
            let f = |u: f64| {
                let uu = C64::new(u, 0.0);
                potential(&lat, &params, hk + uu).unwrap() - wk / (uu * uu)
            };
            let h = 4e-3;
            let r1 = (f(h / 2.0) * 4.0 - f(h)) / 3.0;
            let r2 = (f(h / 4.0) * 4.0 - f(h / 2.0)) / 3.0;
            let limit = richardson4(r2, r1);
            let lam = ex.half_period_constants[k];
            assert!(
                (limit - lam).norm() < 1e-7 * lam.norm().max(1.0),
                "k = {k}: {limit} vs {lam}"
            );
        }
    }

    #[test]
    fn omega12_periodicity_and_residue() {
        let lat = Lattice::from_tau(c(0.3, 1.2)).unwrap();
        let p = c(0.15, 0.4);
        let z = c(-0.22, 0.31);
        let o = omega12(&lat, z, p).unwrap();
        assert!((omega12(&lat, z + 1.0, p).unwrap() - o).norm() < 1e-12);
        assert!((omega12(&lat, z + lat.tau(), p).unwrap() - (o - 1.0)).norm() < 1e-12);
        assert!((omega12(&lat, -z, p).unwrap() + o).norm() < 1e-12);
        for q in [p, -p] {
            let fit = laurent_ring_fit(|u| omega12(&lat, u, p), q, 1e-2, 16, -1, 6).unwrap();
            assert!((fit[0] + I / (4.0 * PI)).norm() < 1e-12);
        }
        let params = LameParams::apparent(&lat, [C64::default(); 4], p, c(0.3, 0.2)).unwrap();
        let m = omega_matrix(&lat, z, &params).unwrap();
        assert!((m[0][0] + m[1][1]).norm() < 1e-14);
    }

    #[test]
    fn deformation_coefficients_vanish_on_the_flow() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let (p, a, n) = (params.point, params.residue, params.weights);
        let (pd, ad) = flow_rhs(&lat, &n, p, a).unwrap();
        let dc = deformation_coeffs(&lat, &n, p, a, pd, ad).unwrap();
        assert!(dc.max_abs() < 1e-12);
        let off = deformation_coeffs(&lat, &n, p, a, pd, ad + 1.0).unwrap();
        assert!((off.simple.norm() - 2.0).abs() < 1e-12);
        assert!(off.cubic.norm() < 1e-14);
    }

    #[test]
    fn obstruction_two_ways_agree_off_the_flow() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let (pd, ad) = (c(0.3, -0.2), c(-0.1, 0.5));
        let mut worst: f64 = 0.0;
        for z in [c(0.11, 0.27), c(-0.31, 0.05), c(0.4, -0.35)] {
            let u = integrability_residual(&lat, &params, z, pd, ad).unwrap();
            let u1 = integrability_residual(&lat, &params, z + 1.0, pd, ad).unwrap();
            let um = integrability_residual(&lat, &params, -z, pd, ad).unwrap();
            assert!((u - u1).norm() < 1e-8 * u.norm().max(1.0));
            assert!((u - um).norm() < 1e-8 * u.norm().max(1.0));
            worst = worst.max(u.norm());
        }
        assert!(worst > 1e-2);
        let (fp, fa) = flow_rhs(&lat, &params.weights, params.point, params.residue).unwrap();
        for z in [c(0.11, 0.27), c(-0.31, 0.05), c(0.4, -0.35)] {
            let u = integrability_residual(&lat, &params, z, fp, fa).unwrap();
            assert!(u.norm() < 1e-8);
        }
    }

    #[test]
    fn frobenius_obstruction_detects_apparentness() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let params = sample(&lat);
        let fr = frobenius_log_coefficient(&lat, &params).unwrap();
        assert!((fr.exponents[0] + 0.5).norm() < 1e-9);
        assert!((fr.exponents[1] - 1.5).norm() < 1e-9);
        assert!(fr.obstruction.norm() < 1e-10);
        let mut shifted = params;
        shifted.accessory += 1.0;
        let fr = frobenius_log_coefficient(&lat, &shifted).unwrap();
        assert!((fr.obstruction - 1.0).norm() < 1e-8);
    }

    #[test]
    fn canonical_representative_keeps_the_potential() {
        let lat = Lattice::from_tau(c(0.2, 0.9)).unwrap();
        let n = [c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.7, 0.1)];
        let params = LameParams::apparent(&lat, n, c(1.21, -1.53), c(0.4, -0.25)).unwrap();
        let can = params.canonical(&lat);
        assert!(can.point.im >= 0.0);
        let z = c(0.05, 0.12);
        let a = potential(&lat, &params, z).unwrap();
        let b = potential(&lat, &can, z).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm());
        assert!(can.satisfies_apparent_condition(&lat).unwrap());
    }

    #[test]
    fn validation_rejects_bad_input() {
        let lat = Lattice::from_tau(c(0.0, 1.0)).unwrap();
        let half = [c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!(LameParams::apparent(&lat, half, c(0.2, 0.3), c(0.0, 0.0)).is_err());
        let zero = [C64::default(); 4];
        assert!(LameParams::apparent(&lat, zero, c(0.5, 0.5), c(0.0, 0.0)).is_err());
    }
}
