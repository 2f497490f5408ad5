//! Two-dimensional compressible Euler equations: variable maps, entropy,
//! Chandrashekar's kinetic-energy-preserving entropy-conservative flux,
//! Lax–Friedrichs dissipation, and the isentropic vortex.
//!
//! States are `[ρ, ρu, ρv, E]`. Entropy variables are the gradient of
//! `−ρs` with `s = ln(p/ρ^γ)`, which is `(γ−1)` times the gradient of the
//! entropy `U = −ρs/(γ−1)`; the matching entropy potential is
//! `ψ_i = (γ−1)ρu_i`.

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 1.4;

/// Conservative variables `[ρ, ρu, ρv, E]` at one point.
pub type State = [f64; 4];

/// Ideal gas with ratio of specific heats `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gas {
    pub gamma: f64,
}

impl Default for Gas {
    fn default() -> Self {
        Gas { gamma: DEFAULT_GAMMA }
    }
}

/// Logarithmic mean `(a − b)/(ln a − ln b)`.
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("log mean of nonpositive values {a}, {b}")));
    }
    Ok(log_mean_with_logs(a, b, a.ln(), b.ln()))
}

/// Logarithmic mean given precomputed logarithms.
#[inline]
pub fn log_mean_with_logs(a: f64, b: f64, ln_a: f64, ln_b: f64) -> f64 {
    let z = (a - b) / (a + b);
    let z2 = z * z;
    if z2 < 1e-4 {
        (a + b) / (2.0 * (1.0 + z2 * (1.0 / 3.0 + z2 * (1.0 / 5.0 + z2 / 7.0))))
    } else {
        (a - b) / (ln_a - ln_b)
    }
}

/// Per-point quantities reused by every flux evaluation involving the point.
#[derive(Clone, Copy, Debug, Default)]
pub struct FluxAux {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    /// `ρ/(2p)`.
    pub beta: f64,
    pub ln_rho: f64,
    pub ln_beta: f64,
    /// `u² + v²`.
    pub usq: f64,
}

impl Gas {
    pub fn new(gamma: f64) -> Self {
        Gas { gamma }
    }

    pub fn pressure(&self, u: &State) -> f64 {
        (self.gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
    }

    /// Error unless `ρ > 0` and `ρe > 0`.
    pub fn check_physical(&self, u: &State) -> Result<()> {
        let ok = u[0] > 0.0 && u.iter().all(|x| x.is_finite()) && self.pressure(u) > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::nonphysical(format!("state {u:?}")))
        }
    }

    pub fn sound_speed(&self, u: &State) -> f64 {
        (self.gamma * self.pressure(u) / u[0]).sqrt()
    }

    /// Physical flux in direction `i` (0 = x, 1 = y).
    pub fn flux(&self, u: &State, i: usize) -> State {
        let p = self.pressure(u);
        let vel = u[1 + i] / u[0];
        let mut f = [u[0] * vel, u[1] * vel, u[2] * vel, (u[3] + p) * vel];
        f[1 + i] += p;
        f
    }

    /// `s = ln(p/ρ^γ)`.
    pub fn specific_entropy(&self, u: &State) -> f64 {
        self.pressure(u).ln() - self.gamma * u[0].ln()
    }

    /// `U = −ρs/(γ−1)`.
    pub fn entropy(&self, u: &State) -> Result<f64> {
        self.check_physical(u)?;
        Ok(-u[0] * self.specific_entropy(u) / (self.gamma - 1.0))
    }

    /// `ψ_i = (γ−1)ρu_i`.
    pub fn entropy_potential(&self, u: &State, i: usize) -> f64 {
        (self.gamma - 1.0) * u[1 + i]
    }

    pub fn entropy_vars(&self, u: &State) -> Result<State> {
        self.check_physical(u)?;
        Ok(self.entropy_vars_unchecked(u))
    }

    #[inline]
    pub(crate) fn entropy_vars_unchecked(&self, u: &State) -> State {
        let g = self.gamma;
        let rho_e = u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0];
        let s = ((g - 1.0) * rho_e).ln() - g * u[0].ln();
        [
            (rho_e * (g + 1.0 - s) - u[3]) / rho_e,
            u[1] / rho_e,
            u[2] / rho_e,
            -u[0] / rho_e,
        ]
    }

    pub fn cons_vars(&self, v: &State) -> Result<State> {
        if !(v[3] < 0.0) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::nonphysical(format!("entropy variables {v:?} need v4 < 0")));
        }
        let u = self.cons_vars_unchecked(v);
        self.check_physical(&u)?;
        Ok(u)
    }

    #[inline]
    pub(crate) fn cons_vars_unchecked(&self, v: &State) -> State {
        let g = self.gamma;
        let vsq = v[1] * v[1] + v[2] * v[2];
        let s = g - v[0] + vsq / (2.0 * v[3]);
        let rho_e = ((g - 1.0) / (-v[3]).powf(g)).powf(1.0 / (g - 1.0)) * (-s / (g - 1.0)).exp();
        [-rho_e * v[3], rho_e * v[1], rho_e * v[2], rho_e * (1.0 - vsq / (2.0 * v[3]))]
    }

    pub fn flux_aux(&self, u: &State) -> FluxAux {
        let rho = u[0];
        let (vx, vy) = (u[1] / rho, u[2] / rho);
        let beta = rho / (2.0 * self.pressure(u));
        FluxAux {
            rho,
            u: vx,
            v: vy,
            beta,
            ln_rho: rho.ln(),
            ln_beta: beta.ln(),
            usq: vx * vx + vy * vy,
        }
    }

    /// Entropy-conservative flux in both directions.
    #[inline]
    pub fn flux_ec_pair(&self, a: &FluxAux, b: &FluxAux) -> (State, State) {
        let rho_log = log_mean_with_logs(a.rho, b.rho, a.ln_rho, b.ln_rho);
        let beta_log = log_mean_with_logs(a.beta, b.beta, a.ln_beta, b.ln_beta);
        let ua = 0.5 * (a.u + b.u);
        let va = 0.5 * (a.v + b.v);
        let rho_avg = 0.5 * (a.rho + b.rho);
        let beta_avg = 0.5 * (a.beta + b.beta);
        let p_avg = rho_avg / (2.0 * beta_avg);
        let unorm = 2.0 * (ua * ua + va * va) - 0.5 * (a.usq + b.usq);
        let e_coef = rho_log * (1.0 / (2.0 * (self.gamma - 1.0) * beta_log) + 0.5 * unorm);
        let fx1 = rho_log * ua;
        let fy1 = rho_log * va;
        let fx = [fx1, fx1 * ua + p_avg, fx1 * va, e_coef * ua + p_avg * ua];
        let fy = [fy1, fy1 * ua, fy1 * va + p_avg, e_coef * va + p_avg * va];
        (fx, fy)
    }

    /// Entropy-conservative flux in direction `i`.
    pub fn flux_ec(&self, ul: &State, ur: &State, i: usize) -> Result<State> {
        self.check_physical(ul)?;
        self.check_physical(ur)?;
        let (fx, fy) = self.flux_ec_pair(&self.flux_aux(ul), &self.flux_aux(ur));
        Ok(if i == 0 { fx } else { fy })
    }

    /// `|u·n| + c` for a unit normal `n`.
    pub fn wave_speed(&self, u: &State, n: [f64; 2]) -> f64 {
        ((u[1] * n[0] + u[2] * n[1]) / u[0]).abs() + self.sound_speed(u)
    }

    /// Lax–Friedrichs penalty `−½λ(u_R − u_L)` across a face with unit
    /// normal `n`, `λ` the larger wave speed of the two states.
    pub fn flux_dissipation(&self, ul: &State, ur: &State, n: [f64; 2]) -> State {
        let lam = self.wave_speed(ul, n).max(self.wave_speed(ur, n));
        [0, 1, 2, 3].map(|c| -0.5 * lam * (ur[c] - ul[c]))
    }

    /// Conservative state from primitive `(ρ, u, v, p)`.
    pub fn from_primitive(&self, rho: f64, u: f64, v: f64, p: f64) -> State {
        [rho, rho * u, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * (u * u + v * v)]
    }
}

/// Isentropic vortex advected with unit speed in `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vortex {
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    /// Period in `x`; distances to the center use the nearest image.
    pub period_x: Option<f64>,
}

impl Default for Vortex {
    fn default() -> Self {
        Vortex { c1: 5.0, c2: 0.0, beta: 5.0, period_x: None }
    }
}

impl Vortex {
    pub fn state(&self, gas: &Gas, x: f64, y: f64, t: f64) -> State {
        use std::f64::consts::PI;
        let g = gas.gamma;
        let mut dx = x - self.c1 - t;
        if let Some(l) = self.period_x {
            dx -= l * (dx / l).round();
        }
        let dy = y - self.c2;
        let e = (1.0 - dx * dx - dy * dy).exp();
        let rho = (1.0 - (g - 1.0) * self.beta * self.beta * e * e / (16.0 * g * PI * PI))
            .powf(1.0 / (g - 1.0));
        let a = self.beta / (2.0 * PI) * e;
        let u = 1.0 - a * dy;
        let v = a * dx;
        gas.from_primitive(rho, u, v, rho.powf(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const G: Gas = Gas { gamma: 1.4 };

    fn physical() -> impl Strategy<Value = State> {
        (0.1f64..5.0, -3.0f64..3.0, -3.0f64..3.0, 0.1f64..5.0)
            .prop_map(|(r, u, v, p)| G.from_primitive(r, u, v, p))
    }

    fn rel(a: &State, b: &State) -> f64 {
        (0..4).map(|c| (a[c] - b[c]).abs() / b[c].abs().max(1.0)).fold(0.0, f64::max)
    }

    #[test]
    fn entropy_variables_of_rest_state() {
        let u = G.from_primitive(1.0, 0.0, 0.0, 1.0);
        assert!((u[3] - 2.5).abs() < 1e-15);
        let v = G.entropy_vars(&u).unwrap();
        assert!((v[0] - 1.4).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 0.0);
        assert!((v[3] + 0.4).abs() < 1e-15);
        let back = G.cons_vars(&v).unwrap();
        assert!(rel(&back, &u) < 1e-14);
        assert_eq!(G.entropy(&u).unwrap(), 0.0);
        assert_eq!(G.entropy_potential(&u, 0), 0.0);
    }

    #[test]
    fn states_along_an_isentrope() {
        // p = ρ^γ keeps s = 0, so v1 = γ + 1 − E/ρe − ... stays consistent
        for rho in [0.3, 1.0, 2.7] {
            let u = G.from_primitive(rho, 0.4, -0.2, f64::powf(rho, 1.4));
            assert!(G.specific_entropy(&u).abs() < 1e-14);
            let v = G.entropy_vars(&u).unwrap();
            assert!(rel(&G.cons_vars(&v).unwrap(), &u) < 1e-12);
        }
    }

    #[test]
    fn nonphysical_inputs_are_errors() {
        assert!(G.entropy_vars(&[-1.0, 0.0, 0.0, 1.0]).is_err());
        assert!(G.entropy_vars(&[1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(G.cons_vars(&[1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(G.cons_vars(&[1.0, 0.0, 0.0, 0.3]).is_err());
        assert!(log_mean(0.0, 1.0).is_err());
    }

    #[test]
    fn log_mean_values() {
        assert_eq!(log_mean(2.5, 2.5).unwrap(), 2.5);
        let e = std::f64::consts::E;
        assert!((log_mean(1.0, e).unwrap() - (e - 1.0)).abs() < 1e-15);
        let m = log_mean(1.0, 1.0 + 1e-12).unwrap();
        assert!(m.is_finite() && (m - (1.0 + 5e-13)).abs() < 1e-13);
        // both branches agree near the switch
        let (a, b) = (1.0, 1.03);
        let z2 = ((a - b) / (a + b)) * ((a - b) / (a + b));
        assert!(z2 > 1e-4);
        let direct = (a - b) / (f64::ln(a) - f64::ln(b));
        assert!((log_mean(a, b).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn rest_state_sound_speed() {
        let u = G.from_primitive(1.0, 0.0, 0.0, 1.0);
        assert!((G.wave_speed(&u, [1.0, 0.0]) - 1.4f64.sqrt()).abs() < 1e-15);
        assert_eq!(G.flux_dissipation(&u, &u, [0.0, 1.0]), [0.0; 4]);
    }

    #[test]
    fn vortex_values() {
        let vx = Vortex::default();
        let c = vx.state(&G, 5.0, 0.0, 0.0);
        let e2 = std::f64::consts::E.powi(2);
        let expect = (1.0 - 0.4 * 25.0 * e2 / (16.0 * 1.4 * std::f64::consts::PI.powi(2))).powf(2.5);
        assert!((c[0] - expect).abs() < 1e-14);
        assert!((c[0] - 0.3617).abs() < 1e-4);
        let far = vx.state(&G, 40.0, 30.0, 0.0);
        assert!(rel(&far, &G.from_primitive(1.0, 1.0, 0.0, 1.0)) < 1e-14);
        let a = vx.state(&G, 6.3, 0.4, 1.5);
        let b = vx.state(&G, 4.8, 0.4, 0.0);
        assert!(rel(&a, &b) < 1e-14);
        let p = Vortex { period_x: Some(10.0), ..vx };
        assert!(rel(&p.state(&G, 0.5, 0.2, 5.0), &p.state(&G, 10.5, 0.2, 5.0)) < 1e-14);
    }

    #[test]
    fn dissipation_never_produces_entropy() {
        // (v_L − v_R)·(−penalty) summed over the face pair is ≤ 0 for jumps
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let mut s = || G.from_primitive(rng.gen_range(0.2..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..3.0));
            let (ul, ur) = (s(), s());
            let d = G.flux_dissipation(&ul, &ur, [0.6, 0.8]);
            let (vl, vr) = (G.entropy_vars(&ul).unwrap(), G.entropy_vars(&ur).unwrap());
            let prod: f64 = (0..4).map(|c| (vl[c] - vr[c]) * d[c]).sum();
            // −½λ (v_L − v_R)·(u_R − u_L) ≥ 0 by monotonicity of v(u)
            assert!(prod >= -1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn entropy_variable_roundtrip(u in physical()) {
            let v = G.entropy_vars(&u).unwrap();
            prop_assert!(rel(&G.cons_vars(&v).unwrap(), &u) < 1e-11);
        }

        #[test]
        fn entropy_variables_are_scaled_entropy_gradient(u in physical()) {
            let v = G.entropy_vars(&u).unwrap();
            for c in 0..4 {
                let h = 1e-7 * u[c].abs().max(1.0);
                let (mut up, mut um) = (u, u);
                up[c] += h;
                um[c] -= h;
                let d = (G.entropy(&up).unwrap() - G.entropy(&um).unwrap()) / (2.0 * h);
                let scaled = (G.gamma - 1.0) * d;
                prop_assert!((scaled - v[c]).abs() <= 1e-6 * v[c].abs().max(1.0), "{c}: {scaled} vs {}", v[c]);
            }
        }

        #[test]
        fn ec_flux_tadmor_conditions(ul in physical(), ur in physical()) {
            let (vl, vr) = (G.entropy_vars(&ul).unwrap(), G.entropy_vars(&ur).unwrap());
            for i in 0..2 {
                let f = G.flux_ec(&ul, &ur, i).unwrap();
                let consistent = G.flux_ec(&ul, &ul, i).unwrap();
                prop_assert!(rel(&consistent, &G.flux(&ul, i)) < 1e-12);
                prop_assert_eq!(f, G.flux_ec(&ur, &ul, i).unwrap());
                let lhs: f64 = (0..4).map(|c| (vl[c] - vr[c]) * f[c]).sum();
                let rhs = G.entropy_potential(&ul, i) - G.entropy_potential(&ur, i);
                prop_assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
            }
        }

        #[test]
        fn log_mean_near_equal_arguments(a in 1e-3f64..1e3, k in -100i32..100) {
            let b = a * (1.0 + k as f64 * 1e-16);
            let m = log_mean(a, b).unwrap();
            prop_assert!((m - 0.5 * (a + b)).abs() <= 1e-14 * a);
        }
    }
}
