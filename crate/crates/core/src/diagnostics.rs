//! Entropy production, L2 errors, free-stream residuals, and the inverse
//! and trace constants that set the timestep.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::euler::{Gas, State};
use crate::mesh::{map_points, Domain};
use crate::quadrature::{gauss_1d, gll_1d, tensor_rule_2d, triangle_volume_rule, ElementKind};
use crate::ref_elem::{Basis, LineRule, OperatorConfig, ReferenceOperators, VolumeRule};
use crate::solver::{Discretization, RunConfig, Simulation, StepRecord};

/// Constants in `∫|∇u|² ≤ C_I ∫u²` and `∫_∂ u² ≤ C_T ∫u²` on the
/// reference element, with every integral evaluated by the operators'
/// quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub inverse: f64,
    pub trace: f64,
}

/// Largest `λ` with `A x = λ M x`, by reduction with the Cholesky factor of `M`.
pub fn max_generalized_eigenvalue(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InsufficientQuadrature("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InsufficientQuadrature("singular mass matrix".into()))?;
    let c = &linv * a * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    Ok(SymmetricEigen::new(c).eigenvalues.max())
}

pub fn inverse_trace_constants(ops: &ReferenceOperators) -> Result<Constants> {
    let w = DMatrix::from_diagonal(&ops.wq);
    let mut k = DMatrix::zeros(ops.np(), ops.np());
    for i in 0..2 {
        let g = &ops.vq * &ops.dmat[i];
        k += g.transpose() * &w * &g;
    }
    // face weights in the face parameter, without the reference face jacobian
    let param: Vec<f64> = ops.faces.iter().flat_map(|f| f.weights.iter().copied()).collect();
    let wf = DMatrix::from_diagonal(&DVector::from_vec(param));
    let t = ops.vf.transpose() * wf * &ops.vf;
    Ok(Constants {
        inverse: max_generalized_eigenvalue(&k, &ops.mass)?,
        trace: max_generalized_eigenvalue(&t, &ops.mass)?,
    })
}

/// One degree's worth of inverse and trace constants for the standard
/// quadrature pairings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantsRow {
    pub degree: usize,
    pub quad_gll: Constants,
    pub quad_gauss: Constants,
    /// GLL volume with Gauss faces.
    pub quad_gll_gauss: Constants,
    /// Degree-2N volume rule with Gauss faces.
    pub tri_gauss: Constants,
    /// Degree-2N volume rule with GLL faces.
    pub tri_gll: Constants,
}

impl ConstantsRow {
    pub const CSV_HEADER: &'static str = "N,quad_CI_gll,quad_CI_gauss,quad_CT_gll,quad_CT_gauss,quad_CT_gll_gauss,tri_CI,tri_CT_gauss,tri_CT_gll";

    pub fn new(n: usize) -> Result<Self> {
        let build = |kind, volume, surface| {
            OperatorConfig { kind, degree: n, volume, surface }.build().and_then(|o| inverse_trace_constants(&o))
        };
        let (gll, gauss) = (LineRule::Gll(n + 1), LineRule::Gauss(n + 1));
        let (quad, tri) = (ElementKind::Quad, ElementKind::Triangle);
        Ok(ConstantsRow {
            degree: n,
            quad_gll: build(quad, VolumeRule::Tensor(gll), gll)?,
            quad_gauss: build(quad, VolumeRule::Tensor(gauss), gauss)?,
            quad_gll_gauss: build(quad, VolumeRule::Tensor(gll), gauss)?,
            tri_gauss: build(tri, VolumeRule::Simplex(2 * n), gauss)?,
            tri_gll: build(tri, VolumeRule::Simplex(2 * n), gll)?,
        })
    }

    pub fn csv_row(&self) -> String {
        let v = [
            self.quad_gll.inverse,
            self.quad_gauss.inverse,
            self.quad_gll.trace,
            self.quad_gauss.trace,
            self.quad_gll_gauss.trace,
            self.tri_gauss.inverse,
            self.tri_gauss.trace,
            self.tri_gll.trace,
        ];
        let cols: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        format!("{},{}", self.degree, cols.join(","))
    }
}

/// Entropy production `Σ_k ṽ_kᵀ M^k du_k` of the semi-discrete scheme.
pub fn entropy_rhs(disc: &Discretization, u: &[DMatrix<f64>]) -> Result<f64> {
    Ok(disc.rhs(u)?.entropy_rhs)
}

/// L2 errors per field and in total, measured with a rule of degree `2N + 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L2Error {
    pub fields: [f64; 4],
    pub total: f64,
}

pub fn l2_error(
    disc: &Discretization,
    u: &[DMatrix<f64>],
    exact: impl Fn(f64, f64) -> State,
) -> Result<L2Error> {
    let n = disc.config.degree;
    let mut sums = [0.0; 4];
    let mut rules = std::collections::HashMap::new();
    for kind in disc.mesh.kinds() {
        let rule = match kind {
            ElementKind::Triangle => triangle_volume_rule(2 * n + 2)?,
            ElementKind::Quad => tensor_rule_2d(&gauss_1d(n + 2)?),
        };
        let v = Basis::new(kind, n).eval(&rule.points)?;
        rules.insert(kind, (rule, v));
    }
    for (k, e) in disc.mesh.elements.iter().enumerate() {
        let (rule, v) = &rules[&e.kind];
        let (xy, jac) = map_points(&disc.mapping, k, e.kind, &rule.points)?;
        let uh = v * &u[k];
        for q in 0..rule.len() {
            let ex = exact(xy[q][0], xy[q][1]);
            for c in 0..4 {
                let d = uh[(q, c)] - ex[c];
                sums[c] += rule.weights[q] * jac[q] * d * d;
            }
        }
    }
    Ok(L2Error { fields: sums.map(f64::sqrt), total: sums.iter().sum::<f64>().sqrt() })
}

/// `max |du/dt|` for a constant state on the configured (possibly warped) mesh.
pub fn free_stream_test(config: &RunConfig) -> Result<f64> {
    let disc = Discretization::new(config.clone())?;
    let c = disc.gas.from_primitive(1.0, 0.5, -0.25, 1.0);
    let u = disc.project(|_, _| c);
    let out = disc.rhs(&u)?;
    Ok(out.du.iter().map(|d| d.amax()).fold(0.0, f64::max))
}

/// Range of `‖u‖²_GLL / ‖u‖²` over random `u ∈ Q^N` (tensor GLL with
/// `N + 1` points per direction against exact integration).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRatio {
    pub min: f64,
    pub max: f64,
    /// Ratio for the highest tensor mode `p_N(r) p_N(s)`.
    pub top_mode: f64,
    /// Ratio for `p_N(r)`, the 1D worst case.
    pub edge_mode: f64,
}

pub fn gll_norm_equivalence_check(n: usize, samples: usize, seed: u64) -> Result<NormRatio> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let basis = Basis::new(ElementKind::Quad, n);
    let rule = tensor_rule_2d(&gll_1d(n + 1)?);
    let v = basis.eval(&rule.points)?;
    let w = DMatrix::from_diagonal(&DVector::from_vec(rule.weights.clone()));
    // the exact Gram matrix is the identity
    let m = v.transpose() * w * &v;
    let ratio = |c: &DVector<f64>| (c.transpose() * &m * c)[0] / c.norm_squared();
    let modes = basis.modes();
    let unit = |target: (usize, usize)| {
        DVector::from_fn(basis.dim(), |i, _| if modes[i] == target { 1.0 } else { 0.0 })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let c = DVector::from_fn(basis.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let r = ratio(&c);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(NormRatio { min: lo, max: hi, top_mode: ratio(&unit((n, n))), edge_mode: ratio(&unit((n, 0))) })
}

/// Density jump used for the entropy-conservation sweep: `ρ = 3` within
/// a band of half-width `L/6` around the domain center, `ρ = 2` outside,
/// at rest with `p = ρ^γ`.
pub fn density_jump(gas: &Gas, domain: &Domain) -> impl Fn(f64, f64) -> State + Sync {
    let gas = *gas;
    let center = 0.5 * (domain.x0 + domain.x1);
    let half = domain.width() / 6.0;
    move |x: f64, _y: f64| {
        let rho = if (x - center).abs() < half { 3.0 } else { 2.0 };
        gas.from_primitive(rho, 0.0, 0.0, rho.powf(gas.gamma))
    }
}

/// Run `config` from `initial` and return the largest `|entropy RHS|`
/// seen at the start of each step and at the final time.
pub fn max_entropy_rhs(
    config: &RunConfig,
    initial: impl Fn(&Discretization) -> Vec<DMatrix<f64>>,
    mut record: impl FnMut(&StepRecord),
) -> Result<f64> {
    let disc = Discretization::new(config.clone())?;
    let u = initial(&disc);
    let mut sim = Simulation::new(disc, u);
    let mut worst: f64 = 0.0;
    sim.run(config.final_time, |r| {
        worst = worst.max(r.entropy_rhs.abs());
        record(r);
    })?;
    Ok(worst.max(sim.entropy_rhs()?.abs()))
}

/// One refinement level of a convergence study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub h: f64,
    pub error: f64,
    /// Rate against the previous level, if any.
    pub rate: Option<f64>,
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fitted_rate(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.error.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Vortex convergence study. Each level uses `nx = ny = levels[i]` on the
/// configured domain and runs to `config.final_time`.
pub fn vortex_convergence(config: &RunConfig, levels: &[usize]) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &nx in levels {
        let cfg = RunConfig { nx, ny: nx, ..config.clone() };
        let disc = Discretization::new(cfg)?;
        let vortex = disc.vortex();
        let gas = disc.gas;
        let u = disc.project(|x, y| vortex.state(&gas, x, y, 0.0));
        let mut sim = Simulation::new(disc, u);
        sim.run(config.final_time, |_| {})?;
        let t = sim.t;
        let err = l2_error(&sim.disc, &sim.u, |x, y| vortex.state(&gas, x, y, t))?;
        let h = config.domain.width() / nx as f64;
        let rate = rows.last().map(|p| (p.error / err.total).ln() / (p.h / h).ln());
        rows.push(ConvergenceRow { nx, h, error: err.total, rate });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshKind;
    use crate::ref_elem::QuadratureOption;

    fn consts(kind: ElementKind, n: usize, vol: VolumeRule, surf: LineRule) -> Constants {
        let ops = OperatorConfig { kind, degree: n, volume: vol, surface: surf }.build().unwrap();
        inverse_trace_constants(&ops).unwrap()
    }

    #[test]
    fn low_order_constants() {
        let q = |n, l: LineRule| consts(ElementKind::Quad, n, VolumeRule::Tensor(l), l);
        assert!((q(2, LineRule::Gll(3)).inverse - 12.0).abs() < 1e-8);
        assert!((q(2, LineRule::Gauss(3)).inverse - 30.0).abs() < 1e-8);
        assert!((q(3, LineRule::Gll(4)).trace - 12.0).abs() < 1e-8);
        assert!((q(3, LineRule::Gauss(4)).trace - 20.0).abs() < 1e-8);
        let t = consts(ElementKind::Triangle, 1, VolumeRule::Simplex(2), LineRule::Gauss(2));
        assert!((t.inverse - 9.0).abs() < 1e-8, "{t:?}");
        assert!((t.trace - 6.0).abs() < 1e-8, "{t:?}");
    }

    #[test]
    fn constants_row_layout() {
        let row = ConstantsRow::new(2).unwrap();
        assert_eq!(row.csv_row().split(',').count(), ConstantsRow::CSV_HEADER.split(',').count());
        assert!(row.csv_row().starts_with("2,12.000000,30.000000,6.000000,12.000000,6.000000,"));
    }

    #[test]
    fn generalized_eigenvalue_of_scaled_identity() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![6.0, 4.0]));
        assert!((max_generalized_eigenvalue(&a, &m).unwrap() - 3.0).abs() < 1e-14);
        assert!(max_generalized_eigenvalue(&a, &(-m)).is_err());
    }

    #[test]
    fn gll_norm_bounds() {
        for n in 1..=6 {
            let r = gll_norm_equivalence_check(n, 1000, 11).unwrap();
            let nf = n as f64;
            assert!(r.min >= 1.0 - 1e-12, "{n} {r:?}");
            assert!((r.edge_mode - (2.0 + 1.0 / nf)).abs() < 1e-12, "{n} {r:?}");
            assert!((r.top_mode - (2.0 + 1.0 / nf).powi(2)).abs() < 1e-11, "{n} {r:?}");
            assert!(r.max <= (2.0 + 1.0 / nf).powi(2));
        }
        let c = gll_norm_equivalence_check(3, 0, 0).unwrap();
        assert_eq!(c.min, f64::INFINITY);
    }

    #[test]
    fn constant_norm_ratio_is_one() {
        let basis = Basis::new(ElementKind::Quad, 4);
        let rule = tensor_rule_2d(&gll_1d(5).unwrap());
        let v = basis.eval(&rule.points).unwrap();
        let s: f64 = (0..rule.len()).map(|q| rule.weights[q] * v[(q, 0)] * v[(q, 0)]).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    fn small(option: QuadratureOption, mesh: MeshKind, n: usize, ngeo: usize) -> RunConfig {
        RunConfig {
            degree: n,
            ngeo,
            option,
            mesh,
            nx: 4,
            ny: 2,
            domain: Domain::new(0.0, 4.0, -1.0, 1.0),
            alpha: 0.125,
            ..RunConfig::default()
        }
    }

    #[test]
    fn free_stream_residuals() {
        let r = free_stream_test(&small(QuadratureOption::GllGll, MeshKind::Quad, 3, 1)).unwrap();
        assert!(r < 1e-12, "{r}");
        let r = free_stream_test(&small(QuadratureOption::GllGll, MeshKind::Quad, 3, 3)).unwrap();
        assert!(r < 1e-11, "{r}");
        let r = free_stream_test(&small(QuadratureOption::GllSurface { m: 1 }, MeshKind::Triangle, 4, 4)).unwrap();
        assert!(r > 1e-8, "{r}");
    }

    #[test]
    fn zero_error_for_exact_solution() {
        let cfg = small(QuadratureOption::GaussGauss, MeshKind::Hybrid, 2, 1);
        let disc = Discretization::new(cfg).unwrap();
        let c = disc.gas.from_primitive(1.0, 0.0, 0.0, 1.0);
        let u = disc.project(|_, _| c);
        let e = l2_error(&disc, &u, |_, _| c).unwrap();
        assert!(e.total < 1e-13);
        let zero: Vec<_> = u.iter().map(|m| m * 0.0).collect();
        assert_eq!(l2_error(&disc, &zero, |_, _| [0.0; 4]).unwrap().total, 0.0);
    }

    #[test]
    fn projection_error_converges() {
        let mut errs = Vec::new();
        for nx in [8, 16] {
            let cfg = RunConfig { nx, ny: nx, degree: 2, ..RunConfig::default() };
            let disc = Discretization::new(cfg).unwrap();
            let v = disc.vortex();
            let g = disc.gas;
            let u = disc.project(|x, y| v.state(&g, x, y, 0.0));
            errs.push(l2_error(&disc, &u, |x, y| v.state(&g, x, y, 0.0)).unwrap().total);
        }
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 2.5, "{errs:?}");
    }

    #[test]
    fn fitted_rate_of_exact_power_law() {
        let rows: Vec<ConvergenceRow> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&h| ConvergenceRow { nx: 0, h, error: 3.0 * f64::powi(h, 3), rate: None })
            .collect();
        assert!((fitted_rate(&rows) - 3.0).abs() < 1e-12);
    }
}
