//! Semi-discrete entropy-stable DG solver on (possibly curved) hybrid
//! meshes and low-storage RK4 time stepping.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::diagnostics::inverse_trace_constants;
use crate::error::{Error, Result};
use crate::euler::{FluxAux, Gas, State, Vortex};
use crate::mesh::{
    build_uniform_mesh, connect_surface_points, geometric_factors, warp_mesh, CurvedMapping, Domain,
    GeometricFactors, MeshKind, MeshTopology, SurfaceMap,
};
use crate::quadrature::ElementKind;
use crate::ref_elem::{OperatorSet, QuadratureOption, VolumeRule};
use crate::sbp::{assemble_curved, CurvedOperators};

/// Interface flux.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxMode {
    /// Entropy-conservative flux only.
    Conservative,
    /// Entropy-conservative flux plus Lax–Friedrichs dissipation.
    Stable,
}

impl FluxMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "ec" => Some(FluxMode::Conservative),
            "es" | "lf" => Some(FluxMode::Stable),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FluxMode::Conservative => "ec",
            FluxMode::Stable => "es",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub degree: usize,
    pub ngeo: usize,
    pub option: QuadratureOption,
    pub mesh: MeshKind,
    pub nx: usize,
    pub ny: usize,
    pub domain: Domain,
    pub alpha: f64,
    pub cfl: f64,
    pub final_time: f64,
    pub flux: FluxMode,
    pub gamma: f64,
    /// Worker threads for the element loops; 0 or 1 runs serially.
    pub threads: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            degree: 3,
            ngeo: 1,
            option: QuadratureOption::GaussGauss,
            mesh: MeshKind::Hybrid,
            nx: 8,
            ny: 8,
            domain: Domain::new(0.0, 10.0, -5.0, 5.0),
            alpha: 0.0,
            cfl: 0.5,
            final_time: 1.0,
            flux: FluxMode::Stable,
            gamma: crate::euler::DEFAULT_GAMMA,
            threads: 1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.cfl <= 0.0 || !self.cfl.is_finite() {
            return bad(format!("cfl must be positive, got {}", self.cfl));
        }
        if self.final_time < 0.0 || !self.final_time.is_finite() {
            return bad(format!("T must be non-negative, got {}", self.final_time));
        }
        if self.ngeo == 0 {
            return bad("Ngeo must be at least 1".into());
        }
        if self.gamma <= 1.0 {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        Ok(())
    }

    /// Largest mapping degree for which the quadrature keeps the scheme
    /// free-stream preserving and entropy conservative on `kind`. With
    /// surface (and, on quads, volume) exactness `N + M`, this is
    /// `min(N + 1, M + 1)` on triangles and `min(N, M + 1)` on quads.
    pub fn ngeo_limit(&self, kind: ElementKind) -> Result<usize> {
        let n = self.degree;
        let cfg = self.option.config(kind, n)?;
        let mut exact = cfg.surface.exactness();
        if let VolumeRule::Tensor(line) = cfg.volume {
            exact = exact.min(line.exactness());
        }
        let m = exact.saturating_sub(n);
        Ok(match kind {
            ElementKind::Triangle => (n + 1).min(m + 1),
            ElementKind::Quad => n.min(m + 1),
        })
    }

    /// Warning text when `Ngeo` exceeds [`RunConfig::ngeo_limit`] for some
    /// element kind in the mesh. Exceeding it is allowed.
    pub fn ngeo_warning(&self) -> Option<String> {
        let kinds: &[ElementKind] = match self.mesh {
            MeshKind::Triangle => &[ElementKind::Triangle],
            MeshKind::Quad => &[ElementKind::Quad],
            MeshKind::Hybrid => &[ElementKind::Triangle, ElementKind::Quad],
        };
        let limit = kinds.iter().filter_map(|&k| self.ngeo_limit(k).ok()).min()?;
        (self.ngeo > limit).then(|| {
            format!("Ngeo = {} exceeds {} for this quadrature; the scheme may not be free-stream preserving", self.ngeo, limit)
        })
    }
}

/// Fourth-order five-stage low-storage Runge–Kutta coefficients.
pub const LSRK4_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const LSRK4_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const LSRK4_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363183472.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// One LSRK4 step for a system `y' = f(t, y)` stored as a flat vector.
pub fn lsrk4_step(
    y: &mut [f64],
    res: &mut [f64],
    t: f64,
    dt: f64,
    mut f: impl FnMut(f64, &[f64]) -> Vec<f64>,
) {
    for s in 0..5 {
        let k = f(t + LSRK4_C[s] * dt, y);
        for i in 0..y.len() {
            res[i] = LSRK4_A[s] * res[i] + dt * k[i];
            y[i] += LSRK4_B[s] * res[i];
        }
    }
}

/// Skew-symmetric coupling between hybridized points `a < b`.
#[derive(Clone, Copy, Debug)]
struct Pair {
    a: u32,
    b: u32,
    /// `2 S^1_ab`, `2 S^2_ab` with `S^i = ½(Q_k^i − (Q_k^i)ᵀ)`.
    s: [f64; 2],
}

/// Per-element operators and geometry used by the right-hand side.
#[derive(Clone, Debug)]
pub struct ElementData {
    pub kind: ElementKind,
    pub curved: CurvedOperators,
    pairs: Vec<Pair>,
    /// `(M^k)⁻¹ [V_q; V_f]ᵀ`.
    lift: DMatrix<f64>,
    /// `[V_q; V_f] P_q^k`: volume values of `v` to projected values everywhere.
    proj_h: DMatrix<f64>,
    /// `W_f |n J_f|` at surface points.
    wf_nj: Vec<f64>,
    /// Scaled normals `n_i J_f` at surface points.
    nj: Vec<[f64; 2]>,
    /// Unit normals.
    nhat: Vec<[f64; 2]>,
    /// `W J` at volume points.
    pub wj: DVector<f64>,
    pub nq: usize,
    pub nh: usize,
}

impl ElementData {
    fn new(curved: CurvedOperators, kind: ElementKind, ops: &crate::ref_elem::ReferenceOperators, geo: &crate::mesh::ElementGeometry) -> Self {
        let (nq, nh) = (ops.nq(), ops.nh());
        let mut pairs = Vec::new();
        for a in 0..nh {
            for b in (a + 1)..nh {
                if a >= nq && b >= nq {
                    continue;
                }
                let s = [0, 1].map(|i| curved.qk[i][(a, b)] - curved.qk[i][(b, a)]);
                if s[0] != 0.0 || s[1] != 0.0 {
                    pairs.push(Pair { a: a as u32, b: b as u32, s });
                }
            }
        }
        let vh = ops.vh();
        let lift = curved.mass_chol.solve(&vh.transpose());
        let proj_h = &vh * &curved.pqk;
        let nfq = ops.nfq();
        let nj: Vec<[f64; 2]> = (0..nfq).map(|p| [geo.nj[0][p], geo.nj[1][p]]).collect();
        let mag: Vec<f64> = nj.iter().map(|n| n[0].hypot(n[1])).collect();
        let wf_nj = (0..nfq).map(|p| ops.wf[p] * mag[p]).collect();
        let nhat = nj.iter().zip(&mag).map(|(n, m)| [n[0] / m, n[1] / m]).collect();
        let wj = ops.wq.component_mul(&geo.jac.rows(0, nq).into_owned());
        ElementData { kind, curved, pairs, lift, proj_h, wf_nj, nj, nhat, wj, nq, nh }
    }

    /// `Σ_q w_q J_q`.
    pub fn volume(&self) -> f64 {
        self.wj.sum()
    }
}

/// Mesh, operators and geometry for one run configuration.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub config: RunConfig,
    pub gas: Gas,
    pub mesh: MeshTopology,
    pub ops: OperatorSet,
    pub mapping: CurvedMapping,
    pub geo: GeometricFactors,
    pub surface_map: SurfaceMap,
    pub elements: Vec<ElementData>,
    pub h_min: f64,
    /// `max(C_T/2, C_I)` over the element kinds present.
    pub dt_constant: f64,
    pool: Option<std::sync::Arc<rayon::ThreadPool>>,
}

/// Right-hand side and the quantities computed alongside it.
#[derive(Clone, Debug)]
pub struct RhsOutput {
    /// Modal time derivatives, `N_p × 4` per element.
    pub du: Vec<DMatrix<f64>>,
    /// `Σ_k ṽ_kᵀ M^k du_k`, summed in element order.
    pub entropy_rhs: f64,
    /// `Σ_p w_p f*·n J_f` per element and field.
    pub surface_flux: Vec<State>,
}

impl Discretization {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_uniform_mesh(config.mesh, config.nx, config.ny, config.domain)?;
        let ops = OperatorSet::from_option(config.option, config.degree, &mesh.kinds())?;
        let mapping = warp_mesh(&mesh, config.alpha, config.ngeo)?;
        let geo = geometric_factors(&mesh, &mapping, &ops)?;
        let surface_map = connect_surface_points(&mesh, &geo, &ops)?;
        let elements = mesh
            .elements
            .iter()
            .zip(&geo.elements)
            .map(|(e, g)| {
                let op = ops.get(e.kind);
                Ok(ElementData::new(assemble_curved(op, g)?, e.kind, op, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let h_min = elements
            .iter()
            .map(|e| 2.0 * (e.volume() / e.kind.reference_measure()).sqrt())
            .fold(f64::INFINITY, f64::min);
        let mut dt_constant: f64 = 0.0;
        for op in ops.iter() {
            let c = inverse_trace_constants(op)?;
            dt_constant = dt_constant.max(c.trace / 2.0).max(c.inverse);
        }
        let pool = if config.threads > 1 {
            Some(std::sync::Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| Error::InvalidArgument(e.to_string()))?,
            ))
        } else {
            None
        };
        Ok(Discretization {
            gas: Gas::new(config.gamma),
            config,
            mesh,
            ops,
            mapping,
            geo,
            surface_map,
            elements,
            h_min,
            dt_constant,
            pool,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    fn map_elements<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        match &self.pool {
            Some(pool) => pool.install(|| (0..self.num_elements()).into_par_iter().map(&f).collect()),
            None => (0..self.num_elements()).map(f).collect(),
        }
    }

    /// Physical coordinates of element `k`'s volume points.
    pub fn volume_points(&self, k: usize) -> &[[f64; 2]] {
        &self.geo.elements[k].xy[..self.elements[k].nq]
    }

    /// L2 projection of a pointwise state using each element's volume rule.
    pub fn project(&self, f: impl Fn(f64, f64) -> State + Sync) -> Vec<DMatrix<f64>> {
        self.map_elements(|k| {
            let pts = self.volume_points(k);
            let uq = DMatrix::from_fn(pts.len(), 4, |q, c| f(pts[q][0], pts[q][1])[c]);
            &self.elements[k].curved.pqk * uq
        })
    }

    /// Values at volume points.
    pub fn volume_values(&self, k: usize, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        &self.ops.get(self.elements[k].kind).vq * coeffs
    }

    /// `Σ_k 1ᵀ W J V_q u_k` per field, in element order.
    pub fn totals(&self, u: &[DMatrix<f64>]) -> State {
        let mut t = [0.0; 4];
        for (k, c) in u.iter().enumerate() {
            let uq = self.volume_values(k, c);
            let w = &self.elements[k].wj;
            for f in 0..4 {
                t[f] += w.dot(&uq.column(f));
            }
        }
        t
    }

    /// Largest `|u| + c` over volume points.
    pub fn max_wave_speed(&self, u: &[DMatrix<f64>]) -> f64 {
        let mut m: f64 = 0.0;
        for (k, c) in u.iter().enumerate() {
            let uq = self.volume_values(k, c);
            for q in 0..uq.nrows() {
                let s = [uq[(q, 0)], uq[(q, 1)], uq[(q, 2)], uq[(q, 3)]];
                let speed = (s[1] * s[1] + s[2] * s[2]).sqrt() / s[0] + self.gas.sound_speed(&s);
                m = m.max(speed);
            }
        }
        m
    }

    /// `C h / (c_max max(C_T/2, C_I))`.
    pub fn estimate_dt(&self, u: &[DMatrix<f64>]) -> f64 {
        self.config.cfl * self.h_min / (self.max_wave_speed(u) * self.dt_constant)
    }

    /// Entropy-projected states `ũ` at volume and surface points, with the
    /// projected entropy variables `ṽ` at the same points.
    pub fn entropy_project(&self, k: usize, coeffs: &DMatrix<f64>) -> Result<(Vec<State>, Vec<State>)> {
        let e = &self.elements[k];
        let uq = self.volume_values(k, coeffs);
        let mut vq = DMatrix::zeros(e.nq, 4);
        for q in 0..e.nq {
            let s = [uq[(q, 0)], uq[(q, 1)], uq[(q, 2)], uq[(q, 3)]];
            self.gas.check_physical(&s).map_err(|err| err.in_element(k))?;
            let v = self.gas.entropy_vars_unchecked(&s);
            for c in 0..4 {
                vq[(q, c)] = v[c];
            }
        }
        let vh = &e.proj_h * vq;
        let mut ut = Vec::with_capacity(e.nh);
        let mut vt = Vec::with_capacity(e.nh);
        for p in 0..e.nh {
            let v = [vh[(p, 0)], vh[(p, 1)], vh[(p, 2)], vh[(p, 3)]];
            let u = self.gas.cons_vars(&v).map_err(|err| err.in_element(k))?;
            ut.push(u);
            vt.push(v);
        }
        Ok((ut, vt))
    }

    /// Semi-discrete right-hand side.
    pub fn rhs(&self, u: &[DMatrix<f64>]) -> Result<RhsOutput> {
        let projected = self.map_elements(|k| self.entropy_project(k, &u[k]));
        let mut ut = Vec::with_capacity(u.len());
        let mut vt = Vec::with_capacity(u.len());
        for p in projected {
            let (a, b) = p?;
            ut.push(a);
            vt.push(b);
        }
        let aux: Vec<Vec<FluxAux>> =
            self.map_elements(|k| ut[k].iter().map(|s| self.gas.flux_aux(s)).collect());
        let dissipate = self.config.flux == FluxMode::Stable;
        let parts = self.map_elements(|k| {
            let e = &self.elements[k];
            let (uk, ak) = (&ut[k], &aux[k]);
            let mut r = vec![[0.0f64; 4]; e.nh];
            for pr in &e.pairs {
                let (a, b) = (pr.a as usize, pr.b as usize);
                let (fx, fy) = self.gas.flux_ec_pair(&ak[a], &ak[b]);
                for c in 0..4 {
                    let t = pr.s[0] * fx[c] + pr.s[1] * fy[c];
                    r[a][c] += t;
                    r[b][c] -= t;
                }
            }
            let mut surf = [0.0; 4];
            for (p, &(kn, pn)) in self.surface_map[k].iter().enumerate() {
                let i = e.nq + p;
                let nb = &self.elements[kn];
                let j = nb.nq + pn;
                let (fx, fy) = self.gas.flux_ec_pair(&ak[i], &aux[kn][j]);
                let w = self.ops.get(e.kind).wf[p];
                let n = e.nj[p];
                let mut fs = [0.0; 4];
                for c in 0..4 {
                    fs[c] = w * (n[0] * fx[c] + n[1] * fy[c]);
                }
                if dissipate {
                    let d = self.gas.flux_dissipation(&uk[i], &ut[kn][j], e.nhat[p]);
                    for c in 0..4 {
                        fs[c] += e.wf_nj[p] * d[c];
                    }
                }
                for c in 0..4 {
                    r[i][c] += fs[c];
                    surf[c] += fs[c];
                }
            }
            let rm = DMatrix::from_fn(e.nh, 4, |p, c| r[p][c]);
            let du = -(&e.lift * &rm);
            let ent: f64 = (0..e.nh).map(|p| (0..4).map(|c| vt[k][p][c] * r[p][c]).sum::<f64>()).sum();
            (du, -ent, surf)
        });
        let mut du = Vec::with_capacity(parts.len());
        let mut surface_flux = Vec::with_capacity(parts.len());
        let mut entropy_rhs = 0.0;
        for (d, ent, s) in parts {
            du.push(d);
            entropy_rhs += ent;
            surface_flux.push(s);
        }
        Ok(RhsOutput { du, entropy_rhs, surface_flux })
    }

    /// Isentropic vortex, periodic in `x` over the run domain.
    pub fn vortex(&self) -> Vortex {
        Vortex { period_x: Some(self.config.domain.width()), ..Vortex::default() }
    }
}

/// Solution state and time.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub disc: Discretization,
    pub u: Vec<DMatrix<f64>>,
    pub t: f64,
    res: Vec<DMatrix<f64>>,
}

/// Scalars reported once per time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub entropy_rhs: f64,
    pub total_mass: f64,
    pub dt: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "time,entropy_rhs,total_mass,dt";

    pub fn csv_row(&self) -> String {
        format!("{:.16e},{:.16e},{:.16e},{:.16e}", self.time, self.entropy_rhs, self.total_mass, self.dt)
    }
}

impl Simulation {
    pub fn new(disc: Discretization, u: Vec<DMatrix<f64>>) -> Self {
        let res = u.iter().map(|c| DMatrix::zeros(c.nrows(), 4)).collect();
        Simulation { disc, u, t: 0.0, res }
    }

    /// Advance one LSRK4 step. Returns the entropy RHS at the start of the step.
    pub fn advance(&mut self, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let mut ent0 = 0.0;
        for s in 0..5 {
            let out = self.disc.rhs(&self.u)?;
            if s == 0 {
                ent0 = out.entropy_rhs;
            }
            for (k, d) in out.du.into_iter().enumerate() {
                let r = &mut self.res[k];
                *r *= LSRK4_A[s];
                *r += dt * d;
                self.u[k] += LSRK4_B[s] * &*r;
            }
        }
        self.t += dt;
        Ok(ent0)
    }

    /// Step to `final_time` with the CFL timestep, the last step shortened
    /// to land exactly on it. Calls `record` after each step with the
    /// entropy RHS at the start of that step.
    pub fn run(&mut self, final_time: f64, mut record: impl FnMut(&StepRecord)) -> Result<()> {
        let dt0 = self.disc.estimate_dt(&self.u);
        let steps = ((final_time - self.t) / dt0).ceil().max(0.0) as usize;
        if steps == 0 {
            return Ok(());
        }
        let dt = (final_time - self.t) / steps as f64;
        let t0 = self.t;
        for n in 0..steps {
            let ent = self.advance(dt)?;
            self.t = if n + 1 == steps { final_time } else { t0 + (n + 1) as f64 * dt };
            record(&StepRecord {
                time: self.t,
                entropy_rhs: ent,
                total_mass: self.disc.totals(&self.u)[0],
                dt,
            });
        }
        Ok(())
    }

    /// Entropy RHS of the current state.
    pub fn entropy_rhs(&self) -> Result<f64> {
        Ok(self.disc.rhs(&self.u)?.entropy_rhs)
    }
}
