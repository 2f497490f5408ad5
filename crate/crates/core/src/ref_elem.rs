//! Orthonormal polynomial bases and quadrature-induced operators on the
//! reference triangle and quadrilateral.
//!
//! The triangle basis is the collapsed-coordinate (Koornwinder–Dubiner)
//! basis; the quad basis is a tensor product of orthonormal Legendre
//! polynomials. Both are orthonormal under exact integration, so the exact
//! mass matrix is the identity.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::poly;
use crate::quadrature::{
    self, face_rule, gauss_1d, gll_1d, tensor_rule_2d, triangle_volume_rule, ElementKind,
    FaceRule, Rule1d, Rule2d,
};

const DOMAIN_TOL: f64 = 1e-10;

/// Polynomial space `P^N` (triangle) or `Q^N` (quad) with an orthonormal basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    pub kind: ElementKind,
    pub degree: usize,
}

impl Basis {
    pub fn new(kind: ElementKind, degree: usize) -> Self {
        Basis { kind, degree }
    }

    /// `N_p`, the dimension of the space.
    pub fn dim(&self) -> usize {
        let n = self.degree;
        match self.kind {
            ElementKind::Triangle => (n + 1) * (n + 2) / 2,
            ElementKind::Quad => (n + 1) * (n + 1),
        }
    }

    /// Mode index pairs. For triangles `(i, j)` has total degree `i + j`;
    /// for quads `(i, j)` are the degrees in `r` and `s`.
    pub fn modes(&self) -> Vec<(usize, usize)> {
        let n = self.degree;
        let mut m = Vec::with_capacity(self.dim());
        match self.kind {
            ElementKind::Triangle => {
                for i in 0..=n {
                    for j in 0..=(n - i) {
                        m.push((i, j));
                    }
                }
            }
            ElementKind::Quad => {
                for i in 0..=n {
                    for j in 0..=n {
                        m.push((i, j));
                    }
                }
            }
        }
        m
    }

    fn check_point(&self, p: &[f64; 2]) -> Result<()> {
        let [r, s] = *p;
        let inside = match self.kind {
            ElementKind::Quad => r.abs() <= 1.0 + DOMAIN_TOL && s.abs() <= 1.0 + DOMAIN_TOL,
            ElementKind::Triangle => {
                r >= -1.0 - DOMAIN_TOL && s >= -1.0 - DOMAIN_TOL && r + s <= DOMAIN_TOL
            }
        };
        if inside {
            Ok(())
        } else {
            Err(Error::Domain(r, s))
        }
    }

    /// Matrix of basis values, one row per point.
    pub fn eval(&self, points: &[[f64; 2]]) -> Result<DMatrix<f64>> {
        let np = self.dim();
        let mut v = DMatrix::zeros(points.len(), np);
        for (row, p) in points.iter().enumerate() {
            self.check_point(p)?;
            let vals = self.eval_point(p);
            for (c, x) in vals.into_iter().enumerate() {
                v[(row, c)] = x;
            }
        }
        Ok(v)
    }

    /// Matrices of `∂φ_j/∂r` and `∂φ_j/∂s`, one row per point.
    pub fn grad(&self, points: &[[f64; 2]]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let np = self.dim();
        let mut vr = DMatrix::zeros(points.len(), np);
        let mut vs = DMatrix::zeros(points.len(), np);
        for (row, p) in points.iter().enumerate() {
            self.check_point(p)?;
            let (dr, ds) = self.grad_point(p);
            for c in 0..np {
                vr[(row, c)] = dr[c];
                vs[(row, c)] = ds[c];
            }
        }
        Ok((vr, vs))
    }

    fn eval_point(&self, p: &[f64; 2]) -> Vec<f64> {
        let n = self.degree;
        let [r, s] = *p;
        match self.kind {
            ElementKind::Quad => {
                let lr = poly::jacobi_all(r, 0.0, 0.0, n);
                let ls = poly::jacobi_all(s, 0.0, 0.0, n);
                self.modes().iter().map(|&(i, j)| lr[i] * ls[j]).collect()
            }
            ElementKind::Triangle => {
                let (a, b) = collapse(r, s);
                let fa = poly::jacobi_all(a, 0.0, 0.0, n);
                self.modes()
                    .iter()
                    .map(|&(i, j)| {
                        let gb = poly::jacobi(b, 2.0 * i as f64 + 1.0, 0.0, j);
                        std::f64::consts::SQRT_2 * fa[i] * gb * (1.0 - b).powi(i as i32)
                    })
                    .collect()
            }
        }
    }

    fn grad_point(&self, p: &[f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let n = self.degree;
        let [r, s] = *p;
        match self.kind {
            ElementKind::Quad => {
                let lr = poly::jacobi_all(r, 0.0, 0.0, n);
                let ls = poly::jacobi_all(s, 0.0, 0.0, n);
                let dlr: Vec<f64> = (0..=n).map(|k| poly::legendre_grad(r, k)).collect();
                let dls: Vec<f64> = (0..=n).map(|k| poly::legendre_grad(s, k)).collect();
                self.modes()
                    .iter()
                    .map(|&(i, j)| (dlr[i] * ls[j], lr[i] * dls[j]))
                    .unzip()
            }
            ElementKind::Triangle => {
                let (a, b) = collapse(r, s);
                self.modes()
                    .iter()
                    .map(|&(i, j)| {
                        let fi = i as f64;
                        let fa = poly::jacobi(a, 0.0, 0.0, i);
                        let dfa = poly::jacobi_grad(a, 0.0, 0.0, i);
                        let gb = poly::jacobi(b, 2.0 * fi + 1.0, 0.0, j);
                        let dgb = poly::jacobi_grad(b, 2.0 * fi + 1.0, 0.0, j);
                        let half = 0.5 * (1.0 - b);
                        let pow_im1 = if i > 0 { half.powi(i as i32 - 1) } else { 1.0 };
                        let mut dr = dfa * gb;
                        if i > 0 {
                            dr *= pow_im1;
                        }
                        let mut ds = dfa * gb * 0.5 * (1.0 + a);
                        if i > 0 {
                            ds *= pow_im1;
                        }
                        let mut tmp = dgb * half.powi(i as i32);
                        if i > 0 {
                            tmp -= 0.5 * fi * gb * pow_im1;
                        }
                        ds += tmp * fa;
                        let scale = 2f64.powf(fi + 0.5);
                        (scale * dr, scale * ds)
                    })
                    .unzip()
            }
        }
    }
}

fn collapse(r: f64, s: f64) -> (f64, f64) {
    let a = if (1.0 - s).abs() > 1e-14 { 2.0 * (1.0 + r) / (1.0 - s) - 1.0 } else { -1.0 };
    (a, s)
}

/// A 1D rule by family and point count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineRule {
    Gauss(usize),
    Gll(usize),
}

impl LineRule {
    pub fn build(self) -> Result<Rule1d> {
        match self {
            LineRule::Gauss(n) => gauss_1d(n),
            LineRule::Gll(n) => gll_1d(n),
        }
    }

    pub fn exactness(self) -> usize {
        match self {
            LineRule::Gauss(n) => 2 * n - 1,
            LineRule::Gll(n) => 2 * n - 3,
        }
    }

    pub fn label(self) -> String {
        match self {
            LineRule::Gauss(n) => format!("gauss{n}"),
            LineRule::Gll(n) => format!("gll{n}"),
        }
    }
}

/// Volume rule: tensor product of a line rule (quads) or a collapsed
/// rule of a given total degree (triangles).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeRule {
    Tensor(LineRule),
    Simplex(usize),
}

impl VolumeRule {
    pub fn build(self) -> Result<Rule2d> {
        match self {
            VolumeRule::Tensor(l) => Ok(tensor_rule_2d(&l.build()?)),
            VolumeRule::Simplex(d) => triangle_volume_rule(d),
        }
    }

    pub fn label(self) -> String {
        match self {
            VolumeRule::Tensor(l) => l.label(),
            VolumeRule::Simplex(d) => format!("deg{d}"),
        }
    }
}

/// Everything needed to build one set of reference operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OperatorConfig {
    pub kind: ElementKind,
    pub degree: usize,
    pub volume: VolumeRule,
    pub surface: LineRule,
}

impl OperatorConfig {
    pub fn build(&self) -> Result<ReferenceOperators> {
        build_reference_operators(
            self.kind,
            self.degree,
            &self.volume.build()?,
            &self.surface.build()?,
        )
    }

    pub fn label(&self) -> String {
        format!(
            "{} N={} vol={} surf={}",
            self.kind.name(),
            self.degree,
            self.volume.label(),
            self.surface.label()
        )
    }
}

/// Volume and surface quadrature pairings for hybrid meshes.
///
/// Options 1–3 follow the usual GLL/Gauss pairings; `GllSurface { m }` is
/// the sweep used for entropy-conservation checks, with `(N+1)`-point GLL
/// volume quadrature on quads and a GLL surface rule exact for degree
/// `N + m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureOption {
    /// GLL volume (quads), GLL surface.
    GllGll,
    /// GLL volume (quads), Gauss surface.
    GllGauss,
    /// Gauss volume (quads), Gauss surface.
    GaussGauss,
    GllSurface { m: usize },
}

impl QuadratureOption {
    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            1 => Some(QuadratureOption::GllGll),
            2 => Some(QuadratureOption::GllGauss),
            3 => Some(QuadratureOption::GaussGauss),
            _ => None,
        }
    }

    /// Parses `1`, `2`, `3`, or `M<m>` / `M=<m>` for GLL faces exact to degree `N + m`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('M').or_else(|| s.strip_prefix('m')) {
            let m = rest.strip_prefix('=').unwrap_or(rest).trim().parse().ok()?;
            return Some(QuadratureOption::GllSurface { m });
        }
        Self::from_index(s.parse().ok()?)
    }

    pub fn label(&self) -> String {
        match self {
            QuadratureOption::GllGll => "1".into(),
            QuadratureOption::GllGauss => "2".into(),
            QuadratureOption::GaussGauss => "3".into(),
            QuadratureOption::GllSurface { m } => format!("M={m}"),
        }
    }

    /// Triangles always use a degree-2N volume rule.
    pub fn config(&self, kind: ElementKind, degree: usize) -> Result<OperatorConfig> {
        let n1 = degree + 1;
        let surface = match *self {
            QuadratureOption::GllGll => LineRule::Gll(n1),
            QuadratureOption::GllGauss | QuadratureOption::GaussGauss => LineRule::Gauss(n1),
            QuadratureOption::GllSurface { m } => {
                if (m + degree) % 2 == 0 {
                    return Err(Error::InvalidArgument(format!(
                        "GLL surface rules have odd exactness; N + M = {} is even",
                        m + degree
                    )));
                }
                LineRule::Gll((m + degree + 3) / 2)
            }
        };
        let volume = match kind {
            ElementKind::Triangle => VolumeRule::Simplex(2 * degree),
            ElementKind::Quad => match self {
                QuadratureOption::GaussGauss => VolumeRule::Tensor(LineRule::Gauss(n1)),
                _ => VolumeRule::Tensor(LineRule::Gll(n1)),
            },
        };
        Ok(OperatorConfig { kind, degree, volume, surface })
    }
}

/// Quadrature-induced matrices for one element kind, degree and
/// quadrature pairing.
///
/// Surface quantities are stacked face by face; face `f` occupies rows
/// `f * nfp .. (f + 1) * nfp`.
#[derive(Clone, Debug)]
pub struct ReferenceOperators {
    pub basis: Basis,
    pub volume_rule: Rule2d,
    pub surface_rule: Rule1d,
    pub faces: Vec<FaceRule>,
    /// Volume point coordinates.
    pub volume_points: Vec<[f64; 2]>,
    /// Surface point coordinates (all faces).
    pub surface_points: Vec<[f64; 2]>,
    pub wq: DVector<f64>,
    pub wf: DVector<f64>,
    /// `n̂_i Ĵ_f` at surface points, `i = 0, 1`.
    pub nhat: [DVector<f64>; 2],
    pub vq: DMatrix<f64>,
    pub vf: DMatrix<f64>,
    /// Basis gradients at volume points.
    pub vq_grad: [DMatrix<f64>; 2],
    /// Modal differentiation: coefficients of `u` to coefficients of `∂u/∂x̂_i`.
    pub dmat: [DMatrix<f64>; 2],
    pub mass: DMatrix<f64>,
    pub mass_chol: Cholesky<f64, Dyn>,
    pub pq: DMatrix<f64>,
    /// Extrapolation `V_f P_q` from volume to surface points.
    pub extrap: DMatrix<f64>,
    /// Diagonal of `B^i = W_f diag(n̂_i)`.
    pub bdiag: [DVector<f64>; 2],
    /// `Q^i = W V_q D^i P_q`.
    pub q: [DMatrix<f64>; 2],
    /// Hybridized operators.
    pub qn: [DMatrix<f64>; 2],
    /// Skew-hybridized operators.
    pub qn_skew: [DMatrix<f64>; 2],
}

impl ReferenceOperators {
    pub fn kind(&self) -> ElementKind {
        self.basis.kind
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn np(&self) -> usize {
        self.basis.dim()
    }

    pub fn nq(&self) -> usize {
        self.wq.len()
    }

    pub fn nfq(&self) -> usize {
        self.wf.len()
    }

    /// Points per face.
    pub fn nfp(&self) -> usize {
        self.surface_rule.len()
    }

    /// Total hybridized size `N_q + N_q^f`.
    pub fn nh(&self) -> usize {
        self.nq() + self.nfq()
    }

    /// All volume points followed by all surface points.
    pub fn hybrid_points(&self) -> Vec<[f64; 2]> {
        let mut p = self.volume_points.clone();
        p.extend_from_slice(&self.surface_points);
        p
    }

    /// `[V_q; V_f]`.
    pub fn vh(&self) -> DMatrix<f64> {
        let (nq, nf, np) = (self.nq(), self.nfq(), self.np());
        let mut v = DMatrix::zeros(nq + nf, np);
        v.rows_mut(0, nq).copy_from(&self.vq);
        v.rows_mut(nq, nf).copy_from(&self.vf);
        v
    }

    /// Boundary matrix `B_N^i = diag(0, B^i)` as a diagonal vector.
    pub fn bn_diag(&self, i: usize) -> DVector<f64> {
        let mut d = DVector::zeros(self.nh());
        d.rows_mut(self.nq(), self.nfq()).copy_from(&self.bdiag[i]);
        d
    }
}

/// Reference operators for each element kind present in a mesh.
#[derive(Clone, Debug, Default)]
pub struct OperatorSet {
    pub triangle: Option<ReferenceOperators>,
    pub quad: Option<ReferenceOperators>,
}

impl OperatorSet {
    /// Build operators for the requested kinds under one quadrature option.
    pub fn from_option(
        option: QuadratureOption,
        degree: usize,
        kinds: &[ElementKind],
    ) -> Result<Self> {
        let mut set = OperatorSet::default();
        for &k in kinds {
            let ops = option.config(k, degree)?.build()?;
            match k {
                ElementKind::Triangle => set.triangle = Some(ops),
                ElementKind::Quad => set.quad = Some(ops),
            }
        }
        Ok(set)
    }

    pub fn get(&self, kind: ElementKind) -> &ReferenceOperators {
        let ops = match kind {
            ElementKind::Triangle => self.triangle.as_ref(),
            ElementKind::Quad => self.quad.as_ref(),
        };
        ops.unwrap_or_else(|| panic!("no operators built for {}", kind.name()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReferenceOperators> {
        self.triangle.iter().chain(self.quad.iter())
    }
}

/// Assemble all reference operators for one element kind and degree.
///
/// The same 1D rule is used on every face.
pub fn build_reference_operators(
    kind: ElementKind,
    degree: usize,
    volume: &Rule2d,
    surface: &Rule1d,
) -> Result<ReferenceOperators> {
    let basis = Basis::new(kind, degree);
    let np = basis.dim();
    let volume_points = volume.points.clone();
    let faces: Vec<FaceRule> = (0..kind.num_faces())
        .map(|f| face_rule(kind, f, surface))
        .collect::<Result<_>>()?;
    let surface_points: Vec<[f64; 2]> = faces.iter().flat_map(|f| f.points.clone()).collect();
    let wq = DVector::from_vec(volume.weights.clone());
    let wf = DVector::from_vec(faces.iter().flat_map(|f| f.weights.clone()).collect());
    let nhat = [0, 1].map(|i| {
        DVector::from_vec(faces.iter().flat_map(|f| f.normals.iter().map(move |n| n[i])).collect())
    });

    let vq = basis.eval(&volume_points)?;
    let vf = basis.eval(&surface_points)?;
    let (vqr, vqs) = basis.grad(&volume_points)?;

    if volume.len() < np {
        return Err(Error::InsufficientQuadrature(format!(
            "{} volume points for {} basis functions",
            volume.len(),
            np
        )));
    }
    let wvq = DMatrix::from_fn(vq.nrows(), np, |r, c| wq[r] * vq[(r, c)]);
    let mass = vq.transpose() * &wvq;
    let mass = 0.5 * (&mass + mass.transpose());
    let mass_chol = cholesky_checked(&mass)?;
    let pq = mass_chol.solve(&wvq.transpose());
    let extrap = &vf * &pq;

    let dmat = modal_derivatives(&basis)?;

    let bdiag = [0, 1].map(|i| wf.component_mul(&nhat[i]));
    let q = [&vqr, &vqs].map(|vg| {
        let mut m = vg * &pq;
        for (r, w) in wq.iter().enumerate() {
            m.row_mut(r).scale_mut(*w);
        }
        m
    });
    let qn = [0, 1].map(|i| crate::sbp::hybridized_blocks(&q[i], &extrap, &bdiag[i]));
    let qn_skew = [0, 1].map(|i| crate::sbp::skew_hybridized_blocks(&q[i], &extrap, &bdiag[i]));

    Ok(ReferenceOperators {
        basis,
        volume_rule: volume.clone(),
        surface_rule: surface.clone(),
        faces,
        volume_points,
        surface_points,
        wq,
        wf,
        nhat,
        vq,
        vf,
        vq_grad: [vqr, vqs],
        dmat,
        mass,
        mass_chol,
        pq,
        extrap,
        bdiag,
        q,
        qn,
        qn_skew,
    })
}

/// Cholesky factorization that also rejects numerically singular matrices.
pub(crate) fn cholesky_checked(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m.clone()).ok_or_else(|| {
        Error::InsufficientQuadrature("mass matrix is not positive definite".into())
    })?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..m.nrows()).map(|i| l[(i, i)]).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || (min / max).powi(2) < 1e-12 {
        return Err(Error::InsufficientQuadrature(format!(
            "mass matrix is numerically singular (pivot ratio {:e})",
            (min / max).powi(2)
        )));
    }
    Ok(chol)
}

/// Modal differentiation matrices computed with an exact rule.
fn modal_derivatives(basis: &Basis) -> Result<[DMatrix<f64>; 2]> {
    let n = basis.degree;
    let rule = match basis.kind {
        ElementKind::Triangle => quadrature::triangle_volume_rule(2 * n)?,
        ElementKind::Quad => tensor_rule_2d(&gauss_1d(n + 1)?),
    };
    let v = basis.eval(&rule.points)?;
    let (vr, vs) = basis.grad(&rule.points)?;
    let wv = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| rule.weights[r] * v[(r, c)]);
    let m = v.transpose() * &wv;
    let chol = Cholesky::new(m).expect("exact mass matrix is positive definite");
    Ok([vr, vs].map(|g| chol.solve(&(wv.transpose() * g))))
}
