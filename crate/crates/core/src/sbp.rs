//! Hybridized and skew-hybridized SBP operators, the derivative
//! approximation they induce, and their curved-element counterparts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::mesh::ElementGeometry;
use crate::quadrature::{face_rule, gauss_1d, tensor_rule_2d, triangle_volume_rule, ElementKind};
use crate::ref_elem::{cholesky_checked, Basis, ReferenceOperators};

/// `[[Q − ½EᵀBE, ½EᵀB], [−½BE, ½B]]`.
pub(crate) fn hybridized_blocks(q: &DMatrix<f64>, e: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let (nq, nf) = (q.nrows(), e.nrows());
    let be = scale_rows(e, b);
    let etbe = e.transpose() * &be;
    let mut qn = DMatrix::zeros(nq + nf, nq + nf);
    qn.view_mut((0, 0), (nq, nq)).copy_from(&(q - 0.5 * etbe));
    qn.view_mut((0, nq), (nq, nf)).copy_from(&(0.5 * be.transpose()));
    qn.view_mut((nq, 0), (nf, nq)).copy_from(&(-0.5 * &be));
    for j in 0..nf {
        qn[(nq + j, nq + j)] = 0.5 * b[j];
    }
    qn
}

/// `½[[Q − Qᵀ, EᵀB], [−BE, B]]`.
pub(crate) fn skew_hybridized_blocks(
    q: &DMatrix<f64>,
    e: &DMatrix<f64>,
    b: &DVector<f64>,
) -> DMatrix<f64> {
    let (nq, nf) = (q.nrows(), e.nrows());
    let be = scale_rows(e, b);
    let mut qn = DMatrix::zeros(nq + nf, nq + nf);
    qn.view_mut((0, 0), (nq, nq)).copy_from(&(0.5 * (q - q.transpose())));
    qn.view_mut((0, nq), (nq, nf)).copy_from(&(0.5 * be.transpose()));
    qn.view_mut((nq, 0), (nf, nq)).copy_from(&(-0.5 * &be));
    for j in 0..nf {
        qn[(nq + j, nq + j)] = 0.5 * b[j];
    }
    qn
}

fn scale_rows(m: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (r, s) in d.iter().enumerate() {
        out.row_mut(r).scale_mut(*s);
    }
    out
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Hybridized operator `Q_N^i`.
pub fn assemble_hybridized(ops: &ReferenceOperators, i: usize) -> DMatrix<f64> {
    ops.qn[i].clone()
}

/// Skew-hybridized operator `Q̃_N^i`.
pub fn assemble_skew_hybridized(ops: &ReferenceOperators, i: usize) -> DMatrix<f64> {
    ops.qn_skew[i].clone()
}

/// `max |Q^i − EᵀB^iE + (Q^i)ᵀ|`; zero when the generalized SBP property holds.
pub fn gsbp_residual(ops: &ReferenceOperators, i: usize) -> f64 {
    let q = &ops.q[i];
    let etbe = ops.extrap.transpose() * scale_rows(&ops.extrap, &ops.bdiag[i]);
    max_abs(&(q - etbe + q.transpose()))
}

/// `max |Q̃_N^i + (Q̃_N^i)ᵀ − B_N^i|`.
pub fn sbp_residual(ops: &ReferenceOperators, i: usize) -> f64 {
    let qs = &ops.qn_skew[i];
    let bn = DMatrix::from_diagonal(&ops.bn_diag(i));
    max_abs(&(qs + qs.transpose() - bn))
}

/// `max |Q̃_N^i 1|`.
pub fn row_sum_residual(ops: &ReferenceOperators, i: usize) -> f64 {
    let ones = DVector::repeat(ops.nh(), 1.0);
    (&ops.qn_skew[i] * ones).amax()
}

/// `max |(Q^i)ᵀ1 − EᵀB^i1|`.
pub fn fundamental_theorem_residual(ops: &ReferenceOperators, i: usize) -> f64 {
    let lhs = ops.q[i].transpose() * DVector::repeat(ops.nq(), 1.0);
    let rhs = ops.extrap.transpose() * &ops.bdiag[i];
    (lhs - rhs).amax()
}

/// `max |Q̃_N^i − Q_N^i|`.
pub fn skew_difference(ops: &ReferenceOperators, i: usize) -> f64 {
    max_abs(&(&ops.qn_skew[i] - &ops.qn[i]))
}

/// Modal coefficients of the approximation to `∂u/∂x̂_i` induced by
/// `Q̃_N^i`, given `u` at volume then surface points.
pub fn approx_derivative(ops: &ReferenceOperators, i: usize, u: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != ops.nh() {
        return Err(Error::InvalidArgument(format!(
            "expected {} values, got {}",
            ops.nh(),
            u.len()
        )));
    }
    let r = ops.vh().transpose() * (&ops.qn_skew[i] * u);
    Ok(ops.mass_chol.solve(&r))
}

/// Physical-element operators.
#[derive(Clone, Debug)]
pub struct CurvedOperators {
    /// `Q_k^i`, of size `N_h × N_h`.
    pub qk: [DMatrix<f64>; 2],
    pub mass: DMatrix<f64>,
    pub mass_chol: Cholesky<f64, Dyn>,
    /// `P_q^k = (M^k)⁻¹ V_qᵀ W diag(J)`.
    pub pqk: DMatrix<f64>,
}

impl CurvedOperators {
    /// `max |Q_k^i 1|` over both directions.
    pub fn gcl_residual(&self) -> f64 {
        let n = self.qk[0].nrows();
        let ones = DVector::repeat(n, 1.0);
        self.qk.iter().map(|q| (q * &ones).amax()).fold(0.0, f64::max)
    }
}

/// Assemble `Q_k^i = ½ Σ_j (diag(G_ij) Q̃^j + Q̃^j diag(G_ij))`, the curved
/// mass matrix, and the curved projection.
pub fn assemble_curved(ops: &ReferenceOperators, geo: &ElementGeometry) -> Result<CurvedOperators> {
    let nh = ops.nh();
    let nq = ops.nq();
    if let Some(k) = (0..nq).find(|&q| geo.jac[q] <= 0.0) {
        return Err(Error::InvertedElement { element: geo.element, jacobian: geo.jac[k] });
    }
    let qk = [0, 1].map(|i| {
        let mut m = DMatrix::zeros(nh, nh);
        for j in 0..2 {
            let g = &geo.g[i][j];
            let qs = &ops.qn_skew[j];
            for c in 0..nh {
                for r in 0..nh {
                    m[(r, c)] += 0.5 * (g[r] + g[c]) * qs[(r, c)];
                }
            }
        }
        m
    });
    let wj: DVector<f64> = ops.wq.component_mul(&geo.jac.rows(0, nq).into_owned());
    let wjv = scale_rows(&ops.vq, &wj);
    let mass = ops.vq.transpose() * &wjv;
    let mass = 0.5 * (&mass + mass.transpose());
    let mass_chol = cholesky_checked(&mass).map_err(|_| Error::InvertedElement {
        element: geo.element,
        jacobian: geo.jac.min(),
    })?;
    let pqk = mass_chol.solve(&wjv.transpose());
    Ok(CurvedOperators { qk, mass, mass_chol, pqk })
}

/// Which parts of the quadrature accuracy assumption hold for a given `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assumption1Report {
    pub volume_ok: bool,
    pub surface_ok: bool,
    pub mass_ok: bool,
}

impl Assumption1Report {
    pub fn all(&self) -> bool {
        self.volume_ok && self.surface_ok && self.mass_ok
    }
}

/// Check the accuracy assumption for the polynomial `v` given by modal
/// coefficients in `v_basis`.
///
/// Quadrature sums of `∫ ∂u/∂x̂_j v` and `∫_f u v n̂_j` over all basis
/// functions `u` are compared with a reference rule exact to degree `4N`.
pub fn check_assumption1(
    ops: &ReferenceOperators,
    v_basis: Basis,
    v_coeffs: &DVector<f64>,
) -> Result<Assumption1Report> {
    let kind = ops.kind();
    let n = ops.degree().max(v_basis.degree);
    let tol = 1e-10;

    let mass_ok = cholesky_checked(&ops.mass).is_ok();

    let (ref_vol, ref_line) = match kind {
        ElementKind::Triangle => (triangle_volume_rule(4 * n)?, gauss_1d(2 * n + 1)?),
        ElementKind::Quad => {
            let l = gauss_1d(2 * n + 1)?;
            (tensor_rule_2d(&l), l)
        }
    };

    let vol_integrals = |pts: &[[f64; 2]], w: &[f64]| -> Result<[DVector<f64>; 2]> {
        let vv = v_basis.eval(pts)? * v_coeffs;
        let (gr, gs) = ops.basis.grad(pts)?;
        let wv = DVector::from_iterator(pts.len(), w.iter().zip(vv.iter()).map(|(a, b)| a * b));
        Ok([gr.transpose() * &wv, gs.transpose() * wv])
    };
    let run = vol_integrals(&ops.volume_points, ops.wq.as_slice())?;
    let exact = vol_integrals(&ref_vol.points, &ref_vol.weights)?;
    let volume_ok = (0..2).all(|j| close(&run[j], &exact[j], tol));

    let mut surface_ok = true;
    for f in 0..kind.num_faces() {
        let face_integrals = |rule: &crate::quadrature::FaceRule| -> Result<[DVector<f64>; 2]> {
            let vv = v_basis.eval(&rule.points)? * v_coeffs;
            let u = ops.basis.eval(&rule.points)?;
            Ok([0, 1].map(|j| {
                let w = DVector::from_iterator(
                    rule.points.len(),
                    (0..rule.points.len()).map(|p| rule.weights[p] * rule.normals[p][j] * vv[p]),
                );
                u.transpose() * w
            }))
        };
        let run = face_integrals(&ops.faces[f])?;
        let exact = face_integrals(&face_rule(kind, f, &ref_line)?)?;
        surface_ok &= (0..2).all(|j| close(&run[j], &exact[j], tol));
    }
    Ok(Assumption1Report { volume_ok, surface_ok, mass_ok })
}

fn close(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    let scale = b.amax().max(1.0);
    (a - b).amax() <= tol * scale
}
