//! Structured periodic meshes of triangles, quads, or both, with an
//! optional polynomial warp and the resulting geometric factors.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::{gll_1d, ElementKind};
use crate::ref_elem::{Basis, OperatorSet, ReferenceOperators};

/// Element layout of a structured mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Triangle,
    Quad,
    /// Quads in the left half of the columns, split cells on the right.
    Hybrid,
}

impl MeshKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tri" | "triangle" => Some(MeshKind::Triangle),
            "quad" => Some(MeshKind::Quad),
            "hybrid" => Some(MeshKind::Hybrid),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Triangle => "tri",
            MeshKind::Quad => "quad",
            MeshKind::Hybrid => "hybrid",
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Domain { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

#[derive(Clone, Debug)]
pub struct Element {
    pub kind: ElementKind,
    /// Vertices in counter-clockwise order, matching the reference element.
    pub vertices: Vec<[f64; 2]>,
}

impl Element {
    /// Straight-sided area.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        0.5 * (0..n)
            .map(|a| {
                let b = (a + 1) % n;
                v[a][0] * v[b][1] - v[b][0] * v[a][1]
            })
            .sum::<f64>()
    }

    /// Affine (triangle) or bilinear (quad) map from reference coordinates.
    pub fn map_point(&self, p: [f64; 2]) -> [f64; 2] {
        let v = &self.vertices;
        let [r, s] = p;
        match self.kind {
            ElementKind::Triangle => {
                let (l2, l3) = (0.5 * (1.0 + r), 0.5 * (1.0 + s));
                let l1 = 1.0 - l2 - l3;
                [0, 1].map(|d| l1 * v[0][d] + l2 * v[1][d] + l3 * v[2][d])
            }
            ElementKind::Quad => {
                let w = [
                    0.25 * (1.0 - r) * (1.0 - s),
                    0.25 * (1.0 + r) * (1.0 - s),
                    0.25 * (1.0 + r) * (1.0 + s),
                    0.25 * (1.0 - r) * (1.0 + s),
                ];
                [0, 1].map(|d| (0..4).map(|k| w[k] * v[k][d]).sum())
            }
        }
    }

    fn face_midpoint(&self, f: usize) -> [f64; 2] {
        let (a, b) = self.kind.face_vertices(f);
        let (a, b) = (self.vertices[a], self.vertices[b]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

/// The face on the other side of an element face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceLink {
    pub element: usize,
    pub face: usize,
    /// Translation taking the neighbor face onto this face (nonzero across
    /// periodic boundaries).
    pub shift: [f64; 2],
    /// Whether the neighbor traverses the shared face in the opposite
    /// direction. Always true for conforming counter-clockwise elements.
    pub reversed: bool,
}

#[derive(Clone, Debug)]
pub struct MeshTopology {
    pub kind: MeshKind,
    pub domain: Domain,
    pub nx: usize,
    pub ny: usize,
    pub elements: Vec<Element>,
    /// `neighbors[k][f]` is the face matched with face `f` of element `k`.
    pub neighbors: Vec<Vec<FaceLink>>,
}

impl MeshTopology {
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn kinds(&self) -> Vec<ElementKind> {
        let mut k = Vec::new();
        for kind in [ElementKind::Triangle, ElementKind::Quad] {
            if self.elements.iter().any(|e| e.kind == kind) {
                k.push(kind);
            }
        }
        k
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    /// Number of (element, face) pairs, each matched with exactly one other.
    pub fn num_face_links(&self) -> usize {
        self.neighbors.iter().map(|n| n.len()).sum()
    }

    /// Plain-text listing of elements and face adjacency.
    pub fn write_dump(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "# mesh {} {}x{} on [{}, {}] x [{}, {}]", self.kind.name(), self.nx, self.ny,
            self.domain.x0, self.domain.x1, self.domain.y0, self.domain.y1)?;
        writeln!(w, "elements {}", self.num_elements())?;
        for (k, e) in self.elements.iter().enumerate() {
            write!(w, "{k} {}", e.kind.name())?;
            for v in &e.vertices {
                write!(w, " {:.12} {:.12}", v[0], v[1])?;
            }
            writeln!(w)?;
        }
        writeln!(w, "faces {}", self.num_face_links())?;
        for (k, links) in self.neighbors.iter().enumerate() {
            for (f, l) in links.iter().enumerate() {
                writeln!(w, "{k} {f} -> {} {} shift {} {} {}", l.element, l.face, l.shift[0], l.shift[1],
                    if l.reversed { "reversed" } else { "aligned" })?;
            }
        }
        Ok(())
    }
}

/// Uniform periodic mesh of `nx × ny` cells.
///
/// Split cells use the diagonal from the lower-left to the upper-right
/// corner.
pub fn build_uniform_mesh(kind: MeshKind, nx: usize, ny: usize, domain: Domain) -> Result<MeshTopology> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("mesh needs at least one cell in each direction".into()));
    }
    if !(domain.width() > 0.0 && domain.height() > 0.0) {
        return Err(Error::InvalidArgument(format!("degenerate domain {domain:?}")));
    }
    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;
    let mut elements = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let xa = domain.x0 + i as f64 * hx;
            let xb = if i + 1 == nx { domain.x1 } else { domain.x0 + (i + 1) as f64 * hx };
            let ya = domain.y0 + j as f64 * hy;
            let yb = if j + 1 == ny { domain.y1 } else { domain.y0 + (j + 1) as f64 * hy };
            let split = match kind {
                MeshKind::Triangle => true,
                MeshKind::Quad => false,
                MeshKind::Hybrid => i >= nx / 2,
            };
            if split {
                elements.push(Element { kind: ElementKind::Triangle, vertices: vec![[xa, ya], [xb, ya], [xb, yb]] });
                elements.push(Element { kind: ElementKind::Triangle, vertices: vec![[xa, ya], [xb, yb], [xa, yb]] });
            } else {
                elements.push(Element {
                    kind: ElementKind::Quad,
                    vertices: vec![[xa, ya], [xb, ya], [xb, yb], [xa, yb]],
                });
            }
        }
    }

    // face midpoints lie on the half-cell lattice
    let key = |m: [f64; 2]| -> (i64, i64) {
        let a = ((m[0] - domain.x0) / (0.5 * hx)).round() as i64;
        let b = ((m[1] - domain.y0) / (0.5 * hy)).round() as i64;
        (a.rem_euclid(2 * nx as i64), b.rem_euclid(2 * ny as i64))
    };
    let mut buckets: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    for (k, e) in elements.iter().enumerate() {
        for f in 0..e.kind.num_faces() {
            buckets.entry(key(e.face_midpoint(f))).or_default().push((k, f));
        }
    }
    let mut neighbors: Vec<Vec<Option<FaceLink>>> =
        elements.iter().map(|e| vec![None; e.kind.num_faces()]).collect();
    for (_, faces) in buckets {
        if faces.len() != 2 {
            return Err(Error::InvalidArgument(format!("unmatched faces {faces:?}")));
        }
        let [(k1, f1), (k2, f2)] = [faces[0], faces[1]];
        let (m1, m2) = (elements[k1].face_midpoint(f1), elements[k2].face_midpoint(f2));
        let d = [m1[0] - m2[0], m1[1] - m2[1]];
        neighbors[k1][f1] = Some(FaceLink { element: k2, face: f2, shift: d, reversed: true });
        neighbors[k2][f2] = Some(FaceLink { element: k1, face: f1, shift: [-d[0], -d[1]], reversed: true });
    }
    let neighbors = neighbors
        .into_iter()
        .map(|v| v.into_iter().map(|l| l.expect("every face is matched")).collect())
        .collect();
    Ok(MeshTopology { kind, domain, nx, ny, elements, neighbors })
}

/// Interpolation nodes for a degree-`n` mapping.
///
/// Quads use tensor GLL nodes. Triangles use nodes whose edge restrictions
/// are the 1D GLL nodes, so triangle and quad edges are interpolated
/// identically.
pub fn mapping_nodes(kind: ElementKind, n: usize) -> Result<Vec<[f64; 2]>> {
    let z = gll_1d(n + 1)?.nodes();
    Ok(match kind {
        ElementKind::Quad => {
            let mut p = Vec::with_capacity((n + 1) * (n + 1));
            for &s in &z {
                for &r in &z {
                    p.push([r, s]);
                }
            }
            p
        }
        ElementKind::Triangle => {
            let t: Vec<f64> = z.iter().map(|x| 0.5 * (1.0 + x)).collect();
            let mut p = Vec::new();
            for j in 0..=n {
                for i in 0..=(n - j) {
                    let k = n - i - j;
                    let l2 = (1.0 + 2.0 * t[i] - t[j] - t[k]) / 3.0;
                    let l3 = (1.0 + 2.0 * t[j] - t[i] - t[k]) / 3.0;
                    p.push([2.0 * l2 - 1.0, 2.0 * l3 - 1.0]);
                }
            }
            p
        }
    })
}

/// Apply the smooth warp on the domain rescaled to `[-1, 1]²`.
///
/// The warp fixes the domain boundary pointwise, so periodic faces stay
/// matched.
pub fn warp_point(domain: &Domain, alpha: f64, p: [f64; 2]) -> [f64; 2] {
    use std::f64::consts::PI;
    let x = 2.0 * (p[0] - domain.x0) / domain.width() - 1.0;
    let y = 2.0 * (p[1] - domain.y0) / domain.height() - 1.0;
    let xw = x + alpha * (0.5 * PI * x).cos() * (PI * y).sin();
    let yw = y + alpha * (PI * x).sin() * (0.5 * PI * y).cos();
    [
        domain.x0 + 0.5 * (xw + 1.0) * domain.width(),
        domain.y0 + 0.5 * (yw + 1.0) * domain.height(),
    ]
}

/// Per-element polynomial mapping of degree `ngeo`, stored as modal
/// coefficients of `x` and `y`.
#[derive(Clone, Debug)]
pub struct CurvedMapping {
    pub ngeo: usize,
    pub alpha: f64,
    pub coeffs: Vec<[DVector<f64>; 2]>,
}

impl CurvedMapping {
    pub fn basis(&self, kind: ElementKind) -> Basis {
        Basis::new(kind, self.ngeo)
    }
}

/// Interpolate the warped geometry with degree-`ngeo` polynomials.
///
/// `alpha = 0` gives the straight-sided (bilinear for quads) geometry.
pub fn warp_mesh(mesh: &MeshTopology, alpha: f64, ngeo: usize) -> Result<CurvedMapping> {
    if ngeo == 0 {
        return Err(Error::InvalidArgument("mapping degree must be at least 1".into()));
    }
    let mut inv = HashMap::new();
    let mut nodes = HashMap::new();
    for kind in mesh.kinds() {
        let b = Basis::new(kind, ngeo);
        let pts = mapping_nodes(kind, ngeo)?;
        let v = b.eval(&pts)?;
        let lu = v.lu();
        let vinv = lu.try_inverse().ok_or_else(|| {
            Error::InvalidArgument(format!("mapping nodes not unisolvent at degree {ngeo}"))
        })?;
        inv.insert(kind, vinv);
        nodes.insert(kind, pts);
    }
    let mut coeffs = Vec::with_capacity(mesh.num_elements());
    for e in &mesh.elements {
        let pts = &nodes[&e.kind];
        let phys: Vec<[f64; 2]> =
            pts.iter().map(|&p| warp_point(&mesh.domain, alpha, e.map_point(p))).collect();
        let vinv: &DMatrix<f64> = &inv[&e.kind];
        coeffs.push([0, 1].map(|d| vinv * DVector::from_iterator(phys.len(), phys.iter().map(|p| p[d]))));
    }
    let mapping = CurvedMapping { ngeo, alpha, coeffs };
    // reject inverted elements using a rule finer than the mapping
    for (k, e) in mesh.elements.iter().enumerate() {
        let check = match e.kind {
            ElementKind::Triangle => crate::quadrature::triangle_volume_rule(2 * ngeo)?,
            ElementKind::Quad => crate::quadrature::tensor_rule_2d(&crate::quadrature::gauss_1d(ngeo + 1)?),
        };
        let (_, jac) = mapping_derivatives(&mapping, k, e.kind, &check.points)?;
        if let Some(j) = jac.iter().find(|&&j| j <= 0.0) {
            return Err(Error::InvertedElement { element: k, jacobian: *j });
        }
    }
    Ok(mapping)
}

/// Physical positions and `J` of element `k` at reference points.
pub fn map_points(
    mapping: &CurvedMapping,
    k: usize,
    kind: ElementKind,
    pts: &[[f64; 2]],
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let (d, jac) = mapping_derivatives(mapping, k, kind, pts)?;
    Ok((d.iter().map(|t| [t[0], t[1]]).collect(), jac))
}

/// Positions, `[x_r, x_s, y_r, y_s]`, and `J` at reference points.
fn mapping_derivatives(
    mapping: &CurvedMapping,
    k: usize,
    kind: ElementKind,
    pts: &[[f64; 2]],
) -> Result<(Vec<[f64; 6]>, Vec<f64>)> {
    let b = mapping.basis(kind);
    let v = b.eval(pts)?;
    let (dr, ds) = b.grad(pts)?;
    let [cx, cy] = &mapping.coeffs[k];
    let (x, y) = (&v * cx, &v * cy);
    let (xr, xs, yr, ys) = (&dr * cx, &ds * cx, &dr * cy, &ds * cy);
    let mut out = Vec::with_capacity(pts.len());
    let mut jac = Vec::with_capacity(pts.len());
    for q in 0..pts.len() {
        out.push([x[q], y[q], xr[q], xs[q], yr[q], ys[q]]);
        jac.push(xr[q] * ys[q] - xs[q] * yr[q]);
    }
    Ok((out, jac))
}

/// Geometric terms for one element at its volume and surface points.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    pub element: usize,
    pub kind: ElementKind,
    /// Physical coordinates at volume then surface points.
    pub xy: Vec<[f64; 2]>,
    /// `G_ij = J ∂x̂_j/∂x_i` at volume then surface points.
    pub g: [[DVector<f64>; 2]; 2],
    /// `J` at volume then surface points.
    pub jac: DVector<f64>,
    /// Scaled outward normals `n_i J_f` at surface points.
    pub nj: [DVector<f64>; 2],
}

impl ElementGeometry {
    /// `Σ_q w_q J_q`.
    pub fn volume(&self, ops: &ReferenceOperators) -> f64 {
        (0..ops.nq()).map(|q| ops.wq[q] * self.jac[q]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct GeometricFactors {
    pub ngeo: usize,
    pub elements: Vec<ElementGeometry>,
}

/// Evaluate the mapping and its metric terms at the quadrature points of
/// each element's reference operators.
pub fn geometric_factors(
    mesh: &MeshTopology,
    mapping: &CurvedMapping,
    ops: &OperatorSet,
) -> Result<GeometricFactors> {
    let mut elements = Vec::with_capacity(mesh.num_elements());
    for (k, e) in mesh.elements.iter().enumerate() {
        let op = ops.get(e.kind);
        let pts = op.hybrid_points();
        let (d, jac) = mapping_derivatives(mapping, k, e.kind, &pts)?;
        if let Some(&j) = jac[..op.nq()].iter().find(|&&j| j <= 0.0) {
            return Err(Error::InvertedElement { element: k, jacobian: j });
        }
        let n = pts.len();
        let col = |f: &dyn Fn(&[f64; 6]) -> f64| DVector::from_iterator(n, d.iter().map(f));
        let g = [
            [col(&|t| t[5]), col(&|t| -t[4])],
            [col(&|t| -t[3]), col(&|t| t[2])],
        ];
        let nq = op.nq();
        let nj = [0, 1].map(|i| {
            DVector::from_fn(op.nfq(), |p, _| {
                g[i][0][nq + p] * op.nhat[0][p] + g[i][1][nq + p] * op.nhat[1][p]
            })
        });
        elements.push(ElementGeometry {
            element: k,
            kind: e.kind,
            xy: d.iter().map(|t| [t[0], t[1]]).collect(),
            g,
            jac: DVector::from_vec(jac),
            nj,
        });
    }
    Ok(GeometricFactors { ngeo: mapping.ngeo, elements })
}

/// For each element and surface point, the matching `(element, surface
/// point)` on the other side.
pub type SurfaceMap = Vec<Vec<(usize, usize)>>;

/// Match surface points across faces by physical position.
pub fn connect_surface_points(
    mesh: &MeshTopology,
    geo: &GeometricFactors,
    ops: &OperatorSet,
) -> Result<SurfaceMap> {
    let h = (mesh.domain.width() / mesh.nx as f64).min(mesh.domain.height() / mesh.ny as f64);
    let tol = 1e-8 * h;
    let mut map = Vec::with_capacity(mesh.num_elements());
    for (k, e) in mesh.elements.iter().enumerate() {
        let op = ops.get(e.kind);
        let nfp = op.nfp();
        let mut m = Vec::with_capacity(op.nfq());
        for (f, link) in mesh.neighbors[k].iter().enumerate() {
            let nop = ops.get(mesh.elements[link.element].kind);
            if nop.nfp() != nfp {
                return Err(Error::InvalidArgument(format!(
                    "face {f} of element {k} has {nfp} points, neighbor has {}",
                    nop.nfp()
                )));
            }
            let nxy = &geo.elements[link.element].xy;
            for p in 0..nfp {
                let x = geo.elements[k].xy[op.nq() + f * nfp + p];
                let cand = (0..nfp).find(|&q| {
                    let y = nxy[nop.nq() + link.face * nfp + q];
                    (y[0] + link.shift[0] - x[0]).abs() < tol && (y[1] + link.shift[1] - x[1]).abs() < tol
                });
                let q = cand.ok_or_else(|| {
                    Error::InvalidArgument(format!("face {f} of element {k} is not watertight"))
                })?;
                m.push((link.element, link.face * nfp + q));
            }
        }
        map.push(m);
    }
    Ok(map)
}

/// `max |n J_f (self) + n J_f (neighbor)|` over all matched surface points.
pub fn watertight_residual(geo: &GeometricFactors, map: &SurfaceMap) -> f64 {
    let mut r: f64 = 0.0;
    for (k, m) in map.iter().enumerate() {
        for (p, &(kn, pn)) in m.iter().enumerate() {
            for i in 0..2 {
                r = r.max((geo.elements[k].nj[i][p] + geo.elements[kn].nj[i][pn]).abs());
            }
        }
    }
    r
}

/// `Σ_k Σ_q w_q J_q`.
pub fn total_volume(mesh: &MeshTopology, geo: &GeometricFactors, ops: &OperatorSet) -> f64 {
    mesh.elements
        .iter()
        .zip(&geo.elements)
        .map(|(e, g)| g.volume(ops.get(e.kind)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ref_elem::QuadratureOption;

    fn unit() -> Domain {
        Domain::new(0.0, 1.0, 0.0, 1.0)
    }

    #[test]
    fn element_counts() {
        let m = build_uniform_mesh(MeshKind::Quad, 2, 2, unit()).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.num_face_links(), 16);
        let m = build_uniform_mesh(MeshKind::Hybrid, 2, 2, unit()).unwrap();
        assert_eq!(m.count(ElementKind::Quad), 2);
        assert_eq!(m.count(ElementKind::Triangle), 4);
        let m = build_uniform_mesh(MeshKind::Triangle, 1, 1, unit()).unwrap();
        assert_eq!(m.num_elements(), 2);
        // the diagonal is shared, everything else wraps around
        assert_eq!((m.neighbors[0][2].element, m.neighbors[0][2].face), (1, 0));
        assert_eq!(m.neighbors[0][2].shift, [0.0, 0.0]);
        assert_eq!(m.neighbors[0][0].element, 1);
        assert_eq!(m.neighbors[0][0].shift, [0.0, -1.0]);
    }

    #[test]
    fn adjacency_is_an_involution() {
        for kind in [MeshKind::Triangle, MeshKind::Quad, MeshKind::Hybrid] {
            let m = build_uniform_mesh(kind, 4, 3, Domain::new(-1.0, 2.0, 0.0, 1.5)).unwrap();
            for (k, links) in m.neighbors.iter().enumerate() {
                for (f, l) in links.iter().enumerate() {
                    let back = m.neighbors[l.element][l.face];
                    assert_eq!((back.element, back.face), (k, f));
                    assert_eq!(back.shift, [-l.shift[0], -l.shift[1]]);
                }
            }
            let area: f64 = m.elements.iter().map(|e| e.area()).sum();
            assert!((area - 4.5).abs() < 1e-12);
            assert!(m.elements.iter().all(|e| e.area() > 0.0));
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(build_uniform_mesh(MeshKind::Quad, 0, 2, unit()).is_err());
        assert!(build_uniform_mesh(MeshKind::Quad, 2, 2, Domain::new(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn triangle_mapping_nodes_have_gll_edges() {
        let n = 4;
        let z = gll_1d(n + 1).unwrap().nodes();
        let p = mapping_nodes(ElementKind::Triangle, n).unwrap();
        assert_eq!(p.len(), 15);
        let bottom: Vec<f64> = p.iter().filter(|q| (q[1] + 1.0).abs() < 1e-14).map(|q| q[0]).collect();
        assert_eq!(bottom.len(), n + 1);
        for (a, b) in bottom.iter().zip(&z) {
            assert!((a - b).abs() < 1e-14);
        }
        let hyp = p.iter().filter(|q| (q[0] + q[1]).abs() < 1e-14).count();
        assert_eq!(hyp, n + 1);
    }

    #[test]
    fn warp_fixes_the_boundary() {
        let d = Domain::new(0.0, 15.0, -0.5, 0.5);
        for &p in &[[0.0, 0.1], [15.0, -0.3], [3.0, -0.5], [7.0, 0.5]] {
            let w = warp_point(&d, 0.125, p);
            assert!((w[0] - p[0]).abs() < 1e-13 && (w[1] - p[1]).abs() < 1e-13);
        }
        let w = warp_point(&d, 0.125, [5.0, 0.2]);
        assert!((w[0] - 5.0).abs() > 1e-3);
    }

    fn geometry(kind: MeshKind, alpha: f64, ngeo: usize, n: usize) -> (MeshTopology, OperatorSet, GeometricFactors) {
        let m = build_uniform_mesh(kind, 4, 4, Domain::new(0.0, 2.0, -1.0, 1.0)).unwrap();
        let ops = OperatorSet::from_option(QuadratureOption::GaussGauss, n, &m.kinds()).unwrap();
        let map = warp_mesh(&m, alpha, ngeo).unwrap();
        let geo = geometric_factors(&m, &map, &ops).unwrap();
        (m, ops, geo)
    }

    #[test]
    fn affine_geometry() {
        let (m, ops, geo) = geometry(MeshKind::Quad, 0.0, 1, 2);
        let g = &geo.elements[3];
        // 0.5 × 0.5 cells: x_r = y_s = 1/4
        assert!(g.jac.iter().all(|j| (j - 0.0625).abs() < 1e-14));
        assert!(g.g[0][0].iter().all(|v| (v - 0.25).abs() < 1e-14));
        assert!(g.g[0][1].iter().all(|v| v.abs() < 1e-14));
        assert!((total_volume(&m, &geo, &ops) - 4.0).abs() < 1e-12);

        let (_, _, geo) = geometry(MeshKind::Triangle, 0.0, 1, 2);
        let a = 0.5 * 0.5 / 2.0 / 2.0;
        assert!(geo.elements[0].jac.iter().all(|j| (j - a).abs() < 1e-14));
    }

    #[test]
    fn normals_follow_from_metric_terms() {
        let (m, ops, geo) = geometry(MeshKind::Hybrid, 0.125, 3, 3);
        for (e, g) in m.elements.iter().zip(&geo.elements) {
            let op = ops.get(e.kind);
            for p in 0..op.nfq() {
                for i in 0..2 {
                    let nj = g.g[i][0][op.nq() + p] * op.nhat[0][p] + g.g[i][1][op.nq() + p] * op.nhat[1][p];
                    assert!((nj - g.nj[i][p]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn curved_hybrid_mesh_is_watertight() {
        for ngeo in 1..=4 {
            let (m, ops, geo) = geometry(MeshKind::Hybrid, 0.125, ngeo, 4);
            let map = connect_surface_points(&m, &geo, &ops).unwrap();
            assert!(watertight_residual(&geo, &map) < 1e-11, "ngeo {ngeo}");
            if ngeo >= 2 {
                assert!((total_volume(&m, &geo, &ops) - 4.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn surface_points_pair_up() {
        let (m, ops, geo) = geometry(MeshKind::Hybrid, 0.125, 2, 2);
        let map = connect_surface_points(&m, &geo, &ops).unwrap();
        for (k, pts) in map.iter().enumerate() {
            for (p, &(kn, pn)) in pts.iter().enumerate() {
                assert_eq!(map[kn][pn], (k, p));
            }
        }
    }

    #[test]
    fn dump_lists_every_element() {
        let m = build_uniform_mesh(MeshKind::Hybrid, 2, 1, unit()).unwrap();
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("elements 3"));
        assert!(s.contains("faces 10"));
    }
}
