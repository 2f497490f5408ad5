//! Gauss and Gauss–Lobatto rules in 1D, tensor and collapsed-coordinate
//! volume rules in 2D, and face rules lifted onto element boundaries.
//!
//! Reference domains: the bi-unit interval, the quad `[-1,1]^2`, and the
//! triangle with vertices `(-1,-1), (1,-1), (-1,1)`.

use crate::error::{Error, Result};
use crate::poly;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Element shapes supported by the reference-element machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Triangle,
    Quad,
}

impl ElementKind {
    pub fn num_faces(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Quad => 4,
        }
    }

    pub fn num_vertices(self) -> usize {
        self.num_faces()
    }

    /// Area of the reference element.
    pub fn reference_measure(self) -> f64 {
        match self {
            ElementKind::Triangle => 2.0,
            ElementKind::Quad => 4.0,
        }
    }

    /// Reference vertices in counter-clockwise order.
    pub fn reference_vertices(self) -> &'static [[f64; 2]] {
        match self {
            ElementKind::Triangle => &[[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]],
            ElementKind::Quad => &[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
        }
    }

    /// Face `f` runs counter-clockwise from vertex `f` to vertex `f + 1`.
    pub fn face_vertices(self, face: usize) -> (usize, usize) {
        let nv = self.num_vertices();
        (face, (face + 1) % nv)
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Triangle => "tri",
            ElementKind::Quad => "quad",
        }
    }
}

/// How a rule was generated; used for reporting and for option matching.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleFamily {
    Gauss,
    GaussLobatto,
    GaussJacobi,
    Tensor,
    Collapsed,
}

/// Points and positive weights on a reference domain of dimension `D`,
/// together with the polynomial degree the rule integrates exactly.
///
/// For tensor rules `exactness` is the degree of the underlying 1D rule.
#[derive(Clone, Debug)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
    pub family: RuleFamily,
}

pub type Rule1d = QuadratureRule<1>;
pub type Rule2d = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; D]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

impl Rule1d {
    pub fn nodes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }
}

/// Newton iteration with deflation for the `n` zeros of the normalized
/// Jacobi polynomial `P_n^{(a,b)}`, returned in ascending order.
fn jacobi_zeros(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut roots: Vec<f64> = Vec::with_capacity(n);
    for k in 0..n {
        // Chebyshev–Gauss guess, averaged with the previous root as in
        // the classical deflation scheme.
        let mut x = -(((2 * k + 1) as f64) * std::f64::consts::PI / (2 * n) as f64).cos();
        if k > 0 {
            x = 0.5 * (x + roots[k - 1]);
        }
        for _ in 0..NEWTON_MAX_ITER {
            let p = poly::jacobi(x, a, b, n);
            let dp = poly::jacobi_grad(x, a, b, n);
            let s: f64 = roots.iter().map(|r| 1.0 / (x - r)).sum();
            let delta = p / (dp - s * p);
            x -= delta;
            if delta.abs() < NEWTON_TOL {
                break;
            }
        }
        roots.push(x);
    }
    // polish without deflation
    for x in roots.iter_mut() {
        for _ in 0..3 {
            let p = poly::jacobi(*x, a, b, n);
            let dp = poly::jacobi_grad(*x, a, b, n);
            if dp == 0.0 {
                break;
            }
            let delta = p / dp;
            *x -= delta;
            if delta.abs() < NEWTON_TOL {
                break;
            }
        }
    }
    roots.sort_by(|p, q| p.partial_cmp(q).unwrap());
    roots
}

/// Christoffel weights for the weight `(1-x)^a (1+x)^b` at the zeros of
/// the degree-`n` orthogonal polynomial.
fn christoffel_weights(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = nodes.len();
    nodes
        .iter()
        .map(|&x| {
            let p = poly::jacobi_all(x, a, b, n - 1);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect()
}

fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// `n`-point Gauss–Legendre rule, exact for degree `2n - 1`.
pub fn gauss_1d(n: usize) -> Result<Rule1d> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss rule needs at least one point".into()));
    }
    let mut nodes = jacobi_zeros(0.0, 0.0, n);
    let mut weights = christoffel_weights(&nodes, 0.0, 0.0);
    symmetrize(&mut nodes, &mut weights);
    Ok(Rule1d {
        points: nodes.into_iter().map(|x| [x]).collect(),
        weights,
        exactness: 2 * n - 1,
        family: RuleFamily::Gauss,
    })
}

/// `n`-point Gauss–Legendre–Lobatto rule, exact for degree `2n - 3`.
pub fn gll_1d(n: usize) -> Result<Rule1d> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "Gauss-Lobatto rule needs at least two points".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(n);
    nodes.push(-1.0);
    // interior nodes are the zeros of P'_{n-1}, i.e. of P^{(1,1)}_{n-2}
    if n > 2 {
        nodes.extend(jacobi_zeros(1.0, 1.0, n - 2));
    }
    nodes.push(1.0);
    let nm1 = (n - 1) as f64;
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (p, _) = poly::legendre_classical(x, n - 1);
            2.0 / (nm1 * (nm1 + 1.0) * p * p)
        })
        .collect();
    symmetrize(&mut nodes, &mut weights);
    Ok(Rule1d {
        points: nodes.into_iter().map(|x| [x]).collect(),
        weights,
        exactness: 2 * n - 3,
        family: RuleFamily::GaussLobatto,
    })
}

/// `n`-point Gauss–Jacobi rule for the weight `(1-x)^a (1+x)^b`.
pub fn gauss_jacobi_1d(n: usize, a: usize, b: usize) -> Result<Rule1d> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss-Jacobi rule needs at least one point".into()));
    }
    let (af, bf) = (a as f64, b as f64);
    let nodes = jacobi_zeros(af, bf, n);
    let weights = christoffel_weights(&nodes, af, bf);
    Ok(Rule1d {
        points: nodes.into_iter().map(|x| [x]).collect(),
        weights,
        exactness: 2 * n - 1,
        family: RuleFamily::GaussJacobi,
    })
}

/// Volume rule on the bi-unit triangle exact for total degree `degree`,
/// built from a collapsed (Duffy) map of a Gauss–Legendre by
/// Gauss–Jacobi(1,0) tensor rule.
pub fn triangle_volume_rule(degree: usize) -> Result<Rule2d> {
    let n = degree / 2 + 1;
    let ga = gauss_1d(n)?;
    let gb = gauss_jacobi_1d(n, 1, 0)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (pb, wb) in gb.points.iter().zip(&gb.weights) {
        for (pa, wa) in ga.points.iter().zip(&ga.weights) {
            let (a, b) = (pa[0], pb[0]);
            let r = 0.5 * (1.0 + a) * (1.0 - b) - 1.0;
            points.push([r, b]);
            weights.push(0.5 * wa * wb);
        }
    }
    Ok(Rule2d {
        points,
        weights,
        exactness: 2 * n - 1,
        family: RuleFamily::Collapsed,
    })
}

/// Tensor product of a 1D rule with itself on `[-1,1]^2`. The first
/// coordinate varies fastest.
pub fn tensor_rule_2d(rule: &Rule1d) -> Rule2d {
    let n = rule.len();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (py, wy) in rule.points.iter().zip(&rule.weights) {
        for (px, wx) in rule.points.iter().zip(&rule.weights) {
            points.push([px[0], py[0]]);
            weights.push(wx * wy);
        }
    }
    Rule2d {
        points,
        weights,
        exactness: rule.exactness,
        family: RuleFamily::Tensor,
    }
}

/// A 1D rule lifted onto one face of a reference element.
///
/// `weights` are the 1D weights; the face Jacobian `jacobian` is folded into
/// `normals`, which hold `n̂_i Ĵ_f` at each point.
#[derive(Clone, Debug)]
pub struct FaceRule {
    pub kind: ElementKind,
    pub face: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub jacobian: f64,
}

impl FaceRule {
    /// Weights against arc length on the reference face.
    pub fn measure_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w * self.jacobian).collect()
    }
}

pub fn face_rule(kind: ElementKind, face: usize, rule: &Rule1d) -> Result<FaceRule> {
    if face >= kind.num_faces() {
        return Err(Error::InvalidArgument(format!(
            "face index {face} out of range for {}",
            kind.name()
        )));
    }
    let verts = kind.reference_vertices();
    let (ia, ib) = kind.face_vertices(face);
    let (a, b) = (verts[ia], verts[ib]);
    let tangent = [0.5 * (b[0] - a[0]), 0.5 * (b[1] - a[1])];
    let jacobian = tangent[0].hypot(tangent[1]);
    // outward normal of a counter-clockwise boundary, scaled by Ĵ_f
    let scaled_normal = [tangent[1], -tangent[0]];
    let points = rule
        .points
        .iter()
        .map(|t| {
            let (s0, s1) = (0.5 * (1.0 - t[0]), 0.5 * (1.0 + t[0]));
            [s0 * a[0] + s1 * b[0], s0 * a[1] + s1 * b[1]]
        })
        .collect();
    Ok(FaceRule {
        kind,
        face,
        points,
        weights: rule.weights.clone(),
        normals: vec![scaled_normal; rule.len()],
        jacobian,
    })
}

/// Analytic integral of `x^a y^b` over the bi-unit triangle.
pub fn triangle_monomial_integral(a: u32, b: u32) -> f64 {
    // ∫_{-1}^{-y} x^a dx = ((-y)^{a+1} - (-1)^{a+1}) / (a+1), then integrate in y.
    let sign = if a % 2 == 0 { -1.0 } else { 1.0 };
    sign / (a as f64 + 1.0)
        * (interval_monomial_integral(a + b + 1) - interval_monomial_integral(b))
}

/// Analytic integral of `x^a` over [-1, 1].
pub fn interval_monomial_integral(a: u32) -> f64 {
    if a % 2 == 1 {
        0.0
    } else {
        2.0 / (a as f64 + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn gauss_one_point_is_midpoint() {
        let g = gauss_1d(1).unwrap();
        assert_eq!(g.points, vec![[0.0]]);
        assert!((g.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_two_point_moments() {
        let g = gauss_1d(2).unwrap();
        assert!(g.integrate(|x| x[0].powi(3)).abs() < 1e-15);
        assert!((g.integrate(|x| x[0].powi(2)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_five_point_against_simpson() {
        let g = gauss_1d(5).unwrap();
        let s9 = simpson(|x| x.powi(9), -1.0, 1.0, 20000);
        let s8 = simpson(|x| x.powi(8), -1.0, 1.0, 20000);
        assert!((s8 - 2.0 / 9.0).abs() < 1e-12);
        assert!((g.integrate(|x| x[0].powi(9)) - s9).abs() < 1e-13);
        assert!((g.integrate(|x| x[0].powi(8)) - s8).abs() < 1e-12);
        assert!((g.integrate(|x| x[0].powi(8)) - 2.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_zero_points_rejected() {
        assert!(matches!(gauss_1d(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(gll_1d(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(gll_1d(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gll_small_rules() {
        let g2 = gll_1d(2).unwrap();
        assert_eq!(g2.nodes(), vec![-1.0, 1.0]);
        assert_eq!(g2.weights, vec![1.0, 1.0]);
        // exactness equations for degree <= 3 give {1/3, 4/3, 1/3}
        let g3 = gll_1d(3).unwrap();
        assert_eq!(g3.nodes(), vec![-1.0, 0.0, 1.0]);
        for (w, e) in g3.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((w - e).abs() < 1e-15);
        }
        let g4 = gll_1d(4).unwrap();
        assert_eq!(g4.exactness, 5);
        assert!((g4.integrate(|x| x[0].powi(4)) - 0.4).abs() < 1e-14);
        assert!((g4.integrate(|x| x[0].powi(6)) - 2.0 / 7.0).abs() > 1e-3);
    }

    #[test]
    fn gauss_nodes_are_legendre_roots() {
        for n in 1..=12 {
            let g = gauss_1d(n).unwrap();
            for x in g.nodes() {
                assert!(poly::legendre_classical(x, n).0.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_exactness_sweep() {
        for n in 1..=12 {
            let g = gauss_1d(n).unwrap();
            assert!(g.weights.iter().all(|&w| w > 0.0));
            for d in 0..=g.exactness as u32 {
                let e = interval_monomial_integral(d);
                assert!((g.integrate(|x| x[0].powi(d as i32)) - e).abs() < 1e-13, "n={n} d={d}");
            }
        }
        for n in 2..=12 {
            let g = gll_1d(n).unwrap();
            assert!(g.weights.iter().all(|&w| w > 0.0));
            for d in 0..=g.exactness as u32 {
                let e = interval_monomial_integral(d);
                assert!((g.integrate(|x| x[0].powi(d as i32)) - e).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rule_monomials() {
        let r0 = triangle_volume_rule(0).unwrap();
        assert!((r0.weight_sum() - 2.0).abs() < 1e-14);
        let r2 = triangle_volume_rule(2).unwrap();
        // x y over the bi-unit triangle vanishes (odd in y after the x integral)
        assert!(triangle_monomial_integral(1, 1).abs() < 1e-15);
        assert!(r2.integrate(|p| p[0] * p[1]).abs() < 1e-14);
        assert!((r2.integrate(|p| p[0]) + 2.0 / 3.0).abs() < 1e-14);
        for degree in 0..=16 {
            let r = triangle_volume_rule(degree).unwrap();
            assert!(r.exactness >= degree);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!((r.weight_sum() - 2.0).abs() < 1e-13);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let e = triangle_monomial_integral(a, b);
                    let q = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        (q - e).abs() <= 1e-12 * e.abs().max(1.0),
                        "degree {degree} x^{a} y^{b}: {q} vs {e}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_monomial_oracle_spot_values() {
        assert!((triangle_monomial_integral(0, 0) - 2.0).abs() < 1e-15);
        // ∫ x over the triangle = area * centroid_x = 2 * (-1/3)
        assert!((triangle_monomial_integral(1, 0) + 2.0 / 3.0).abs() < 1e-15);
        assert!((triangle_monomial_integral(0, 1) + 2.0 / 3.0).abs() < 1e-15);
        // symbolic: ∫∫ x^2 y^3 = -2/21
        assert!((triangle_monomial_integral(2, 3) + 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn tensor_rules() {
        let t = tensor_rule_2d(&gll_1d(2).unwrap());
        assert_eq!(t.len(), 4);
        assert!(t.weights.iter().all(|&w| (w - 1.0).abs() < 1e-15));
        let g3 = tensor_rule_2d(&gauss_1d(3).unwrap());
        assert!(g3.integrate(|p| p[0].powi(5) * p[1].powi(5)).abs() < 1e-15);
        let g2 = tensor_rule_2d(&gauss_1d(2).unwrap());
        assert!((g2.integrate(|p| p[0].powi(2) * p[1].powi(2)) - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(g2.exactness, 3);
        for n in 2..=8 {
            let r = gll_1d(n).unwrap();
            let t = tensor_rule_2d(&r);
            assert!((t.weight_sum() - r.weight_sum().powi(2)).abs() < 1e-13);
            for a in 0..=r.exactness as u32 {
                for b in 0..=r.exactness as u32 {
                    let e = interval_monomial_integral(a) * interval_monomial_integral(b);
                    let q = t.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!((q - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn face_rules() {
        let g2 = gauss_1d(2).unwrap();
        let f = face_rule(ElementKind::Quad, 0, &g2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((f.points[0][0] + s).abs() < 1e-15 && f.points[0][1] == -1.0);
        assert!((f.points[1][0] - s).abs() < 1e-15 && f.points[1][1] == -1.0);
        assert_eq!(f.normals[0], [0.0, -1.0]);
        assert_eq!(f.jacobian, 1.0);

        let h = face_rule(ElementKind::Triangle, 1, &g2).unwrap();
        assert!((h.jacobian - 2f64.sqrt()).abs() < 1e-15);
        let len: f64 = h.measure_weights().iter().sum();
        assert!((len - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((h.normals[0][0] - 1.0).abs() < 1e-15 && (h.normals[0][1] - 1.0).abs() < 1e-15);

        let perim_tri: f64 = (0..3)
            .map(|k| face_rule(ElementKind::Triangle, k, &g2).unwrap().measure_weights().iter().sum::<f64>())
            .sum();
        assert!((perim_tri - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
        let perim_quad: f64 = (0..4)
            .map(|k| face_rule(ElementKind::Quad, k, &g2).unwrap().measure_weights().iter().sum::<f64>())
            .sum();
        assert!((perim_quad - 8.0).abs() < 1e-14);

        assert!(face_rule(ElementKind::Triangle, 3, &g2).is_err());
        assert!(face_rule(ElementKind::Quad, 4, &g2).is_err());
    }

    proptest! {
        #[test]
        fn triangle_rules_exact_on_monomials(a in 0u32..10, b in 0u32..10, extra in 0usize..3) {
            let d = (a + b) as usize + extra;
            let rule = triangle_volume_rule(d).unwrap();
            let q = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
            let exact = triangle_monomial_integral(a, b);
            prop_assert!((q - exact).abs() < 1e-13 * exact.abs().max(1.0), "{q} vs {exact}");
        }

        #[test]
        fn line_rules_exact_to_their_degree(n in 2usize..14, frac in 0.0f64..1.0) {
            for rule in [gauss_1d(n).unwrap(), gll_1d(n).unwrap()] {
                let a = (frac * (rule.exactness + 1) as f64) as u32;
                let q = rule.integrate(|p| p[0].powi(a as i32));
                prop_assert!((q - interval_monomial_integral(a)).abs() < 1e-13);
            }
        }
    }
}
