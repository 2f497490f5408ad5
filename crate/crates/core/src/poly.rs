//! Orthonormal Jacobi polynomials on [-1, 1].
//!
//! `jacobi(x, a, b, n)` is normalized so that
//! `∫ (1-x)^a (1+x)^b P_n(x) P_m(x) dx = δ_nm`. The recurrence is the
//! usual one for normalized Jacobi polynomials; `a` and `b` are
//! non-negative integers for everything in this crate.

fn gamma_int_ratio(a: f64, b: f64) -> f64 {
    // Γ(a+1)Γ(b+1)/Γ(a+b+2), valid for non-negative integer a, b.
    let fact = |k: f64| -> f64 { (1..=(k as u64)).fold(1.0, |p, i| p * i as f64) };
    fact(a) * fact(b) / fact(a + b + 1.0)
}

/// Values of the normalized Jacobi polynomials `P_0..=P_n` at `x`.
pub fn jacobi_all(x: f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    let gamma0 = 2f64.powf(a + b + 1.0) * gamma_int_ratio(a, b);
    p.push(1.0 / gamma0.sqrt());
    if n == 0 {
        return p;
    }
    let gamma1 = (a + 1.0) * (b + 1.0) / (a + b + 3.0) * gamma0;
    p.push(((a + b + 2.0) * x / 2.0 + (a - b) / 2.0) / gamma1.sqrt());
    if n == 1 {
        return p;
    }
    let mut aold = 2.0 / (2.0 + a + b) * ((a + 1.0) * (b + 1.0) / (a + b + 3.0)).sqrt();
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + a + b;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + a + b) * (i + 1.0 + a) * (i + 1.0 + b)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let bnew = -(a * a - b * b) / h1 / (h1 + 2.0);
        let k = i as usize;
        let next = 1.0 / anew * (-aold * p[k - 1] + (x - bnew) * p[k]);
        p.push(next);
        aold = anew;
    }
    p
}

/// Normalized Jacobi polynomial `P_n^{(a,b)}(x)`.
pub fn jacobi(x: f64, a: f64, b: f64, n: usize) -> f64 {
    jacobi_all(x, a, b, n)[n]
}

/// Derivative of the normalized Jacobi polynomial `P_n^{(a,b)}`.
pub fn jacobi_grad(x: f64, a: f64, b: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    (nf * (nf + a + b + 1.0)).sqrt() * jacobi(x, a + 1.0, b + 1.0, n - 1)
}

/// Orthonormal Legendre polynomial of degree `n` on [-1, 1].
pub fn legendre(x: f64, n: usize) -> f64 {
    jacobi(x, 0.0, 0.0, n)
}

/// Derivative of the orthonormal Legendre polynomial of degree `n`.
pub fn legendre_grad(x: f64, n: usize) -> f64 {
    jacobi_grad(x, 0.0, 0.0, n)
}

/// Classical (unnormalized, `P_n(1) = 1`) Legendre polynomial and its
/// derivative, by the three-term recurrence.
pub fn legendre_classical(x: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (x * x - 1.0).abs() < 1e-14 {
        // P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}
