//! Weighted polynomial least squares in a shifted-Legendre basis.
//!
//! The sample times live in `[0, 1]`; a Vandermonde system in the monomial
//! basis is badly conditioned at degree 5 over thousands of points, so the
//! fit runs in the Legendre basis on `x = 2t - 1` and converts to monomial
//! coefficients only for export.

/// Polynomial stored by its shifted-Legendre coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Value at normalized time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let x = 2.0 * t - 1.0;
        let (mut prev, mut cur) = (1.0, x);
        let mut acc = self.coeffs[0];
        if self.coeffs.len() > 1 {
            acc += self.coeffs[1] * x;
        }
        for (j, &c) in self.coeffs.iter().enumerate().skip(2) {
            let n = (j - 1) as f64;
            let next = ((2.0 * n + 1.0) * x * cur - n * prev) / (n + 1.0);
            acc += c * next;
            prev = cur;
            cur = next;
        }
        acc
    }

    /// Derivative with respect to `t` (chain rule factor 2 from `x = 2t-1`).
    pub fn deriv(&self, t: f64) -> f64 {
        let x = 2.0 * t - 1.0;
        // P and P' recurrences: P'_{n+1} = (2n+1) P_n + P'_{n-1}.
        let mut p_prev = 1.0; // P_0
        let mut p_cur = x; // P_1
        let mut d_prev = 0.0; // P'_0
        let mut d_cur = 1.0; // P'_1
        let mut acc = 0.0;
        if self.coeffs.len() > 1 {
            acc += self.coeffs[1] * d_cur;
        }
        for (j, &c) in self.coeffs.iter().enumerate().skip(2) {
            let n = (j - 1) as f64;
            let p_next = ((2.0 * n + 1.0) * x * p_cur - n * p_prev) / (n + 1.0);
            let d_next = (2.0 * n + 1.0) * p_cur + d_prev;
            acc += c * d_next;
            p_prev = p_cur;
            p_cur = p_next;
            d_prev = d_cur;
            d_cur = d_next;
        }
        2.0 * acc
    }

    /// Coefficients in the monomial basis of `t` (constant term first).
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        let deg = self.degree();
        // Legendre polynomials in powers of x, then substitute x = 2t - 1.
        let mut legendre_x: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
        for n in 1..deg {
            let p_n = &legendre_x[n];
            let p_nm1 = &legendre_x[n - 1];
            let mut next = vec![0.0; n + 2];
            for (i, &c) in p_n.iter().enumerate() {
                next[i + 1] += (2.0 * n as f64 + 1.0) * c / (n as f64 + 1.0);
            }
            for (i, &c) in p_nm1.iter().enumerate() {
                next[i] -= n as f64 * c / (n as f64 + 1.0);
            }
            legendre_x.push(next);
        }
        // Accumulate in powers of x.
        let mut in_x = vec![0.0; deg + 1];
        for (j, &c) in self.coeffs.iter().enumerate() {
            for (i, &b) in legendre_x[j].iter().enumerate() {
                in_x[i] += c * b;
            }
        }
        // Substitute x = 2t - 1 by binomial expansion of (2t - 1)^i.
        let mut out = vec![0.0; deg + 1];
        let mut pow = vec![0.0; deg + 1]; // coefficients of (2t-1)^i, built iteratively
        pow[0] = 1.0;
        out[0] += in_x[0];
        for i in 1..=deg {
            // (2t - 1)^i = (2t - 1) * (2t - 1)^(i-1)
            let mut next = vec![0.0; deg + 1];
            for (p, &c) in pow.iter().enumerate().take(i) {
                next[p + 1] += 2.0 * c;
                next[p] -= c;
            }
            pow = next;
            for (p, &c) in pow.iter().enumerate() {
                out[p] += in_x[i] * c;
            }
        }
        out
    }
}

/// Solves a small symmetric positive-definite system in place by Cholesky.
/// Returns `None` when the matrix is numerically singular.
fn solve_spd(a: &mut [f64], b: &mut [f64], dim: usize) -> Option<()> {
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            d -= a[j * dim + k] * a[j * dim + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * dim + j] = d;
        for i in j + 1..dim {
            let mut v = a[i * dim + j];
            for k in 0..j {
                v -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = v / d;
        }
    }
    for i in 0..dim {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * dim + k] * b[k];
        }
        b[i] = v / a[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut v = b[i];
        for k in i + 1..dim {
            v -= a[k * dim + i] * b[k];
        }
        b[i] = v / a[i * dim + i];
    }
    Some(())
}

/// Weighted least-squares polynomial fit of `(t, y, w)` samples.
///
/// The effective degree drops to `distinct - 1` when the samples cover fewer
/// than `degree + 1` distinct times. Weights only matter through their
/// ratios; they are normalized internally.
pub fn fit_weighted(points: &[(f64, f64, f64)], degree: usize) -> Polynomial {
    assert!(!points.is_empty(), "cannot fit an empty point set");
    let mut times: Vec<f64> = points.iter().map(|p| p.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let degree = degree.min(times.len() - 1);
    let dim = degree + 1;

    let w_max = points.iter().map(|p| p.2).fold(0.0f64, f64::max);
    let w_scale = if w_max > 0.0 { 1.0 / w_max } else { 1.0 };

    let mut gram = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    let mut basis = vec![0.0; dim];
    for &(t, y, w) in points {
        let w = w * w_scale;
        let x = 2.0 * t - 1.0;
        basis[0] = 1.0;
        if dim > 1 {
            basis[1] = x;
        }
        for j in 2..dim {
            let n = (j - 1) as f64;
            basis[j] = ((2.0 * n + 1.0) * x * basis[j - 1] - n * basis[j - 2]) / (n + 1.0);
        }
        for i in 0..dim {
            for j in 0..=i {
                gram[i * dim + j] += w * basis[i] * basis[j];
            }
            rhs[i] += w * y * basis[i];
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            gram[i * dim + j] = gram[j * dim + i];
        }
    }

    let mut coeffs = rhs.clone();
    let mut attempt = dim;
    loop {
        let mut a: Vec<f64> = (0..attempt * attempt)
            .map(|idx| gram[(idx / attempt) * dim + idx % attempt])
            .collect();
        coeffs.truncate(attempt);
        coeffs.copy_from_slice(&rhs[..attempt]);
        if solve_spd(&mut a, &mut coeffs, attempt).is_some() {
            break;
        }
        // Shave the degree until the Gram matrix is regular.
        attempt -= 1;
        assert!(attempt > 0, "degenerate fit: no regular subsystem");
    }
    Polynomial { coeffs }
}
