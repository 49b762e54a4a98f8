//! Natural cubic smoothing splines under a weighted squared-error budget.
//!
//! The fit minimizes the curvature `integral s''(t)^2 dt` subject to
//! `sum w_i (y_i - s(t_i))^2 <= budget`. On the regularization path the
//! misfit grows monotonically with the smoothing parameter, so the active
//! constraint is located by bisection; when even the straight line fits
//! within the budget the line itself (zero curvature) is returned.

/// Natural cubic spline with linear extrapolation outside the knot span.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    d2: Vec<f64>,
}

impl CubicSpline {
    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn second_derivs(&self) -> &[f64] {
        &self.d2
    }

    fn segment(&self, x: f64) -> usize {
        let m = self.xs.len();
        self.xs[1..m - 1].partition_point(|&k| k <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.deriv(self.xs[0]) * (x - self.xs[0]);
        }
        if x >= self.xs[m - 1] {
            return self.ys[m - 1] + self.deriv(self.xs[m - 1]) * (x - self.xs[m - 1]);
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.d2[i] + (b * b * b - b) * self.d2[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let m = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[m - 1]);
        let i = if x >= self.xs[m - 1] {
            m - 2
        } else {
            self.segment(x)
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.d2[i] + (3.0 * b * b - 1.0) * self.d2[i + 1]) * h / 6.0
    }
}

/// Result of a smoothing fit.
#[derive(Debug, Clone)]
pub struct SmoothingFit {
    pub spline: CubicSpline,
    /// Smoothing parameter at the solution; infinite for the line limit.
    pub lambda: f64,
    /// Weighted squared error over the *original* (unmerged) samples.
    pub misfit: f64,
    /// Curvature integral of the returned spline.
    pub roughness: f64,
}

/// Merged samples: strictly increasing x, combined weights, weighted means,
/// plus the irreducible misfit contributed by merged duplicates.
struct Merged {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ws: Vec<f64>,
    irreducible: f64,
}

fn merge_duplicates(points: &[(f64, f64, f64)]) -> Merged {
    let mut sorted: Vec<(f64, f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut irreducible = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i].0;
        let mut j = i;
        let mut w_sum = 0.0;
        let mut wy_sum = 0.0;
        while j < sorted.len() && sorted[j].0 == x {
            w_sum += sorted[j].2;
            wy_sum += sorted[j].2 * sorted[j].1;
            j += 1;
        }
        let mean = wy_sum / w_sum;
        for p in &sorted[i..j] {
            irreducible += p.2 * (p.1 - mean) * (p.1 - mean);
        }
        xs.push(x);
        ys.push(mean);
        ws.push(w_sum);
        i = j;
    }
    Merged {
        xs,
        ys,
        ws,
        irreducible,
    }
}

/// Symmetric pentadiagonal Cholesky solve (band half-width 2), in place.
fn solve_banded(d0: &mut [f64], d1: &mut [f64], d2: &mut [f64], b: &mut [f64]) {
    let n = d0.len();
    // Factor A = L L^T with L banded (diagonal + two subdiagonals).
    for i in 0..n {
        let mut v = d0[i];
        if i >= 1 {
            v -= d1[i - 1] * d1[i - 1];
        }
        if i >= 2 {
            v -= d2[i - 2] * d2[i - 2];
        }
        let diag = v.max(f64::MIN_POSITIVE).sqrt();
        d0[i] = diag;
        if i + 1 < n {
            let mut v = d1[i];
            if i >= 1 {
                v -= d1[i - 1] * d2[i - 1];
            }
            d1[i] = v / diag;
        }
        if i + 2 < n {
            d2[i] /= diag;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        if i >= 1 {
            v -= d1[i - 1] * b[i - 1];
        }
        if i >= 2 {
            v -= d2[i - 2] * b[i - 2];
        }
        b[i] = v / d0[i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= d1[i] * b[i + 1];
        }
        if i + 2 < n {
            v -= d2[i] * b[i + 2];
        }
        b[i] = v / d0[i];
    }
}

/// One Reinsch solve at a fixed smoothing parameter on merged samples.
/// Returns `(spline, merged misfit, roughness)`.
fn reinsch(m: &Merged, lambda: f64) -> (CubicSpline, f64, f64) {
    let n = m.xs.len();
    debug_assert!(n >= 3);
    let h: Vec<f64> = m.xs.windows(2).map(|p| p[1] - p[0]).collect();
    let interior = n - 2;

    // R tridiagonal and B = Q^T W^-1 Q pentadiagonal, assembled banded.
    let mut d0 = vec![0.0; interior];
    let mut d1 = vec![0.0; interior.saturating_sub(1)];
    let mut d2 = vec![0.0; interior.saturating_sub(2)];
    let inv_w: Vec<f64> = m.ws.iter().map(|&w| 1.0 / w).collect();
    // Q^T row r touches columns r, r+1, r+2 of the sample axis with
    // coefficients (1/h[r], -(1/h[r] + 1/h[r+1]), 1/h[r+1]).
    let q = |r: usize, j: usize| -> f64 {
        if j == r {
            1.0 / h[r]
        } else if j == r + 1 {
            -(1.0 / h[r] + 1.0 / h[r + 1])
        } else if j == r + 2 {
            1.0 / h[r + 1]
        } else {
            0.0
        }
    };
    for r in 0..interior {
        d0[r] = (h[r] + h[r + 1]) / 3.0;
        for j in r..=r + 2 {
            d0[r] += lambda * inv_w[j] * q(r, j) * q(r, j);
        }
        if r + 1 < interior {
            d1[r] = h[r + 1] / 6.0;
            for j in r + 1..=r + 2 {
                d1[r] += lambda * inv_w[j] * q(r, j) * q(r + 1, j);
            }
        }
        if r + 2 < interior {
            d2[r] = lambda * inv_w[r + 2] * q(r, r + 2) * q(r + 2, r + 2);
        }
    }

    let mut rhs = vec![0.0; interior];
    for r in 0..interior {
        rhs[r] = (m.ys[r + 2] - m.ys[r + 1]) / h[r + 1] - (m.ys[r + 1] - m.ys[r]) / h[r];
    }
    solve_banded(&mut d0, &mut d1, &mut d2, &mut rhs);
    let sigma = rhs; // interior second derivatives

    // a = y - lambda W^-1 Q sigma
    let mut values = m.ys.clone();
    for r in 0..interior {
        for j in r..=r + 2 {
            values[j] -= lambda * inv_w[j] * q(r, j) * sigma[r];
        }
    }

    let misfit: f64 = (0..n)
        .map(|j| m.ws[j] * (m.ys[j] - values[j]) * (m.ys[j] - values[j]))
        .sum();
    let mut roughness = 0.0;
    for r in 0..interior {
        roughness += (h[r] + h[r + 1]) / 3.0 * sigma[r] * sigma[r];
        if r + 1 < interior {
            roughness += 2.0 * h[r + 1] / 6.0 * sigma[r] * sigma[r + 1];
        }
    }

    let mut d2_full = vec![0.0; n];
    d2_full[1..n - 1].copy_from_slice(&sigma);
    (
        CubicSpline {
            xs: m.xs.clone(),
            ys: values,
            d2: d2_full,
        },
        misfit,
        roughness,
    )
}

fn weighted_line(m: &Merged) -> CubicSpline {
    let w_sum: f64 = m.ws.iter().sum();
    let x_mean: f64 = m.xs.iter().zip(&m.ws).map(|(x, w)| x * w).sum::<f64>() / w_sum;
    let y_mean: f64 = m.ys.iter().zip(&m.ws).map(|(y, w)| y * w).sum::<f64>() / w_sum;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..m.xs.len() {
        let dx = m.xs[i] - x_mean;
        sxx += m.ws[i] * dx * dx;
        sxy += m.ws[i] * dx * (m.ys[i] - y_mean);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ys = m.xs.iter().map(|&x| y_mean + slope * (x - x_mean)).collect();
    CubicSpline {
        xs: m.xs.clone(),
        ys,
        d2: vec![0.0; m.xs.len()],
    }
}

fn line_misfit(m: &Merged, line: &CubicSpline) -> f64 {
    (0..m.xs.len())
        .map(|i| {
            let r = m.ys[i] - line.ys[i];
            m.ws[i] * r * r
        })
        .sum()
}

/// Smoothing fit at a fixed parameter; useful to probe the regularization
/// path around a solution.
pub fn fit_lambda(points: &[(f64, f64, f64)], lambda: f64) -> SmoothingFit {
    let m = merge_duplicates(points);
    if m.xs.len() < 3 {
        let line = weighted_line(&m);
        let misfit = line_misfit(&m, &line) + m.irreducible;
        return SmoothingFit {
            spline: line,
            lambda: f64::INFINITY,
            misfit,
            roughness: 0.0,
        };
    }
    let (spline, misfit, roughness) = reinsch(&m, lambda);
    SmoothingFit {
        spline,
        lambda,
        misfit: misfit + m.irreducible,
        roughness,
    }
}

/// Smoothest spline whose weighted squared error stays within `budget`.
///
/// Duplicated sample times are merged (their spread is an irreducible part
/// of the misfit). When no spline can reach the budget the near-interpolant
/// is returned; when the straight line already satisfies it, the line is
/// the optimum and the budget constraint is interior.
pub fn fit_budget(points: &[(f64, f64, f64)], budget: f64) -> SmoothingFit {
    const REL_TOL: f64 = 1e-9;
    let m = merge_duplicates(points);
    // Weight scale invariance: normalize to mean 1 to keep lambda sane.
    let scale = m.ws.iter().sum::<f64>() / m.ws.len() as f64;
    let scaled = Merged {
        xs: m.xs.clone(),
        ys: m.ys.clone(),
        ws: m.ws.iter().map(|&w| w / scale).collect(),
        irreducible: m.irreducible / scale,
    };
    let budget_scaled = budget / scale;

    let line = weighted_line(&scaled);
    let line_total = line_misfit(&scaled, &line) + scaled.irreducible;
    if scaled.xs.len() < 3 || line_total <= budget_scaled {
        return SmoothingFit {
            spline: line,
            lambda: f64::INFINITY,
            misfit: line_total * scale,
            roughness: 0.0,
        };
    }
    if budget_scaled <= scaled.irreducible {
        // Infeasible: even interpolation misses the budget. Return the
        // interpolating natural spline (the feasible-misfit infimum).
        let (spline, misfit, roughness) = reinsch(&scaled, 0.0);
        return SmoothingFit {
            spline,
            lambda: 0.0,
            misfit: (misfit + scaled.irreducible) * scale,
            roughness,
        };
    }

    let mut lo = -60.0f64; // log10 lambda
    let mut hi = 60.0f64;
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let lambda = 10f64.powf(mid);
        let (spline, misfit, roughness) = reinsch(&scaled, lambda);
        let total = misfit + scaled.irreducible;
        let converged = (total - budget_scaled).abs() <= REL_TOL * budget_scaled;
        if total <= budget_scaled || converged {
            best = Some((spline, total, roughness, lambda));
        }
        if converged {
            break;
        }
        if total > budget_scaled {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (spline, total, roughness, lambda) =
        best.expect("bisection brackets a feasible solution");
    SmoothingFit {
        spline,
        // The solve ran on mean-normalized weights; report the parameter in
        // the caller's weight convention.
        lambda: lambda * scale,
        misfit: total * scale,
        roughness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line_points() -> Vec<(f64, f64, f64)> {
        (0..25)
            .map(|i| {
                let t = i as f64 / 24.0;
                (t, 2.0 + 3.0 * t, 1.0 + (i % 3) as f64)
            })
            .collect()
    }

    #[test]
    fn straight_data_gives_the_line_for_any_budget() {
        for budget in [1e-6, 1.0, 100.0] {
            let fit = fit_budget(&line_points(), budget);
            assert_eq!(fit.roughness, 0.0);
            for i in 0..40 {
                let t = i as f64 / 39.0;
                assert_relative_eq!(fit.spline.eval(t), 2.0 + 3.0 * t, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn tiny_budget_approaches_interpolation() {
        let pts: Vec<(f64, f64, f64)> = (0..12)
            .map(|i| {
                let t = i as f64 / 11.0;
                (t, (7.0 * t).sin(), 1.0)
            })
            .collect();
        let fit = fit_budget(&pts, 1e-12);
        for &(t, y, _) in &pts {
            assert!((fit.spline.eval(t) - y).abs() < 1e-5);
        }
    }

    #[test]
    fn budget_is_active_when_binding() {
        let pts: Vec<(f64, f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64 / 39.0;
                let wiggle = if i % 2 == 0 { 0.3 } else { -0.3 };
                (t, (4.0 * t).sin() + wiggle, 1.0 + (i % 4) as f64)
            })
            .collect();
        let budget = 1.5;
        let fit = fit_budget(&pts, budget);
        assert!((fit.misfit - budget).abs() <= 1e-6 * budget);
        assert!(fit.roughness > 0.0);

        // Perturbing the smoothing parameter confirms local optimality:
        // more smoothing breaks the budget, less smoothing is rougher.
        let more = fit_lambda(&pts, fit.lambda * 1.01);
        assert!(more.misfit >= budget * (1.0 - 1e-9));
        let less = fit_lambda(&pts, fit.lambda * 0.99);
        assert!(less.misfit <= budget * (1.0 + 1e-9));
        assert!(less.roughness >= fit.roughness * (1.0 - 1e-9));
    }

    #[test]
    fn duplicate_times_are_merged_into_weighted_means() {
        let pts = vec![
            (0.0, 1.0, 1.0),
            (0.5, 2.0, 1.0),
            (0.5, 4.0, 3.0),
            (1.0, 3.0, 1.0),
        ];
        // Weighted mean at 0.5 is 3.5; irreducible misfit is 3.0.
        let fit = fit_budget(&pts, 50.0);
        assert_eq!(fit.roughness, 0.0); // generous budget: the line wins
        let irreducible = 1.0 * (2.0 - 3.5f64).powi(2) + 3.0 * (4.0 - 3.5f64).powi(2);
        assert!(fit.misfit >= irreducible - 1e-12);
    }

    #[test]
    fn extrapolation_is_linear() {
        let pts: Vec<(f64, f64, f64)> = (0..10)
            .map(|i| {
                let t = 0.2 + 0.06 * i as f64;
                (t, t * t, 1.0)
            })
            .collect();
        let fit = fit_budget(&pts, 1e-9);
        let s = &fit.spline;
        let slope_left = s.deriv(0.2);
        assert_relative_eq!(
            s.eval(0.0),
            s.eval(0.2) - 0.2 * slope_left,
            epsilon = 1e-9
        );
        let slope_right = s.deriv(0.74);
        assert_relative_eq!(
            s.eval(1.0),
            s.eval(0.74) + 0.26 * slope_right,
            epsilon = 1e-9
        );
    }
}
