//! Symmetric rank-2 and rank-3 coefficient arrays and the coordinate
//! transformation laws used to move them between charts.
//!
//! Jacobians are stored row-major as `J[i * n + a] = ∂x^i/∂y^a` and chart
//! second derivatives as `H[(i * n + a) * n + b] = ∂²x^i/∂y^a∂y^b`, where `x`
//! is the source chart and `y` the target chart.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// How a tensor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CentralDifference,
    CentralDifferenceRichardson,
    ScoreMoment,
    ScoreMomentQuadrature,
    ClosedForm,
    Transported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    pub dim: usize,
    /// Row-major `dim × dim`.
    pub components: Vec<f64>,
    pub base: Vec<f64>,
    pub chart: String,
    pub step: Option<f64>,
    pub method: Method,
    /// Largest |g_ij - g_ji| relative to the largest component, before symmetrization.
    pub symmetry_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicTensor {
    pub dim: usize,
    /// Row-major `dim × dim × dim`.
    pub components: Vec<f64>,
    pub base: Vec<f64>,
    pub chart: String,
    pub step: Option<f64>,
    pub method: Method,
    /// Largest deviation across index permutations relative to the largest
    /// component, before symmetrization.
    pub symmetry_residual: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

impl MetricTensor {
    /// Builds a metric from raw components, symmetrizing and recording the residual.
    pub fn from_raw(
        dim: usize,
        mut components: Vec<f64>,
        base: Vec<f64>,
        chart: impl Into<String>,
        step: Option<f64>,
        method: Method,
    ) -> Self {
        assert_eq!(components.len(), dim * dim);
        let mut resid = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = components[i * dim + j];
                let b = components[j * dim + i];
                resid = resid.max((a - b).abs());
                let m = 0.5 * (a + b);
                components[i * dim + j] = m;
                components[j * dim + i] = m;
            }
        }
        let scale = max_abs(&components);
        MetricTensor {
            dim,
            symmetry_residual: if scale > 0.0 { resid / scale } else { resid },
            components,
            base,
            chart: chart.into(),
            step,
            method,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.components[i * self.dim + j]
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.components[i * n + j] * v[i] * v[j];
            }
        }
        s
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.components);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Positive semidefinite within `tol` on eigenvalues.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues().first().is_none_or(|&e| e >= -tol)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.components)
    }
}

impl CubicTensor {
    /// Builds a cubic tensor from raw components, averaging over the six
    /// index permutations and recording the pre-symmetrization residual.
    pub fn from_raw(
        dim: usize,
        components: Vec<f64>,
        base: Vec<f64>,
        chart: impl Into<String>,
        step: Option<f64>,
        method: Method,
    ) -> Self {
        assert_eq!(components.len(), dim * dim * dim);
        let idx = |i: usize, j: usize, k: usize| (i * dim + j) * dim + k;
        let mut sym = vec![0.0; components.len()];
        let mut resid = 0.0_f64;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let perms = [
                        components[idx(i, j, k)],
                        components[idx(i, k, j)],
                        components[idx(j, i, k)],
                        components[idx(j, k, i)],
                        components[idx(k, i, j)],
                        components[idx(k, j, i)],
                    ];
                    let mean = perms.iter().sum::<f64>() / 6.0;
                    for p in perms {
                        resid = resid.max((p - mean).abs());
                    }
                    sym[idx(i, j, k)] = mean;
                }
            }
        }
        let scale = max_abs(&sym);
        CubicTensor {
            dim,
            symmetry_residual: if scale > 0.0 { resid / scale } else { resid },
            components: sym,
            base,
            chart: chart.into(),
            step,
            method,
        }
    }

    pub fn zeros(dim: usize, base: Vec<f64>, chart: impl Into<String>, method: Method) -> Self {
        CubicTensor {
            dim,
            components: vec![0.0; dim * dim * dim],
            base,
            chart: chart.into(),
            step: None,
            method,
            symmetry_residual: 0.0,
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.components[(i * self.dim + j) * self.dim + k]
    }

    /// T_ijk v^i v^j v^k
    pub fn contract(&self, v: &[f64]) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let vij = v[i] * v[j];
                for k in 0..n {
                    s += self.components[(i * n + j) * n + k] * vij * v[k];
                }
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.components)
    }
}

/// g_y(a,b) = g_x(i,j) J(i,a) J(j,b)
pub fn pullback_metric(g: &[f64], jac: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let mut s = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    s += g[i * dim + j] * jac[i * dim + a] * jac[j * dim + b];
                }
            }
            out[a * dim + b] = s;
        }
    }
    out
}

/// T_y(a,b,c) = T_x(i,j,k) J(i,a) J(j,b) J(k,c); valid for genuine tensors
/// such as the score third moment.
pub fn pullback_cubic(t: &[f64], jac: &[f64], dim: usize) -> Vec<f64> {
    let n = dim;
    let mut out = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            s += t[(i * n + j) * n + k]
                                * jac[i * n + a]
                                * jac[j * n + b]
                                * jac[k * n + c];
                        }
                    }
                }
                out[(a * n + b) * n + c] = s;
            }
        }
    }
    out
}

/// Transformation law for the third derivative of a function whose gradient
/// vanishes at the base point and whose Hessian there is `g` (the expansion
/// coefficients of `D(P‖P+dx)`):
///
/// A_y(a,b,c) = A_x(i,j,k) J(i,a) J(j,b) J(k,c)
///            + g(i,j) [H(i,a,b) J(j,c) + H(i,a,c) J(j,b) + H(i,b,c) J(j,a)]
///
/// The second line vanishes for affine chart changes, in which case this
/// reduces to [`pullback_cubic`].
pub fn pullback_expansion_cubic(
    a: &[f64],
    g: &[f64],
    jac: &[f64],
    hess: &[f64],
    dim: usize,
) -> Vec<f64> {
    let n = dim;
    let mut out = pullback_cubic(a, jac, n);
    let h = |i: usize, p: usize, q: usize| hess[(i * n + p) * n + q];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let gij = g[i * n + j];
                        if gij == 0.0 {
                            continue;
                        }
                        s += gij
                            * (h(i, p, q) * jac[j * n + r]
                                + h(i, p, r) * jac[j * n + q]
                                + h(i, q, r) * jac[j * n + p]);
                    }
                }
                out[(p * n + q) * n + r] += s;
            }
        }
    }
    out
}

/// Inverse of a square row-major matrix.
pub fn invert(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mat = DMatrix::from_row_slice(dim, dim, m);
    let inv = mat.try_inverse()?;
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = inv[(i, j)];
        }
    }
    Some(out)
}

/// max |a - b| / max(|b|_max, floor)
pub fn relative_max_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    num / max_abs(b).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrization_records_residual() {
        let g = MetricTensor::from_raw(
            2,
            vec![1.0, 0.2, 0.4, 2.0],
            vec![0.0, 0.0],
            "test",
            None,
            Method::ClosedForm,
        );
        assert!((g.get(0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(g.get(0, 1), g.get(1, 0));
        assert!((g.symmetry_residual - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cubic_contraction_of_diagonal_tensor() {
        let mut c = vec![0.0; 8];
        c[0] = 2.0;
        c[7] = -1.0;
        let t = CubicTensor::from_raw(2, c, vec![0.0; 2], "test", None, Method::ClosedForm);
        assert_eq!(t.contract(&[1.0, 2.0]), 2.0 - 8.0);
        assert_eq!(t.symmetry_residual, 0.0);
    }

    #[test]
    fn affine_expansion_law_matches_tensor_law() {
        let a = vec![1.0, 2.0, 2.0, 3.0, 2.0, 3.0, 3.0, 4.0];
        let g = vec![2.0, 0.5, 0.5, 1.0];
        let jac = vec![1.5, -0.5, 0.25, 2.0];
        let hess = vec![0.0; 8];
        assert_eq!(
            pullback_expansion_cubic(&a, &g, &jac, &hess, 2),
            pullback_cubic(&a, &jac, 2)
        );
    }

    #[test]
    fn expansion_law_matches_composed_function() {
        // f(x) = x²/2 + x³, x(y) = y + y²: f(x(y)) = y²/2 + 2y³ + ..., third derivative 12.
        let out = pullback_expansion_cubic(&[6.0], &[1.0], &[1.0], &[2.0], 1);
        assert!((out[0] - 12.0).abs() < 1e-15);
    }

    #[test]
    fn psd_check() {
        let g = MetricTensor::from_raw(
            2,
            vec![1.0, 2.0, 2.0, 1.0],
            vec![0.0; 2],
            "t",
            None,
            Method::ClosedForm,
        );
        assert!(!g.is_psd(1e-8));
    }
}
