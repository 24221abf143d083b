//! Pure states (rays), density matrices and quantum divergences.
//!
//! Inner products are conjugate-linear in the first argument:
//! `⟨a|b⟩ = Σ conj(a_i) b_i`.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
pub use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{GeoError, Result};

/// Tolerance on norms, hermiticity and traces.
pub const STATE_TOL: f64 = 1e-12;
/// Maximum reconstruction residual ‖ρ − VΛV†‖ accepted from the eigensolver.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;
/// Default smoothing weight for relative entropies of (near-)pure states.
pub const DEFAULT_EPS: f64 = 1e-3;
/// Overlaps at or below this magnitude break a Bargmann loop.
pub const ORTHOGONAL_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A unit vector modulo global phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on dimension < 2 or zero norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(GeoError::DimensionMismatch {
                expected: 2,
                got: amplitudes.len(),
            });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(GeoError::Domain("non-finite amplitude".into()));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(GeoError::Domain("zero vector is not a state".into()));
        }
        Ok(PureState {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        PureState::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut a = vec![ZERO; dim];
        a[index] = ONE;
        PureState { amplitudes: a }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies by the global phase e^{iλ}; the ray is unchanged.
    pub fn rephased(&self, lambda: f64) -> PureState {
        let ph = Complex64::from_polar(1.0, lambda);
        PureState {
            amplitudes: self.amplitudes.iter().map(|a| a * ph).collect(),
        }
    }

    pub fn same_ray(&self, other: &PureState, tol: f64) -> bool {
        match self.inner(other) {
            Ok(z) => (1.0 - z.norm()).abs() <= tol,
            Err(_) => false,
        }
    }

    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        DensityMatrix { entries: m }
    }
}

impl PartialEq for PureState {
    fn eq(&self, other: &Self) -> bool {
        self.same_ray(other, STATE_TOL)
    }
}

/// Parses `a+bi`, `-i`, `0.5`, `2e-3-1e-2i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || GeoError::Parse(format!("bad complex literal '{s}'"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().map(|r| Complex64::new(r, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re_txt, im_txt) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let im = match im_txt {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = if re_txt.is_empty() {
        0.0
    } else {
        re_txt.parse::<f64>().map_err(|_| bad())?
    };
    Ok(Complex64::new(re, im))
}

impl FromStr for PureState {
    type Err = GeoError;

    /// Comma-separated complex amplitudes, normalized on parse.
    fn from_str(s: &str) -> Result<Self> {
        let amps = s.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?;
        PureState::new(amps)
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(GeoError::DimensionMismatch { expected: a, got: b })
    } else {
        Ok(())
    }
}

/// Hermitian, positive semidefinite, unit-trace complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixRepr", into = "DensityMatrixRepr")]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

/// Wire form: declared dimension plus row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct DensityMatrixRepr {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl From<DensityMatrix> for DensityMatrixRepr {
    fn from(m: DensityMatrix) -> Self {
        let d = m.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = m.entries[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DensityMatrixRepr { dim: d, entries }
    }
}

impl TryFrom<DensityMatrixRepr> for DensityMatrix {
    type Error = GeoError;

    fn try_from(r: DensityMatrixRepr) -> Result<Self> {
        if r.entries.len() != r.dim * r.dim {
            return Err(GeoError::DimensionMismatch {
                expected: r.dim * r.dim,
                got: r.entries.len(),
            });
        }
        let m = DMatrix::from_fn(r.dim, r.dim, |i, j| {
            let [re, im] = r.entries[i * r.dim + j];
            Complex64::new(re, im)
        });
        DensityMatrix::new(m)
    }
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d {
            return Err(GeoError::DimensionMismatch {
                expected: d,
                got: entries.ncols(),
            });
        }
        for i in 0..d {
            for j in i..d {
                let diff = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if diff > STATE_TOL {
                    return Err(GeoError::Domain(format!(
                        "not Hermitian at ({i},{j}): deviation {diff:.3e}"
                    )));
                }
            }
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(GeoError::Domain(format!("trace {tr} is not 1")));
        }
        let rho = DensityMatrix { entries };
        let (ev, _) = eigh(&rho.entries)?;
        if let Some(&min) = ev.first() {
            if min < -STATE_TOL {
                return Err(GeoError::Domain(format!(
                    "not positive semidefinite: eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(rho)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        DensityMatrix::new(DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            entries: DMatrix::from_diagonal_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// (1 − ε)ρ + ε I/d
    pub fn smoothed(&self, eps: f64) -> DensityMatrix {
        let d = self.dim();
        let mix = DMatrix::from_diagonal_element(d, d, Complex64::new(eps / d as f64, 0.0));
        DensityMatrix {
            entries: self.entries.map(|z| z * (1.0 - eps)) + mix,
        }
    }

    /// Equal-weight mixture (ρ + σ)/2.
    pub fn midpoint(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(DensityMatrix {
            entries: (&self.entries + &other.entries).map(|z| z * 0.5),
        })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigh(&self.entries)?.0)
    }
}

/// Hermitian eigendecomposition with the reconstruction residual check.
/// Eigenvalues are returned in ascending order with matching columns.
fn eigh(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let d = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    let lambda = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(vals[i], 0.0)
        } else {
            ZERO
        }
    });
    let recon = &vecs * lambda * vecs.adjoint();
    let resid = (m - recon).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    // Negated so that a NaN residual is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(resid <= EIGEN_RESIDUAL_TOL) {
        return Err(GeoError::Numerical(format!(
            "eigendecomposition residual {resid:.3e} exceeds {EIGEN_RESIDUAL_TOL:e}"
        )));
    }
    Ok((vals, vecs))
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// S(ρ) = −Tr ρ log ρ
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues()?;
    Ok(-ev.iter().map(|&l| xlogx(l)).sum::<f64>())
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(GeoError::Usage(format!("smoothing eps must lie in (0, 1), got {eps}")))
    }
}

/// Tr[ρ_ε (log ρ_ε − log σ_ε)] with ρ_ε = (1 − ε)ρ + εI/d.
pub fn quantum_relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<f64> {
    same_dim(rho.dim(), sigma.dim())?;
    check_eps(eps)?;
    let r = rho.smoothed(eps);
    let s = sigma.smoothed(eps);
    if r.entries == s.entries {
        return Ok(0.0);
    }
    let (rv, _) = eigh(&r.entries)?;
    let (sv, svecs) = eigh(&s.entries)?;
    let neg_entropy: f64 = rv.iter().map(|&l| xlogx(l)).sum();
    let mut cross = 0.0;
    for (j, &mu) in sv.iter().enumerate() {
        if mu <= 0.0 {
            return Err(GeoError::Numerical(format!("smoothed state has eigenvalue {mu:.3e}")));
        }
        let v = svecs.column(j);
        let w = (v.adjoint() * &r.entries * v)[(0, 0)];
        cross += mu.ln() * w.re;
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// S((ρ+σ)/2) − (S(ρ) + S(σ))/2
pub fn quantum_jsd(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let mid = rho.midpoint(sigma)?;
    let v = von_neumann_entropy(&mid)? - 0.5 * (von_neumann_entropy(rho)? + von_neumann_entropy(sigma)?);
    Ok(v.clamp(0.0, std::f64::consts::LN_2))
}

/// arccos |⟨a|b⟩|, in [0, π/2].
pub fn fubini_study_distance(a: &PureState, b: &PureState) -> Result<f64> {
    let ov = a.inner(b)?.norm().min(1.0);
    Ok(ov.acos())
}

/// Symmetric-subspace image of |q⟩⊗|q⟩ in the basis
/// {|00⟩, (|01⟩+|10⟩)/√2, |11⟩}: (a², √2·ab, b²).
pub fn veronese_embed(q: &PureState) -> Result<PureState> {
    same_dim(2, q.dim())?;
    let (a, b) = (q.amplitudes[0], q.amplitudes[1]);
    // |a|⁴ + 2|ab|² + |b|⁴ = (|a|² + |b|²)² = 1, so no renormalization is needed.
    Ok(PureState {
        amplitudes: vec![a * a, a * b * std::f64::consts::SQRT_2, b * b],
    })
}

/// Geometric (Pancharatnam) phase of a closed loop of rays:
/// −arg(⟨ψ₁|ψ₂⟩⟨ψ₂|ψ₃⟩···⟨ψₙ|ψ₁⟩), principal value in (−π, π].
///
/// For a geodesic qubit triangle this equals −Ω/2 with Ω the enclosed
/// solid angle.
pub fn bargmann_phase(states: &[PureState]) -> Result<f64> {
    if states.len() < 3 {
        return Err(GeoError::Usage(format!(
            "a loop needs at least 3 states, got {}",
            states.len()
        )));
    }
    let n = states.len();
    let mut product = ONE;
    for k in 0..n {
        let next = (k + 1) % n;
        let z = states[k].inner(&states[next])?;
        let mag = z.norm();
        if mag <= ORTHOGONAL_TOL {
            return Err(GeoError::OrthogonalLink {
                index: k,
                next,
                overlap: mag,
            });
        }
        // Normalizing each link keeps long loops from underflowing.
        product *= z / mag;
    }
    let phase = -product.arg();
    Ok(if phase <= -PI { phase + 2.0 * PI } else { phase })
}

/// Coordinate charts on quantum state spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumChart {
    /// (x, y, z) with |r| < 1 ↦ (I + r·σ)/2.
    Bloch,
    /// (p₁, p₂) ↦ diag(p₁, p₂, 1 − p₁ − p₂).
    QutritDiagonal,
    /// Eight real coordinates ↦ I/3 + ½ Σ xₐ λₐ (Gell-Mann basis), full rank.
    QutritGellMann,
    /// Bloch angles (θ, φ), θ ∈ (0, π) ↦ |q⟩⟨q| with |q⟩ = (cos θ/2, e^{iφ} sin θ/2).
    QubitPure,
    /// Bloch angles (θ, φ) ↦ |ν(q)⟩⟨ν(q)| on the spin-1 symmetric subspace.
    VeronesePure,
}

impl QuantumChart {
    pub fn name(self) -> &'static str {
        match self {
            QuantumChart::Bloch => "bloch",
            QuantumChart::QutritDiagonal => "qutrit-diagonal",
            QuantumChart::QutritGellMann => "qutrit-gellmann",
            QuantumChart::QubitPure => "qubit-pure",
            QuantumChart::VeronesePure => "veronese-pure",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            QuantumChart::Bloch => 3,
            QuantumChart::QutritDiagonal => 2,
            QuantumChart::QutritGellMann => 8,
            QuantumChart::QubitPure | QuantumChart::VeronesePure => 2,
        }
    }

    pub fn hilbert_dim(self) -> usize {
        match self {
            QuantumChart::Bloch | QuantumChart::QubitPure => 2,
            _ => 3,
        }
    }

    fn check(self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeoError::Domain("non-finite coordinate".into()));
        }
        match self {
            QuantumChart::Bloch => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!("Bloch vector length {} ≥ 1", r2.sqrt())))
                }
            }
            QuantumChart::QutritDiagonal => {
                let last = 1.0 - x[0] - x[1];
                if x[0] > 0.0 && x[1] > 0.0 && last > 0.0 {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!(
                        "({}, {}, {last}) is not in the open simplex",
                        x[0], x[1]
                    )))
                }
            }
            QuantumChart::QutritGellMann => Ok(()),
            QuantumChart::QubitPure | QuantumChart::VeronesePure => {
                if x[0] > 0.0 && x[0] < PI {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!("polar angle {} not in (0, π)", x[0])))
                }
            }
        }
    }

    pub fn qubit(theta: f64, phi: f64) -> PureState {
        PureState {
            amplitudes: vec![
                Complex64::new((theta / 2.0).cos(), 0.0),
                Complex64::from_polar((theta / 2.0).sin(), phi),
            ],
        }
    }

    /// The density matrix at chart coordinates `x` (unsmoothed).
    pub fn point(self, x: &[f64]) -> Result<DensityMatrix> {
        self.check(x)?;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match self {
            QuantumChart::Bloch => {
                let (rx, ry, rz) = (x[0], x[1], x[2]);
                let m = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        c(0.5 * (1.0 + rz), 0.0),
                        c(0.5 * rx, -0.5 * ry),
                        c(0.5 * rx, 0.5 * ry),
                        c(0.5 * (1.0 - rz), 0.0),
                    ],
                );
                Ok(DensityMatrix { entries: m })
            }
            QuantumChart::QutritDiagonal => {
                DensityMatrix::from_diagonal(&[x[0], x[1], 1.0 - x[0] - x[1]])
            }
            QuantumChart::QutritGellMann => {
                let s3 = 3f64.sqrt();
                let m = DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        c(x[2] + x[7] / s3, 0.0),
                        c(x[0], -x[1]),
                        c(x[3], -x[4]),
                        c(x[0], x[1]),
                        c(-x[2] + x[7] / s3, 0.0),
                        c(x[5], -x[6]),
                        c(x[3], x[4]),
                        c(x[5], x[6]),
                        c(-2.0 * x[7] / s3, 0.0),
                    ],
                );
                let m = m.map(|z| z * 0.5) + DMatrix::from_diagonal_element(3, 3, c(1.0 / 3.0, 0.0));
                let rho = DensityMatrix::new(m)?;
                let min = rho.eigenvalues()?[0];
                if min <= 0.0 {
                    return Err(GeoError::Domain(format!(
                        "Gell-Mann coordinates leave the full-rank interior (eigenvalue {min:.3e})"
                    )));
                }
                Ok(rho)
            }
            QuantumChart::QubitPure => Ok(Self::qubit(x[0], x[1]).projector()),
            QuantumChart::VeronesePure => Ok(veronese_embed(&Self::qubit(x[0], x[1]))?.projector()),
        }
    }
}

impl FromStr for QuantumChart {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bloch" => Ok(QuantumChart::Bloch),
            "qutrit-diagonal" => Ok(QuantumChart::QutritDiagonal),
            "qutrit-gellmann" => Ok(QuantumChart::QutritGellMann),
            "qubit-pure" => Ok(QuantumChart::QubitPure),
            "veronese-pure" => Ok(QuantumChart::VeronesePure),
            _ => Err(GeoError::Parse(format!("unknown quantum chart '{s}'"))),
        }
    }
}

/// Evaluates a chart point; the free-function form of [`QuantumChart::point`].
pub fn chart_point(chart: QuantumChart, x: &[f64]) -> Result<DensityMatrix> {
    chart.point(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumDivergenceKind {
    RelativeEntropy,
    JensenShannon,
}

impl FromStr for QuantumDivergenceKind {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qre" | "relative-entropy" => Ok(QuantumDivergenceKind::RelativeEntropy),
            "qjsd" | "jensen-shannon" => Ok(QuantumDivergenceKind::JensenShannon),
            _ => Err(GeoError::Parse(format!("unknown quantum divergence '{s}'"))),
        }
    }
}

/// A quantum divergence pulled back to a chart, usable by the extraction code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDivergence {
    pub chart: QuantumChart,
    pub kind: QuantumDivergenceKind,
    /// Smoothing weight for the relative entropy; unused by Jensen–Shannon.
    pub eps: f64,
}

impl Divergence for ChartDivergence {
    fn family_id(&self) -> String {
        let k = match self.kind {
            QuantumDivergenceKind::RelativeEntropy => "qre",
            QuantumDivergenceKind::JensenShannon => "qjsd",
        };
        format!("{k}@{}", self.chart.name())
    }

    fn chart(&self) -> String {
        self.chart.name().to_string()
    }

    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        self.chart.point(x).map(|_| ())
    }

    fn raw(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let rho = self.chart.point(p)?;
        let sigma = self.chart.point(q)?;
        match self.kind {
            QuantumDivergenceKind::RelativeEntropy => quantum_relative_entropy(&rho, &sigma, self.eps),
            QuantumDivergenceKind::JensenShannon => quantum_jsd(&rho, &sigma),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, LN_2};

    fn ket(s: &str) -> PureState {
        s.parse().unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn complex_literals() {
        assert_eq!(parse_complex("0.7071+0i").unwrap(), Complex64::new(0.7071, 0.0));
        assert_eq!(parse_complex("0+0.7071i").unwrap(), Complex64::new(0.0, 0.7071));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2e-3i").unwrap(), Complex64::new(1e-3, -2e-3));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn ray_equality_ignores_phase() {
        let a = ket("0.6,0.8i");
        assert_eq!(a, a.rephased(1.3));
        assert_ne!(a, ket("0.8,0.6i"));
        assert!("0,0".parse::<PureState>().is_err());
        assert!("1".parse::<PureState>().is_err());
    }

    #[test]
    fn fubini_study_examples() {
        let z0 = ket("1,0");
        let z1 = ket("0,1");
        let plus = ket("1,1");
        assert_eq!(fubini_study_distance(&z0, &z0).unwrap(), 0.0);
        assert_relative_eq!(fubini_study_distance(&z0, &z1).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(fubini_study_distance(&z0, &plus).unwrap(), FRAC_PI_4, epsilon = 1e-12);
        assert!(matches!(
            fubini_study_distance(&z0, &ket("1,0,0")),
            Err(GeoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn veronese_examples() {
        let v = veronese_embed(&ket("1,0")).unwrap();
        assert_eq!(v, ket("1,0,0"));
        let v = veronese_embed(&ket("1,1")).unwrap();
        let a = v.amplitudes();
        assert_relative_eq!(a[0].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(a[1].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(a[2].re, 0.5, epsilon = 1e-15);
        assert_eq!(veronese_embed(&ket("0,1")).unwrap(), ket("0,0,1"));
        assert!(veronese_embed(&ket("1,0,0")).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(quantum_relative_entropy(&mixed, &mixed, 0.2).unwrap(), 0.0);

        let a = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let b = DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap();
        let v = quantum_relative_entropy(&a, &b, 1e-12).unwrap();
        assert_relative_eq!(v, 0.4 * (7.0f64 / 3.0).ln(), max_relative = 1e-9);
        assert!((v - 0.338919).abs() < 1e-6);

        let z0 = ket("1,0").projector();
        let z1 = ket("0,1").projector();
        let vals: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&e| quantum_relative_entropy(&z0, &z1, e).unwrap())
            .collect();
        assert!(vals.iter().all(|v| v.is_finite()));
        assert!(vals[0] < vals[1] && vals[1] < vals[2], "{vals:?}");
        assert!(quantum_relative_entropy(&z0, &z1, 0.0).is_err());
    }

    #[test]
    fn jensen_shannon_examples() {
        let z0 = ket("1,0").projector();
        let z1 = ket("0,1").projector();
        assert_relative_eq!(quantum_jsd(&z0, &z1).unwrap(), LN_2, epsilon = 1e-12);
        assert_eq!(quantum_jsd(&z0, &z0).unwrap(), 0.0);
        let a = QuantumChart::Bloch.point(&[0.1, -0.3, 0.5]).unwrap();
        let b = QuantumChart::Bloch.point(&[-0.4, 0.2, 0.1]).unwrap();
        assert_eq!(quantum_jsd(&a, &b).unwrap(), quantum_jsd(&b, &a).unwrap());
    }

    #[test]
    fn bargmann_octant_loop() {
        let l = vec![ket("1,0"), ket("1,1"), ket("1,i")];
        assert_relative_eq!(bargmann_phase(&l).unwrap(), -FRAC_PI_4, epsilon = 1e-12);
        let mut r = l.clone();
        r.reverse();
        assert_relative_eq!(bargmann_phase(&r).unwrap(), FRAC_PI_4, epsilon = 1e-12);
        // explicitly closed loop gives the same answer
        let mut closed = l.clone();
        closed.push(ket("1,0"));
        assert_relative_eq!(bargmann_phase(&closed).unwrap(), -FRAC_PI_4, epsilon = 1e-12);
        let same = vec![ket("1,2"); 4];
        assert_eq!(bargmann_phase(&same).unwrap(), 0.0);
    }

    #[test]
    fn bargmann_rejects_orthogonal_links() {
        let l = vec![ket("1,0"), ket("0,1"), ket("1,1")];
        assert!(matches!(bargmann_phase(&l), Err(GeoError::OrthogonalLink { index: 0, .. })));
        assert!(bargmann_phase(&l[..2]).is_err());
    }

    #[test]
    fn chart_examples() {
        let m = chart_point(QuantumChart::Bloch, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m, DensityMatrix::maximally_mixed(2));
        let m = chart_point(QuantumChart::Bloch, &[0.0, 0.0, 0.4]).unwrap();
        assert_eq!(m, DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap());
        let m = chart_point(QuantumChart::QutritDiagonal, &[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        for i in 0..3 {
            assert_relative_eq!(m.entries()[(i, i)].re, 1.0 / 3.0, epsilon = 1e-15);
        }
        let m = chart_point(QuantumChart::QutritGellMann, &[0.0; 8]).unwrap();
        assert_eq!(m, DensityMatrix::maximally_mixed(3));
        assert!(chart_point(QuantumChart::Bloch, &[0.0, 0.6, 0.8]).is_err());
        assert!(chart_point(QuantumChart::QutritDiagonal, &[0.5, 0.5]).is_err());
        assert!(chart_point(QuantumChart::QutritGellMann, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(DensityMatrix::new(bad_trace).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.2, -0.2]).is_err());
        let nonherm = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.2, 0.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn density_matrix_wire_format() {
        let m = QuantumChart::Bloch.point(&[0.1, 0.2, 0.3]).unwrap();
        let repr = DensityMatrixRepr::from(m.clone());
        assert_eq!(repr.dim, 2);
        assert_eq!(repr.entries[1], [0.05, -0.1]);
        assert_eq!(DensityMatrix::try_from(repr).unwrap(), m);
    }
}
