//! Directed divergences on classical exponential families.
//!
//! Convention used everywhere in the crate: `D(p‖q) = E_p[log p − log q]`,
//! i.e. the first argument is the state the expectation is taken under and
//! the base point of every expansion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::quadrature::GaussLegendre;
use crate::tensor::{self, CubicTensor, Method, MetricTensor};

/// Default distance kept from the boundary of probability domains.
pub const DEFAULT_MARGIN: f64 = 1e-9;

/// A smooth directed divergence expressed in a real coordinate chart.
///
/// Implementations must be safe to evaluate from many threads at once.
pub trait Divergence: Send + Sync {
    /// Identifier of the state family, e.g. `categorical:3`.
    fn family_id(&self) -> String;

    /// Name of the coordinate chart the divergence is expressed in.
    fn chart(&self) -> String;

    fn dim(&self) -> usize;

    /// `Ok(())` when `x` lies in the open parameter domain.
    fn check_domain(&self, x: &[f64]) -> Result<()>;

    /// Divergence for points already known to be in the domain.
    fn raw(&self, p: &[f64], q: &[f64]) -> Result<f64>;

    fn in_domain(&self, x: &[f64]) -> bool {
        self.check_domain(x).is_ok()
    }

    fn divergence(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.check_domain(p)?;
        self.check_domain(q)?;
        if p == q {
            return Ok(0.0);
        }
        self.raw(p, q)
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(GeoError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(GeoError::Domain(format!("non-finite coordinate {v}")));
    }
    Ok(())
}

/// The built-in classical families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyKind {
    /// N(μ, σ²) with σ fixed; chart (μ).
    GaussianFixedSigma { sigma: f64 },
    /// Density θ e^{−θx}; chart (θ > 0).
    ExponentialScale,
    /// chart (p) with p ∈ (0, 1).
    Bernoulli,
    /// chart = first k − 1 probabilities of the open k-simplex.
    Categorical { k: usize },
    /// N(μ, σ²); chart (μ, σ > 0).
    GaussianFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    /// Minimum distance of every probability from {0, 1}.
    pub margin: f64,
}

impl Family {
    pub fn new(kind: FamilyKind) -> Result<Self> {
        match kind {
            FamilyKind::GaussianFixedSigma { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(GeoError::Usage(format!("sigma must be positive, got {sigma}")))
            }
            FamilyKind::Categorical { k } if k < 2 => {
                return Err(GeoError::Usage(format!(
                    "categorical needs at least 2 outcomes, got {k}"
                )))
            }
            _ => {}
        }
        Ok(Family {
            kind,
            margin: DEFAULT_MARGIN,
        })
    }

    pub fn gaussian_fixed(sigma: f64) -> Self {
        Family::new(FamilyKind::GaussianFixedSigma { sigma }).expect("invalid sigma")
    }

    pub fn exponential() -> Self {
        Family::new(FamilyKind::ExponentialScale).unwrap()
    }

    pub fn bernoulli() -> Self {
        Family::new(FamilyKind::Bernoulli).unwrap()
    }

    pub fn categorical(k: usize) -> Self {
        Family::new(FamilyKind::Categorical { k }).expect("categorical needs k >= 2")
    }

    pub fn gaussian() -> Self {
        Family::new(FamilyKind::GaussianFull).unwrap()
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Validated point of this family.
    pub fn point(&self, coords: Vec<f64>) -> Result<CoordinatePoint> {
        self.check_domain(&coords)?;
        Ok(CoordinatePoint {
            family_id: self.family_id(),
            coords,
        })
    }

    /// Probabilities of all k outcomes for a categorical chart point.
    fn simplex(&self, x: &[f64]) -> Vec<f64> {
        let mut p = x.to_vec();
        p.push(1.0 - x.iter().sum::<f64>());
        p
    }

    /// Fisher information in the default chart, from closed forms.
    /// Distance from `coords` to the edge of the default-chart domain,
    /// capped at 1. Steps well below this keep finite differences accurate.
    pub fn local_scale(&self, coords: &[f64]) -> f64 {
        let s = match self.kind {
            FamilyKind::GaussianFixedSigma { .. } => 1.0,
            FamilyKind::ExponentialScale => coords[0],
            FamilyKind::Bernoulli => coords[0].min(1.0 - coords[0]),
            FamilyKind::Categorical { .. } => {
                let last = 1.0 - coords.iter().sum::<f64>();
                coords.iter().fold(last, |m, &v| m.min(v))
            }
            FamilyKind::GaussianFull => coords[1],
        };
        s.min(1.0)
    }

    pub fn fisher_metric(&self, p: &CoordinatePoint) -> Result<MetricTensor> {
        self.check_point(p)?;
        let x = &p.coords;
        let n = self.dim();
        let comps = match self.kind {
            FamilyKind::GaussianFixedSigma { sigma } => vec![1.0 / (sigma * sigma)],
            FamilyKind::ExponentialScale => vec![1.0 / (x[0] * x[0])],
            FamilyKind::Bernoulli => vec![1.0 / (x[0] * (1.0 - x[0]))],
            FamilyKind::Categorical { .. } => {
                let probs = self.simplex(x);
                let last = probs[n];
                let mut g = vec![1.0 / last; n * n];
                for i in 0..n {
                    g[i * n + i] += 1.0 / probs[i];
                }
                g
            }
            FamilyKind::GaussianFull => {
                let s2 = x[1] * x[1];
                vec![1.0 / s2, 0.0, 0.0, 2.0 / s2]
            }
        };
        Ok(MetricTensor::from_raw(
            n,
            comps,
            x.clone(),
            self.chart(),
            None,
            Method::ClosedForm,
        ))
    }

    fn check_point(&self, p: &CoordinatePoint) -> Result<()> {
        if p.family_id != self.family_id() {
            return Err(GeoError::Usage(format!(
                "point belongs to family {} but {} was requested",
                p.family_id,
                self.family_id()
            )));
        }
        self.check_domain(&p.coords)
    }
}

impl Divergence for Family {
    fn family_id(&self) -> String {
        self.to_string()
    }

    fn chart(&self) -> String {
        match self.kind {
            FamilyKind::GaussianFixedSigma { .. } => "mean",
            FamilyKind::ExponentialScale => "rate",
            FamilyKind::Bernoulli => "probability",
            FamilyKind::Categorical { .. } => "simplex",
            FamilyKind::GaussianFull => "mean-sd",
        }
        .to_string()
    }

    fn dim(&self) -> usize {
        match self.kind {
            FamilyKind::Categorical { k } => k - 1,
            FamilyKind::GaussianFull => 2,
            _ => 1,
        }
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x)?;
        let m = self.margin;
        let inside = |v: f64| v >= m && v <= 1.0 - m;
        match self.kind {
            FamilyKind::GaussianFixedSigma { .. } => Ok(()),
            FamilyKind::ExponentialScale => {
                if x[0] > 0.0 {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!("rate must be positive, got {}", x[0])))
                }
            }
            FamilyKind::Bernoulli => {
                if inside(x[0]) {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!(
                        "probability {} not in [{m}, {}]",
                        x[0],
                        1.0 - m
                    )))
                }
            }
            FamilyKind::Categorical { .. } => {
                let probs = self.simplex(x);
                match probs.iter().position(|&v| !inside(v)) {
                    None => Ok(()),
                    Some(i) => Err(GeoError::Domain(format!(
                        "simplex coordinate {i} = {} closer than {m} to the boundary",
                        probs[i]
                    ))),
                }
            }
            FamilyKind::GaussianFull => {
                if x[1] > 0.0 {
                    Ok(())
                } else {
                    Err(GeoError::Domain(format!(
                        "standard deviation must be positive, got {}",
                        x[1]
                    )))
                }
            }
        }
    }

    fn raw(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let d = match self.kind {
            FamilyKind::GaussianFixedSigma { sigma } => {
                let dm = q[0] - p[0];
                dm * dm / (2.0 * sigma * sigma)
            }
            FamilyKind::ExponentialScale => {
                let r = q[0] / p[0];
                r - 1.0 - r.ln()
            }
            FamilyKind::Bernoulli => {
                let (a, b) = (p[0], q[0]);
                a * (a / b).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
            }
            FamilyKind::Categorical { .. } => {
                let pp = self.simplex(p);
                let qq = self.simplex(q);
                pp.iter().zip(&qq).map(|(a, b)| a * (a / b).ln()).sum()
            }
            FamilyKind::GaussianFull => {
                let (m1, s1, m2, s2) = (p[0], p[1], q[0], q[1]);
                let dm = m1 - m2;
                (s2 / s1).ln() + (s1 * s1 + dm * dm) / (2.0 * s2 * s2) - 0.5
            }
        };
        Ok(d)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FamilyKind::GaussianFixedSigma { sigma } => write!(f, "gaussian-fixed:{sigma}"),
            FamilyKind::ExponentialScale => write!(f, "exponential"),
            FamilyKind::Bernoulli => write!(f, "bernoulli"),
            FamilyKind::Categorical { k } => write!(f, "categorical:{k}"),
            FamilyKind::GaussianFull => write!(f, "gaussian"),
        }
    }
}

impl FromStr for Family {
    type Err = GeoError;

    /// `exponential`, `bernoulli`, `gaussian`, `gaussian-fixed[:σ]`, `categorical:k`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: &str| {
            a.parse::<f64>()
                .map_err(|_| GeoError::Parse(format!("bad family parameter '{a}'")))
        };
        let kind = match (name, arg) {
            ("exponential", None) => FamilyKind::ExponentialScale,
            ("bernoulli", None) => FamilyKind::Bernoulli,
            ("gaussian", None) => FamilyKind::GaussianFull,
            ("gaussian-fixed", None) => FamilyKind::GaussianFixedSigma { sigma: 1.0 },
            ("gaussian-fixed", Some(a)) => FamilyKind::GaussianFixedSigma { sigma: num(a)? },
            ("categorical", Some(a)) => FamilyKind::Categorical {
                k: a.parse()
                    .map_err(|_| GeoError::Parse(format!("bad outcome count '{a}'")))?,
            },
            _ => return Err(GeoError::Parse(format!("unknown family '{s}'"))),
        };
        Family::new(kind)
    }
}

/// Parses `0.2,0.3` into chart coordinates.
pub fn parse_coords(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| GeoError::Parse(format!("bad coordinate '{t}'")))
        })
        .collect()
}

/// A point in a family chart, tagged with its owning family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatePoint {
    pub family_id: String,
    pub coords: Vec<f64>,
}

/// A displacement in a chart; not necessarily normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub components: Vec<f64>,
}

impl Direction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::Usage("direction has non-finite components".into()));
        }
        Ok(Direction { components })
    }

    pub fn scaled(&self, h: f64) -> Vec<f64> {
        self.components.iter().map(|c| c * h).collect()
    }
}

/// D(p‖q) for two points of `family`.
pub fn evaluate(family: &Family, p: &CoordinatePoint, q: &CoordinatePoint) -> Result<f64> {
    family.check_point(p)?;
    family.check_point(q)?;
    family.divergence(&p.coords, &q.coords)
}

/// Map between a family's default chart `y` and its natural parameters `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalChart {
    pub family: Family,
}

/// Returns the natural-parameter chart of an exponential family.
pub fn natural_chart(family: &Family) -> Result<NaturalChart> {
    // Every built-in is an exponential family.
    Ok(NaturalChart { family: *family })
}

impl NaturalChart {
    /// Natural-coordinate step length whose image in the default chart stays
    /// within the default chart's local scale, capped at 1.
    pub fn local_scale(&self, eta: &[f64]) -> f64 {
        let y = self.from_natural(eta);
        let n = y.len();
        let s = self.family.local_scale(&y);
        // ∞-norm of ∂y/∂η bounds how far a unit natural step moves y.
        let stretch = tensor::invert(&self.jacobian(&y), n)
            .map(|jinv| {
                (0..n)
                    .map(|a| (0..n).map(|i| jinv[a * n + i].abs()).sum::<f64>())
                    .fold(0.0_f64, f64::max)
            })
            .unwrap_or(f64::INFINITY);
        (s / stretch).min(1.0)
    }

    pub fn to_natural(&self, y: &[f64]) -> Vec<f64> {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { sigma } => vec![y[0] / (sigma * sigma)],
            FamilyKind::ExponentialScale => vec![-y[0]],
            FamilyKind::Bernoulli => vec![(y[0] / (1.0 - y[0])).ln()],
            FamilyKind::Categorical { .. } => {
                let last = 1.0 - y.iter().sum::<f64>();
                y.iter().map(|p| (p / last).ln()).collect()
            }
            FamilyKind::GaussianFull => {
                let s2 = y[1] * y[1];
                vec![y[0] / s2, -0.5 / s2]
            }
        }
    }

    pub fn from_natural(&self, eta: &[f64]) -> Vec<f64> {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { sigma } => vec![eta[0] * sigma * sigma],
            FamilyKind::ExponentialScale => vec![-eta[0]],
            FamilyKind::Bernoulli => vec![logistic(eta[0])],
            FamilyKind::Categorical { .. } => softmax_head(eta),
            FamilyKind::GaussianFull => {
                let s2 = -0.5 / eta[1];
                vec![eta[0] * s2, s2.sqrt()]
            }
        }
    }

    /// Row-major `∂η^i/∂y^a`.
    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { sigma } => vec![1.0 / (sigma * sigma)],
            FamilyKind::ExponentialScale => vec![-1.0],
            FamilyKind::Bernoulli => vec![1.0 / (y[0] * (1.0 - y[0]))],
            FamilyKind::Categorical { .. } => {
                let n = y.len();
                let last = 1.0 - y.iter().sum::<f64>();
                let mut j = vec![1.0 / last; n * n];
                for i in 0..n {
                    j[i * n + i] += 1.0 / y[i];
                }
                j
            }
            FamilyKind::GaussianFull => {
                let (m, s) = (y[0], y[1]);
                vec![1.0 / (s * s), -2.0 * m / (s * s * s), 0.0, 1.0 / (s * s * s)]
            }
        }
    }

    /// `∂²η^i/∂y^a∂y^b` stored at `(i * n + a) * n + b`.
    pub fn hessian(&self, y: &[f64]) -> Vec<f64> {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { .. } | FamilyKind::ExponentialScale => vec![0.0],
            FamilyKind::Bernoulli => {
                let p = y[0];
                vec![(2.0 * p - 1.0) / (p * p * (1.0 - p) * (1.0 - p))]
            }
            FamilyKind::Categorical { .. } => {
                let n = y.len();
                let last = 1.0 - y.iter().sum::<f64>();
                let mut h = vec![1.0 / (last * last); n * n * n];
                for i in 0..n {
                    h[(i * n + i) * n + i] -= 1.0 / (y[i] * y[i]);
                }
                h
            }
            FamilyKind::GaussianFull => {
                let (m, s) = (y[0], y[1]);
                let s3 = s * s * s;
                let s4 = s3 * s;
                // η1 = μ/σ², η2 = −1/(2σ²)
                vec![0.0, -2.0 / s3, -2.0 / s3, 6.0 * m / s4, 0.0, 0.0, 0.0, -3.0 / s4]
            }
        }
    }

    /// Log-partition function ψ(η).
    pub fn log_partition(&self, eta: &[f64]) -> f64 {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { sigma } => 0.5 * sigma * sigma * eta[0] * eta[0],
            FamilyKind::ExponentialScale => -(-eta[0]).ln(),
            FamilyKind::Bernoulli => softplus(eta[0]),
            FamilyKind::Categorical { .. } => {
                let m = eta.iter().fold(0.0_f64, |a, &b| a.max(b));
                let s: f64 = (-m).exp() + eta.iter().map(|e| (e - m).exp()).sum::<f64>();
                m + s.ln()
            }
            FamilyKind::GaussianFull => {
                -eta[0] * eta[0] / (4.0 * eta[1]) - 0.5 * (-2.0 * eta[1]).ln()
            }
        }
    }

    /// ∇ψ(η), the expectation parameters.
    pub fn log_partition_grad(&self, eta: &[f64]) -> Vec<f64> {
        match self.family.kind {
            FamilyKind::GaussianFixedSigma { sigma } => vec![sigma * sigma * eta[0]],
            FamilyKind::ExponentialScale => vec![-1.0 / eta[0]],
            FamilyKind::Bernoulli => vec![logistic(eta[0])],
            FamilyKind::Categorical { .. } => softmax_head(eta),
            FamilyKind::GaussianFull => {
                let (a, b) = (eta[0], eta[1]);
                vec![-a / (2.0 * b), a * a / (4.0 * b * b) - 1.0 / (2.0 * b)]
            }
        }
    }

    /// Bregman form ψ(η_q) − ψ(η_p) − (η_q − η_p)·∇ψ(η_p), in default-chart coordinates.
    pub fn bregman(&self, p: &[f64], q: &[f64]) -> f64 {
        let ep = self.to_natural(p);
        let eq = self.to_natural(q);
        let grad = self.log_partition_grad(&ep);
        let lin: f64 = eq.iter().zip(&ep).zip(&grad).map(|((a, b), g)| (a - b) * g).sum();
        self.log_partition(&eq) - self.log_partition(&ep) - lin
    }
}

impl Divergence for NaturalChart {
    fn family_id(&self) -> String {
        self.family.family_id()
    }

    fn chart(&self) -> String {
        "natural".into()
    }

    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn check_domain(&self, eta: &[f64]) -> Result<()> {
        check_dim(self.dim(), eta)?;
        if let FamilyKind::ExponentialScale = self.family.kind {
            if eta[0] >= 0.0 {
                return Err(GeoError::Domain(format!("natural parameter {} must be negative", eta[0])));
            }
        }
        if let FamilyKind::GaussianFull = self.family.kind {
            if eta[1] >= 0.0 {
                return Err(GeoError::Domain(format!("natural parameter {} must be negative", eta[1])));
            }
        }
        self.family.check_domain(&self.from_natural(eta))
    }

    fn raw(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        self.family.raw(&self.from_natural(p), &self.from_natural(q))
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// First k − 1 probabilities of softmax(η, 0).
fn softmax_head(eta: &[f64]) -> Vec<f64> {
    let m = eta.iter().fold(0.0_f64, |a, &b| a.max(b));
    let denom: f64 = (-m).exp() + eta.iter().map(|e| (e - m).exp()).sum::<f64>();
    eta.iter().map(|e| (e - m).exp() / denom).collect()
}

/// How expectations for the score-moment oracle are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExpectationRule {
    /// Closed forms (continuous families) or exact outcome sums (discrete).
    #[default]
    Exact,
    /// Composite Gauss–Legendre for continuous families.
    Quadrature { order: usize },
}

/// Amari–Chentsov tensor T_ijk = E_p[∂_i ℓ ∂_j ℓ ∂_k ℓ] in the family's
/// default chart.
pub fn score_moment_tensor(family: &Family, p: &CoordinatePoint) -> Result<CubicTensor> {
    score_moment_tensor_with(family, p, ExpectationRule::Exact)
}

pub fn score_moment_tensor_with(
    family: &Family,
    p: &CoordinatePoint,
    rule: ExpectationRule,
) -> Result<CubicTensor> {
    family.check_point(p)?;
    let x = &p.coords;
    let n = family.dim();
    let chart = family.chart();
    let discrete = matches!(
        family.kind,
        FamilyKind::Bernoulli | FamilyKind::Categorical { .. }
    );
    if discrete || rule == ExpectationRule::Exact {
        let comps = match family.kind {
            FamilyKind::GaussianFixedSigma { .. } => vec![0.0],
            FamilyKind::ExponentialScale => vec![-2.0 / x[0].powi(3)],
            FamilyKind::GaussianFull => {
                let s3 = x[1].powi(3);
                let mut t = vec![0.0; 8];
                // indices: 0 = μ, 1 = σ
                for idx in [1, 2, 4] {
                    t[idx] = 2.0 / s3;
                }
                t[7] = 8.0 / s3;
                t
            }
            FamilyKind::Bernoulli | FamilyKind::Categorical { .. } => {
                let probs = family.simplex(x);
                let k = probs.len();
                let mut t = vec![0.0; n * n * n];
                for (m, &pm) in probs.iter().enumerate() {
                    let score: Vec<f64> = (0..n)
                        .map(|i| {
                            if m == k - 1 {
                                -1.0 / probs[k - 1]
                            } else if m == i {
                                1.0 / probs[i]
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    for a in 0..n {
                        for b in 0..n {
                            for c in 0..n {
                                t[(a * n + b) * n + c] += pm * score[a] * score[b] * score[c];
                            }
                        }
                    }
                }
                t
            }
        };
        let method = if discrete {
            Method::ScoreMoment
        } else {
            Method::ClosedForm
        };
        return Ok(CubicTensor::from_raw(n, comps, x.clone(), chart, None, method));
    }

    let ExpectationRule::Quadrature { order } = rule else {
        unreachable!()
    };
    let gl = GaussLegendre::new(order);
    let comps = match family.kind {
        FamilyKind::ExponentialScale => {
            let th = x[0];
            // ℓ = log θ − θx, ∂ℓ = 1/θ − x
            let upper = 80.0 / th;
            vec![gl.integrate(0.0, upper, 8, |v| {
                let s = 1.0 / th - v;
                th * (-th * v).exp() * s * s * s
            })]
        }
        FamilyKind::GaussianFixedSigma { .. } | FamilyKind::GaussianFull => {
            let (mu, sigma) = match family.kind {
                FamilyKind::GaussianFixedSigma { sigma } => (x[0], sigma),
                _ => (x[0], x[1]),
            };
            let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let _ = mu;
            let mut t = vec![0.0; n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        // z = (x − μ)/σ; ∂_μ ℓ = z/σ, ∂_σ ℓ = (z² − 1)/σ
                        let score = |i: usize, z: f64| {
                            if i == 0 {
                                z / sigma
                            } else {
                                (z * z - 1.0) / sigma
                            }
                        };
                        t[(a * n + b) * n + c] = gl.integrate(-14.0, 14.0, 8, |z| {
                            density(z) * score(a, z) * score(b, z) * score(c, z)
                        });
                    }
                }
            }
            t
        }
        _ => unreachable!(),
    };
    Ok(CubicTensor::from_raw(
        n,
        comps,
        x.clone(),
        chart,
        None,
        Method::ScoreMomentQuadrature,
    ))
}

impl NaturalChart {
    /// Pushes a default-chart tensor at `y` to natural coordinates.
    pub fn push_cubic(&self, t: &CubicTensor, y: &[f64]) -> Result<CubicTensor> {
        let n = t.dim;
        let jinv = tensor::invert(&self.jacobian(y), n)
            .ok_or_else(|| GeoError::Numerical("singular natural-chart jacobian".into()))?;
        let comps = tensor::pullback_cubic(&t.components, &jinv, n);
        Ok(CubicTensor::from_raw(
            n,
            comps,
            self.to_natural(y),
            "natural",
            t.step,
            Method::Transported,
        ))
    }

    /// Pulls a natural-chart tensor back to default-chart coordinates at `y`.
    pub fn pull_cubic(&self, t: &CubicTensor, y: &[f64]) -> CubicTensor {
        let n = t.dim;
        let comps = tensor::pullback_cubic(&t.components, &self.jacobian(y), n);
        CubicTensor::from_raw(n, comps, y.to_vec(), self.family.chart(), t.step, Method::Transported)
    }

    pub fn push_metric(&self, g: &MetricTensor, y: &[f64]) -> Result<MetricTensor> {
        let n = g.dim;
        let jinv = tensor::invert(&self.jacobian(y), n)
            .ok_or_else(|| GeoError::Numerical("singular natural-chart jacobian".into()))?;
        let comps = tensor::pullback_metric(&g.components, &jinv, n);
        Ok(MetricTensor::from_raw(
            n,
            comps,
            self.to_natural(y),
            "natural",
            g.step,
            Method::Transported,
        ))
    }

    /// Moves third-order expansion coefficients of `D(P‖P+dx)` from natural
    /// coordinates to the default chart at `y`, including the metric term
    /// generated by the curvature of the chart change.
    pub fn pull_expansion_cubic(
        &self,
        a_nat: &CubicTensor,
        g_nat: &MetricTensor,
        y: &[f64],
    ) -> CubicTensor {
        let n = a_nat.dim;
        let comps = tensor::pullback_expansion_cubic(
            &a_nat.components,
            &g_nat.components,
            &self.jacobian(y),
            &self.hessian(y),
            n,
        );
        CubicTensor::from_raw(n, comps, y.to_vec(), self.family.chart(), a_nat.step, Method::Transported)
    }
}

/// Exact cubic coefficient of `D(P‖P+dx)` in the family's default chart.
///
/// In natural coordinates the expansion cubic equals the score third moment;
/// the default-chart value follows from the expansion transformation law.
pub fn expansion_cubic_oracle(family: &Family, p: &CoordinatePoint) -> Result<CubicTensor> {
    let chart = natural_chart(family)?;
    let t = score_moment_tensor(family, p)?;
    let g = family.fisher_metric(p)?;
    let t_nat = chart.push_cubic(&t, &p.coords)?;
    let g_nat = chart.push_metric(&g, &p.coords)?;
    let mut out = chart.pull_expansion_cubic(&t_nat, &g_nat, &p.coords);
    out.method = Method::ClosedForm;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(f: &Family, c: &[f64]) -> CoordinatePoint {
        f.point(c.to_vec()).unwrap()
    }

    #[test]
    fn coincident_categorical_is_zero() {
        let f = Family::categorical(2);
        assert_eq!(evaluate(&f, &pt(&f, &[0.5]), &pt(&f, &[0.5])).unwrap(), 0.0);
    }

    #[test]
    fn exponential_closed_form_value() {
        let f = Family::exponential();
        let d = evaluate(&f, &pt(&f, &[1.0]), &pt(&f, &[2.0])).unwrap();
        assert_relative_eq!(d, 1.0 - 2f64.ln(), epsilon = 1e-15);
        assert!((d - 0.3068528).abs() < 1e-7);
    }

    #[test]
    fn gaussian_fixed_quadratic() {
        let f = Family::gaussian_fixed(1.0);
        let d = evaluate(&f, &pt(&f, &[0.0]), &pt(&f, &[0.1])).unwrap();
        assert_relative_eq!(d, 0.005, epsilon = 1e-15);
    }

    #[test]
    fn domain_errors() {
        let f = Family::bernoulli();
        assert!(matches!(f.point(vec![1.0]), Err(GeoError::Domain(_))));
        assert!(matches!(f.point(vec![0.0]), Err(GeoError::Domain(_))));
        assert!(matches!(f.point(vec![1e-10]), Err(GeoError::Domain(_))));
        assert!(f.point(vec![1e-8]).is_ok());
        let e = Family::exponential();
        assert!(matches!(e.point(vec![-1.0]), Err(GeoError::Domain(_))));
        let c = Family::categorical(3);
        assert!(matches!(c.point(vec![0.6, 0.5]), Err(GeoError::Domain(_))));
        assert!(matches!(
            c.point(vec![0.5]),
            Err(GeoError::DimensionMismatch { expected: 2, got: 1 })
        ));
        let g = Family::gaussian();
        assert!(matches!(g.point(vec![0.0, 0.0]), Err(GeoError::Domain(_))));
    }

    #[test]
    fn mismatched_family_is_usage_error() {
        let b = Family::bernoulli();
        let c = Family::categorical(2);
        let p = pt(&b, &[0.3]);
        let q = pt(&c, &[0.3]);
        assert!(matches!(evaluate(&b, &p, &q), Err(GeoError::Usage(_))));
    }

    #[test]
    fn family_grammar_round_trips() {
        for s in ["exponential", "bernoulli", "gaussian", "gaussian-fixed:2", "categorical:3"] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("categorical:1".parse::<Family>().is_err());
        assert!("poisson".parse::<Family>().is_err());
        assert_eq!(parse_coords("0.2, 0.3").unwrap(), vec![0.2, 0.3]);
    }

    #[test]
    fn natural_chart_examples() {
        let e = natural_chart(&Family::exponential()).unwrap();
        assert_eq!(e.to_natural(&[1.0]), vec![-1.0]);
        assert_eq!(e.jacobian(&[1.0]), vec![-1.0]);
        let b = natural_chart(&Family::bernoulli()).unwrap();
        assert_relative_eq!(b.to_natural(&[0.75])[0], 3f64.ln(), epsilon = 1e-15);
        let g = natural_chart(&Family::gaussian_fixed(1.0)).unwrap();
        assert_eq!(g.to_natural(&[0.3]), vec![0.3]);
    }

    #[test]
    fn natural_chart_inverts() {
        let cases = [
            (Family::bernoulli(), vec![0.3]),
            (Family::categorical(4), vec![0.1, 0.2, 0.3]),
            (Family::gaussian(), vec![0.4, 1.7]),
            (Family::gaussian_fixed(2.0), vec![-0.7]),
        ];
        for (f, y) in cases {
            let c = natural_chart(&f).unwrap();
            let back = c.from_natural(&c.to_natural(&y));
            for (a, b) in back.iter().zip(&y) {
                assert_relative_eq!(a, b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn natural_jacobian_matches_finite_differences() {
        let cases = [
            (Family::bernoulli(), vec![0.3]),
            (Family::categorical(3), vec![0.2, 0.5]),
            (Family::gaussian(), vec![0.4, 1.7]),
        ];
        let h = 1e-6;
        for (f, y) in cases {
            let c = natural_chart(&f).unwrap();
            let n = y.len();
            let jac = c.jacobian(&y);
            let hess = c.hessian(&y);
            for a in 0..n {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[a] += h;
                ym[a] -= h;
                let ep = c.to_natural(&yp);
                let em = c.to_natural(&ym);
                let jp = c.jacobian(&yp);
                let jm = c.jacobian(&ym);
                for i in 0..n {
                    let fd = (ep[i] - em[i]) / (2.0 * h);
                    assert_relative_eq!(jac[i * n + a], fd, max_relative = 1e-7);
                    for b in 0..n {
                        // ∂/∂y^a of J(i, b)
                        let fd2 = (jp[i * n + b] - jm[i * n + b]) / (2.0 * h);
                        assert_relative_eq!(
                            hess[(i * n + a) * n + b],
                            fd2,
                            max_relative = 1e-6,
                            epsilon = 1e-8
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn score_moment_examples() {
        let g = Family::gaussian_fixed(1.0);
        assert_eq!(score_moment_tensor(&g, &pt(&g, &[0.4])).unwrap().components, vec![0.0]);

        let e = Family::exponential();
        let t = score_moment_tensor(&e, &pt(&e, &[1.0])).unwrap();
        let nat = natural_chart(&e).unwrap().push_cubic(&t, &[1.0]).unwrap();
        assert_relative_eq!(nat.components[0], 2.0, epsilon = 1e-15);

        let b = Family::bernoulli();
        let t = score_moment_tensor(&b, &pt(&b, &[0.5])).unwrap();
        assert_eq!(t.components[0], 0.0);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let rule = ExpectationRule::Quadrature { order: 64 };
        let e = Family::exponential();
        for th in [0.5, 1.0, 3.0] {
            let p = pt(&e, &[th]);
            let exact = score_moment_tensor(&e, &p).unwrap();
            let quad = score_moment_tensor_with(&e, &p, rule).unwrap();
            assert_relative_eq!(exact.components[0], quad.components[0], max_relative = 1e-10);
        }
        let g = Family::gaussian();
        let p = pt(&g, &[0.3, 1.5]);
        let exact = score_moment_tensor(&g, &p).unwrap();
        let quad = score_moment_tensor_with(&g, &p, rule).unwrap();
        for (a, b) in exact.components.iter().zip(&quad.components) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn fisher_metric_matches_score_second_moment_for_categorical() {
        let f = Family::categorical(3);
        let p = pt(&f, &[0.2, 0.5]);
        let g = f.fisher_metric(&p).unwrap();
        let probs = [0.2, 0.5, 0.3];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for (m, &pm) in probs.iter().enumerate() {
                    let sc = |i: usize| {
                        if m == 2 {
                            -1.0 / probs[2]
                        } else if m == i {
                            1.0 / probs[i]
                        } else {
                            0.0
                        }
                    };
                    s += pm * sc(a) * sc(b);
                }
                assert_relative_eq!(g.get(a, b), s, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn expansion_oracle_for_bernoulli_is_minus_twice_the_tensor() {
        // Third derivative of D(p‖q) in q at q = p: −2/p² + 2/(1 − p)².
        let b = Family::bernoulli();
        for p in [0.2, 0.35, 0.8] {
            let a = expansion_cubic_oracle(&b, &pt(&b, &[p])).unwrap();
            let direct = -2.0 / (p * p) + 2.0 / ((1.0 - p) * (1.0 - p));
            assert_relative_eq!(a.components[0], direct, max_relative = 1e-12);
        }
        let e = Family::exponential();
        let a = expansion_cubic_oracle(&e, &pt(&e, &[1.1])).unwrap();
        assert_relative_eq!(a.components[0], -2.0 / 1.1f64.powi(3), max_relative = 1e-12);
    }
}
