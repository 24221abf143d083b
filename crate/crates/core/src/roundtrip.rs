//! Round-trip cost engines: the three-leg log-return expansion, the cubic
//! work surcharge of a single step, path sums of surcharges, and the spread
//! as an average surcharge over a user-chosen trade distribution.
//!
//! Leg values `x` are simple returns, so `log(1 + x)` is the log-return of
//! a leg and `log(1+x) = x − x²/2 + x³/3 − …`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, SkewNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::divergence::{expansion_cubic_oracle, parse_coords, Divergence, Family};
use crate::error::{GeoError, Result};
use crate::exec::{self, Estimate, Execution, Moments};
use crate::extraction::{extract_cubic, ExtractOptions};
use crate::tensor::{CubicTensor, Method};

/// Largest tolerated share of rejected leg draws.
pub const MAX_REJECTION_RATE: f64 = 0.01;
/// Per-sample tolerance of the log-sum/log-product identity.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Distribution of one leg's simple return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LegDistribution {
    /// Always `value`.
    Degenerate { value: f64 },
    Gaussian { location: f64, scale: f64 },
    /// Azzalini skew-normal; negative shape gives negative skew.
    SkewNormal { location: f64, scale: f64, shape: f64 },
    /// `location + sign(shape)·scale·(e^{|shape|Z} − e^{shape²/2})/|shape|`:
    /// mean `location`, skew of the sign of `shape`.
    ShiftedLognormal { location: f64, scale: f64, shape: f64 },
}

impl LegDistribution {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        match *self {
            LegDistribution::Degenerate { value } => {
                if !(finite(value) && value > -1.0) {
                    return Err(GeoError::Usage(format!(
                        "degenerate leg value {value} must satisfy 1 + x > 0"
                    )));
                }
            }
            LegDistribution::Gaussian { location, scale } => {
                if !(finite(location) && scale > 0.0 && finite(scale)) {
                    return Err(GeoError::Usage(format!("gaussian leg needs scale > 0, got {scale}")));
                }
            }
            LegDistribution::SkewNormal { location, scale, shape }
            | LegDistribution::ShiftedLognormal { location, scale, shape } => {
                if !(finite(location) && finite(shape) && scale > 0.0 && finite(scale)) {
                    return Err(GeoError::Usage(format!("leg needs scale > 0, got {scale}")));
                }
                if matches!(self, LegDistribution::ShiftedLognormal { .. }) && shape == 0.0 {
                    return Err(GeoError::Usage("lognormal leg needs shape ≠ 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Skew-normal leg with location chosen so that the mean is zero.
    pub fn centered_skew_normal(scale: f64, shape: f64) -> Self {
        let delta = shape / (1.0 + shape * shape).sqrt();
        LegDistribution::SkewNormal {
            location: -scale * delta * (2.0 / std::f64::consts::PI).sqrt(),
            scale,
            shape,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            LegDistribution::Degenerate { value } => value,
            LegDistribution::Gaussian { location, scale } => {
                Normal::new(location, scale).expect("validated").sample(rng)
            }
            LegDistribution::SkewNormal { location, scale, shape } => {
                SkewNormal::new(location, scale, shape).expect("validated").sample(rng)
            }
            LegDistribution::ShiftedLognormal { location, scale, shape } => {
                let z: f64 = rng.sample(StandardNormal);
                let s = shape.abs();
                location + shape.signum() * scale * ((s * z).exp() - (0.5 * s * s).exp()) / s
            }
        }
    }

    /// Analytic (mean, variance, third central moment).
    pub fn moments(&self) -> (f64, f64, f64) {
        use std::f64::consts::PI;
        match *self {
            LegDistribution::Degenerate { value } => (value, 0.0, 0.0),
            LegDistribution::Gaussian { location, scale } => (location, scale * scale, 0.0),
            LegDistribution::SkewNormal { location, scale, shape } => {
                let delta = shape / (1.0 + shape * shape).sqrt();
                let b = delta * (2.0 / PI).sqrt();
                let mean = location + scale * b;
                let var = scale * scale * (1.0 - b * b);
                let k3 = scale.powi(3) * (4.0 - PI) / 2.0 * b.powi(3);
                (mean, var, k3)
            }
            LegDistribution::ShiftedLognormal { location, scale, shape } => {
                let s2 = shape * shape;
                let w = s2.exp();
                let var_y = (w - 1.0) * w;
                let skew_y = (w + 2.0) * (w - 1.0).sqrt();
                let c = scale / shape.abs();
                (location, c * c * var_y, shape.signum() * c.powi(3) * skew_y * var_y.powf(1.5))
            }
        }
    }

    /// E[x³] from the analytic moments.
    pub fn raw_third_moment(&self) -> f64 {
        let (m, v, k3) = self.moments();
        k3 + 3.0 * m * v + m * m * m
    }
}

impl fmt::Display for LegDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LegDistribution::Degenerate { value } => write!(f, "fixed:{value}"),
            LegDistribution::Gaussian { location, scale } => write!(f, "gaussian:{location},{scale}"),
            LegDistribution::SkewNormal { location, scale, shape } => {
                write!(f, "skewnormal:{location},{scale},{shape}")
            }
            LegDistribution::ShiftedLognormal { location, scale, shape } => {
                write!(f, "lognormal:{location},{scale},{shape}")
            }
        }
    }
}

impl FromStr for LegDistribution {
    type Err = GeoError;

    /// `fixed:v`, `gaussian:loc,scale`, `skewnormal:loc,scale,shape`,
    /// `lognormal:loc,scale,shape`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| GeoError::Parse(format!("leg '{s}' needs the form kind:params")))?;
        let v = parse_coords(args)?;
        let want = |n: usize| {
            if v.len() == n {
                Ok(())
            } else {
                Err(GeoError::Parse(format!("leg '{s}' expects {n} parameters")))
            }
        };
        let leg = match kind {
            "fixed" => {
                want(1)?;
                LegDistribution::Degenerate { value: v[0] }
            }
            "gaussian" => {
                want(2)?;
                LegDistribution::Gaussian { location: v[0], scale: v[1] }
            }
            "skewnormal" => {
                want(3)?;
                LegDistribution::SkewNormal { location: v[0], scale: v[1], shape: v[2] }
            }
            "lognormal" => {
                want(3)?;
                LegDistribution::ShiftedLognormal { location: v[0], scale: v[1], shape: v[2] }
            }
            _ => return Err(GeoError::Parse(format!("unknown leg kind '{kind}'"))),
        };
        leg.validate()?;
        Ok(leg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegMoments {
    pub mean: f64,
    pub variance: f64,
    pub third_central_moment: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleReport {
    pub samples: u64,
    pub seed: u64,
    pub legs: [LegDistribution; 3],
    /// Σ log(1 + x_i)
    pub exact: Estimate,
    /// Σx − ½Σx²
    pub quadratic_truncation: Estimate,
    /// Σx − ½Σx² + ⅓Σx³
    pub cubic_truncation: Estimate,
    /// ⅓Σx³
    pub cubic_contribution: Estimate,
    /// exact − quadratic truncation
    pub quadratic_remainder: Estimate,
    /// exact − cubic truncation
    pub cubic_remainder: Estimate,
    pub per_leg: [LegMoments; 3],
    pub drawn: u64,
    pub rejected: u64,
    /// Samples where |Σ log(1+x) − log Π(1+x)| exceeded the identity tolerance.
    pub identity_violations: u64,
    pub max_identity_error: f64,
}

#[derive(Default, Clone)]
struct TriangleChunk {
    exact: Moments,
    quad: Moments,
    cubic: Moments,
    bare: Moments,
    quad_rem: Moments,
    cubic_rem: Moments,
    leg_pow: [[f64; 3]; 3],
    drawn: u64,
    rejected: u64,
    violations: u64,
    max_identity_error: f64,
}

impl TriangleChunk {
    fn merge(&mut self, o: &TriangleChunk) {
        self.exact.merge(&o.exact);
        self.quad.merge(&o.quad);
        self.cubic.merge(&o.cubic);
        self.bare.merge(&o.bare);
        self.quad_rem.merge(&o.quad_rem);
        self.cubic_rem.merge(&o.cubic_rem);
        for l in 0..3 {
            for k in 0..3 {
                self.leg_pow[l][k] += o.leg_pow[l][k];
            }
        }
        self.drawn += o.drawn;
        self.rejected += o.rejected;
        self.violations += o.violations;
        self.max_identity_error = self.max_identity_error.max(o.max_identity_error);
    }
}

/// Minimum number of triangle samples.
pub const MIN_TRIANGLE_SAMPLES: u64 = 1000;

/// Simulates independent legs and the exact and truncated net log-returns.
pub fn triangle_simulate(
    legs: &[LegDistribution; 3],
    samples: u64,
    seed: u64,
    execution: Execution,
) -> Result<TriangleReport> {
    if samples < MIN_TRIANGLE_SAMPLES {
        return Err(GeoError::Usage(format!(
            "at least {MIN_TRIANGLE_SAMPLES} samples are required, got {samples}"
        )));
    }
    for leg in legs {
        leg.validate()?;
    }
    let layout = exec::chunk_layout(samples);
    let chunks = exec::map_slice(execution, &layout, |&(chunk, count)| {
        let mut rng = exec::chunk_rng(seed, chunk);
        let mut c = TriangleChunk::default();
        let reject_cap = count.max(1) * 2;
        for _ in 0..count {
            let mut x = [0.0; 3];
            for (l, leg) in legs.iter().enumerate() {
                loop {
                    let v = leg.sample(&mut rng);
                    c.drawn += 1;
                    if 1.0 + v > 0.0 {
                        x[l] = v;
                        break;
                    }
                    c.rejected += 1;
                    if c.rejected > reject_cap {
                        return Err(GeoError::RejectionOverflow {
                            rejected: c.rejected,
                            drawn: c.drawn,
                        });
                    }
                }
            }
            let s1: f64 = x.iter().sum();
            let s2: f64 = x.iter().map(|v| v * v).sum();
            let s3: f64 = x.iter().map(|v| v * v * v).sum();
            let exact: f64 = x.iter().map(|v| v.ln_1p()).sum();
            let product = x.iter().map(|v| 1.0 + v).product::<f64>().ln();
            let err = (exact - product).abs();
            if err > IDENTITY_TOL {
                c.violations += 1;
            }
            c.max_identity_error = c.max_identity_error.max(err);
            let quad = s1 - 0.5 * s2;
            let bare = s3 / 3.0;
            let cubic = quad + bare;
            c.exact.push(exact);
            c.quad.push(quad);
            c.cubic.push(cubic);
            c.bare.push(bare);
            c.quad_rem.push(exact - quad);
            c.cubic_rem.push(exact - cubic);
            for l in 0..3 {
                c.leg_pow[l][0] += x[l];
                c.leg_pow[l][1] += x[l] * x[l];
                c.leg_pow[l][2] += x[l] * x[l] * x[l];
            }
        }
        Ok(c)
    });
    let mut total = TriangleChunk::default();
    for c in chunks {
        total.merge(&c?);
    }
    if total.rejected as f64 > MAX_REJECTION_RATE * total.drawn as f64 {
        return Err(GeoError::RejectionOverflow {
            rejected: total.rejected,
            drawn: total.drawn,
        });
    }
    let n = samples as f64;
    let per_leg = std::array::from_fn(|l| {
        let [p1, p2, p3] = total.leg_pow[l];
        let m = p1 / n;
        let e2 = p2 / n;
        let e3 = p3 / n;
        let var = (e2 - m * m).max(0.0);
        let k3 = e3 - 3.0 * m * e2 + 2.0 * m * m * m;
        LegMoments {
            mean: m,
            variance: var,
            third_central_moment: k3,
            skewness: if var > 0.0 { k3 / var.powf(1.5) } else { 0.0 },
        }
    });
    Ok(TriangleReport {
        samples,
        seed,
        legs: *legs,
        exact: total.exact.estimate(),
        quadratic_truncation: total.quad.estimate(),
        cubic_truncation: total.cubic.estimate(),
        cubic_contribution: total.bare.estimate(),
        quadratic_remainder: total.quad_rem.estimate(),
        cubic_remainder: total.cubic_rem.estimate(),
        per_leg,
        drawn: total.drawn,
        rejected: total.rejected,
        identity_violations: total.violations,
        max_identity_error: total.max_identity_error,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub shape: f64,
    pub report: TriangleReport,
}

/// Runs the triangle with all three legs zero-mean skew-normal of the given
/// scale, for each shape.
pub fn triangle_shape_sweep(
    shapes: &[f64],
    scale: f64,
    samples: u64,
    seed: u64,
    execution: Execution,
) -> Result<Vec<SweepPoint>> {
    shapes
        .iter()
        .map(|&shape| {
            let leg = LegDistribution::centered_skew_normal(scale, shape);
            Ok(SweepPoint {
                shape,
                report: triangle_simulate(&[leg; 3], samples, seed, execution)?,
            })
        })
        .collect()
}

/// Where the cubic tensor of a step comes from.
#[derive(Clone, Copy)]
pub enum CubicField<'a> {
    /// Finite-difference extraction from any divergence.
    Extracted {
        divergence: &'a dyn Divergence,
        options: ExtractOptions,
    },
    /// Closed-form expansion cubic of a classical family.
    Oracle(&'a Family),
}

impl<'a> CubicField<'a> {
    pub fn divergence(&self) -> &'a dyn Divergence {
        match *self {
            CubicField::Extracted { divergence, .. } => divergence,
            CubicField::Oracle(f) => f,
        }
    }

    pub fn method(&self) -> Method {
        match self {
            CubicField::Extracted { options, .. } if options.richardson => {
                Method::CentralDifferenceRichardson
            }
            CubicField::Extracted { .. } => Method::CentralDifference,
            CubicField::Oracle(_) => Method::ClosedForm,
        }
    }

    pub fn at(&self, x: &[f64]) -> Result<CubicTensor> {
        match *self {
            CubicField::Extracted { divergence, options } => extract_cubic(divergence, x, options),
            CubicField::Oracle(family) => {
                let p = family.point(x.to_vec())?;
                expansion_cubic_oracle(family, &p)
            }
        }
    }
}

/// (1/6) T_ijk dx^i dx^j dx^k with T the cubic expansion coefficient at `from`.
pub fn work_surcharge(field: &CubicField<'_>, from: &[f64], step: &[f64]) -> Result<f64> {
    let div = field.divergence();
    if step.len() != div.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: div.dim(),
            got: step.len(),
        });
    }
    div.check_domain(from)?;
    let to: Vec<f64> = from.iter().zip(step).map(|(a, b)| a + b).collect();
    div.check_domain(&to)?;
    Ok(field.at(from)?.contract(step) / 6.0)
}

/// Ordered waypoints in a family chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub family_id: String,
    pub waypoints: Vec<Vec<f64>>,
}

impl PathSpec {
    pub fn new(div: &dyn Divergence, waypoints: Vec<Vec<f64>>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(GeoError::Usage(format!(
                "a path needs at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        for w in &waypoints {
            div.check_domain(w)?;
        }
        Ok(PathSpec {
            family_id: div.family_id(),
            waypoints,
        })
    }

    /// One waypoint per non-empty line, coordinates comma-separated; lines
    /// starting with `#` are ignored.
    pub fn parse(div: &dyn Divergence, text: &str) -> Result<Self> {
        let pts = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(parse_coords)
            .collect::<Result<Vec<_>>>()?;
        PathSpec::new(div, pts)
    }

    pub fn reversed(&self) -> PathSpec {
        let mut w = self.waypoints.clone();
        w.reverse();
        PathSpec {
            family_id: self.family_id.clone(),
            waypoints: w,
        }
    }
}

/// Point at which each step's tensor is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepEvaluation {
    #[default]
    Start,
    Midpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepWork {
    pub from: Vec<f64>,
    pub step: Vec<f64>,
    pub surcharge: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemonReport {
    pub family_id: String,
    pub chart: String,
    pub tensor_method: Method,
    pub evaluation: StepEvaluation,
    pub path: Vec<Vec<f64>>,
    pub steps: Vec<StepWork>,
    pub total: f64,
    pub reversed_steps: Vec<StepWork>,
    pub reversed_total: f64,
    /// total + reversed_total
    pub round_trip: f64,
    /// Leading-order bound on |round_trip|.
    pub cancellation_bound: f64,
    pub within_bound: bool,
    /// Largest |∂_l T_ijk| sampled at the waypoints.
    pub tensor_gradient_scale: f64,
    /// "negative", "positive" or "zero".
    pub sign: String,
}

/// Step used to sample the tensor gradient for the cancellation bound.
const GRADIENT_STEP: f64 = 1e-2;

fn path_sum(field: &CubicField<'_>, path: &[Vec<f64>], evaluation: StepEvaluation) -> Result<Vec<StepWork>> {
    path.windows(2)
        .map(|w| {
            let step: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
            let at: Vec<f64> = match evaluation {
                StepEvaluation::Start => w[0].clone(),
                StepEvaluation::Midpoint => w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect(),
            };
            let surcharge = field.at(&at)?.contract(&step) / 6.0;
            Ok(StepWork {
                from: w[0].clone(),
                step,
                surcharge,
            })
        })
        .collect()
}

fn gradient_scale(field: &CubicField<'_>, points: &[Vec<f64>]) -> Result<f64> {
    let n = field.divergence().dim();
    let mut scale = 0.0_f64;
    for x in points {
        for l in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += GRADIENT_STEP;
            xm[l] -= GRADIENT_STEP;
            let tp = field.at(&xp)?;
            let tm = field.at(&xm)?;
            for (a, b) in tp.components.iter().zip(&tm.components) {
                scale = scale.max(((a - b) / (2.0 * GRADIENT_STEP)).abs());
            }
        }
    }
    Ok(scale)
}

/// Sums work surcharges along `path` and along its reverse.
///
/// With start-point evaluation the two totals cancel to leading order:
/// each step contributes `(1/6)[T(x_k) − T(x_{k+1})](Δ,Δ,Δ)`, bounded by
/// `(1/6)·n⁴·max|∂T|·|Δ|∞⁴`. The reported bound doubles this to cover the
/// gradient varying between waypoints.
pub fn demon_work(field: &CubicField<'_>, path: &PathSpec, evaluation: StepEvaluation) -> Result<DemonReport> {
    let div = field.divergence();
    if path.family_id != div.family_id() {
        return Err(GeoError::Usage(format!(
            "path belongs to {} but the divergence is {}",
            path.family_id,
            div.family_id()
        )));
    }
    let steps = path_sum(field, &path.waypoints, evaluation)?;
    let rev = path.reversed();
    let reversed_steps = path_sum(field, &rev.waypoints, evaluation)?;
    let total: f64 = steps.iter().map(|s| s.surcharge).sum();
    let reversed_total: f64 = reversed_steps.iter().map(|s| s.surcharge).sum();
    let round_trip = total + reversed_total;

    let n = div.dim() as f64;
    let max_step = steps
        .iter()
        .flat_map(|s| s.step.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let tensor_gradient_scale = gradient_scale(field, &path.waypoints)?;
    let cancellation_bound =
        2.0 * n.powi(4) * tensor_gradient_scale * max_step.powi(4) * steps.len() as f64 / 6.0;
    // Noise floor for paths whose steps vanish.
    let within_bound = round_trip.abs() <= cancellation_bound + 1e-15;
    let sign = if total < 0.0 {
        "negative"
    } else if total > 0.0 {
        "positive"
    } else {
        "zero"
    };
    Ok(DemonReport {
        family_id: div.family_id(),
        chart: div.chart(),
        tensor_method: field.method(),
        evaluation,
        path: path.waypoints.clone(),
        steps,
        total,
        reversed_steps,
        reversed_total,
        round_trip,
        cancellation_bound,
        within_bound,
        tensor_gradient_scale,
        sign: sign.into(),
    })
}

/// Distribution over (point, step) trades for the spread estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TradeSampler {
    /// Always the same point and step.
    Fixed { point: Vec<f64>, step: Vec<f64> },
    /// Fixed point; the step is ±`step` with equal probability.
    Symmetric { point: Vec<f64>, step: Vec<f64> },
    /// Point uniform in the box [lo, hi]; step ±`step` with equal probability.
    UniformBox { lo: Vec<f64>, hi: Vec<f64>, step: Vec<f64> },
}

impl TradeSampler {
    /// `fixed:<point>,<step>`, `symmetric:<point>,<step>`,
    /// `box:<lo>,<hi>,<step>`, each block `dim` numbers long.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| GeoError::Parse(format!("sampler '{spec}' needs the form kind:numbers")))?;
        let v = parse_coords(args)?;
        let blocks = match kind {
            "fixed" | "symmetric" => 2,
            "box" => 3,
            _ => return Err(GeoError::Parse(format!("unknown sampler kind '{kind}'"))),
        };
        if v.len() != blocks * dim {
            return Err(GeoError::Parse(format!(
                "sampler '{spec}' needs {} numbers for a {dim}-dimensional chart",
                blocks * dim
            )));
        }
        let b = |i: usize| v[i * dim..(i + 1) * dim].to_vec();
        Ok(match kind {
            "fixed" => TradeSampler::Fixed { point: b(0), step: b(1) },
            "symmetric" => TradeSampler::Symmetric { point: b(0), step: b(1) },
            _ => TradeSampler::UniformBox { lo: b(0), hi: b(1), step: b(2) },
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let flip = |rng: &mut R, step: &[f64]| {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            step.iter().map(|v| v * s).collect::<Vec<f64>>()
        };
        match self {
            TradeSampler::Fixed { point, step } => (point.clone(), step.clone()),
            TradeSampler::Symmetric { point, step } => (point.clone(), flip(rng, step)),
            TradeSampler::UniformBox { lo, hi, step } => {
                let p = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
                (p, flip(rng, step))
            }
        }
    }
}

impl fmt::Display for TradeSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[&Vec<f64>]| {
            v.iter()
                .flat_map(|b| b.iter())
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            TradeSampler::Fixed { point, step } => write!(f, "fixed:{}", join(&[point, step])),
            TradeSampler::Symmetric { point, step } => write!(f, "symmetric:{}", join(&[point, step])),
            TradeSampler::UniformBox { lo, hi, step } => write!(f, "box:{}", join(&[lo, hi, step])),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadReport {
    pub family_id: String,
    pub chart: String,
    pub sampler: TradeSampler,
    pub sampler_spec: String,
    pub tensor_method: Method,
    pub samples: u64,
    pub seed: u64,
    pub spread: Estimate,
}

/// Monte-Carlo mean of the work surcharge over sampled trades.
pub fn spread_estimate(
    field: &CubicField<'_>,
    sampler: &TradeSampler,
    samples: u64,
    seed: u64,
    execution: Execution,
) -> Result<SpreadReport> {
    if samples == 0 {
        return Err(GeoError::Usage("at least one sample is required".into()));
    }
    let layout = exec::chunk_layout(samples);
    let chunks = exec::map_slice(execution, &layout, |&(chunk, count)| {
        let mut rng = exec::chunk_rng(seed, chunk);
        let mut m = Moments::default();
        for _ in 0..count {
            let (point, step) = sampler.draw(&mut rng);
            m.push(work_surcharge(field, &point, &step)?);
        }
        Ok(m)
    });
    let mut total = Moments::default();
    for c in chunks {
        total.merge(&c?);
    }
    let div = field.divergence();
    Ok(SpreadReport {
        family_id: div.family_id(),
        chart: div.chart(),
        sampler: sampler.clone(),
        sampler_spec: sampler.to_string(),
        tensor_method: field.method(),
        samples,
        seed,
        spread: total.estimate(),
    })
}
