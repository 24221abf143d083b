//! Finite-difference extraction of the expansion coefficients of
//! `f(dx) = D(P‖P+dx)`:
//!
//! ```text
//! f(dx) = ½ g_ij dx^i dx^j + (1/6) A_ijk dx^i dx^j dx^k + O(dx⁴)
//! ```
//!
//! `g` is the metric. `A` equals the Amari–Chentsov tensor only in natural
//! (exponential-affine) coordinates; in other charts it picks up a metric
//! term from the chart's second derivatives (see
//! [`crate::tensor::pullback_expansion_cubic`]).

use serde::{Deserialize, Serialize};

use crate::divergence::{
    expansion_cubic_oracle, natural_chart, score_moment_tensor, CoordinatePoint, Direction,
    Divergence, Family,
};
use crate::error::{GeoError, Result};
use crate::exec::{self, Execution};
use crate::tensor::{self, CubicTensor, Method, MetricTensor};

pub const DEFAULT_METRIC_STEP: f64 = 1e-2;
pub const DEFAULT_CUBIC_STEP: f64 = 5e-2;

/// Acceptable band for the ratio of successive Richardson differences,
/// relative to the expected 2² = 4.
const RICHARDSON_BAND: f64 = 10.0;

/// Asymmetry values below this are treated as exact zeros.
pub const SYMMETRY_FLOOR: f64 = 1e-14;

/// Points below 100 machine epsilons are dropped from log-log fits.
const FIT_FLOOR: f64 = 100.0 * f64::EPSILON;

/// The antisymmetric coefficient of a Bregman divergence relative to its
/// Amari–Chentsov tensor: `D(P‖P+dx) − D(P+dx‖P) = −(1/6) T(dx,dx,dx) + O(dx⁴)`.
pub const BREGMAN_ASYMMETRY_RATIO: f64 = -1.0 / 6.0;

/// The ratio obtained by expanding both directions around `P` with the
/// metric frozen at `P`, i.e. ignoring that the reverse expansion is based at
/// `P+dx`: `(1/6)T − (−(1/6)T) = (1/3)T`.
pub const FROZEN_METRIC_RATIO: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub h: f64,
    /// Combine steps h and h/2 to cancel the O(h²) error; a third level h/4
    /// is evaluated to check the extrapolation is well conditioned.
    pub richardson: bool,
    pub execution: Execution,
}

impl ExtractOptions {
    pub fn metric() -> Self {
        ExtractOptions {
            h: DEFAULT_METRIC_STEP,
            richardson: false,
            execution: Execution::default(),
        }
    }

    pub fn cubic() -> Self {
        ExtractOptions {
            h: DEFAULT_CUBIC_STEP,
            richardson: false,
            execution: Execution::default(),
        }
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.h > 0.0 && self.h.is_finite() {
            Ok(())
        } else {
            Err(GeoError::Usage(format!("step size must be positive, got {}", self.h)))
        }
    }

    fn method(&self) -> Method {
        if self.richardson {
            Method::CentralDifferenceRichardson
        } else {
            Method::CentralDifference
        }
    }
}

/// Evaluates `D(P‖P+dx)` at every displacement, in order.
fn eval_displacements(
    div: &dyn Divergence,
    p: &[f64],
    dxs: &[Vec<f64>],
    execution: Execution,
) -> Result<Vec<f64>> {
    let points: Vec<Vec<f64>> = dxs
        .iter()
        .map(|dx| p.iter().zip(dx).map(|(a, b)| a + b).collect())
        .collect();
    for q in &points {
        div.check_domain(q).map_err(|e| match e {
            GeoError::Domain(m) => GeoError::Domain(format!("finite-difference stencil leaves the domain ({m})")),
            other => other,
        })?;
    }
    exec::map_slice(execution, &points, |q| div.raw(p, q))
        .into_iter()
        .collect()
}

fn unit(n: usize, i: usize, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = s;
    v
}

/// Second-order central differences for all g_ij at step `h`.
fn raw_metric(div: &dyn Divergence, p: &[f64], h: f64, execution: Execution) -> Result<Vec<f64>> {
    let n = div.dim();
    let mut dxs = Vec::new();
    for i in 0..n {
        dxs.push(unit(n, i, h));
        dxs.push(unit(n, i, -h));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = vec![0.0; n];
                v[i] = si * h;
                v[j] = sj * h;
                dxs.push(v);
            }
        }
    }
    let f = eval_displacements(div, p, &dxs, execution)?;
    let mut g = vec![0.0; n * n];
    // f(0) = 0 exactly, so the centre term drops out.
    for i in 0..n {
        g[i * n + i] = (f[2 * i] + f[2 * i + 1]) / (h * h);
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let b = 2 * n + 4 * k;
        let v = (f[b] - f[b + 1] - f[b + 2] + f[b + 3]) / (4.0 * h * h);
        g[i * n + j] = v;
        g[j * n + i] = v;
    }
    Ok(g)
}

/// ∂_i∂_j∂_k f from the 8-point corner stencil
/// `Σ_{s∈{±1}³} s₁s₂s₃ f(h(s₁e_i + s₂e_j + s₃e_k)) / (8h³)`, for all index
/// triples. Repeated indices collapse the cube onto a line or a plane; the
/// formula stays a valid O(h²) difference with reach 3h.
fn raw_cubic(div: &dyn Divergence, p: &[f64], h: f64, execution: Execution) -> Result<Vec<f64>> {
    let n = div.dim();
    let mut triples = Vec::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                triples.push((i, j, k));
            }
        }
    }
    let signs: [(f64, f64, f64); 8] = [
        (1.0, 1.0, 1.0),
        (1.0, 1.0, -1.0),
        (1.0, -1.0, 1.0),
        (1.0, -1.0, -1.0),
        (-1.0, 1.0, 1.0),
        (-1.0, 1.0, -1.0),
        (-1.0, -1.0, 1.0),
        (-1.0, -1.0, -1.0),
    ];
    let mut dxs = Vec::with_capacity(triples.len() * 8);
    for &(i, j, k) in &triples {
        for &(a, b, c) in &signs {
            let mut v = vec![0.0; n];
            v[i] += a * h;
            v[j] += b * h;
            v[k] += c * h;
            dxs.push(v);
        }
    }
    let f = eval_displacements(div, p, &dxs, execution)?;
    let mut t = vec![0.0; n * n * n];
    let h3 = 8.0 * h * h * h;
    for (m, &(i, j, k)) in triples.iter().enumerate() {
        let mut s = 0.0;
        for (q, &(a, b, c)) in signs.iter().enumerate() {
            s += a * b * c * f[8 * m + q];
        }
        let v = s / h3;
        for (x, y, z) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            t[(x * n + y) * n + z] = v;
        }
    }
    Ok(t)
}

/// Richardson-combines `(h, h/2)` and checks the ratio of successive
/// differences against 4 using the `h/4` level. The check uses the largest
/// difference across components, since a single component whose leading
/// error term happens to vanish has a meaningless ratio. Differences at or
/// below `floor` are rounding noise and are not checked.
fn richardson(levels: [&[f64]; 3], floor: f64) -> Result<(Vec<f64>, Option<f64>)> {
    let [a, b, c] = levels;
    let max_abs = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale = max_abs(&mut b.iter().copied());
    let floor = floor.max(1e4 * f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let d1 = max_abs(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let d2 = max_abs(&mut b.iter().zip(c).map(|(x, y)| x - y));
    let out = a.iter().zip(b).map(|(x, y)| (4.0 * y - x) / 3.0).collect();
    if d1 <= floor || d2 <= floor {
        return Ok((out, None));
    }
    let r = d1 / d2;
    if !(r > 4.0 / RICHARDSON_BAND && r < 4.0 * RICHARDSON_BAND) {
        return Err(GeoError::Conditioning(format!(
            "Richardson difference ratio {r:.3} is outside [{:.1}, {:.1}] (expected 4); try a smaller step",
            4.0 / RICHARDSON_BAND,
            4.0 * RICHARDSON_BAND
        )));
    }
    Ok((out, Some(r)))
}

/// Metric extraction: g_ij = ∂_i∂_j D(P‖P+dx) at dx = 0.
///
/// Needs a margin of 2h around `p` (h/2 and h/4 stay inside it when
/// Richardson is on).
pub fn extract_metric(div: &dyn Divergence, p: &[f64], opts: ExtractOptions) -> Result<MetricTensor> {
    opts.validate()?;
    div.check_domain(p)?;
    let n = div.dim();
    let g = if opts.richardson {
        let g1 = raw_metric(div, p, opts.h, opts.execution)?;
        let g2 = raw_metric(div, p, opts.h / 2.0, opts.execution)?;
        let g4 = raw_metric(div, p, opts.h / 4.0, opts.execution)?;
        richardson([&g1, &g2, &g4], 0.0)?.0
    } else {
        raw_metric(div, p, opts.h, opts.execution)?
    };
    Ok(MetricTensor::from_raw(n, g, p.to_vec(), div.chart(), Some(opts.h), opts.method()))
}

/// Cubic extraction: A_ijk = ∂_i∂_j∂_k D(P‖P+dx) at dx = 0. Needs a margin
/// of 3h around `p`.
pub fn extract_cubic(div: &dyn Divergence, p: &[f64], opts: ExtractOptions) -> Result<CubicTensor> {
    opts.validate()?;
    div.check_domain(p)?;
    let n = div.dim();
    let metric_scale = raw_metric(div, p, opts.h, opts.execution)?
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let (t, smallest) = if opts.richardson {
        let t1 = raw_cubic(div, p, opts.h, opts.execution)?;
        let t2 = raw_cubic(div, p, opts.h / 2.0, opts.execution)?;
        let t4 = raw_cubic(div, p, opts.h / 4.0, opts.execution)?;
        // Stencil values are about g·h², so their rounding error divided by
        // h³ is about ε·g/h.
        let floor = 1e4 * f64::EPSILON * metric_scale / (opts.h / 4.0);
        (richardson([&t1, &t2, &t4], floor)?.0, opts.h / 4.0)
    } else {
        (raw_cubic(div, p, opts.h, opts.execution)?, opts.h)
    };
    // Rounding-noise guard, against the larger of the cubic and metric scales
    // so that a vanishing tensor is not flagged.
    let noise = 1e-16 / smallest.powi(3);
    let cubic_scale = t.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let scale = cubic_scale.max(metric_scale);
    if noise > 0.01 * scale {
        return Err(GeoError::NoisePanic {
            noise,
            scale,
            h: opts.h,
        });
    }
    Ok(CubicTensor::from_raw(n, t, p.to_vec(), div.chart(), Some(opts.h), opts.method()))
}

/// Amari–Chentsov tensor of a classical family at `p`, in the default chart:
/// the cubic expansion coefficient extracted in natural coordinates, pulled
/// back with the chart Jacobian.
///
/// The natural-chart step is `opts.h` times the chart's local scale at `p`,
/// so that `h` is relative to the distance from the domain edge.
pub fn amari_chentsov(family: &Family, p: &CoordinatePoint, opts: ExtractOptions) -> Result<CubicTensor> {
    let chart = natural_chart(family)?;
    family.check_domain(&p.coords)?;
    let eta = chart.to_natural(&p.coords);
    let a_nat = extract_cubic(&chart, &eta, opts.with_step(opts.h * chart.local_scale(&eta)))?;
    let mut t = chart.pull_cubic(&a_nat, &p.coords);
    t.method = opts.method();
    Ok(t)
}

/// Extracted (natural chart) versus exact score-moment tensor pushed to the
/// natural chart. The step is scaled as in [`amari_chentsov`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub extracted: CubicTensor,
    pub oracle: CubicTensor,
    pub relative_error: f64,
}

pub fn compare_cubic_with_oracle(
    family: &Family,
    p: &CoordinatePoint,
    opts: ExtractOptions,
) -> Result<OracleComparison> {
    let chart = natural_chart(family)?;
    let eta = chart.to_natural(&p.coords);
    let extracted = extract_cubic(&chart, &eta, opts.with_step(opts.h * chart.local_scale(&eta)))?;
    let oracle = chart.push_cubic(&score_moment_tensor(family, p)?, &p.coords)?;
    let relative_error = tensor::relative_max_error(&extracted.components, &oracle.components, 1e-300);
    Ok(OracleComparison {
        extracted,
        oracle,
        relative_error,
    })
}

/// Measurements of the antisymmetric part `D(P‖P+hv) − D(P+hv‖P)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymmetryProbe {
    pub base: Vec<f64>,
    pub chart: String,
    pub direction: Vec<f64>,
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
    /// All values below the symmetry floor: the divergence is symmetric.
    pub identically_symmetric: bool,
    /// Least-squares slope of log|value| against log h.
    pub slope: Option<f64>,
    /// c in value ≈ c·h³, from a linear fit of value/h³ against h
    /// extrapolated to h = 0.
    pub cubic_coefficient: Option<f64>,
    /// T_ijk v^i v^j v^k of the reference cubic tensor.
    pub reference_contraction: f64,
    pub reference_method: Method,
    /// c / T_vvv
    pub ratio: Option<f64>,
    pub bregman_ratio: f64,
    pub frozen_metric_ratio: f64,
}

impl AsymmetryProbe {
    /// Relative deviation of the measured ratio from `target`.
    pub fn ratio_deviation(&self, target: f64) -> Option<f64> {
        self.ratio.map(|r| ((r - target) / target).abs())
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Probes the antisymmetric part along `v` at each step in `steps`
/// (strictly decreasing, at least four). `reference` supplies T for the
/// ratio; without it the cubic is extracted from `div` at `p`.
pub fn asymmetry_probe(
    div: &dyn Divergence,
    p: &[f64],
    v: &Direction,
    steps: &[f64],
    reference: Option<&CubicTensor>,
) -> Result<AsymmetryProbe> {
    if steps.len() < 4 {
        return Err(GeoError::Usage(format!("need at least 4 step sizes, got {}", steps.len())));
    }
    if steps.windows(2).any(|w| w[1] >= w[0]) || steps.iter().any(|&h| h <= 0.0) {
        return Err(GeoError::Usage("step sizes must be positive and strictly decreasing".into()));
    }
    if v.components.len() != div.dim() {
        return Err(GeoError::DimensionMismatch {
            expected: div.dim(),
            got: v.components.len(),
        });
    }
    div.check_domain(p)?;
    let mut values = Vec::with_capacity(steps.len());
    for &h in steps {
        let q: Vec<f64> = p.iter().zip(v.scaled(h)).map(|(a, b)| a + b).collect();
        div.check_domain(&q)?;
        values.push(div.divergence(p, &q)? - div.divergence(&q, p)?);
    }
    let identically_symmetric = values.iter().all(|x| x.abs() < SYMMETRY_FLOOR);

    let owned;
    let reference = match reference {
        Some(t) => t,
        None => {
            owned = extract_cubic(div, p, ExtractOptions::cubic().with_richardson(true))?;
            &owned
        }
    };
    let reference_contraction = reference.contract(&v.components);

    let (slope, cubic_coefficient) = if identically_symmetric {
        (None, None)
    } else {
        let kept: Vec<(f64, f64)> = steps
            .iter()
            .zip(&values)
            .filter(|(_, y)| y.abs() > FIT_FLOOR)
            .map(|(&h, &y)| (h, y))
            .collect();
        let lx: Vec<f64> = kept.iter().map(|(h, _)| h.ln()).collect();
        let ly: Vec<f64> = kept.iter().map(|(_, y)| y.abs().ln()).collect();
        let slope = fit_line(&lx, &ly).map(|(s, _)| s);
        let hx: Vec<f64> = kept.iter().map(|(h, _)| *h).collect();
        let scaled: Vec<f64> = kept.iter().map(|(h, y)| y / h.powi(3)).collect();
        let c = fit_line(&hx, &scaled).map(|(_, c)| c);
        (slope, c)
    };
    let ratio = match cubic_coefficient {
        Some(c) if reference_contraction.abs() > 0.0 => Some(c / reference_contraction),
        _ => None,
    };
    Ok(AsymmetryProbe {
        base: p.to_vec(),
        chart: div.chart(),
        direction: v.components.clone(),
        steps: steps.to_vec(),
        values,
        identically_symmetric,
        slope,
        cubic_coefficient,
        reference_contraction,
        reference_method: reference.method,
        ratio,
        bregman_ratio: BREGMAN_ASYMMETRY_RATIO,
        frozen_metric_ratio: FROZEN_METRIC_RATIO,
    })
}

/// Asymmetry probe for a classical family with the Amari–Chentsov tensor as
/// reference.
pub fn family_asymmetry_probe(
    family: &Family,
    p: &CoordinatePoint,
    v: &Direction,
    steps: &[f64],
    opts: ExtractOptions,
) -> Result<AsymmetryProbe> {
    let t = amari_chentsov(family, p, opts)?;
    asymmetry_probe(family, &p.coords, v, steps, Some(&t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub metric_error: Option<f64>,
    pub cubic_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub base: Vec<f64>,
    pub chart: String,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted order p in error ∝ h^p; `None` when errors vanish or no oracle.
    pub metric_order: Option<f64>,
    pub cubic_order: Option<f64>,
    pub metric_exact: bool,
    pub cubic_exact: bool,
}

fn fitted_order(hs: &[f64], errs: &[Option<f64>], floor: f64) -> (Option<f64>, bool) {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(errs)
        .filter_map(|(h, e)| e.map(|e| (*h, e)))
        .collect();
    if pts.is_empty() {
        return (None, false);
    }
    let exact = pts.iter().all(|(_, e)| *e <= floor);
    let kept: Vec<(f64, f64)> = pts.into_iter().filter(|(_, e)| *e > floor).collect();
    let lx: Vec<f64> = kept.iter().map(|(h, _)| h.ln()).collect();
    let ly: Vec<f64> = kept.iter().map(|(_, e)| e.ln()).collect();
    (fit_line(&lx, &ly).map(|(s, _)| s), exact)
}

/// Runs plain (non-Richardson) extraction across `ladder` and measures the
/// error decay against the supplied oracles (relative max-component error).
pub fn convergence_report(
    div: &dyn Divergence,
    p: &[f64],
    ladder: &[f64],
    metric_oracle: Option<&MetricTensor>,
    cubic_oracle: Option<&CubicTensor>,
    execution: Execution,
) -> Result<ConvergenceReport> {
    let mut rows = Vec::with_capacity(ladder.len());
    for &h in ladder {
        let opts = ExtractOptions {
            h,
            richardson: false,
            execution,
        };
        let g = extract_metric(div, p, opts)?;
        let metric_error = metric_oracle.map(|o| {
            tensor::relative_max_error(&g.components, &o.components, o.max_abs().max(1e-300))
        });
        let cubic_error = match cubic_oracle {
            Some(o) => {
                let t = extract_cubic(div, p, opts)?;
                // Relative to the metric scale when the oracle vanishes.
                let floor = if o.max_abs() > 0.0 { o.max_abs() } else { g.max_abs() };
                Some(tensor::relative_max_error(&t.components, &o.components, floor))
            }
            None => None,
        };
        rows.push(ConvergenceRow {
            h,
            metric_error,
            cubic_error,
        });
    }
    let floor = 1e-12;
    let me: Vec<_> = rows.iter().map(|r| r.metric_error).collect();
    let ce: Vec<_> = rows.iter().map(|r| r.cubic_error).collect();
    let (metric_order, metric_exact) = fitted_order(ladder, &me, floor);
    let (cubic_order, cubic_exact) = fitted_order(ladder, &ce, floor);
    Ok(ConvergenceReport {
        base: p.to_vec(),
        chart: div.chart(),
        rows,
        metric_order,
        cubic_order,
        metric_exact,
        cubic_exact,
    })
}

/// Which chart a classical-family convergence ladder runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartChoice {
    Default,
    Natural,
}

/// Convergence ladder for a classical family against its closed-form
/// oracles: Fisher metric and expansion cubic (default chart), or Fisher
/// metric and score third moment pushed to natural coordinates.
pub fn family_convergence(
    family: &Family,
    p: &CoordinatePoint,
    ladder: &[f64],
    chart: ChartChoice,
    execution: Execution,
) -> Result<ConvergenceReport> {
    let g = family.fisher_metric(p)?;
    match chart {
        ChartChoice::Default => {
            let a = expansion_cubic_oracle(family, p)?;
            convergence_report(family, &p.coords, ladder, Some(&g), Some(&a), execution)
        }
        ChartChoice::Natural => {
            let nat = natural_chart(family)?;
            let g_nat = nat.push_metric(&g, &p.coords)?;
            let t_nat = nat.push_cubic(&score_moment_tensor(family, p)?, &p.coords)?;
            let eta = nat.to_natural(&p.coords);
            convergence_report(&nat, &eta, ladder, Some(&g_nat), Some(&t_nat), execution)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{ChartDivergence, QuantumChart, QuantumDivergenceKind};
    use approx::assert_relative_eq;

    fn pt(f: &Family, c: &[f64]) -> CoordinatePoint {
        f.point(c.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_metric_is_exact() {
        let f = Family::gaussian_fixed(1.0);
        let g = extract_metric(&f, &[0.0], ExtractOptions::metric()).unwrap();
        assert_relative_eq!(g.components[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_and_bernoulli_metrics() {
        let opts = ExtractOptions::metric().with_richardson(true);
        let e = Family::exponential();
        let g = extract_metric(&e, &[1.0], opts).unwrap();
        assert_relative_eq!(g.components[0], 1.0, max_relative = 1e-6);
        let b = Family::bernoulli();
        let g = extract_metric(&b, &[0.5], opts).unwrap();
        assert_relative_eq!(g.components[0], 4.0, max_relative = 1e-6);
    }

    #[test]
    fn gaussian_cubic_vanishes() {
        let f = Family::gaussian_fixed(1.0);
        for mu in [-2.0, 0.0, 3.5] {
            let t = extract_cubic(&f, &[mu], ExtractOptions::cubic()).unwrap();
            assert!(t.components[0].abs() < 1e-5);
        }
    }

    #[test]
    fn exponential_cubic_in_rate_chart() {
        let e = Family::exponential();
        let t = extract_cubic(&e, &[1.0], ExtractOptions::cubic().with_richardson(true)).unwrap();
        assert_relative_eq!(t.components[0], -2.0, max_relative = 1e-3);
        let oracle = score_moment_tensor(&e, &pt(&e, &[1.0])).unwrap();
        let nat = natural_chart(&e).unwrap();
        let via_nat = nat.pull_cubic(&nat.push_cubic(&oracle, &[1.0]).unwrap(), &[1.0]);
        assert_relative_eq!(t.components[0], via_nat.components[0], max_relative = 1e-3);
    }

    #[test]
    fn categorical_cubic_matches_oracle() {
        let c = Family::categorical(3);
        let cmp = compare_cubic_with_oracle(
            &c,
            &pt(&c, &[1.0 / 3.0, 1.0 / 3.0]),
            ExtractOptions::cubic().with_richardson(true),
        )
        .unwrap();
        assert!(cmp.relative_error < 1e-3, "{}", cmp.relative_error);
        assert!(cmp.extracted.symmetry_residual < 1e-4);
    }

    #[test]
    fn stencil_leaving_domain_is_domain_error() {
        let b = Family::bernoulli();
        let r = extract_metric(&b, &[0.005], ExtractOptions::metric());
        assert!(matches!(r, Err(GeoError::Domain(_))));
        let r = extract_cubic(&b, &[0.1], ExtractOptions::cubic());
        assert!(matches!(r, Err(GeoError::Domain(_))));
    }

    #[test]
    fn richardson_ratio_check() {
        // Levels with errors e·h² give differences in ratio 4.
        let (out, r) = richardson([&[1.16, 3.0], &[1.04, 3.0], &[1.01, 3.0]], 0.0).unwrap();
        assert!((r.unwrap() - 4.0).abs() < 1e-9);
        assert!((out[0] - 1.0).abs() < 1e-12);
        let bad = richardson([&[1.75, 0.0], &[1.25, 0.0], &[1.249, 0.0]], 0.0);
        assert!(matches!(bad, Err(GeoError::Conditioning(_))), "{bad:?}");
        // Differences under the noise floor are not judged.
        assert!(richardson([&[1.0, 0.0], &[1.0 + 1e-13, 0.0], &[1.0, 0.0]], 1e-9).unwrap().1.is_none());
    }

    #[test]
    fn tiny_steps_trigger_noise_panic() {
        let e = Family::exponential();
        let r = extract_cubic(&e, &[1.0], ExtractOptions::cubic().with_step(1e-6));
        assert!(matches!(r, Err(GeoError::NoisePanic { .. })), "{r:?}");
    }

    #[test]
    fn bad_step_is_usage_error() {
        let e = Family::exponential();
        assert!(matches!(
            extract_metric(&e, &[1.0], ExtractOptions::metric().with_step(0.0)),
            Err(GeoError::Usage(_))
        ));
    }

    #[test]
    fn asymmetry_examples() {
        let g = Family::gaussian_fixed(1.0);
        let steps = [0.1, 0.05, 0.025, 0.0125];
        let v = Direction::new(vec![1.0]).unwrap();
        let probe = asymmetry_probe(&g, &[0.0], &v, &steps, None).unwrap();
        assert!(probe.identically_symmetric);
        assert!(probe.slope.is_none());

        let e = Family::exponential();
        let probe = asymmetry_probe(&e, &[1.0], &v, &steps, None).unwrap();
        // D(1‖1.1) − D(1.1‖1) = 0.0046898 − 0.0044011
        assert!((probe.values[0] - 0.0002887).abs() < 5e-8, "{}", probe.values[0]);
        let slope = probe.slope.unwrap();
        assert!((slope - 3.0).abs() < 0.2, "{slope}");
        let ratio = probe.ratio.unwrap();
        assert!((ratio - BREGMAN_ASYMMETRY_RATIO).abs() < 0.05 / 6.0, "{ratio}");
    }

    #[test]
    fn asymmetry_rejects_bad_ladders() {
        let e = Family::exponential();
        let v = Direction::new(vec![1.0]).unwrap();
        assert!(asymmetry_probe(&e, &[1.0], &v, &[0.1, 0.05, 0.02], None).is_err());
        assert!(asymmetry_probe(&e, &[1.0], &v, &[0.1, 0.2, 0.05, 0.01], None).is_err());
    }

    #[test]
    fn convergence_examples() {
        let e = Family::exponential();
        let ladder = [0.08, 0.04, 0.02, 0.01];
        let r = family_convergence(&e, &pt(&e, &[1.0]), &ladder, ChartChoice::Default, Execution::Sequential)
            .unwrap();
        let order = r.metric_order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "{order}");

        let b = Family::bernoulli();
        let r = family_convergence(&b, &pt(&b, &[0.3]), &ladder, ChartChoice::Natural, Execution::Sequential)
            .unwrap();
        let errs: Vec<f64> = r.rows.iter().map(|x| x.cubic_error.unwrap()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(*errs.last().unwrap() < 1e-3);

        let g = Family::gaussian_fixed(1.0);
        let r = family_convergence(&g, &pt(&g, &[0.2]), &ladder, ChartChoice::Default, Execution::Sequential)
            .unwrap();
        assert!(r.metric_exact);
        assert!(r.metric_order.is_none());
    }

    #[test]
    fn bloch_metric_of_relative_entropy_at_maximally_mixed_state() {
        // At I/2 the relative-entropy metric in Bloch coordinates is the identity
        // (up to smoothing, which rescales r by (1 − ε)).
        let eps = 1e-3;
        let d = ChartDivergence {
            chart: QuantumChart::Bloch,
            kind: QuantumDivergenceKind::RelativeEntropy,
            eps,
        };
        let g = extract_metric(&d, &[0.0, 0.0, 0.0], ExtractOptions::metric().with_richardson(true)).unwrap();
        let s = (1.0 - eps) * (1.0 - eps);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { s } else { 0.0 };
                assert!((g.get(i, j) - expect).abs() < 1e-6, "{i}{j}: {}", g.get(i, j));
            }
        }
    }

    #[test]
    fn sequential_and_parallel_extraction_agree() {
        let c = Family::categorical(4);
        let p = [0.25, 0.25, 0.25];
        let seq = extract_cubic(&c, &p, ExtractOptions::cubic().with_execution(Execution::Sequential)).unwrap();
        let par = extract_cubic(&c, &p, ExtractOptions::cubic().with_execution(Execution::Parallel)).unwrap();
        assert_eq!(seq.components, par.components);
    }
}
