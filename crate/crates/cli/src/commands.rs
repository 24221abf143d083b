//! Config resolution and execution of each subcommand.

use std::fs;

use geotax_core::divergence::{expansion_cubic_oracle, score_moment_tensor, DEFAULT_MARGIN};
use geotax_core::extraction::{
    amari_chentsov, asymmetry_probe, extract_cubic, extract_metric, family_asymmetry_probe,
    family_convergence, AsymmetryProbe, ChartChoice, ConvergenceReport, ExtractOptions,
    BREGMAN_ASYMMETRY_RATIO, FROZEN_METRIC_RATIO,
};
use geotax_core::gap::{gap_table, mc_single_copy_fidelity, GapReport, GuessStrategy, FidelityEstimate};
use geotax_core::quantum::{
    bargmann_phase, fubini_study_distance, veronese_embed, ChartDivergence, Complex64, PureState,
    QuantumChart, QuantumDivergenceKind, DEFAULT_EPS,
};
use geotax_core::roundtrip::{
    demon_work, spread_estimate, triangle_shape_sweep, triangle_simulate, CubicField, DemonReport,
    LegDistribution, PathSpec, SpreadReport, StepEvaluation, SweepPoint, TradeSampler, TriangleReport,
};
use geotax_core::tensor::relative_max_error;
use geotax_core::{CubicTensor, Direction, Divergence, Execution, Family, GeoError, MetricTensor};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const FORMAT_ENV: &str = "GEO_DEFAULT_FORMAT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatSource {
    Flag,
    Environment,
    Default,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub format: Format,
    pub format_source: FormatSource,
    /// Value of GEO_DEFAULT_FORMAT seen when the run was configured.
    pub geo_default_format: Option<String>,
    pub out: Option<String>,
    pub execution: Execution,
    pub command: Command,
}

impl RunConfig {
    pub fn new(cli_format: Option<Format>, env_format: Option<String>, out: Option<String>, sequential: bool, command: Command) -> CliResult<Self> {
        let (format, format_source) = match (cli_format, env_format.as_deref()) {
            (Some(f), _) => (f, FormatSource::Flag),
            (None, Some(v)) => (
                v.parse::<Format>()
                    .map_err(|_| CliError::Usage(format!("{FORMAT_ENV}='{v}' is not one of json, csv, plot-csv")))?,
                FormatSource::Environment,
            ),
            (None, None) => (Format::Json, FormatSource::Default),
        };
        Ok(RunConfig {
            format,
            format_source,
            geo_default_format: env_format,
            out,
            execution: if sequential { Execution::Sequential } else { Execution::Parallel },
            command,
        })
    }
}

enum Resolved {
    Family(Family),
    Quantum(ChartDivergence),
}

impl Resolved {
    fn div(&self) -> &dyn Divergence {
        match self {
            Resolved::Family(f) => f,
            Resolved::Quantum(q) => q,
        }
    }

    fn family(&self) -> Option<&Family> {
        match self {
            Resolved::Family(f) => Some(f),
            Resolved::Quantum(_) => None,
        }
    }

    fn eps(&self) -> Option<f64> {
        match self {
            Resolved::Quantum(q) if q.kind == QuantumDivergenceKind::RelativeEntropy => Some(q.eps),
            _ => None,
        }
    }
}

/// Parses the target and writes every default it relies on back into `t`.
fn resolve_target(t: &mut Target) -> CliResult<Resolved> {
    if let Some(spec) = &t.family {
        let margin = *t.margin.get_or_insert(DEFAULT_MARGIN);
        if !(margin > 0.0 && margin < 0.5) {
            return Err(CliError::Usage(format!("margin must lie in (0, 0.5), got {margin}")));
        }
        return Ok(Resolved::Family(spec.parse::<Family>()?.with_margin(margin)));
    }
    let chart: QuantumChart = t
        .chart
        .as_deref()
        .ok_or_else(|| CliError::Usage("either --family or --chart is required".into()))?
        .parse()?;
    let kind: QuantumDivergenceKind = t.divergence.get_or_insert_with(|| "qre".into()).parse()?;
    let eps = match kind {
        QuantumDivergenceKind::RelativeEntropy => *t.eps.get_or_insert(DEFAULT_EPS),
        QuantumDivergenceKind::JensenShannon => {
            if t.eps.is_some() {
                return Err(CliError::Usage("--eps applies only to qre".into()));
            }
            0.0
        }
    };
    if kind == QuantumDivergenceKind::RelativeEntropy && !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(Resolved::Quantum(ChartDivergence { chart, kind, eps }))
}

fn read_file(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading {path}"),
        source,
    })
}

fn parse_states(strings: &[String]) -> CliResult<Vec<Vec<[f64; 2]>>> {
    strings
        .iter()
        .map(|s| {
            let st: PureState = s.parse()?;
            Ok(pairs(&st))
        })
        .collect()
}

fn parse_amplitude(v: &serde_json::Value) -> CliResult<[f64; 2]> {
    let bad = || CliError::Usage(format!("amplitude {v} must be a number, a complex literal or [re, im]"));
    match v {
        serde_json::Value::Number(n) => Ok([n.as_f64().ok_or_else(bad)?, 0.0]),
        serde_json::Value::String(s) => {
            let c = geotax_core::quantum::parse_complex(s)?;
            Ok([c.re, c.im])
        }
        serde_json::Value::Array(a) if a.len() == 2 => {
            Ok([a[0].as_f64().ok_or_else(bad)?, a[1].as_f64().ok_or_else(bad)?])
        }
        _ => Err(bad()),
    }
}

fn parse_loop_file(path: &str) -> CliResult<Vec<Vec<[f64; 2]>>> {
    let text = read_file(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        context: format!("parsing loop file {path}"),
        source,
    })?;
    let states = v
        .as_array()
        .ok_or_else(|| CliError::Usage(format!("{path}: expected an array of states")))?;
    states
        .iter()
        .map(|s| {
            let amps = s
                .as_array()
                .ok_or_else(|| CliError::Usage(format!("{path}: each state must be an array of amplitudes")))?;
            let raw: Vec<[f64; 2]> = amps.iter().map(parse_amplitude).collect::<CliResult<_>>()?;
            // Normalize once here so the stored loop is what gets used.
            Ok(pairs(&to_state(&raw)?))
        })
        .collect()
}

fn pairs(s: &PureState) -> Vec<[f64; 2]> {
    s.amplitudes().iter().map(|c| [c.re, c.im]).collect()
}

fn to_state(p: &[[f64; 2]]) -> CliResult<PureState> {
    Ok(PureState::new(p.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())?)
}

/// Fills file-backed inputs and defaults into the command so that the
/// serialized config is self-contained.
pub fn resolve(cmd: &mut Command) -> CliResult<()> {
    match cmd {
        Command::Tensor(a) => {
            resolve_target(&mut a.target)?;
        }
        Command::Asymmetry(a) => {
            resolve_target(&mut a.target)?;
        }
        Command::Divergence(a) => {
            resolve_target(&mut a.target)?;
        }
        Command::Spread(a) => {
            resolve_target(&mut a.target)?;
        }
        Command::Demon(a) => {
            resolve_target(&mut a.target)?;
            if a.waypoints.is_none() {
                let path = a.path.as_deref().ok_or_else(|| CliError::Usage("--path is required".into()))?;
                let text = read_file(path)?;
                let pts = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(geotax_core::divergence::parse_coords)
                    .collect::<Result<Vec<_>, GeoError>>()?;
                a.waypoints = Some(pts);
            }
        }
        Command::Holonomy(a) => {
            if a.resolved.is_none() {
                a.resolved = Some(match (&a.loop_file, &a.states) {
                    (Some(f), _) => parse_loop_file(f)?,
                    (None, Some(s)) => parse_states(s)?,
                    (None, None) => return Err(CliError::Usage("give --loop or --states".into())),
                });
            }
        }
        Command::Gap(_)
        | Command::Estimate(_)
        | Command::Convergence(_)
        | Command::Triangle(_)
        | Command::Veronese(_) => {}
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GapBody {
    pub rows: Vec<GapReport>,
    /// gap(N) > gap(N+1) for every listed N ≥ 2.
    pub strictly_decreasing_from_two: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateBody {
    #[serde(flatten)]
    pub estimate: FidelityEstimate,
    pub target: String,
    pub target_decimal: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorOracles {
    pub fisher_metric: MetricTensor,
    pub metric_relative_error: f64,
    /// Closed-form cubic expansion coefficient in the default chart.
    pub expansion_cubic: CubicTensor,
    pub cubic_relative_error: f64,
    /// Extracted in natural coordinates and pulled back to the default chart.
    pub amari_chentsov: CubicTensor,
    pub score_moment: CubicTensor,
    pub amari_chentsov_relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorBody {
    pub family_id: String,
    pub chart: String,
    pub point: Vec<f64>,
    pub eps: Option<f64>,
    pub metric: MetricTensor,
    pub metric_eigenvalues: Vec<f64>,
    /// Cubic expansion coefficient of D(P‖P+dx) in this chart.
    pub cubic: CubicTensor,
    pub oracles: Option<TensorOracles>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryBody {
    pub family_id: String,
    #[serde(flatten)]
    pub probe: AsymmetryProbe,
    pub eps: Option<f64>,
    /// Measured ratio within 5% of the Bregman value −1/6.
    pub matches_bregman_ratio: Option<bool>,
    /// Measured ratio within 5% of the frozen-metric value 1/3.
    pub matches_frozen_metric_ratio: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepBody {
    pub scale: f64,
    pub samples: u64,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomyBody {
    pub dim: usize,
    pub length: usize,
    pub embedded: bool,
    /// Loop actually traversed, as [re, im] pairs.
    pub states: Vec<Vec<[f64; 2]>>,
    pub phase: f64,
    pub reversed_phase: f64,
    /// Phase of the qubit loop before embedding.
    pub source_phase: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapCheck {
    pub other: Vec<[f64; 2]>,
    pub other_embedded: Vec<[f64; 2]>,
    pub qubit_overlap: f64,
    pub embedded_overlap: f64,
    pub squared_qubit_overlap: f64,
    pub residual: f64,
    pub qubit_distance: f64,
    pub embedded_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VeroneseBody {
    pub state: Vec<[f64; 2]>,
    pub embedded: Vec<[f64; 2]>,
    pub check: Option<OverlapCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceBody {
    pub family_id: String,
    pub chart: String,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub eps: Option<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Gap(GapBody),
    Estimate(EstimateBody),
    Tensor(Box<TensorBody>),
    Asymmetry(AsymmetryBody),
    Convergence(ConvergenceReport),
    Triangle(TriangleReport),
    TriangleSweep(SweepBody),
    Demon(DemonReport),
    Spread(SpreadReport),
    Holonomy(HolonomyBody),
    Veronese(VeroneseBody),
    Divergence(DivergenceBody),
}

impl Report {
    pub fn kind(&self) -> &'static str {
        match self {
            Report::Gap(_) => "gap",
            Report::Estimate(_) => "estimate",
            Report::Tensor(_) => "tensor",
            Report::Asymmetry(_) => "asymmetry",
            Report::Convergence(_) => "convergence",
            Report::Triangle(_) => "triangle",
            Report::TriangleSweep(_) => "triangle-sweep",
            Report::Demon(_) => "demon",
            Report::Spread(_) => "spread",
            Report::Holonomy(_) => "holonomy",
            Report::Veronese(_) => "veronese",
            Report::Divergence(_) => "divergence",
        }
    }
}

fn field_for<'a>(r: &'a Resolved, source: TensorSourceArg, options: ExtractOptions) -> CliResult<CubicField<'a>> {
    match (source, r) {
        (TensorSourceArg::Oracle, Resolved::Family(f)) => Ok(CubicField::Oracle(f)),
        (TensorSourceArg::Oracle, Resolved::Quantum(_)) => Err(CliError::Usage(
            "--source oracle needs a classical --family".into(),
        )),
        (TensorSourceArg::Extracted, r) => Ok(CubicField::Extracted {
            divergence: r.div(),
            options,
        }),
    }
}

/// Runs a resolved command.
pub fn execute(cmd: &Command, execution: Execution) -> CliResult<Report> {
    // Resolution is idempotent; running it again yields the parsed target.
    let mut cmd = cmd.clone();
    resolve(&mut cmd)?;
    match &mut cmd {
        Command::Gap(a) => {
            let rows = match (a.n, a.table) {
                (Some(n), None) => vec![GapReport::for_copies(n)?],
                (None, Some(t)) => gap_table(t)?,
                _ => return Err(CliError::Usage("give exactly one of --n and --table".into())),
            };
            let strictly_decreasing_from_two = rows
                .windows(2)
                .filter(|w| w[0].n_copies >= 2)
                .all(|w| w[0].gap > w[1].gap);
            Ok(Report::Gap(GapBody {
                rows,
                strictly_decreasing_from_two,
            }))
        }
        Command::Estimate(a) => {
            let strategy = match a.strategy {
                Strategy::OutcomeAligned => GuessStrategy::OutcomeAligned,
                Strategy::Fixed => GuessStrategy::Fixed,
            };
            let estimate = mc_single_copy_fidelity(a.trials, a.seed, strategy, execution)?;
            let target = GapReport::for_copies(1)?.f_col;
            let target_decimal = geotax_core::gap::rational_to_f64(&target);
            let z_score = estimate.estimate().z_score(target_decimal);
            Ok(Report::Estimate(EstimateBody {
                estimate,
                target: geotax_core::gap::format_rational(&target),
                target_decimal,
                z_score,
            }))
        }
        Command::Tensor(a) => {
            let r = resolve_target(&mut a.target)?;
            let div = r.div();
            let mopts = ExtractOptions::metric()
                .with_step(a.h_metric)
                .with_richardson(a.richardson)
                .with_execution(execution);
            let copts = ExtractOptions::cubic()
                .with_step(a.h_cubic)
                .with_richardson(a.richardson)
                .with_execution(execution);
            let metric = extract_metric(div, &a.at, mopts)?;
            let cubic = extract_cubic(div, &a.at, copts)?;
            let oracles = match r.family() {
                Some(f) => {
                    let p = f.point(a.at.clone())?;
                    let fisher = f.fisher_metric(&p)?;
                    let exp = expansion_cubic_oracle(f, &p)?;
                    let ac = amari_chentsov(f, &p, copts)?;
                    let sm = score_moment_tensor(f, &p)?;
                    let floor = metric.max_abs();
                    Some(TensorOracles {
                        metric_relative_error: relative_max_error(&metric.components, &fisher.components, 0.0),
                        cubic_relative_error: relative_max_error(&cubic.components, &exp.components, floor),
                        amari_chentsov_relative_error: relative_max_error(&ac.components, &sm.components, floor),
                        fisher_metric: fisher,
                        expansion_cubic: exp,
                        amari_chentsov: ac,
                        score_moment: sm,
                    })
                }
                None => None,
            };
            Ok(Report::Tensor(Box::new(TensorBody {
                family_id: div.family_id(),
                chart: div.chart(),
                point: a.at.clone(),
                eps: r.eps(),
                metric_eigenvalues: metric.eigenvalues(),
                metric,
                cubic,
                oracles,
            })))
        }
        Command::Asymmetry(a) => {
            let r = resolve_target(&mut a.target)?;
            let opts = ExtractOptions::cubic()
                .with_step(a.h)
                .with_richardson(a.richardson)
                .with_execution(execution);
            let v = Direction::new(a.dir.clone())?;
            let probe = match r.family() {
                Some(f) => family_asymmetry_probe(f, &f.point(a.at.clone())?, &v, &a.steps, opts)?,
                None => {
                    let t = extract_cubic(r.div(), &a.at, opts)?;
                    asymmetry_probe(r.div(), &a.at, &v, &a.steps, Some(&t))?
                }
            };
            Ok(Report::Asymmetry(AsymmetryBody {
                family_id: r.div().family_id(),
                matches_bregman_ratio: probe.ratio_deviation(BREGMAN_ASYMMETRY_RATIO).map(|d| d < 0.05),
                matches_frozen_metric_ratio: probe.ratio_deviation(FROZEN_METRIC_RATIO).map(|d| d < 0.05),
                eps: r.eps(),
                probe,
            }))
        }
        Command::Convergence(a) => {
            let f: Family = a.family.parse()?;
            let p = f.point(a.at.clone())?;
            let chart = match a.chart {
                ChartArg::Default => ChartChoice::Default,
                ChartArg::Natural => ChartChoice::Natural,
            };
            Ok(Report::Convergence(family_convergence(&f, &p, &a.ladder, chart, execution)?))
        }
        Command::Triangle(a) => match (&a.legs, &a.sweep_shapes) {
            (Some(legs), None) => {
                let parsed: Vec<LegDistribution> = legs.iter().map(|l| l.parse()).collect::<Result<_, _>>()?;
                let legs: [LegDistribution; 3] = parsed
                    .try_into()
                    .map_err(|_| CliError::Usage("exactly three legs are required".into()))?;
                Ok(Report::Triangle(triangle_simulate(&legs, a.samples, a.seed, execution)?))
            }
            (None, Some(shapes)) => Ok(Report::TriangleSweep(SweepBody {
                scale: a.scale,
                samples: a.samples,
                seed: a.seed,
                points: triangle_shape_sweep(shapes, a.scale, a.samples, a.seed, execution)?,
            })),
            _ => Err(CliError::Usage("give either --legs or --sweep-shapes".into())),
        },
        Command::Demon(a) => {
            let r = resolve_target(&mut a.target)?;
            let opts = ExtractOptions::cubic()
                .with_step(a.h)
                .with_richardson(a.richardson)
                .with_execution(execution);
            let field = field_for(&r, a.source, opts)?;
            let pts = a.waypoints.clone().unwrap_or_default();
            let path = PathSpec::new(r.div(), pts)?;
            let evaluation = match a.evaluation {
                EvaluationArg::Start => StepEvaluation::Start,
                EvaluationArg::Midpoint => StepEvaluation::Midpoint,
            };
            Ok(Report::Demon(demon_work(&field, &path, evaluation)?))
        }
        Command::Spread(a) => {
            let r = resolve_target(&mut a.target)?;
            // Per-trade extraction runs inside the parallel Monte-Carlo loop.
            let opts = ExtractOptions::cubic()
                .with_step(a.h)
                .with_richardson(a.richardson)
                .with_execution(Execution::Sequential);
            let field = field_for(&r, a.source, opts)?;
            let sampler = TradeSampler::parse(&a.sampler, r.div().dim())?;
            Ok(Report::Spread(spread_estimate(&field, &sampler, a.samples, a.seed, execution)?))
        }
        Command::Holonomy(a) => {
            let raw = a.resolved.clone().unwrap_or_default();
            let source: Vec<PureState> = raw.iter().map(|s| to_state(s)).collect::<CliResult<_>>()?;
            let (states, source_phase) = if a.veronese {
                let emb: Vec<PureState> = source.iter().map(veronese_embed).collect::<Result<_, _>>()?;
                (emb, Some(bargmann_phase(&source)?))
            } else {
                (source, None)
            };
            let phase = bargmann_phase(&states)?;
            let mut rev = states.clone();
            rev.reverse();
            Ok(Report::Holonomy(HolonomyBody {
                dim: states[0].dim(),
                length: states.len(),
                embedded: a.veronese,
                states: states.iter().map(pairs).collect(),
                phase,
                reversed_phase: bargmann_phase(&rev)?,
                source_phase,
            }))
        }
        Command::Veronese(a) => {
            let p: PureState = a.state.parse()?;
            let vp = veronese_embed(&p)?;
            let check = match &a.other {
                Some(o) => {
                    let q: PureState = o.parse()?;
                    let vq = veronese_embed(&q)?;
                    let qubit_overlap = p.inner(&q)?.norm();
                    let embedded_overlap = vp.inner(&vq)?.norm();
                    let squared = qubit_overlap * qubit_overlap;
                    Some(OverlapCheck {
                        other: pairs(&q),
                        other_embedded: pairs(&vq),
                        qubit_overlap,
                        embedded_overlap,
                        squared_qubit_overlap: squared,
                        residual: (embedded_overlap - squared).abs(),
                        qubit_distance: fubini_study_distance(&p, &q)?,
                        embedded_distance: fubini_study_distance(&vp, &vq)?,
                    })
                }
                None => None,
            };
            Ok(Report::Veronese(VeroneseBody {
                state: pairs(&p),
                embedded: pairs(&vp),
                check,
            }))
        }
        Command::Divergence(a) => {
            let r = resolve_target(&mut a.target)?;
            let value = r.div().divergence(&a.p, &a.q)?;
            Ok(Report::Divergence(DivergenceBody {
                family_id: r.div().family_id(),
                chart: r.div().chart(),
                p: a.p.clone(),
                q: a.q.clone(),
                eps: r.eps(),
                value,
            }))
        }
    }
}
