//! Collective versus sequential estimation fidelities for N copies of a
//! qubit, in exact rational arithmetic, plus a Monte-Carlo check of the
//! single-copy value.
//!
//! F_col(N) = (N+1)/(N+2); for N ≥ 2 the sequential protocol loses
//! 1/(N(N+1)). For N = 1 both protocols coincide and the gap is tabulated
//! as 0 even though 1/(N(N+1)) would give 1/2; reports carry
//! `special_cased = true` there.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{GeoError, Result};
use crate::exec::{self, Estimate, Execution, Moments};

/// Minimum number of Monte-Carlo trials accepted.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub n_copies: u64,
    /// s = N/2
    pub spin: BigRational,
    pub f_col: BigRational,
    pub f_seq: BigRational,
    pub gap: BigRational,
    pub special_cased: bool,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Renders `p/q`, or `p` for integers.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl GapReport {
    pub fn for_copies(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(GeoError::Usage("number of copies must be at least 1".into()));
        }
        let f_col = ratio(n + 1, n + 2);
        let (gap, special_cased) = if n == 1 {
            (BigRational::zero(), true)
        } else {
            let nb = BigInt::from(n);
            (BigRational::new(BigInt::from(1), &nb * (&nb + 1)), false)
        };
        Ok(GapReport {
            n_copies: n,
            spin: ratio(n, 2),
            f_seq: &f_col - &gap,
            f_col,
            gap,
            special_cased,
        })
    }

    /// The closed-form gap 1/(N(N+1)), which the N = 1 entry overrides.
    pub fn formula_gap(&self) -> BigRational {
        let nb = BigInt::from(self.n_copies);
        BigRational::new(BigInt::from(1), &nb * (&nb + 1))
    }
}

impl Serialize for GapReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("GapReport", 11)?;
        st.serialize_field("n", &self.n_copies)?;
        st.serialize_field("spin", &format_rational(&self.spin))?;
        st.serialize_field("f_col", &format_rational(&self.f_col))?;
        st.serialize_field("f_col_decimal", &rational_to_f64(&self.f_col))?;
        st.serialize_field("f_seq", &format_rational(&self.f_seq))?;
        st.serialize_field("f_seq_decimal", &rational_to_f64(&self.f_seq))?;
        st.serialize_field("gap", &format_rational(&self.gap))?;
        st.serialize_field("gap_decimal", &rational_to_f64(&self.gap))?;
        st.serialize_field("special_cased", &self.special_cased)?;
        let note = if self.special_cased {
            Some(format!(
                "tabulated gap 0 for s = 1/2; the closed form 1/(N(N+1)) would give {}",
                format_rational(&self.formula_gap())
            ))
        } else {
            None
        };
        st.serialize_field("note", &note)?;
        st.end()
    }
}

/// Reports for N = 1..=n_max.
pub fn gap_table(n_max: u64) -> Result<Vec<GapReport>> {
    if n_max == 0 {
        return Err(GeoError::Usage("table size must be at least 1".into()));
    }
    (1..=n_max).map(GapReport::for_copies).collect()
}

/// What the simulated observer guesses after measuring along z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuessStrategy {
    /// Guess the basis state matching the outcome.
    #[default]
    OutcomeAligned,
    /// Always guess |0⟩, ignoring the outcome.
    Fixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub trials: u64,
    pub seed: u64,
    pub strategy: GuessStrategy,
    pub mean: f64,
    pub std_error: f64,
}

impl FidelityEstimate {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            std_error: self.std_error,
        }
    }
}

/// Haar-random qubit ray: two standard complex Gaussian amplitudes,
/// normalized. Returns |a|² (the weight on |0⟩).
fn haar_weight_zero<R: Rng>(rng: &mut R) -> f64 {
    let g: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let a2 = g[0] * g[0] + g[1] * g[1];
    let b2 = g[2] * g[2] + g[3] * g[3];
    a2 / (a2 + b2)
}

/// Monte-Carlo single-copy fidelity: Haar-random state, projective z
/// measurement, guess, score |⟨guess|true⟩|².
pub fn mc_single_copy_fidelity(
    trials: u64,
    seed: u64,
    strategy: GuessStrategy,
    execution: Execution,
) -> Result<FidelityEstimate> {
    if trials < MIN_TRIALS {
        return Err(GeoError::Usage(format!(
            "at least {MIN_TRIALS} trials are required, got {trials}"
        )));
    }
    let layout = exec::chunk_layout(trials);
    let chunks = exec::map_slice(execution, &layout, |&(chunk, count)| {
        let mut rng = exec::chunk_rng(seed, chunk);
        let mut m = Moments::default();
        for _ in 0..count {
            let w0 = haar_weight_zero(&mut rng);
            let outcome_zero = rng.random::<f64>() < w0;
            let fidelity = match (strategy, outcome_zero) {
                (GuessStrategy::Fixed, _) | (GuessStrategy::OutcomeAligned, true) => w0,
                (GuessStrategy::OutcomeAligned, false) => 1.0 - w0,
            };
            m.push(fidelity);
        }
        m
    });
    let mut total = Moments::default();
    for c in &chunks {
        total.merge(c);
    }
    Ok(FidelityEstimate {
        trials,
        seed,
        strategy,
        mean: total.mean(),
        std_error: total.std_error(),
    })
}
