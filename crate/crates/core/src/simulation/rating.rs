use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SimTranscript;
use crate::catalog::Domain;
use crate::dialogue::ResponseCase;
use crate::engine::TurnInput;
use crate::intent::Intent;
use crate::scalar::Real;

pub const MIN_TRAINING_EXAMPLES: usize = 20;

/// Ratings at or above this are the positive class.
pub const POSITIVE_RATING: u8 = 4;

pub const FEATURE_NAMES: [&str; 9] = [
    "turn_count",
    "fallback_count",
    "steps_read",
    "task_started",
    "domain_recipe",
    "domain_diy",
    "taps_fraction",
    "sensitive_count",
    "search_count",
];

const RIDGE: f64 = 1e-3;
const NEWTON_ITERATIONS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum RatingError {
    #[error("need at least {need} examples, got {got}")]
    TooFewExamples { got: usize, need: usize },
    #[error("all examples fall in one class")]
    DegenerateDataset,
    #[error("rating {0} outside 1..=5")]
    InvalidRating(u8),
    #[error("feature vector has {got} values, model expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("normal equations are singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatingDomain {
    Recipe,
    #[serde(rename = "DIY")]
    Diy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingFeatures {
    pub turn_count: usize,
    pub fallback_count: usize,
    pub steps_read: usize,
    pub task_started: bool,
    pub domain: RatingDomain,
    pub taps_fraction: f64,
    pub sensitive_count: usize,
    pub search_count: usize,
}

impl RatingFeatures {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn to_vector<F: Real>(&self) -> Vec<F> {
        let b = |v: bool| if v { F::one() } else { F::zero() };
        vec![
            F::from_count(self.turn_count),
            F::from_count(self.fallback_count),
            F::from_count(self.steps_read),
            b(self.task_started),
            b(self.domain == RatingDomain::Recipe),
            b(self.domain == RatingDomain::Diy),
            F::lit(self.taps_fraction),
            F::from_count(self.sensitive_count),
            F::from_count(self.search_count),
        ]
    }
}

pub fn extract_features(transcript: &SimTranscript) -> RatingFeatures {
    let turns = &transcript.turns;
    let count = |pred: &dyn Fn(&super::SimTurn) -> bool| turns.iter().filter(|t| pred(t)).count();
    let taps = count(&|t| matches!(t.input, TurnInput::Tap(_)));
    RatingFeatures {
        turn_count: turns.len(),
        fallback_count: count(&|t| t.intent == Some(Intent::Fallback)),
        steps_read: count(&|t| t.response_case == ResponseCase::Step),
        task_started: transcript.task_started,
        domain: match (transcript.task_started, transcript.domain) {
            (true, Some(Domain::Recipe)) => RatingDomain::Recipe,
            (true, Some(Domain::Diy)) => RatingDomain::Diy,
            _ => RatingDomain::None,
        },
        taps_fraction: if turns.is_empty() { 0.0 } else { taps as f64 / turns.len() as f64 },
        sensitive_count: count(&|t| t.intent == Some(Intent::Sensitive)),
        search_count: count(&|t| t.intent == Some(Intent::Search)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingExample {
    pub features: RatingFeatures,
    pub rating: u8,
}

/// Standardizer plus a logistic head for `rating >= 4` and a linear head for
/// the rating itself. Immutable once trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct RatingModel<F: Real = f64> {
    pub means: Vec<F>,
    pub scales: Vec<F>,
    pub logistic_weights: Vec<F>,
    pub logistic_bias: F,
    pub linear_weights: Vec<F>,
    pub linear_bias: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct RatingPrediction<F: Real = f64> {
    /// Linear-head rating clamped to [1, 5].
    pub score: F,
    /// Logistic probability of a rating of 4 or more.
    pub probability: F,
    pub label: bool,
}

fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |s, (x, y)| s + *x * *y)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve<F: Real>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Result<Vec<F>, RatingError> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|i, j| a[*i][col].abs().partial_cmp(&a[*j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty range");
        if !(a[pivot][col].abs() > F::lit(1e-12)) {
            return Err(RatingError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (i, r) in rest.iter_mut().enumerate() {
            let f = r[col] / pivot_row[col];
            for (x, p) in r[col..].iter_mut().zip(&pivot_row[col..]) {
                *x = *x - f * *p;
            }
            b[col + 1 + i] = b[col + 1 + i] - f * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let s = (row + 1..n).fold(b[row], |s, k| s - a[row][k] * x[k]);
        x[row] = s / a[row][row];
    }
    Ok(x)
}

/// Rows with a leading 1 for the intercept.
fn design<F: Real>(z: &[Vec<F>]) -> Vec<Vec<F>> {
    z.iter().map(|r| std::iter::once(F::one()).chain(r.iter().copied()).collect()).collect()
}

/// Ridge-penalized weighted normal equations `(X'WX + λI') x = X'W y`; the
/// intercept is not penalized.
fn weighted_normal<F: Real>(x: &[Vec<F>], w: &[F], y: &[F]) -> (Vec<Vec<F>>, Vec<F>) {
    let d = x[0].len();
    let mut a = vec![vec![F::zero(); d]; d];
    let mut b = vec![F::zero(); d];
    for ((row, wi), yi) in x.iter().zip(w).zip(y) {
        for i in 0..d {
            b[i] = b[i] + *wi * row[i] * *yi;
            for j in 0..d {
                a[i][j] = a[i][j] + *wi * row[i] * row[j];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate().skip(1) {
        r[i] = r[i] + F::lit(RIDGE);
    }
    (a, b)
}

impl<F: Real> RatingModel<F> {
    /// Identity standardizer and all-zero weights.
    pub fn zero(dim: usize) -> Self {
        Self {
            means: vec![F::zero(); dim],
            scales: vec![F::one(); dim],
            logistic_weights: vec![F::zero(); dim],
            logistic_bias: F::zero(),
            linear_weights: vec![F::zero(); dim],
            linear_bias: F::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn standardize(&self, raw: &[F]) -> Result<Vec<F>, RatingError> {
        if raw.len() != self.dim() {
            return Err(RatingError::DimensionMismatch { got: raw.len(), expected: self.dim() });
        }
        Ok(raw.iter().zip(&self.means).zip(&self.scales).map(|((x, m), s)| (*x - *m) / *s).collect())
    }

    pub fn predict_vector(&self, raw: &[F]) -> Result<RatingPrediction<F>, RatingError> {
        let z = self.standardize(raw)?;
        let probability = sigmoid(dot(&self.logistic_weights, &z) + self.logistic_bias);
        let linear = dot(&self.linear_weights, &z) + self.linear_bias;
        Ok(RatingPrediction {
            score: linear.max(F::one()).min(F::lit(5.0)),
            probability,
            label: probability >= F::lit(0.5),
        })
    }

    /// Fraction of examples whose binary label matches `rating >= 4`.
    pub fn binary_accuracy(&self, examples: &[RatingExample]) -> F {
        if examples.is_empty() {
            return F::zero();
        }
        let hits = examples
            .iter()
            .filter(|e| {
                predict_rating(self, &e.features).map(|p| p.label == (e.rating >= POSITIVE_RATING)).unwrap_or(false)
            })
            .count();
        F::from_count(hits) / F::from_count(examples.len())
    }
}

pub fn predict_rating<F: Real>(
    model: &RatingModel<F>,
    features: &RatingFeatures,
) -> Result<RatingPrediction<F>, RatingError> {
    model.predict_vector(&features.to_vector())
}

pub fn train_rating<F: Real>(data: &[RatingExample]) -> Result<RatingModel<F>, RatingError> {
    let rows: Vec<Vec<F>> = data.iter().map(|e| e.features.to_vector()).collect();
    let ratings: Vec<u8> = data.iter().map(|e| e.rating).collect();
    train_on_vectors(&rows, &ratings)
}

/// Training on raw feature vectors, for callers with their own features.
pub fn train_on_vectors<F: Real>(rows: &[Vec<F>], ratings: &[u8]) -> Result<RatingModel<F>, RatingError> {
    if rows.len() < MIN_TRAINING_EXAMPLES {
        return Err(RatingError::TooFewExamples { got: rows.len(), need: MIN_TRAINING_EXAMPLES });
    }
    if let Some(r) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(RatingError::InvalidRating(*r));
    }
    let labels: Vec<F> = ratings.iter().map(|r| if *r >= POSITIVE_RATING { F::one() } else { F::zero() }).collect();
    if labels.iter().all(|l| *l == labels[0]) {
        return Err(RatingError::DegenerateDataset);
    }
    let dim = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(RatingError::DimensionMismatch { got: bad.len(), expected: dim });
    }
    let n = F::from_count(rows.len());
    let means: Vec<F> = (0..dim).map(|j| rows.iter().fold(F::zero(), |s, r| s + r[j]) / n).collect();
    let scales: Vec<F> = (0..dim)
        .map(|j| {
            let var = rows.iter().fold(F::zero(), |s, r| s + (r[j] - means[j]).powi(2)) / n;
            let sd = var.sqrt();
            if sd > F::lit(1e-12) {
                sd
            } else {
                F::one()
            }
        })
        .collect();
    let mut model = RatingModel { means, scales, ..RatingModel::zero(dim) };
    let z: Vec<Vec<F>> = rows.iter().map(|r| model.standardize(r)).collect::<Result<_, _>>()?;
    let x = design(&z);

    // Newton steps on the penalized log-likelihood.
    let mut beta = vec![F::zero(); dim + 1];
    for _ in 0..NEWTON_ITERATIONS {
        let p: Vec<F> = x.iter().map(|r| sigmoid(dot(r, &beta))).collect();
        let w: Vec<F> = p.iter().map(|p| (*p * (F::one() - *p)).max(F::lit(1e-10))).collect();
        let (mut a, _) = weighted_normal(&x, &w, &labels);
        let mut g = vec![F::zero(); dim + 1];
        for ((row, pi), yi) in x.iter().zip(&p).zip(&labels) {
            for i in 0..=dim {
                g[i] = g[i] + row[i] * (*yi - *pi);
            }
        }
        for i in 1..=dim {
            g[i] = g[i] - F::lit(RIDGE) * beta[i];
        }
        for (i, r) in a.iter_mut().enumerate() {
            r[i] = r[i] + F::lit(1e-12);
        }
        let step = solve(a, g)?;
        let size = step.iter().fold(F::zero(), |m, s| m.max(s.abs()));
        for (b, s) in beta.iter_mut().zip(&step) {
            *b = *b + *s;
        }
        if size < F::lit(1e-10) {
            break;
        }
    }
    model.logistic_bias = beta[0];
    model.logistic_weights = beta[1..].to_vec();

    let ones = vec![F::one(); x.len()];
    let y: Vec<F> = ratings.iter().map(|r| F::from_count(*r as usize)).collect();
    let (a, b) = weighted_normal(&x, &ones, &y);
    let lin = solve(a, b)?;
    model.linear_bias = lin[0];
    model.linear_weights = lin[1..].to_vec();
    Ok(model)
}

/// Share of rating users who start a task.
pub const STARTED_SHARE: f64 = 0.32;
/// Share of started tasks that are recipes.
pub const RECIPE_SHARE: f64 = 0.428;
pub const RECIPE_MEAN: f64 = 4.07;
pub const DIY_MEAN: f64 = 3.70;
pub const NOT_STARTED_MEAN: f64 = 3.30;
pub const RATING_SD: f64 = 1.0;

fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> usize {
    Poisson::new(lambda.max(1e-9)).expect("positive rate").sample(rng) as usize
}

/// Conversations with ratings drawn from the reported per-group means. The
/// behavior features are tied to the latent rating: unhappy users hit more
/// fallbacks and sensitive turns and read fewer steps.
pub fn synthetic_rating_dataset(n: usize, seed: u64) -> Vec<RatingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let started = rng.gen_bool(STARTED_SHARE);
            let recipe = started && rng.gen_bool(RECIPE_SHARE);
            let mean = match (started, recipe) {
                (true, true) => RECIPE_MEAN,
                (true, false) => DIY_MEAN,
                _ => NOT_STARTED_MEAN,
            };
            let latent = Normal::new(mean, RATING_SD).expect("valid normal").sample(&mut rng);
            let rating = latent.round().clamp(1.0, 5.0) as u8;
            let z = latent - 3.5;
            let fallback_count = poisson(&mut rng, (0.4 - 0.9 * z).exp());
            let sensitive_count = poisson(&mut rng, 0.15 * (-0.5 * z).exp());
            let search_count = 1 + poisson(&mut rng, if started { 0.8 } else { 1.5 });
            let steps_read = if started {
                let steps = rng.gen_range(5..=10);
                Binomial::new(steps, 1.0 / (1.0 + (-1.5 * z).exp())).expect("valid binomial").sample(&mut rng) as usize
            } else {
                0
            };
            let other = poisson(&mut rng, 2.0);
            let turn_count =
                1 + search_count + fallback_count + sensitive_count + steps_read + other + if started { 2 } else { 0 };
            let taps = Binomial::new(turn_count as u64, 0.2).expect("valid binomial").sample(&mut rng);
            RatingExample {
                features: RatingFeatures {
                    turn_count,
                    fallback_count,
                    steps_read,
                    task_started: started,
                    domain: match (started, recipe) {
                        (true, true) => RatingDomain::Recipe,
                        (true, false) => RatingDomain::Diy,
                        _ => RatingDomain::None,
                    },
                    taps_fraction: taps as f64 / turn_count as f64,
                    sensitive_count,
                    search_count,
                },
                rating,
            }
        })
        .collect()
}
