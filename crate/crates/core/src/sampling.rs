//! Synthetic data generation: parametric mixtures with exact pdf/cdf and
//! seeded, reproducible sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_TAU: f64 = 2.506_628_274_631_000_5; // sqrt(2 pi)

/// One mixture component family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Normal { mu: f64, sigma: f64 },
    Weibull { k: f64, lambda: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            Family::Normal { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
                    return bad(format!("normal(mu={mu}, sigma={sigma}): sigma must be positive"));
                }
            }
            Family::Weibull { k, lambda } => {
                if !k.is_finite() || !lambda.is_finite() || k <= 0.0 || lambda <= 0.0 {
                    return bad(format!(
                        "weibull(k={k}, lambda={lambda}): shape and scale must be positive"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Family::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * SQRT_TAU)
            }
            Family::Weibull { k, lambda } => {
                if x < 0.0 {
                    0.0
                } else if x == 0.0 {
                    // Limit at the origin: infinite for k < 1, 1/lambda for
                    // k = 1, zero for k > 1.
                    if k < 1.0 {
                        f64::INFINITY
                    } else if k == 1.0 {
                        1.0 / lambda
                    } else {
                        0.0
                    }
                } else {
                    let t = x / lambda;
                    (k / lambda) * t.powf(k - 1.0) * (-t.powf(k)).exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Family::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                0.5 * libm::erfc(-z / SQRT_2)
            }
            Family::Weibull { k, lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -f64::exp_m1(-(x / lambda).powf(k))
                }
            }
        }
    }
}

/// A finite mixture; weights must sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(flatten)]
    pub family: Family,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub components: Vec<Component>,
}

impl DistributionSpec {
    pub fn single(family: Family) -> Self {
        Self {
            components: vec![Component {
                family,
                weight: 1.0,
            }],
        }
    }

    pub fn mixture(parts: Vec<(Family, f64)>) -> Self {
        Self {
            components: parts
                .into_iter()
                .map(|(family, weight)| Component { family, weight })
                .collect(),
        }
    }

    /// Named presets used by the benchmark command and the test suite.
    ///
    /// `normal` is narrow relative to its mean, `weibull` is the unimodal
    /// exponential-like case, and the two mixtures exercise well-separated
    /// modes of equal and unequal shape.
    pub fn benchmark(name: &str) -> Option<Self> {
        match name {
            "normal" => Some(Self::single(Family::Normal {
                mu: 1.0,
                sigma: 0.16,
            })),
            "weibull" => Some(Self::single(Family::Weibull {
                k: 1.0,
                lambda: 1.2,
            })),
            "bimodal-normal" => Some(Self::mixture(vec![
                (Family::Normal { mu: 1.0, sigma: 1.0 }, 0.5),
                (Family::Normal { mu: 5.0, sigma: 1.0 }, 0.5),
            ])),
            "trimodal-weibull" => {
                let w = 1.0 / 3.0;
                Some(Self::mixture(vec![
                    (Family::Weibull { k: 0.8, lambda: 1.5 }, w),
                    (Family::Weibull { k: 2.5, lambda: 5.2 }, w),
                    (Family::Weibull { k: 5.0, lambda: 8.2 }, w),
                ]))
            }
            _ => None,
        }
    }

    /// Names accepted by [`DistributionSpec::benchmark`].
    pub const BENCHMARK_NAMES: [&'static str; 4] =
        ["normal", "weibull", "bimodal-normal", "trimodal-weibull"];

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidSpec("mixture has no components".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            c.family.validate()?;
            if !c.weight.is_finite() || c.weight <= 0.0 || c.weight > 1.0 {
                return Err(Error::InvalidSpec(format!(
                    "component weight {} outside (0, 1]",
                    c.weight
                )));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "component weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Mixture pdf. Assumes a validated spec.
    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.family.pdf(x))
            .sum()
    }

    /// Mixture cdf. Assumes a validated spec.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.family.cdf(x))
            .sum()
    }
}

/// Exact density of a validated spec at `x`.
pub fn true_pdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.pdf(x)
}

/// Exact distribution function of a validated spec at `x`.
pub fn true_cdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.cdf(x)
}

enum Sampler {
    Normal(rand_distr::Normal<f64>),
    Weibull(rand_distr::Weibull<f64>),
}

impl Sampler {
    fn build(family: &Family) -> Sampler {
        // Parameters were validated before this point.
        match *family {
            Family::Normal { mu, sigma } => {
                Sampler::Normal(rand_distr::Normal::new(mu, sigma).expect("validated"))
            }
            Family::Weibull { k, lambda } => {
                Sampler::Weibull(rand_distr::Weibull::new(lambda, k).expect("validated"))
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal(d) => d.sample(rng),
            Sampler::Weibull(d) => d.sample(rng),
        }
    }
}

/// Draw `n` observations from `spec` and return them sorted ascending.
///
/// The stream is fully determined by `seed`: component choice consumes one
/// uniform draw, then the chosen component's sampler runs on the same
/// generator, so equal seeds give bit-identical samples.
pub fn draw_sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample size must be at least 1".into(),
        ));
    }
    let samplers: Vec<Sampler> = spec.components.iter().map(|c| Sampler::build(&c.family)).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: f64 = rng.random();
        let mut idx = spec.components.len() - 1;
        for (i, c) in spec.components.iter().enumerate() {
            if u < c.weight {
                idx = i;
                break;
            }
            u -= c.weight;
        }
        out.push(samplers[idx].draw(&mut rng));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}
