use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Sample, Schema};
use crate::error::{ArocError, Result};
use crate::randkit::{sample_bernoulli, sample_normal, sample_skew_normal, RngStream, SkewNormalParams};
use crate::splines::{ModelSpec, Term};

/// Outcome SD in the nondiseased group, shared by every scenario.
pub const NONDISEASED_SD: f64 = 0.5;
/// Outcome SD in the diseased group, shared by every scenario.
pub const DISEASED_SD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub nondiseased: usize,
    pub diseased: usize,
}

impl SampleSizes {
    pub fn new(nondiseased: usize, diseased: usize) -> Self {
        Self { nondiseased, diseased }
    }
}

impl Default for SampleSizes {
    fn default() -> Self {
        Self::new(200, 200)
    }
}

/// `(2x − 10) / c`
#[inline]
fn rescale(x: f64, c: f64) -> f64 {
    (2.0 * x - 10.0) / c
}

#[inline]
fn pos_cube(u: f64) -> f64 {
    u.max(0.0).powi(3)
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::I,
        Scenario::II,
        Scenario::III,
        Scenario::IV,
        Scenario::V,
        Scenario::VI,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI"][self.index()]
    }

    /// Covariate names in dataset column order.
    pub fn covariates(self) -> &'static [&'static str] {
        match self {
            Scenario::V => &["x1", "x2"],
            Scenario::VI => &["x1", "x3"],
            _ => &["x1"],
        }
    }

    /// The kernel competitor handles a single continuous covariate only.
    pub fn supports_kernel(self) -> bool {
        self.covariates().len() == 1
    }

    /// Conditional mean of the nondiseased outcome at a covariate record.
    pub fn nondiseased_mean(self, x: &[f64]) -> f64 {
        match self {
            Scenario::I => 0.5,
            Scenario::II => 0.5 + rescale(x[0], 23.0),
            Scenario::III => 0.25 + 0.5 * rescale(x[0], 23.0),
            Scenario::IV => {
                let s = (x[0] + 8.0) / 23.0;
                5.0 + 3.0 * s * s - 25.0 * pos_cube(s - 0.2) + 250.0 * pos_cube(s - 0.65)
            }
            Scenario::V => 0.5 * rescale(x[0], 10.0).exp() - 2.0 * ((2.0 * x[1] * x[1] - 10.0) / 10.0),
            Scenario::VI => {
                let u = rescale(x[0], 10.0);
                -(0.7 * PI * (u + 30.0)).sin() * x[1] + u * u * (1.0 - x[1])
            }
        }
    }

    /// Conditional mean of the diseased outcome at a covariate record.
    pub fn diseased_mean(self, x: &[f64]) -> f64 {
        match self {
            Scenario::I => 1.0,
            Scenario::II => 1.0 + rescale(x[0], 23.0),
            Scenario::III => 0.75 + rescale(x[0], 23.0),
            Scenario::IV => -3.0 - 0.6 * ((x[0] + 8.0) / 23.0),
            Scenario::V => {
                let u = rescale(x[0], 10.0);
                0.5 * (PI * (u + 1.0)).sin() + 0.5 * u.exp()
            }
            Scenario::VI => {
                let u = rescale(x[0], 10.0);
                0.5 + u * u
            }
        }
    }

    /// Draws one covariate record for the given group.
    pub fn sample_covariates(self, diseased: bool, rng: &mut RngStream) -> Vec<f64> {
        let law = if diseased { *DISEASED_LAW } else { *NONDISEASED_LAW };
        match self {
            Scenario::V => vec![sample_skew_normal(rng, &law), sample_skew_normal(rng, &law)],
            Scenario::VI => {
                let x1 = sample_skew_normal(rng, &law);
                let x3 = sample_bernoulli(rng, 0.5).expect("valid probability");
                vec![x1, if x3 { 1.0 } else { 0.0 }]
            }
            _ => vec![sample_skew_normal(rng, &law)],
        }
    }

    /// The flexible nondiseased-group model with `knots` interior knots per
    /// continuous covariate.
    pub fn ddp_spec(self, knots: usize) -> ModelSpec {
        let smooth = |c: &str| Term::Smooth {
            covariate: c.into(),
            knots,
        };
        match self {
            Scenario::V => ModelSpec::new(vec![smooth("x1"), smooth("x2")]),
            Scenario::VI => ModelSpec::new(vec![
                Term::Factor { covariate: "x3".into() },
                Term::FactorByCurve {
                    covariate: "x1".into(),
                    factor: "x3".into(),
                    knots,
                },
            ]),
            _ => ModelSpec::new(vec![smooth("x1")]),
        }
    }

    /// The normal linear competitor (intercept plus main effects).
    pub fn linear_spec(self) -> ModelSpec {
        let lin = |c: &str| Term::Linear { covariate: c.into() };
        match self {
            Scenario::V => ModelSpec::new(vec![lin("x1"), lin("x2")]),
            Scenario::VI => ModelSpec::new(vec![lin("x1"), Term::Factor { covariate: "x3".into() }]),
            _ => ModelSpec::new(vec![lin("x1")]),
        }
    }
}

// SN(ξ, ω², λ) in direct (location, scale², shape) form
static NONDISEASED_LAW: LazyLock<SkewNormalParams> =
    LazyLock::new(|| SkewNormalParams::from_direct(0.0, 5.0, 2.0).expect("valid law"));
static DISEASED_LAW: LazyLock<SkewNormalParams> =
    LazyLock::new(|| SkewNormalParams::from_direct(3.0, 4.0, 1.0).expect("valid law"));

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = ArocError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_prefix("SCENARIO").unwrap_or(&t).trim();
        Scenario::ALL
            .iter()
            .copied()
            .find(|sc| sc.label() == t || (sc.index() + 1).to_string() == t)
            .ok_or_else(|| ArocError::invalid(format!("unknown scenario `{s}` (expected I..VI)")))
    }
}

/// Simulates one dataset. The nondiseased group is drawn first, then the
/// diseased group, each subject's covariates before its outcome.
pub fn generate_scenario(scenario: Scenario, sizes: SampleSizes, rng: &mut RngStream) -> Result<Dataset> {
    if sizes.nondiseased == 0 || sizes.diseased == 0 {
        return Err(ArocError::invalid("both groups need at least one subject"));
    }
    let schema = Schema::new(scenario.covariates().iter().copied())?;
    let mut group = |n: usize, diseased: bool| -> Result<Sample> {
        let p = scenario.covariates().len();
        let mut columns = vec![Vec::with_capacity(n); p];
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let x = scenario.sample_covariates(diseased, rng);
            let (mean, sd) = if diseased {
                (scenario.diseased_mean(&x), DISEASED_SD)
            } else {
                (scenario.nondiseased_mean(&x), NONDISEASED_SD)
            };
            y.push(sample_normal(rng, mean, sd)?);
            for (c, v) in columns.iter_mut().zip(x) {
                c.push(v);
            }
        }
        Sample::new(y, columns)
    };
    let nondiseased = group(sizes.nondiseased, false)?;
    let diseased = group(sizes.diseased, true)?;
    Dataset::new(schema, nondiseased, diseased)
}
