//! Cubic B-spline bases, quantile knots, and design rows.
//!
//! Boundary knots are repeated four times (clamped cubic basis). The full
//! basis has `K + 4` functions forming a partition of unity on
//! `[low, high]`; design rows use `K + 3` of them, dropping the first, so a
//! smooth term stays identifiable next to the intercept. Points outside
//! `[low, high]` are clamped to the nearest boundary.

use serde::{Deserialize, Serialize};

use crate::data::{Sample, Schema};
use crate::error::{ArocError, Result};

const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSet {
    low: f64,
    high: f64,
    interior: Vec<f64>,
}

impl KnotSet {
    pub fn new(low: f64, high: f64, interior: Vec<f64>) -> Result<Self> {
        let ok = low.is_finite()
            && high.is_finite()
            && low < high
            && interior.iter().all(|k| k.is_finite() && *k > low && *k < high)
            && interior.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(ArocError::DegenerateKnots {
                covariate: String::new(),
                reason: format!("need low < ξ1 < ... < ξK < high, got {low}, {interior:?}, {high}"),
            });
        }
        Ok(Self { low, high, interior })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn interior(&self) -> &[f64] {
        &self.interior
    }

    /// Number of columns a smooth term contributes to a design row.
    pub fn dim(&self) -> usize {
        self.interior.len() + DEGREE
    }

    /// Full clamped knot vector of length `K + 8`.
    pub fn knot_vector(&self) -> Vec<f64> {
        let mut t = vec![self.low; DEGREE + 1];
        t.extend_from_slice(&self.interior);
        t.extend(std::iter::repeat_n(self.high, DEGREE + 1));
        t
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.low && x <= self.high
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.low, self.high)
    }
}

/// Empirical quantile (linear interpolation between order statistics).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Knots at the `k / (K + 1)` empirical quantiles; boundaries at the range.
pub fn knot_sequence(values: &[f64], k: usize) -> Result<KnotSet> {
    if values.is_empty() {
        return Err(ArocError::EmptyInput("knot placement values".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(ArocError::NonFinite {
            what: "knot placement values".into(),
            value: *v,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < k + 2 {
        return Err(ArocError::DegenerateKnots {
            covariate: String::new(),
            reason: format!("{} distinct values cannot support {k} interior knots", distinct.len()),
        });
    }
    let interior: Vec<f64> = (1..=k)
        .map(|j| quantile_sorted(&sorted, j as f64 / (k + 1) as f64))
        .collect();
    let low = sorted[0];
    let high = sorted[sorted.len() - 1];
    KnotSet::new(low, high, interior).map_err(|_| ArocError::DegenerateKnots {
        covariate: String::new(),
        reason: "tied quantiles produce coincident knots".into(),
    })
}

/// All `K + 4` clamped cubic B-splines at `x` (clamped into the domain).
pub fn bspline_basis_full(x: f64, knots: &KnotSet) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(ArocError::NonFinite {
            what: "spline argument".into(),
            value: x,
        });
    }
    let x = knots.clamp(x);
    let t = knots.knot_vector();
    let n_basis = knots.interior.len() + DEGREE + 1;
    // span index s with t[s] <= x < t[s+1]; the right end uses the last span
    let mut s = DEGREE;
    while s + 1 < n_basis && x >= t[s + 1] {
        s += 1;
    }
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = x - t[s + 1 - j];
        right[j] = t[s + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom > 0.0 { n[r] / denom } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    let mut out = vec![0.0; n_basis];
    for (r, v) in n.iter().enumerate() {
        out[s - DEGREE + r] = *v;
    }
    Ok(out)
}

/// The `K + 3` design columns of a smooth term at `x`.
pub fn bspline_basis(x: f64, knots: &KnotSet) -> Result<Vec<f64>> {
    let mut full = bspline_basis_full(x, knots)?;
    full.remove(0);
    Ok(full)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Linear {
        covariate: String,
    },
    Smooth {
        covariate: String,
        knots: usize,
    },
    /// Separate smooth curve in `covariate` for each level of the binary `factor`.
    FactorByCurve {
        covariate: String,
        factor: String,
        knots: usize,
    },
    Factor {
        covariate: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub intercept: bool,
    pub terms: Vec<Term>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::intercept_only()
    }
}

impl ModelSpec {
    pub fn intercept_only() -> Self {
        Self {
            intercept: true,
            terms: Vec::new(),
        }
    }

    pub fn new(terms: Vec<Term>) -> Self {
        Self { intercept: true, terms }
    }

    /// Terms in design order; a `Factor` main effect is appended for every
    /// factor used in a `FactorByCurve` term that lacks one.
    pub fn expanded_terms(&self) -> Vec<Term> {
        let mut terms = self.terms.clone();
        for t in &self.terms {
            if let Term::FactorByCurve { factor, .. } = t {
                let present = terms
                    .iter()
                    .any(|u| matches!(u, Term::Factor { covariate } if covariate == factor));
                if !present {
                    terms.push(Term::Factor {
                        covariate: factor.clone(),
                    });
                }
            }
        }
        terms
    }

    /// True when every term is linear or a factor (no splines).
    pub fn is_parametric(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t, Term::Linear { .. } | Term::Factor { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Block {
    Linear {
        col: usize,
    },
    Smooth {
        col: usize,
        knots: KnotSet,
    },
    ByCurve {
        col: usize,
        factor_col: usize,
        factor: String,
        knots: KnotSet,
    },
    Factor {
        col: usize,
        name: String,
    },
}

/// A [`ModelSpec`] bound to a schema with knots placed from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    spec: ModelSpec,
    blocks: Vec<Block>,
    dim: usize,
}

impl Design {
    /// Resolves covariates and places knots from `sample` (the nondiseased
    /// group). A `FactorByCurve` term shares one knot set across levels,
    /// built from the whole sample.
    pub fn fit(spec: &ModelSpec, schema: &Schema, sample: &Sample) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut dim = usize::from(spec.intercept);
        let place = |col: usize, k: usize, name: &str| {
            knot_sequence(sample.column(col), k).map_err(|e| match e {
                ArocError::DegenerateKnots { reason, .. } => ArocError::DegenerateKnots {
                    covariate: name.to_string(),
                    reason,
                },
                other => other,
            })
        };
        for term in spec.expanded_terms() {
            match term {
                Term::Linear { covariate } => {
                    blocks.push(Block::Linear {
                        col: schema.index_of(&covariate)?,
                    });
                    dim += 1;
                }
                Term::Smooth { covariate, knots } => {
                    let col = schema.index_of(&covariate)?;
                    let ks = place(col, knots, &covariate)?;
                    dim += ks.dim();
                    blocks.push(Block::Smooth { col, knots: ks });
                }
                Term::FactorByCurve {
                    covariate,
                    factor,
                    knots,
                } => {
                    let col = schema.index_of(&covariate)?;
                    let factor_col = schema.index_of(&factor)?;
                    let ks = place(col, knots, &covariate)?;
                    dim += 2 * ks.dim();
                    blocks.push(Block::ByCurve {
                        col,
                        factor_col,
                        factor,
                        knots: ks,
                    });
                }
                Term::Factor { covariate } => {
                    blocks.push(Block::Factor {
                        col: schema.index_of(&covariate)?,
                        name: covariate,
                    });
                    dim += 1;
                }
            }
        }
        if dim == 0 {
            return Err(ArocError::invalid("model has no columns"));
        }
        Ok(Self {
            spec: spec.clone(),
            blocks,
            dim,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Design dimension Q.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Knot sets of the spline terms, in term order.
    pub fn knot_sets(&self) -> Vec<&KnotSet> {
        self.blocks
            .iter()
            .filter_map(|b| match b {
                Block::Smooth { knots, .. } | Block::ByCurve { knots, .. } => Some(knots),
                _ => None,
            })
            .collect()
    }

    /// Design row for a covariate record aligned with the schema.
    pub fn row(&self, record: &[f64]) -> Result<Vec<f64>> {
        Ok(self.row_flagged(record)?.0)
    }

    /// Design row plus whether any spline argument had to be clamped.
    pub fn row_flagged(&self, record: &[f64]) -> Result<(Vec<f64>, bool)> {
        let mut z = Vec::with_capacity(self.dim);
        let mut clamped = false;
        if self.spec.intercept {
            z.push(1.0);
        }
        let get = |col: usize| {
            record.get(col).copied().ok_or(ArocError::DimensionMismatch {
                context: "covariate record".into(),
                expected: col + 1,
                found: record.len(),
            })
        };
        for block in &self.blocks {
            match block {
                Block::Linear { col } => z.push(get(*col)?),
                Block::Smooth { col, knots } => {
                    let x = get(*col)?;
                    clamped |= !knots.contains(x);
                    z.extend(bspline_basis(x, knots)?);
                }
                Block::ByCurve {
                    col,
                    factor_col,
                    factor,
                    knots,
                } => {
                    let x = get(*col)?;
                    let level = factor_level(factor, get(*factor_col)?)?;
                    clamped |= !knots.contains(x);
                    let basis = bspline_basis(x, knots)?;
                    let zeros = vec![0.0; basis.len()];
                    if level {
                        z.extend(zeros);
                        z.extend(basis);
                    } else {
                        z.extend(basis);
                        z.extend(zeros);
                    }
                }
                Block::Factor { col, name } => {
                    z.push(if factor_level(name, get(*col)?)? { 1.0 } else { 0.0 });
                }
            }
        }
        debug_assert_eq!(z.len(), self.dim);
        Ok((z, clamped))
    }

    /// Design rows for every subject of a sample, plus the number of rows
    /// that needed clamping.
    pub fn rows(&self, sample: &Sample) -> Result<(Vec<Vec<f64>>, usize)> {
        let mut out = Vec::with_capacity(sample.len());
        let mut n_clamped = 0;
        for i in 0..sample.len() {
            let (z, c) = self.row_flagged(&sample.record(i))?;
            n_clamped += usize::from(c);
            out.push(z);
        }
        Ok((out, n_clamped))
    }
}

fn factor_level(name: &str, value: f64) -> Result<bool> {
    if value == 0.0 {
        Ok(false)
    } else if value == 1.0 {
        Ok(true)
    } else {
        Err(ArocError::FactorLevel {
            covariate: name.to_string(),
            value,
        })
    }
}

/// Design row for one record under `spec`, with knots taken from the
/// nondiseased `sample`.
pub fn design_row(spec: &ModelSpec, schema: &Schema, sample: &Sample, record: &[f64]) -> Result<Vec<f64>> {
    Design::fit(spec, schema, sample)?.row(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook Cox–de Boor recursion, with 0/0 := 0 and the last basis
    /// function closed at the right boundary.
    fn cox_de_boor(x: f64, t: &[f64], i: usize, p: usize) -> f64 {
        if p == 0 {
            let last = t.iter().rposition(|v| *v < t[t.len() - 1]).unwrap();
            if i == last && x == t[t.len() - 1] {
                return 1.0;
            }
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * cox_de_boor(x, t, i, p - 1);
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + p + 1] - x) / d2 * cox_de_boor(x, t, i + 1, p - 1);
        }
        v
    }

    fn knots4() -> KnotSet {
        KnotSet::new(-1.0, 3.0, vec![-0.2, 0.5, 1.1, 2.4]).unwrap()
    }

    #[test]
    fn knot_sequence_quantiles() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let k0 = knot_sequence(&v, 0).unwrap();
        assert!(k0.interior().is_empty());
        assert_eq!((k0.low(), k0.high()), (0.0, 1.0));
        let k1 = knot_sequence(&v, 1).unwrap();
        assert!((k1.interior()[0] - 0.5).abs() < 1e-15);
        let k4 = knot_sequence(&v, 4).unwrap();
        for (j, k) in k4.interior().iter().enumerate() {
            assert!((k - 0.2 * (j + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn knot_sequence_rejects_ties() {
        assert!(matches!(
            knot_sequence(&[1.0, 1.0, 2.0], 1),
            Err(ArocError::DegenerateKnots { .. })
        ));
        // enough distinct values but coincident quantiles
        let mut v = vec![0.0; 50];
        v.extend([1.0, 2.0, 3.0]);
        assert!(knot_sequence(&v, 2).is_err());
        assert!(knot_sequence(&[], 0).is_err());
    }

    #[test]
    fn k0_basis_at_boundaries() {
        let ks = KnotSet::new(0.0, 1.0, vec![]).unwrap();
        assert_eq!(bspline_basis_full(0.0, &ks).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(bspline_basis_full(1.0, &ks).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(bspline_basis(0.0, &ks).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(bspline_basis(1.0, &ks).unwrap().len(), 3);
        // K = 0 reduces to the Bernstein polynomials
        let b = bspline_basis_full(0.3, &ks).unwrap();
        let bern = [0.343, 3.0 * 0.3 * 0.49, 3.0 * 0.09 * 0.7, 0.027];
        for (u, v) in b.iter().zip(bern) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_matches_recursion_oracle() {
        let ks = knots4();
        let t = ks.knot_vector();
        let mut rng = crate::randkit::RngStream::new(3, 0);
        use rand::Rng;
        let mut xs: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..3.0)).collect();
        xs.extend([-1.0, 3.0, -0.2, 0.5, 2.4]);
        for x in xs {
            let b = bspline_basis_full(x, &ks).unwrap();
            for (i, v) in b.iter().enumerate() {
                assert!((v - cox_de_boor(x, &t, i, 3)).abs() < 1e-12, "x={x} i={i}");
            }
        }
    }

    #[test]
    fn out_of_range_is_clamped() {
        let ks = knots4();
        assert_eq!(bspline_basis(-5.0, &ks).unwrap(), bspline_basis(-1.0, &ks).unwrap());
        assert_eq!(bspline_basis(9.0, &ks).unwrap(), bspline_basis(3.0, &ks).unwrap());
        assert!(bspline_basis(f64::NAN, &ks).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_locality(
            mut inner in prop::collection::vec(0.01f64..0.99, 0..6),
            x in -0.5f64..1.5,
        ) {
            inner.sort_by(f64::total_cmp);
            inner.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let ks = KnotSet::new(0.0, 1.0, inner.clone()).unwrap();
            let b = bspline_basis_full(x, &ks).unwrap();
            prop_assert_eq!(b.len(), inner.len() + 4);
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(b.iter().all(|v| *v >= 0.0));
            let nz: Vec<usize> = b.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
            prop_assert!(nz.len() <= 4);
            prop_assert!(nz.last().unwrap() - nz[0] < 4);
        }
    }

    fn schema_and_sample() -> (Schema, Sample) {
        let schema = Schema::new(["x", "g"]).unwrap();
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
        let g: Vec<f64> = (0..40).map(|i| (i % 2) as f64).collect();
        let y = vec![0.0; 40];
        (schema, Sample::new(y, vec![x, g]).unwrap())
    }

    #[test]
    fn simple_design_rows() {
        let (schema, sample) = schema_and_sample();
        let spec = ModelSpec::intercept_only();
        assert_eq!(design_row(&spec, &schema, &sample, &[3.0, 0.0]).unwrap(), vec![1.0]);
        let spec = ModelSpec::new(vec![Term::Linear { covariate: "x".into() }]);
        assert_eq!(
            design_row(&spec, &schema, &sample, &[2.5, 1.0]).unwrap(),
            vec![1.0, 2.5]
        );
    }

    #[test]
    fn factor_by_curve_blocks() {
        let (schema, sample) = schema_and_sample();
        let spec = ModelSpec::new(vec![Term::FactorByCurve {
            covariate: "x".into(),
            factor: "g".into(),
            knots: 0,
        }]);
        let d = Design::fit(&spec, &schema, &sample).unwrap();
        assert_eq!(d.dim(), 8);
        // hand-built interaction: [1, B(x)·(1−g), B(x)·g, g]
        let ks = KnotSet::new(0.0, 9.75, vec![]).unwrap();
        for (x, g) in [(2.0, 0.0), (7.5, 1.0)] {
            let b = bspline_basis(x, &ks).unwrap();
            let mut expect = vec![1.0];
            expect.extend(b.iter().map(|v| v * (1.0 - g)));
            expect.extend(b.iter().map(|v| v * g));
            expect.push(g);
            let row = d.row(&[x, g]).unwrap();
            for (u, v) in row.iter().zip(&expect) {
                assert!((u - v).abs() < 1e-15);
            }
        }
        assert!(matches!(d.row(&[1.0, 2.0]), Err(ArocError::FactorLevel { .. })));
    }

    #[test]
    fn explicit_factor_not_duplicated() {
        let (schema, sample) = schema_and_sample();
        let spec = ModelSpec::new(vec![
            Term::Factor { covariate: "g".into() },
            Term::FactorByCurve {
                covariate: "x".into(),
                factor: "g".into(),
                knots: 1,
            },
        ]);
        assert_eq!(Design::fit(&spec, &schema, &sample).unwrap().dim(), 1 + 1 + 8);
    }

    #[test]
    fn missing_covariate_and_clamp_flag() {
        let (schema, sample) = schema_and_sample();
        let spec = ModelSpec::new(vec![Term::Linear {
            covariate: "age".into(),
        }]);
        assert!(matches!(
            Design::fit(&spec, &schema, &sample),
            Err(ArocError::MissingCovariate(_))
        ));
        let spec = ModelSpec::new(vec![Term::Smooth {
            covariate: "x".into(),
            knots: 2,
        }]);
        let d = Design::fit(&spec, &schema, &sample).unwrap();
        assert_eq!(d.dim(), 6);
        assert!(!d.row_flagged(&[5.0, 0.0]).unwrap().1);
        assert!(d.row_flagged(&[50.0, 0.0]).unwrap().1);
        for i in 0..sample.len() {
            assert_eq!(d.row(&sample.record(i)).unwrap().len(), d.dim());
        }
    }

    #[test]
    fn spec_serde_roundtrip() {
        let spec = ModelSpec::new(vec![
            Term::Smooth {
                covariate: "x".into(),
                knots: 4,
            },
            Term::FactorByCurve {
                covariate: "x".into(),
                factor: "g".into(),
                knots: 0,
            },
        ]);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&s).unwrap(), spec);
    }
}
