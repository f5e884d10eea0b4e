//! Blocked Gibbs sampler for the truncated DDP mixture of normal linear
//! regressions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{ArocError, Result};
use crate::linalg::{cholesky_with_jitter, spd_inverse, symmetrize};
use crate::randkit::{
    ln_normal_pdf, sample_beta, sample_categorical_log, sample_gamma, sample_mvn_canonical, sample_wishart, RngStream,
};
use crate::splines::{Design, ModelSpec};

use super::mixture::Mixture;
use super::prior::PriorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub nsim: usize,
    pub nburn: usize,
    /// Divide responses by their SD before sampling (undone on output).
    pub scale_response: bool,
    pub keep_allocations: bool,
    /// Hold `m = m0` and `S = S0` instead of sampling them.
    #[serde(default)]
    pub fix_hyperparameters: bool,
    /// Hold every `σ_l²` at this value (sampler scale) instead of sampling it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_variance: Option<f64>,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            nsim: 10_000,
            nburn: 2_000,
            scale_response: true,
            keep_allocations: false,
            fix_hyperparameters: false,
            fixed_variance: None,
        }
    }
}

impl GibbsConfig {
    pub fn new(nsim: usize, nburn: usize) -> Self {
        Self {
            nsim,
            nburn,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nburn >= self.nsim {
            return Err(ArocError::invalid(format!(
                "burn-in {} must be smaller than the number of iterations {}",
                self.nburn, self.nsim
            )));
        }
        if let Some(v) = self.fixed_variance {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ArocError::invalid(format!("fixed variance must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One retained Gibbs iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub weights: Vec<f64>,
    pub betas: Vec<DVector<f64>>,
    pub sigma2: Vec<f64>,
    pub m: DVector<f64>,
    pub sinv: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocations: Option<Vec<usize>>,
}

impl PosteriorDraw {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    /// Conditional law of the response at design row `z`.
    pub fn mixture_at(&self, z: &[f64]) -> Mixture {
        let means = self.betas.iter().map(|b| dot(b.as_slice(), z)).collect();
        let sds = self.sigma2.iter().map(|s| s.sqrt()).collect();
        Mixture::new(self.weights.clone(), means, sds).expect("posterior draw holds a valid mixture")
    }

    fn rescaled(mut self, scale: f64) -> Self {
        for b in &mut self.betas {
            *b *= scale;
        }
        for s in &mut self.sigma2 {
            *s *= scale * scale;
        }
        self.m *= scale;
        self.sinv /= scale * scale;
        self
    }
}

/// `F(y | z) = Σ ω_l Φ(y | z'β_l, σ_l²)` for one draw.
pub fn cond_cdf(draw: &PosteriorDraw, y: f64, z: &[f64]) -> f64 {
    draw.weights
        .iter()
        .zip(&draw.betas)
        .zip(&draw.sigma2)
        .map(|((w, b), s2)| w * crate::randkit::normal_cdf(y, dot(b.as_slice(), z), s2.sqrt()))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Cholesky factorizations that needed diagonal jitter.
    pub jitter_events: usize,
    pub max_jitter: f64,
    pub warnings: Vec<String>,
}

impl FitDiagnostics {
    fn record_jitter(&mut self, j: f64) {
        if j > 0.0 {
            self.jitter_events += 1;
            self.max_jitter = self.max_jitter.max(j);
        }
    }
}

/// Retained draws of a nondiseased-group fit, on the original response scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub draws: Vec<PosteriorDraw>,
    pub design: Design,
    pub prior: PriorSpec,
    pub config: GibbsConfig,
    /// Factor the responses were divided by during sampling.
    pub scale: f64,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }
}

/// Design rows and responses in the layout used by the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    rows: Vec<f64>,
    y: Vec<f64>,
    q: usize,
}

impl Observations {
    pub fn new(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(ArocError::DimensionMismatch {
                context: "design rows vs responses".into(),
                expected: y.len(),
                found: rows.len(),
            });
        }
        if y.is_empty() {
            return Err(ArocError::EmptyInput("nondiseased sample".into()));
        }
        let q = rows[0].len();
        let mut flat = Vec::with_capacity(q * rows.len());
        for r in rows {
            if r.len() != q {
                return Err(ArocError::DimensionMismatch {
                    context: "design row".into(),
                    expected: q,
                    found: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Ok(Self {
            rows: flat,
            y: y.to_vec(),
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.q..(i + 1) * self.q]
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    fn scaled(&self, scale: f64) -> Self {
        Self {
            rows: self.rows.clone(),
            y: self.y.iter().map(|v| v / scale).collect(),
            q: self.q,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Step 1: component labels with `P(S_i = l) ∝ ω_l φ(y_i | z_i'β_l, σ_l²)`,
/// normalized in log space.
pub fn update_allocations(
    obs: &Observations,
    weights: &[f64],
    betas: &[DVector<f64>],
    sigma2: &[f64],
    rng: &mut RngStream,
) -> Vec<usize> {
    let ln_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut logp = vec![0.0; weights.len()];
    (0..obs.len())
        .map(|i| {
            let z = obs.row(i);
            for (l, lp) in logp.iter_mut().enumerate() {
                *lp = ln_w[l] + ln_normal_pdf(obs.y[i], dot(betas[l].as_slice(), z), sigma2[l]);
            }
            // all weights zero cannot occur for stick-breaking weights
            sample_categorical_log(rng, &logp).unwrap_or(0)
        })
        .collect()
}

/// Step 2: `v_l ~ Beta(n_l + 1, α + Σ_{r>l} n_r)` for `l < L`, `v_L = 1`,
/// and the stick-breaking weights. Returns `(v, ω)`.
pub fn update_stick_weights(counts: &[usize], alpha: f64, rng: &mut RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = counts.len();
    if l == 0 {
        return Err(ArocError::invalid("at least one component is required"));
    }
    let mut tail: usize = counts.iter().sum();
    let mut v = Vec::with_capacity(l);
    let mut omega = Vec::with_capacity(l);
    let mut remaining = 1.0;
    for (k, &n_k) in counts.iter().enumerate() {
        tail -= n_k;
        let vk = if k + 1 == l {
            1.0
        } else {
            sample_beta(rng, n_k as f64 + 1.0, alpha + tail as f64)?
        };
        v.push(vk);
        omega.push(vk * remaining);
        remaining *= 1.0 - vk;
    }
    Ok((v, omega))
}

/// Step 3: per-component coefficient and variance updates given labels.
/// Empty components draw from the base measure. Returns the largest jitter
/// applied to any precision matrix (0 when none).
#[allow(clippy::too_many_arguments)]
pub fn update_components(
    obs: &Observations,
    allocations: &[usize],
    m: &DVector<f64>,
    sinv: &DMatrix<f64>,
    a: f64,
    b: f64,
    betas: &mut [DVector<f64>],
    sigma2: &mut [f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let q = obs.dim();
    let n_comp = betas.len();
    let mut ztz = vec![DMatrix::<f64>::zeros(q, q); n_comp];
    let mut zty = vec![DVector::<f64>::zeros(q); n_comp];
    let mut counts = vec![0usize; n_comp];
    for (i, &l) in allocations.iter().enumerate() {
        let z = obs.row(i);
        counts[l] += 1;
        let y = obs.y[i];
        let g = &mut ztz[l];
        for r in 0..q {
            zty[l][r] += z[r] * y;
            for c in 0..=r {
                g[(r, c)] += z[r] * z[c];
            }
        }
    }
    let sinv_m = sinv * m;
    let mut jitters = Vec::with_capacity(n_comp);
    for l in 0..n_comp {
        let prec_scale = 1.0 / sigma2[l];
        let mut precision = sinv.clone();
        let mut linear = sinv_m.clone();
        if counts[l] > 0 {
            for r in 0..q {
                for c in 0..=r {
                    let v = ztz[l][(r, c)] * prec_scale;
                    precision[(r, c)] += v;
                    if r != c {
                        precision[(c, r)] += v;
                    }
                }
            }
            linear += &zty[l] * prec_scale;
        }
        let (chol, jitter) =
            cholesky_with_jitter(&precision, "component precision").map_err(|e| ArocError::ComponentFailure {
                component: l,
                reason: e.to_string(),
            })?;
        jitters.push(jitter);
        let beta = sample_mvn_canonical(rng, &chol, &linear);
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(ArocError::ComponentFailure {
                component: l,
                reason: "non-finite coefficient draw".into(),
            });
        }
        let mut rss = 0.0;
        for (i, &k) in allocations.iter().enumerate() {
            if k == l {
                let r = obs.y[i] - dot(beta.as_slice(), obs.row(i));
                rss += r * r;
            }
        }
        let precision_draw = sample_gamma(rng, a + 0.5 * counts[l] as f64, b + 0.5 * rss)?;
        let s2 = 1.0 / precision_draw;
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(ArocError::ComponentFailure {
                component: l,
                reason: format!("variance draw {s2}"),
            });
        }
        betas[l] = beta;
        sigma2[l] = s2;
    }
    Ok(jitters)
}

/// Step 4a: `m ~ N(V(S0⁻¹m0 + S⁻¹Σβ_l), V)` with `V = (S0⁻¹ + L S⁻¹)⁻¹`.
/// Returns the draw and the jitter applied.
pub fn update_mean(
    betas: &[DVector<f64>],
    sinv: &DMatrix<f64>,
    m0: &DVector<f64>,
    s0_inv: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<(DVector<f64>, f64)> {
    if betas.is_empty() {
        return Err(ArocError::invalid("hyperparameter update needs at least one component"));
    }
    let sum: DVector<f64> = betas.iter().fold(DVector::zeros(m0.len()), |acc, b| acc + b);
    let precision = s0_inv + sinv * betas.len() as f64;
    let linear = s0_inv * m0 + sinv * sum;
    let (chol, jitter) = cholesky_with_jitter(&precision, "centring-mean precision")?;
    Ok((sample_mvn_canonical(rng, &chol, &linear), jitter))
}

/// Step 4b: `S⁻¹ ~ W(ν + L, (νΨ + Σ(β_l − m)(β_l − m)')⁻¹)`.
pub fn update_precision(
    betas: &[DVector<f64>],
    m: &DVector<f64>,
    nu: f64,
    psi: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    if betas.is_empty() {
        return Err(ArocError::invalid("hyperparameter update needs at least one component"));
    }
    let mut inv_scale = psi * nu;
    for b in betas {
        let d = b - m;
        inv_scale += &d * d.transpose();
    }
    symmetrize(&mut inv_scale);
    sample_wishart(rng, nu + betas.len() as f64, &inv_scale)
}

/// Step 4: both hyperparameter updates, mean first.
pub fn update_hyperparams(
    betas: &[DVector<f64>],
    sinv: &DMatrix<f64>,
    prior: &PriorSpec,
    rng: &mut RngStream,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s0_inv = spd_inverse(&prior.s0, "prior S0")?;
    let (m, _) = update_mean(betas, sinv, &prior.m0, &s0_inv, rng)?;
    let sinv = update_precision(betas, &m, prior.nu, &prior.psi, rng)?;
    Ok((m, sinv))
}

fn sample_sd(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    if y.len() < 2 {
        return f64::NAN;
    }
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Ridge-stabilized least squares start: coefficients and residual variance.
fn least_squares_start(obs: &Observations) -> (DVector<f64>, f64) {
    let q = obs.dim();
    let n = obs.len();
    let mut g = DMatrix::<f64>::zeros(q, q);
    let mut h = DVector::<f64>::zeros(q);
    for i in 0..n {
        let z = obs.row(i);
        for r in 0..q {
            h[r] += z[r] * obs.y[i];
            for c in 0..q {
                g[(r, c)] += z[r] * z[c];
            }
        }
    }
    let ridge = 1e-8 * g.trace().max(1.0) / q as f64;
    for r in 0..q {
        g[(r, r)] += ridge;
    }
    let beta = nalgebra::Cholesky::new(g)
        .map(|c| c.solve(&h))
        .unwrap_or_else(|| DVector::zeros(q));
    let rss: f64 = (0..n)
        .map(|i| (obs.y[i] - dot(beta.as_slice(), obs.row(i))).powi(2))
        .sum();
    let dof = n.saturating_sub(q).max(1) as f64;
    let mut s2 = rss / dof;
    if !(s2 > 1e-6) || !s2.is_finite() {
        s2 = 1.0;
    }
    (beta, s2)
}

/// Runs the sampler on already-built observations. Draws are returned on
/// the scale of `obs` (no response scaling here).
pub fn gibbs_sample(
    obs: &Observations,
    prior: &PriorSpec,
    config: &GibbsConfig,
    rng: &mut RngStream,
) -> Result<(Vec<PosteriorDraw>, FitDiagnostics)> {
    config.validate()?;
    prior.validate()?;
    let q = obs.dim();
    if prior.dim() != q {
        return Err(ArocError::DimensionMismatch {
            context: "prior dimension vs design".into(),
            expected: q,
            found: prior.dim(),
        });
    }
    let l = prior.components;
    let mut diag = FitDiagnostics::default();
    if q >= obs.len() {
        diag.warnings.push(format!(
            "design dimension {q} is not smaller than the sample size {}",
            obs.len()
        ));
    }
    let s0_inv = spd_inverse(&prior.s0, "prior S0")?;

    let (beta0, s20) = least_squares_start(obs);
    let mut betas = vec![beta0.clone(); l];
    let mut sigma2 = vec![config.fixed_variance.unwrap_or(s20); l];
    let mut weights = vec![1.0 / l as f64; l];
    let (mut m, mut sinv) = if config.fix_hyperparameters {
        (prior.m0.clone(), s0_inv.clone())
    } else {
        (beta0, DMatrix::<f64>::identity(q, q))
    };

    let mut draws = Vec::with_capacity(config.nsim - config.nburn);
    for iter in 0..config.nsim {
        let alloc = update_allocations(obs, &weights, &betas, &sigma2, rng);
        let mut counts = vec![0usize; l];
        for &k in &alloc {
            counts[k] += 1;
        }
        weights = update_stick_weights(&counts, prior.alpha, rng)?.1;
        for j in update_components(obs, &alloc, &m, &sinv, prior.a, prior.b, &mut betas, &mut sigma2, rng)? {
            diag.record_jitter(j);
        }
        if let Some(v) = config.fixed_variance {
            sigma2.iter_mut().for_each(|s| *s = v);
        }
        if !config.fix_hyperparameters {
            let (m_new, j) = update_mean(&betas, &sinv, &prior.m0, &s0_inv, rng)?;
            diag.record_jitter(j);
            m = m_new;
            sinv = update_precision(&betas, &m, prior.nu, &prior.psi, rng)?;
        }
        if iter >= config.nburn {
            draws.push(PosteriorDraw {
                weights: weights.clone(),
                betas: betas.clone(),
                sigma2: sigma2.clone(),
                m: m.clone(),
                sinv: sinv.clone(),
                allocations: config.keep_allocations.then(|| alloc.clone()),
            });
        }
    }
    Ok((draws, diag))
}

/// Fits the nondiseased-group model: builds the design from `spec`, scales
/// the responses (if configured), samples, and maps draws back.
pub fn gibbs_fit(
    data: &Dataset,
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &GibbsConfig,
    rng: &mut RngStream,
) -> Result<FitResult> {
    let sample = data.nondiseased();
    if sample.is_empty() {
        return Err(ArocError::EmptyInput("nondiseased sample".into()));
    }
    let design = Design::fit(spec, data.schema(), sample)?;
    let (rows, _) = design.rows(sample)?;
    let obs = Observations::new(&rows, sample.y())?;
    let mut scale = 1.0;
    if config.scale_response {
        let sd = sample_sd(sample.y());
        if sd.is_finite() && sd > 0.0 {
            scale = sd;
        }
    }
    let (draws, mut diagnostics) = gibbs_sample(&obs.scaled(scale), prior, config, rng)?;
    if config.scale_response && scale == 1.0 && sample.len() < 2 {
        diagnostics
            .warnings
            .push("response scaling skipped: fewer than two observations".into());
    }
    let draws = draws.into_iter().map(|d| d.rescaled(scale)).collect();
    Ok(FitResult {
        draws,
        design,
        prior: prior.clone(),
        config: *config,
        scale,
        diagnostics,
    })
}
