//! Exact Gaussian-process regression over planar positions with an RBF kernel.
//!
//! The Gram matrix `K + σ_noise² I` is kept as a lower-triangular Cholesky
//! factor `L` that grows one row per observation, together with the whitened
//! targets `z = L⁻¹ (y − m₀)`. With `v(x) = L⁻¹ k(X, x)` the posterior is
//!
//! ```text
//! μ(x)  = m₀ + v(x)ᵀ z
//! σ²(x) = σ_f² − v(x)ᵀ v(x)
//! ```
//!
//! [`GridPosterior`] caches `v(x)` for a fixed query set so that adding one
//! observation only costs one new row instead of a full solve per query.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Point;

/// Largest jitter (relative to the signal variance) tried before giving up.
const MAX_RELATIVE_JITTER: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// σ_f², the prior variance of the latent function.
    pub signal_variance: f64,
    /// ℓ, in the same length unit as positions.
    pub length_scale: f64,
    /// σ_noise², the assumed measurement-noise variance.
    pub noise_variance: f64,
    /// Diagonal stabilizer, relative to `signal_variance`.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Constant prior mean m₀.
    #[serde(default)]
    pub prior_mean: f64,
}

fn default_jitter() -> f64 {
    1e-8
}

impl Hyperparams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self> {
        let hp = Hyperparams {
            signal_variance,
            length_scale,
            noise_variance,
            jitter: default_jitter(),
            prior_mean: 0.0,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.signal_variance,
            self.length_scale,
            self.noise_variance,
            self.jitter,
            self.prior_mean,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("hyperparameters must be finite"));
        }
        if self.signal_variance < 0.0 || self.noise_variance < 0.0 {
            return Err(Error::invalid("variances must be non-negative"));
        }
        if self.length_scale <= 0.0 {
            return Err(Error::invalid(format!("length_scale must be positive, got {}", self.length_scale)));
        }
        if self.jitter <= 0.0 {
            return Err(Error::invalid("jitter must be positive"));
        }
        if self.noise_variance + self.jitter * self.signal_variance <= 0.0 {
            return Err(Error::invalid("noise_variance + jitter must be positive"));
        }
        Ok(())
    }
}

/// RBF kernel `σ_f² exp(−‖a−b‖² / 2ℓ²)`.
pub fn kernel(a: Point, b: Point, hp: &Hyperparams) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("kernel arguments must be finite"));
    }
    Ok(rbf(a, b, hp))
}

#[inline]
fn rbf(a: Point, b: Point, hp: &Hyperparams) -> f64 {
    hp.signal_variance * (-a.dist_sq(b) / (2.0 * hp.length_scale * hp.length_scale)).exp()
}

/// Posterior mean and variance at a batch of query points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PosteriorField {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl PosteriorField {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.variances[i].sqrt()
    }
}

/// Measurement history `{(x_i, y_i)}` plus the factorized Gram matrix.
#[derive(Clone, Debug)]
pub struct TraversabilityGp {
    hp: Hyperparams,
    positions: Vec<Point>,
    values: Vec<f64>,
    /// Row `i` holds `L[i][0..=i]`.
    chol: Vec<Vec<f64>>,
    whitened: Vec<f64>,
    jitter: f64,
    /// Bumped whenever the factor is rebuilt rather than extended.
    epoch: u64,
}

impl TraversabilityGp {
    pub fn new(hp: Hyperparams) -> Result<Self> {
        hp.validate()?;
        Ok(TraversabilityGp {
            hp,
            positions: Vec::new(),
            values: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            jitter: hp.jitter * hp.signal_variance,
            epoch: 0,
        })
    }

    /// Builds the posterior by factorizing the full Gram matrix in one go.
    pub fn from_measurements(hp: Hyperparams, positions: &[Point], values: &[f64]) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} positions but {} values",
                positions.len(),
                values.len()
            )));
        }
        let mut gp = TraversabilityGp::new(hp)?;
        for (&p, &y) in positions.iter().zip(values) {
            check_observation(p, y)?;
        }
        gp.positions = positions.to_vec();
        gp.values = values.to_vec();
        gp.refactor()?;
        Ok(gp)
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Absolute diagonal jitter currently in use.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn add_observation(&mut self, x: Point, y: f64) -> Result<()> {
        check_observation(x, y)?;
        let kvec: Vec<f64> = self.positions.iter().map(|&p| rbf(p, x, &self.hp)).collect();
        let row = forward_solve(&self.chol, &kvec);
        let pivot = self.hp.signal_variance + self.hp.noise_variance + self.jitter - dot(&row, &row);

        self.positions.push(x);
        self.values.push(y);
        if pivot > 0.0 && pivot.is_finite() {
            let diag = pivot.sqrt();
            let z = (y - self.hp.prior_mean - dot(&row, &self.whitened)) / diag;
            let mut row = row;
            row.push(diag);
            self.chol.push(row);
            self.whitened.push(z);
            Ok(())
        } else {
            // Only a larger jitter can help; the whole factor must be rebuilt.
            let result = self.refactor_escalating(self.jitter * 10.0);
            if result.is_err() {
                self.positions.pop();
                self.values.pop();
            }
            result
        }
    }

    fn refactor(&mut self) -> Result<()> {
        self.refactor_escalating(self.jitter)
    }

    fn refactor_escalating(&mut self, start_jitter: f64) -> Result<()> {
        let max_jitter = MAX_RELATIVE_JITTER * self.hp.signal_variance;
        let mut jitter = start_jitter;
        loop {
            match cholesky(&self.positions, &self.hp, jitter) {
                Ok(chol) => {
                    if jitter > self.jitter {
                        warn!("gram matrix needed jitter {jitter:e} (n = {})", self.positions.len());
                    }
                    let centered: Vec<f64> = self.values.iter().map(|y| y - self.hp.prior_mean).collect();
                    self.whitened = forward_solve(&chol, &centered);
                    self.chol = chol;
                    self.jitter = jitter;
                    self.epoch += 1;
                    return Ok(());
                }
                Err(diag) => {
                    if jitter >= max_jitter || jitter == 0.0 {
                        return Err(Error::Numerical(format!(
                            "cholesky failed with jitter {jitter:e}: {diag}"
                        )));
                    }
                    jitter = (jitter * 10.0).min(max_jitter);
                }
            }
        }
    }

    /// Whitened cross-covariance `L⁻¹ k(X, x)`.
    fn whiten(&self, x: Point) -> Vec<f64> {
        let kvec: Vec<f64> = self.positions.iter().map(|&p| rbf(p, x, &self.hp)).collect();
        forward_solve(&self.chol, &kvec)
    }

    pub fn posterior(&self, queries: &[Point]) -> Result<PosteriorField> {
        if queries.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("query points must be finite"));
        }
        let mut field = PosteriorField {
            means: Vec::with_capacity(queries.len()),
            variances: Vec::with_capacity(queries.len()),
        };
        for &q in queries {
            let v = self.whiten(q);
            field.means.push(self.hp.prior_mean + dot(&v, &self.whitened));
            field.variances.push((self.hp.signal_variance - dot(&v, &v)).max(0.0));
        }
        Ok(field)
    }
}

fn check_observation(x: Point, y: f64) -> Result<()> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::invalid(format!("non-finite observation ({x}, {y})")));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn forward_solve(chol: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rhs.len());
    for (i, row) in chol.iter().enumerate() {
        let s = rhs[i] - dot(&row[..i], &out);
        out.push(s / row[i]);
    }
    out
}

/// Row-by-row Cholesky of `K + (σ_noise² + jitter) I`. On failure returns a
/// short conditioning report.
fn cholesky(positions: &[Point], hp: &Hyperparams, jitter: f64) -> std::result::Result<Vec<Vec<f64>>, String> {
    let n = positions.len();
    let diag_value = hp.signal_variance + hp.noise_variance + jitter;
    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(i + 1);
        for j in 0..i {
            let k = rbf(positions[i], positions[j], hp);
            let s = k - dot(&row[..j], &chol[j][..j]);
            row.push(s / chol[j][j]);
        }
        let pivot = diag_value - dot(&row, &row);
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(format!(
                "n = {n}, pivot {i} = {pivot:e}, diagonal = {diag_value:e}, \
                 pivot/diagonal = {:e}",
                pivot / diag_value
            ));
        }
        row.push(pivot.sqrt());
        chol.push(row);
    }
    Ok(chol)
}

/// Posterior over a fixed query set, kept in sync with a growing
/// [`TraversabilityGp`] by appending one whitened row per new observation.
#[derive(Clone, Debug)]
pub struct GridPosterior {
    queries: Vec<Point>,
    rows: Vec<Vec<f64>>,
    field: PosteriorField,
    epoch: Option<u64>,
}

impl GridPosterior {
    pub fn new(queries: Vec<Point>) -> Result<Self> {
        if queries.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("query points must be finite"));
        }
        Ok(GridPosterior { queries, rows: Vec::new(), field: PosteriorField::default(), epoch: None })
    }

    pub fn queries(&self) -> &[Point] {
        &self.queries
    }

    /// Brings the cached field up to date with `gp` and returns it.
    pub fn refresh(&mut self, gp: &TraversabilityGp) -> &PosteriorField {
        let hp = gp.hyperparams();
        if self.epoch != Some(gp.epoch()) || self.rows.len() > gp.len() {
            self.rows.clear();
            self.field.means = vec![hp.prior_mean; self.queries.len()];
            self.field.variances = vec![hp.signal_variance; self.queries.len()];
            self.epoch = Some(gp.epoch());
        }
        for i in self.rows.len()..gp.len() {
            let li = &gp.chol[i];
            let xi = gp.positions[i];
            let mut row: Vec<f64> = self.queries.iter().map(|&q| rbf(xi, q, hp)).collect();
            for (j, prev) in self.rows.iter().enumerate() {
                let c = li[j];
                if c != 0.0 {
                    for (r, p) in row.iter_mut().zip(prev) {
                        *r -= c * p;
                    }
                }
            }
            let inv = 1.0 / li[i];
            let z = gp.whitened[i];
            for ((r, m), v) in row.iter_mut().zip(&mut self.field.means).zip(&mut self.field.variances) {
                *r *= inv;
                *m += z * *r;
                *v -= *r * *r;
            }
            self.rows.push(row);
        }
        for v in &mut self.field.variances {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        &self.field
    }

    pub fn field(&self) -> &PosteriorField {
        &self.field
    }
}
