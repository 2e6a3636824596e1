//! Synthetic data generation: attribute profiles, Q-matrices, item
//! parameters, and item responses.
//!
//! Two population structures are supported.  Under the *uniform* structure
//! every latent class is equally likely (each attribute is an independent
//! fair coin).  Under the *correlated* structure a latent vector
//! `θ ~ N(0, Σ)` with equicorrelation `ρ` is dichotomized at zero,
//! `α_k = 𝕀{θ_k > 0}`; it is sampled through the one-factor representation
//! `θ_k = √ρ·u + √(1−ρ)·e_k` in O(K) per examinee, and the implied class
//! distribution is computed by Gauss–Legendre quadrature over the common
//! factor.
//!
//! A full simulation ([`simulate`]) is a pure function of its
//! configuration: the seed's root stream is split into four fixed child
//! streams (Q-matrix, attributes, item parameters, responses), so changing
//! e.g. the Q-matrix source never shifts the draws of the other phases.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::normal::normal_cdf;
use crate::distributions::quadrature::gauss_legendre_on;
use crate::distributions::rng::RngStream;
use crate::distributions::truncated::bernoulli;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::model::{
    term_masks, DinaParams, GdinaItemParams, ItemParams, QMatrix, ResponseMatrix,
    MAX_ATTRIBUTES_FULL_ENUM,
};

/// Distribution of the attribute profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeStructure {
    /// All `2^K` classes equally likely.
    Uniform,
    /// Dichotomized equicorrelated Gaussian with correlation `rho`.
    Correlated {
        /// Common correlation of the latent Gaussian, in `[0, 1)`.
        rho: f64,
    },
}

/// How item parameters are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ItemSpec {
    /// DINA with the same guessing/slipping probability for every item.
    Dina {
        /// Guessing probability.
        guess: f64,
        /// Slipping probability.
        slip: f64,
    },
    /// Probit G-DINA coefficients drawn from the standard generator:
    /// intercept `N(−1.2, 0.4²)`, order-`w` terms `N(0.9, 0.3²)/w²`.
    Gdina,
    /// Explicit per-item probit G-DINA coefficient vectors.
    GdinaExplicit {
        /// One canonical-order coefficient vector per item.
        coef: Vec<Vec<f64>>,
    },
}

/// Where the Q-matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QSpec {
    /// Generate a structured Q-matrix (see [`gen_q_matrix`]).
    Generated,
    /// Use a bundled fixture by name (see [`fixtures::names`]).
    Fixture {
        /// Fixture identifier, e.g. `"sim-j40-k3"`.
        name: String,
    },
    /// Explicit 0/1 rows.
    Explicit {
        /// `J` rows of `K` entries each.
        rows: Vec<Vec<u8>>,
    },
}

/// Complete recipe for one synthetic data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of examinees `N`.
    pub n_examinees: usize,
    /// Number of items `J`.
    pub n_items: usize,
    /// Number of attributes `K`.
    pub n_attrs: usize,
    /// Population structure for the attribute profiles.
    pub structure: AttributeStructure,
    /// Item-parameter source.
    pub items: ItemSpec,
    /// Q-matrix source.
    pub q: QSpec,
    /// RNG seed; the simulation is a pure function of this configuration.
    pub seed: u64,
}

impl SimConfig {
    /// A uniform-structure DINA recipe with the conventional `g = s = 0.2`
    /// and a generated Q-matrix.
    pub fn dina_uniform(n_examinees: usize, n_items: usize, n_attrs: usize, seed: u64) -> Self {
        SimConfig {
            n_examinees,
            n_items,
            n_attrs,
            structure: AttributeStructure::Uniform,
            items: ItemSpec::Dina {
                guess: 0.2,
                slip: 0.2,
            },
            q: QSpec::Generated,
            seed,
        }
    }

    /// Validates every field, naming the offending one in the error.
    pub fn validate(&self) -> Result<()> {
        if self.n_examinees == 0 {
            return Err(Error::config("n_examinees must be at least 1"));
        }
        if self.n_items == 0 {
            return Err(Error::config("n_items must be at least 1"));
        }
        if self.n_attrs == 0 {
            return Err(Error::config("n_attrs must be at least 1"));
        }
        if self.n_attrs > MAX_ATTRIBUTES_FULL_ENUM {
            return Err(Error::config(format!(
                "n_attrs: the class distribution needs 2^K entries, so at most \
                 K={MAX_ATTRIBUTES_FULL_ENUM} is supported, got {}",
                self.n_attrs
            )));
        }
        if let AttributeStructure::Correlated { rho } = self.structure {
            if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
                return Err(Error::config(format!(
                    "structure.rho must lie in [0, 1), got {rho}"
                )));
            }
        }
        match &self.items {
            ItemSpec::Dina { guess, slip } => {
                for (name, v) in [("items.guess", *guess), ("items.slip", *slip)] {
                    if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                        return Err(Error::config(format!(
                            "{name} must be a probability, got {v}"
                        )));
                    }
                }
            }
            ItemSpec::Gdina => {}
            ItemSpec::GdinaExplicit { coef } => {
                if coef.len() != self.n_items {
                    return Err(Error::config(format!(
                        "items.coef covers {} items, expected {}",
                        coef.len(),
                        self.n_items
                    )));
                }
            }
        }
        match &self.q {
            QSpec::Generated => {
                if self.n_items < 2 * self.n_attrs {
                    return Err(Error::config(format!(
                        "n_items: generating an identifiable Q-matrix needs J ≥ 2K, \
                         got J={} for K={}",
                        self.n_items, self.n_attrs
                    )));
                }
            }
            QSpec::Fixture { name } => {
                let q = fixtures::by_name(name).ok_or_else(|| {
                    Error::config(format!(
                        "q.name: unknown fixture {name:?}; available: {}",
                        fixtures::names().join(", ")
                    ))
                })?;
                if q.n_items() != self.n_items || q.n_attrs() != self.n_attrs {
                    return Err(Error::config(format!(
                        "q.name: fixture {name:?} is {}×{} but the configuration says \
                         n_items={}, n_attrs={}",
                        q.n_items(),
                        q.n_attrs(),
                        self.n_items,
                        self.n_attrs
                    )));
                }
            }
            QSpec::Explicit { rows } => {
                let q = QMatrix::new(rows)?;
                if q.n_items() != self.n_items || q.n_attrs() != self.n_attrs {
                    return Err(Error::config(format!(
                        "q.rows: explicit Q-matrix is {}×{} but the configuration says \
                         n_items={}, n_attrs={}",
                        q.n_items(),
                        q.n_attrs(),
                        self.n_items,
                        self.n_attrs
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything one simulated data set consists of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    /// The Q-matrix that was used.
    pub q: QMatrix,
    /// True attribute profiles (bitmasks), one per examinee.
    pub alpha: Vec<u32>,
    /// True item parameters.
    pub params: ItemParams,
    /// True class distribution over the `2^K` classes.
    pub pi: Vec<f64>,
    /// Simulated responses.
    pub y: ResponseMatrix,
}

/// Runs a full simulation from a validated configuration.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let root = RngStream::from_u64(cfg.seed);
    // Fixed stream assignment per phase; see the module documentation.
    let mut q_rng = root.split(0);
    let mut attr_rng = root.split(1);
    let mut item_rng = root.split(2);
    let mut resp_rng = root.split(3);

    let q = match &cfg.q {
        QSpec::Generated => gen_q_matrix(&mut q_rng, cfg.n_attrs, cfg.n_items)?,
        QSpec::Fixture { name } => fixtures::by_name(name)
            .ok_or_else(|| Error::config(format!("unknown fixture {name:?}")))?,
        QSpec::Explicit { rows } => QMatrix::new(rows)?,
    };

    let (alpha, pi) = match cfg.structure {
        AttributeStructure::Uniform => (
            gen_attributes_uniform(&mut attr_rng, cfg.n_examinees, cfg.n_attrs)?,
            vec![1.0 / (1usize << cfg.n_attrs) as f64; 1usize << cfg.n_attrs],
        ),
        AttributeStructure::Correlated { rho } => (
            gen_attributes_correlated(&mut attr_rng, cfg.n_examinees, cfg.n_attrs, rho)?,
            correlated_class_probs(cfg.n_attrs, rho)?,
        ),
    };

    let params = match &cfg.items {
        ItemSpec::Dina { guess, slip } => {
            let p = DinaParams {
                guess: vec![*guess; cfg.n_items],
                slip: vec![*slip; cfg.n_items],
            };
            ItemParams::Dina(p)
        }
        ItemSpec::Gdina => ItemParams::Gdina(gen_item_params_gdina(&mut item_rng, &q)?),
        ItemSpec::GdinaExplicit { coef } => {
            let items: Vec<GdinaItemParams> = coef
                .iter()
                .map(|c| GdinaItemParams { coef: c.clone() })
                .collect();
            for (j, it) in items.iter().enumerate() {
                if it.n_required()? != q.item_weight(j) {
                    return Err(Error::config(format!(
                        "items.coef[{j}] has {} coefficients but item {} requires \
                         {} attributes",
                        it.coef.len(),
                        j + 1,
                        q.item_weight(j)
                    )));
                }
            }
            ItemParams::Gdina(items)
        }
    };

    let y = gen_responses(&mut resp_rng, &alpha, &q, &params)?;
    Ok(SimOutput {
        q,
        alpha,
        params,
        pi,
        y,
    })
}

/// Draws `n` attribute profiles uniformly over the `2^K` classes
/// (independent fair coins per attribute).
pub fn gen_attributes_uniform<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Result<Vec<u32>> {
    if k == 0 || k > 31 {
        return Err(Error::config(format!(
            "attribute count must lie in 1..=31, got {k}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut mask = 0u32;
        for kk in 0..k {
            if bernoulli(rng, 0.5)? {
                mask |= 1 << kk;
            }
        }
        out.push(mask);
    }
    Ok(out)
}

/// Draws `n` profiles from the dichotomized equicorrelated Gaussian with
/// correlation `rho`, via the one-factor representation
/// `θ_k = √ρ·u + √(1−ρ)·e_k`, `α_k = 𝕀{θ_k > 0}`.
///
/// Per examinee the draw order is the common factor `u` first, then
/// `e_1 … e_K`; `rho = 0` reduces to independent fair coins.
pub fn gen_attributes_correlated<R: RngCore>(
    rng: &mut R,
    n: usize,
    k: usize,
    rho: f64,
) -> Result<Vec<u32>> {
    if k == 0 || k > 31 {
        return Err(Error::config(format!(
            "attribute count must lie in 1..=31, got {k}"
        )));
    }
    if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
        return Err(Error::config(format!(
            "correlation must lie in [0, 1), got {rho}"
        )));
    }
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.sample(StandardNormal);
        let mut mask = 0u32;
        for kk in 0..k {
            let e: f64 = rng.sample(StandardNormal);
            if a * u + b * e > 0.0 {
                mask |= 1 << kk;
            }
        }
        out.push(mask);
    }
    Ok(out)
}

/// The exact class distribution implied by the correlated structure.
///
/// Conditional on the common factor `u`, attributes are independent with
/// mastery probability `p(u) = Φ(√(ρ/(1−ρ))·u)`, so a class with `m`
/// mastered attributes has probability `∫ φ(u) p(u)^m (1−p(u))^{K−m} du` —
/// one integral per mastery count, evaluated with a 200-point
/// Gauss–Legendre rule on `[−8, 8]` and shared by all `C(K, m)` classes.
pub fn correlated_class_probs(k: usize, rho: f64) -> Result<Vec<f64>> {
    if k == 0 || k > MAX_ATTRIBUTES_FULL_ENUM {
        return Err(Error::config(format!(
            "attribute count must lie in 1..={MAX_ATTRIBUTES_FULL_ENUM}, got {k}"
        )));
    }
    if !(rho.is_finite() && (0.0..1.0).contains(&rho)) {
        return Err(Error::config(format!(
            "correlation must lie in [0, 1), got {rho}"
        )));
    }
    let n_classes = 1usize << k;
    if rho == 0.0 {
        return Ok(vec![1.0 / n_classes as f64; n_classes]);
    }
    let scale = (rho / (1.0 - rho)).sqrt();
    let (nodes, weights) = gauss_legendre_on(200, -8.0, 8.0)?;
    let mut by_count = vec![0.0f64; k + 1];
    for (&u, &w) in nodes.iter().zip(&weights) {
        let p = normal_cdf(scale * u);
        let q = 1.0 - p;
        let phi = crate::distributions::normal::normal_pdf(u);
        for (m, slot) in by_count.iter_mut().enumerate() {
            *slot += w * phi * p.powi(m as i32) * q.powi((k - m) as i32);
        }
    }
    let mut probs = vec![0.0; n_classes];
    for (mask, slot) in probs.iter_mut().enumerate() {
        *slot = by_count[mask.count_ones() as usize];
    }
    // The window truncation loses ~1e-15 of mass; renormalize so the vector
    // is an exact simplex point.
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Block sizes of the structured Q-matrix: number of weight-2 and weight-3
/// rows after the two identity blocks.
///
/// The bundled 40-item matrices for K ∈ {3, 5, 7, 15} use five of each;
/// generated matrices keep those proportions for matching shapes and
/// otherwise split the remaining `J − 2K` rows evenly between the weight-2
/// block, the weight-3 block, and the random filler.
fn interaction_block_sizes(k: usize, j: usize) -> (usize, usize) {
    // Five rows per interaction block, truncated when J leaves less room.
    // All bundled J=40 matrices use this shape; keeping the blocks small at
    // every J leaves the remaining rows to the random fill, whose mask
    // distribution is single-attribute-heavy — multi-attribute items carry
    // little per-attribute information in conjunctive models, so large
    // interaction blocks would degrade classification.
    let rem = j - 2 * k;
    let n2 = rem.min(5);
    let n3 = (rem - n2).min(5);
    (n2, n3)
}

/// Generates a structured Q-matrix: two stacked `K×K` identity blocks, a
/// block of weight-2 rows, a block of weight-3 rows (both cyclic over
/// adjacent attributes), then uniformly random nonzero rows of weight ≤ 3.
///
/// Requires `J ≥ 2K` so the identity blocks fit.  For `K < 3` the cyclic
/// patterns wrap onto fewer attributes, so block weights are capped at `K`.
pub fn gen_q_matrix<R: RngCore>(rng: &mut R, k: usize, j: usize) -> Result<QMatrix> {
    if k == 0 || k > 31 {
        return Err(Error::config(format!(
            "attribute count must lie in 1..=31, got {k}"
        )));
    }
    if j < 2 * k {
        return Err(Error::config(format!(
            "an identifiable Q-matrix needs J ≥ 2K, got J={j} for K={k}"
        )));
    }
    let mut rows: Vec<u32> = Vec::with_capacity(j);
    for t in 0..2 * k {
        rows.push(1 << (t % k));
    }
    let (n2, n3) = interaction_block_sizes(k, j);
    for t in 0..n2 {
        rows.push(1 << (t % k) | 1 << ((t + 1) % k));
    }
    for t in 0..n3 {
        rows.push(1 << (t % k) | 1 << ((t + 1) % k) | 1 << ((t + 2) % k));
    }
    let max_weight = 3.min(k) as u32;
    let admissible: Vec<u32> = (1..1u32 << k)
        .filter(|m| m.count_ones() <= max_weight)
        .collect();
    while rows.len() < j {
        rows.push(admissible[rng.random_range(0..admissible.len())]);
    }
    QMatrix::from_masks(rows, k)
}

/// Draws probit G-DINA coefficients for every item of a Q-matrix from the
/// standard generator: intercept `N(−1.2, 0.4²)`; an order-`w` interaction
/// is `N(0.9, 0.3²)` scaled by `1/w²`.  Items ascending, coefficients in
/// canonical term order.
pub fn gen_item_params_gdina<R: RngCore>(rng: &mut R, q: &QMatrix) -> Result<Vec<GdinaItemParams>> {
    let mut out = Vec::with_capacity(q.n_items());
    for j in 0..q.n_items() {
        let terms = term_masks(q.item_weight(j));
        let coef: Vec<f64> = terms
            .iter()
            .map(|&tm| {
                let z: f64 = rng.sample(StandardNormal);
                let w = tm.count_ones();
                if w == 0 {
                    -1.2 + 0.4 * z
                } else {
                    (0.9 + 0.3 * z) / (w * w) as f64
                }
            })
            .collect();
        out.push(GdinaItemParams { coef });
    }
    Ok(out)
}

/// Draws a response matrix `Y_{ij} ~ Bernoulli(θ_{j, α_i})` (examinees
/// ascending, items ascending within an examinee).
pub fn gen_responses<R: RngCore>(
    rng: &mut R,
    alpha: &[u32],
    q: &QMatrix,
    params: &ItemParams,
) -> Result<ResponseMatrix> {
    if alpha.is_empty() {
        return Err(Error::data("need at least one examinee profile"));
    }
    if params.n_items() != q.n_items() {
        return Err(Error::data(format!(
            "item parameters cover {} items but the Q-matrix has {}",
            params.n_items(),
            q.n_items()
        )));
    }
    let mut rows = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let mut row = Vec::with_capacity(q.n_items());
        for j in 0..q.n_items() {
            let theta = params.response_prob(j, a, q.row_mask(j))?;
            row.push(u8::from(bernoulli(rng, theta)?));
        }
        rows.push(row);
    }
    ResponseMatrix::new(&rows)
}
