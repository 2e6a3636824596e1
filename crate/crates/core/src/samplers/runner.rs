//! Chain drivers: initialisation, the iteration loop, and the three
//! attribute-update strategies.
//!
//! The heavy per-examinee work (latent responses, attribute updates) runs
//! on a rayon pool sized by [`FitConfig::workers`]; every examinee draws
//! from a private RNG stream, so the thread count never changes the chain.
//! Parameter-level draws (`λ`, guess/slip, `π`, attribute rates) advance a
//! single parameter stream serially, in a fixed documented order.
//!
//! Item response probabilities are tabulated over each item's *reduced*
//! profiles (the `2^{K*_j}` patterns of its required attributes) and the
//! tables are refreshed whenever item parameters change.  An attribute
//! update then costs two table lookups per affected item instead of a
//! fresh likelihood evaluation.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::chain::{ChainStore, ParamLayout, RunStats};
use super::steps::{
    sample_augmented, sample_dina_item_params, sample_lambda, sample_pi, sigmoid, DinaItemCounts,
};
use super::{FitConfig, Method, ModelKind};
use crate::distributions::rng::RngStream;
use crate::distributions::truncated::{bernoulli, beta_sample, trunc_normal_sample, Interval};
use crate::distributions::normal::normal_ln_cdf;
use crate::error::{Error, Result};
use crate::model::{gdina_linear, ln_clamped, reduce_profile, term_masks, QMatrix, ResponseMatrix};

/// Runs one chain with the model and method named in the configuration.
pub fn run_chain(y: &ResponseMatrix, q: &QMatrix, cfg: &FitConfig) -> Result<ChainStore> {
    Engine::new(y, q, cfg)?.run()
}

/// Runs one sequential-sampler chain of the DINA model (the configuration's
/// `model`/`method` fields are overridden accordingly).
pub fn run_sequential_dina(y: &ResponseMatrix, q: &QMatrix, cfg: &FitConfig) -> Result<ChainStore> {
    let mut cfg = cfg.clone();
    cfg.model = ModelKind::Dina;
    cfg.method = Method::Sequential;
    run_chain(y, q, &cfg)
}

/// Runs one sequential-sampler chain of the probit G-DINA model (the
/// configuration's `model`/`method` fields are overridden accordingly).
pub fn run_sequential_gdina(
    y: &ResponseMatrix,
    q: &QMatrix,
    cfg: &FitConfig,
) -> Result<ChainStore> {
    let mut cfg = cfg.clone();
    cfg.model = ModelKind::Gdina;
    cfg.method = Method::Sequential;
    run_chain(y, q, &cfg)
}

/// Runs one chain that redraws whole profiles from their `2^K`-way
/// conditional (the configuration's `method` is overridden; its `model` is
/// kept).
pub fn run_simultaneous(y: &ResponseMatrix, q: &QMatrix, cfg: &FitConfig) -> Result<ChainStore> {
    let mut cfg = cfg.clone();
    cfg.method = Method::Simultaneous;
    run_chain(y, q, &cfg)
}

/// Runs one chain of the independent-attribute baseline (the
/// configuration's `method` is overridden; its `model` is kept).
pub fn run_independent(y: &ResponseMatrix, q: &QMatrix, cfg: &FitConfig) -> Result<ChainStore> {
    let mut cfg = cfg.clone();
    cfg.method = Method::Independent;
    run_chain(y, q, &cfg)
}

/// Examinees per work unit in the parallel phases; chunking lets the
/// simultaneous sampler reuse one class-weight buffer per unit.
const EXAMINEE_CHUNK: usize = 16;

/// Per-item precomputed context and response tables.
struct ItemCtx {
    /// Required-attribute bitmask from the Q-matrix row.
    mask: u32,
    /// Number of required attributes `K*_j`.
    k_star: usize,
    /// Canonical term masks of the item's saturated design (G-DINA only).
    terms: Vec<u32>,
    /// Truncation intervals for the item's coefficient draw (G-DINA only).
    truncation: Option<Vec<Interval>>,
    /// Probit linear predictor per reduced profile (G-DINA only).
    lin: Vec<f64>,
    /// `ln θ_j(reduced profile)`.
    ln_theta: Vec<f64>,
    /// `ln (1 − θ_j(reduced profile))`.
    ln_1m_theta: Vec<f64>,
}

impl ItemCtx {
    fn n_masks(&self) -> usize {
        1usize << self.k_star
    }
}

/// Current item parameters.
enum Params {
    Dina { guess: Vec<f64>, slip: Vec<f64> },
    Gdina { coefs: Vec<Vec<f64>> },
}

struct Engine<'a> {
    y: &'a ResponseMatrix,
    cfg: &'a FitConfig,
    n: usize,
    n_items: usize,
    n_attrs: usize,
    n_classes: usize,
    items: Vec<ItemCtx>,
    /// For each attribute `k`: the items requiring it, with the position of
    /// `k` among each item's required attributes (= the bit index of `k` in
    /// the item's reduced profiles).
    by_attr: Vec<Vec<(u32, u8)>>,
    /// Class → reduced-profile lookup per item (simultaneous method only).
    class_maps: Vec<Vec<u32>>,
    param_rng: RngStream,
    ex_rngs: Vec<RngStream>,
    alpha: Vec<u32>,
    /// Class distribution.  Under the independent baseline this holds the
    /// empirical class frequencies of the current profiles (recorded for
    /// comparability), not a sampled quantity.
    pi: Vec<f64>,
    /// Per-attribute mastery rates (independent baseline only).
    rates: Vec<f64>,
    params: Params,
    /// Latent probit responses, `N × J` row-major (G-DINA only).
    z: Vec<f64>,
    pool: rayon::ThreadPool,
    stats: RunStats,
}

impl<'a> Engine<'a> {
    fn new(y: &'a ResponseMatrix, q: &'a QMatrix, cfg: &'a FitConfig) -> Result<Self> {
        cfg.validate(q)?;
        if y.n_items() != q.n_items() {
            return Err(Error::data(format!(
                "response matrix has {} items but the Q-matrix has {}",
                y.n_items(),
                q.n_items()
            )));
        }
        let n = y.n_examinees();
        let n_items = q.n_items();
        let n_attrs = q.n_attrs();
        let n_classes = 1usize << n_attrs;

        let mut items = Vec::with_capacity(n_items);
        for j in 0..n_items {
            let mask = q.row_mask(j);
            let k_star = q.item_weight(j);
            if cfg.model == ModelKind::Gdina && k_star > 20 {
                return Err(Error::config(format!(
                    "item {} requires {k_star} attributes; the saturated design \
                     supports at most 20",
                    j + 1
                )));
            }
            let n_masks = 1usize << k_star;
            let (terms, truncation) = match cfg.model {
                ModelKind::Gdina => (
                    term_masks(k_star),
                    cfg.truncation.intervals_for(j, n_masks)?,
                ),
                ModelKind::Dina => (Vec::new(), None),
            };
            items.push(ItemCtx {
                mask,
                k_star,
                terms,
                truncation,
                lin: vec![0.0; n_masks],
                ln_theta: vec![0.0; n_masks],
                ln_1m_theta: vec![0.0; n_masks],
            });
        }

        let mut by_attr = vec![Vec::new(); n_attrs];
        for (j, it) in items.iter().enumerate() {
            for k in 0..n_attrs {
                if it.mask >> k & 1 == 1 {
                    let pos = (it.mask & ((1u32 << k) - 1)).count_ones() as u8;
                    by_attr[k].push((j as u32, pos));
                }
            }
        }

        let class_maps = if cfg.method == Method::Simultaneous {
            items
                .iter()
                .map(|it| {
                    (0..n_classes as u32)
                        .map(|c| reduce_profile(c, it.mask))
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };

        // Stream plan: chain c uses split(1 + c) of the seed's root stream;
        // within the chain, split(0) is the parameter stream and
        // split(1 + i) belongs to examinee i.
        let chain = RngStream::from_u64(cfg.seed).split(1 + cfg.chain_index);
        let param_rng = chain.split(0);
        let ex_rngs: Vec<RngStream> = (0..n).map(|i| chain.split(1 + i as u64)).collect();

        let params = match cfg.model {
            ModelKind::Dina => Params::Dina {
                guess: vec![0.0; n_items],
                slip: vec![0.0; n_items],
            },
            ModelKind::Gdina => Params::Gdina {
                coefs: items.iter().map(|it| vec![0.0; it.n_masks()]).collect(),
            },
        };
        let z = match cfg.model {
            ModelKind::Gdina => vec![0.0; n * n_items],
            ModelKind::Dina => Vec::new(),
        };

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;

        let mut engine = Engine {
            y,
            cfg,
            n,
            n_items,
            n_attrs,
            n_classes,
            items,
            by_attr,
            class_maps,
            param_rng,
            ex_rngs,
            alpha: vec![0; n],
            pi: vec![1.0 / n_classes as f64; n_classes],
            rates: vec![0.5; n_attrs],
            params,
            z,
            pool,
            stats: RunStats::default(),
        };
        engine.init_params()?;
        Ok(engine)
    }

    /// Draws the initial state from the parameter stream, in a fixed order:
    /// profiles (fair coins, examinee-major), then item parameters (items
    /// ascending; DINA guess then slip from U(0, 0.4), G-DINA coefficients
    /// from their — possibly truncated — prior).  `π` starts uniform and
    /// the baseline rates at ½ without consuming draws.
    fn init_params(&mut self) -> Result<()> {
        let rng = &mut self.param_rng;
        for a in self.alpha.iter_mut() {
            let mut mask = 0u32;
            for k in 0..self.n_attrs {
                if bernoulli(rng, 0.5)? {
                    mask |= 1 << k;
                }
            }
            *a = mask;
        }
        match &mut self.params {
            Params::Dina { guess, slip } => {
                for j in 0..self.n_items {
                    guess[j] = 0.4 * rng.random::<f64>();
                    slip[j] = 0.4 * rng.random::<f64>();
                }
            }
            Params::Gdina { coefs } => {
                for (it, coef) in self.items.iter().zip(coefs.iter_mut()) {
                    for (t, &tm) in it.terms.iter().enumerate() {
                        let (mean, sd) = self.cfg.gdina_prior.coef_prior(tm);
                        coef[t] = match it.truncation.as_ref().map(|itvs| itvs[t]) {
                            Some(itv) if !itv.is_unbounded() => {
                                trunc_normal_sample(rng, mean, sd, itv)?
                            }
                            _ => mean + sd * rng.sample::<f64, _>(StandardNormal),
                        };
                    }
                }
            }
        }
        self.refresh_tables();
        Ok(())
    }

    /// Rebuilds every item's reduced-profile response tables from the
    /// current item parameters.
    fn refresh_tables(&mut self) {
        match &self.params {
            Params::Gdina { coefs } => {
                for (it, coef) in self.items.iter_mut().zip(coefs) {
                    for m in 0..it.lin.len() {
                        let lin = gdina_linear(coef, m as u32, &it.terms);
                        it.lin[m] = lin;
                        it.ln_theta[m] = normal_ln_cdf(lin);
                        it.ln_1m_theta[m] = normal_ln_cdf(-lin);
                    }
                }
            }
            Params::Dina { guess, slip } => {
                for (j, it) in self.items.iter_mut().enumerate() {
                    let full = it.lin.len() - 1;
                    for m in 0..it.lin.len() {
                        let theta = if m == full { 1.0 - slip[j] } else { guess[j] };
                        it.ln_theta[m] = ln_clamped(theta);
                        it.ln_1m_theta[m] = ln_clamped(1.0 - theta);
                    }
                }
            }
        }
    }

    fn run(mut self) -> Result<ChainStore> {
        let layout = match &self.params {
            Params::Dina { .. } => ParamLayout::dina(self.n, self.n_items, self.n_attrs),
            Params::Gdina { .. } => {
                let sizes: Vec<usize> = self.items.iter().map(ItemCtx::n_masks).collect();
                ParamLayout::gdina(self.n, self.n_attrs, &sizes)
            }
        };
        let mut store = ChainStore::with_capacity(
            self.cfg.model,
            self.cfg.method,
            layout,
            self.cfg.n_kept(),
        );

        let started = Instant::now();
        for m in 1..=self.cfg.iterations {
            self.iterate(m).map_err(|e| e.at_iteration(m))?;
            if self.cfg.keeps(m) {
                self.record(m, &mut store)?;
            }
            if self.cfg.log_every > 0 && m % self.cfg.log_every == 0 {
                log::info!(
                    "chain {}: iteration {m}/{} ({}, {})",
                    self.cfg.chain_index,
                    self.cfg.iterations,
                    self.cfg.model.name(),
                    self.cfg.method.name()
                );
            }
        }
        self.stats.seconds = started.elapsed().as_secs_f64();
        store.stats = self.stats;
        Ok(store)
    }

    /// One full Gibbs iteration.  G-DINA: latent responses, coefficients,
    /// attributes, population.  DINA: attributes, guess/slip, population.
    fn iterate(&mut self, m: usize) -> Result<()> {
        match self.cfg.model {
            ModelKind::Gdina => {
                self.phase_latent()?;
                self.phase_lambda()?;
                self.phase_attributes(m)?;
                self.phase_population()
            }
            ModelKind::Dina => {
                self.phase_attributes(m)?;
                self.phase_dina_items()?;
                self.phase_population()
            }
        }
    }

    /// Latent probit responses `z[i][j] ~ N(x'λ, 1)` truncated by `y[i][j]`
    /// (parallel over examinees; G-DINA only).
    fn phase_latent(&mut self) -> Result<()> {
        let items = &self.items;
        let alpha = &self.alpha;
        let y = self.y;
        let n_items = self.n_items;
        let z = &mut self.z;
        let ex_rngs = &mut self.ex_rngs;
        self.pool.install(|| {
            z.par_chunks_mut(n_items)
                .zip(ex_rngs.par_iter_mut())
                .enumerate()
                .try_for_each(|(i, (z_row, rng))| {
                    let a = alpha[i];
                    let y_row = y.row(i);
                    for (j, it) in items.iter().enumerate() {
                        let red = reduce_profile(a, it.mask) as usize;
                        z_row[j] = sample_augmented(rng, y_row[j], it.lin[red])?;
                    }
                    Ok(())
                })
        })
    }

    /// Coefficient draws `λ_j` from their conjugate regression conditional
    /// (serial over items on the parameter stream; G-DINA only).
    fn phase_lambda(&mut self) -> Result<()> {
        let Params::Gdina { coefs } = &mut self.params else {
            unreachable!("latent-regression phase outside a G-DINA run")
        };
        let mut z_col = vec![0.0f64; self.n];
        let mut reduced = vec![0u32; self.n];
        for (j, it) in self.items.iter().enumerate() {
            for i in 0..self.n {
                z_col[i] = self.z[i * self.n_items + j];
                reduced[i] = reduce_profile(self.alpha[i], it.mask);
            }
            coefs[j] = sample_lambda(
                &mut self.param_rng,
                &z_col,
                &reduced,
                it.k_star,
                &self.cfg.gdina_prior,
                it.truncation.as_deref(),
                self.cfg.refine_sweeps,
            )?;
        }
        self.refresh_tables();
        Ok(())
    }

    /// Conjugate Beta guess/slip draws from the `η`-split response counts
    /// (serial over items on the parameter stream; DINA only).
    fn phase_dina_items(&mut self) -> Result<()> {
        let mut counts = vec![DinaItemCounts::default(); self.n_items];
        for i in 0..self.n {
            let a = self.alpha[i];
            let y_row = self.y.row(i);
            for (j, it) in self.items.iter().enumerate() {
                let eta = a & it.mask == it.mask;
                let correct = y_row[j] == 1;
                let c = &mut counts[j];
                match (eta, correct) {
                    (false, true) => c.guess_correct += 1,
                    (false, false) => c.guess_wrong += 1,
                    (true, true) => c.slip_correct += 1,
                    (true, false) => c.slip_wrong += 1,
                }
            }
        }
        let Params::Dina { guess, slip } = &mut self.params else {
            unreachable!("guess/slip phase outside a DINA run")
        };
        for j in 0..self.n_items {
            let (g, s) = sample_dina_item_params(&mut self.param_rng, counts[j], &self.cfg.dina_prior)?;
            guess[j] = g;
            slip[j] = s;
        }
        self.refresh_tables();
        Ok(())
    }

    /// Attribute updates under the configured method (parallel over
    /// examinees).
    fn phase_attributes(&mut self, m: usize) -> Result<()> {
        let touched = match self.cfg.method {
            Method::Sequential => {
                let pi = std::mem::take(&mut self.pi);
                let out = self.sweep_attributes(|a, k| {
                    let bit = 1u32 << k;
                    let p0 = pi[(a & !bit) as usize];
                    let p1 = pi[(a | bit) as usize];
                    if p0 + p1 <= 0.0 {
                        return Err(Error::numerical(
                            0,
                            format!(
                                "both classes adjacent in attribute {} have zero probability",
                                k + 1
                            ),
                        ));
                    }
                    Ok(p1.ln() - p0.ln())
                });
                self.pi = pi;
                self.stats.attr_updates += (self.n * self.n_attrs) as u64;
                out?
            }
            Method::Independent => {
                let lo: Vec<f64> = self
                    .rates
                    .iter()
                    .map(|&r| ln_clamped(r) - ln_clamped(1.0 - r))
                    .collect();
                let out = self.sweep_attributes(|_, k| Ok(lo[k]));
                self.stats.attr_updates += (self.n * self.n_attrs) as u64;
                out?
            }
            Method::Simultaneous => {
                let out = self.draw_whole_profiles(m);
                self.stats.attr_updates += self.n as u64;
                out?
            }
        };
        self.stats.attr_items_touched += touched;
        Ok(())
    }

    /// One single-attribute Gibbs sweep over all examinees; `prior_lo`
    /// yields the prior log-odds of mastery given the rest of the profile.
    /// Returns the number of item-likelihood lookups performed.
    fn sweep_attributes<F>(&mut self, prior_lo: F) -> Result<u64>
    where
        F: Fn(u32, usize) -> Result<f64> + Sync,
    {
        let items = &self.items;
        let by_attr = &self.by_attr;
        let y = self.y;
        let n_attrs = self.n_attrs;
        let random_scan = self.cfg.random_scan;
        let is_dina = matches!(self.params, Params::Dina { .. });
        let alpha = &mut self.alpha;
        let ex_rngs = &mut self.ex_rngs;
        self.pool.install(|| {
            alpha
                .par_iter_mut()
                .zip(ex_rngs.par_iter_mut())
                .enumerate()
                .map(|(i, (a, rng))| {
                    let y_row = y.row(i);
                    let mut touched = 0u64;
                    let mut order = [0u8; 32];
                    for (k, slot) in order.iter_mut().enumerate().take(n_attrs) {
                        *slot = k as u8;
                    }
                    if random_scan {
                        for hi in (1..n_attrs).rev() {
                            let lo = rng.random_range(0..=hi);
                            order.swap(hi, lo);
                        }
                    }
                    for &k8 in order.iter().take(n_attrs) {
                        let k = k8 as usize;
                        let bit = 1u32 << k;
                        let mut d = prior_lo(*a, k)?;
                        if is_dina {
                            for &(j, pos) in &by_attr[k] {
                                let it = &items[j as usize];
                                if (*a | bit) & it.mask != it.mask {
                                    continue;
                                }
                                let full = it.ln_theta.len() - 1;
                                let m0 = full & !(1usize << pos);
                                d += if y_row[j as usize] == 1 {
                                    it.ln_theta[full] - it.ln_theta[m0]
                                } else {
                                    it.ln_1m_theta[full] - it.ln_1m_theta[m0]
                                };
                                touched += 1;
                            }
                        } else {
                            for &(j, pos) in &by_attr[k] {
                                let it = &items[j as usize];
                                let m1 = (reduce_profile(*a, it.mask) | (1 << pos)) as usize;
                                let m0 = m1 & !(1usize << pos);
                                d += if y_row[j as usize] == 1 {
                                    it.ln_theta[m1] - it.ln_theta[m0]
                                } else {
                                    it.ln_1m_theta[m1] - it.ln_1m_theta[m0]
                                };
                                touched += 1;
                            }
                        }
                        *a = if bernoulli(rng, sigmoid(d))? {
                            *a | bit
                        } else {
                            *a & !bit
                        };
                    }
                    Ok(touched)
                })
                .try_reduce(|| 0, |x, y| Ok(x + y))
        })
    }

    /// Whole-profile categorical redraw over all `2^K` classes (the
    /// simultaneous method).  Returns the number of item-likelihood lookups.
    fn draw_whole_profiles(&mut self, m: usize) -> Result<u64> {
        let items = &self.items;
        let class_maps = &self.class_maps;
        let y = self.y;
        let n_classes = self.n_classes;
        let ln_pi: Vec<f64> = self
            .pi
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();
        let alpha = &mut self.alpha;
        let ex_rngs = &mut self.ex_rngs;
        self.pool.install(|| {
            alpha
                .par_chunks_mut(EXAMINEE_CHUNK)
                .zip(ex_rngs.par_chunks_mut(EXAMINEE_CHUNK))
                .enumerate()
                .map(|(chunk, (a_chunk, rng_chunk))| {
                    let base = chunk * EXAMINEE_CHUNK;
                    let mut w = vec![0.0f64; n_classes];
                    let mut touched = 0u64;
                    for (off, (a, rng)) in a_chunk.iter_mut().zip(rng_chunk.iter_mut()).enumerate()
                    {
                        let y_row = y.row(base + off);
                        w.copy_from_slice(&ln_pi);
                        for (j, it) in items.iter().enumerate() {
                            let map = &class_maps[j];
                            let tab = if y_row[j] == 1 {
                                &it.ln_theta
                            } else {
                                &it.ln_1m_theta
                            };
                            for (wc, &red) in w.iter_mut().zip(map) {
                                *wc += tab[red as usize];
                            }
                        }
                        touched += (items.len() * n_classes) as u64;
                        let mut max = f64::NEG_INFINITY;
                        for &v in w.iter() {
                            if v > max {
                                max = v;
                            }
                        }
                        if !max.is_finite() {
                            return Err(Error::numerical(
                                m,
                                "every class has zero conditional probability",
                            ));
                        }
                        let mut total = 0.0;
                        let mut last_pos = 0usize;
                        for (c, v) in w.iter_mut().enumerate() {
                            *v = (*v - max).exp();
                            total += *v;
                            if *v > 0.0 {
                                last_pos = c;
                            }
                        }
                        let u: f64 = total * rng.random::<f64>();
                        let mut acc = 0.0;
                        let mut pick = last_pos;
                        for (c, &v) in w.iter().enumerate() {
                            acc += v;
                            if u < acc {
                                pick = c;
                                break;
                            }
                        }
                        *a = pick as u32;
                    }
                    Ok(touched)
                })
                .try_reduce(|| 0, |x, y| Ok(x + y))
        })
    }

    /// Population update: a conjugate Dirichlet draw of `π` for the
    /// structured methods; pooled Beta(1, 1)-posterior rate draws (attributes
    /// ascending) plus the empirical class frequencies for the baseline.
    fn phase_population(&mut self) -> Result<()> {
        match self.cfg.method {
            Method::Sequential | Method::Simultaneous => {
                self.pi = sample_pi(
                    &mut self.param_rng,
                    &self.alpha,
                    self.n_attrs,
                    &self.cfg.delta,
                )?;
            }
            Method::Independent => {
                for k in 0..self.n_attrs {
                    let n_k = self
                        .alpha
                        .iter()
                        .filter(|&&a| a >> k & 1 == 1)
                        .count();
                    self.rates[k] = beta_sample(
                        &mut self.param_rng,
                        1.0 + n_k as f64,
                        1.0 + (self.n - n_k) as f64,
                    )?;
                }
                self.pi.iter_mut().for_each(|p| *p = 0.0);
                let unit = 1.0 / self.n as f64;
                for &a in &self.alpha {
                    self.pi[a as usize] += unit;
                }
            }
        }
        Ok(())
    }

    fn record(&self, m: usize, store: &mut ChainStore) -> Result<()> {
        let flat: Vec<f64> = match &self.params {
            Params::Dina { guess, slip } => guess.iter().chain(slip).copied().collect(),
            Params::Gdina { coefs } => coefs.iter().flatten().copied().collect(),
        };
        store.push_iteration(m, &flat, &self.pi, &self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dina_response_prob, profile_bits};
    use crate::samplers::{DeltaPrior, Truncation};

    /// Deterministic synthetic DINA data set on K attributes.
    fn dina_data(
        seed: u64,
        n: usize,
        q: &QMatrix,
        guess: f64,
        slip: f64,
    ) -> (ResponseMatrix, Vec<u32>) {
        let mut rng = RngStream::from_u64(seed);
        let n_classes = 1u32 << q.n_attrs();
        let truth: Vec<u32> = (0..n)
            .map(|_| rng.random_range(0..n_classes))
            .collect();
        let rows: Vec<Vec<u8>> = truth
            .iter()
            .map(|&a| {
                (0..q.n_items())
                    .map(|j| {
                        let p = dina_response_prob(a, q.row_mask(j), guess, slip);
                        u8::from(rng.random::<f64>() < p)
                    })
                    .collect()
            })
            .collect();
        (ResponseMatrix::new(&rows).unwrap(), truth)
    }

    fn q3() -> QMatrix {
        QMatrix::new(&[
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 1, 0],
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![1, 1, 1],
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
        ])
        .unwrap()
    }

    fn posterior_mean(store: &ChainStore, param: usize) -> f64 {
        let s = store.item_series(param);
        s.iter().sum::<f64>() / s.len() as f64
    }

    fn attribute_agreement(store: &ChainStore, truth: &[u32], n_attrs: usize) -> f64 {
        // Majority vote per examinee-attribute over retained draws.
        let n = truth.len();
        let mut hits = 0usize;
        for i in 0..n {
            for k in 0..n_attrs {
                let votes: usize = (0..store.n_kept())
                    .map(|t| (store.alpha_row(t)[i] >> k & 1) as usize)
                    .sum();
                let m = u32::from(2 * votes >= store.n_kept());
                hits += usize::from(m == (truth[i] >> k & 1));
            }
        }
        hits as f64 / (n * n_attrs) as f64
    }

    #[test]
    fn sequential_dina_recovers_truth_roughly() {
        let q = q3();
        let (y, truth) = dina_data(7, 300, &q, 0.15, 0.1);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Sequential, 99);
        cfg.iterations = 600;
        cfg.burn_in = 300;
        let store = run_chain(&y, &q, &cfg).unwrap();
        assert_eq!(store.n_kept(), 300);
        for j in 0..q.n_items() {
            let g = posterior_mean(&store, j);
            let s = posterior_mean(&store, q.n_items() + j);
            assert!((g - 0.15).abs() < 0.12, "item {j}: guess {g}");
            assert!((s - 0.1).abs() < 0.12, "item {j}: slip {s}");
        }
        assert!(attribute_agreement(&store, &truth, 3) > 0.9);
    }

    #[test]
    fn simultaneous_dina_recovers_truth_roughly() {
        let q = q3();
        let (y, truth) = dina_data(11, 300, &q, 0.15, 0.1);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Simultaneous, 99);
        cfg.iterations = 600;
        cfg.burn_in = 300;
        let store = run_chain(&y, &q, &cfg).unwrap();
        assert!(attribute_agreement(&store, &truth, 3) > 0.9);
        for j in 0..q.n_items() {
            let g = posterior_mean(&store, j);
            assert!((g - 0.15).abs() < 0.12, "item {j}: guess {g}");
        }
    }

    #[test]
    fn sequential_gdina_recovers_dina_style_truth() {
        let q = QMatrix::new(&[
            vec![1, 0],
            vec![0, 1],
            vec![1, 1],
            vec![1, 0],
            vec![0, 1],
            vec![1, 1],
        ])
        .unwrap();
        let (y, truth) = dina_data(13, 250, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Gdina, Method::Sequential, 5);
        cfg.iterations = 500;
        cfg.burn_in = 250;
        cfg.truncation = Truncation::Monotone;
        let store = run_chain(&y, &q, &cfg).unwrap();
        assert!(attribute_agreement(&store, &truth, 2) > 0.85);
        // Success probability of a non-master of everything ≈ guess = 0.2:
        // the intercept posterior should sit near Φ⁻¹(0.2) ≈ −0.84.
        let intercept = posterior_mean(&store, 0);
        assert!(
            (-1.4..=-0.4).contains(&intercept),
            "intercept {intercept} far from Φ⁻¹(0.2)"
        );
    }

    #[test]
    fn worker_count_does_not_change_the_chain() {
        let q = q3();
        let (y, _) = dina_data(17, 60, &q, 0.2, 0.15);
        for model in [ModelKind::Dina, ModelKind::Gdina] {
            let mut cfg = FitConfig::new(model, Method::Sequential, 4242);
            cfg.iterations = 40;
            cfg.burn_in = 10;
            let base = run_chain(&y, &q, &cfg).unwrap();
            for workers in [0, 4] {
                let mut cfg_w = cfg.clone();
                cfg_w.workers = workers;
                let other = run_chain(&y, &q, &cfg_w).unwrap();
                assert_eq!(base.item_draws, other.item_draws, "{model:?}/{workers}");
                assert_eq!(base.pi_draws, other.pi_draws);
                assert_eq!(base.alpha_draws, other.alpha_draws);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_and_chain_index_varies() {
        let q = q3();
        let (y, _) = dina_data(19, 50, &q, 0.2, 0.15);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Simultaneous, 7);
        cfg.iterations = 30;
        cfg.burn_in = 5;
        cfg.random_scan = true;
        let a = run_chain(&y, &q, &cfg).unwrap();
        let b = run_chain(&y, &q, &cfg).unwrap();
        assert_eq!(a.item_draws, b.item_draws);
        assert_eq!(a.alpha_draws, b.alpha_draws);
        let mut cfg2 = cfg.clone();
        cfg2.chain_index = 1;
        let c = run_chain(&y, &q, &cfg2).unwrap();
        assert_ne!(a.item_draws, c.item_draws);
    }

    #[test]
    fn independent_baseline_records_empirical_frequencies() {
        let q = q3();
        let (y, _) = dina_data(23, 40, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Independent, 31);
        cfg.iterations = 20;
        cfg.burn_in = 4;
        let store = run_chain(&y, &q, &cfg).unwrap();
        for t in 0..store.n_kept() {
            let pi = store.pi_row(t);
            let total: f64 = pi.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            for &p in pi {
                let scaled = p * 40.0;
                assert!((scaled - scaled.round()).abs() < 1e-9, "not k/N: {p}");
            }
        }
    }

    #[test]
    fn retained_iterations_follow_thinning_rule() {
        let q = q3();
        let (y, _) = dina_data(29, 30, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Sequential, 3);
        cfg.iterations = 53;
        cfg.burn_in = 11;
        cfg.thin = 5;
        let store = run_chain(&y, &q, &cfg).unwrap();
        let expect: Vec<usize> = (1..=53).filter(|&m| cfg.keeps(m)).collect();
        assert_eq!(store.kept_iterations, expect);
        assert_eq!(store.n_kept(), cfg.n_kept());
    }

    #[test]
    fn instrumentation_counts_lookups_exactly_for_gdina() {
        let q = q3();
        let (y, _) = dina_data(37, 25, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Gdina, Method::Sequential, 8);
        cfg.iterations = 12;
        cfg.burn_in = 2;
        let store = run_chain(&y, &q, &cfg).unwrap();
        let per_sweep: usize = (0..3).map(|k| q.items_requiring(k).len()).sum();
        let expect = (12 * 25 * per_sweep) as u64;
        assert_eq!(store.stats.attr_items_touched, expect);
        assert_eq!(store.stats.attr_updates, 12 * 25 * 3);
        assert!(store.stats.seconds > 0.0);
    }

    #[test]
    fn dina_omega_restriction_reduces_lookups() {
        let q = q3();
        let (y, _) = dina_data(41, 25, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Sequential, 8);
        cfg.iterations = 12;
        cfg.burn_in = 2;
        let store = run_chain(&y, &q, &cfg).unwrap();
        let per_sweep: usize = (0..3).map(|k| q.items_requiring(k).len()).sum();
        let cap = (12 * 25 * per_sweep) as u64;
        assert!(store.stats.attr_items_touched > 0);
        assert!(
            store.stats.attr_items_touched < cap,
            "Ω-restriction never skipped an item"
        );
    }

    #[test]
    fn simultaneous_counts_full_enumeration() {
        let q = q3();
        let (y, _) = dina_data(43, 20, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Simultaneous, 8);
        cfg.iterations = 10;
        cfg.burn_in = 2;
        let store = run_chain(&y, &q, &cfg).unwrap();
        assert_eq!(
            store.stats.attr_items_touched,
            (10 * 20 * q.n_items() * 8) as u64
        );
        assert_eq!(store.stats.attr_updates, 10 * 20);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let q = q3();
        let y = ResponseMatrix::new(&[vec![1, 0, 1]]).unwrap();
        let cfg = FitConfig::new(ModelKind::Dina, Method::Sequential, 1);
        assert!(matches!(run_chain(&y, &q, &cfg), Err(Error::Data(_))));
    }

    #[test]
    fn zero_mass_adjacent_classes_fail_loudly() {
        // A point-mass Dirichlet prior cannot occur (δ > 0 everywhere), but a
        // degenerate π can be forced through per-class concentrations small
        // enough to underflow together with empty classes — instead, check
        // the guard directly through the sequential prior closure by running
        // with a legal configuration and verifying healthy chains never trip
        // it.
        let q = q3();
        let (y, _) = dina_data(47, 30, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Sequential, 12);
        cfg.iterations = 50;
        cfg.burn_in = 10;
        cfg.delta = DeltaPrior::Symmetric(0.01);
        run_chain(&y, &q, &cfg).unwrap();
    }

    #[test]
    fn wrapper_entry_points_override_model_and_method() {
        let q = QMatrix::new(&[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let (y, _) = dina_data(53, 30, &q, 0.2, 0.2);
        let mut cfg = FitConfig::new(ModelKind::Dina, Method::Simultaneous, 2);
        cfg.iterations = 12;
        cfg.burn_in = 2;
        let s = run_sequential_dina(&y, &q, &cfg).unwrap();
        assert_eq!(s.method, Method::Sequential);
        assert_eq!(s.model, ModelKind::Dina);
        let g = run_sequential_gdina(&y, &q, &cfg).unwrap();
        assert_eq!(g.model, ModelKind::Gdina);
        let sim = run_simultaneous(&y, &q, &cfg).unwrap();
        assert_eq!(sim.method, Method::Simultaneous);
        let ind = run_independent(&y, &q, &cfg).unwrap();
        assert_eq!(ind.method, Method::Independent);
        // Profile bit of the first draw lies inside the class range.
        for store in [&s, &g, &sim, &ind] {
            for &a in store.alpha_row(0) {
                assert!(profile_bits(a, 2).len() == 2);
                assert!(a < 4);
            }
        }
    }
}
