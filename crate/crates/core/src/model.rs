//! Model structures: Q-matrices, attribute profiles, item parameters, and
//! response probabilities for the DINA and probit G-DINA models.
//!
//! Attribute profiles are stored as little-endian bitmasks: bit `k` of the
//! mask is attribute `k+1`, so the zero-based class index of a profile is
//! simply the mask value and classes are ordered
//! `(0,…,0), (1,0,…,0), (0,1,0,…,0), (1,1,0,…,0), …` — class `c` (1-based)
//! corresponds to mask `c − 1`.  Flipping one attribute of a profile moves
//! between two masks that differ in a single bit, which is what makes the
//! one-attribute-at-a-time samplers O(1) per population lookup.
//!
//! For an item requiring `K*` attributes, the G-DINA design vector has
//! `2^K*` entries ordered canonically: the intercept, the `K*` main
//! effects in attribute order, all two-way interactions in lexicographic
//! order, then three-way, and so on up to the single full interaction.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest attribute count for which full `2^K` class enumerations (the
/// population distribution, class indices, marginal likelihoods) are
/// supported.
pub const MAX_ATTRIBUTES_FULL_ENUM: usize = 24;

/// Largest attribute count storable in a profile bitmask.
pub const MAX_ATTRIBUTES: usize = 31;

// ---------------------------------------------------------------------------
// Attribute profiles
// ---------------------------------------------------------------------------

/// Converts a profile bitmask to its explicit 0/1 vector of length `k`.
pub fn profile_bits(mask: u32, k: usize) -> Vec<u8> {
    (0..k).map(|j| ((mask >> j) & 1) as u8).collect()
}

/// Converts an explicit 0/1 attribute vector to a profile bitmask.
pub fn profile_mask(bits: &[u8]) -> Result<u32> {
    if bits.len() > MAX_ATTRIBUTES {
        return Err(Error::config(format!(
            "at most {MAX_ATTRIBUTES} attributes are supported, got {}",
            bits.len()
        )));
    }
    let mut mask = 0u32;
    for (j, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => mask |= 1 << j,
            other => {
                return Err(Error::data(format!(
                    "attribute values must be 0 or 1, got {other}"
                )))
            }
        }
    }
    Ok(mask)
}

/// Zero-based class index of a profile: `Σ_k α_k 2^(k−1)`.
pub fn class_index(mask: u32) -> usize {
    mask as usize
}

/// One-based class label of a profile, as used in report output.
pub fn class_label(mask: u32) -> usize {
    mask as usize + 1
}

// ---------------------------------------------------------------------------
// Q-matrix
// ---------------------------------------------------------------------------

/// A validated `J × K` Q-matrix: `q[j][k] = 1` when item `j` requires
/// attribute `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QMatrix {
    n_items: usize,
    n_attrs: usize,
    /// Row bitmasks, one per item (bit `k` set ⇔ attribute `k` required).
    rows: Vec<u32>,
}

impl QMatrix {
    /// Builds a Q-matrix from explicit 0/1 rows, validating shape and
    /// content: every row must require at least one attribute and all rows
    /// must have the same length `K ≥ 1`.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("Q-matrix must have at least one item row"));
        }
        let n_attrs = rows[0].len();
        if n_attrs == 0 {
            return Err(Error::data("Q-matrix must have at least one attribute"));
        }
        if n_attrs > MAX_ATTRIBUTES {
            return Err(Error::data(format!(
                "at most {MAX_ATTRIBUTES} attributes are supported, got {n_attrs}"
            )));
        }
        let mut masks = Vec::with_capacity(rows.len());
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n_attrs {
                return Err(Error::data(format!(
                    "Q-matrix row {} has length {}, expected {n_attrs}",
                    j + 1,
                    row.len()
                )));
            }
            let mask = profile_mask(row)?;
            if mask == 0 {
                return Err(Error::data(format!(
                    "Q-matrix row {} requires no attributes",
                    j + 1
                )));
            }
            masks.push(mask);
        }
        Ok(QMatrix {
            n_items: rows.len(),
            n_attrs,
            rows: masks,
        })
    }

    /// Builds a Q-matrix directly from row bitmasks.
    pub fn from_masks(masks: Vec<u32>, n_attrs: usize) -> Result<Self> {
        let rows: Vec<Vec<u8>> = masks.iter().map(|&m| profile_bits(m, n_attrs)).collect();
        for (j, &m) in masks.iter().enumerate() {
            if m >> n_attrs != 0 {
                return Err(Error::data(format!(
                    "Q-matrix row {} uses attributes beyond K={n_attrs}",
                    j + 1
                )));
            }
        }
        Self::new(&rows)
    }

    /// Number of items `J`.
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Number of attributes `K`.
    pub fn n_attrs(&self) -> usize {
        self.n_attrs
    }

    /// Bitmask of attributes required by item `j` (0-based).
    pub fn row_mask(&self, j: usize) -> u32 {
        self.rows[j]
    }

    /// All row bitmasks.
    pub fn row_masks(&self) -> &[u32] {
        &self.rows
    }

    /// Indices (0-based, ascending) of the attributes required by item `j`.
    pub fn required_attrs(&self, j: usize) -> Vec<usize> {
        (0..self.n_attrs)
            .filter(|k| self.rows[j] >> k & 1 == 1)
            .collect()
    }

    /// Number of attributes required by item `j`.
    pub fn item_weight(&self, j: usize) -> usize {
        self.rows[j].count_ones() as usize
    }

    /// Explicit 0/1 entries of row `j`.
    pub fn row_bits(&self, j: usize) -> Vec<u8> {
        profile_bits(self.rows[j], self.n_attrs)
    }

    /// Items requiring attribute `k` (0-based indices).
    pub fn items_requiring(&self, k: usize) -> Vec<usize> {
        (0..self.n_items)
            .filter(|&j| self.rows[j] >> k & 1 == 1)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Response matrix
// ---------------------------------------------------------------------------

/// An `N × J` binary response matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    n_examinees: usize,
    n_items: usize,
    data: Vec<u8>,
}

impl ResponseMatrix {
    /// Builds a response matrix from explicit rows, validating that all
    /// rows have equal length and all entries are 0 or 1.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("response matrix must have at least one row"));
        }
        let n_items = rows[0].len();
        if n_items == 0 {
            return Err(Error::data("response matrix must have at least one item"));
        }
        let mut data = Vec::with_capacity(rows.len() * n_items);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_items {
                return Err(Error::data(format!(
                    "response row {} has length {}, expected {n_items}",
                    i + 1,
                    row.len()
                )));
            }
            for &y in row {
                if y > 1 {
                    return Err(Error::data(format!(
                        "responses must be 0 or 1, got {y} in row {}",
                        i + 1
                    )));
                }
            }
            data.extend_from_slice(row);
        }
        Ok(ResponseMatrix {
            n_examinees: rows.len(),
            n_items,
            data,
        })
    }

    /// Number of examinees `N`.
    pub fn n_examinees(&self) -> usize {
        self.n_examinees
    }

    /// Number of items `J`.
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Responses of examinee `i` (0-based).
    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n_items..(i + 1) * self.n_items]
    }

    /// Response of examinee `i` to item `j` (both 0-based).
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.n_items + j]
    }
}

/// Restricts a full profile to the attributes required by one item,
/// producing the *reduced* profile bitmask: bit `t` of the result is the
/// profile's value on the `t`-th required attribute of the item (ascending
/// attribute order).
pub fn reduce_profile(profile: u32, item_mask: u32) -> u32 {
    let mut reduced = 0u32;
    let mut remaining = item_mask;
    let mut t = 0;
    while remaining != 0 {
        let k = remaining.trailing_zeros();
        reduced |= (profile >> k & 1) << t;
        remaining &= remaining - 1;
        t += 1;
    }
    reduced
}

// ---------------------------------------------------------------------------
// DINA
// ---------------------------------------------------------------------------

/// Per-item guessing and slipping parameters of the DINA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinaParams {
    /// Guessing probabilities `g[j] = P(Y=1 | η=0)`.
    pub guess: Vec<f64>,
    /// Slipping probabilities `s[j] = P(Y=0 | η=1)`.
    pub slip: Vec<f64>,
}

impl DinaParams {
    /// Validates ranges and, optionally, the monotonicity constraint
    /// `g[j] < 1 − s[j]` for every item.
    pub fn validate(&self, require_monotone: bool) -> Result<()> {
        if self.guess.len() != self.slip.len() {
            return Err(Error::config(
                "guess and slip vectors must have equal length",
            ));
        }
        for (j, (&g, &s)) in self.guess.iter().zip(&self.slip).enumerate() {
            if !(0.0..=1.0).contains(&g) || !(0.0..=1.0).contains(&s) {
                return Err(Error::config(format!(
                    "item {}: guess/slip must lie in [0,1], got g={g}, s={s}",
                    j + 1
                )));
            }
            if require_monotone && !(g < 1.0 - s) {
                return Err(Error::config(format!(
                    "item {}: monotonicity requires g < 1 − s, got g={g}, s={s}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// DINA ideal response `η = ∏_k α_k^{q_jk}`: 1 iff the profile holds every
/// attribute the item requires.
pub fn ideal_response(profile: u32, item_mask: u32) -> u8 {
    (profile & item_mask == item_mask) as u8
}

/// DINA success probability `P(Y=1 | α) = g^(1−η) (1−s)^η`.
pub fn dina_response_prob(profile: u32, item_mask: u32, guess: f64, slip: f64) -> f64 {
    if ideal_response(profile, item_mask) == 1 {
        1.0 - slip
    } else {
        guess
    }
}

// ---------------------------------------------------------------------------
// G-DINA (probit link)
// ---------------------------------------------------------------------------

/// Coefficient vector of one probit G-DINA item, in canonical term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdinaItemParams {
    /// `2^K*` coefficients: intercept, main effects, two-way interactions
    /// (lexicographic), …, full interaction.
    pub coef: Vec<f64>,
}

impl GdinaItemParams {
    /// Number of required attributes `K*` implied by the coefficient count.
    pub fn n_required(&self) -> Result<usize> {
        let len = self.coef.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::config(format!(
                "G-DINA coefficient count must be a power of two, got {len}"
            )));
        }
        Ok(len.trailing_zeros() as usize)
    }
}

/// Canonical term masks for an item with `k_star` required attributes.
///
/// Entry `t` is a bitmask over the item's *reduced* attribute positions;
/// the design vector entry for term `t` is the product of the reduced
/// profile's attributes in that mask.  Terms are ordered by interaction
/// order (popcount), ties broken lexicographically — which for bitmasks
/// means ascending numeric value within an order.
pub fn term_masks(k_star: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..(1u32 << k_star)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    masks
}

/// Design-vector entry for one term: 1 if the reduced profile has every
/// attribute in the term's mask, else 0.
#[inline]
pub fn term_value(reduced_profile: u32, term_mask: u32) -> f64 {
    (reduced_profile & term_mask == term_mask) as u8 as f64
}

/// Full-interaction design vector of a reduced profile, in canonical term
/// order: intercept, main effects, two-way interactions, … .
pub fn design_vector(reduced_bits: &[u8]) -> Result<Vec<f64>> {
    let k_star = reduced_bits.len();
    if k_star > 25 {
        return Err(Error::config(format!(
            "design vectors support at most 25 required attributes, got {k_star}"
        )));
    }
    let reduced = profile_mask(reduced_bits)?;
    Ok(term_masks(k_star)
        .iter()
        .map(|&t| term_value(reduced, t))
        .collect())
}

/// Linear predictor `X(α*)'λ` of a G-DINA item at a reduced profile.
pub fn gdina_linear(coef: &[f64], reduced_profile: u32, terms: &[u32]) -> f64 {
    debug_assert_eq!(coef.len(), terms.len());
    let mut acc = 0.0;
    for (c, &t) in coef.iter().zip(terms) {
        if reduced_profile & t == t {
            acc += c;
        }
    }
    acc
}

/// Probit G-DINA success probability `P(Y=1 | α) = Φ(X'λ)` for a full
/// profile on an item with the given Q-matrix row mask.
pub fn gdina_response_prob(profile: u32, item_mask: u32, params: &GdinaItemParams) -> Result<f64> {
    let k_star = item_mask.count_ones() as usize;
    let expect = 1usize << k_star;
    if params.coef.len() != expect {
        return Err(Error::config(format!(
            "item requires {k_star} attributes so expects {expect} coefficients, got {}",
            params.coef.len()
        )));
    }
    let reduced = reduce_profile(profile, item_mask);
    let terms = term_masks(k_star);
    Ok(crate::distributions::normal::normal_cdf(gdina_linear(
        &params.coef,
        reduced,
        &terms,
    )))
}

/// Splits the linear predictor of item `j` by its dependence on one
/// attribute: `X'λ = t0 + α_k · t1` where `t0` collects every term not
/// involving attribute `k` and `t1` those that do (evaluated at the other
/// attributes' current values).
///
/// `k_reduced` is the *position of attribute `k` among the item's required
/// attributes* (0-based); `reduced_profile` supplies the other attributes
/// (its bit at `k_reduced` is ignored).
pub fn t0_t1_decompose(
    coef: &[f64],
    terms: &[u32],
    reduced_profile: u32,
    k_reduced: usize,
) -> (f64, f64) {
    let k_bit = 1u32 << k_reduced;
    let mut t0 = 0.0;
    let mut t1 = 0.0;
    for (c, &t) in coef.iter().zip(terms) {
        // A term is active when the profile holds every attribute in its
        // mask, ignoring attribute k itself (whose contribution is what the
        // decomposition factors out).
        if reduced_profile & (t & !k_bit) == t & !k_bit {
            if t & k_bit != 0 {
                t1 += c;
            } else {
                t0 += c;
            }
        }
    }
    (t0, t1)
}

// ---------------------------------------------------------------------------
// Item parameters (either model)
// ---------------------------------------------------------------------------

/// Item parameters for a whole test under one of the two response models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ItemParams {
    /// DINA guessing/slipping parameters.
    Dina(DinaParams),
    /// Per-item probit G-DINA coefficient vectors.
    Gdina(Vec<GdinaItemParams>),
}

impl ItemParams {
    /// Number of items covered.
    pub fn n_items(&self) -> usize {
        match self {
            ItemParams::Dina(p) => p.guess.len(),
            ItemParams::Gdina(v) => v.len(),
        }
    }

    /// Success probability of item `j` for the given profile.
    pub fn response_prob(&self, j: usize, profile: u32, item_mask: u32) -> Result<f64> {
        match self {
            ItemParams::Dina(p) => Ok(dina_response_prob(
                profile,
                item_mask,
                p.guess[j],
                p.slip[j],
            )),
            ItemParams::Gdina(v) => gdina_response_prob(profile, item_mask, &v[j]),
        }
    }
}

/// Converts DINA item parameters to the equivalent probit G-DINA
/// coefficients: intercept `Φ⁻¹(g)`, full interaction
/// `Φ⁻¹(1−s) − Φ⁻¹(g)`, all other terms zero.
pub fn dina_as_gdina(item_mask: u32, guess: f64, slip: f64) -> Result<GdinaItemParams> {
    let k_star = item_mask.count_ones() as usize;
    let len = 1usize << k_star;
    let lo = crate::distributions::normal::normal_quantile(guess)?;
    let hi = crate::distributions::normal::normal_quantile(1.0 - slip)?;
    let mut coef = vec![0.0; len];
    coef[0] = lo;
    coef[len - 1] = hi - lo;
    Ok(GdinaItemParams { coef })
}

// ---------------------------------------------------------------------------
// Population distribution
// ---------------------------------------------------------------------------

/// A distribution over the `2^K` attribute classes, indexed by profile
/// bitmask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDist {
    probs: Vec<f64>,
}

impl PopulationDist {
    /// Validates and wraps a probability vector of length `2^K`.
    ///
    /// Entries must be non-negative (exact zeros are legal — they arise
    /// from Dirichlet draws with tiny concentrations) and must sum to one
    /// within `1e-12`; compensated summation keeps that check meaningful
    /// for large `K`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let c = probs.len();
        if c < 2 || !c.is_power_of_two() {
            return Err(Error::config(format!(
                "class probability vector length must be a power of two ≥ 2, got {c}"
            )));
        }
        if c > 1 << MAX_ATTRIBUTES_FULL_ENUM {
            return Err(Error::config(format!(
                "class enumerations support at most K={MAX_ATTRIBUTES_FULL_ENUM} attributes"
            )));
        }
        // Neumaier compensated sum.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &p in &probs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::config(format!(
                    "class probabilities must be finite and ≥ 0, got {p}"
                )));
            }
            let t = sum + p;
            comp += if sum.abs() >= p.abs() {
                (sum - t) + p
            } else {
                (p - t) + sum
            };
            sum = t;
        }
        let total = sum + comp;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!(
                "class probabilities must sum to 1 (got {total})"
            )));
        }
        Ok(PopulationDist { probs })
    }

    /// Uniform distribution over `2^K` classes.
    pub fn uniform(n_attrs: usize) -> Result<Self> {
        if n_attrs == 0 || n_attrs > MAX_ATTRIBUTES_FULL_ENUM {
            return Err(Error::config(format!(
                "population distributions support 1..={MAX_ATTRIBUTES_FULL_ENUM} attributes, got {n_attrs}"
            )));
        }
        let c = 1usize << n_attrs;
        Ok(PopulationDist {
            probs: vec![1.0 / c as f64; c],
        })
    }

    /// Number of attributes `K`.
    pub fn n_attrs(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    /// Probability of the class with the given profile bitmask.
    pub fn prob(&self, mask: u32) -> f64 {
        self.probs[mask as usize]
    }

    /// The full probability vector, indexed by profile bitmask.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

// ---------------------------------------------------------------------------
// Likelihoods
// ---------------------------------------------------------------------------

/// Clamps a probability into `[1e-300, 1 − 1e-16]` for log-likelihood use.
///
/// Response probabilities themselves are never clamped — only their entry
/// into logarithms is, so a structurally impossible response (probability
/// exactly 0 or 1 contradicted by the data) still yields `−∞`.
pub(crate) fn ln_clamped(p: f64) -> f64 {
    p.clamp(1e-300, 1.0 - 1e-16).ln()
}

/// Log-likelihood of one examinee's responses given a known profile.
///
/// Returns `−∞` when a degenerate item probability (exactly 0 or 1)
/// contradicts the observed response; finite probabilities are clamped away
/// from 0 and 1 only inside the logarithm.
pub fn conditional_loglik(
    responses: &[u8],
    profile: u32,
    q: &QMatrix,
    params: &ItemParams,
) -> Result<f64> {
    if responses.len() != q.n_items() {
        return Err(Error::data(format!(
            "expected {} responses, got {}",
            q.n_items(),
            responses.len()
        )));
    }
    if params.n_items() != q.n_items() {
        return Err(Error::config(format!(
            "item parameters cover {} items but the Q-matrix has {}",
            params.n_items(),
            q.n_items()
        )));
    }
    let mut ll = 0.0;
    for (j, &y) in responses.iter().enumerate() {
        if y > 1 {
            return Err(Error::data(format!(
                "responses must be 0 or 1, got {y} at item {}",
                j + 1
            )));
        }
        let theta = params.response_prob(j, profile, q.row_mask(j))?;
        let p_obs = if y == 1 { theta } else { 1.0 - theta };
        if p_obs <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        ll += ln_clamped(p_obs);
    }
    Ok(ll)
}

/// Log of the marginal likelihood of one examinee's responses under a
/// population distribution: `ln Σ_c π_c P(Y | α_c)`, accumulated in log
/// space with a single log-sum-exp.
pub fn marginal_loglik(
    responses: &[u8],
    pi: &PopulationDist,
    q: &QMatrix,
    params: &ItemParams,
) -> Result<f64> {
    if pi.n_attrs() != q.n_attrs() {
        return Err(Error::config(format!(
            "population distribution has K={} but the Q-matrix has K={}",
            pi.n_attrs(),
            q.n_attrs()
        )));
    }
    let c = pi.probs().len();
    let mut terms = Vec::with_capacity(c);
    let mut max = f64::NEG_INFINITY;
    for mask in 0..c as u32 {
        let pc = pi.prob(mask);
        let term = if pc <= 0.0 {
            f64::NEG_INFINITY
        } else {
            pc.ln() + conditional_loglik(responses, mask, q, params)?
        };
        if term > max {
            max = term;
        }
        terms.push(term);
    }
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn q3() -> QMatrix {
        QMatrix::new(&[
            vec![1, 0, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 1, 0],
            vec![1, 0, 1],
            vec![1, 1, 1],
        ])
        .unwrap()
    }

    #[test]
    fn profile_mask_round_trips() {
        for mask in 0u32..32 {
            let bits = profile_bits(mask, 5);
            assert_eq!(profile_mask(&bits).unwrap(), mask);
        }
    }

    #[test]
    fn class_indexing_is_little_endian() {
        // Profile (1,0,1) has α₁ = α₃ = 1 → mask 0b101 = 5 → class 6.
        let mask = profile_mask(&[1, 0, 1]).unwrap();
        assert_eq!(class_index(mask), 5);
        assert_eq!(class_label(mask), 6);
        // The all-zero profile is class 1.
        assert_eq!(class_label(0), 1);
    }

    #[test]
    fn qmatrix_validation() {
        assert!(QMatrix::new(&[]).is_err());
        assert!(QMatrix::new(&[vec![0, 0]]).is_err()); // zero row
        assert!(QMatrix::new(&[vec![1, 0], vec![1]]).is_err()); // ragged
        assert!(QMatrix::new(&[vec![2, 0]]).is_err()); // non-binary
        let q = q3();
        assert_eq!(q.n_items(), 6);
        assert_eq!(q.n_attrs(), 3);
        assert_eq!(q.required_attrs(3), vec![0, 1]);
        assert_eq!(q.item_weight(5), 3);
        assert_eq!(q.items_requiring(0), vec![0, 3, 4, 5]);
    }

    #[test]
    fn reduce_profile_gathers_required_bits() {
        // Item requires attributes {1, 3} (mask 0b101): reduced bit 0 is
        // attribute 1, reduced bit 1 is attribute 3.
        let item = 0b101;
        assert_eq!(reduce_profile(0b001, item), 0b01);
        assert_eq!(reduce_profile(0b100, item), 0b10);
        assert_eq!(reduce_profile(0b111, item), 0b11);
        assert_eq!(reduce_profile(0b010, item), 0b00);
    }

    #[test]
    fn ideal_response_is_conjunctive() {
        let item = 0b011; // requires attributes 1 and 2
        assert_eq!(ideal_response(0b011, item), 1);
        assert_eq!(ideal_response(0b111, item), 1);
        assert_eq!(ideal_response(0b001, item), 0);
        assert_eq!(ideal_response(0b100, item), 0);
        assert_eq!(ideal_response(0b000, item), 0);
    }

    #[test]
    fn dina_probability_splits_on_ideal_response() {
        let item = 0b011;
        assert_abs_diff_eq!(dina_response_prob(0b011, item, 0.2, 0.1), 0.9);
        assert_abs_diff_eq!(dina_response_prob(0b001, item, 0.2, 0.1), 0.2);
    }

    #[test]
    fn dina_params_validation() {
        let ok = DinaParams {
            guess: vec![0.2, 0.3],
            slip: vec![0.1, 0.2],
        };
        ok.validate(true).unwrap();
        let violating = DinaParams {
            guess: vec![0.7],
            slip: vec![0.4], // g = 0.7 ≥ 1 − s = 0.6
        };
        violating.validate(false).unwrap();
        assert!(violating.validate(true).is_err());
    }

    #[test]
    fn term_masks_are_canonically_ordered() {
        // K* = 3: intercept, 3 mains, 3 two-ways (lexicographic), full.
        assert_eq!(
            term_masks(3),
            vec![0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]
        );
    }

    #[test]
    fn design_vector_matches_worked_example() {
        // Reduced profile (1,0,1): intercept 1; mains (1,0,1); two-way
        // products (α₁α₂, α₁α₃, α₂α₃) = (0,1,0); triple 0.
        let x = design_vector(&[1, 0, 1]).unwrap();
        assert_eq!(x, vec![1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn design_vector_small_cases() {
        assert_eq!(design_vector(&[]).unwrap(), vec![1.0]);
        assert_eq!(design_vector(&[1]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(design_vector(&[0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(design_vector(&[1, 1]).unwrap(), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gdina_probability_matches_reference_values() {
        // Single-attribute item, non-master: Φ(−1.2).
        let p = GdinaItemParams {
            coef: vec![-1.2, 2.0],
        };
        let prob = gdina_response_prob(0b0, 0b1, &p).unwrap();
        assert_relative_eq!(prob, 0.11506967022170827, max_relative = 1e-12);
        // Master: Φ(0.8).
        let prob1 = gdina_response_prob(0b1, 0b1, &p).unwrap();
        assert_relative_eq!(
            prob1,
            crate::distributions::normal::normal_cdf(0.8),
            max_relative = 1e-14
        );
    }

    #[test]
    fn gdina_probability_deep_tail_does_not_underflow() {
        let p = GdinaItemParams {
            coef: vec![-10.0, 12.0],
        };
        let prob = gdina_response_prob(0b0, 0b1, &p).unwrap();
        assert!(prob > 0.0);
        assert_relative_eq!(prob, 7.6198530241605261e-24, max_relative = 1e-12);
    }

    #[test]
    fn t0_t1_decomposition_matches_worked_example() {
        // Item requires attributes {1,2}; coefficients (λ0, λ1, λ2, λ12).
        // For k = attribute 1 (reduced position 0):
        //   t0 = λ0 + λ2 α2,  t1 = λ1 + λ12 α2.
        let coef = [0.3, 0.7, -0.2, 0.5];
        let terms = term_masks(2);
        // α2 = 1 (reduced profile bit 1 set):
        let (t0, t1) = t0_t1_decompose(&coef, &terms, 0b10, 0);
        assert_abs_diff_eq!(t0, 0.3 - 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t1, 0.7 + 0.5, epsilon = 1e-15);
        // α2 = 0:
        let (t0, t1) = t0_t1_decompose(&coef, &terms, 0b00, 0);
        assert_abs_diff_eq!(t0, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(t1, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn t0_t1_reconstructs_linear_predictor() {
        let coef = [0.3, 0.7, -0.2, 0.5];
        let terms = term_masks(2);
        for reduced in 0u32..4 {
            for k_reduced in 0..2 {
                let (t0, t1) = t0_t1_decompose(&coef, &terms, reduced, k_reduced);
                let alpha_k = (reduced >> k_reduced & 1) as f64;
                let direct = gdina_linear(&coef, reduced, &terms);
                assert_abs_diff_eq!(t0 + alpha_k * t1, direct, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dina_as_gdina_agrees_with_dina() {
        let item = 0b111u32;
        let (g, s) = (0.2, 0.1);
        let gd = dina_as_gdina(item, g, s).unwrap();
        for profile in 0u32..8 {
            let dina = dina_response_prob(profile, item, g, s);
            let gdina = gdina_response_prob(profile, item, &gd).unwrap();
            assert_abs_diff_eq!(dina, gdina, epsilon = 1e-10);
        }
    }

    #[test]
    fn population_dist_validation() {
        assert!(PopulationDist::new(vec![0.5, 0.5]).is_ok());
        assert!(PopulationDist::new(vec![0.6, 0.5]).is_err()); // sum > 1
        assert!(PopulationDist::new(vec![0.5, 0.25, 0.25]).is_err()); // not 2^K
        assert!(PopulationDist::new(vec![1.0, 0.0]).is_ok()); // zeros legal
        assert!(PopulationDist::new(vec![1.5, -0.5]).is_err()); // negative
        let u = PopulationDist::uniform(3).unwrap();
        assert_eq!(u.n_attrs(), 3);
        assert_abs_diff_eq!(u.prob(5), 0.125);
    }

    #[test]
    fn conditional_loglik_matches_direct_product() {
        let q = q3();
        let params = ItemParams::Dina(DinaParams {
            guess: vec![0.2; 6],
            slip: vec![0.1; 6],
        });
        let profile = profile_mask(&[1, 1, 0]).unwrap();
        let responses = [1u8, 0, 0, 1, 0, 1];
        let ll = conditional_loglik(&responses, profile, &q, &params).unwrap();
        let mut direct = 0.0;
        for (j, &y) in responses.iter().enumerate() {
            let theta = dina_response_prob(profile, q.row_mask(j), 0.2, 0.1);
            direct += if y == 1 { theta.ln() } else { (1.0 - theta).ln() };
        }
        assert_relative_eq!(ll, direct, max_relative = 1e-14);
    }

    #[test]
    fn contradicted_degenerate_probability_gives_neg_infinity() {
        let q = QMatrix::new(&[vec![1]]).unwrap();
        // g = 0: a non-master answering correctly is impossible.
        let params = ItemParams::Dina(DinaParams {
            guess: vec![0.0],
            slip: vec![0.1],
        });
        let ll = conditional_loglik(&[1], 0b0, &q, &params).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
        // The consistent response keeps a finite value.
        let ll0 = conditional_loglik(&[0], 0b0, &q, &params).unwrap();
        assert!(ll0.is_finite());
        assert_abs_diff_eq!(ll0, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn marginal_loglik_matches_enumeration() {
        let q = q3();
        let params = ItemParams::Dina(DinaParams {
            guess: vec![0.2; 6],
            slip: vec![0.1; 6],
        });
        let pi = PopulationDist::new(vec![0.05, 0.1, 0.15, 0.2, 0.05, 0.15, 0.1, 0.2]).unwrap();
        let responses = [1u8, 1, 0, 1, 0, 0];
        let ll = marginal_loglik(&responses, &pi, &q, &params).unwrap();
        // Independent direct enumeration in probability space.
        let mut total = 0.0;
        for mask in 0u32..8 {
            let mut prod = pi.prob(mask);
            for (j, &y) in responses.iter().enumerate() {
                let theta = dina_response_prob(mask, q.row_mask(j), 0.2, 0.1);
                prod *= if y == 1 { theta } else { 1.0 - theta };
            }
            total += prod;
        }
        assert_relative_eq!(ll, total.ln(), max_relative = 1e-12);
    }

    #[test]
    fn marginal_loglik_at_point_mass_equals_conditional() {
        let q = q3();
        let params = ItemParams::Dina(DinaParams {
            guess: vec![0.25; 6],
            slip: vec![0.15; 6],
        });
        let mut probs = vec![0.0; 8];
        probs[3] = 1.0;
        let pi = PopulationDist::new(probs).unwrap();
        let responses = [1u8, 1, 0, 1, 0, 0];
        let marg = marginal_loglik(&responses, &pi, &q, &params).unwrap();
        let cond = conditional_loglik(&responses, 3, &q, &params).unwrap();
        assert_abs_diff_eq!(marg, cond, epsilon = 1e-10);
    }
}
