//! Informative priors on the interpretable dimension.
//!
//! Every entry of a parameter matrix gets an independent univariate
//! Gaussian prior (variance parameterization). Which Gaussian depends on the
//! row's role:
//!
//! | role              | dims `0..K-1`  | dim `K-1`                         |
//! |-------------------|----------------|-----------------------------------|
//! | free              | `N(0, sigma)`  | `N(0, sigma)`                     |
//! | positive anchor   | `N(0, omega)`  | `N(+1, gamma)` or `N+(0, gamma)`  |
//! | negative anchor   | `N(0, omega)`  | `N(-1, gamma)` or `N-(0, gamma)`  |
//! | neutral word      | `N(0, sigma)`  | `N(0, psi)`                       |
//!
//! The truncated variants are half-normals on the open half-line and are
//! only defined there; callers keep iterates inside with
//! [`project_support`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::math::{gaussian_log_density, gaussian_log_density_grad, half_normal_log_density};
use crate::matrix::Matrix;
use crate::text::{preprocess_text, PreprocessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    None,
    StandardBasis,
    Truncated,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::None => "none",
            PriorKind::StandardBasis => "standard-basis",
            PriorKind::Truncated => "truncated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(PriorKind::None),
            "standard-basis" | "standard_basis" => Some(PriorKind::StandardBasis),
            "truncated" => Some(PriorKind::Truncated),
            _ => None,
        }
    }
}

/// Prior family plus its variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub kind: PriorKind,
    pub use_neutral: bool,
    /// Variance of the base prior on non-anchor entries.
    pub sigma: f64,
    /// Variance of anchors on the interpretable dimension.
    pub gamma: f64,
    /// Variance of anchors on the remaining dimensions.
    pub omega: f64,
    /// Variance of neutral words on the interpretable dimension.
    pub psi: f64,
}

impl PriorParams {
    pub const STRICT_OMEGA: f64 = 1e-6;
    pub const WEAK_OMEGA: f64 = 1.0;
    pub const STANDARD_BASIS_GAMMA: f64 = 1e-6;
    pub const TRUNCATED_GAMMA: f64 = 1000.0;
    pub const NEUTRAL_PSI: f64 = 0.01;

    pub fn none() -> Self {
        PriorParams {
            kind: PriorKind::None,
            use_neutral: false,
            sigma: 1.0,
            gamma: Self::STANDARD_BASIS_GAMMA,
            omega: Self::WEAK_OMEGA,
            psi: Self::NEUTRAL_PSI,
        }
    }

    pub fn standard_basis_weak() -> Self {
        PriorParams {
            kind: PriorKind::StandardBasis,
            ..Self::none()
        }
    }

    pub fn standard_basis_strict() -> Self {
        PriorParams {
            kind: PriorKind::StandardBasis,
            omega: Self::STRICT_OMEGA,
            ..Self::none()
        }
    }

    pub fn truncated() -> Self {
        PriorParams {
            kind: PriorKind::Truncated,
            gamma: Self::TRUNCATED_GAMMA,
            ..Self::none()
        }
    }

    pub fn with_neutral(mut self, psi: f64) -> Self {
        self.use_neutral = true;
        self.psi = psi;
        self
    }

    /// Default `gamma` for a prior kind.
    pub fn default_gamma(kind: PriorKind) -> f64 {
        match kind {
            PriorKind::Truncated => Self::TRUNCATED_GAMMA,
            _ => Self::STANDARD_BASIS_GAMMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("gamma", self.gamma),
            ("omega", self.omega),
            ("psi", self.psi),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a positive finite variance, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Free,
    Positive,
    Negative,
    Neutral,
}

/// Which rows a prior evaluation covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowScope {
    All,
    /// Only anchor and neutral rows; free rows contribute nothing.
    Informative,
}

/// Resolved anchor sets together with the prior they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSpec {
    positive: BTreeSet<u32>,
    negative: BTreeSet<u32>,
    neutral: BTreeSet<u32>,
    params: PriorParams,
    dims: usize,
    roles: Vec<Role>,
}

impl AnchorSpec {
    pub fn new(
        vocab_size: usize,
        dims: usize,
        positive: BTreeSet<u32>,
        negative: BTreeSet<u32>,
        neutral: BTreeSet<u32>,
        params: PriorParams,
    ) -> Result<Self> {
        params.validate()?;
        if dims == 0 {
            return Err(Error::InvalidConfig(String::from("dims must be >= 1")));
        }
        for &id in positive.iter().chain(&negative).chain(&neutral) {
            if id as usize >= vocab_size {
                return Err(Error::IdOutOfRange {
                    id: id as usize,
                    size: vocab_size,
                });
            }
        }
        if !positive.is_disjoint(&negative)
            || !positive.is_disjoint(&neutral)
            || !negative.is_disjoint(&neutral)
        {
            return Err(Error::InvalidConfig(String::from(
                "positive, negative and neutral anchor sets must be disjoint",
            )));
        }
        if params.kind != PriorKind::None {
            if positive.is_empty() {
                return Err(Error::EmptyAnchorSet("positive"));
            }
            if negative.is_empty() {
                return Err(Error::EmptyAnchorSet("negative"));
            }
        }
        let mut roles = alloc::vec![Role::Free; vocab_size];
        if params.kind != PriorKind::None {
            positive
                .iter()
                .for_each(|&v| roles[v as usize] = Role::Positive);
            negative
                .iter()
                .for_each(|&v| roles[v as usize] = Role::Negative);
        }
        if params.use_neutral {
            neutral
                .iter()
                .for_each(|&v| roles[v as usize] = Role::Neutral);
        }
        Ok(AnchorSpec {
            positive,
            negative,
            neutral,
            params,
            dims,
            roles,
        })
    }

    /// A spec with only the base prior.
    pub fn unanchored(vocab_size: usize, dims: usize, sigma: f64) -> Result<Self> {
        let params = PriorParams {
            sigma,
            ..PriorParams::none()
        };
        AnchorSpec::new(
            vocab_size,
            dims,
            BTreeSet::new(),
            BTreeSet::new(),
            BTreeSet::new(),
            params,
        )
    }

    pub fn positive(&self) -> &BTreeSet<u32> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<u32> {
        &self.negative
    }

    pub fn neutral(&self) -> &BTreeSet<u32> {
        &self.neutral
    }

    pub fn params(&self) -> &PriorParams {
        &self.params
    }

    pub fn kind(&self) -> PriorKind {
        self.params.kind
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn vocab_size(&self) -> usize {
        self.roles.len()
    }

    /// Index of the interpretable dimension (always the last).
    pub fn interpret_dim(&self) -> usize {
        self.dims - 1
    }

    pub fn role(&self, row: usize) -> Role {
        self.roles[row]
    }

    /// Every id in any of the three requested sets, whether or not the
    /// configured prior acts on it.
    pub fn all_anchor_ids(&self) -> BTreeSet<u32> {
        self.positive
            .iter()
            .chain(&self.negative)
            .chain(&self.neutral)
            .copied()
            .collect()
    }

    /// Prior for entry `(row, col)`.
    fn entry_prior(&self, row: usize, col: usize) -> EntryPrior {
        let p = &self.params;
        let on_k = col == self.interpret_dim();
        match (self.roles[row], on_k) {
            (Role::Free, _) => EntryPrior::Gaussian {
                mean: 0.0,
                var: p.sigma,
            },
            (Role::Neutral, false) => EntryPrior::Gaussian {
                mean: 0.0,
                var: p.sigma,
            },
            (Role::Neutral, true) => EntryPrior::Gaussian {
                mean: 0.0,
                var: p.psi,
            },
            (Role::Positive | Role::Negative, false) => EntryPrior::Gaussian {
                mean: 0.0,
                var: p.omega,
            },
            (role, true) => {
                let positive = role == Role::Positive;
                match p.kind {
                    PriorKind::StandardBasis => EntryPrior::Gaussian {
                        mean: if positive { 1.0 } else { -1.0 },
                        var: p.gamma,
                    },
                    PriorKind::Truncated => EntryPrior::HalfNormal {
                        positive,
                        var: p.gamma,
                    },
                    PriorKind::None => unreachable!("anchor roles require an anchored prior"),
                }
            }
        }
    }

    fn check(&self, theta: &Matrix) -> Result<()> {
        theta.check_shape(self.vocab_size(), self.dims)
    }

    fn in_scope(&self, row: usize, scope: RowScope) -> bool {
        scope == RowScope::All || self.roles[row] != Role::Free
    }
}

#[derive(Debug, Clone, Copy)]
enum EntryPrior {
    Gaussian { mean: f64, var: f64 },
    HalfNormal { positive: bool, var: f64 },
}

impl EntryPrior {
    fn log_density(self, x: f64, row: usize) -> Result<f64> {
        match self {
            EntryPrior::Gaussian { mean, var } => Ok(gaussian_log_density(x, mean, var)),
            EntryPrior::HalfNormal { positive, var } => {
                if (positive && x > 0.0) || (!positive && x < 0.0) {
                    Ok(half_normal_log_density(x, var))
                } else {
                    Err(Error::SupportViolation { row, value: x })
                }
            }
        }
    }

    fn grad(self, x: f64, row: usize) -> Result<f64> {
        match self {
            EntryPrior::Gaussian { mean, var } => Ok(gaussian_log_density_grad(x, mean, var)),
            EntryPrior::HalfNormal { positive, var } => {
                if (positive && x > 0.0) || (!positive && x < 0.0) {
                    Ok(gaussian_log_density_grad(x, 0.0, var))
                } else {
                    Err(Error::SupportViolation { row, value: x })
                }
            }
        }
    }
}

/// Log prior density of a `V x K` parameter matrix.
pub fn log_prior(theta: &Matrix, spec: &AnchorSpec) -> Result<f64> {
    log_prior_scoped(theta, spec, RowScope::All)
}

pub fn log_prior_scoped(theta: &Matrix, spec: &AnchorSpec, scope: RowScope) -> Result<f64> {
    spec.check(theta)?;
    let mut total = 0.0;
    for row in (0..theta.rows()).filter(|&r| spec.in_scope(r, scope)) {
        for (col, &x) in theta.row(row).iter().enumerate() {
            total += spec.entry_prior(row, col).log_density(x, row)?;
        }
    }
    Ok(total)
}

/// Entrywise gradient of [`log_prior`].
pub fn grad_log_prior(theta: &Matrix, spec: &AnchorSpec) -> Result<Matrix> {
    let mut out = Matrix::zeros(theta.rows(), theta.cols());
    add_grad_log_prior(theta, spec, RowScope::All, 1.0, &mut out)?;
    Ok(out)
}

/// `out += scale * grad log_prior(theta)` over the rows in `scope`.
pub fn add_grad_log_prior(
    theta: &Matrix,
    spec: &AnchorSpec,
    scope: RowScope,
    scale: f64,
    out: &mut Matrix,
) -> Result<()> {
    spec.check(theta)?;
    spec.check(out)?;
    for row in (0..theta.rows()).filter(|&r| spec.in_scope(r, scope)) {
        let src = theta.row(row);
        let dst = out.row_mut(row);
        for col in 0..src.len() {
            dst[col] += scale * spec.entry_prior(row, col).grad(src[col], row)?;
        }
    }
    Ok(())
}

/// Clamps truncated anchors into their support: `max(x, eps)` on the
/// interpretable dimension of positive anchors, `min(x, -eps)` for negative
/// ones. A no-op for other prior kinds.
pub fn project_support(theta: &mut Matrix, spec: &AnchorSpec, eps: f64) {
    if spec.kind() != PriorKind::Truncated {
        return;
    }
    let k = spec.interpret_dim();
    for &v in &spec.positive {
        let x = theta.get(v as usize, k);
        theta.set(v as usize, k, x.max(eps));
    }
    for &v in &spec.negative {
        let x = theta.get(v as usize, k);
        theta.set(v as usize, k, x.min(-eps));
    }
}

/// Log density of the Gaussian random walk `rho[t] ~ N(rho[t-1], sigma_d I)`
/// over consecutive slices.
pub fn random_walk_log_prior(slices: &[Matrix], sigma_d: f64) -> f64 {
    slices
        .windows(2)
        .map(|w| {
            w[1].as_slice()
                .iter()
                .zip(w[0].as_slice())
                .map(|(&cur, &prev)| gaussian_log_density(cur, prev, sigma_d))
                .sum::<f64>()
        })
        .sum()
}

/// `out[t] += scale * d/d rho[t] random_walk_log_prior`.
pub fn add_random_walk_grad(slices: &[Matrix], sigma_d: f64, scale: f64, out: &mut [Matrix]) {
    debug_assert_eq!(slices.len(), out.len());
    for t in 1..slices.len() {
        let (cur, prev) = (slices[t].as_slice(), slices[t - 1].as_slice());
        for i in 0..cur.len() {
            let g = scale * (cur[i] - prev[i]) / sigma_d;
            out[t].as_mut_slice()[i] -= g;
            out[t - 1].as_mut_slice()[i] += g;
        }
    }
}

/// Raw anchor words as requested by the user, before normalization.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorRequest {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    pub neutral: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedAnchor {
    pub set: &'static str,
    pub requested: String,
    /// The vocabulary form it matched.
    pub form: String,
    pub id: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnchorResolution {
    pub resolved: Vec<ResolvedAnchor>,
    /// `(set, requested word)` pairs with no vocabulary match.
    pub missing: Vec<(&'static str, String)>,
}

/// Normalizes a user-supplied word and looks it up.
///
/// The word is preprocessed exactly like corpus text. Lists that are
/// already stemmed may not survive a second stemming pass (Porter is not
/// idempotent), so the unstemmed normal form is tried when the stemmed form
/// is absent. Words normalizing to anything other than a single token do
/// not resolve.
pub fn resolve_word<L: Lexicon + ?Sized>(
    lexicon: &L,
    word: &str,
    cfg: &PreprocessConfig,
) -> Option<(String, u32)> {
    let stemmed = preprocess_text(word, cfg);
    if let [form] = stemmed.as_slice() {
        if let Some(id) = lexicon.id_of(form) {
            return Some((form.clone(), id));
        }
    }
    if cfg.stem {
        let plain_cfg = PreprocessConfig {
            stem: false,
            ..cfg.clone()
        };
        if let [form] = preprocess_text(word, &plain_cfg).as_slice() {
            if let Some(id) = lexicon.id_of(form) {
                return Some((form.clone(), id));
            }
        }
    }
    None
}

/// Resolves requested anchor words against a vocabulary and builds the
/// corresponding [`AnchorSpec`].
///
/// Duplicates within a set collapse; a word landing in two different sets
/// is an error. Missing words are reported, not fatal, unless the positive
/// or negative set ends up empty under an anchored prior.
pub fn resolve_anchors<L: Lexicon + ?Sized>(
    lexicon: &L,
    request: &AnchorRequest,
    params: PriorParams,
    dims: usize,
    cfg: &PreprocessConfig,
) -> Result<(AnchorSpec, AnchorResolution)> {
    let mut resolution = AnchorResolution::default();
    let mut sets: [BTreeSet<u32>; 3] = Default::default();
    let names = ["positive", "negative", "neutral"];
    let lists = [&request.positive, &request.negative, &request.neutral];
    let mut owner: alloc::collections::BTreeMap<u32, usize> = Default::default();

    for (s, list) in lists.iter().enumerate() {
        for word in list.iter() {
            match resolve_word(lexicon, word, cfg) {
                Some((form, id)) => {
                    if let Some(&other) = owner.get(&id) {
                        if other != s {
                            return Err(Error::AnchorCollision {
                                word: word.clone(),
                                resolved: form,
                                first: names[other],
                                second: names[s],
                            });
                        }
                    }
                    owner.insert(id, s);
                    if sets[s].insert(id) {
                        resolution.resolved.push(ResolvedAnchor {
                            set: names[s],
                            requested: word.clone(),
                            form,
                            id,
                        });
                    }
                }
                None => resolution.missing.push((names[s], word.clone())),
            }
        }
    }
    let [positive, negative, neutral] = sets;
    let spec = AnchorSpec::new(lexicon.len(), dims, positive, negative, neutral, params)?;
    Ok((spec, resolution))
}
