use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slot names in canonical code order.
pub const SLOT_NAMES: [&str; 11] = [
    "active_update",
    "elitism",
    "mirrored_sampling",
    "orthogonal_sampling",
    "sequential_selection",
    "threshold_convergence",
    "two_point_step_size",
    "pairwise_selection",
    "equal_recombination_weights",
    "base_sampler",
    "restart_strategy",
];

const ARITY: [u8; 11] = [2, 2, 2, 2, 2, 2, 2, 2, 2, 3, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum BaseSampler {
    #[default]
    Gaussian,
    /// Randomly shifted Sobol points mapped through the inverse normal CDF.
    Sobol,
    /// Randomly shifted Halton points mapped through the inverse normal CDF.
    Halton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum RestartStrategy {
    #[default]
    None,
    /// Restart with doubled population size.
    Ipop,
    /// Alternate large-population and small-population restarts.
    Bipop,
}

/// One modular CMA-ES variant.
///
/// | slot | effect when on |
/// |---|---|
/// | `active_update` | worst offspring enter the covariance update with negative weights |
/// | `elitism` | (μ+λ) selection: parents compete with offspring |
/// | `mirrored_sampling` | offspring come in pairs `z`, `-z` |
/// | `orthogonal_sampling` | base samples are orthogonalized in blocks of `d`, keeping their norms |
/// | `sequential_selection` | a generation stops early once an offspring beats the incumbent (after μ evaluations) |
/// | `threshold_convergence` | steps shorter than a decaying length threshold are stretched to it |
/// | `two_point_step_size` | step size adapted from two test points along the mean shift instead of CSA |
/// | `pairwise_selection` | with mirroring, only the better point of each mirrored pair is selectable |
/// | `equal_recombination_weights` | weights `1/μ` instead of log-decreasing weights |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ModuleConfig {
    pub active_update: bool,
    pub elitism: bool,
    pub mirrored_sampling: bool,
    pub orthogonal_sampling: bool,
    pub sequential_selection: bool,
    pub threshold_convergence: bool,
    pub two_point_step_size: bool,
    pub pairwise_selection: bool,
    pub equal_recombination_weights: bool,
    pub base_sampler: BaseSampler,
    pub restart_strategy: RestartStrategy,
}

impl ModuleConfig {
    pub fn digits(&self) -> [u8; 11] {
        [
            self.active_update as u8,
            self.elitism as u8,
            self.mirrored_sampling as u8,
            self.orthogonal_sampling as u8,
            self.sequential_selection as u8,
            self.threshold_convergence as u8,
            self.two_point_step_size as u8,
            self.pairwise_selection as u8,
            self.equal_recombination_weights as u8,
            self.base_sampler as u8,
            self.restart_strategy as u8,
        ]
    }

    pub fn from_digits(d: [u8; 11]) -> Result<Self> {
        for (i, (&v, &a)) in d.iter().zip(&ARITY).enumerate() {
            if v >= a {
                return Err(Error::argument(format!("slot {} ({}) out of range: {v}", i, SLOT_NAMES[i])));
            }
        }
        Ok(ModuleConfig {
            active_update: d[0] == 1,
            elitism: d[1] == 1,
            mirrored_sampling: d[2] == 1,
            orthogonal_sampling: d[3] == 1,
            sequential_selection: d[4] == 1,
            threshold_convergence: d[5] == 1,
            two_point_step_size: d[6] == 1,
            pairwise_selection: d[7] == 1,
            equal_recombination_weights: d[8] == 1,
            base_sampler: [BaseSampler::Gaussian, BaseSampler::Sobol, BaseSampler::Halton][d[9] as usize],
            restart_strategy: [RestartStrategy::None, RestartStrategy::Ipop, RestartStrategy::Bipop][d[10] as usize],
        })
    }

    /// Canonical 11-character code.
    pub fn code(&self) -> String {
        self.digits().iter().map(|&d| char::from(b'0' + d)).collect()
    }

    /// Position in canonical enumeration order (mixed radix, first slot most significant).
    pub fn index(&self) -> usize {
        self.digits()
            .iter()
            .zip(&ARITY)
            .fold(0usize, |acc, (&d, &a)| acc * a as usize + d as usize)
    }
}

impl fmt::Display for ModuleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

fn parse_digits(s: &str, allow_wildcard: bool) -> Result<[Option<u8>; 11]> {
    let chars: Vec<char> = s.trim().chars().collect();
    if chars.len() != 11 {
        return Err(Error::argument(format!("config code must have 11 characters, got {s:?}")));
    }
    let mut out = [None; 11];
    for (i, c) in chars.into_iter().enumerate() {
        out[i] = match c {
            '?' | '*' if allow_wildcard => None,
            '0'..='2' => Some(c as u8 - b'0'),
            _ => return Err(Error::argument(format!("invalid character {c:?} in code {s:?}"))),
        };
    }
    Ok(out)
}

impl FromStr for ModuleConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = parse_digits(s, false)?;
        ModuleConfig::from_digits(d.map(|v| v.unwrap_or(0)))
    }
}

/// Restricts some slots to fixed values; `None` leaves a slot free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VariantFilter {
    pub slots: [Option<u8>; 11],
}

impl VariantFilter {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn fix(mut self, slot: usize, value: u8) -> Self {
        self.slots[slot] = Some(value);
        self
    }

    pub fn matches(&self, c: &ModuleConfig) -> bool {
        self.slots.iter().zip(c.digits()).all(|(s, d)| s.is_none_or(|v| v == d))
    }
}

/// Pattern syntax: 11 characters, a digit fixes the slot, `?` or `*` leaves it free.
impl FromStr for VariantFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let slots = parse_digits(s, true)?;
        for (i, (v, &a)) in slots.iter().zip(&ARITY).enumerate() {
            if v.is_some_and(|v| v >= a) {
                return Err(Error::argument(format!("slot {} ({}) out of range in {s:?}", i, SLOT_NAMES[i])));
            }
        }
        Ok(VariantFilter { slots })
    }
}

/// All variants matching `filter`, in canonical order.
pub fn enumerate_variants(filter: Option<&VariantFilter>) -> Vec<ModuleConfig> {
    let total: usize = ARITY.iter().map(|&a| a as usize).product();
    (0..total)
        .map(|mut idx| {
            let mut d = [0u8; 11];
            for slot in (0..11).rev() {
                let a = ARITY[slot] as usize;
                d[slot] = (idx % a) as u8;
                idx /= a;
            }
            ModuleConfig::from_digits(d).expect("digits within arity")
        })
        .filter(|c| filter.is_none_or(|f| f.matches(c)))
        .collect()
}
