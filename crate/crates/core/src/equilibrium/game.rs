use num_rational::Ratio;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::bayes::{BayesianGame, Rational, TypeSpec};
use super::nash::SingleBranchGame;
use crate::error::{Error, Result};
use crate::model::{BaselinePriority, Branch, BranchId, BranchQuota, Economy};
use crate::policies::{BradsoPolicy, PolicyKind, TierAssignment};

/// JSON description of a single-branch game.
///
/// ```json
/// {
///   "branch": "b", "base_only": 1, "bradso_cap": 1,
///   "cadets": [
///     {"id": "i_1", "types": [
///       {"name": "u", "probability": "1/2", "base": 10, "increased": 0, "unmatched": 8},
///       {"name": "v", "probability": "1/2", "base": 10, "increased": 8, "unmatched": 0}]},
///     {"id": "i_2", "willing": true}
///   ]
/// }
/// ```
///
/// Cadets are listed in priority order. `"willing": w` is shorthand for one
/// type with ordinal utilities. Tiered policies take `"tier_counts"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default = "default_branch")]
    pub branch: String,
    pub base_only: usize,
    pub bradso_cap: usize,
    #[serde(default)]
    pub policy: Option<String>,
    #[serde(default)]
    pub tier_counts: Option<Vec<usize>>,
    pub cadets: Vec<CadetSpec>,
}

fn default_branch() -> String {
    "b".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CadetSpec {
    pub id: String,
    #[serde(default)]
    pub willing: Option<bool>,
    #[serde(default)]
    pub types: Option<Vec<TypeEntry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub probability: Number,
    pub base: Number,
    pub increased: Number,
    pub unmatched: Number,
}

/// An integer or a `"p/q"` string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    fn value(&self, what: &str) -> Result<Rational> {
        match self {
            Number::Int(n) => Ok(Ratio::from_integer(*n)),
            Number::Text(s) => s
                .trim()
                .parse::<Rational>()
                .map_err(|e| Error::Config(format!("{what}: cannot parse `{s}` as a rational ({e})"))),
        }
    }
}

/// A parsed game: complete information when every cadet has one type.
#[derive(Clone, Debug)]
pub enum Game {
    Complete(SingleBranchGame),
    Bayesian(BayesianGame),
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn economy(&self) -> Result<Economy> {
        let n = self.cadets.len();
        let priority = BaselinePriority::identity(n);
        let b = BranchId(0);
        let kind: PolicyKind = self.policy.as_deref().unwrap_or("ultimate").parse()?;
        let tiers = match &self.tier_counts {
            Some(c) => Some(TierAssignment::from_counts(b, &priority, c)?),
            None => None,
        };
        let policy = BradsoPolicy::build(kind, b, &priority, tiers.as_ref())?;
        let econ = Economy::new(
            self.cadets.iter().map(|c| c.id.clone()).collect(),
            vec![Branch {
                name: self.branch.clone(),
                quota: BranchQuota::new(self.base_only + self.bradso_cap, self.bradso_cap)?,
            }],
            vec![priority],
            vec![policy],
        )?;
        match tiers {
            Some(t) => econ.with_tiers(vec![t]),
            None => Ok(econ),
        }
    }

    pub fn types(&self) -> Result<Vec<Vec<TypeSpec>>> {
        self.cadets
            .iter()
            .map(|c| match (&c.willing, &c.types) {
                (Some(w), None) => {
                    let (inc, unm) = if *w { (1, 0) } else { (0, 1) };
                    Ok(vec![TypeSpec {
                        name: c.id.clone(),
                        probability: Rational::one(),
                        base: Ratio::from_integer(2),
                        increased: Ratio::from_integer(inc),
                        unmatched: Ratio::from_integer(unm),
                    }])
                }
                (None, Some(ts)) => ts
                    .iter()
                    .enumerate()
                    .map(|(k, t)| {
                        let what = format!("cadet `{}` type {k}", c.id);
                        Ok(TypeSpec {
                            name: t.name.clone().unwrap_or_else(|| format!("type{}", k + 1)),
                            probability: t.probability.value(&what)?,
                            base: t.base.value(&what)?,
                            increased: t.increased.value(&what)?,
                            unmatched: t.unmatched.value(&what)?,
                        })
                    })
                    .collect(),
                _ => Err(Error::Config(format!(
                    "cadet `{}` needs exactly one of `willing` or `types`",
                    c.id
                ))),
            })
            .collect()
    }

    pub fn build(&self) -> Result<Game> {
        let econ = self.economy()?;
        let types = self.types()?;
        let bayes = BayesianGame::new(econ.clone(), types)?;
        if !bayes.is_degenerate() {
            return Ok(Game::Bayesian(bayes));
        }
        let prefs = bayes
            .types()
            .iter()
            .map(|ts| ts[0].preference(BranchId(0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Game::Complete(SingleBranchGame::new(econ, prefs)?))
    }
}
