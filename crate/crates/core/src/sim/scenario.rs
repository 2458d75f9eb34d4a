use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::oram::{OramConfig, Variant};
use crate::token::PeriodPolicy;

/// A card, named by household id and its index within the household.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CardRef {
    pub household: u32,
    pub index: usize,
}

impl fmt::Display for CardRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.household, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Register {
        budget: u16,
        cards: usize,
    },
    Spend {
        card: CardRef,
        price: u16,
        epsilon: u32,
        vendor: String,
    },
    Reclaim {
        vendor: String,
        epsilon: u32,
    },
    Audit {
        epsilon: u32,
    },
    Snapshot {
        name: String,
    },
    Restore {
        name: String,
    },
    /// Period stamped into records of later registrations.
    Period {
        period: u16,
    },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Register { budget, cards } => write!(f, "register {budget} {cards}"),
            Action::Spend { card, price, epsilon, vendor } => write!(f, "spend {card} {price} {epsilon} {vendor}"),
            Action::Reclaim { vendor, epsilon } => write!(f, "reclaim {vendor} {epsilon}"),
            Action::Audit { epsilon } => write!(f, "audit {epsilon}"),
            Action::Snapshot { name } => write!(f, "snapshot {name}"),
            Action::Restore { name } => write!(f, "restore {name}"),
            Action::Period { period } => write!(f, "period {period}"),
        }
    }
}

/// A replayable run: settings followed by actions, one per line.
///
/// ```text
/// seed 7
/// oram recursive 256
/// policy add 50
/// halt-on-error
/// register 500 2
/// spend 0.0 30 1 bakery
/// reclaim bakery 1
/// audit 1
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub seed: u64,
    pub oram: OramConfig,
    pub policy: Option<PeriodPolicy>,
    pub halt_on_error: bool,
    pub actions: Vec<Action>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self { seed: 0, oram: OramConfig::new(Variant::Recursive, 256), policy: None, halt_on_error: false, actions: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

fn field<T: std::str::FromStr>(words: &[&str], i: usize, what: &str) -> Result<T, String> {
    let word = words.get(i).ok_or_else(|| format!("missing {what}"))?;
    word.parse().map_err(|_| format!("bad {what} `{word}`"))
}

fn card_ref(word: &str) -> Result<CardRef, String> {
    let (h, i) = word.split_once('.').ok_or_else(|| format!("card `{word}` is not <household>.<index>"))?;
    Ok(CardRef {
        household: h.parse().map_err(|_| format!("bad household in `{word}`"))?,
        index: i.parse().map_err(|_| format!("bad card index in `{word}`"))?,
    })
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            scenario.parse_line(line).map_err(|message| ScenarioError { line: n + 1, message })?;
        }
        Ok(scenario)
    }

    fn parse_line(&mut self, line: &str) -> Result<(), String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        let arity = |n: usize| {
            if words.len() == n {
                Ok(())
            } else {
                Err(format!("`{}` takes {} argument(s)", words[0], n - 1))
            }
        };
        let setting = words[0];
        let is_setting = matches!(setting, "seed" | "oram" | "policy" | "halt-on-error");
        if is_setting && !self.actions.is_empty() {
            return Err(format!("`{setting}` must come before the first action"));
        }
        match setting {
            "seed" => {
                arity(2)?;
                self.seed = field(&words, 1, "seed")?;
            }
            "oram" => {
                arity(3)?;
                let variant: Variant = field(&words, 1, "variant")?;
                let oram = OramConfig::new(variant, field(&words, 2, "capacity")?);
                oram.validate().map_err(|e| e.to_string())?;
                self.oram = oram;
            }
            "policy" => {
                arity(3)?;
                let amount = field(&words, 2, "allowance")?;
                self.policy = Some(match words[1] {
                    "add" => PeriodPolicy::AddAllowance(amount),
                    "reset" => PeriodPolicy::ResetTo(amount),
                    other => return Err(format!("unknown policy `{other}`")),
                });
            }
            "halt-on-error" => {
                arity(1)?;
                self.halt_on_error = true;
            }
            "register" => {
                arity(3)?;
                let cards = field(&words, 2, "card count")?;
                if !(1..=255).contains(&cards) {
                    return Err("a household has 1 to 255 cards".into());
                }
                self.actions.push(Action::Register { budget: field(&words, 1, "budget")?, cards });
            }
            "spend" => {
                arity(5)?;
                self.actions.push(Action::Spend {
                    card: card_ref(words[1])?,
                    price: field(&words, 2, "price")?,
                    epsilon: field(&words, 3, "period")?,
                    vendor: words[4].to_owned(),
                });
            }
            "reclaim" => {
                arity(3)?;
                self.actions.push(Action::Reclaim { vendor: words[1].to_owned(), epsilon: field(&words, 2, "period")? });
            }
            "audit" => {
                arity(2)?;
                self.actions.push(Action::Audit { epsilon: field(&words, 1, "period")? });
            }
            "snapshot" | "restore" => {
                arity(2)?;
                let name = words[1].to_owned();
                self.actions.push(if setting == "snapshot" { Action::Snapshot { name } } else { Action::Restore { name } });
            }
            "period" => {
                arity(2)?;
                self.actions.push(Action::Period { period: field(&words, 1, "period")? });
            }
            other => return Err(format!("unknown directive `{other}`")),
        }
        Ok(())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "oram {} {}", self.oram.variant, self.oram.capacity)?;
        match self.policy {
            Some(PeriodPolicy::AddAllowance(a)) => writeln!(f, "policy add {a}")?,
            Some(PeriodPolicy::ResetTo(a)) => writeln!(f, "policy reset {a}")?,
            None => {}
        }
        if self.halt_on_error {
            writeln!(f, "halt-on-error")?;
        }
        for action in &self.actions {
            writeln!(f, "{action}")?;
        }
        Ok(())
    }
}

/// Size limits for generated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioLimits {
    pub households: u32,
    pub cards: usize,
    pub spends: usize,
    pub vendors: usize,
    pub periods: u32,
}

impl Default for ScenarioLimits {
    fn default() -> Self {
        Self { households: 256, cards: 4, spends: 1000, vendors: 4, periods: 3 }
    }
}

/// Log-uniform draw from `1..=max`.
fn log_uniform(rng: &mut ChaCha20Rng, max: u32) -> u32 {
    let x = rng.gen_range(0.0..=f64::from(max).ln());
    (x.exp().round() as u32).clamp(1, max)
}

impl Scenario {
    /// A random scenario within `limits`. Sizes are drawn log-uniformly, so
    /// small and large runs are both common. Reclaims and audits are
    /// interleaved with the spends and every period is settled at the end.
    pub fn random(seed: u64, limits: ScenarioLimits) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let households = log_uniform(&mut rng, limits.households);
        let spends = log_uniform(&mut rng, limits.spends as u32) as usize;
        Self::generate(&mut rng, seed, households, spends, limits)
    }

    /// The largest scenario `limits` allow.
    pub fn largest(seed: u64, limits: ScenarioLimits) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Self::generate(&mut rng, seed, limits.households, limits.spends, limits)
    }

    fn generate(rng: &mut ChaCha20Rng, seed: u64, households: u32, spends: usize, limits: ScenarioLimits) -> Self {
        let mut actions = Vec::new();
        let mut cards = Vec::with_capacity(households as usize);
        for _ in 0..households {
            let n = rng.gen_range(1..=limits.cards);
            cards.push(n);
            actions.push(Action::Register { budget: rng.gen_range(1..=500), cards: n });
        }
        let vendor = |rng: &mut ChaCha20Rng| format!("v{}", rng.gen_range(0..limits.vendors));
        for _ in 0..spends {
            let household = rng.gen_range(0..households);
            let card = CardRef { household, index: rng.gen_range(0..cards[household as usize]) };
            let epsilon = rng.gen_range(1..=limits.periods);
            actions.push(Action::Spend { card, price: rng.gen_range(1..=120), epsilon, vendor: vendor(rng) });
            if rng.gen_ratio(1, 50) {
                actions.push(Action::Reclaim { vendor: vendor(rng), epsilon });
            }
            if rng.gen_ratio(1, 100) {
                actions.push(Action::Audit { epsilon });
            }
        }
        for epsilon in 1..=limits.periods {
            for v in 0..limits.vendors {
                actions.push(Action::Reclaim { vendor: format!("v{v}"), epsilon });
            }
            actions.push(Action::Audit { epsilon });
        }
        Scenario {
            seed,
            oram: OramConfig::new(Variant::Recursive, limits.households.max(households)),
            policy: None,
            halt_on_error: false,
            actions,
        }
    }
}
