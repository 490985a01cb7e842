use crate::env::InputSource;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("unknown agent variant `{0}` (expected e.g. ah-ch, ah-ch+bgn, ab-cb, ah-cb, ah-cs, random)")]
pub struct VariantParseError(pub String);

/// Actor and critic inputs in the `Ax-Cy` naming, plus the belief head flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentVariant {
    /// Uniform over actions; no parameters.
    Random,
    ActorCritic {
        actor: InputSource,
        critic: InputSource,
        bgn: bool,
    },
}

impl AgentVariant {
    pub const AH_CH: AgentVariant = AgentVariant::ActorCritic {
        actor: InputSource::History,
        critic: InputSource::History,
        bgn: false,
    };
    pub const AH_CH_BGN: AgentVariant = AgentVariant::ActorCritic {
        actor: InputSource::History,
        critic: InputSource::History,
        bgn: true,
    };
    pub const AB_CB: AgentVariant = AgentVariant::ActorCritic {
        actor: InputSource::Belief,
        critic: InputSource::Belief,
        bgn: false,
    };

    pub fn bgn(self) -> bool {
        matches!(self, AgentVariant::ActorCritic { bgn: true, .. })
    }

    pub fn is_random(self) -> bool {
        self == AgentVariant::Random
    }

    /// `(actor input, critic input)`; `None` for the random agent.
    pub fn inputs(self) -> Option<(InputSource, InputSource)> {
        match self {
            AgentVariant::Random => None,
            AgentVariant::ActorCritic { actor, critic, .. } => Some((actor, critic)),
        }
    }

    /// Whether any network reads the exact belief.
    pub fn needs_belief(self) -> bool {
        match self {
            AgentVariant::Random => false,
            AgentVariant::ActorCritic { actor, critic, bgn } => {
                bgn || actor == InputSource::Belief || critic == InputSource::Belief
            }
        }
    }
}

fn letter(src: InputSource) -> char {
    match src {
        InputSource::History => 'h',
        InputSource::Belief => 'b',
        InputSource::State => 's',
    }
}

fn source(c: char) -> Option<InputSource> {
    match c {
        'h' => Some(InputSource::History),
        'b' => Some(InputSource::Belief),
        's' => Some(InputSource::State),
        _ => None,
    }
}

impl fmt::Display for AgentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentVariant::Random => f.write_str("random"),
            AgentVariant::ActorCritic { actor, critic, bgn } => {
                write!(f, "a{}-c{}", letter(*actor), letter(*critic))?;
                if *bgn {
                    f.write_str("+bgn")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for AgentVariant {
    type Err = VariantParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || VariantParseError(s.to_string());
        let lower = s.trim().to_ascii_lowercase().replace(' ', "");
        if lower == "random" {
            return Ok(AgentVariant::Random);
        }
        let (body, bgn) = match lower.strip_suffix("+bgn") {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        let chars: Vec<char> = body.chars().collect();
        match chars.as_slice() {
            ['a', x, '-', 'c', y] => Ok(AgentVariant::ActorCritic {
                actor: source(*x).ok_or_else(err)?,
                critic: source(*y).ok_or_else(err)?,
                bgn,
            }),
            _ => Err(err()),
        }
    }
}

impl Serialize for AgentVariant {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentVariant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ["ah-ch", "ah-ch+bgn", "ab-cb", "ab-cb+bgn", "ah-cb", "ah-cs", "random"] {
            let v: AgentVariant = name.parse().unwrap();
            assert_eq!(v.to_string(), name);
        }
        assert_eq!("Ah-Ch + BGN".parse::<AgentVariant>().unwrap(), AgentVariant::AH_CH_BGN);
        assert!("ax-ch".parse::<AgentVariant>().is_err());
        assert!("ah".parse::<AgentVariant>().is_err());
    }
}
