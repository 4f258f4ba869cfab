//! The social-signal catalog: twelve named signals rated per speaker role,
//! with role restrictions (hurriedness is provider-only; sadness and
//! emotional distress are patient-only), giving 21 ratable role-signal pairs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speaker role a signal is rated for. Distinct from
/// [`crate::corpus::SpeakerRole`]: third-party speakers are never rated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Provider,
    Patient,
}

impl Role {
    pub fn token(self) -> &'static str {
        match self {
            Role::Provider => "provider",
            Role::Patient => "patient",
        }
    }

    pub fn parse_token(s: &str) -> Result<Role> {
        match s {
            "provider" => Ok(Role::Provider),
            "patient" => Ok(Role::Patient),
            other => Err(Error::invalid(format!("unknown role token \"{other}\""))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The twelve rated signal names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Dominance,
    Attentiveness,
    Warmth,
    Engagement,
    Empathy,
    Respect,
    Interactivity,
    Irritation,
    Nervousness,
    Hurriedness,
    Sadness,
    Distress,
}

impl Signal {
    pub const ALL: [Signal; 12] = [
        Signal::Dominance,
        Signal::Attentiveness,
        Signal::Warmth,
        Signal::Engagement,
        Signal::Empathy,
        Signal::Respect,
        Signal::Interactivity,
        Signal::Irritation,
        Signal::Nervousness,
        Signal::Hurriedness,
        Signal::Sadness,
        Signal::Distress,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Signal::Dominance => "dominance",
            Signal::Attentiveness => "attentiveness",
            Signal::Warmth => "warmth",
            Signal::Engagement => "engagement",
            Signal::Empathy => "empathy",
            Signal::Respect => "respect",
            Signal::Interactivity => "interactivity",
            Signal::Irritation => "irritation",
            Signal::Nervousness => "nervousness",
            Signal::Hurriedness => "hurriedness",
            Signal::Sadness => "sadness",
            Signal::Distress => "distress",
        }
    }

    pub fn parse_token(s: &str) -> Result<Signal> {
        Signal::ALL
            .iter()
            .copied()
            .find(|sig| sig.token() == s)
            .ok_or_else(|| Error::UnknownSignal(s.to_string()))
    }

    /// Role restriction: which roles this signal may be rated for.
    pub fn allows(self, role: Role) -> bool {
        match self {
            Signal::Hurriedness => role == Role::Provider,
            Signal::Sadness | Signal::Distress => role == Role::Patient,
            _ => true,
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One ratable role-signal pair, e.g. provider warmth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId {
    signal: Signal,
    role: Role,
}

impl SignalId {
    /// Validating constructor: rejects pairs outside the catalog.
    pub fn new(signal: Signal, role: Role) -> Result<SignalId> {
        if signal.allows(role) {
            Ok(SignalId { signal, role })
        } else {
            Err(Error::SignalRole {
                signal: signal.token().to_string(),
                role: role.token().to_string(),
            })
        }
    }

    const fn of(signal: Signal, role: Role) -> SignalId {
        SignalId { signal, role }
    }

    pub fn signal(&self) -> Signal {
        self.signal
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Machine token used in file formats, e.g. "provider_warmth".
    pub fn token(&self) -> String {
        format!("{}_{}", self.role.token(), self.signal.token())
    }

    /// Human label used in reports, e.g. "provider warmth".
    pub fn label(&self) -> String {
        format!("{} {}", self.role.token(), self.signal.token())
    }

    pub fn parse_token(s: &str) -> Result<SignalId> {
        let (role, signal) = s
            .split_once('_')
            .ok_or_else(|| Error::UnknownSignal(s.to_string()))?;
        SignalId::new(Signal::parse_token(signal)?, Role::parse_token(role)?)
    }

    /// Parse from separate signal and role tokens (the ratings CSV and
    /// predictions JSONL carry them as two fields).
    pub fn parse_parts(signal: &str, role: &str) -> Result<SignalId> {
        SignalId::new(Signal::parse_token(signal)?, Role::parse_token(role)?)
    }

    /// Stable position in [`catalog`], used to derive per-signal RNG streams.
    pub fn catalog_index(&self) -> usize {
        catalog()
            .iter()
            .position(|s| s == self)
            .expect("catalog covers every constructible SignalId")
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The 21 ratable role-signal pairs in fixed order: signals in declaration
/// order, provider before patient where both roles apply.
pub fn catalog() -> &'static [SignalId; 21] {
    const CATALOG: [SignalId; 21] = [
        SignalId::of(Signal::Dominance, Role::Provider),
        SignalId::of(Signal::Dominance, Role::Patient),
        SignalId::of(Signal::Attentiveness, Role::Provider),
        SignalId::of(Signal::Attentiveness, Role::Patient),
        SignalId::of(Signal::Warmth, Role::Provider),
        SignalId::of(Signal::Warmth, Role::Patient),
        SignalId::of(Signal::Engagement, Role::Provider),
        SignalId::of(Signal::Engagement, Role::Patient),
        SignalId::of(Signal::Empathy, Role::Provider),
        SignalId::of(Signal::Empathy, Role::Patient),
        SignalId::of(Signal::Respect, Role::Provider),
        SignalId::of(Signal::Respect, Role::Patient),
        SignalId::of(Signal::Interactivity, Role::Provider),
        SignalId::of(Signal::Interactivity, Role::Patient),
        SignalId::of(Signal::Irritation, Role::Provider),
        SignalId::of(Signal::Irritation, Role::Patient),
        SignalId::of(Signal::Nervousness, Role::Provider),
        SignalId::of(Signal::Nervousness, Role::Patient),
        SignalId::of(Signal::Hurriedness, Role::Provider),
        SignalId::of(Signal::Sadness, Role::Patient),
        SignalId::of(Signal::Distress, Role::Patient),
    ];
    &CATALOG
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_21_pairs() {
        assert_eq!(catalog().len(), 21);
        let mut seen = std::collections::HashSet::new();
        for id in catalog() {
            assert!(id.signal().allows(id.role()));
            assert!(seen.insert(*id), "duplicate catalog entry {id}");
        }
    }

    #[test]
    fn role_restrictions() {
        assert!(SignalId::new(Signal::Hurriedness, Role::Patient).is_err());
        assert!(SignalId::new(Signal::Sadness, Role::Provider).is_err());
        assert!(SignalId::new(Signal::Distress, Role::Provider).is_err());
        assert!(SignalId::new(Signal::Hurriedness, Role::Provider).is_ok());
        assert!(SignalId::new(Signal::Warmth, Role::Patient).is_ok());
    }

    #[test]
    fn token_round_trip() {
        for id in catalog() {
            assert_eq!(SignalId::parse_token(&id.token()).unwrap(), *id);
        }
    }

    #[test]
    fn catalog_index_is_stable() {
        for (i, id) in catalog().iter().enumerate() {
            assert_eq!(id.catalog_index(), i);
        }
    }
}
