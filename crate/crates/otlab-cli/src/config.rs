//! JSON campaign configuration: a versioned schema of named scenarios
//! that lowers into runnable [`otlab::sim::Scenario`]s.

use serde::{Deserialize, Serialize};

use otlab::crepeau::{crepeau_attack_bound, CrepeauConfig};
use otlab::ech::{
    ech_alice_bound, ech_bob_bound, ech_failure_bound, AliceEchStrategy, BobEchStrategy, EchConfig,
    EchSets, OutcomeClass,
};
use otlab::ot12::{
    ot12_alice_bound, ot12_bob_bound, ot12_failure_bound, AliceOt12Strategy, BobOt12Strategy,
    Ot12Config,
};
use otlab::sim::{ChoiceDist, CrepeauEvent, Ot12Event, Scenario, ScenarioKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level campaign file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub version: u32,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    pub scenarios: Vec<ScenarioSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// How a scenario's comparison bound is chosen: the matching analytic
/// formula, a fixed number, or no bound at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundSpec {
    Named(BoundNamed),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundNamed {
    Auto,
    None,
}

impl Default for BoundSpec {
    fn default() -> Self {
        BoundSpec::Named(BoundNamed::Auto)
    }
}

/// Bob's choice bit: fixed or drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceSpec {
    Fixed(bool),
    Named(UniformChoice),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformChoice {
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchAliceSpec {
    Honest,
    SoftPreferWinA,
    HardOnlyWinA,
    BoundarySoft,
    AlternatingHardSoft,
    HalfGarbage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchBobSpec {
    Honest,
    PreferWinB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchEventSpec {
    AliceWins,
    BobWins,
    Neutral,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ot12AliceSpec {
    Honest,
    GarbageInject { garbage_count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ot12BobSpec {
    Honest,
    BothBits,
}

/// One scenario, tagged by protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Ech {
        label: String,
        alpha: f64,
        rounds_x: u32,
        n_t: usize,
        ell: u32,
        win_a: Vec<u32>,
        win_b: Vec<u32>,
        alice: EchAliceSpec,
        bob: EchBobSpec,
        event: EchEventSpec,
        #[serde(default)]
        bound: BoundSpec,
    },
    Ot12 {
        label: String,
        c: u32,
        beta: f64,
        big_n: usize,
        alpha: f64,
        rounds_x: u32,
        ell: u32,
        secrets: (bool, bool),
        choice: ChoiceSpec,
        alice: Ot12AliceSpec,
        bob: Ot12BobSpec,
        event: Ot12Event,
        #[serde(default)]
        bound: BoundSpec,
    },
    Crepeau {
        label: String,
        big_n: usize,
        s: usize,
        ell: u32,
        event: CrepeauEvent,
        #[serde(default)]
        bound: BoundSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Ech,
    Ot12,
    Crepeau,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Ech => "ech",
            Protocol::Ot12 => "ot12",
            Protocol::Crepeau => "crepeau",
        })
    }
}

impl ScenarioSpec {
    pub fn protocol(&self) -> Protocol {
        match self {
            ScenarioSpec::Ech { .. } => Protocol::Ech,
            ScenarioSpec::Ot12 { .. } => Protocol::Ot12,
            ScenarioSpec::Crepeau { .. } => Protocol::Crepeau,
        }
    }

    pub fn label(&self) -> &str {
        match self {
            ScenarioSpec::Ech { label, .. }
            | ScenarioSpec::Ot12 { label, .. }
            | ScenarioSpec::Crepeau { label, .. } => label,
        }
    }

    /// Lower into a runnable scenario plus its comparison bound.
    pub fn lower(&self) -> Result<(Scenario, Option<f64>), String> {
        match self {
            ScenarioSpec::Ech {
                label,
                alpha,
                rounds_x,
                n_t,
                ell,
                win_a,
                win_b,
                alice,
                bob,
                event,
                bound,
            } => {
                let cfg = EchConfig::new(*alpha, *rounds_x, *n_t, *ell)
                    .map_err(|e| format!("scenario {label}: {e}"))?;
                let sets = EchSets::new(*n_t, win_a.clone(), win_b.clone())
                    .map_err(|e| format!("scenario {label}: {e}"))?;
                let alice_strategy = match alice {
                    EchAliceSpec::Honest => AliceEchStrategy::honest(),
                    EchAliceSpec::SoftPreferWinA => AliceEchStrategy::soft_prefer_win_a(),
                    EchAliceSpec::HardOnlyWinA => {
                        AliceEchStrategy::hard_only_win_a(sets.win_a().to_vec())
                    }
                    EchAliceSpec::BoundarySoft => {
                        AliceEchStrategy::boundary_soft(sets.win_a().to_vec(), *alpha)
                    }
                    EchAliceSpec::AlternatingHardSoft => {
                        AliceEchStrategy::alternating_hard_soft(sets.win_a().to_vec())
                    }
                    EchAliceSpec::HalfGarbage => {
                        AliceEchStrategy::half_garbage(sets.win_a().to_vec())
                    }
                };
                let bob_strategy = match bob {
                    EchBobSpec::Honest => BobEchStrategy::Honest,
                    EchBobSpec::PreferWinB => BobEchStrategy::PreferWinB,
                };
                let event = match event {
                    EchEventSpec::AliceWins => OutcomeClass::AliceWins,
                    EchEventSpec::BobWins => OutcomeClass::BobWins,
                    EchEventSpec::Neutral => OutcomeClass::Neutral,
                    EchEventSpec::Aborted => OutcomeClass::Aborted,
                };
                let auto = match event {
                    OutcomeClass::Aborted => Some(ech_failure_bound(&cfg).value),
                    OutcomeClass::BobWins => Some(ech_bob_bound(&cfg, sets.win_b().len())),
                    OutcomeClass::AliceWins => Some(ech_alice_bound(sets.win_a().len(), *rounds_x)),
                    OutcomeClass::Neutral => None,
                };
                let bound = resolve_bound(*bound, auto);
                Ok((
                    Scenario {
                        label: label.clone(),
                        kind: ScenarioKind::Ech {
                            cfg,
                            sets,
                            alice: alice_strategy,
                            bob: bob_strategy,
                            event,
                        },
                    },
                    bound,
                ))
            }
            ScenarioSpec::Ot12 {
                label,
                c,
                beta,
                big_n,
                alpha,
                rounds_x,
                ell,
                secrets,
                choice,
                alice,
                bob,
                event,
                bound,
            } => {
                let cfg = Ot12Config::new(*c, *beta, *big_n, *alpha, *rounds_x, *ell)
                    .map_err(|e| format!("scenario {label}: {e}"))?;
                let alice_strategy = match alice {
                    Ot12AliceSpec::Honest => AliceOt12Strategy::honest(),
                    Ot12AliceSpec::GarbageInject { garbage_count } => {
                        AliceOt12Strategy::garbage_inject(*garbage_count)
                    }
                };
                let bob_strategy = match bob {
                    Ot12BobSpec::Honest => BobOt12Strategy::Honest,
                    Ot12BobSpec::BothBits => BobOt12Strategy::BothBits,
                };
                let choice = match choice {
                    ChoiceSpec::Fixed(b) => ChoiceDist::Fixed(*b),
                    ChoiceSpec::Named(UniformChoice::Uniform) => ChoiceDist::Uniform,
                };
                let auto = match event {
                    Ot12Event::Abort => Some(ot12_failure_bound(&cfg).value),
                    Ot12Event::AliceLeak => Some(ot12_alice_bound(&cfg)),
                    Ot12Event::BobBoth => Some(ot12_bob_bound(&cfg).value),
                    Ot12Event::CorrectnessFailure => Some(0.0),
                };
                let bound = resolve_bound(*bound, auto);
                Ok((
                    Scenario {
                        label: label.clone(),
                        kind: ScenarioKind::Ot12 {
                            cfg,
                            secrets: *secrets,
                            choice,
                            alice: alice_strategy,
                            bob: bob_strategy,
                            event: *event,
                        },
                    },
                    bound,
                ))
            }
            ScenarioSpec::Crepeau {
                label,
                big_n,
                s,
                ell,
                event,
                bound,
            } => {
                let cfg = CrepeauConfig::new(*big_n, *s, *ell)
                    .map_err(|e| format!("scenario {label}: {e}"))?;
                let auto = match event {
                    CrepeauEvent::Abort => None,
                    CrepeauEvent::AliceIdentified => Some(crepeau_attack_bound(*s)),
                };
                let bound = resolve_bound(*bound, auto);
                Ok((
                    Scenario {
                        label: label.clone(),
                        kind: ScenarioKind::Crepeau { cfg, event: *event },
                    },
                    bound,
                ))
            }
        }
    }
}

fn resolve_bound(spec: BoundSpec, auto: Option<f64>) -> Option<f64> {
    match spec {
        BoundSpec::Named(BoundNamed::Auto) => auto,
        BoundSpec::Named(BoundNamed::None) => None,
        BoundSpec::Fixed(v) => Some(v),
    }
}

/// Validate the campaign shape; returns a message naming the offending
/// field on failure.
pub fn validate_campaign(cfg: &CampaignConfig) -> Result<(), String> {
    if cfg.version != SCHEMA_VERSION {
        return Err(format!(
            "version: expected {SCHEMA_VERSION}, got {}",
            cfg.version
        ));
    }
    if cfg.trials == 0 {
        return Err("trials: must be at least 1".into());
    }
    if cfg.scenarios.is_empty() {
        return Err("scenarios: at least one scenario is required".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_campaign() -> CampaignConfig {
        CampaignConfig {
            version: 1,
            trials: 100,
            master_seed: 7,
            output: Some(OutputSpec {
                path: "out.csv".into(),
                format: OutputFormat::Csv,
            }),
            scenarios: vec![
                ScenarioSpec::Crepeau {
                    label: "attack".into(),
                    big_n: 300,
                    s: 5,
                    ell: 32,
                    event: CrepeauEvent::AliceIdentified,
                    bound: BoundSpec::Named(BoundNamed::Auto),
                },
                ScenarioSpec::Ot12 {
                    label: "honest".into(),
                    c: 3,
                    beta: 3.0,
                    big_n: 200,
                    alpha: 0.45,
                    rounds_x: 2,
                    ell: 32,
                    secrets: (true, false),
                    choice: ChoiceSpec::Named(UniformChoice::Uniform),
                    alice: Ot12AliceSpec::Honest,
                    bob: Ot12BobSpec::Honest,
                    event: Ot12Event::CorrectnessFailure,
                    bound: BoundSpec::Fixed(0.0),
                },
                ScenarioSpec::Ech {
                    label: "prefer-b".into(),
                    alpha: 0.4,
                    rounds_x: 2,
                    n_t: 100,
                    ell: 8,
                    win_a: vec![11, 12],
                    win_b: (1..=10).collect(),
                    alice: EchAliceSpec::Honest,
                    bob: EchBobSpec::PreferWinB,
                    event: EchEventSpec::BobWins,
                    bound: BoundSpec::Named(BoundNamed::Auto),
                },
            ],
        }
    }

    #[test]
    fn campaign_round_trips_through_json() {
        let cfg = sample_campaign();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: CampaignConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn lowering_produces_bounds() {
        let cfg = sample_campaign();
        let (_, bound) = cfg.scenarios[0].lower().unwrap();
        assert!((bound.unwrap() - (1.0 - (2.0f64 / 3.0).powi(5))).abs() < 1e-12);
        let (_, bound) = cfg.scenarios[1].lower().unwrap();
        assert_eq!(bound, Some(0.0));
        let (_, bound) = cfg.scenarios[2].lower().unwrap();
        assert!((bound.unwrap() - 10.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn validation_messages_name_the_field() {
        let mut cfg = sample_campaign();
        cfg.version = 2;
        assert!(validate_campaign(&cfg).unwrap_err().starts_with("version"));
        let mut cfg = sample_campaign();
        cfg.trials = 0;
        assert!(validate_campaign(&cfg).unwrap_err().starts_with("trials"));
        let mut cfg = sample_campaign();
        cfg.scenarios.clear();
        assert!(validate_campaign(&cfg)
            .unwrap_err()
            .starts_with("scenarios"));
    }

    #[test]
    fn bad_scenario_parameters_name_the_scenario() {
        let spec = ScenarioSpec::Crepeau {
            label: "bad".into(),
            big_n: 100, // not a multiple of 3
            s: 0,
            ell: 32,
            event: CrepeauEvent::Abort,
            bound: BoundSpec::Named(BoundNamed::None),
        };
        let err = match spec.lower() {
            Ok(_) => panic!("expected a config error"),
            Err(e) => e,
        };
        assert!(err.contains("bad"), "{err}");
        assert!(err.contains("multiple of 3"), "{err}");
    }
}
