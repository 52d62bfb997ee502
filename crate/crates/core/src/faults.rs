//! Joint-fault scenarios and the per-step mask that makes a faulted joint
//! ignore its commands.
//!
//! A non-functional joint holds the value it had when the non-functional
//! interval began. Joint indices are 0-based over the nine controlled joints
//! (seven arm joints, then the two fingers), so the arm's third joint is
//! index 2.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seven arm joints plus two finger extensions.
pub const CONTROLLED_JOINTS: usize = 9;

/// Default probability that an intermittent joint works on a given step.
pub const DEFAULT_P_FUNCTIONAL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FaultScenario {
    #[default]
    NoFault,
    PermanentBroken {
        joint: usize,
    },
    Intermittent {
        joint: usize,
        p_functional: f64,
    },
    WorksFirstHalf {
        joint: usize,
    },
    WorksSecondHalf {
        joint: usize,
    },
}

impl FaultScenario {
    pub fn joint(&self) -> Option<usize> {
        match *self {
            FaultScenario::NoFault => None,
            FaultScenario::PermanentBroken { joint }
            | FaultScenario::Intermittent { joint, .. }
            | FaultScenario::WorksFirstHalf { joint }
            | FaultScenario::WorksSecondHalf { joint } => Some(joint),
        }
    }

    /// Snake-case name used in reports and logs.
    pub fn label(&self) -> &'static str {
        match self {
            FaultScenario::NoFault => "no_fault",
            FaultScenario::PermanentBroken { .. } => "permanent_broken",
            FaultScenario::Intermittent { .. } => "intermittent",
            FaultScenario::WorksFirstHalf { .. } => "works_first_half",
            FaultScenario::WorksSecondHalf { .. } => "works_second_half",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(joint) = self.joint() {
            if joint >= CONTROLLED_JOINTS {
                return Err(Error::JointIndex {
                    index: joint,
                    count: CONTROLLED_JOINTS,
                });
            }
        }
        if let FaultScenario::Intermittent { p_functional, .. } = *self {
            if !(0.0..=1.0).contains(&p_functional) {
                return Err(Error::FaultSpec(format!(
                    "p_functional {} outside [0, 1]",
                    p_functional
                )));
            }
        }
        Ok(())
    }

    /// The five evaluation scenarios, all faulting `joint`.
    pub fn evaluation_suite(joint: usize) -> [FaultScenario; 5] {
        [
            FaultScenario::NoFault,
            FaultScenario::PermanentBroken { joint },
            FaultScenario::Intermittent {
                joint,
                p_functional: DEFAULT_P_FUNCTIONAL,
            },
            FaultScenario::WorksFirstHalf { joint },
            FaultScenario::WorksSecondHalf { joint },
        ]
    }
}

impl fmt::Display for FaultScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FaultScenario::NoFault => write!(f, "none"),
            FaultScenario::PermanentBroken { joint } => write!(f, "broken:{joint}"),
            FaultScenario::Intermittent {
                joint,
                p_functional,
            } => write!(f, "intermittent:{joint}:{p_functional}"),
            FaultScenario::WorksFirstHalf { joint } => write!(f, "works_first_half:{joint}"),
            FaultScenario::WorksSecondHalf { joint } => write!(f, "works_second_half:{joint}"),
        }
    }
}

impl FromStr for FaultScenario {
    type Err = Error;

    /// `none | broken:J | intermittent:J[:P] | works_first_half:J | works_second_half:J`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::FaultSpec(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let joint = |i: usize| -> Result<usize> {
            parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        let scenario = match (parts[0], parts.len()) {
            ("none", 1) => FaultScenario::NoFault,
            ("broken", 2) => FaultScenario::PermanentBroken { joint: joint(1)? },
            ("intermittent", 2) => FaultScenario::Intermittent {
                joint: joint(1)?,
                p_functional: DEFAULT_P_FUNCTIONAL,
            },
            ("intermittent", 3) => FaultScenario::Intermittent {
                joint: joint(1)?,
                p_functional: parts[2].parse().map_err(|_| bad())?,
            },
            ("works_first_half", 2) => FaultScenario::WorksFirstHalf { joint: joint(1)? },
            ("works_second_half", 2) => FaultScenario::WorksSecondHalf { joint: joint(1)? },
            _ => return Err(bad()),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Whether `joint` follows its command at `step` of an episode of `horizon`
/// steps. Only the intermittent scenario consumes randomness, one draw per
/// call for the faulted joint.
pub fn is_functional<R: Rng + ?Sized>(
    scenario: &FaultScenario,
    joint: usize,
    step: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<bool> {
    if joint >= CONTROLLED_JOINTS {
        return Err(Error::JointIndex {
            index: joint,
            count: CONTROLLED_JOINTS,
        });
    }
    if scenario.joint() != Some(joint) {
        return Ok(true);
    }
    Ok(match *scenario {
        FaultScenario::NoFault => true,
        FaultScenario::PermanentBroken { .. } => false,
        FaultScenario::Intermittent { p_functional, .. } => rng.random::<f64>() < p_functional,
        // `step < horizon / 2` without integer truncation.
        FaultScenario::WorksFirstHalf { .. } => 2 * step < horizon,
        FaultScenario::WorksSecondHalf { .. } => 2 * step >= horizon,
    })
}

/// Per-episode fault bookkeeping, owned by one environment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultState {
    pub scenario: FaultScenario,
    /// Held value of the faulted joint during the current non-functional
    /// interval; `None` while the joint works.
    pub frozen_value: Option<f64>,
    rng: ChaCha8Rng,
}

impl FaultState {
    pub fn new(scenario: FaultScenario, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Keep the fault draws on their own stream, apart from any other
        // consumer seeded from the same value.
        rng.set_stream(0xfa17);
        Ok(FaultState {
            scenario,
            frozen_value: None,
            rng,
        })
    }

    pub fn is_functional(&mut self, joint: usize, step: usize, horizon: usize) -> Result<bool> {
        is_functional(&self.scenario, joint, step, horizon, &mut self.rng)
    }
}

/// Replaces the targets of non-functional joints with the value held since
/// the start of their current non-functional interval.
pub fn apply_fault_mask(
    targets: &[f64; CONTROLLED_JOINTS],
    current: &[f64; CONTROLLED_JOINTS],
    state: &mut FaultState,
    step: usize,
    horizon: usize,
) -> Result<[f64; CONTROLLED_JOINTS]> {
    let mut out = *targets;
    let Some(joint) = state.scenario.joint() else {
        return Ok(out);
    };
    if state.is_functional(joint, step, horizon)? {
        state.frozen_value = None;
    } else {
        let held = *state.frozen_value.get_or_insert(current[joint]);
        out[joint] = held;
    }
    Ok(out)
}

/// Draws training-time scenarios: uniformly one of no fault, a permanently
/// broken joint, or an intermittent joint, with the joint drawn uniformly
/// from `joints`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSampler {
    pub joints: Vec<usize>,
    pub p_functional: f64,
}

impl Default for ScenarioSampler {
    fn default() -> Self {
        ScenarioSampler {
            joints: (0..7).collect(),
            p_functional: DEFAULT_P_FUNCTIONAL,
        }
    }
}

impl ScenarioSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FaultScenario {
        let kind = rng.random_range(0..3u32);
        let joint = if self.joints.is_empty() {
            0
        } else {
            self.joints[rng.random_range(0..self.joints.len())]
        };
        match kind {
            0 => FaultScenario::NoFault,
            1 if !self.joints.is_empty() => FaultScenario::PermanentBroken { joint },
            2 if !self.joints.is_empty() => FaultScenario::Intermittent {
                joint,
                p_functional: self.p_functional,
            },
            _ => FaultScenario::NoFault,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn no_fault_is_always_functional() {
        let mut r = rng();
        for joint in 0..CONTROLLED_JOINTS {
            for step in [0, 10, 499] {
                assert!(is_functional(&FaultScenario::NoFault, joint, step, 500, &mut r).unwrap());
            }
        }
    }

    #[test]
    fn permanent_break_covers_whole_episode() {
        let s = FaultScenario::PermanentBroken { joint: 3 };
        let mut r = rng();
        assert!(!is_functional(&s, 3, 0, 500, &mut r).unwrap());
        assert!(!is_functional(&s, 3, 499, 500, &mut r).unwrap());
        assert!(is_functional(&s, 4, 0, 500, &mut r).unwrap());
    }

    #[test]
    fn half_boundaries() {
        let mut r = rng();
        let second = FaultScenario::WorksSecondHalf { joint: 3 };
        let first = FaultScenario::WorksFirstHalf { joint: 3 };
        assert!(!is_functional(&second, 3, 249, 500, &mut r).unwrap());
        assert!(is_functional(&second, 3, 250, 500, &mut r).unwrap());
        assert!(is_functional(&first, 3, 249, 500, &mut r).unwrap());
        assert!(!is_functional(&first, 3, 250, 500, &mut r).unwrap());
        // Odd horizon: the half point is 2.5, so step 2 is still in the first half.
        assert!(is_functional(&first, 3, 2, 5, &mut r).unwrap());
        assert!(!is_functional(&first, 3, 3, 5, &mut r).unwrap());
    }

    #[test]
    fn out_of_range_joint() {
        let mut r = rng();
        assert!(matches!(
            is_functional(&FaultScenario::NoFault, 9, 0, 10, &mut r),
            Err(Error::JointIndex { index: 9, .. })
        ));
        assert!(FaultState::new(FaultScenario::PermanentBroken { joint: 12 }, 0).is_err());
    }

    #[test]
    fn mask_holds_onset_value_and_releases() {
        let targets = [0.5; CONTROLLED_JOINTS];
        let mut current = [0.0; CONTROLLED_JOINTS];
        current[2] = -0.155;
        let mut state = FaultState::new(FaultScenario::PermanentBroken { joint: 2 }, 1).unwrap();
        for step in 0..5 {
            let out = apply_fault_mask(&targets, &current, &mut state, step, 10).unwrap();
            assert_eq!(out[2], -0.155);
            assert_eq!(out[3], 0.5);
            // The held value does not drift with later readings.
            current[2] += 0.01;
        }

        let mut state = FaultState::new(FaultScenario::WorksSecondHalf { joint: 2 }, 1).unwrap();
        let out = apply_fault_mask(&targets, &current, &mut state, 4, 10).unwrap();
        assert_eq!(out[2], current[2]);
        let out = apply_fault_mask(&targets, &current, &mut state, 5, 10).unwrap();
        assert_eq!(out[2], 0.5);
        assert_eq!(state.frozen_value, None);
    }

    #[test]
    fn all_functional_passes_through() {
        let targets = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.01, 0.02];
        let mut state = FaultState::new(FaultScenario::NoFault, 3).unwrap();
        let out = apply_fault_mask(&targets, &[0.0; 9], &mut state, 0, 10).unwrap();
        assert_eq!(out, targets);
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "none",
            "broken:2",
            "intermittent:4:0.25",
            "works_first_half:0",
            "works_second_half:8",
        ] {
            let parsed: FaultScenario = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        let default_p: FaultScenario = "intermittent:3".parse().unwrap();
        assert_eq!(
            default_p,
            FaultScenario::Intermittent {
                joint: 3,
                p_functional: 0.5
            }
        );
        for bad in [
            "",
            "broken",
            "broken:x",
            "broken:9",
            "intermittent:1:1.5",
            "limp:2",
            "none:1",
        ] {
            assert!(bad.parse::<FaultScenario>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sampler_covers_training_kinds_only() {
        let sampler = ScenarioSampler::default();
        let mut r = rng();
        let mut seen = [0usize; 3];
        for _ in 0..3000 {
            match sampler.sample(&mut r) {
                FaultScenario::NoFault => seen[0] += 1,
                FaultScenario::PermanentBroken { joint } => {
                    assert!(joint < 7);
                    seen[1] += 1
                }
                FaultScenario::Intermittent {
                    joint,
                    p_functional,
                } => {
                    assert!(joint < 7);
                    assert_eq!(p_functional, 0.5);
                    seen[2] += 1
                }
                other => panic!("held-out scenario sampled: {other:?}"),
            }
        }
        assert!(seen.iter().all(|&n| n > 900), "{seen:?}");
    }
}
