//! Vanishing schedules of chain bounds.

use num::{BigInt, BigRational, One, Signed};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule values must be positive and strictly decreasing")]
    NotDecreasing,
    #[error("schedule has {have} entries but depth {need} is requested")]
    TooShort { have: usize, need: usize },
    #[error("bad schedule spec '{0}' (expected recip, dyadic, or list:e1,e2,...)")]
    BadSpec(String),
}

#[derive(Clone, Debug)]
enum SchedKind {
    Reciprocal,
    Dyadic,
    List(Vec<BigRational>),
}

/// A strictly decreasing positive schedule `n -> eps_n`, with a halving
/// operator for child constructions.
#[derive(Clone, Debug)]
pub struct EpsSchedule {
    kind: SchedKind,
    halvings: u32,
}

impl EpsSchedule {
    pub fn reciprocal() -> Self {
        EpsSchedule {
            kind: SchedKind::Reciprocal,
            halvings: 0,
        }
    }

    pub fn dyadic() -> Self {
        EpsSchedule {
            kind: SchedKind::Dyadic,
            halvings: 0,
        }
    }

    pub fn from_list(list: Vec<BigRational>) -> Result<Self, ScheduleError> {
        if list.is_empty() {
            return Err(ScheduleError::NotDecreasing);
        }
        for (i, e) in list.iter().enumerate() {
            if !e.is_positive() {
                return Err(ScheduleError::NotDecreasing);
            }
            if i > 0 && list[i - 1] <= *e {
                return Err(ScheduleError::NotDecreasing);
            }
        }
        Ok(EpsSchedule {
            kind: SchedKind::List(list),
            halvings: 0,
        })
    }

    pub fn parse(spec: &str) -> Result<Self, ScheduleError> {
        match spec {
            "recip" => Ok(Self::reciprocal()),
            "dyadic" => Ok(Self::dyadic()),
            other => {
                if let Some(rest) = other.strip_prefix("list:") {
                    let list = rest
                        .split(',')
                        .map(|s| {
                            crate::systems::rat_from_str(s)
                                .map_err(|_| ScheduleError::BadSpec(other.to_string()))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Self::from_list(list)
                } else {
                    Err(ScheduleError::BadSpec(other.to_string()))
                }
            }
        }
    }

    /// `eps_n` for 1-based `n`, after any halvings.
    pub fn eps(&self, n: usize) -> BigRational {
        assert!(n >= 1, "schedules are 1-based");
        let base = match &self.kind {
            SchedKind::Reciprocal => BigRational::new(BigInt::one(), BigInt::from(n)),
            SchedKind::Dyadic => BigRational::new(BigInt::one(), BigInt::one() << n),
            SchedKind::List(list) => list[n - 1].clone(),
        };
        base / BigRational::from_integer(BigInt::one() << self.halvings)
    }

    /// The child schedule `n -> eps_n / 2`.
    pub fn halved(&self) -> Self {
        EpsSchedule {
            kind: self.kind.clone(),
            halvings: self.halvings + 1,
        }
    }

    pub fn check_depth(&self, depth: usize) -> Result<(), ScheduleError> {
        if let SchedKind::List(list) = &self.kind {
            if list.len() < depth {
                return Err(ScheduleError::TooShort {
                    have: list.len(),
                    need: depth,
                });
            }
        }
        Ok(())
    }
}
