//! Waveplate placement along the fiber.
//!
//! Both sequences repeat a cycle of length `4τ`:
//!
//! * CPMG: `f_τ X f_2τ X f_τ`, so with `N` plates `τ = L/(2N)` and plate `k`
//!   (1-based) sits at `(2k - 1)·τ`.
//! * XY-4: `f_τ X f_τ Y f_τ X f_τ Y`, so `τ = L/N`, plate `k` sits at `k·τ`
//!   and the last one lands on the fiber end.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::polarization::RotationAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SequenceKind {
    FreeEvolution,
    #[serde(rename = "CPMG")]
    Cpmg,
    #[serde(rename = "XY4")]
    Xy4,
}

impl SequenceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SequenceKind::FreeEvolution => "FreeEvolution",
            SequenceKind::Cpmg => "CPMG",
            SequenceKind::Xy4 => "XY4",
        }
    }

    /// Checks the waveplate-count rule for this sequence.
    pub fn check_count(&self, n: usize) -> Result<()> {
        let ok = match self {
            SequenceKind::FreeEvolution => n == 0,
            SequenceKind::Cpmg => n >= 2 && n.is_multiple_of(2),
            SequenceKind::Xy4 => n >= 4 && n.is_multiple_of(4),
        };
        if ok {
            return Ok(());
        }
        let rule = match self {
            SequenceKind::FreeEvolution => "FreeEvolution requires 0 waveplates",
            SequenceKind::Cpmg => "CPMG requires an even waveplate count >= 2",
            SequenceKind::Xy4 => "XY4 requires a waveplate count divisible by 4 (and >= 4)",
        };
        Err(Error::invalid(format!("{rule}, got {n}")))
    }

    /// Plates per `4τ` cycle.
    pub fn plates_per_cycle(&self) -> usize {
        match self {
            SequenceKind::FreeEvolution => 0,
            SequenceKind::Cpmg => 2,
            SequenceKind::Xy4 => 4,
        }
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" | "freeevolution" | "free_evolution" | "none" => Ok(SequenceKind::FreeEvolution),
            "cpmg" => Ok(SequenceKind::Cpmg),
            "xy4" | "xy-4" => Ok(SequenceKind::Xy4),
            _ => Err(Error::invalid(format!("unknown sequence `{s}`"))),
        }
    }
}

impl std::fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub position: f64,
    pub axis: RotationAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: SequenceKind,
    pub entries: Vec<ScheduleEntry>,
    pub fiber_length: f64,
    /// Spacing unit; a cycle spans `4τ`. Zero for free evolution.
    pub tau: f64,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Free-propagation gap lengths, including the one after the last plate.
    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        let mut gaps: Vec<f64> = self
            .entries
            .iter()
            .map(|e| {
                let g = e.position - prev;
                prev = e.position;
                g
            })
            .collect();
        gaps.push(self.fiber_length - prev);
        gaps
    }

    /// Writes `index,position_m,axis`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,position_m,axis")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(w, "{i},{},{}", crate::output::real(e.position), e.axis)?;
        }
        Ok(())
    }
}

pub fn build_schedule(
    kind: SequenceKind,
    fiber_length: f64,
    num_waveplates: usize,
) -> Result<Schedule> {
    if !(fiber_length.is_finite() && fiber_length > 0.0) {
        return Err(Error::invalid(format!(
            "fiber_length must be > 0, got {fiber_length}"
        )));
    }
    kind.check_count(num_waveplates)?;
    let n = num_waveplates as f64;
    let (entries, tau) = match kind {
        SequenceKind::FreeEvolution => (Vec::new(), 0.0),
        SequenceKind::Cpmg => {
            let entries = (1..=num_waveplates)
                .map(|k| ScheduleEntry {
                    position: (2 * k - 1) as f64 * fiber_length / (2.0 * n),
                    axis: RotationAxis::X,
                })
                .collect();
            (entries, fiber_length / (2.0 * n))
        }
        SequenceKind::Xy4 => {
            let entries = (1..=num_waveplates)
                .map(|k| ScheduleEntry {
                    position: if k == num_waveplates {
                        fiber_length
                    } else {
                        k as f64 * fiber_length / n
                    },
                    axis: if k % 2 == 1 {
                        RotationAxis::X
                    } else {
                        RotationAxis::Y
                    },
                })
                .collect();
            (entries, fiber_length / n)
        }
    };
    Ok(Schedule {
        kind,
        entries,
        fiber_length,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use RotationAxis::{X, Y};

    fn positions(s: &Schedule) -> Vec<f64> {
        s.entries.iter().map(|e| e.position).collect()
    }

    fn axes(s: &Schedule) -> Vec<RotationAxis> {
        s.entries.iter().map(|e| e.axis).collect()
    }

    #[test]
    fn single_cpmg_cycle() {
        let s = build_schedule(SequenceKind::Cpmg, 8.0, 2).unwrap();
        assert_eq!(positions(&s), vec![2.0, 6.0]);
        assert_eq!(axes(&s), vec![X, X]);
        assert_eq!(s.tau, 2.0);
    }

    #[test]
    fn single_xy4_cycle() {
        let s = build_schedule(SequenceKind::Xy4, 8.0, 4).unwrap();
        assert_eq!(positions(&s), vec![2.0, 4.0, 6.0, 8.0]);
        assert_eq!(axes(&s), vec![X, Y, X, Y]);
    }

    #[test]
    fn free_evolution_is_empty() {
        let s = build_schedule(SequenceKind::FreeEvolution, 100.0, 0).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.gaps(), vec![100.0]);
    }

    #[test]
    fn parity_violations_are_named() {
        let e = build_schedule(SequenceKind::Cpmg, 10.0, 3)
            .unwrap_err()
            .to_string();
        assert!(e.contains("CPMG"), "{e}");
        assert!(build_schedule(SequenceKind::Cpmg, 10.0, 0).is_err());
        let e = build_schedule(SequenceKind::Xy4, 10.0, 6)
            .unwrap_err()
            .to_string();
        assert!(e.contains("XY4"), "{e}");
        assert!(build_schedule(SequenceKind::FreeEvolution, 10.0, 2).is_err());
        assert!(build_schedule(SequenceKind::Xy4, 0.0, 4).is_err());
        assert!(build_schedule(SequenceKind::Xy4, f64::NAN, 4).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("CPMG".parse::<SequenceKind>().unwrap(), SequenceKind::Cpmg);
        assert_eq!("xy-4".parse::<SequenceKind>().unwrap(), SequenceKind::Xy4);
        assert_eq!(
            "free".parse::<SequenceKind>().unwrap(),
            SequenceKind::FreeEvolution
        );
        assert!("UDD".parse::<SequenceKind>().is_err());
    }

    proptest! {
        #[test]
        fn cpmg_gaps(cycles in 1usize..500, length in 1.0f64..20_000.0) {
            let s = build_schedule(SequenceKind::Cpmg, length, 2 * cycles).unwrap();
            let gaps = s.gaps();
            prop_assert!((gaps[0] - s.tau).abs() < 1e-9);
            prop_assert!((gaps[gaps.len() - 1] - s.tau).abs() < 1e-9);
            for g in &gaps[1..gaps.len() - 1] {
                prop_assert!((g - 2.0 * s.tau).abs() < 1e-9);
            }
            prop_assert!(s.entries.iter().all(|e| e.axis == X));
            prop_assert!(s.entries.windows(2).all(|w| w[0].position < w[1].position));
            prop_assert!(s.entries.iter().all(|e| e.position > 0.0 && e.position <= length));
        }

        #[test]
        fn xy4_gaps(cycles in 1usize..500, length in 1.0f64..20_000.0) {
            let s = build_schedule(SequenceKind::Xy4, length, 4 * cycles).unwrap();
            let gaps = s.gaps();
            for g in &gaps[..gaps.len() - 1] {
                prop_assert!((g - s.tau).abs() < 1e-9);
            }
            prop_assert_eq!(gaps[gaps.len() - 1], 0.0);
            prop_assert_eq!(s.entries.last().unwrap().position, length);
            for (i, e) in s.entries.iter().enumerate() {
                prop_assert_eq!(e.axis, if i % 2 == 0 { X } else { Y });
            }
        }

        #[test]
        fn cycles_repeat(kind in prop_oneof![Just(SequenceKind::Cpmg), Just(SequenceKind::Xy4)], cycles in 1usize..200, length in 1.0f64..20_000.0) {
            let per = kind.plates_per_cycle();
            let s = build_schedule(kind, length, per * cycles).unwrap();
            let cycle_len = length / cycles as f64;
            let first = build_schedule(kind, cycle_len, per).unwrap();
            for (i, e) in s.entries.iter().enumerate() {
                let c = i / per;
                let base = &first.entries[i % per];
                prop_assert!((e.position - c as f64 * cycle_len - base.position).abs() < 1e-9);
                prop_assert_eq!(e.axis, base.axis);
            }
        }
    }
}
