//! Game instances and active SU sets.

use std::collections::BTreeSet;

use crate::energy::{channel_gain, defaults, DeviceId, DeviceParams, Position, SystemParams};
use crate::error::{Error, Result};

/// One DU, its candidate SUs and the system constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemParams,
    pub du: DeviceParams,
    /// Candidate SUs, in canonical index order.
    pub sus: Vec<DeviceParams>,
}

impl Scenario {
    pub fn new(system: SystemParams, du: DeviceParams, sus: Vec<DeviceParams>) -> Result<Self> {
        let scenario = Self { system, du, sus };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.du.id != DeviceId::Du {
            return Err(Error::invalid("du", "DU must carry the DU id"));
        }
        self.du.validate(self.system.slot_length)?;
        if self.sus.is_empty() {
            return Err(Error::invalid("su", "at least one SU is required"));
        }
        let mut seen = BTreeSet::new();
        for su in &self.sus {
            if !matches!(su.id, DeviceId::Su(_)) {
                return Err(Error::invalid("su.id", "SU entries must carry SU ids"));
            }
            if !seen.insert(su.id) {
                return Err(Error::invalid("su.id", format!("duplicate id {}", su.id)));
            }
            su.validate(self.system.slot_length)?;
            channel_gain(&self.du.position, &su.position, &self.system)?;
        }
        Ok(())
    }

    /// Every candidate SU.
    pub fn all_sus(&self) -> ActiveSet {
        ActiveSet((0..self.sus.len()).collect())
    }

    /// Canonical index of the SU with the given id.
    pub fn su_index(&self, id: u32) -> Option<usize> {
        self.sus.iter().position(|su| su.id == DeviceId::Su(id))
    }

    /// DU at the origin, SUs at (-20, 20) and (20, 20), `L_0 = 0.6`,
    /// `L_1 = 0.15`, `L_2 = 0`, all other constants at their defaults.
    pub fn two_su_reference() -> Self {
        Self {
            system: SystemParams::default(),
            du: DeviceParams::du(Position::default(), defaults::DU_WORKLOAD),
            sus: vec![
                DeviceParams::su(1, Position::new(-20.0, 20.0), 0.15),
                DeviceParams::su(2, Position::new(20.0, 20.0), 0.0),
            ],
        }
    }

    /// The three-SU layout with SU 3 at (20, -20) carrying `su3_workload`.
    pub fn three_su_reference(su3_workload: f64) -> Self {
        Self {
            system: SystemParams::default(),
            du: DeviceParams::du(Position::default(), defaults::DU_WORKLOAD),
            sus: vec![
                DeviceParams::su(1, Position::new(-20.0, 20.0), 0.15),
                DeviceParams::su(2, Position::new(20.0, 20.0), 0.1),
                DeviceParams::su(3, Position::new(20.0, -20.0), su3_workload),
            ],
        }
    }
}

/// Sorted, duplicate-free indices into [`Scenario::sus`].
///
/// Per-SU vectors elsewhere in the crate (prices, allocations, coefficients)
/// are aligned with the order of this set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        Self(set.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Position of a scenario index within the set.
    pub fn slot_of(&self, index: usize) -> Option<usize> {
        self.0.binary_search(&index).ok()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.slot_of(index).is_some()
    }

    pub fn without(&self, removed: &[usize]) -> Self {
        Self(
            self.0
                .iter()
                .copied()
                .filter(|i| !removed.contains(i))
                .collect(),
        )
    }

    pub(crate) fn check_within(&self, scenario: &Scenario) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        if let Some(&bad) = self.0.iter().find(|&&i| i >= scenario.sus.len()) {
            return Err(Error::invalid(
                "active_set",
                format!("index {bad} out of range for {} SUs", scenario.sus.len()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenarios_validate() {
        Scenario::two_su_reference().validate().unwrap();
        for l3 in [0.0, 0.05, 0.1, 0.15] {
            Scenario::three_su_reference(l3).validate().unwrap();
        }
    }

    #[test]
    fn rejects_empty_and_duplicate_sus() {
        let mut s = Scenario::two_su_reference();
        s.sus.clear();
        assert!(s.validate().is_err());
        let mut s = Scenario::two_su_reference();
        s.sus[1].id = DeviceId::Su(1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_su_on_top_of_du() {
        let mut s = Scenario::two_su_reference();
        s.sus[0].position = Position::default();
        assert!(matches!(
            s.validate(),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn active_set_is_canonical() {
        let set = ActiveSet::new([3, 1, 3, 0]);
        assert_eq!(set.indices(), &[0, 1, 3]);
        assert_eq!(set.slot_of(3), Some(2));
        assert_eq!(set.without(&[1]).indices(), &[0, 3]);
    }
}
