//! Per-period top-ups applied by the card before the balance check.

use crate::oram::HouseholdRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeriodPolicy {
    /// Adds the allowance, saturating at `u16::MAX`.
    AddAllowance(u16),
    /// Sets the balance to the allowance.
    ResetTo(u16),
}

impl PeriodPolicy {
    pub(crate) fn encode(policy: Option<PeriodPolicy>) -> [u8; 3] {
        let (tag, v) = match policy {
            None => (0, 0),
            Some(PeriodPolicy::AddAllowance(v)) => (1, v),
            Some(PeriodPolicy::ResetTo(v)) => (2, v),
        };
        let v = v.to_be_bytes();
        [tag, v[0], v[1]]
    }

    pub(crate) fn decode(bytes: [u8; 3]) -> Result<Option<PeriodPolicy>, ()> {
        let v = u16::from_be_bytes([bytes[1], bytes[2]]);
        match bytes[0] {
            0 => Ok(None),
            1 => Ok(Some(PeriodPolicy::AddAllowance(v))),
            2 => Ok(Some(PeriodPolicy::ResetTo(v))),
            _ => Err(()),
        }
    }
}

/// Applies `policy` once per new period. Records already at or past
/// `current_period` are returned unchanged.
pub fn apply_period_update(rec: HouseholdRecord, current_period: u16, policy: PeriodPolicy) -> HouseholdRecord {
    if current_period <= rec.last_period {
        return rec;
    }
    let balance = match policy {
        PeriodPolicy::AddAllowance(a) => rec.balance.saturating_add(a),
        PeriodPolicy::ResetTo(a) => a,
    };
    HouseholdRecord { balance, ctr: rec.ctr, last_period: current_period }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(balance: u16, ctr: u16, last_period: u16) -> HouseholdRecord {
        HouseholdRecord { balance, ctr, last_period }
    }

    #[test]
    fn reset_fills_up() {
        assert_eq!(apply_period_update(rec(10, 4, 2), 3, PeriodPolicy::ResetTo(500)), rec(500, 4, 3));
    }

    #[test]
    fn same_or_older_period_is_unchanged() {
        assert_eq!(apply_period_update(rec(10, 4, 3), 3, PeriodPolicy::ResetTo(500)), rec(10, 4, 3));
        assert_eq!(apply_period_update(rec(10, 4, 3), 1, PeriodPolicy::AddAllowance(5)), rec(10, 4, 3));
    }

    #[test]
    fn add_allowance_saturates() {
        assert_eq!(apply_period_update(rec(65_500, 0, 0), 1, PeriodPolicy::AddAllowance(200)), rec(65_535, 0, 1));
        assert_eq!(apply_period_update(rec(100, 0, 0), 5, PeriodPolicy::AddAllowance(200)), rec(300, 0, 5));
    }

    #[test]
    fn policy_encoding() {
        for p in [None, Some(PeriodPolicy::AddAllowance(7)), Some(PeriodPolicy::ResetTo(65_535))] {
            assert_eq!(PeriodPolicy::decode(PeriodPolicy::encode(p)), Ok(p));
        }
        assert!(PeriodPolicy::decode([9, 0, 0]).is_err());
    }
}
