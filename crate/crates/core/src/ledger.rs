//! Stake accounting: liquid balances, locked stake and pending unlocks.
//!
//! Locks count toward block production from the next height on. Unlocks
//! stop counting at once, but the funds only become liquid again
//! `unlock_delay` blocks later.

use std::collections::BTreeMap;

use thiserror::Error;

pub type Amount = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("account `{account}` has {available} liquid, cannot lock {requested}")]
    InsufficientLiquid {
        account: String,
        available: Amount,
        requested: Amount,
    },
    #[error("account `{account}` has {available} locked, cannot unlock {requested}")]
    InsufficientLocked {
        account: String,
        available: Amount,
        requested: Amount,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingUnlock {
    pub amount: Amount,
    pub release_height: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StakeEvent {
    Lock { height: u64, amount: Amount },
    Unlock { height: u64, amount: Amount },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Account {
    pub liquid: Amount,
    pub locked: Amount,
    pub pending: Vec<PendingUnlock>,
    history: Vec<StakeEvent>,
}

impl Account {
    pub fn pending_total(&self) -> Amount {
        self.pending.iter().map(|p| p.amount).sum()
    }

    /// liquid + locked + pending; invariant under lock/unlock/release.
    pub fn holdings(&self) -> Amount {
        self.liquid + self.locked + self.pending_total()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StakeLedger {
    accounts: BTreeMap<String, Account>,
    total_locked: Amount,
    unlock_delay: u64,
}

impl StakeLedger {
    pub fn new(unlock_delay: u64) -> Self {
        StakeLedger {
            unlock_delay,
            ..Default::default()
        }
    }

    pub fn unlock_delay(&self) -> u64 {
        self.unlock_delay
    }

    /// Adds liquid funds (allocation or reward).
    pub fn credit(&mut self, account: &str, amount: Amount) {
        self.accounts.entry(account.to_string()).or_default().liquid += amount;
    }

    pub fn lock(&mut self, account: &str, amount: Amount, height: u64) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let available = self.accounts.get(account).map_or(0, |a| a.liquid);
        if available < amount {
            return Err(LedgerError::InsufficientLiquid {
                account: account.to_string(),
                available,
                requested: amount,
            });
        }
        let acct = self.accounts.get_mut(account).expect("checked above");
        acct.liquid -= amount;
        acct.locked += amount;
        acct.history.push(StakeEvent::Lock { height, amount });
        self.total_locked += amount;
        Ok(())
    }

    pub fn unlock(
        &mut self,
        account: &str,
        amount: Amount,
        height: u64,
    ) -> Result<(), LedgerError> {
        if amount == 0 {
            return Err(LedgerError::ZeroAmount);
        }
        let available = self.accounts.get(account).map_or(0, |a| a.locked);
        if available < amount {
            return Err(LedgerError::InsufficientLocked {
                account: account.to_string(),
                available,
                requested: amount,
            });
        }
        let release_height = height + self.unlock_delay;
        let acct = self.accounts.get_mut(account).expect("checked above");
        acct.locked -= amount;
        acct.pending.push(PendingUnlock {
            amount,
            release_height,
        });
        acct.history.push(StakeEvent::Unlock { height, amount });
        self.total_locked -= amount;
        Ok(())
    }

    /// Moves every pending unlock with `release_height <= height` back to
    /// liquid. Returns the total released.
    pub fn release_pending(&mut self, height: u64) -> Amount {
        let mut released = 0;
        for acct in self.accounts.values_mut() {
            let mut freed = 0;
            acct.pending.retain(|p| {
                if p.release_height <= height {
                    freed += p.amount;
                    false
                } else {
                    true
                }
            });
            acct.liquid += freed;
            released += freed;
        }
        released
    }

    /// Stake that counts toward producing a block at `height`.
    pub fn effective_stake(&self, account: &str, height: u64) -> Amount {
        let Some(acct) = self.accounts.get(account) else {
            return 0;
        };
        let mut net: i128 = 0;
        for ev in &acct.history {
            match *ev {
                StakeEvent::Lock { height: h, amount } if h < height => net += amount as i128,
                StakeEvent::Unlock { height: h, amount } if h <= height => net -= amount as i128,
                _ => {}
            }
        }
        net.max(0) as Amount
    }

    pub fn account(&self, account: &str) -> Option<&Account> {
        self.accounts.get(account)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&str, &Account)> {
        self.accounts.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn liquid(&self, account: &str) -> Amount {
        self.accounts.get(account).map_or(0, |a| a.liquid)
    }

    pub fn locked(&self, account: &str) -> Amount {
        self.accounts.get(account).map_or(0, |a| a.locked)
    }

    pub fn total_locked(&self) -> Amount {
        self.total_locked
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn funded(liquid: Amount) -> StakeLedger {
        let mut l = StakeLedger::new(30);
        l.credit("a", liquid);
        l
    }

    #[test]
    fn lock_moves_liquid_to_locked_effective_next_block() {
        let mut l = funded(100);
        l.lock("a", 60, 5).unwrap();
        assert_eq!(l.liquid("a"), 40);
        assert_eq!(l.locked("a"), 60);
        assert_eq!(l.effective_stake("a", 5), 0);
        assert_eq!(l.effective_stake("a", 6), 60);
    }

    #[test]
    fn lock_rejections_leave_ledger_unchanged() {
        let mut l = funded(100);
        let before = l.clone();
        assert_eq!(l.lock("a", 0, 1), Err(LedgerError::ZeroAmount));
        assert!(matches!(
            l.lock("a", 101, 1),
            Err(LedgerError::InsufficientLiquid { .. })
        ));
        assert_eq!(l, before);
    }

    #[test]
    fn unlock_is_immediate_release_is_delayed() {
        let mut l = funded(60);
        l.lock("a", 60, 0).unwrap();
        l.unlock("a", 60, 10).unwrap();
        assert_eq!(l.locked("a"), 0);
        assert_eq!(
            l.account("a").unwrap().pending,
            vec![PendingUnlock {
                amount: 60,
                release_height: 40
            }]
        );
        assert_eq!(l.release_pending(39), 0);
        assert_eq!(l.liquid("a"), 0);
        assert_eq!(l.release_pending(40), 60);
        assert_eq!(l.liquid("a"), 60);
        assert!(l.account("a").unwrap().pending.is_empty());
    }

    #[test]
    fn unlock_more_than_locked_rejected() {
        let mut l = funded(60);
        l.lock("a", 60, 0).unwrap();
        assert!(matches!(
            l.unlock("a", 61, 1),
            Err(LedgerError::InsufficientLocked { .. })
        ));
        assert_eq!(l.locked("a"), 60);
    }

    #[test]
    fn unknown_account_has_no_stake() {
        assert_eq!(StakeLedger::new(1).effective_stake("nobody", 100), 0);
    }

    #[test]
    fn lock_then_unlock_trace() {
        // lock@5 counts from 6; unlock@8 stops counting at 8.
        let mut l = funded(100);
        l.lock("a", 60, 5).unwrap();
        l.unlock("a", 60, 8).unwrap();
        assert_eq!(l.effective_stake("a", 7), 60);
        assert_eq!(l.effective_stake("a", 8), 0);
    }
}
