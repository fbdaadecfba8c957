use serde::{Deserialize, Serialize};

use super::Energy;

/// Running totals of every energy flow through one battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub initial: Energy,
    /// Everything offered by the harvester, including the clamped excess.
    pub harvested: Energy,
    /// Harvest thrown away because the battery was full.
    pub discarded: Energy,
    /// Energy actually taken out by loads (events and sleep).
    pub consumed: Energy,
    /// Energy actually lost to self-discharge.
    pub leaked: Energy,
}

impl EnergyLedger {
    /// Stored energy implied by the flows.
    pub fn expected_stored(&self) -> Energy {
        self.initial + self.harvested - self.discarded - self.consumed - self.leaked
    }
}

/// A battery holding `0 <= stored <= capacity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryState {
    capacity: Energy,
    stored: Energy,
    ledger: EnergyLedger,
}

impl BatteryState {
    /// Panics if `stored > capacity`.
    pub fn new(capacity: Energy, stored: Energy) -> Self {
        assert!(stored <= capacity, "stored energy exceeds capacity");
        Self {
            capacity,
            stored,
            ledger: EnergyLedger {
                initial: stored,
                ..Default::default()
            },
        }
    }

    /// A battery at the given state of charge, clamped to [0, 1].
    pub fn with_soc(capacity: Energy, soc: f64) -> Self {
        let soc = if soc.is_nan() { 0.0 } else { soc.clamp(0.0, 1.0) };
        let stored = Energy::from_picojoules((capacity.picojoules() as f64 * soc).round() as u64);
        Self::new(capacity, stored.min(capacity))
    }

    pub fn capacity(&self) -> Energy {
        self.capacity
    }

    pub fn stored(&self) -> Energy {
        self.stored
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn soc(&self) -> f64 {
        if self.capacity.is_zero() {
            0.0
        } else {
            self.stored.picojoules() as f64 / self.capacity.picojoules() as f64
        }
    }

    /// Adds harvested energy, clamping at capacity. Returns the discarded
    /// excess.
    pub fn deposit(&mut self, energy: Energy) -> Energy {
        let room = self.capacity - self.stored;
        let accepted = energy.min(room);
        let discarded = energy - accepted;
        self.stored += accepted;
        self.ledger.harvested += energy;
        self.ledger.discarded += discarded;
        discarded
    }

    /// Takes `energy` for a load. Succeeds only if the battery stays strictly
    /// positive afterwards; otherwise the battery is emptied and the load is
    /// considered to have browned out.
    pub fn withdraw(&mut self, energy: Energy) -> bool {
        if energy < self.stored {
            self.stored = self.stored - energy;
            self.ledger.consumed += energy;
            true
        } else {
            self.ledger.consumed += self.stored;
            self.stored = Energy::ZERO;
            false
        }
    }

    /// Whether a load of `energy` would succeed.
    pub fn can_supply(&self, energy: Energy) -> bool {
        energy < self.stored
    }

    /// Background draw such as sleep current; takes what is there.
    pub fn drain(&mut self, energy: Energy) {
        let taken = energy.min(self.stored);
        self.stored = self.stored - taken;
        self.ledger.consumed += taken;
    }

    /// Self-discharge; takes what is there.
    pub fn leak(&mut self, energy: Energy) {
        let taken = energy.min(self.stored);
        self.stored = self.stored - taken;
        self.ledger.leaked += taken;
    }
}
