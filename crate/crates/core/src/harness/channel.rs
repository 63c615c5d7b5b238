//! Simulated worker-to-server link with a hard per-message bit budget.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantizers::QuantizedPayload;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub iteration: usize,
    /// Serialized size including the header; zero for messages that are
    /// only accounted, not serialized.
    pub bytes: usize,
    /// Bits charged against the budget.
    pub bits: u64,
}

/// Every message is charged before delivery; a message over budget is
/// rejected with [`Error::BudgetExceeded`] and never delivered.
#[derive(Debug, Clone)]
pub struct BitChannel {
    budget: u64,
    ledger: Vec<LedgerEntry>,
}

impl BitChannel {
    pub fn new(budget_per_iteration: u64) -> Self {
        BitChannel { budget: budget_per_iteration, ledger: Vec::new() }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Charge and serialize a payload; the returned bytes are what the
    /// server receives.
    pub fn send(&mut self, iteration: usize, payload: &QuantizedPayload) -> Result<Vec<u8>> {
        let bits = payload.total_bits();
        self.check(iteration, bits)?;
        let bytes = payload.to_bytes()?;
        self.ledger.push(LedgerEntry { iteration, bytes: bytes.len(), bits });
        Ok(bytes)
    }

    /// Charge a message that is accounted but not serialized.
    pub fn charge(&mut self, iteration: usize, bits: u64) -> Result<()> {
        self.check(iteration, bits)?;
        self.ledger.push(LedgerEntry { iteration, bytes: 0, bits });
        Ok(())
    }

    fn check(&self, iteration: usize, bits: u64) -> Result<()> {
        if bits > self.budget {
            return Err(Error::BudgetExceeded { iteration, bits, budget: self.budget });
        }
        Ok(())
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn total_bits(&self) -> u64 {
        self.ledger.iter().map(|e| e.bits).sum()
    }

    pub fn max_bits(&self) -> u64 {
        self.ledger.iter().map(|e| e.bits).max().unwrap_or(0)
    }

    /// Human-readable ledger, one line per message.
    pub fn dump(&self) -> String {
        let mut out = format!("budget {} bits/iteration\n", self.budget);
        for e in &self.ledger {
            out.push_str(&format!("iter {:>6}  {:>8} bits  {:>6} bytes\n", e.iteration, e.bits, e.bytes));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingMode;
    use crate::frames::{Frame, FrameKind};
    use crate::quantizers::dsc_encode;

    #[test]
    fn charges_and_rejects() {
        let mut ch = BitChannel::new(10);
        ch.charge(0, 10).unwrap();
        let err = ch.charge(1, 11).unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { iteration: 1, bits: 11, budget: 10 });
        assert_eq!(ch.ledger().len(), 1);
        assert_eq!(ch.total_bits(), 10);
        assert!(ch.dump().contains("iter      0"));
    }

    #[test]
    fn send_counts_body_and_gain() {
        let f = Frame::build(FrameKind::RandomizedHadamard, 16, 16, 1).unwrap();
        let p = dsc_encode(&f, &[1.0; 16], 3.0, EmbeddingMode::NearDemocratic).unwrap();
        let mut ch = BitChannel::new(16 * 3 + 32);
        let bytes = ch.send(0, &p).unwrap();
        assert_eq!(ch.ledger()[0].bits, 80);
        assert_eq!(ch.ledger()[0].bytes, bytes.len());
        let mut tight = BitChannel::new(79);
        assert!(matches!(tight.send(0, &p), Err(Error::BudgetExceeded { .. })));
    }
}
