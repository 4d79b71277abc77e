use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Token amount with two fractional digits, stored as an integer count of
/// hundredths so balances never drift.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tokens(i64);

impl Tokens {
    pub const ZERO: Tokens = Tokens(0);

    pub fn from_cents(cents: i64) -> Self {
        Tokens(cents)
    }

    pub fn cents(self) -> i64 {
        self.0
    }

    /// Converts a decimal amount, rejecting values with more than two
    /// fractional digits or outside the representable range.
    pub fn from_decimal(value: f64) -> Result<Self> {
        let scaled = value * 100.0;
        let rounded = scaled.round();
        if !scaled.is_finite()
            || rounded.abs() > 9.0e15
            || (scaled - rounded).abs() > 1e-6 * rounded.abs().max(1.0)
        {
            return Err(Error::InvalidInput(format!(
                "{value} is not a token amount with at most two decimals"
            )));
        }
        Ok(Tokens(rounded as i64))
    }

    pub fn to_decimal(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn checked_add(self, other: Tokens) -> Option<Tokens> {
        self.0.checked_add(other.0).map(Tokens)
    }

    pub fn checked_sub(self, other: Tokens) -> Option<Tokens> {
        self.0.checked_sub(other.0).map(Tokens)
    }
}

impl Add for Tokens {
    type Output = Tokens;
    fn add(self, rhs: Tokens) -> Tokens {
        Tokens(self.0 + rhs.0)
    }
}

impl Sub for Tokens {
    type Output = Tokens;
    fn sub(self, rhs: Tokens) -> Tokens {
        Tokens(self.0 - rhs.0)
    }
}

impl std::iter::Sum for Tokens {
    fn sum<I: Iterator<Item = Tokens>>(iter: I) -> Tokens {
        iter.fold(Tokens::ZERO, Add::add)
    }
}

impl fmt::Display for Tokens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        write!(
            f,
            "{sign}{}.{:02}",
            self.0.unsigned_abs() / 100,
            self.0.unsigned_abs() % 100
        )
    }
}

impl Serialize for Tokens {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 % 100 == 0 {
            s.serialize_i64(self.0 / 100)
        } else {
            s.serialize_f64(self.to_decimal())
        }
    }
}

impl<'de> Deserialize<'de> for Tokens {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Tokens::from_decimal(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Allocate,
    Offer,
    Deposit,
    Withdraw,
}

/// One transaction. Fields an action does not use may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxPayload {
    /// Target account: the offering provider, or the account credited or
    /// debited by a deposit or withdrawal.
    pub provider: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from_frequency: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to_frequency: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<Tokens>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_allocations: Option<u32>,
    pub signer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<Tokens>,
}

impl TxPayload {
    fn bare(action: Action, provider: &str, signer: &str) -> Self {
        Self {
            provider: provider.to_owned(),
            action,
            from_frequency: None,
            to_frequency: None,
            bandwidth: None,
            epoch: None,
            price: None,
            max_allocations: None,
            signer: signer.to_owned(),
            amount: None,
        }
    }

    /// An offer signed by the provider itself.
    pub fn offer(provider: &str, price: Tokens, max_allocations: u32) -> Self {
        Self {
            price: Some(price),
            max_allocations: Some(max_allocations),
            ..Self::bare(Action::Offer, provider, provider)
        }
    }

    pub fn with_band(mut self, from_khz: u64, to_khz: u64, bandwidth_khz: u64) -> Self {
        self.from_frequency = Some(from_khz);
        self.to_frequency = Some(to_khz);
        self.bandwidth = Some(bandwidth_khz);
        self
    }

    pub fn allocate(provider: &str, signer: &str, epoch: u64, price: Tokens) -> Self {
        Self {
            epoch: Some(epoch),
            price: Some(price),
            ..Self::bare(Action::Allocate, provider, signer)
        }
    }

    pub fn deposit(account: &str, exchange: &str, amount: Tokens) -> Self {
        Self {
            amount: Some(amount),
            ..Self::bare(Action::Deposit, account, exchange)
        }
    }

    pub fn withdraw(account: &str, exchange: &str, amount: Tokens) -> Self {
        Self {
            amount: Some(amount),
            ..Self::bare(Action::Withdraw, account, exchange)
        }
    }

    fn check_well_formed(&self) -> Result<()> {
        let bad = |msg: &str| {
            Err(Error::InvalidInput(format!(
                "malformed {:?} payload: {msg}",
                self.action
            )))
        };
        if self.provider.is_empty() || self.signer.is_empty() {
            return bad("provider and signer must be non-empty");
        }
        if let (Some(from), Some(to)) = (self.from_frequency, self.to_frequency) {
            if from > to {
                return bad("from_frequency exceeds to_frequency");
            }
        }
        match self.action {
            Action::Offer => match (self.price, self.max_allocations) {
                (Some(p), Some(m)) if p > Tokens::ZERO && m > 0 => Ok(()),
                _ => bad("offer needs a positive price and max_allocations"),
            },
            Action::Allocate => match (self.price, self.epoch) {
                (Some(p), Some(_)) if p > Tokens::ZERO => Ok(()),
                _ => bad("allocate needs an epoch and a positive price"),
            },
            Action::Deposit | Action::Withdraw => match self.amount {
                Some(a) if a > Tokens::ZERO => Ok(()),
                _ => bad("amount must be positive"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    NoMatchingOffer,
    WrongEpoch,
    WrongPrice,
    SoldOut,
    InsufficientFunds,
    UntrustedExchange,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rejection::NoMatchingOffer => "no-matching-offer",
            Rejection::WrongEpoch => "wrong-epoch",
            Rejection::WrongPrice => "wrong-price",
            Rejection::SoldOut => "sold-out",
            Rejection::InsufficientFunds => "insufficient-funds",
            Rejection::UntrustedExchange => "untrusted-exchange",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Rejected(Rejection),
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
struct Offer {
    from_frequency: u64,
    to_frequency: u64,
    bandwidth: u64,
    epoch: u64,
    price: Tokens,
    allocations_left: u32,
}

/// A provider's offer as published on the ledger, together with its balance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfferRecord {
    pub provider: String,
    pub from_frequency: u64,
    pub to_frequency: u64,
    pub bandwidth: u64,
    pub epoch: u64,
    pub price: Tokens,
    pub allocations_left: u32,
    pub account_balance: Tokens,
}

/// Offers and balances. Ordered maps keep iteration and serialization
/// deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LedgerState {
    offers: BTreeMap<String, Offer>,
    balances: BTreeMap<String, Tokens>,
}

impl LedgerState {
    pub fn balance(&self, account: &str) -> Tokens {
        self.balances.get(account).copied().unwrap_or_default()
    }

    pub fn balances(&self) -> &BTreeMap<String, Tokens> {
        &self.balances
    }

    pub fn total_balance(&self) -> Tokens {
        self.balances.values().copied().sum()
    }

    pub fn record(&self, provider: &str) -> Option<OfferRecord> {
        self.offers.get(provider).map(|o| OfferRecord {
            provider: provider.to_owned(),
            from_frequency: o.from_frequency,
            to_frequency: o.to_frequency,
            bandwidth: o.bandwidth,
            epoch: o.epoch,
            price: o.price,
            allocations_left: o.allocations_left,
            account_balance: self.balance(provider),
        })
    }

    pub fn records(&self) -> Vec<OfferRecord> {
        self.offers.keys().filter_map(|p| self.record(p)).collect()
    }

    /// Applies a well-formed payload, returning the new state or the reason
    /// it was refused. `self` is never modified.
    fn apply(
        &self,
        tx: &TxPayload,
        trusted: &BTreeSet<String>,
    ) -> std::result::Result<LedgerState, Rejection> {
        let mut next = self.clone();
        match tx.action {
            Action::Offer => {
                let epoch = self.offers.get(&tx.provider).map_or(0, |o| o.epoch + 1);
                next.offers.insert(
                    tx.provider.clone(),
                    Offer {
                        from_frequency: tx.from_frequency.unwrap_or(0),
                        to_frequency: tx.to_frequency.unwrap_or(0),
                        bandwidth: tx.bandwidth.unwrap_or(0),
                        epoch,
                        price: tx.price.unwrap_or_default(),
                        allocations_left: tx.max_allocations.unwrap_or(0),
                    },
                );
            }
            Action::Allocate => {
                let offer = self
                    .offers
                    .get(&tx.provider)
                    .ok_or(Rejection::NoMatchingOffer)?;
                let price = tx.price.unwrap_or_default();
                if tx.epoch != Some(offer.epoch) {
                    return Err(Rejection::WrongEpoch);
                }
                if price != offer.price {
                    return Err(Rejection::WrongPrice);
                }
                if offer.allocations_left == 0 {
                    return Err(Rejection::SoldOut);
                }
                let payer = self.balance(&tx.signer);
                if payer < price {
                    return Err(Rejection::InsufficientFunds);
                }
                if tx.signer != tx.provider {
                    next.balances.insert(tx.signer.clone(), payer - price);
                    let payee = self.balance(&tx.provider);
                    next.balances.insert(
                        tx.provider.clone(),
                        payee
                            .checked_add(price)
                            .ok_or(Rejection::InsufficientFunds)?,
                    );
                }
                if let Some(o) = next.offers.get_mut(&tx.provider) {
                    o.allocations_left -= 1;
                }
            }
            Action::Deposit => {
                if !trusted.contains(&tx.signer) {
                    return Err(Rejection::UntrustedExchange);
                }
                let amount = tx.amount.unwrap_or_default();
                let credited = self
                    .balance(&tx.provider)
                    .checked_add(amount)
                    .ok_or(Rejection::InsufficientFunds)?;
                next.balances.insert(tx.provider.clone(), credited);
            }
            Action::Withdraw => {
                if !trusted.contains(&tx.signer) {
                    return Err(Rejection::UntrustedExchange);
                }
                let amount = tx.amount.unwrap_or_default();
                let balance = self.balance(&tx.provider);
                if balance < amount {
                    return Err(Rejection::InsufficientFunds);
                }
                next.balances.insert(tx.provider.clone(), balance - amount);
            }
        }
        Ok(next)
    }
}

/// One line of the append-only transaction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub payload: TxPayload,
    pub outcome: Outcome,
    /// The target provider's record after the transaction, if it has an offer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<OfferRecord>,
}

/// The market ledger. Transactions are applied strictly one at a time; every
/// well-formed payload, accepted or not, is appended to the log.
#[derive(Debug, Clone, Default)]
pub struct Ledger {
    state: LedgerState,
    trusted: BTreeSet<String>,
    log: Vec<LogEntry>,
}

impl Ledger {
    pub fn new<I, S>(trusted_exchanges: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            state: LedgerState::default(),
            trusted: trusted_exchanges.into_iter().map(Into::into).collect(),
            log: Vec::new(),
        }
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn trusted(&self) -> impl Iterator<Item = &str> {
        self.trusted.iter().map(String::as_str)
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn balance(&self, account: &str) -> Tokens {
        self.state.balance(account)
    }

    pub fn record(&self, provider: &str) -> Option<OfferRecord> {
        self.state.record(provider)
    }

    /// Applies one transaction. Malformed payloads are an error and are not
    /// logged; rejected ones leave the state untouched.
    pub fn execute(&mut self, tx: TxPayload) -> Result<Outcome> {
        tx.check_well_formed()?;
        let outcome = match self.state.apply(&tx, &self.trusted) {
            Ok(next) => {
                self.state = next;
                Outcome::Accepted
            }
            Err(reason) => Outcome::Rejected(reason),
        };
        log::trace!(
            "ledger tx {} {:?} -> {:?}",
            self.log.len(),
            tx.action,
            outcome
        );
        self.log.push(LogEntry {
            seq: self.log.len() as u64,
            record: self.state.record(&tx.provider),
            payload: tx,
            outcome,
        });
        Ok(outcome)
    }

    /// Rebuilds a ledger from genesis by re-executing every logged payload,
    /// failing if any outcome differs from the one recorded.
    pub fn replay<I, S>(trusted_exchanges: I, entries: &[LogEntry]) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut ledger = Ledger::new(trusted_exchanges);
        for entry in entries {
            let outcome = ledger.execute(entry.payload.clone())?;
            if outcome != entry.outcome {
                return Err(Error::InvalidInput(format!(
                    "replay diverged at seq {}: logged {:?}, got {:?}",
                    entry.seq, entry.outcome, outcome
                )));
            }
        }
        Ok(ledger)
    }

    /// Writes the log as line-delimited JSON.
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.log {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_log<R: BufRead>(input: R) -> Result<Vec<LogEntry>> {
        let mut entries = Vec::new();
        for line in input.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                entries.push(serde_json::from_str(&line)?);
            }
        }
        Ok(entries)
    }
}
