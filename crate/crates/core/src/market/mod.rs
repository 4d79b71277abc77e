//! Spectrum market: the allocation ledger and the provider price process.

mod ledger;
mod pricing;

pub use ledger::{
    Action, Ledger, LedgerState, LogEntry, OfferRecord, Outcome, Rejection, Tokens, TxPayload,
};
pub use pricing::{next_price, PriceRange};
