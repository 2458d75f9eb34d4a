//! Household aid wallets: smart-card spending against an oblivious balance
//! store, unlinkable purchase proofs, and homomorphic reclaim.
//!
//! The guide under `book/` walks through each module. Its snippets run as
//! doc-tests of this crate.

pub mod crypto;
pub mod harness;
pub mod oram;
pub mod sim;
pub mod stations;
pub mod token;
pub mod wire;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/primitives.md")]
    mod primitives {}
    #[doc = include_str!("../../../book/src/oram.md")]
    mod oram {}
    #[doc = include_str!("../../../book/src/spending.md")]
    mod spending {}
    #[doc = include_str!("../../../book/src/reclaim.md")]
    mod reclaim {}
    #[doc = include_str!("../../../book/src/periods.md")]
    mod periods {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
