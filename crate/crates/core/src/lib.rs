//! A protocol laboratory for ECC-based SIP authentication schemes.
//!
//! Three three-message authenticated key exchanges share one toolkit:
//! prime-field curve arithmetic built for auditability ([`ecc`]), canonical
//! hashing and encodings ([`prims`]), and the scheme state machines
//! themselves ([`schemes`]). Around them sit the pieces that make the lab
//! useful: a deterministic session harness with an adversarial channel and a
//! real TCP transport ([`net`]), ephemeral-leakage attacks that work from
//! recorded transcripts ([`adversary`]), an operation-counting cost model
//! ([`bench`]), configuration ([`config`]), and a self-check suite
//! ([`selftest`]).
//!
//! Two curve profiles ship built in. `TOY-17` is a 19-element group, small
//! enough that every claim about it is checked by enumeration; it exists so
//! tests and attacks can brute-force what would otherwise be an assumption.
//! `STD-256` is NIST P-256 for realistic runs. Nothing here is hardened
//! against side channels; the point is observable, instrumented protocol
//! behavior, not production cryptography.

pub mod adversary;
pub mod bench;
pub mod config;
pub mod ecc;
pub mod net;
pub mod prims;
pub mod schemes;
pub mod selftest;
