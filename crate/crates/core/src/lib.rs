//! Solver and simulator for two-player zero-sum simultaneous-move games
//! with automaton-described payoffs.
//!
//! Both players pick a move each round at the same time; the payoff is a
//! function of the resulting (possibly infinite) joint-move sequence,
//! encoded by a finite automaton whose state labels carry position
//! values, acceptance, and stops. One-round and finite games are solved
//! exactly ([`finite`]); open, union and recurrence objectives get
//! certified per-depth value brackets ([`limit`]); strategy pairs are
//! evaluated exactly or by seeded rollouts ([`sim`]); games and
//! strategies round-trip through canonical text formats ([`format`]).

pub mod catalog;
pub mod cli;
pub mod finite;
pub mod format;
pub mod game;
pub mod limit;
pub mod matrix;
pub mod rational;
pub mod sim;

pub use game::{
    BehavioralStrategy, GameKind, GameSpec, MoveAlphabets, PayoffAutomaton, Player, Position,
    ValueBracket,
};
pub use rational::Q;
