//! Numerical spin factors.
//!
//! A spin factor is `C^n` with the coordinatewise conjugation `j`, renormed by
//! `|x|^2 = <x,x> + sqrt(<x,x>^2 - |<x,jx>|^2)` and carrying the triple
//! product `{a,b,c} = <a,b>c + <c,b>a - <a,jc>jb`. This crate implements the
//! triple-product algebra, Bergman operators and quasi-inverses, the Möbius
//! transvections of the open unit ball, constructions of boundary fixed
//! points of ball automorphisms, and orbit diagnostics for fixed-point-free
//! self-maps.
//!
//! All spaces are finite dimensional, so weak and norm convergence coincide:
//! limits of fixed-point schedules are computed as ordinary norm limits.

pub mod automorphism;
pub mod dynamics;
pub mod error;
pub mod fixed_point;
pub mod sampling;
pub mod spin;
pub mod tripotent;

pub use automorphism::{Automorphism, AutomorphismRecord, TripleIsometry, Transvection};
pub use dynamics::{BidiscFrame, DynamicsOutcome, HolomorphicMap};
pub use error::{Result, SpinError};
pub use fixed_point::{Schedule, SliverData, WeakFixedPointReport};
pub use spin::{LinearOperator, QuadraticRep, SpinElement, SpinSpace};
pub use tripotent::{SpectralFrame, TripotentClass, TripotentRank};
