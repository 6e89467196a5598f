//! Symbolic Faddeev-Jackiw constraint analysis for finite-dimensional
//! mechanical systems written in first-order form L = a_i(xi) xidot_i - V(xi).
//!
//! The pipeline: build the symplectic two-form from the canonical one-form,
//! find its zero modes, contract them with the potential gradient to obtain
//! constraints, extend the phase space with multipliers, and iterate until
//! the two-form is invertible or a residual gauge symmetry is identified.
//! The inverse two-form yields the generalized brackets and equations of
//! motion, which can be integrated numerically for verification.

pub mod dynamics;
pub mod expr;
pub mod fj_core;
pub mod linalg;
pub mod parser;
pub mod report;
