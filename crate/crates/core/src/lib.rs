//! Construction and certification of true trajectories shadowing
//! pseudo-trajectories of dynamical semigroups.
//!
//! The library is organized around a small pipeline:
//!
//! * [`space`] — metric spaces (real line, finite discrete) and set-valued
//!   distances;
//! * [`maps`] — concrete endomorphism families used as generators;
//! * [`semigroup`] — generator sets, trajectories, pseudo-trajectories,
//!   gap profiles and perturbation-type classification;
//! * [`rate`] — accuracy rate functions and their transforms;
//! * [`gluing`] — single-join oracles that merge two true trajectory
//!   segments across one perturbation;
//! * [`parallel`] — the round-based engine that glues segment pairs in
//!   parallel, halving the segment count per round, with a full audit
//!   certificate of gap growth and error bounds;
//! * [`verdicts`] — shadowing checkers and exhaustive falsifiers;
//! * [`transfer`] — shadowing transfer under inversion and uniform
//!   conjugation;
//! * [`nonauto`] — non-autonomous (fixed generator branch) systems;
//! * [`io`] — CSV/JSON serialization of trajectories and certificates.
//!
//! Repairing a single perturbation of the doubling map and checking the
//! uniform distance of the repaired trajectory:
//!
//! ```
//! use shadowing::gluing::{GlueMode, GlueStrategy, GluingOracle, SystemBinding};
//! use shadowing::{shadow_construct, ShadowOptions};
//! use shadowing::{check_shadowing, EndomorphismSpec, GeneratorSet, PseudoTrajectory};
//! use shadowing::{RateFunction, Space, SpacePoint, VerdictKind, Window};
//!
//! let gens = GeneratorSet::new(
//!     Space::RealLine,
//!     [("g", EndomorphismSpec::affine(2.0, 0.0))],
//! )?;
//! let oracle = GluingOracle::new(
//!     GlueMode::Strong,
//!     GlueStrategy::ExpandingPickForward,
//!     SystemBinding::Semigroup(gens.clone()),
//! );
//!
//! // orbit of 1 that jumps to the orbit of 1.1 at time zero
//! let window = Window::new(-8, 8)?;
//! let points: Vec<SpacePoint> = window
//!     .times()
//!     .map(|t| {
//!         let scale = if t < 0 { 1.0 } else { 1.1 };
//!         SpacePoint::real(scale * 2f64.powi(t as i32))
//!     })
//!     .collect();
//! let pseudo = PseudoTrajectory::new(window, points, None)?;
//!
//! let phi = RateFunction::geometric(0.5);
//! let (repaired, certificate) =
//!     shadow_construct(&pseudo, &oracle, &phi, &ShadowOptions::default())?;
//! assert_eq!(certificate.original_moments, vec![-1]);
//!
//! let verdict = check_shadowing(
//!     gens.space(),
//!     &repaired,
//!     &pseudo,
//!     VerdictKind::Uniform,
//!     0.2,
//!     &Default::default(),
//! )?;
//! assert!(verdict.pass);
//! # Ok::<(), shadowing::Error>(())
//! ```

pub mod error;
pub mod gluing;
pub mod io;
pub mod maps;
pub mod nonauto;
pub mod parallel;
pub mod rate;
pub mod semigroup;
pub mod space;
pub mod stats;
pub mod transfer;
pub mod verdicts;

pub use error::{Error, Result};
pub use gluing::{GlueMode, GlueOutcome, GlueStrategy, GluingOracle, SystemBinding};
pub use maps::EndomorphismSpec;
pub use nonauto::NonAutoSystem;
pub use parallel::{certify_bounds, shadow_construct, GluingCertificate, ShadowOptions};
pub use rate::RateFunction;
pub use semigroup::{
    classify_pseudo, gap_profile, GapEntry, GapProfile, GeneratorSet, PseudoTrajectory,
    Trajectory, Window,
};
pub use space::{set_distance, Space, SpacePoint, EXACT_TOL};
pub use verdicts::{check_shadowing, falsify_shadowing, ShadowVerdict, VerdictKind};
