//! Periods, propagators and extended integrals near and at the caustic.

pub mod extended;
pub mod ode;
pub mod propagator;
pub mod quad;
pub mod sheets;
pub mod vanishing;
pub mod verify;

pub use extended::{Contour, ExtendedIntegral, ExtendedOptions};
pub use ode::{continue_period, ode_period};
pub use propagator::{propagator_bergman, propagator_cross};
pub use sheets::{roots_at, track_roots, SheetPeriods};
pub use vanishing::VanishingCycles;
pub use verify::{
    caustic_sweep, caustic_table, check_propagator, richardson, compare_extended, CausticOptions, PropagatorCheck,
    SweepReport, ExtendedComparison, ExtendedComparisonRow,
};
