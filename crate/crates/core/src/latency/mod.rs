//! Shifted-exponential straggler model: sampling, closed-form and numeric
//! expected finish times, Monte Carlo, and choice of the recovery threshold.

mod model;
mod montecarlo;
mod quadrature;

pub use model::{
    expected_kth_order, expected_time_mds, expected_time_repetition, expected_time_short_dot,
    expected_time_uncoded, harmonic, mds_time, optimize_k, repetition_closed_form, repetition_time,
    short_dot_time, theorem4_regime, uncoded_closed_form, uncoded_time, DelayModel, Theorem4Row,
};
pub use montecarlo::{analytic_expected, monte_carlo, monte_carlo_with, SimulationReport};
pub use quadrature::{expected_time_numeric, CdfDescription, GroupFactor, QUADRATURE_TOLERANCE};
