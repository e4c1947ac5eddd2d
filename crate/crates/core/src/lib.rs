//! Downlink PPP coverage with MRT beamforming, and a planner for trading
//! spectrum against base-station density and antennas at a fixed user rate.

pub mod coverage;
pub mod hypergeom;
pub mod montecarlo;
pub mod quadrature;
pub mod trs;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/coverage.md")]
    mod coverage {}
    #[doc = include_str!("../../../book/src/substitution.md")]
    mod substitution {}
    #[doc = include_str!("../../../book/src/upgrades.md")]
    mod upgrades {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
}
