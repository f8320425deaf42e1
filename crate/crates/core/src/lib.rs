//! Risk engine for a central counterparty's default waterfall.
//!
//! * [`prob`]: discrete laws, VaR / AVaR / entropic risk and the extreme
//!   density of AVaR's robust representation.
//! * [`migration`]: rating chains, matrix-root calibration and joint chains
//!   with prescribed marginals.
//! * [`cds`]: constant-intensity CDS marks and margin-period exposure laws.
//! * [`waterfall`]: margins, default fund sizing and allocation, effective
//!   loss and unfunded calls.
//! * [`simulation`]: the Monte Carlo studies built on top.

pub mod cds;
pub mod migration;
pub mod prob;
pub mod rng;
pub mod simulation;
pub mod waterfall;
